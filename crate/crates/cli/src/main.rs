fn main() {
    std::process::exit(rdm_lab::run(std::env::args_os()));
}
