//! Command-line front end of the random displacement model lab.
//!
//! Every run resolves a [`Manifest`] (shipped defaults, then flags, then an
//! optional manifest file) and writes `<command>.csv` or `<command>.json`,
//! `<command>.meta.json` and, for Monte Carlo commands, `<command>.log.jsonl`
//! to the output directory. Result files carry the SHA-256 of the manifest.

pub mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::{json, Value};

pub use manifest::{Format, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ASSERT: i32 = 3;

const ABOUT: &[(&str, &str)] = &[
    ("landscape", "Single-cell ground energy over displacements, with gradient sign checks"),
    ("perturb", "Second-order perturbation identity, monotone reconstruction and coupling derivatives"),
    ("minimizer", "Periodic minimizer: corner/period-cell equality, bracketing and face derivatives"),
    ("enum1d", "Exhaustive 1D periodic corner patterns"),
    ("tube", "Ground-energy gap of a tube with one non-matching pair"),
    ("lifshitz", "Probability that the box ground energy lies below E0 + c1/L^2"),
    ("wegner", "Mean eigenvalue counts in nested energy intervals"),
    ("keybound", "Ground-state expectation of the corner-directed vector field"),
    ("ids", "Integrated density of states of long 1D chains and its tail fit"),
    ("decay", "Exponential decay fits of low eigenvectors"),
    ("constants", "Corner-slope and form-comparison constants"),
];

pub fn cli() -> Command {
    let mut root = Command::new("rdm-lab")
        .about("Numerical experiments for the random displacement model")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for name in manifest::command_names() {
        let defaults = manifest::command_defaults(&name).expect("shipped defaults");
        let about = ABOUT.iter().find(|a| a.0 == name).map(|a| a.1).unwrap_or("");
        let mut sub = Command::new(name.clone()).about(about);
        for &(key, flag, _, help) in manifest::FLAGS {
            let Some(v) = defaults.get(key) else { continue };
            let mut arg = Arg::new(key).long(flag).help(help).action(ArgAction::Set);
            if let Some(text) = manifest::display_default(v) {
                arg = arg.default_value(text);
            }
            sub = sub.arg(arg);
        }
        sub = sub
            .arg(Arg::new("out").long("out").value_name("DIR").default_value(".").help("output directory (RDM_LAB_OUT overrides)"))
            .arg(Arg::new("manifest").long("manifest").value_name("FILE").help("manifest file; its values override flags"))
            .arg(Arg::new("assert").long("assert").action(ArgAction::SetTrue).help("exit 3 when any check fails"))
            .arg(
                Arg::new("threads")
                    .long("threads")
                    .value_name("N")
                    .value_parser(clap::value_parser!(usize))
                    .help("worker threads [default: all cores]"),
            );
        root = root.subcommand(sub);
    }
    root
}

fn resolve(name: &str, sub: &ArgMatches) -> anyhow::Result<Manifest> {
    let mut map = manifest::command_defaults(name)?;
    for &(key, _, kind, _) in manifest::FLAGS {
        if !map.contains_key(key) {
            continue;
        }
        if let Some(raw) = sub.get_one::<String>(key) {
            map.insert(key.into(), manifest::parse_flag(kind, raw)?);
        }
    }
    if let Some(path) = sub.get_one::<String>("manifest") {
        for (k, v) in manifest::read_manifest_file(Path::new(path))? {
            map.insert(k, v);
        }
    }
    let m = manifest::finish(map)?;
    if m.command != name {
        anyhow::bail!("manifest is for `{}`, not `{name}`", m.command);
    }
    Ok(m)
}

fn out_dir(sub: &ArgMatches) -> PathBuf {
    match std::env::var_os("RDM_LAB_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(sub.get_one::<String>("out").map(String::as_str).unwrap_or(".")),
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Writes all result files and returns the paths.
pub fn write_outcome(dir: &Path, m: &Manifest, out: &commands::Outcome) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let hash = m.sha256();
    let mut written = Vec::new();
    if let Some(t) = &out.table {
        match m.format {
            Format::Csv => {
                let mut body = format!("# manifest_sha256={hash}\n{}\n", t.columns.join(","));
                for row in &t.rows {
                    body.push_str(&row.iter().map(cell_text).collect::<Vec<_>>().join(","));
                    body.push('\n');
                }
                written.push(write(dir, &format!("{}.csv", m.command), &body)?);
            }
            Format::Json => {
                let v = json!({ "manifest_sha256": hash, "columns": t.columns, "rows": t.rows });
                written.push(write(dir, &format!("{}.json", m.command), &pretty(&v))?);
            }
        }
    } else {
        let v = json!({ "manifest_sha256": hash, "report": out.report });
        written.push(write(dir, &format!("{}.json", m.command), &pretty(&v))?);
    }
    if let Some(log) = &out.log {
        let mut body = String::new();
        for rec in log {
            body.push_str(&serde_json::to_string(&json!({ "manifest_sha256": hash, "record": rec }))?);
            body.push('\n');
        }
        written.push(write(dir, &format!("{}.log.jsonl", m.command), &body)?);
    }
    let files: Vec<String> = written.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect();
    let meta = json!({
        "manifest": m,
        "manifest_sha256": hash,
        "files": files,
        "report": out.report,
        "checks": out.checks,
    });
    written.push(write(dir, &format!("{}.meta.json", m.command), &pretty(&meta))?);
    Ok(written)
}

fn is_usage_error(e: &anyhow::Error) -> bool {
    match e.downcast_ref::<rdm_core::Error>() {
        Some(core) => matches!(
            core,
            rdm_core::Error::InvalidArgument(_)
                | rdm_core::Error::InvalidBox(_)
                | rdm_core::Error::InvalidSite(_)
                | rdm_core::Error::ResolutionTooSmall { .. }
                | rdm_core::Error::SizeCap { .. }
                | rdm_core::Error::Capacity { .. }
        ),
        None => true,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let m = match resolve(name, sub) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let dir = out_dir(sub);
    let outcome = match sub.get_one::<usize>("threads") {
        Some(&n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| commands::execute(&m)),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
        None => commands::execute(&m),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage_error(&e) {
                return EXIT_USAGE;
            }
            let diag = json!({
                "manifest": m,
                "manifest_sha256": m.sha256(),
                "error": format!("{e:#}"),
                "detail": e.downcast_ref::<rdm_core::Error>().map(|c| format!("{c:?}")),
            });
            let _ = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join(format!("{name}.error.json")), pretty(&diag)));
            return EXIT_NUMERICAL;
        }
    };
    match write_outcome(&dir, &m, &outcome) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    }
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "ok" } else { "FAILED" }, c.name, c.detail);
    }
    if sub.get_flag("assert") && outcome.checks.iter().any(|c| !c.pass) {
        return EXIT_ASSERT;
    }
    EXIT_OK
}
