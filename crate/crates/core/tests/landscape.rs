use rdm_core::discretize::BoundaryCondition;
use rdm_core::landscape::*;
use rdm_core::potential::{make_alt2_site, RadialProfile, Shape, SingleSite};

fn alt2() -> SingleSite {
    make_alt2_site(RadialProfile { height: 0.5, radius: 0.2 }, 0.2).unwrap()
}

#[test]
fn default_site_landscape_2d() {
    let t = scan_landscape(&SingleSite::default_site(), 2, 9, 24).unwrap();
    let r = t.report();
    assert_eq!(t.a_grid[r.argmax], vec![0.0, 0.0]);
    assert_eq!(r.min_set.len(), 4);
    assert!(r.corner_spread <= 1e-8);
    assert_eq!(r.monotonicity_violations, 0);
    for i in 0..t.e0.len() {
        let a = &t.a_grid[i];
        let j = t.a_grid.iter().position(|b| b[0] == -a[0] && b[1] == a[1]).unwrap();
        assert_eq!(t.e0[i], t.e0[j]);
    }
}

#[test]
fn default_site_strictly_decreasing_1d() {
    let t = scan_landscape(&SingleSite::default_site(), 1, 17, 64).unwrap();
    assert_eq!(t.report().monotonicity_violations, 0);
    println!("E0(0) at m=64: {:.10}", t.e0[8]);
}

#[test]
fn gradient_signs_and_estimators_agree() {
    let s = SingleSite::default_site();
    let r = check_gradient_signs(&s, 2, 9, 24).unwrap();
    println!("checked {} mismatches {} max rel {:e}", r.checked_components, r.sign_mismatches, r.max_rel_diff);
    assert_eq!(r.sign_mismatches, 0);
    assert!(r.max_rel_diff <= 1e-3);
    let g0 = grad_e0(&s, &[0.0, 0.0], 24, GradMethod::Fd).unwrap();
    let h0 = grad_e0(&s, &[0.0, 0.0], 24, GradMethod::Hf).unwrap();
    assert!(g0.iter().chain(&h0).all(|x| x.abs() <= 1e-6 * 10.0));
}

#[test]
fn alternative_two_is_flat() {
    let s = alt2();
    for (d, m) in [(1, 64), (2, 32)] {
        let t = scan_landscape(&s, d, if d == 1 { 9 } else { 3 }, m).unwrap();
        let h = 1.0 / m as f64;
        let bound = 10.0 * h * h * s.sup_norm(d);
        let worst = t.e0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        println!("d={d} m={m}: max|E0| = {worst:e}, bound {bound:e}, supnorm {}", s.sup_norm(d));
        assert!(worst <= bound);
    }
}

#[test]
fn perturbation_identity_default_site() {
    let s = SingleSite::default_site();
    let dm = s.d_max();
    for a1 in [dm / 4.0, dm / 2.0, 3.0 * dm / 4.0] {
        let p = perturbation_identity(&s, a1, &[], 128, 12).unwrap();
        println!("a1={a1:.4} lhs={:.6} rhs={:.6} trunc={:.6} tail={:?} rel={:.4}", p.lhs, p.rhs, p.rhs_truncated, p.tail, p.rel_err);
        assert!(p.rel_err <= 0.05 && p.lhs <= 0.0 && p.rhs <= 0.0);
    }
}

#[test]
fn perturbation_identity_alt2() {
    let s = alt2();
    let m = 64;
    let h = 1.0 / m as f64;
    let q = s.sup_norm(1);
    for a1 in [0.05, 0.1, 0.2] {
        let p = perturbation_identity(&s, a1, &[], m, 12).unwrap();
        println!("alt2 a1={a1} lhs={:e} rhs={:e} bound {:e}", p.lhs, p.rhs, 10.0 * h * h * q * q);
        assert!(p.lhs.abs() <= 10.0 * h * h * q * q && p.rhs.abs() <= 10.0 * h * h * q * q);
    }
}

#[test]
fn monotone_reconstruction() {
    let s = SingleSite::default_site();
    let dm = s.d_max();
    let grid: Vec<f64> = (-6..=6).map(|i| i as f64 * dm / 8.0).collect();
    let r = monotone_integral(&s, &grid, &[], 128, 12).unwrap();
    println!("mismatch {:.4} rec {:?} direct {:?}", r.rel_l2_mismatch, r.reconstructed, r.direct);
    assert!(r.rel_l2_mismatch <= 0.1);
    assert!(r.reconstructed[6].abs() < 1e-12 && r.direct[6].abs() < 1e-6);
    for i in 7..13 {
        assert!(r.reconstructed[i] < 0.0);
    }
}

#[test]
fn coupling_heuristics() {
    let s = SingleSite::default_site();
    let dm = s.d_max();
    let pts: Vec<Vec<f64>> = (0..9).map(|k| vec![-dm + dm * (k % 3) as f64, -dm + dm * (k / 3) as f64]).collect();
    let neu: Vec<CouplingReport> = pts.iter().map(|a| coupling_curvature(&s, a, 24, BoundaryCondition::Neumann, 12).unwrap()).collect();
    let first: Vec<f64> = neu.iter().map(|r| r.first_order).collect();
    let spread = first.iter().cloned().fold(f64::MIN, f64::max) - first.iter().cloned().fold(f64::MAX, f64::min);
    println!("neumann first {first:?} spread {spread:e}");
    assert!(spread <= 1e-8 * 10.0);
    let second: Vec<f64> = neu.iter().map(|r| r.second_order.abs()).collect();
    println!("neumann |second| {second:?}");
    let imax = (0..9).max_by(|&a, &b| second[a].total_cmp(&second[b])).unwrap();
    let imin = (0..9).min_by(|&a, &b| second[a].total_cmp(&second[b])).unwrap();
    assert!(rdm_core::potential::is_corner(&pts[imax], dm));
    assert_eq!(pts[imin], vec![0.0, 0.0]);
    for sign in [1i8, -1] {
        let site = SingleSite { sign, shape: Shape::Bump, ..s.clone() };
        let dir: Vec<f64> = pts.iter().map(|a| coupling_curvature(&site, a, 24, BoundaryCondition::Dirichlet, 4).unwrap().first_order).collect();
        let imin = (0..9).min_by(|&a, &b| dir[a].total_cmp(&dir[b])).unwrap();
        println!("dirichlet sign {sign}: {dir:?}");
        if sign > 0 {
            assert!(rdm_core::potential::is_corner(&pts[imin], dm));
        } else {
            assert_eq!(pts[imin], vec![0.0, 0.0]);
        }
    }
}
