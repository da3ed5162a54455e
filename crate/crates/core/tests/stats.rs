use rand::{Rng, SeedableRng};
use rdm_core::landscape::scan_landscape;
use rdm_core::potential::{make_alt2_site, DisplacementLaw, RadialProfile, SingleSite};
use rdm_core::stats::*;
use rdm_core::Error;

fn setup(law: DisplacementLaw, d: usize, m: usize, trials: usize, seed: u64) -> McSetup {
    McSetup { law, site: SingleSite::default_site(), d, m, trials, seed }
}

#[test]
fn wilson_interval_coverage() {
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(30);
    let mut covered = 0;
    for _ in 0..100 {
        let hits = (0..200).filter(|_| g.random::<f64>() < 0.3).count();
        let (lo, hi) = wilson(hits, 200, Z95);
        if lo <= 0.3 && 0.3 <= hi {
            covered += 1;
        }
    }
    assert!(covered >= 90, "coverage {covered}/100");
}

#[test]
fn minimizer_always_hits() {
    let s = setup(DisplacementLaw::Minimizer, 2, 8, 3, 1);
    let e0 = reference_energy(&s).unwrap();
    for r in lifshitz_mc(&s, &[1, 2], 0.2, e0).unwrap() {
        assert_eq!(r.estimate, 1.0);
        assert!(r.completed);
    }
}

#[test]
fn lifshitz_is_thread_independent() {
    let s = setup(DisplacementLaw::corner_smoothed(), 2, 8, 12, 99);
    let e0 = reference_energy(&s).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| lifshitz_mc(&s, &[1, 2], 0.2, e0)).unwrap();
    let b = four.install(|| lifshitz_mc(&s, &[1, 2], 0.2, e0)).unwrap();
    assert_eq!(a, b);
    for r in &a {
        assert!(r.ci95.0 <= r.estimate && r.estimate <= r.ci95.1);
    }
}

#[test]
fn corner_slope_is_finite_and_flat_sites_are_rejected() {
    let t = scan_landscape(&SingleSite::default_site(), 1, 9, 32).unwrap();
    let c2 = corner_slope_c2(&t).unwrap();
    assert!(c2.is_finite() && c2 > 0.0);
    let flat = make_alt2_site(RadialProfile { height: 0.5, radius: 0.2 }, 0.2).unwrap();
    let t = scan_landscape(&flat, 1, 9, 32).unwrap();
    assert!(matches!(corner_slope_c2(&t), Err(Error::FlatLandscapeSuspected(_))));
}

#[test]
fn form_compare_on_corners_is_identity() {
    let s = setup(DisplacementLaw::CornerUniform, 2, 8, 6, 5);
    let e0 = reference_energy(&s).unwrap();
    let r = form_compare_c3(&s, 1, e0).unwrap();
    assert!(r.ratios.iter().all(|&x| x == 1.0));
    let s = setup(DisplacementLaw::Minimizer, 2, 8, 2, 5);
    let r = form_compare_c3(&s, 1, e0).unwrap();
    assert_eq!(r.excluded, 2);
    assert!(r.ratios.is_empty() && r.flagged.is_empty());
}

#[test]
fn wegner_counts() {
    let s = setup(DisplacementLaw::corner_smoothed(), 2, 8, 10, 3);
    let e0 = reference_energy(&s).unwrap();
    let iv = [(e0 - 2.0, e0 - 1.0), (e0, e0 + 2.0), (e0 + 0.5, e0 + 1.5), (e0 + 0.75, e0 + 1.25)];
    let r = wegner_count_mc(&s, &[1], &iv).unwrap();
    assert!(r.nested_monotone);
    assert_eq!(r.rows[0].total_count, 0);
    assert!(r.rows[1].mean_count >= r.rows[2].mean_count && r.rows[2].mean_count >= r.rows[3].mean_count);
}

#[test]
fn cutoff_joints_are_continuous() {
    let r0 = 0.3 / 4.0;
    for t in [r0, 2.0 * r0] {
        assert!((eta(t * (1.0 - 1e-15), r0) - eta(t * (1.0 + 1e-15), r0)).abs() <= 1e-12);
    }
    assert_eq!(eta(0.0, r0), 1.0);
    assert_eq!(eta(1.0, r0), 0.0);
}

#[test]
fn keybound_zero_site_and_corner_configs() {
    let mut s = setup(DisplacementLaw::corner_smoothed(), 1, 16, 5, 8);
    s.site = SingleSite::zero();
    let r = keybound_mc(&s, 1, 0.0, 1.0).unwrap();
    assert_eq!(r.scored, 5);
    assert!(r.trials.iter().all(|t| t.1 == 0.0));

    let s = setup(DisplacementLaw::CornerUniform, 1, 16, 4, 8);
    let e0 = reference_energy(&s).unwrap();
    match keybound_mc(&s, 1, e0, 10.0) {
        Err(Error::Inconclusive(msg)) => assert!(msg.contains("4 boundary cases"), "{msg}"),
        other => panic!("expected inconclusive, got {other:?}"),
    }
}

#[test]
fn keybound_is_positive_on_short_chains() {
    let s = setup(DisplacementLaw::corner_smoothed(), 1, 32, 20, 12);
    let e0 = reference_energy(&s).unwrap();
    let delta2 = default_delta2(&s.site, 1, 32).unwrap();
    let r = keybound_mc(&s, 2, e0, delta2).unwrap();
    assert!(r.scored > 0 && r.delta1 > 0.0, "{r:?}");
}

#[test]
fn decay_of_extended_states_is_zero() {
    let mut s = setup(DisplacementLaw::corner_smoothed(), 2, 8, 2, 4);
    s.site = SingleSite::zero();
    let r = eigenfunction_decay(&s, 2, 1).unwrap();
    assert!(r.rows.iter().all(|row| row.rate.abs() < 1e-9));
    let s = setup(DisplacementLaw::Minimizer, 2, 8, 1, 4);
    let r = eigenfunction_decay(&s, 2, 1).unwrap();
    assert!(r.rows[0].rate.abs() < 1e-6, "{:?}", r.rows[0]);
}

#[test]
fn regression_constants() {
    let t = scan_landscape(&SingleSite::default_site(), 2, 9, 24).unwrap();
    let c2 = corner_slope_c2(&t).unwrap();
    assert!((c2 - 4.900949771).abs() < 1e-6, "c2 {c2}");
    let s = setup(DisplacementLaw::BoxUniform, 2, 24, 50, 1);
    let r = form_compare_c3(&s, 1, reference_energy(&s).unwrap()).unwrap();
    assert!((r.c3 - 0.7769370147).abs() < 1e-6, "c3 {}", r.c3);
    assert!(r.flagged.is_empty());
}
