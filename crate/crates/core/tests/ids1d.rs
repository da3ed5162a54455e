use rdm_core::configs::corner_energy;
use rdm_core::ids1d::*;
use rdm_core::potential::{DisplacementLaw, SingleSite};

#[test]
fn free_chain_matches_square_root_law() {
    let (l, m) = (40, 16);
    let grid: Vec<f64> = (0..10).map(|i| 0.5 + 0.5 * i as f64).collect();
    let c = ids_curve(&DisplacementLaw::CornerUniform, &SingleSite::zero(), l, &grid, 2, 1, m).unwrap();
    let h = 1.0 / m as f64;
    for (e, n) in c.e_grid.iter().zip(&c.n_of_e) {
        let free = e.sqrt() / std::f64::consts::PI;
        assert!((n - free).abs() <= 2.0 / (2 * l + 1) as f64 + h * h * e * free, "E={e}: {n} vs {free}");
    }
}

#[test]
fn bernoulli_curve_properties() {
    let site = SingleSite::default_site();
    let m = 16;
    let e0 = corner_energy(&site, 1, m).unwrap();
    let mut grid = vec![e0 - 0.1];
    grid.extend(geometric_grid(e0, 1e-2, 5.0, 16));
    let law = DisplacementLaw::CornerUniform;
    let a = ids_curve(&law, &site, 200, &grid, 3, 7, m).unwrap();
    let b = ids_curve(&law, &site, 200, &grid, 3, 7, m).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_of_e[0], 0.0);
    assert!(a.n_of_e.windows(2).all(|w| w[0] <= w[1]));
    assert!(a.n_of_e[1] > 0.0);
    let fit = tail_fit(&a, e0).unwrap();
    assert!(fit.beta < 0.5, "{fit:?}");
}

#[test]
fn bernoulli_tail_regression() {
    let site = SingleSite::default_site();
    let e0 = corner_energy(&site, 1, 32).unwrap();
    let grid = geometric_grid(e0, 1e-2, 5.0, 16);
    let c = ids_curve(&DisplacementLaw::CornerUniform, &site, 2000, &grid, 20, 7, 32).unwrap();
    let fit = tail_fit(&c, e0).unwrap();
    assert!((fit.c_log - 0.5620286411).abs() < 1e-8, "{fit:?}");
    assert!((fit.beta - 0.3973199917).abs() < 1e-8, "{fit:?}");
    // nearly balanced stretches reach close to the spectral bottom
    let near = ids_curve(&DisplacementLaw::CornerUniform, &site, 2000, &[e0 + 0.1], 20, 7, 32).unwrap();
    assert!(near.n_of_e[0] > 0.0);
}
