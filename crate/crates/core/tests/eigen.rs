use proptest::prelude::*;
use rdm_core::discretize::{assemble, build_laplacian, BoundaryCondition, BoxSpec};
use rdm_core::eigen::{count_below, dense_oracle, smallest_eigs_with, EigenOptions, InertiaCounter};
use rdm_core::potential::{sample_config, DisplacementLaw, SingleSite};
use rdm_core::DiscreteOperator;

fn iterative() -> EigenOptions {
    EigenOptions { dense_cutoff: 0, ..Default::default() }
}

fn random_operator(d: usize, l: usize, m: usize, bc: BoundaryCondition, seed: u64) -> DiscreteOperator {
    let site = SingleSite::default_site();
    let law = DisplacementLaw::BoxUniform;
    let cfg = sample_config(&law, site.d_max(), d, l, seed);
    assemble(&BoxSpec::cube(d, l, m, bc).unwrap(), &cfg, &site).unwrap()
}

#[test]
fn degenerate_first_excited_pair() {
    let op = build_laplacian(&BoxSpec::cube(2, 0, 16, BoundaryCondition::Neumann).unwrap()).unwrap();
    let r = smallest_eigs_with(&op, 3, &iterative()).unwrap();
    let lam = 4.0 * 256.0 * (std::f64::consts::PI / 32.0).sin().powi(2);
    assert!(r.values[0].abs() < 1e-7);
    assert!((r.values[1] - lam).abs() < 1e-6 && (r.values[2] - lam).abs() < 1e-6, "{:?}", r.values);
    assert!(r.vectors[0].iter().all(|&x| x > 0.0));
}

#[test]
fn iterative_agrees_with_dense() {
    let cases = [
        (1, 2, 32, BoundaryCondition::Neumann),
        (1, 3, 16, BoundaryCondition::Periodic),
        (2, 1, 12, BoundaryCondition::Neumann),
        (2, 1, 10, BoundaryCondition::Dirichlet),
        (2, 1, 14, BoundaryCondition::Periodic),
    ];
    for (i, &(d, l, m, bc)) in cases.iter().enumerate() {
        let op = random_operator(d, l, m, bc, i as u64);
        let dense = dense_oracle(&op).unwrap();
        let opts = iterative();
        let r = smallest_eigs_with(&op, 6, &opts).unwrap();
        let norm = op.matrix().inf_norm();
        for (j, v) in r.values.iter().enumerate() {
            assert!((v - dense[j]).abs() <= 10.0 * opts.tol * norm, "case {i}, level {j}: {v} vs {}", dense[j]);
            assert!(r.residual_norms[j] <= opts.tol * norm);
        }
    }
}

#[test]
fn reordering_invariance() {
    let op = random_operator(2, 1, 12, BoundaryCondition::Neumann, 9);
    let n = op.n_dofs();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7919) % n).collect();
    let a = smallest_eigs_with(&op, 4, &iterative()).unwrap();
    let b = rdm_core::eigen::smallest_eigs_matrix(&op.matrix().permuted(&perm), 4, &iterative()).unwrap();
    let tol = 10.0 * 1e-8 * op.matrix().inf_norm();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= tol);
    }
}

#[test]
fn shifted_count_inequality() {
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let n = 2 + case % 7;
        let x = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0));
        let a = &x * x.transpose();
        let y = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0));
        let s = (&y + y.transpose()) * 0.5;
        // shift B so that A + B has smallest eigenvalue c0
        let c0: f64 = g.random_range(0.05..2.0);
        let lmin = (&a + &s).symmetric_eigenvalues().min();
        let bmat = s + DMatrix::identity(n, n) * (c0 - lmin);
        let c = c0.min(0.5);
        for k in 0..=5 {
            let t = 0.1 * k as f64;
            let lhs = &a + &bmat * t - (&a + DMatrix::identity(n, n) * t) * c;
            assert!(lhs.symmetric_eigenvalues().min() >= -1e-10, "case {case} t {t}");
        }
    }
}

fn dense_count(values: &[f64], e: f64) -> usize {
    values.iter().filter(|&&v| v < e).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inertia_matches_dense(seed in 0u64..10_000, d in 1usize..=2, periodic in any::<bool>(), frac in 0.0f64..1.0) {
        let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Neumann };
        let (l, m) = if d == 1 { (3, 16) } else { (1, 8) };
        let op = random_operator(d, l, m, bc, seed);
        let dense = dense_oracle(&op).unwrap();
        let e = dense[0] - 1.0 + frac * (dense[20] - dense[0] + 2.0);
        prop_assume!(dense.iter().all(|v| (v - e).abs() > 1e-9));
        prop_assert_eq!(count_below(&op, e).unwrap(), dense_count(&dense, e));
    }

    #[test]
    fn inertia_is_monotone(seed in 0u64..1000, e1 in -12.0f64..60.0, de in 0.0f64..30.0) {
        let op = random_operator(2, 1, 6, BoundaryCondition::Neumann, seed);
        let c = InertiaCounter::new(op.matrix());
        prop_assert!(c.count(e1).unwrap().count <= c.count(e1 + de).unwrap().count);
    }
}

#[test]
fn sturm_path_is_used_in_one_dimension() {
    let op = random_operator(1, 4, 16, BoundaryCondition::Neumann, 1);
    assert!(matches!(InertiaCounter::new(op.matrix()), InertiaCounter::Sturm(_)));
    let dense = dense_oracle(&op).unwrap();
    for e in [-5.0, -1.0, 0.0, 10.0, 100.0] {
        assert_eq!(count_below(&op, e).unwrap(), dense_count(&dense, e));
    }
}
