//! Bottom-of-spectrum eigenpairs, dense reference spectra and eigenvalue
//! counts by inertia.

mod krylov;
pub mod ldlt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::discretize::DiscreteOperator;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use krylov::smallest_eigs_matrix;
pub use ldlt::Envelope;

/// Largest operator accepted by [`dense_oracle`].
pub const DENSE_LIMIT: usize = 4096;
/// Largest number of eigenpairs [`smallest_eigs`] will compute.
pub const MAX_EIGS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
}

impl EigenResult {
    /// Index ranges of eigenvalues that agree within `rel` relative to the
    /// spectral scale `scale`.
    pub fn clusters(&self, rel: f64, scale: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.values.len() {
            if i == self.values.len() || self.values[i] - self.values[i - 1] > rel * scale.max(1.0) {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    /// Cap on shift-invert applications.
    pub max_iterations: usize,
    /// Operators up to this size are solved densely.
    pub dense_cutoff: usize,
    pub max_basis: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 5000, dense_cutoff: 400, max_basis: 160, seed: 0x5EED }
    }
}

/// `k` smallest eigenpairs of `op` with residuals `‖Av - λv‖ ≤ tol·‖A‖_∞`.
pub fn smallest_eigs(op: &DiscreteOperator, k: usize, tol: f64) -> Result<EigenResult> {
    smallest_eigs_matrix(op.matrix(), k, &EigenOptions { tol, ..Default::default() })
}

pub fn smallest_eigs_with(op: &DiscreteOperator, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    smallest_eigs_matrix(op.matrix(), k, opts)
}

/// Full ascending spectrum by a dense symmetric solver.
pub fn dense_oracle(op: &DiscreteOperator) -> Result<Vec<f64>> {
    let n = op.n_dofs();
    if n > DENSE_LIMIT {
        return Err(Error::SizeCap { n, cap: DENSE_LIMIT });
    }
    Ok(dense_eigenpairs(op.matrix(), 0).0)
}

/// Ascending eigenvalues and the first `k` eigenvectors (unit norm).
pub(crate) fn dense_eigenpairs(a: &CsrMatrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(a.to_dense());
    sorted_pairs(eig.eigenvalues.as_slice(), &eig.eigenvectors, k)
}

pub(crate) fn sorted_pairs(values: &[f64], vectors: &DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = idx.iter().map(|&i| values[i]).collect();
    let vecs = idx.iter().take(k).map(|&i| vectors.column(i).iter().copied().collect()).collect();
    (vals, vecs)
}

/// Makes the first entry of (near) largest magnitude positive.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(x) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if *x < 0.0 {
            v.iter_mut().for_each(|y| *y = -*y);
        }
    }
}

/// Eigenvalue count with the energy perturbation that was needed, if any.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaCount {
    pub count: usize,
    pub perturbation: f64,
}

/// Number of eigenvalues strictly below `e`.
pub fn count_below(op: &DiscreteOperator, e: f64) -> Result<usize> {
    Ok(InertiaCounter::new(op.matrix()).count(e)?.count)
}

/// Reusable eigenvalue counter: a Sturm sequence for tridiagonal matrices,
/// an envelope LDLᵀ inertia otherwise.
pub enum InertiaCounter {
    Sturm(Tridiagonal),
    Ldl { env: Envelope, scale: f64 },
}

const SHIFT_STEP: f64 = 1e-12;
const SHIFT_ATTEMPTS: usize = 6;

impl InertiaCounter {
    pub fn new(a: &CsrMatrix) -> Self {
        match Tridiagonal::from_csr(a) {
            Some(t) => Self::Sturm(t),
            None => Self::Ldl { env: Envelope::new(a), scale: a.inf_norm().max(1.0) },
        }
    }

    pub fn count(&self, e: f64) -> Result<InertiaCount> {
        match self {
            Self::Sturm(t) => Ok(InertiaCount { count: t.count_below(e), perturbation: 0.0 }),
            Self::Ldl { env, scale } => {
                for attempt in 0..SHIFT_ATTEMPTS {
                    let shift = e + attempt as f64 * SHIFT_STEP;
                    if let Ok(f) = env.factor(shift, 1e-14 * scale) {
                        return Ok(InertiaCount { count: f.negative_pivots(), perturbation: shift - e });
                    }
                }
                Err(Error::Factorization { shift: e, attempts: SHIFT_ATTEMPTS })
            }
        }
    }
}

/// Symmetric tridiagonal matrix: diagonal `a`, off-diagonal `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Tridiagonal {
    pub fn from_csr(m: &CsrMatrix) -> Option<Self> {
        let n = m.n();
        if n < 2 || m.bandwidth() > 1 {
            return None;
        }
        Some(Self { a: m.diagonal(), b: (0..n - 1).map(|i| m.get(i, i + 1)).collect() })
    }

    /// Sturm count of eigenvalues below `e`, with a pivot guard in place of
    /// exact zeros.
    pub fn count_below(&self, e: f64) -> usize {
        let guard = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.a[0] - e;
        for i in 0.. {
            if q.abs() < guard {
                q = -guard;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.a.len() {
                break;
            }
            q = self.a[i + 1] - e - self.b[i] * self.b[i] / q;
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{build_laplacian, build_laplacian_with, BoundaryCondition::*, BoxSpec, BuildOptions};

    fn closed_form(n: usize, h: f64, periodic: bool) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n)
            .map(|k| {
                let arg = if periodic { k as f64 * std::f64::consts::PI / n as f64 } else { k as f64 * std::f64::consts::PI / (2 * n) as f64 };
                4.0 / (h * h) * arg.sin().powi(2)
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn dense_matches_closed_forms() {
        let b = BoxSpec::cube(1, 0, 4, Neumann).unwrap();
        let v = dense_oracle(&build_laplacian(&b).unwrap()).unwrap();
        for (x, y) in v.iter().zip(closed_form(4, 0.25, false)) {
            assert!((x - y).abs() < 1e-12);
        }
        let b = BoxSpec::cube(1, 0, 4, Periodic).unwrap();
        let v = dense_oracle(&build_laplacian(&b).unwrap()).unwrap();
        for (x, y) in v.iter().zip(closed_form(4, 0.25, true)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_case() {
        let b = BoxSpec::cube(1, 0, 2, Neumann).unwrap();
        let op = build_laplacian_with(&b, &BuildOptions { min_resolution: 2, ..Default::default() }).unwrap();
        let r = smallest_eigs(&op, 2, 1e-10).unwrap();
        assert!(r.values[0].abs() < 1e-12 && (r.values[1] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_hook() {
        let b = BoxSpec::cube(1, 0, 4, Neumann).unwrap();
        let op = DiscreteOperator::diagonal_only(b, vec![3.0, -1.0, 2.0, 0.5]);
        assert_eq!(dense_oracle(&op).unwrap(), vec![-1.0, 0.5, 2.0, 3.0]);
        assert_eq!(count_below(&op, 1.0).unwrap(), 2);
    }

    #[test]
    fn dense_size_cap() {
        let b = BoxSpec::cube(2, 1, 22, Neumann).unwrap();
        assert!(matches!(dense_oracle(&build_laplacian(&b).unwrap()), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn counts_for_free_neumann() {
        for d in 1..=2 {
            let op = build_laplacian(&BoxSpec::cube(d, 1, 4, Neumann).unwrap()).unwrap();
            assert_eq!(count_below(&op, -1.0).unwrap(), 0);
            assert_eq!(count_below(&op, 1e-9).unwrap(), 1);
        }
    }

    #[test]
    fn sturm_matches_ldl() {
        let op = build_laplacian(&BoxSpec::cube(1, 2, 6, Neumann).unwrap()).unwrap();
        let t = Tridiagonal::from_csr(op.matrix()).unwrap();
        let env = Envelope::new(op.matrix());
        for e in [-1.0, 0.5, 3.0, 40.0, 100.0, 500.0] {
            assert_eq!(t.count_below(e), env.factor(e, 1e-12).unwrap().negative_pivots());
        }
    }

    #[test]
    fn sign_fix() {
        let mut v = vec![0.1, -0.5, 0.5];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.5, -0.5]);
    }
}
