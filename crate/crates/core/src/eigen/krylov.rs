//! Restarted block Krylov iteration on `(A - σI)^{-1}` with Rayleigh-Ritz
//! extraction on `A` itself. The shift starts below the Gershgorin bound and
//! is moved towards the lowest Ritz value at every restart, with the
//! factorisation inertia guarding against overshoot.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::ldlt::Envelope;
use super::{dense_eigenpairs, fix_sign, EigenOptions, EigenResult, MAX_EIGS};
use crate::error::{Error, Result};
use crate::rng;
use crate::sparse::CsrMatrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn residual(a: &CsrMatrix, v: &[f64], lambda: f64) -> f64 {
    let av = a.apply(v);
    av.iter().zip(v).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt()
}

struct Basis<'a> {
    a: &'a CsrMatrix,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    /// `VᵀAV`.
    g: Vec<Vec<f64>>,
    /// `(AV)ᵀ(AV)`, for cheap residual estimates.
    m2: Vec<Vec<f64>>,
}

impl<'a> Basis<'a> {
    fn new(a: &'a CsrMatrix) -> Self {
        Self { a, v: Vec::new(), av: Vec::new(), g: Vec::new(), m2: Vec::new() }
    }

    fn dim(&self) -> usize {
        self.v.len()
    }

    /// Orthogonalises `x` against the basis (two Gram-Schmidt passes) and
    /// appends it unless it is numerically dependent.
    fn push(&mut self, mut x: Vec<f64>) -> bool {
        let n0 = dot(&x, &x).sqrt();
        if n0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for v in &self.v {
                let c = dot(v, &x);
                axpy(-c, v, &mut x);
            }
        }
        let nx = dot(&x, &x).sqrt();
        if nx <= 1e-10 * n0 {
            return false;
        }
        x.iter_mut().for_each(|t| *t /= nx);
        let ax = self.a.apply(&x);
        let grow: Vec<f64> = self.v.iter().map(|v| dot(v, &ax)).collect();
        let mrow: Vec<f64> = self.av.iter().map(|w| dot(w, &ax)).collect();
        for (i, (gi, mi)) in grow.iter().zip(&mrow).enumerate() {
            self.g[i].push(*gi);
            self.m2[i].push(*mi);
        }
        let mut gl = grow;
        gl.push(dot(&x, &ax));
        let mut ml = mrow;
        ml.push(dot(&ax, &ax));
        self.g.push(gl);
        self.m2.push(ml);
        self.v.push(x);
        self.av.push(ax);
        true
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let k = self.dim();
        let g = DMatrix::from_fn(k, k, |i, j| 0.5 * (self.g[i][j] + self.g[j][i]));
        let eig = SymmetricEigen::new(g);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, idx[c])]);
        (vals, vecs)
    }

    fn residual_estimate(&self, theta: f64, y: &[f64]) -> f64 {
        let k = self.dim();
        let mut q = 0.0;
        for i in 0..k {
            for j in 0..k {
                q += y[i] * self.m2[i][j] * y[j];
            }
        }
        (q - theta * theta).max(0.0).sqrt()
    }

    fn combine(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.a.n()];
        for (v, c) in self.v.iter().zip(y) {
            axpy(*c, v, &mut out);
        }
        out
    }
}

fn gershgorin_lower(a: &CsrMatrix) -> f64 {
    (0..a.n())
        .map(|i| a.row(i).map(|(j, v)| if j == i { v } else { -v.abs() }).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn finish(a: &CsrMatrix, values: Vec<f64>, mut vectors: Vec<Vec<f64>>, iterations: usize) -> EigenResult {
    for v in vectors.iter_mut() {
        let nv = dot(v, v).sqrt();
        v.iter_mut().for_each(|t| *t /= nv);
        fix_sign(v);
    }
    let residual_norms = values.iter().zip(&vectors).map(|(l, v)| residual(a, v, *l)).collect();
    EigenResult { values, vectors, residual_norms, iterations }
}

pub fn smallest_eigs_matrix(a: &CsrMatrix, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    let n = a.n();
    if k == 0 {
        return Ok(EigenResult { values: vec![], vectors: vec![], residual_norms: vec![], iterations: 0 });
    }
    if k > MAX_EIGS || k > n {
        return Err(Error::InvalidArgument(format!("cannot compute {k} eigenpairs of an operator of size {n}")));
    }
    if n <= opts.dense_cutoff || n <= 2 * k + 8 {
        let (vals, vecs) = dense_eigenpairs(a, k);
        return Ok(finish(a, vals[..k].to_vec(), vecs, 0));
    }
    let norm = a.inf_norm().max(f64::MIN_POSITIVE);
    let target = opts.tol * norm;
    let pivot_tol = 1e-14 * norm;
    let b = k.clamp(2, 6);
    let max_basis = opts.max_basis.max(3 * b + k).min(n);

    let env = Envelope::new(a);
    let lower = gershgorin_lower(a);
    let mut sigma = lower - 1e-3 * (1.0 + lower.abs());
    let mut factor = loop {
        match env.factor(sigma, pivot_tol) {
            Ok(f) => break f,
            Err(_) => sigma -= 1e-3 * (1.0 + sigma.abs()),
        }
    };

    let mut g = rng::stream(&[opts.seed, n as u64]);
    let mut block: Vec<Vec<f64>> = (0..b).map(|_| (0..n).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
    let mut basis = Basis::new(a);
    for x in block.drain(..) {
        basis.push(x);
    }
    let mut last: Vec<usize> = (0..basis.dim()).collect();
    let mut steps = 0;
    let mut best = f64::INFINITY;

    loop {
        let w: Vec<Vec<f64>> = last.iter().map(|&i| factor.solve(&basis.v[i])).collect();
        steps += 1;
        let start = basis.dim();
        for x in w {
            basis.push(x);
        }
        last = (start..basis.dim()).collect();
        let exhausted = last.is_empty();

        let (theta, y) = basis.ritz();
        if basis.dim() >= k {
            let est: Vec<f64> = (0..k)
                .map(|i| basis.residual_estimate(theta[i], y.column(i).as_slice()))
                .collect();
            let worst = est.iter().cloned().fold(0.0, f64::max);
            if worst <= 0.5 * target || exhausted {
                let vecs: Vec<Vec<f64>> = (0..k).map(|i| basis.combine(y.column(i).as_slice())).collect();
                let res = finish(a, theta[..k].to_vec(), vecs, steps);
                let worst_true = res.residual_norms.iter().cloned().fold(0.0, f64::max);
                best = best.min(worst_true);
                if worst_true <= target {
                    return Ok(res);
                }
            } else {
                best = best.min(worst);
            }
        }
        if steps >= opts.max_iterations {
            return Err(Error::Convergence { iterations: steps, residual: best });
        }

        if basis.dim() + b > max_basis || exhausted {
            let keep = (k + b).min(basis.dim());
            let ritz: Vec<Vec<f64>> = (0..keep).map(|i| basis.combine(y.column(i).as_slice())).collect();
            let r0 = basis.residual_estimate(theta[0], y.column(0).as_slice());
            let upper = theta[k.min(keep - 1)];
            let candidate = theta[0] - 0.5 * (upper - theta[0]) - r0;
            if candidate > sigma {
                if let Ok(f) = env.factor(candidate, pivot_tol) {
                    if f.negative_pivots() == 0 {
                        sigma = candidate;
                        factor = f;
                    }
                }
            }
            basis = Basis::new(a);
            for x in ritz {
                basis.push(x);
            }
            if exhausted {
                let extra: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
                basis.push(extra);
            }
            last = (0..b.min(basis.dim())).collect();
        }
    }
}
