//! Envelope (profile) LDLᵀ factorisation of `A - σI` without pivoting, on a
//! reverse Cuthill-McKee ordering. Used both as the shift-invert solver and
//! for inertia counts.

use std::collections::VecDeque;

use crate::sparse::CsrMatrix;

/// Ordering and envelope structure of a symmetric matrix, reusable across shifts.
#[derive(Clone, Debug)]
pub struct Envelope {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
    diag: Vec<f64>,
    /// Strictly lower envelope entries of the permuted matrix.
    lower: Vec<f64>,
}

/// Factor of `P(A - σI)Pᵀ = L D Lᵀ`.
#[derive(Clone, Debug)]
pub struct Factor<'a> {
    env: &'a Envelope,
    l: Vec<f64>,
    d: Vec<f64>,
    pub shift: f64,
}

/// Reverse Cuthill-McKee ordering, one BFS per connected component, each
/// started from a pseudo-peripheral node of minimal degree.
pub fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, mask: &[bool]| -> (usize, usize) {
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        dist[start] = 0;
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            for &v in &adj[u] {
                if !mask[v] && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        (dist[last], last)
    };
    for s in 0..n {
        if visited[s] {
            continue;
        }
        let mut start = s;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..5 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nb.sort_by_key(|&v| (deg[v], v));
            for v in nb {
                visited[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

impl Envelope {
    pub fn new(a: &CsrMatrix) -> Self {
        Self::with_ordering(a, rcm(a))
    }

    pub fn with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = a.n();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, f) in first.iter_mut().enumerate() {
            for (j, _) in a.row(perm[i]) {
                *f = (*f).min(inv[j]);
            }
        }
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for i in 0..n {
            ptr.push(ptr[i] + i - first[i]);
        }
        let mut lower = vec![0.0; ptr[n]];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for (j, v) in a.row(perm[i]) {
                let jn = inv[j];
                if jn == i {
                    diag[i] += v;
                } else if jn < i {
                    lower[ptr[i] + jn - first[i]] += v;
                }
            }
        }
        Self { n, perm, first, ptr, diag, lower }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profile_size(&self) -> usize {
        self.lower.len()
    }

    /// Factorises `A - σI`. Fails with the offending pivot index when a pivot
    /// falls below `pivot_tol` in magnitude.
    pub fn factor(&self, shift: f64, pivot_tol: f64) -> Result<Factor<'_>, usize> {
        let n = self.n;
        let mut l = self.lower.clone();
        let mut d = vec![0.0; n];
        for i in 0..n {
            let fi = self.first[i];
            let (done, rest) = l.split_at_mut(self.ptr[i]);
            let row = &mut rest[..i - fi];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let lj = &done[self.ptr[j] + k0 - fj..self.ptr[j] + j - fj];
                    let ri = &row[k0 - fi..j - fi];
                    let s: f64 = ri.iter().zip(lj).map(|(a, b)| a * b).sum();
                    row[j - fi] -= s;
                }
            }
            let mut dii = self.diag[i] - shift;
            for (k, u) in row.iter_mut().enumerate() {
                let dk = d[fi + k];
                let lik = *u / dk;
                dii -= *u * lik;
                *u = lik;
            }
            if !(dii.abs() > pivot_tol) {
                return Err(i);
            }
            d[i] = dii;
        }
        Ok(Factor { env: self, l, d, shift })
    }
}

impl Factor<'_> {
    /// Number of negative pivots, equal to the number of eigenvalues below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    /// Solves `(A - σI) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let env = self.env;
        let n = env.n;
        let mut z: Vec<f64> = env.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = env.first[i];
            let row = &self.l[env.ptr[i]..env.ptr[i + 1]];
            let s: f64 = row.iter().zip(&z[fi..i]).map(|(a, b)| a * b).sum();
            z[i] -= s;
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= di;
        }
        for i in (0..n).rev() {
            let fi = env.first[i];
            let xi = z[i];
            let row = &self.l[env.ptr[i]..env.ptr[i + 1]];
            for (zk, lik) in z[fi..i].iter_mut().zip(row) {
                *zk -= lik * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in env.perm.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{build_laplacian, BoundaryCondition, BoxSpec};

    #[test]
    fn solves_shifted_laplacian() {
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Periodic, BoundaryCondition::Dirichlet] {
            let b = BoxSpec::cube(2, 1, 5, bc).unwrap();
            let a = build_laplacian(&b).unwrap();
            let env = Envelope::new(a.matrix());
            let f = env.factor(-1.5, 1e-12).unwrap();
            assert_eq!(f.negative_pivots(), 0);
            let rhs: Vec<f64> = (0..a.n_dofs()).map(|i| (i as f64 * 0.37).sin()).collect();
            let x = f.solve(&rhs);
            let ax = a.matrix().apply(&x);
            for i in 0..rhs.len() {
                assert!((ax[i] + 1.5 * x[i] - rhs[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rcm_reduces_profile() {
        let b = BoxSpec::block(vec![0, 0], vec![1, 8], 6, BoundaryCondition::Neumann).unwrap();
        let a = build_laplacian(&b).unwrap();
        let natural = Envelope::with_ordering(a.matrix(), (0..a.n_dofs()).collect());
        let ordered = Envelope::new(a.matrix());
        assert!(ordered.profile_size() < natural.profile_size());
        let mut p = rcm(a.matrix());
        p.sort();
        assert_eq!(p, (0..a.n_dofs()).collect::<Vec<_>>());
    }
}
