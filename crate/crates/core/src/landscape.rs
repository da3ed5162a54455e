//! The single-cell Neumann ground energy `E₀(a)` as a function of the
//! displacement `a`: scans, gradients, and the second-order perturbation
//! identity relating `E₀''`, `E₀'` and boundary forms of excited states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{assemble, build_laplacian, BoundaryCondition, BoxSpec, DiscreteOperator};
use crate::eigen::{smallest_eigs, EigenResult, MAX_EIGS};
use crate::error::{Error, Result};
use crate::potential::{DisplacementConfig, Sample, SingleSite};

/// Solver tolerance used for all landscape solves.
pub const TOL: f64 = 1e-10;

/// Relative width of an eigenvalue cluster.
const CLUSTER_REL: f64 = 1e-9;

/// Neumann (or other `bc`) operator on the unit cell with the site displaced by `a`.
pub fn cell_operator(site: &SingleSite, a: &[f64], m: usize, bc: BoundaryCondition) -> Result<DiscreteOperator> {
    let b = BoxSpec::cube(a.len(), 0, m, bc)?;
    assemble(&b, &DisplacementConfig::single(a), site)
}

/// Eigenpairs with vectors rescaled to unit discrete L² norm `h^d Σ u² = 1`.
pub fn l2_eigenpairs(op: &DiscreteOperator, k: usize) -> Result<EigenResult> {
    let mut r = smallest_eigs(op, k, TOL)?;
    let b = op.box_spec();
    let scale = b.h().powf(-0.5 * b.dim() as f64);
    for v in r.vectors.iter_mut() {
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(r)
}

/// Ground energy and positive L²-normalised ground state of an operator.
/// Without potential and with Neumann or periodic walls the answer is the
/// exact constant kernel vector.
pub fn ground_pair(op: &DiscreteOperator) -> Result<(f64, Vec<f64>)> {
    let b = op.box_spec();
    if b.bc() != BoundaryCondition::Dirichlet && op.potential_values().iter().all(|&v| v == 0.0) {
        let vol: f64 = b.cells().iter().map(|&c| c as f64).product();
        return Ok((0.0, vec![vol.sqrt().recip(); op.n_dofs()]));
    }
    let mut r = l2_eigenpairs(op, 1)?;
    let mut u = r.vectors.swap_remove(0);
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((r.values[0], u))
}

/// `E₀(a)` and the positive L²-normalised ground state.
pub fn e0_of_a(site: &SingleSite, a: &[f64], m: usize) -> Result<(f64, Vec<f64>)> {
    ground_pair(&cell_operator(site, a, m, BoundaryCondition::Neumann)?)
}

/// Eigenpairs `0..=k_max`, extended so the last cluster is complete.
fn eigenpairs_through(op: &DiscreteOperator, k_max: usize) -> Result<EigenResult> {
    let want = (k_max + 5).min(MAX_EIGS).min(op.n_dofs());
    let mut r = l2_eigenpairs(op, want)?;
    let scale = r.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut end = (k_max + 1).min(r.values.len());
    while end < r.values.len() && r.values[end] - r.values[end - 1] <= CLUSTER_REL * scale {
        end += 1;
    }
    r.values.truncate(end);
    r.vectors.truncate(end);
    r.residual_norms.truncate(end);
    Ok(r)
}

fn axis_grid(d_max: f64, grid_res: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..grid_res)
        .map(|k| -d_max + 2.0 * d_max * k as f64 / (grid_res - 1) as f64)
        .collect();
    for k in 0..grid_res / 2 {
        v[k] = -v[grid_res - 1 - k];
    }
    if grid_res % 2 == 1 {
        v[grid_res / 2] = 0.0;
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeTable {
    pub site: SingleSite,
    pub m: usize,
    pub d: usize,
    pub grid_res: usize,
    pub a_grid: Vec<Vec<f64>>,
    pub e0: Vec<f64>,
    /// Hellmann-Feynman gradients.
    pub grad: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub argmin: usize,
    pub argmax: usize,
    /// Points whose energy is within `1e-8` of the minimum.
    pub min_set: Vec<usize>,
    /// Spread of `E₀` over the corner points.
    pub corner_spread: f64,
    /// Non-decreasing steps of `E₀` walking outward from `a_j = 0` along each axis.
    pub monotonicity_violations: usize,
    pub max_minus_min: f64,
}

/// `E₀` over the tensor grid of `grid_res` points per axis on `[-d_max, d_max]`.
/// Each sign class of `a` is solved once at `|a|`, so the table is exactly
/// reflection symmetric.
pub fn scan_landscape(site: &SingleSite, d: usize, grid_res: usize, m: usize) -> Result<LandscapeTable> {
    if grid_res < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points per axis".into()));
    }
    let axis = axis_grid(site.d_max(), grid_res);
    let total = grid_res.pow(d as u32);
    let multi = |mut k: usize| -> Vec<usize> {
        (0..d)
            .map(|_| {
                let i = k % grid_res;
                k /= grid_res;
                i
            })
            .collect()
    };
    let canon = |idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| i.max(grid_res - 1 - i)).collect() };
    let mut reps: Vec<Vec<usize>> = (0..total).map(|k| canon(&multi(k))).collect();
    reps.sort();
    reps.dedup();
    let solved: Vec<(f64, Vec<f64>)> = reps
        .par_iter()
        .map(|idx| {
            let a: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
            let (e, _) = e0_of_a(site, &a, m)?;
            let g = grad_e0(site, &a, m, GradMethod::Hf)?;
            Ok((e, g))
        })
        .collect::<Result<_>>()?;
    let mut a_grid = Vec::with_capacity(total);
    let mut e0 = Vec::with_capacity(total);
    let mut grad = Vec::with_capacity(total);
    for k in 0..total {
        let idx = multi(k);
        let pos = reps.binary_search(&canon(&idx)).expect("representative");
        let a: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        let g = solved[pos].1.iter().zip(&a).map(|(g, x)| if *x < 0.0 { -g } else if *x == 0.0 { 0.0 } else { *g }).collect();
        e0.push(solved[pos].0);
        grad.push(g);
        a_grid.push(a);
    }
    Ok(LandscapeTable { site: site.clone(), m, d, grid_res, a_grid, e0, grad: Some(grad) })
}

impl LandscapeTable {
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn report(&self) -> LandscapeReport {
        let n = self.e0.len();
        let argmin = (0..n).min_by(|&a, &b| self.e0[a].total_cmp(&self.e0[b])).unwrap_or(0);
        let argmax = (0..n).max_by(|&a, &b| self.e0[a].total_cmp(&self.e0[b])).unwrap_or(0);
        let emin = self.e0[argmin];
        let min_set = (0..n).filter(|&i| self.e0[i] <= emin + 1e-8).collect();
        let d_max = self.site.d_max();
        let corners: Vec<f64> = (0..n)
            .filter(|&i| crate::potential::is_corner(&self.a_grid[i], d_max))
            .map(|i| self.e0[i])
            .collect();
        let corner_spread = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - corners.iter().cloned().fold(f64::INFINITY, f64::min);
        let r = self.grid_res;
        let mut violations = 0;
        for k in 0..n {
            for j in 0..self.d {
                let stride = r.pow(j as u32);
                let i = (k / stride) % r;
                let a = self.a_grid[k][j];
                if a >= 0.0 && i + 1 < r && !(self.e0[k + stride] < self.e0[k]) {
                    violations += 1;
                }
            }
        }
        LandscapeReport {
            argmin,
            argmax,
            min_set,
            corner_spread,
            monotonicity_violations: violations,
            max_minus_min: self.e0[argmax] - emin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMethod {
    /// Five-point central differences with step `d_max/64`.
    Fd,
    /// Hellmann-Feynman: `-⟨u₀, (∂_i q)(· - a) u₀⟩`.
    Hf,
}

pub fn fd_step(site: &SingleSite) -> f64 {
    site.d_max() / 64.0
}

fn five_point<F: FnMut(f64) -> Result<f64>>(mut f: F, step: f64) -> Result<(f64, f64)> {
    let fm2 = f(-2.0 * step)?;
    let fm1 = f(-step)?;
    let f0 = f(0.0)?;
    let fp1 = f(step)?;
    let fp2 = f(2.0 * step)?;
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * step);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * step * step);
    Ok((d1, d2))
}

fn check_room(a: f64, step: f64, d_max: f64) -> Result<()> {
    if a.abs() + 2.0 * step > d_max + 1e-12 {
        return Err(Error::InvalidArgument(format!("a = {a} leaves no room for a difference step {step}")));
    }
    Ok(())
}

/// `∇_a E₀(a)`.
pub fn grad_e0(site: &SingleSite, a: &[f64], m: usize, method: GradMethod) -> Result<Vec<f64>> {
    match method {
        GradMethod::Hf => {
            let (_, u) = e0_of_a(site, a, m)?;
            let h = 1.0 / m as f64;
            let w = h.powi(a.len() as i32);
            Ok((0..a.len())
                .map(|j| {
                    let dq = site.cell_samples(a, m, Sample::Partial(j));
                    -w * u.iter().zip(&dq).map(|(x, q)| x * x * q).sum::<f64>()
                })
                .collect())
        }
        GradMethod::Fd => {
            let step = fd_step(site);
            (0..a.len())
                .map(|j| {
                    check_room(a[j], step, site.d_max())?;
                    let (d1, _) = five_point(
                        |t| {
                            let mut b = a.to_vec();
                            b[j] += t;
                            Ok(e0_of_a(site, &b, m)?.0)
                        },
                        step,
                    )?;
                    Ok(d1)
                })
                .collect()
        }
    }
}

/// Sign check of `∂_i E₀` against `-sign(a_i)` at interior grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub points: Vec<Vec<f64>>,
    pub fd: Vec<Vec<f64>>,
    pub hf: Vec<Vec<f64>>,
    pub checked_components: usize,
    pub sign_mismatches: usize,
    /// Largest `‖hf - fd‖ / ‖fd‖` over the points.
    pub max_rel_diff: f64,
}

pub fn check_gradient_signs(site: &SingleSite, d: usize, grid_res: usize, m: usize) -> Result<SignReport> {
    let d_max = site.d_max();
    let axis = axis_grid(d_max, grid_res);
    let interior: Vec<f64> = axis.iter().copied().filter(|x| x.abs() < d_max - 1e-12).collect();
    let total = interior.len().pow(d as u32);
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let x = interior[k % interior.len()];
                    k /= interior.len();
                    x
                })
                .collect()
        })
        .collect();
    let grads: Vec<(Vec<f64>, Vec<f64>)> = points
        .par_iter()
        .map(|a| Ok((grad_e0(site, a, m, GradMethod::Fd)?, grad_e0(site, a, m, GradMethod::Hf)?)))
        .collect::<Result<_>>()?;
    let mut checked = 0;
    let mut mismatches = 0;
    let mut max_rel = 0.0f64;
    for (a, (fd, hf)) in points.iter().zip(&grads) {
        for j in 0..d {
            if a[j].abs() >= d_max / 8.0 - 1e-12 {
                checked += 1;
                if fd[j].signum() != -a[j].signum() || fd[j] == 0.0 {
                    mismatches += 1;
                }
            }
        }
        let nfd = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = fd.iter().zip(hf).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        if nfd > 1e-9 * site.amplitude().max(1.0) {
            max_rel = max_rel.max(diff / nfd);
        }
    }
    Ok(SignReport {
        points,
        fd: grads.iter().map(|g| g.0.clone()).collect(),
        hf: grads.iter().map(|g| g.1.clone()).collect(),
        checked_components: checked,
        sign_mismatches: mismatches,
        max_rel_diff: max_rel,
    })
}

/// Derivative of `u` along axis 0 by centred differences, reflecting at the walls.
pub fn axis0_derivative(b: &BoxSpec, u: &[f64]) -> Vec<f64> {
    let n0 = b.axis_nodes(0);
    let h = b.h();
    (0..u.len())
        .map(|i| {
            let i0 = i % n0;
            let left = if i0 == 0 { u[i] } else { u[i - 1] };
            let right = if i0 + 1 == n0 { u[i] } else { u[i + 1] };
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// `∮ (u ∂_n v - v ∂_n u) dS` over the box boundary. Wall values come from
/// quadratic extrapolation of the three nearest nodes, normal derivatives
/// from the quadratic through the wall value and the two nearest nodes.
pub fn boundary_form(b: &BoxSpec, u: &[f64], v: &[f64]) -> f64 {
    let d = b.dim();
    let h = b.h();
    let dims: Vec<usize> = (0..d).map(|j| b.axis_nodes(j)).collect();
    assert!(dims.iter().all(|&n| n >= 3), "boundary form needs three nodes per axis");
    let wall = |f1: f64, f2: f64, f3: f64| -> (f64, f64) {
        let fb = (15.0 * f1 - 10.0 * f2 + 3.0 * f3) / 8.0;
        (fb, (8.0 * fb - 9.0 * f1 + f2) / (3.0 * h))
    };
    let area = h.powi(d as i32 - 1);
    let mut total = 0.0;
    for j in 0..d {
        let stride: usize = dims[..j].iter().product();
        for i in 0..u.len() {
            let ij = (i / stride) % dims[j];
            let inward: i64 = if ij == 0 {
                1
            } else if ij + 1 == dims[j] {
                -1
            } else {
                continue;
            };
            let at = |f: &[f64], k: i64| f[(i as i64 + inward * k * stride as i64) as usize];
            let (ub, dun) = wall(at(u, 0), at(u, 1), at(u, 2));
            let (vb, dvn) = wall(at(v, 0), at(v, 1), at(v, 2));
            total += area * (ub * dvn - vb * dun);
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub a: Vec<f64>,
    pub e0: f64,
    pub e0_prime: f64,
    pub e0_second: f64,
    /// `⟨u₀, ∂₁u₀⟩`.
    pub overlap: f64,
    pub lhs: f64,
    /// Truncated spectral sum over `k = 1..=k_max` (completed to whole clusters).
    pub rhs_truncated: f64,
    /// Estimated remainder of the spectral sum (one dimension only).
    pub tail: Option<f64>,
    pub rhs: f64,
    pub rel_err: f64,
    pub rel_err_truncated: f64,
    pub terms: Vec<f64>,
}

fn rel_err(x: f64, y: f64) -> f64 {
    let s = x.abs().max(y.abs());
    if s == 0.0 {
        0.0
    } else {
        (x - y).abs() / s
    }
}

/// `Σ_{j>K} (K/j)²`.
fn weyl_tail_factor(k: usize) -> f64 {
    let kf = k as f64;
    let j_max = 200_000;
    (k + 1..=j_max).map(|j| (kf / j as f64).powi(2)).sum::<f64>() + kf * kf / j_max as f64
}

/// Checks `E₀'' - 4E₀'⟨u₀,∂₁u₀⟩ = -2 Σ_k B(u_k, ∂₁u₀)²/(E_k - E₀)` at
/// `a = (a1, transverse...)`. The `a₁`-derivatives use five-point
/// differences with step `h`, so the sampled potential moves by whole grid
/// cells and the grid-induced ripple in `E₀` cancels.
pub fn perturbation_identity(
    site: &SingleSite,
    a1: f64,
    transverse: &[f64],
    m: usize,
    k_max: usize,
) -> Result<PerturbationReport> {
    let mut a = vec![a1];
    a.extend_from_slice(transverse);
    let h = 1.0 / m as f64;
    check_room(a1, h, site.d_max())?;
    let (e0_prime, e0_second) = five_point(
        |t| {
            let mut b = a.clone();
            b[0] += t;
            Ok(e0_of_a(site, &b, m)?.0)
        },
        h,
    )?;
    let op = cell_operator(site, &a, m, BoundaryCondition::Neumann)?;
    let pairs = eigenpairs_through(&op, k_max)?;
    let b = op.box_spec();
    let mut u0 = pairs.vectors[0].clone();
    if u0.iter().sum::<f64>() < 0.0 {
        u0.iter_mut().for_each(|x| *x = -*x);
    }
    let e0 = pairs.values[0];
    let du = axis0_derivative(b, &u0);
    let overlap = b.inner(&u0, &du);
    let mut terms = Vec::new();
    for k in 1..pairs.values.len() {
        let gap = pairs.values[k] - e0;
        if gap <= CLUSTER_REL * e0.abs().max(1.0) {
            return Err(Error::DegenerateCluster { k, gap });
        }
        let bk = boundary_form(b, &pairs.vectors[k], &du);
        terms.push(-2.0 * bk * bk / gap);
    }
    let rhs_truncated: f64 = terms.iter().sum();
    let tail = (a.len() == 1 && terms.len() >= 2).then(|| {
        let last = 0.5 * (terms[terms.len() - 1] + terms[terms.len() - 2]);
        last * weyl_tail_factor(terms.len())
    });
    let rhs = rhs_truncated + tail.unwrap_or(0.0);
    let lhs = e0_second - 4.0 * e0_prime * overlap;
    Ok(PerturbationReport {
        a,
        e0,
        e0_prime,
        e0_second,
        overlap,
        lhs,
        rhs_truncated,
        tail,
        rhs,
        rel_err: rel_err(lhs, rhs),
        rel_err_truncated: rel_err(lhs, rhs_truncated),
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub a1: Vec<f64>,
    pub f: Vec<f64>,
    pub rhs: Vec<f64>,
    pub reconstructed: Vec<f64>,
    pub direct: Vec<f64>,
    /// `‖reconstructed - direct‖₂ / ‖direct‖₂` over the grid.
    pub rel_l2_mismatch: f64,
}

/// Rebuilds `E₀'` from the identity: with `F' = -4⟨u₀,∂₁u₀⟩` and `E₀'(0) = 0`,
/// `E₀'(a₁) = e^{-F(a₁)} ∫₀^{a₁} e^{F} rhs`, both integrals by the trapezoid rule.
pub fn monotone_integral(
    site: &SingleSite,
    a1_grid: &[f64],
    transverse: &[f64],
    m: usize,
    k_max: usize,
) -> Result<MonotoneReport> {
    let n = a1_grid.len();
    let symmetric = (0..n).all(|i| (a1_grid[i] + a1_grid[n - 1 - i]).abs() < 1e-14)
        && a1_grid.windows(2).all(|w| w[0] < w[1]);
    if n < 3 || n.is_multiple_of(2) || !symmetric {
        return Err(Error::InvalidArgument("a1 grid must be increasing, symmetric and contain 0".into()));
    }
    let reports: Vec<PerturbationReport> = a1_grid
        .par_iter()
        .map(|&x| perturbation_identity(site, x, transverse, m, k_max))
        .collect::<Result<_>>()?;
    let c = n / 2;
    let fprime: Vec<f64> = reports.iter().map(|r| -4.0 * r.overlap).collect();
    let rhs: Vec<f64> = reports.iter().map(|r| r.rhs).collect();
    let cumulative = |g: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in c + 1..n {
            out[i] = out[i - 1] + 0.5 * (a1_grid[i] - a1_grid[i - 1]) * (g(i) + g(i - 1));
        }
        for i in (0..c).rev() {
            out[i] = out[i + 1] - 0.5 * (a1_grid[i + 1] - a1_grid[i]) * (g(i) + g(i + 1));
        }
        out
    };
    let f = cumulative(&|i| fprime[i]);
    let inner = cumulative(&|i| f[i].exp() * rhs[i]);
    let reconstructed: Vec<f64> = (0..n).map(|i| (-f[i]).exp() * inner[i]).collect();
    let direct: Vec<f64> = reports.iter().map(|r| r.e0_prime).collect();
    let num = reconstructed.iter().zip(&direct).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = direct.iter().map(|y| y * y).sum::<f64>().sqrt();
    Ok(MonotoneReport {
        a1: a1_grid.to_vec(),
        f,
        rhs,
        reconstructed,
        direct,
        rel_l2_mismatch: if den > 0.0 { num / den } else { num },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub a: Vec<f64>,
    pub first_order: f64,
    pub second_order: f64,
}

/// First and second coupling-constant derivatives of the ground energy of
/// `-Δ + λ q(· - a)` at `λ = 0`, from free eigenpairs of the cell.
pub fn coupling_curvature(
    site: &SingleSite,
    a: &[f64],
    m: usize,
    bc: BoundaryCondition,
    k_max: usize,
) -> Result<CouplingReport> {
    if bc == BoundaryCondition::Periodic {
        return Err(Error::InvalidArgument("coupling curvature needs neumann or dirichlet walls".into()));
    }
    crate::discretize::check_displacement(&vec![0; a.len()], a, site.d_max())?;
    let b = BoxSpec::cube(a.len(), 0, m, bc)?;
    let free = build_laplacian(&b)?;
    let pairs = eigenpairs_through(&free, k_max)?;
    let q = site.cell_samples(a, m, Sample::Value);
    let u0 = &pairs.vectors[0];
    let qu0: Vec<f64> = u0.iter().zip(&q).map(|(x, y)| x * y).collect();
    let first_order = b.inner(u0, &qu0);
    let e0 = pairs.values[0];
    let mut second_order = 0.0;
    for k in 1..pairs.values.len() {
        let c = b.inner(&pairs.vectors[k], &qu0);
        second_order -= 2.0 * c * c / (pairs.values[k] - e0);
    }
    Ok(CouplingReport { a: a.to_vec(), first_order, second_order })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_reflection_closed() {
        let g = axis_grid(0.3, 9);
        for i in 0..9 {
            assert_eq!(g[i], -g[8 - i]);
        }
        assert_eq!(g[0], -0.3);
    }

    #[test]
    fn boundary_form_is_antisymmetric_and_exact_for_quadratics() {
        let b = BoxSpec::cube(1, 0, 16, BoundaryCondition::Neumann).unwrap();
        let xs: Vec<f64> = (0..16).map(|i| b.node_coord(0, i)).collect();
        let u = vec![1.0; 16];
        let v: Vec<f64> = xs.iter().map(|x| x * x + x).collect();
        // Green's identity: the form equals ∫ (u Δv - v Δu) = ∫ 2 over the unit cell
        assert!((boundary_form(&b, &u, &v) - 2.0).abs() < 1e-11);
        assert!((boundary_form(&b, &u, &v) + boundary_form(&b, &v, &u)).abs() < 1e-12);
    }

    #[test]
    fn zero_site_is_flat() {
        let s = SingleSite::zero();
        let (e, u) = e0_of_a(&s, &[0.1], 16).unwrap();
        assert!(e.abs() < 1e-10);
        assert!(u.iter().all(|x| (x - 1.0).abs() < 1e-8));
        let p = perturbation_identity(&s, 0.1, &[], 32, 6).unwrap();
        assert!(p.lhs.abs() < 1e-8 && p.rhs.abs() < 1e-8);
    }
}
