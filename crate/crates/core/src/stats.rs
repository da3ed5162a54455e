//! Monte Carlo experiments over random displacement configurations.
//!
//! Trial `t` at half-extent `L` draws its configuration from the stream
//! `(seed, experiment tag, L, t, cell)`, trials run in parallel and results
//! are gathered in trial order, so every summary is independent of the
//! thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configs::corner_energy;
use crate::discretize::{assemble, BoundaryCondition, BoxSpec, DiscreteOperator};
use crate::eigen::{smallest_eigs, InertiaCounter};
use crate::error::{Error, Result};
use crate::landscape::{ground_pair, l2_eigenpairs, LandscapeTable, TOL};
use crate::potential::{corner_projection, DisplacementConfig, DisplacementLaw, Sample, SingleSite};

/// Stream tags keeping the experiments' random draws apart.
pub mod tag {
    pub const LIFSHITZ: u64 = 1;
    pub const FORM_COMPARE: u64 = 2;
    pub const WEGNER: u64 = 3;
    pub const KEYBOUND: u64 = 4;
    pub const DECAY: u64 = 5;
    pub const IDS: u64 = 6;
    pub const CALIBRATION: u64 = 7;
}

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Common inputs of the Monte Carlo experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSetup {
    pub law: DisplacementLaw,
    pub site: SingleSite,
    pub d: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
}

impl McSetup {
    pub fn config(&self, tag: u64, half_extent: usize, trial: usize) -> Result<DisplacementConfig> {
        self.law.validate(self.site.d_max())?;
        let b = BoxSpec::cube(self.d, half_extent, 1, BoundaryCondition::Neumann)?;
        Ok(self.law.sample_block(self.site.d_max(), &b, self.seed, &[tag, half_extent as u64, trial as u64]))
    }

    pub fn operator(&self, config: &DisplacementConfig, bc: BoundaryCondition) -> Result<DiscreteOperator> {
        let half_extent = config.extent().expect("cube configuration");
        assemble(&BoxSpec::cube(self.d, half_extent, self.m, bc)?, config, &self.site)
    }

    fn run<T: Send>(&self, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Vec<Result<T>> {
        (0..self.trials).into_par_iter().map(f).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub half_extent: usize,
    pub trials: usize,
    pub hits: usize,
    pub estimate: f64,
    pub ci95: (f64, f64),
    pub seed: u64,
    pub threshold: f64,
    /// False when some trial failed; the estimate then covers the trials that ran.
    pub completed: bool,
    pub failures: usize,
}

/// Fraction of configurations with `min σ(H^N_{ω,L}) < E₀ + c1/L²`, decided
/// by one inertia count per trial.
pub fn lifshitz_mc(setup: &McSetup, half_extents: &[usize], c1: f64, e0: f64) -> Result<Vec<McSummary>> {
    half_extents
        .iter()
        .map(|&l| {
            if l == 0 {
                return Err(Error::InvalidArgument("Lifshitz experiment needs L ≥ 1".into()));
            }
            let threshold = e0 + c1 / (l * l) as f64;
            let out = setup.run(|t| {
                let op = setup.operator(&setup.config(tag::LIFSHITZ, l, t)?, BoundaryCondition::Neumann)?;
                Ok(InertiaCounter::new(op.matrix()).count(threshold)?.count >= 1)
            });
            let failures = out.iter().filter(|r| r.is_err()).count();
            let ran = setup.trials - failures;
            let hits = out.iter().filter(|r| matches!(r, Ok(true))).count();
            Ok(McSummary {
                half_extent: l,
                trials: ran,
                hits,
                estimate: if ran > 0 { hits as f64 / ran as f64 } else { 0.0 },
                ci95: wilson(hits, ran, Z95),
                seed: setup.seed,
                threshold,
                completed: failures == 0,
                failures,
            })
        })
        .collect()
}

/// Median of `(min σ(H^N_{ω,L}) - E₀)·L²` over calibration trials, used to
/// fix the Lifshitz constant once per site and resolution.
pub fn calibrate_c1(setup: &McSetup, half_extent: usize, e0: f64) -> Result<f64> {
    let mut scaled: Vec<f64> = setup
        .run(|t| {
            let op = setup.operator(&setup.config(tag::CALIBRATION, half_extent, t)?, BoundaryCondition::Neumann)?;
            Ok((ground_pair(&op)?.0 - e0) * (half_extent * half_extent) as f64)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    scaled.sort_by(f64::total_cmp);
    Ok(median_sorted(&scaled))
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `C₂ = max D(a)/(E₀(a) - E₀)` over table points off the corners.
pub fn corner_slope_c2(table: &LandscapeTable) -> Result<f64> {
    let d_max = table.site.d_max();
    let e0 = table
        .a_grid
        .iter()
        .zip(&table.e0)
        .filter(|(a, _)| crate::potential::is_corner(a, d_max))
        .map(|(_, e)| *e)
        .fold(f64::INFINITY, f64::min);
    if !e0.is_finite() {
        return Err(Error::InvalidArgument("landscape table has no corner points".into()));
    }
    let h = table.h();
    let flat = h * h * table.site.sup_norm(table.d);
    let spread = table.e0.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - e0;
    if spread <= flat {
        return Err(Error::FlatLandscapeSuspected(format!(
            "table spread {spread:e} is within the flatness threshold {flat:e}"
        )));
    }
    let mut c2 = 0.0f64;
    for (a, e) in table.a_grid.iter().zip(&table.e0) {
        let (_, dist) = corner_projection(a, d_max);
        if dist <= 1e-12 {
            continue;
        }
        let excess = e - e0;
        if excess <= 1e-10 {
            if dist > d_max / 8.0 {
                return Err(Error::FlatLandscapeSuspected(format!(
                    "E0(a) - E0 = {excess:e} at a = {a:?} with D(a) = {dist}"
                )));
            }
            return Err(Error::Inconclusive(format!("no energy excess near the corner at a = {a:?}")));
        }
        c2 = c2.max(dist / excess);
    }
    Ok(c2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormCompareReport {
    /// Per trial: (original gap, projected gap).
    pub gaps: Vec<(f64, f64)>,
    /// Projected over original gap, for trials whose original gap exceeds `1e-8`.
    pub ratios: Vec<f64>,
    pub c3: f64,
    /// Trials whose original gap is negative beyond tolerance.
    pub flagged: Vec<usize>,
    pub excluded: usize,
}

/// Compares ground energies of configurations and of their corner projections.
pub fn form_compare_c3(setup: &McSetup, half_extent: usize, e0: f64) -> Result<FormCompareReport> {
    let d_max = setup.site.d_max();
    let gaps: Vec<(f64, f64)> = setup
        .run(|t| {
            let cfg = setup.config(tag::FORM_COMPARE, half_extent, t)?;
            let g = ground_pair(&setup.operator(&cfg, BoundaryCondition::Neumann)?)?.0 - e0;
            let proj = cfg.corner_projected(d_max);
            let gc = if proj == cfg {
                g
            } else {
                ground_pair(&setup.operator(&proj, BoundaryCondition::Neumann)?)?.0 - e0
            };
            Ok((g, gc))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let mut ratios = Vec::new();
    let mut flagged = Vec::new();
    let mut excluded = 0;
    for (t, &(g, gc)) in gaps.iter().enumerate() {
        if g < -1e-6 {
            flagged.push(t);
        }
        if g > 1e-8 {
            ratios.push(gc / g);
        } else {
            excluded += 1;
        }
    }
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(Error::Inconclusive("non-finite gap ratio".into()));
    }
    let c3 = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FormCompareReport { gaps, ratios, c3, flagged, excluded })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerRow {
    pub half_extent: usize,
    pub lo: f64,
    pub hi: f64,
    pub mean_count: f64,
    pub total_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerReport {
    pub rows: Vec<WegnerRow>,
    /// Slope of log E[count] against log|I| per half-extent.
    pub interval_exponents: Vec<(usize, Option<f64>)>,
    /// Slope of log E[count] against log L^d at the widest interval.
    pub volume_exponent: Option<f64>,
    /// Per trial and interval, whether `count_I ≤ count_J` whenever `I ⊂ J`.
    pub nested_monotone: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx)
}

/// Mean eigenvalue counts in each interval `[lo, hi)` from inertia differences.
pub fn wegner_count_mc(setup: &McSetup, half_extents: &[usize], intervals: &[(f64, f64)]) -> Result<WegnerReport> {
    let mut rows = Vec::new();
    let mut nested_monotone = true;
    let mut interval_exponents = Vec::new();
    for &l in half_extents {
        let counts: Vec<Vec<usize>> = setup
            .run(|t| {
                let op = setup.operator(&setup.config(tag::WEGNER, l, t)?, BoundaryCondition::Neumann)?;
                let c = InertiaCounter::new(op.matrix());
                intervals
                    .iter()
                    .map(|&(lo, hi)| Ok(c.count(hi)?.count - c.count(lo)?.count.min(c.count(hi)?.count)))
                    .collect()
            })
            .into_iter()
            .collect::<Result<_>>()?;
        for per in &counts {
            for (i, a) in intervals.iter().enumerate() {
                for (j, b) in intervals.iter().enumerate() {
                    if b.0 <= a.0 && a.1 <= b.1 && per[i] > per[j] {
                        nested_monotone = false;
                    }
                }
            }
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            let total: usize = counts.iter().map(|c| c[i]).sum();
            let mean = total as f64 / setup.trials as f64;
            if mean > 0.0 {
                xs.push((hi - lo).ln());
                ys.push(mean.ln());
            }
            rows.push(WegnerRow { half_extent: l, lo, hi, mean_count: mean, total_count: total });
        }
        interval_exponents.push((l, slope(&xs, &ys)));
    }
    let widest = (0..intervals.len())
        .max_by(|&a, &b| (intervals[a].1 - intervals[a].0).total_cmp(&(intervals[b].1 - intervals[b].0)));
    let volume_exponent = widest.and_then(|w| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.lo == intervals[w].0 && r.hi == intervals[w].1 && r.mean_count > 0.0)
            .map(|r| ((((2 * r.half_extent + 1) as f64).powi(setup.d as i32)).ln(), r.mean_count.ln()))
            .unzip();
        slope(&xs, &ys)
    });
    Ok(WegnerReport { rows, interval_exponents, volume_exponent, nested_monotone })
}

/// C¹ cutoff: 1 below `r0`, 0 above `2·r0`, smoothstep in between.
pub fn eta(t: f64, r0: f64) -> f64 {
    if t <= r0 {
        1.0
    } else if t >= 2.0 * r0 {
        0.0
    } else {
        let s = (t - r0) / r0;
        1.0 - 3.0 * s * s + 2.0 * s * s * s
    }
}

/// Half of the spectral gap above the ground energy of the `ω*` period cell.
pub fn default_delta2(site: &SingleSite, d: usize, m: usize) -> Result<f64> {
    let b = BoxSpec::block(vec![0; d], vec![2; d], m, BoundaryCondition::Periodic)?;
    let op = assemble(&b, &crate::potential::minimizer_block(&b, site.d_max()), site)?;
    let r = smallest_eigs(&op, 2, TOL)?;
    Ok(0.5 * (r.values[1] - r.values[0]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyboundReport {
    pub delta2: f64,
    pub r0: f64,
    /// Per trial `(ground energy - E₀, S(ψ)/‖ψ‖², scored)`.
    pub trials: Vec<(f64, f64, bool)>,
    pub scored: usize,
    /// Trials with every displacement exactly at a corner (field vanishes).
    pub boundary_cases: usize,
    pub min: f64,
    pub median: f64,
    pub delta1: f64,
}

/// Node values of the vector field `Σ_n η(|c(ω_n) - ω_n|)·unit(c - ω_n)·∇q(x - n - ω_n)`.
pub fn vector_field(site: &SingleSite, config: &DisplacementConfig, m: usize, r0: f64) -> Result<Vec<f64>> {
    let b = BoxSpec::block(config.lower().to_vec(), config.cells().to_vec(), m, BoundaryCondition::Neumann)?;
    let d_max = site.d_max();
    b.scatter_cells(|cell| {
        let w = config.get(cell).ok_or_else(|| Error::MissingCell { cell: cell.to_vec() })?;
        let (c, dist) = corner_projection(w, d_max);
        if dist == 0.0 {
            return Ok(None);
        }
        let weight = eta(dist, r0);
        if weight == 0.0 {
            return Ok(None);
        }
        let mut out = vec![0.0; m.pow(w.len() as u32)];
        for j in 0..w.len() {
            let u = (c[j] - w[j]) / dist;
            if u == 0.0 {
                continue;
            }
            let g = site.cell_samples(w, m, Sample::Partial(j));
            out.iter_mut().zip(&g).for_each(|(o, gj)| *o += weight * u * gj);
        }
        Ok(Some(out))
    })
}

/// `S(ψ) = ⟨ψ, W_ω ψ⟩/‖ψ‖²` for ground states passing the energy filter.
pub fn keybound_mc(setup: &McSetup, half_extent: usize, e0: f64, delta2: f64) -> Result<KeyboundReport> {
    let r0 = setup.site.d_max() / 4.0;
    let trials: Vec<(f64, f64, bool)> = setup
        .run(|t| {
            let cfg = setup.config(tag::KEYBOUND, half_extent, t)?;
            let op = setup.operator(&cfg, BoundaryCondition::Neumann)?;
            let (e, psi) = ground_pair(&op)?;
            let w = vector_field(&setup.site, &cfg, setup.m, r0)?;
            let b = op.box_spec();
            let s = b.inner(&psi, &psi.iter().zip(&w).map(|(p, x)| p * x).collect::<Vec<_>>());
            let boundary = w.iter().all(|&x| x == 0.0) && cfg.iter().all(|(_, a)| corner_projection(a, setup.site.d_max()).1 == 0.0);
            Ok((e - e0, s, !boundary))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let boundary_cases = trials.iter().filter(|t| !t.2).count();
    let trials: Vec<(f64, f64, bool)> = trials.into_iter().map(|(g, s, ok)| (g, s, ok && g <= delta2)).collect();
    let mut scored: Vec<f64> = trials.iter().filter(|t| t.2).map(|t| t.1).collect();
    if scored.is_empty() {
        let mut gaps: Vec<f64> = trials.iter().map(|t| t.0).collect();
        gaps.sort_by(f64::total_cmp);
        let quartiles = [0.25, 0.5, 0.75].map(|q| gaps.get(((gaps.len().max(1) - 1) as f64 * q) as usize).copied().unwrap_or(f64::NAN));
        return Err(Error::Inconclusive(format!(
            "no scored trial ({boundary_cases} boundary cases, delta2 = {delta2}); gap quartiles {quartiles:?}"
        )));
    }
    scored.sort_by(f64::total_cmp);
    let min = scored[0];
    Ok(KeyboundReport {
        delta2,
        r0,
        scored: scored.len(),
        boundary_cases,
        min,
        median: median_sorted(&scored),
        delta1: min,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub trial: usize,
    pub level: usize,
    pub energy: f64,
    pub max_cell: Vec<i64>,
    /// Minus the slope of ln(cell mass) against distance from `max_cell`.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Fraction of trials whose lowest eigenvector has a positive fitted rate.
    pub positive_fraction: f64,
}

/// Exponential fit of the per-cell mass of the lowest eigenvectors.
pub fn decay_rate(b: &BoxSpec, u: &[f64]) -> (Vec<i64>, f64) {
    let masses = crate::configs::cell_masses(b, u);
    let (max_cell, _) = masses.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = masses
        .iter()
        .filter(|(_, w)| *w > 1e-300)
        .map(|(c, w)| {
            let dist = c.iter().zip(&max_cell).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>().sqrt();
            (dist, w.ln())
        })
        .unzip();
    (max_cell, -slope(&xs, &ys).unwrap_or(0.0))
}

pub fn eigenfunction_decay(setup: &McSetup, half_extent: usize, n_eigs: usize) -> Result<DecayReport> {
    let rows: Vec<Vec<DecayRow>> = setup
        .run(|t| {
            let op = setup.operator(&setup.config(tag::DECAY, half_extent, t)?, BoundaryCondition::Neumann)?;
            let r = if op.potential_values().iter().all(|&v| v == 0.0) {
                let (e, u) = ground_pair(&op)?;
                crate::eigen::EigenResult { values: vec![e], vectors: vec![u], residual_norms: vec![0.0], iterations: 0 }
            } else {
                l2_eigenpairs(&op, n_eigs)?
            };
            Ok(r.values
                .iter()
                .zip(&r.vectors)
                .enumerate()
                .map(|(k, (e, u))| {
                    let (max_cell, rate) = decay_rate(op.box_spec(), u);
                    DecayRow { trial: t, level: k, energy: *e, max_cell, rate }
                })
                .collect())
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let positive = rows.iter().filter(|r| r[0].rate > 0.0).count();
    Ok(DecayReport { positive_fraction: positive as f64 / rows.len().max(1) as f64, rows: rows.into_iter().flatten().collect() })
}

/// `E₀(a*)` at the setup's resolution.
pub fn reference_energy(setup: &McSetup) -> Result<f64> {
    corner_energy(&setup.site, setup.d, setup.m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 10), (3, 10), (10, 10), (57, 200)] {
            let (lo, hi) = wilson(h, n, Z95);
            let p = h as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn eta_is_c1() {
        let r0 = 0.075;
        for t in [r0, 2.0 * r0] {
            let e = 1e-7;
            assert!((eta(t - e, r0) - eta(t + e, r0)).abs() < 1e-9);
            let left = (eta(t, r0) - eta(t - e, r0)) / e;
            let right = (eta(t + e, r0) - eta(t, r0)) / e;
            assert!((left - right).abs() < 1e-3);
        }
    }

    #[test]
    fn slope_of_a_line() {
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-14);
    }
}
