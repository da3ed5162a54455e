//! Integrated density of states of long 1D Neumann chains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{assemble, BoundaryCondition, BoxSpec};
use crate::eigen::InertiaCounter;
use crate::error::{Error, Result};
use crate::potential::{DisplacementLaw, SingleSite};
use crate::stats::tag;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub e_grid: Vec<f64>,
    /// States per unit length below each grid energy.
    pub n_of_e: Vec<f64>,
    pub half_extent: usize,
    pub trials: usize,
    pub m: usize,
    pub law: DisplacementLaw,
    pub seed: u64,
}

/// Geometric grid `E₀ + x`, `x` from `lo` to `hi` in `n` points.
pub fn geometric_grid(e0: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n).map(|i| e0 + lo * (r * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Mean eigenvalue count per cell of `H^N` on `[-L, L]`, one Sturm count per
/// trial and energy.
pub fn ids_curve(
    law: &DisplacementLaw,
    site: &SingleSite,
    half_extent: usize,
    e_grid: &[f64],
    trials: usize,
    seed: u64,
    m: usize,
) -> Result<IdsCurve> {
    if trials == 0 {
        return Err(Error::InvalidArgument("ids_curve needs at least one trial".into()));
    }
    if e_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("energy grid must be ascending".into()));
    }
    let d_max = site.d_max();
    law.validate(d_max)?;
    let cells = BoxSpec::cube(1, half_extent, 1, BoundaryCondition::Neumann)?;
    let b = BoxSpec::cube(1, half_extent, m, BoundaryCondition::Neumann)?;
    let counts: Vec<Vec<usize>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = law.sample_block(d_max, &cells, seed, &[tag::IDS, half_extent as u64, t as u64]);
            let op = assemble(&b, &cfg, site)?;
            let counter = InertiaCounter::new(op.matrix());
            e_grid.iter().map(|&e| Ok(counter.count(e)?.count)).collect()
        })
        .collect::<Result<_>>()?;
    let volume = (2 * half_extent + 1) as f64;
    let n_of_e = (0..e_grid.len())
        .map(|i| counts.iter().map(|c| c[i]).sum::<usize>() as f64 / (trials as f64 * volume))
        .collect();
    Ok(IdsCurve {
        e_grid: e_grid.to_vec(),
        n_of_e,
        half_extent,
        trials,
        m,
        law: law.clone(),
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModel {
    Log,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// `C` in `N(E) ≈ C/(log(E - E₀))²`.
    pub c_log: f64,
    /// `A` and `β` in `N(E) ≈ A·(E - E₀)^β`.
    pub c_pow: f64,
    pub beta: f64,
    /// RMS residuals of `log N` under each model.
    pub residual_log: f64,
    pub residual_pow: f64,
    pub preferred: TailModel,
    pub points: usize,
}

/// Fits the tail on grid energies in `(E₀, E₀ + 0.5]` with nonzero counts.
pub fn tail_fit(curve: &IdsCurve, e0: f64) -> Result<TailFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = curve
        .e_grid
        .iter()
        .zip(&curve.n_of_e)
        .filter(|(e, n)| **e > e0 && **e - e0 <= 0.5 && **n > 0.0)
        .map(|(e, n)| ((e - e0).ln(), n.ln()))
        .unzip();
    if x.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} usable grid energies in (E0, E0 + 0.5], need 8",
            x.len()
        )));
    }
    let k = x.len() as f64;
    // log N = log C - 2 log|log(E - E0)|: only the intercept is free.
    let shifted: Vec<f64> = x.iter().zip(&y).map(|(lx, ly)| ly + 2.0 * lx.abs().ln()).collect();
    let ln_c = shifted.iter().sum::<f64>() / k;
    let residual_log = (shifted.iter().map(|s| (s - ln_c).powi(2)).sum::<f64>() / k).sqrt();

    let beta = crate::stats::slope(&x, &y).ok_or_else(|| Error::InsufficientData("degenerate energy grid".into()))?;
    let ln_a = (y.iter().sum::<f64>() - beta * x.iter().sum::<f64>()) / k;
    let residual_pow = (x.iter().zip(&y).map(|(lx, ly)| (ly - ln_a - beta * lx).powi(2)).sum::<f64>() / k).sqrt();

    Ok(TailFit {
        c_log: ln_c.exp(),
        c_pow: ln_a.exp(),
        beta,
        residual_log,
        residual_pow,
        preferred: if residual_log <= residual_pow { TailModel::Log } else { TailModel::Power },
        points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> IdsCurve {
        let e_grid = geometric_grid(0.0, 1e-3, 0.5, 16);
        IdsCurve {
            n_of_e: e_grid.iter().map(|&e| f(e)).collect(),
            e_grid,
            half_extent: 0,
            trials: 1,
            m: 0,
            law: DisplacementLaw::CornerUniform,
            seed: 0,
        }
    }

    #[test]
    fn recovers_log_model() {
        let fit = tail_fit(&synthetic(|x| 0.2 / x.ln().powi(2)), 0.0).unwrap();
        assert!((fit.c_log - 0.2).abs() < 0.01);
        assert_eq!(fit.preferred, TailModel::Log);
    }

    #[test]
    fn recovers_power_model() {
        let fit = tail_fit(&synthetic(f64::sqrt), 0.0).unwrap();
        assert!((fit.beta - 0.5).abs() < 0.05);
        assert_eq!(fit.preferred, TailModel::Power);
    }

    #[test]
    fn too_few_points() {
        let mut c = synthetic(f64::sqrt);
        c.n_of_e.iter_mut().skip(4).for_each(|n| *n = 0.0);
        assert!(matches!(tail_fit(&c, 0.0), Err(Error::InsufficientData(_))));
    }
}
