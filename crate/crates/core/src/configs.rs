//! Ground energies of multi-cell configurations: the periodic minimiser,
//! exhaustive one-dimensional enumeration, tube gaps, Neumann bracketing and
//! the face derivatives of ground states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{assemble, BoundaryCondition, BoxSpec};
use crate::error::Result;
use crate::landscape::{e0_of_a, ground_pair};
use crate::potential::{minimizer_block, nonmatching_pairs, DisplacementConfig, SingleSite};

/// Tolerance for deciding that a configuration reaches `E₀(a*)`.
pub const MATCH_TOL: f64 = 1e-6;

fn block_of(config: &DisplacementConfig, m: usize, bc: BoundaryCondition) -> Result<BoxSpec> {
    BoxSpec::block(config.lower().to_vec(), config.cells().to_vec(), m, bc)
}

/// `E₀(a*)` with `a* = (d_max, ..., d_max)`.
pub fn corner_energy(site: &SingleSite, d: usize, m: usize) -> Result<f64> {
    Ok(e0_of_a(site, &vec![site.d_max(); d], m)?.0)
}

/// Ground energy and L²-normalised positive ground state of a configuration.
pub fn ground_state(
    site: &SingleSite,
    config: &DisplacementConfig,
    bc: BoundaryCondition,
    m: usize,
) -> Result<(f64, Vec<f64>, BoxSpec)> {
    let b = block_of(config, m, bc)?;
    let (e, u) = ground_pair(&assemble(&b, config, site)?)?;
    Ok((e, u, b))
}

/// Ground energy only.
pub fn ground_energy(site: &SingleSite, config: &DisplacementConfig, bc: BoundaryCondition, m: usize) -> Result<f64> {
    let b = block_of(config, m, bc)?;
    Ok(ground_pair(&assemble(&b, config, site)?)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceNorm {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub axis: usize,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundReport {
    pub config: DisplacementConfig,
    pub bc: BoundaryCondition,
    pub m: usize,
    pub e0: f64,
    /// `(cell, ∫_cell |ψ|² / ∫ |ψ|²)` in cell order.
    pub mass_fractions: Vec<(Vec<i64>, f64)>,
    pub normal_derivative_norms: Vec<FaceNorm>,
}

/// Per-cell masses of a node field.
pub fn cell_masses(b: &BoxSpec, u: &[f64]) -> Vec<(Vec<i64>, f64)> {
    let total: f64 = u.iter().map(|x| x * x).sum();
    b.cell_list()
        .into_iter()
        .map(|c| {
            let s: f64 = b.cell_nodes(&c).unwrap().iter().map(|&i| u[i] * u[i]).sum();
            (c, s / total)
        })
        .collect()
}

/// L² norms over each internal cell face of the across-face difference
/// quotient `(u_{i+1} - u_i)/h`.
pub fn face_norms(b: &BoxSpec, u: &[f64]) -> Vec<FaceNorm> {
    let d = b.dim();
    let m = b.m();
    let h = b.h();
    let area = h.powi(d as i32 - 1);
    let mut out = Vec::new();
    for cell in b.cell_list() {
        let pos = b.cell_position(&cell).unwrap();
        for axis in 0..d {
            if pos[axis] + 1 >= b.cells()[axis] {
                continue;
            }
            let stride: usize = (0..axis).map(|k| b.axis_nodes(k)).product();
            let face_index = (pos[axis] + 1) * m - 1;
            let mut s = 0.0;
            for i in b.cell_nodes(&cell).unwrap() {
                if (i / stride) % b.axis_nodes(axis) == face_index {
                    let g = (u[i + stride] - u[i]) / h;
                    s += area * g * g;
                }
            }
            let mut nb = cell.clone();
            nb[axis] += 1;
            out.push(FaceNorm { a: cell.clone(), b: nb, axis, norm: s.sqrt() });
        }
    }
    out
}

pub fn box_ground(site: &SingleSite, config: &DisplacementConfig, bc: BoundaryCondition, m: usize) -> Result<GroundReport> {
    let (e0, u, b) = ground_state(site, config, bc, m)?;
    Ok(GroundReport {
        config: config.clone(),
        bc,
        m,
        e0,
        mass_fractions: cell_masses(&b, &u),
        normal_derivative_norms: face_norms(&b, &u),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicMinimizerReport {
    pub e0_corner_cell: f64,
    pub e0_period_cell: f64,
    pub gap: f64,
}

/// Compares `E₀(a*)` with the periodic ground energy of `ω*` on the period
/// cell `{0, 1}^d`.
pub fn verify_periodic_minimizer(site: &SingleSite, m: usize, d: usize) -> Result<PeriodicMinimizerReport> {
    let corner = corner_energy(site, d, m)?;
    let b = BoxSpec::block(vec![0; d], vec![2; d], m, BoundaryCondition::Periodic)?;
    let cfg = minimizer_block(&b, site.d_max());
    let period = ground_energy(site, &cfg, BoundaryCondition::Periodic, m)?;
    Ok(PeriodicMinimizerReport { e0_corner_cell: corner, e0_period_cell: period, gap: period - corner })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    /// `+` for displacement `+d_max`, `-` for `-d_max`.
    pub pattern: String,
    pub e0: f64,
    pub balanced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub period: usize,
    pub m: usize,
    pub e0_corner: f64,
    pub rows: Vec<PatternRow>,
    pub minimizers: Vec<String>,
    /// For even periods: minimisers are exactly the balanced patterns.
    /// For odd periods: no pattern reaches `E₀(a*)`.
    pub characterization_holds: bool,
    /// Smallest excess `e0 - E₀(a*)` among non-minimising patterns.
    pub margin: f64,
}

/// Periodic ground energies of all `2^period` corner patterns in one dimension.
pub fn enumerate_1d_periodic(site: &SingleSite, period: usize, m: usize) -> Result<EnumerationReport> {
    if period == 0 || period > 12 {
        return Err(crate::Error::InvalidArgument(format!("period {period} not in 1..=12")));
    }
    let e0_corner = corner_energy(site, 1, m)?;
    let dm = site.d_max();
    let b = BoxSpec::block(vec![0], vec![period], 1, BoundaryCondition::Periodic)?;
    let rows: Vec<PatternRow> = (0..1usize << period)
        .into_par_iter()
        .map(|bits| {
            let cfg = DisplacementConfig::from_fn(&b, |c| vec![if bits >> c[0] & 1 == 1 { -dm } else { dm }]);
            let e0 = ground_energy(site, &cfg, BoundaryCondition::Periodic, m)?;
            let pattern: String = (0..period).map(|k| if bits >> k & 1 == 1 { '-' } else { '+' }).collect();
            let plus = pattern.chars().filter(|&c| c == '+').count();
            Ok(PatternRow { pattern, e0, balanced: 2 * plus == period })
        })
        .collect::<Result<_>>()?;
    let minimizers: Vec<String> = rows
        .iter()
        .filter(|r| r.e0 <= e0_corner + MATCH_TOL)
        .map(|r| r.pattern.clone())
        .collect();
    let margin = rows
        .iter()
        .filter(|r| r.e0 > e0_corner + MATCH_TOL)
        .map(|r| r.e0 - e0_corner)
        .fold(f64::INFINITY, f64::min);
    let holds = if period.is_multiple_of(2) {
        let balanced: Vec<String> = rows.iter().filter(|r| r.balanced).map(|r| r.pattern.clone()).collect();
        minimizers == balanced && margin >= 10.0 * MATCH_TOL
    } else {
        minimizers.is_empty() && margin > 10.0 * MATCH_TOL
    };
    Ok(EnumerationReport { period, m, e0_corner, rows, minimizers, characterization_holds: holds, margin })
}

/// Tube of `1 × (2L+1)` cells along axis 1 with alternating displacements;
/// with `defect` the two cells at the lower end are displaced alike, giving
/// exactly one non-matching pair.
pub fn tube_config(d_max: f64, half_extent: usize, defect: bool) -> DisplacementConfig {
    let l = half_extent as i64;
    let b = BoxSpec::block(vec![0, -l], vec![1, 2 * half_extent + 1], 1, BoundaryCondition::Neumann).unwrap();
    DisplacementConfig::from_fn(&b, |c| {
        let k = if defect && c[1] == -l { c[1] + 1 } else { c[1] };
        let s = if k.rem_euclid(2) == 0 { d_max } else { -d_max };
        vec![d_max, s]
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeRow {
    pub half_extent: usize,
    pub gap: f64,
    pub scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    pub m: usize,
    pub e0_corner: f64,
    pub rows: Vec<TubeRow>,
    /// Geometric mean of `gap·L²`.
    pub fitted_c: f64,
    /// `max(gap·L²) / min(gap·L²)`.
    pub spread: f64,
}

/// Ground-energy excess of the one-defect tube over `E₀(a*)` for each `L`.
pub fn tube_gap(site: &SingleSite, half_extents: &[usize], m: usize, defect: bool) -> Result<TubeReport> {
    let e0_corner = corner_energy(site, 2, m)?;
    let rows: Vec<TubeRow> = half_extents
        .par_iter()
        .map(|&l| {
            let cfg = tube_config(site.d_max(), l, defect);
            let gap = ground_energy(site, &cfg, BoundaryCondition::Neumann, m)? - e0_corner;
            Ok(TubeRow { half_extent: l, gap, scaled: gap * (l * l) as f64 })
        })
        .collect::<Result<_>>()?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let fitted_c = (scaled.iter().map(|s| s.abs().ln()).sum::<f64>() / scaled.len() as f64).exp();
    Ok(TubeReport { m, e0_corner, rows, fitted_c, spread: max / min })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub box_e0: f64,
    pub min_cell_e0: f64,
    /// `min_n E₀(ω_n) - e0(box)`.
    pub residual: f64,
    /// `5·h·‖q‖_∞`.
    pub bound: f64,
}

/// Neumann bracketing: the box ground energy against the smallest
/// single-cell energy of its displacements.
pub fn bracketing_check(site: &SingleSite, config: &DisplacementConfig, m: usize) -> Result<BracketReport> {
    let box_e0 = ground_energy(site, config, BoundaryCondition::Neumann, m)?;
    let mut distinct: Vec<Vec<f64>> = config.iter().map(|(_, w)| w.to_vec()).collect();
    distinct.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    let energies: Vec<f64> = distinct
        .par_iter()
        .map(|w| Ok(e0_of_a(site, w, m)?.0))
        .collect::<Result<_>>()?;
    let min_cell_e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let d = config.dim();
    Ok(BracketReport {
        box_e0,
        min_cell_e0,
        residual: min_cell_e0 - box_e0,
        bound: 5.0 / m as f64 * site.sup_norm(d),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceReport {
    pub matched: bool,
    pub max_norm: f64,
    /// `10·h·‖ψ‖` with `‖ψ‖ = 1`.
    pub threshold: f64,
    pub faces: Vec<FaceNorm>,
}

/// Normal derivatives of the Neumann box ground state on internal faces.
pub fn cell_neumann_residual(site: &SingleSite, config: &DisplacementConfig, m: usize) -> Result<FaceReport> {
    let matched = nonmatching_pairs(config, site.d_max(), false)?.is_empty();
    let (_, u, b) = ground_state(site, config, BoundaryCondition::Neumann, m)?;
    let faces = face_norms(&b, &u);
    let max_norm = faces.iter().map(|f| f.norm).fold(0.0, f64::max);
    Ok(FaceReport { matched, max_norm, threshold: 10.0 / m as f64, faces })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessProbe {
    pub e0_corner: f64,
    pub matching_configs: usize,
    /// Largest excess over `E₀(a*)` among configurations without non-matching pairs.
    pub matching_max_gap: f64,
    /// Smallest excess among configurations with at least one non-matching pair.
    pub nonmatching_min_gap: f64,
}

/// All `4^4` corner configurations on the `2 × 2` periodic cell in two dimensions.
pub fn period2_uniqueness_probe(site: &SingleSite, m: usize) -> Result<UniquenessProbe> {
    let dm = site.d_max();
    let e0_corner = corner_energy(site, 2, m)?;
    let b = BoxSpec::block(vec![0, 0], vec![2, 2], 1, BoundaryCondition::Periodic)?;
    let rows: Vec<(bool, f64)> = (0..256usize)
        .into_par_iter()
        .map(|code| {
            let cfg = DisplacementConfig::from_fn(&b, |c| {
                let k = (c[0] + 2 * c[1]) as usize;
                let bits = code >> (2 * k) & 3;
                vec![if bits & 1 == 0 { dm } else { -dm }, if bits & 2 == 0 { dm } else { -dm }]
            });
            let matched = nonmatching_pairs(&cfg, dm, true)?.is_empty();
            let e = ground_energy(site, &cfg, BoundaryCondition::Periodic, m)?;
            Ok((matched, e - e0_corner))
        })
        .collect::<Result<_>>()?;
    let matching: Vec<f64> = rows.iter().filter(|r| r.0).map(|r| r.1).collect();
    Ok(UniquenessProbe {
        e0_corner,
        matching_configs: matching.len(),
        matching_max_gap: matching.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        nonmatching_min_gap: rows.iter().filter(|r| !r.0).map(|r| r.1).fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tube_has_one_defect() {
        let dm = 0.3;
        assert!(nonmatching_pairs(&tube_config(dm, 3, false), dm, false).unwrap().is_empty());
        let p = nonmatching_pairs(&tube_config(dm, 3, true), dm, false).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].a.clone(), p[0].b.clone()), (vec![0, -3], vec![0, -2]));
    }

    #[test]
    fn face_norms_vanish_for_constants() {
        let b = BoxSpec::cube(2, 1, 4, BoundaryCondition::Neumann).unwrap();
        let f = face_norms(&b, &vec![1.0; b.n_dofs()]);
        assert_eq!(f.len(), 12);
        assert!(f.iter().all(|x| x.norm == 0.0));
    }
}
