//! One function per subcommand, each turning a manifest into a table,
//! a report and a list of named checks.

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::{json, Value};

use rdm_core::configs::{
    bracketing_check, cell_neumann_residual, corner_energy, enumerate_1d_periodic, tube_gap, verify_periodic_minimizer,
};
use rdm_core::ids1d::{geometric_grid, ids_curve, tail_fit};
use rdm_core::landscape::{
    check_gradient_signs, coupling_curvature, monotone_integral, perturbation_identity, scan_landscape,
};
use rdm_core::potential::{is_corner, minimizer_config};
use rdm_core::stats::{
    corner_slope_c2, default_delta2, eigenfunction_decay, form_compare_c3, keybound_mc, lifshitz_mc,
    reference_energy, wegner_count_mc, McSetup,
};
use rdm_core::BoundaryCondition;

use crate::manifest::Manifest;

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

pub struct Outcome {
    pub table: Option<Table>,
    /// JSON-lines records written for Monte Carlo commands.
    pub log: Option<Vec<Value>>,
    pub report: Value,
    pub checks: Vec<Check>,
}

pub fn execute(m: &Manifest) -> Result<Outcome> {
    match m.command.as_str() {
        "landscape" => landscape(m),
        "perturb" => perturb(m),
        "minimizer" => minimizer(m),
        "enum1d" => enum1d(m),
        "tube" => tube(m),
        "lifshitz" => lifshitz(m),
        "wegner" => wegner(m),
        "keybound" => keybound(m),
        "ids" => ids(m),
        "decay" => decay(m),
        "constants" => constants(m),
        other => bail!("unknown command `{other}`"),
    }
}

fn setup(m: &Manifest) -> McSetup {
    McSetup { law: m.law.clone(), site: m.site.clone(), d: m.dim, m: m.resolution, trials: m.trials, seed: m.seed }
}

fn landscape(m: &Manifest) -> Result<Outcome> {
    let grid_res = m.get(m.grid_res, "grid_res")?;
    let table = scan_landscape(&m.site, m.dim, grid_res, m.resolution)?;
    let report = table.report();
    let signs = check_gradient_signs(&m.site, m.dim, grid_res, m.resolution)?;
    let d_max = m.site.d_max();
    let corners: Vec<usize> = (0..table.a_grid.len()).filter(|&i| is_corner(&table.a_grid[i], d_max)).collect();

    let mut columns: Vec<&'static str> = ["a0", "a1", "a2", "a3"][..m.dim.min(4)].to_vec();
    columns.push("e0");
    columns.extend(["grad0", "grad1", "grad2", "grad3"][..m.dim.min(4)].iter());
    let rows = table
        .a_grid
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut row: Vec<Value> = a.iter().map(|&x| json!(x)).collect();
            row.push(json!(table.e0[i]));
            if let Some(g) = &table.grad {
                row.extend(g[i].iter().map(|&x| json!(x)));
            }
            row
        })
        .collect();
    if table.grad.is_none() {
        columns.truncate(m.dim + 1);
    }
    let checks = vec![
        Check::new("argmax_at_origin", table.a_grid[report.argmax].iter().all(|&x| x == 0.0), format!("{:?}", table.a_grid[report.argmax])),
        Check::new("argmin_at_corners", report.min_set == corners, format!("{} minimisers, {} corners", report.min_set.len(), corners.len())),
        Check::new("corner_spread", report.corner_spread <= 1e-8, format!("{:e}", report.corner_spread)),
        Check::new("axis_monotonicity", report.monotonicity_violations == 0, report.monotonicity_violations.to_string()),
        Check::new("gradient_signs", signs.sign_mismatches == 0, format!("{} of {}", signs.sign_mismatches, signs.checked_components)),
        Check::new("gradient_agreement", signs.max_rel_diff <= 1e-3, format!("{:e}", signs.max_rel_diff)),
    ];
    let signs_summary = json!({
        "checked_components": signs.checked_components,
        "sign_mismatches": signs.sign_mismatches,
        "max_rel_diff": signs.max_rel_diff,
    });
    Ok(Outcome {
        table: Some(Table { columns, rows }),
        log: None,
        report: json!({ "landscape": report, "signs": signs_summary }),
        checks,
    })
}

fn perturb(m: &Manifest) -> Result<Outcome> {
    let k_max = m.get(m.k_max, "k_max")?;
    let d_max = m.site.d_max();
    let transverse = vec![0.0; m.dim.saturating_sub(1)];
    let points = [d_max / 4.0, d_max / 2.0, 3.0 * d_max / 4.0];
    let reports = points
        .iter()
        .map(|&a1| perturbation_identity(&m.site, a1, &transverse, m.resolution, k_max))
        .collect::<rdm_core::Result<Vec<_>>>()?;
    let grid: Vec<f64> = (-6..=6).map(|i| i as f64 * d_max / 8.0).collect();
    let monotone = monotone_integral(&m.site, &grid, &transverse, m.resolution, k_max)?;
    let coupling_points: Vec<Vec<f64>> = (0..3usize.pow(m.dim as u32))
        .map(|mut k| {
            (0..m.dim)
                .map(|_| {
                    let v = -d_max + d_max * (k % 3) as f64;
                    k /= 3;
                    v
                })
                .collect()
        })
        .collect();
    let coupling = coupling_points
        .iter()
        .map(|a| coupling_curvature(&m.site, a, m.resolution, BoundaryCondition::Neumann, k_max))
        .collect::<rdm_core::Result<Vec<_>>>()?;

    let rows = reports
        .iter()
        .map(|r| {
            vec![
                json!(r.a[0]), json!(r.e0), json!(r.e0_prime), json!(r.e0_second), json!(r.lhs),
                json!(r.rhs), json!(r.rhs_truncated), json!(r.rel_err), json!(r.rel_err_truncated),
            ]
        })
        .collect();
    let mut checks = Vec::new();
    for r in &reports {
        checks.push(Check::new(&format!("identity_a1={:.4}", r.a[0]), r.rel_err <= 0.05, format!("rel_err {:.4}", r.rel_err)));
        checks.push(Check::new(&format!("signs_a1={:.4}", r.a[0]), r.lhs <= 0.0 && r.rhs <= 0.0, format!("lhs {:e} rhs {:e}", r.lhs, r.rhs)));
    }
    Ok(Outcome {
        table: Some(Table {
            columns: vec!["a1", "e0", "e0_prime", "e0_second", "lhs", "rhs", "rhs_truncated", "rel_err", "rel_err_truncated"],
            rows,
        }),
        log: None,
        report: json!({ "points": reports, "monotone": monotone, "coupling": coupling }),
        checks,
    })
}

fn minimizer(m: &Manifest) -> Result<Outcome> {
    let periodic = verify_periodic_minimizer(&m.site, m.resolution, m.dim)?;
    let cfg = minimizer_config(m.dim, m.extent, m.site.d_max());
    let bracket = bracketing_check(&m.site, &cfg, m.resolution)?;
    let faces = cell_neumann_residual(&m.site, &cfg, m.resolution)?;
    let tol = if m.dim == 1 { 1e-6 } else { 1e-5 };
    let checks = vec![
        Check::new("corner_equals_period_cell", periodic.gap.abs() <= tol, format!("{:e}", periodic.gap)),
        Check::new("bracketing", bracket.residual.abs() <= bracket.bound, format!("{:e} vs {:e}", bracket.residual, bracket.bound)),
        Check::new("neumann_faces", faces.matched, format!("{:e} vs {:e}", faces.max_norm, faces.threshold)),
    ];
    Ok(Outcome {
        table: None,
        log: None,
        report: json!({
            "periodic": periodic,
            "bracketing": bracket,
            "faces": { "matched": faces.matched, "max_norm": faces.max_norm, "threshold": faces.threshold },
        }),
        checks,
    })
}

fn enum1d(m: &Manifest) -> Result<Outcome> {
    if m.dim != 1 {
        bail!("enum1d is one-dimensional; got --dim {}", m.dim);
    }
    let periods = m.periods.clone().unwrap_or_default();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for &p in &periods {
        let r = enumerate_1d_periodic(&m.site, p, m.resolution)?;
        for row in &r.rows {
            let is_min = r.minimizers.contains(&row.pattern);
            rows.push(vec![json!(p), json!(row.pattern), json!(row.e0), json!(row.balanced), json!(is_min)]);
        }
        checks.push(Check::new(&format!("period_{p}"), r.characterization_holds, format!("margin {:e}", r.margin)));
        summary.push(json!({ "period": p, "minimizers": r.minimizers, "margin": r.margin, "holds": r.characterization_holds, "e0_corner": r.e0_corner }));
    }
    Ok(Outcome {
        table: Some(Table { columns: vec!["period", "pattern", "e0", "balanced", "minimizer"], rows }),
        log: None,
        report: json!({ "periods": summary }),
        checks,
    })
}

fn tube(m: &Manifest) -> Result<Outcome> {
    let mut ls = Vec::new();
    let mut l = 2;
    while l <= m.extent {
        ls.push(l);
        l *= 2;
    }
    let r = tube_gap(&m.site, &ls, m.resolution, m.get(m.defect, "defect")?)?;
    let rows = r.rows.iter().map(|row| vec![json!(row.half_extent), json!(row.gap), json!(row.scaled)]).collect();
    let checks = vec![
        Check::new("gaps_positive", r.rows.iter().all(|row| row.gap > 0.0), format!("{:?}", r.rows.iter().map(|x| x.gap).collect::<Vec<_>>())),
        Check::new("scaled_band", r.spread <= 3.0, format!("spread {:.3}", r.spread)),
    ];
    Ok(Outcome {
        table: Some(Table { columns: vec!["L", "gap", "gap_L2"], rows }),
        log: None,
        report: json!({ "m": r.m, "e0_corner": r.e0_corner, "fitted_c": r.fitted_c, "spread": r.spread }),
        checks,
    })
}

fn lifshitz(m: &Manifest) -> Result<Outcome> {
    let s = setup(m);
    let e0 = reference_energy(&s)?;
    let c1 = m.get(m.c1, "c1")?;
    let ls: Vec<usize> = (1..=m.extent).collect();
    let rs = lifshitz_mc(&s, &ls, c1, e0)?;
    let rows = rs
        .iter()
        .map(|r| {
            vec![
                json!(r.half_extent), json!(r.trials), json!(r.hits), json!(r.estimate),
                json!(r.ci95.0), json!(r.ci95.1), json!(r.threshold), json!(r.completed),
            ]
        })
        .collect();
    let mut checks = vec![Check::new("completed", rs.iter().all(|r| r.completed), format!("{} failures", rs.iter().map(|r| r.failures).sum::<usize>()))];
    for w in rs.windows(2) {
        // nonincreasing, or within overlapping intervals
        let ok = w[1].estimate <= w[0].estimate || w[1].ci95.0 <= w[0].ci95.1;
        checks.push(Check::new(
            &format!("decrease_L{}_L{}", w[0].half_extent, w[1].half_extent),
            ok,
            format!("{} -> {}", w[0].estimate, w[1].estimate),
        ));
    }
    if let (Some(a), Some(b)) = (rs.first(), rs.last()) {
        if rs.len() > 1 {
            checks.push(Check::new("separated_extremes", b.ci95.1 < a.ci95.0, format!("{:?} vs {:?}", a.ci95, b.ci95)));
        }
    }
    Ok(Outcome {
        table: Some(Table { columns: vec!["L", "trials", "hits", "estimate", "ci_lo", "ci_hi", "threshold", "completed"], rows }),
        log: Some(rs.iter().map(|r| serde_json::to_value(r).expect("summary")).collect()),
        report: json!({ "e0": e0, "c1": c1 }),
        checks,
    })
}

fn wegner(m: &Manifest) -> Result<Outcome> {
    let s = setup(m);
    let e0 = reference_energy(&s)?;
    let width = m.get(m.interval_width, "interval_width")?;
    let halvings = m.get(m.halvings, "halvings")?;
    let center = e0 + width / 2.0;
    let mut intervals: Vec<(f64, f64)> = (0..=halvings)
        .map(|k| {
            let w = width / 2f64.powi(k as i32);
            (center - w / 2.0, center + w / 2.0)
        })
        .collect();
    intervals.push((e0 - 2.0, e0 - 1.0));
    let r = wegner_count_mc(&s, &[m.extent], &intervals)?;
    let rows = r
        .rows
        .iter()
        .map(|row| vec![json!(row.half_extent), json!(row.lo), json!(row.hi), json!(row.hi - row.lo), json!(row.mean_count), json!(row.total_count)])
        .collect();
    let nested = &r.rows[..=halvings];
    let mut checks = vec![
        Check::new("nested_monotone", r.nested_monotone, ""),
        Check::new("below_spectrum_empty", r.rows[halvings + 1].total_count == 0, r.rows[halvings + 1].total_count.to_string()),
    ];
    for w in nested.windows(2) {
        checks.push(Check::new(
            &format!("halving_width_{}", w[1].hi - w[1].lo),
            w[1].mean_count < w[0].mean_count,
            format!("{} -> {}", w[0].mean_count, w[1].mean_count),
        ));
    }
    Ok(Outcome {
        table: Some(Table { columns: vec!["L", "lo", "hi", "width", "mean_count", "total_count"], rows }),
        log: Some(r.rows.iter().map(|row| serde_json::to_value(row).expect("row")).collect()),
        report: json!({ "e0": e0, "interval_exponents": r.interval_exponents, "volume_exponent": r.volume_exponent }),
        checks,
    })
}

fn keybound(m: &Manifest) -> Result<Outcome> {
    let s = setup(m);
    let e0 = reference_energy(&s)?;
    let delta2 = match m.delta2 {
        Some(v) => v,
        None => default_delta2(&m.site, m.dim, m.resolution)?,
    };
    let r = keybound_mc(&s, m.extent, e0, delta2)?;
    let rows: Vec<Vec<Value>> = r.trials.iter().enumerate().map(|(t, x)| vec![json!(t), json!(x.0), json!(x.1), json!(x.2)]).collect();
    let checks = vec![Check::new("delta1_positive", r.delta1 > 0.0, format!("delta1 {} over {} scored", r.delta1, r.scored))];
    Ok(Outcome {
        log: Some(rows.iter().map(|row| json!({ "trial": row[0], "gap": row[1], "s": row[2], "scored": row[3] })).collect()),
        table: Some(Table { columns: vec!["trial", "gap", "s", "scored"], rows }),
        report: json!({
            "e0": e0, "delta2": r.delta2, "r0": r.r0, "scored": r.scored, "boundary_cases": r.boundary_cases,
            "min": r.min, "median": r.median, "delta1": r.delta1,
        }),
        checks,
    })
}

fn ids(m: &Manifest) -> Result<Outcome> {
    if m.dim != 1 {
        bail!("ids is one-dimensional; got --dim {}", m.dim);
    }
    let e0 = corner_energy(&m.site, 1, m.resolution)?;
    let scale = if m.site.amplitude > 0.0 { m.site.amplitude } else { 1.0 };
    let grid = geometric_grid(e0, m.get(m.ids_lo, "ids_lo")? * scale, m.get(m.ids_hi, "ids_hi")? * scale, m.get(m.ids_points, "ids_points")?);
    let curve = ids_curve(&m.law, &m.site, m.extent, &grid, m.trials, m.seed, m.resolution)?;
    let fit = tail_fit(&curve, e0);
    let rows: Vec<Vec<Value>> = curve.e_grid.iter().zip(&curve.n_of_e).map(|(e, n)| vec![json!(e), json!(e - e0), json!(n)]).collect();
    let nondecreasing = curve.n_of_e.windows(2).all(|w| w[0] <= w[1]);
    let mut checks = vec![Check::new("nondecreasing", nondecreasing, "")];
    let fit_json = match &fit {
        Ok(f) => {
            checks.push(Check::new("fat_tail", f.beta < 0.5, format!("beta {:.4}", f.beta)));
            serde_json::to_value(f)?
        }
        Err(e) => {
            checks.push(Check::new("fat_tail", false, e.to_string()));
            json!({ "error": e.to_string() })
        }
    };
    Ok(Outcome {
        log: Some(rows.iter().map(|r| json!({ "e": r[0], "n": r[2] })).collect()),
        table: Some(Table { columns: vec!["e", "e_minus_e0", "n"], rows }),
        report: json!({ "e0": e0, "tail_fit": fit_json }),
        checks,
    })
}

fn decay(m: &Manifest) -> Result<Outcome> {
    let r = eigenfunction_decay(&setup(m), m.extent, m.get(m.n_eigs, "n_eigs")?)?;
    let rows: Vec<Vec<Value>> = r
        .rows
        .iter()
        .map(|row| {
            let cell: Vec<String> = row.max_cell.iter().map(|c| c.to_string()).collect();
            vec![json!(row.trial), json!(row.level), json!(row.energy), json!(cell.join(";")), json!(row.rate)]
        })
        .collect();
    let checks = vec![Check::new("majority_decaying", r.positive_fraction > 0.5, format!("{}", r.positive_fraction))];
    Ok(Outcome {
        log: Some(r.rows.iter().map(|row| serde_json::to_value(row).expect("row")).collect()),
        table: Some(Table { columns: vec!["trial", "level", "energy", "max_cell", "rate"], rows }),
        report: json!({ "positive_fraction": r.positive_fraction }),
        checks,
    })
}

fn constants(m: &Manifest) -> Result<Outcome> {
    let table = scan_landscape(&m.site, m.dim, m.get(m.grid_res, "grid_res")?, m.resolution)?;
    let c2 = corner_slope_c2(&table)?;
    let s = setup(m);
    let c3 = form_compare_c3(&s, m.extent, reference_energy(&s)?)?;
    let checks = vec![
        Check::new("c2_finite", c2.is_finite(), format!("{c2}")),
        Check::new("c3_finite", c3.c3.is_finite() || c3.ratios.is_empty(), format!("{}", c3.c3)),
        Check::new("no_flagged_trials", c3.flagged.is_empty(), format!("{:?}", c3.flagged)),
    ];
    Ok(Outcome {
        table: None,
        log: None,
        report: json!({ "c2": c2, "c3": c3.c3, "c3_excluded": c3.excluded, "c3_ratios": c3.ratios, "c3_gaps": c3.gaps }),
        checks,
    })
}
