//! Single-site potentials, displacement configurations and laws, corner
//! geometry and the matching relation between neighbouring cells.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::discretize::BoxSpec;
use crate::error::{Error, Result};
use crate::quadrature::{cell_rule, GaussLegendre};
use crate::rng;

/// Radial profile `φ(ρ) = 1 + c·exp(1 - 1/(1 - (ρ/R)²))` for `ρ < R`, `φ = 1` beyond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub height: f64,
    pub radius: f64,
}

impl RadialProfile {
    /// Value of `φ` at distance `rho` from the centre.
    pub fn value(&self, rho: f64) -> f64 {
        let s = rho / self.radius;
        if s >= 1.0 {
            return 1.0;
        }
        1.0 + self.height * bump1(s)
    }

    fn parts(&self, rho: f64) -> Option<(f64, f64, f64)> {
        let s = rho / self.radius;
        if s >= 1.0 {
            return None;
        }
        let w = 1.0 - s * s;
        Some((s, w, bump1(s)))
    }

    /// `(Δφ)(ρ)` in dimension `d`.
    pub fn laplacian(&self, rho: f64, d: usize) -> f64 {
        let Some((s, w, g)) = self.parts(rho) else { return 0.0 };
        let p = 4.0 * s * s / w.powi(4) - 2.0 / (w * w) - 8.0 * s * s / w.powi(3);
        let r = self.radius;
        self.height / (r * r) * g * (p + (d as f64 - 1.0) * (-2.0 / (w * w)))
    }

    /// `q(ρ) = Δφ/φ` and its radial derivative.
    fn q_and_dq(&self, rho: f64, d: usize) -> (f64, f64) {
        let Some((s, w, g)) = self.parts(rho) else { return (0.0, 0.0) };
        let (c, r, dm1) = (self.height, self.radius, d as f64 - 1.0);
        let a = -2.0 * s / (w * w);
        let p = 4.0 * s * s / w.powi(4) - 2.0 / (w * w) - 8.0 * s * s / w.powi(3);
        let dp = 8.0 * s / w.powi(4) + 32.0 * s.powi(3) / w.powi(5) - 24.0 * s / w.powi(3) - 48.0 * s.powi(3) / w.powi(4);
        let g3 = g * (a * p + dp);
        let lap = c / (r * r) * g * (p + dm1 * (-2.0 / (w * w)));
        let dlap = c / r.powi(3) * (g3 + dm1 * g * s * (4.0 / w.powi(4) - 8.0 / w.powi(3)));
        let phi = 1.0 + c * g;
        let dphi = c / r * g * a;
        (lap / phi, dlap / phi - lap * dphi / (phi * phi))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `Π_j exp(1 - 1/(1 - (x_j/r)²))`.
    Bump,
    /// `Π_j cos²(π x_j / (2r))`.
    CosineSq,
    /// Product of a piecewise-linear profile sampled at `|t| = k·r/(n-1)`.
    Table { samples: Vec<f64> },
    /// `q = Δφ/φ` for a radial profile `φ`.
    Alt2 { profile: RadialProfile },
}

/// A compactly supported, reflection-symmetric single-site potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSite {
    pub shape: Shape,
    pub sign: i8,
    pub amplitude: f64,
    pub radius: f64,
}

/// Which node field to sample from a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sample {
    Value,
    /// Partial derivative `∂q/∂x_j`.
    Partial(usize),
}

fn bump1(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl SingleSite {
    pub fn new(shape: Shape, sign: i8, amplitude: f64, radius: f64) -> Result<Self> {
        let site = Self { shape, sign, amplitude, radius };
        site.validate()?;
        Ok(site)
    }

    /// Bump shape, sign -1, amplitude 10, radius 0.2.
    pub fn default_site() -> Self {
        Self { shape: Shape::Bump, sign: -1, amplitude: 10.0, radius: 0.2 }
    }

    pub fn zero() -> Self {
        Self { amplitude: 0.0, ..Self::default_site() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius < 0.25) {
            return Err(Error::InvalidSite(format!("radius {} not in (0, 1/4)", self.radius)));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::InvalidSite(format!("sign {} is not ±1", self.sign)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidSite(format!("amplitude {} must be finite and ≥ 0", self.amplitude)));
        }
        match &self.shape {
            Shape::Table { samples } => {
                if samples.len() < 2 || samples.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSite("table needs at least two finite samples".into()));
                }
                if *samples.last().unwrap() != 0.0 {
                    return Err(Error::InvalidSite("table must end at 0 on the support edge".into()));
                }
            }
            Shape::Alt2 { profile } => {
                if !(profile.height > -1.0) {
                    return Err(Error::InvalidSite("φ must stay positive (height > -1)".into()));
                }
                if !(profile.radius > 0.0 && profile.radius <= self.radius) {
                    return Err(Error::InvalidSite("φ is not constant near the support radius".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn d_max(&self) -> f64 {
        0.5 - self.radius
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn scale(&self) -> f64 {
        self.sign as f64 * self.amplitude
    }

    /// One-dimensional factor of a separable shape and its derivative.
    fn factor(&self, t: f64) -> (f64, f64) {
        let r = self.radius;
        if t.abs() >= r {
            return (0.0, 0.0);
        }
        let s = t / r;
        match &self.shape {
            Shape::Bump => {
                let w = 1.0 - s * s;
                let b = bump1(s);
                (b, b * (-2.0 * s / (w * w)) / r)
            }
            Shape::CosineSq => {
                let u = std::f64::consts::FRAC_PI_2 * s;
                (u.cos().powi(2), -(2.0 * u).sin() * std::f64::consts::FRAC_PI_2 / r)
            }
            Shape::Table { samples } => {
                let n = samples.len() - 1;
                let pos = s.abs() * n as f64;
                let k = (pos.floor() as usize).min(n - 1);
                let frac = pos - k as f64;
                let slope = (samples[k + 1] - samples[k]) * n as f64 / r;
                (samples[k] + frac * (samples[k + 1] - samples[k]), slope * s.signum())
            }
            Shape::Alt2 { .. } => unreachable!("radial shape"),
        }
    }

    fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::Alt2 { .. })
    }

    /// `q(x)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().any(|t| t.abs() >= self.radius) {
            return 0.0;
        }
        match &self.shape {
            Shape::Alt2 { profile } => {
                let rho = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                self.scale() * profile.q_and_dq(rho, x.len()).0
            }
            _ => self.scale() * x.iter().map(|&t| self.factor(t).0).product::<f64>(),
        }
    }

    /// `∇q(x)`.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        if x.iter().any(|t| t.abs() >= self.radius) {
            return vec![0.0; d];
        }
        match &self.shape {
            Shape::Alt2 { profile } => {
                let rho = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                if rho == 0.0 {
                    return vec![0.0; d];
                }
                let dq = self.scale() * profile.q_and_dq(rho, d).1;
                x.iter().map(|t| dq * t / rho).collect()
            }
            _ => {
                let f: Vec<(f64, f64)> = x.iter().map(|&t| self.factor(t)).collect();
                (0..d)
                    .map(|j| {
                        self.scale()
                            * f.iter()
                                .enumerate()
                                .map(|(k, p)| if k == j { p.1 } else { p.0 })
                                .product::<f64>()
                    })
                    .collect()
            }
        }
    }

    /// `‖q‖_∞`.
    pub fn sup_norm(&self, d: usize) -> f64 {
        match &self.shape {
            Shape::Bump | Shape::CosineSq => self.amplitude,
            Shape::Table { samples } => {
                self.amplitude * samples.iter().fold(0.0f64, |a, v| a.max(v.abs())).powi(d as i32)
            }
            Shape::Alt2 { profile } => {
                let n = 4000;
                let best = (0..n)
                    .map(|k| profile.q_and_dq(profile.radius * k as f64 / n as f64, d).0.abs())
                    .fold(0.0, f64::max);
                self.amplitude * best
            }
        }
    }

    /// The exact ground state `φ(x)` of an alternative-(ii) site.
    pub fn ground_profile(&self, x: &[f64]) -> Option<f64> {
        match &self.shape {
            Shape::Alt2 { profile } => Some(profile.value(x.iter().map(|t| t * t).sum::<f64>().sqrt())),
            _ => None,
        }
    }

    /// Average of `f` over `[t - h/2, t + h/2] ∩ (-r, r)`, divided by `h`.
    fn axis_average(&self, t: f64, h: f64, f: impl Fn(f64) -> f64) -> f64 {
        let lo = (t - 0.5 * h).max(-self.radius);
        let hi = (t + 0.5 * h).min(self.radius);
        if hi <= lo {
            return 0.0;
        }
        let frac = (hi - lo) / h;
        frac * cell_rule().averaging_on(lo, hi).map(|(x, w)| w * f(x)).sum::<f64>()
    }

    /// Node values inside one unit cell at resolution `m` for a site
    /// displaced by `a` from the cell centre. Every node carries the average
    /// of the sampled field over its `h`-cell. Local order: axis 0 fastest.
    pub fn cell_samples(&self, a: &[f64], m: usize, sample: Sample) -> Vec<f64> {
        let d = a.len();
        let h = 1.0 / m as f64;
        let total = m.pow(d as u32);
        let offsets: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..m).map(|i| -0.5 + (i as f64 + 0.5) * h - a[j]).collect())
            .collect();
        if self.amplitude == 0.0 {
            return vec![0.0; total];
        }
        if self.is_radial() {
            return self.radial_samples(&offsets, h, sample);
        }
        let deriv_axis = match sample {
            Sample::Value => None,
            Sample::Partial(j) => Some(j),
        };
        let avgs: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                offsets[j]
                    .iter()
                    .map(|&t| {
                        if deriv_axis == Some(j) {
                            self.axis_average(t, h, |x| self.factor(x).1)
                        } else {
                            self.axis_average(t, h, |x| self.factor(x).0)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; total];
        for (l, o) in out.iter_mut().enumerate() {
            let mut v = self.scale();
            let mut rem = l;
            for avg in &avgs {
                v *= avg[rem % m];
                rem /= m;
                if v == 0.0 {
                    break;
                }
            }
            *o = v;
        }
        out
    }

    fn radial_samples(&self, offsets: &[Vec<f64>], h: f64, sample: Sample) -> Vec<f64> {
        let d = offsets.len();
        let m = offsets[0].len();
        let rule_owned;
        let rule: &GaussLegendre = if d <= 2 {
            cell_rule()
        } else {
            rule_owned = GaussLegendre::new(8);
            &rule_owned
        };
        let r = self.radius;
        let mut out = vec![0.0; m.pow(d as u32)];
        let mut t = vec![0.0; d];
        for (l, o) in out.iter_mut().enumerate() {
            let mut rem = l;
            let mut ranges = Vec::with_capacity(d);
            let mut frac = 1.0;
            for off in offsets {
                let c = off[rem % m];
                rem /= m;
                let lo = (c - 0.5 * h).max(-r);
                let hi = (c + 0.5 * h).min(r);
                if hi <= lo {
                    frac = 0.0;
                    break;
                }
                frac *= (hi - lo) / h;
                ranges.push((lo, hi));
            }
            if frac == 0.0 {
                continue;
            }
            let pts: Vec<Vec<(f64, f64)>> =
                ranges.iter().map(|&(lo, hi)| rule.averaging_on(lo, hi).collect()).collect();
            let k = rule.nodes.len();
            let mut acc = 0.0;
            for mut q in 0..k.pow(d as u32) {
                let mut w = 1.0;
                for j in 0..d {
                    let (x, wj) = pts[j][q % k];
                    q /= k;
                    t[j] = x;
                    w *= wj;
                }
                acc += w * match sample {
                    Sample::Value => self.eval(&t),
                    Sample::Partial(j) => self.grad(&t)[j],
                };
            }
            *o = frac * acc;
        }
        out
    }
}

/// Site with `q = Δφ/φ` supported in `[-r, r]^d`, sign +1 and unit amplitude.
pub fn make_alt2_site(profile: RadialProfile, r: f64) -> Result<SingleSite> {
    SingleSite::new(Shape::Alt2 { profile }, 1, 1.0, r)
}

/// One displacement vector per cell of a rectangular block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementConfig {
    lower: Vec<i64>,
    cells: Vec<usize>,
    values: Vec<f64>,
}

impl DisplacementConfig {
    /// Configuration on the block described by `box_spec`, filled from `f`.
    pub fn from_fn(box_spec: &BoxSpec, mut f: impl FnMut(&[i64]) -> Vec<f64>) -> Self {
        let d = box_spec.dim();
        let mut values = Vec::with_capacity(box_spec.n_cells() * d);
        for cell in box_spec.cell_list() {
            let w = f(&cell);
            assert_eq!(w.len(), d);
            values.extend(w);
        }
        Self { lower: box_spec.lower().to_vec(), cells: box_spec.cells().to_vec(), values }
    }

    /// Configuration on the cube `Λ_L`.
    pub fn cube(d: usize, half_extent: usize, f: impl FnMut(&[i64]) -> Vec<f64>) -> Self {
        let b = BoxSpec::cube(d, half_extent, 1, crate::BoundaryCondition::Neumann).expect("valid cube");
        Self::from_fn(&b, f)
    }

    /// Single-cell configuration with displacement `a`.
    pub fn single(a: &[f64]) -> Self {
        Self::cube(a.len(), 0, |_| a.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// `Some(L)` when the configuration covers exactly `Λ_L`.
    pub fn extent(&self) -> Option<usize> {
        let c = self.cells[0];
        let cube = c % 2 == 1
            && self.cells.iter().all(|&x| x == c)
            && self.lower.iter().all(|&x| x == -((c / 2) as i64));
        cube.then_some(c / 2)
    }

    fn number(&self, cell: &[i64]) -> Option<usize> {
        if cell.len() != self.dim() {
            return None;
        }
        let mut k = 0;
        for j in (0..self.dim()).rev() {
            let p = cell[j] - self.lower[j];
            if p < 0 || p as usize >= self.cells[j] {
                return None;
            }
            k = k * self.cells[j] + p as usize;
        }
        Some(k)
    }

    pub fn get(&self, cell: &[i64]) -> Option<&[f64]> {
        let d = self.dim();
        self.number(cell).map(|k| &self.values[k * d..(k + 1) * d])
    }

    pub fn set(&mut self, cell: &[i64], w: &[f64]) {
        let d = self.dim();
        let k = self.number(cell).expect("cell in configuration");
        self.values[k * d..(k + 1) * d].copy_from_slice(w);
    }

    /// Cells in linear order with their displacements.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, &[f64])> + '_ {
        let d = self.dim();
        self.values.chunks(d).enumerate().map(move |(mut k, w)| {
            let cell = (0..d)
                .map(|j| {
                    let c = self.lower[j] + (k % self.cells[j]) as i64;
                    k /= self.cells[j];
                    c
                })
                .collect();
            (cell, w)
        })
    }

    /// Applies `f` to every displacement.
    pub fn map(&self, f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let d = self.dim();
        let values = self.values.chunks(d).flat_map(f).collect();
        Self { values, ..self.clone() }
    }

    /// Corner projection applied cell by cell.
    pub fn corner_projected(&self, d_max: f64) -> Self {
        self.map(|w| corner_projection(w, d_max).0)
    }
}

/// Law of a single displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisplacementLaw {
    /// Uniform over the `2^d` corners.
    CornerUniform,
    /// Uniform over `[-d_max, d_max]^d`.
    BoxUniform,
    /// With weight `epsilon` box-uniform; otherwise a uniform corner moved
    /// inward by `|2B - 1|·ρ` per coordinate with `B ~ Beta(3, 3)` and
    /// `ρ = rho_fraction·d_max`.
    CornerSmoothed { epsilon: f64, rho_fraction: f64 },
    /// Deterministic `ω*` (test hook).
    Minimizer,
    /// The same displacement in every cell (test hook).
    Fixed { value: Vec<f64> },
}

impl DisplacementLaw {
    pub fn corner_smoothed() -> Self {
        Self::CornerSmoothed { epsilon: 0.1, rho_fraction: 0.125 }
    }

    pub fn validate(&self, d_max: f64) -> Result<()> {
        match self {
            Self::CornerSmoothed { epsilon, rho_fraction } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in [0, 1]")));
                }
                if !(*rho_fraction > 0.0 && *rho_fraction <= 0.25) {
                    return Err(Error::InvalidArgument(format!("rho fraction {rho_fraction} not in (0, 1/4]")));
                }
            }
            Self::Fixed { value }
                if value.iter().any(|v| !(v.abs() <= d_max + 1e-12)) => {
                    return Err(Error::InvalidArgument("fixed displacement outside the admissible box".into()));
                }
            _ => {}
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R, cell: &[i64], d_max: f64) -> Vec<f64> {
        let d = cell.len();
        let corner = |rng: &mut R| -> Vec<f64> {
            (0..d).map(|_| if rng.random::<bool>() { d_max } else { -d_max }).collect()
        };
        match self {
            Self::CornerUniform => corner(rng),
            Self::BoxUniform => (0..d).map(|_| rng.random_range(-d_max..=d_max)).collect(),
            Self::CornerSmoothed { epsilon, rho_fraction } => {
                if rng.random::<f64>() < *epsilon {
                    return (0..d).map(|_| rng.random_range(-d_max..=d_max)).collect();
                }
                let rho = rho_fraction * d_max;
                let beta = Beta::new(3.0, 3.0).expect("valid parameters");
                corner(rng)
                    .into_iter()
                    .map(|c| {
                        let u: f64 = beta.sample(rng);
                        let t = (2.0 * u - 1.0).abs() * rho;
                        c - c.signum() * t
                    })
                    .collect()
            }
            Self::Minimizer => minimizer_value(cell, d_max),
            Self::Fixed { value } => value.clone(),
        }
    }

    /// Draws one displacement per cell of `box_spec`. The generator of cell
    /// `n` is keyed by `(seed, stream..., cell number)`.
    pub fn sample_block(&self, d_max: f64, box_spec: &BoxSpec, seed: u64, stream: &[u64]) -> DisplacementConfig {
        let mut key = Vec::with_capacity(stream.len() + 2);
        key.push(seed);
        key.extend_from_slice(stream);
        key.push(0);
        DisplacementConfig::from_fn(box_spec, |cell| {
            *key.last_mut().unwrap() = box_spec.cell_number(cell).expect("cell in box") as u64;
            let mut g = rng::stream(&key);
            self.draw(&mut g, cell, d_max)
        })
    }
}

/// i.i.d. configuration on `Λ_L` for `law`.
pub fn sample_config(law: &DisplacementLaw, d_max: f64, d: usize, half_extent: usize, seed: u64) -> DisplacementConfig {
    let b = BoxSpec::cube(d, half_extent, 1, crate::BoundaryCondition::Neumann).expect("valid cube");
    law.sample_block(d_max, &b, seed, &[])
}

/// `ω*_n = ((-1)^{n_j} d_max)_j`.
pub fn minimizer_value(cell: &[i64], d_max: f64) -> Vec<f64> {
    cell.iter().map(|&n| if n.rem_euclid(2) == 0 { d_max } else { -d_max }).collect()
}

pub fn minimizer_config(d: usize, half_extent: usize, d_max: f64) -> DisplacementConfig {
    DisplacementConfig::cube(d, half_extent, |c| minimizer_value(c, d_max))
}

pub fn minimizer_block(box_spec: &BoxSpec, d_max: f64) -> DisplacementConfig {
    DisplacementConfig::from_fn(box_spec, |c| minimizer_value(c, d_max))
}

/// Nearest corner `c(a)` (ties broken towards +) and the distance `D(a)`.
pub fn corner_projection(a: &[f64], d_max: f64) -> (Vec<f64>, f64) {
    let c: Vec<f64> = a.iter().map(|&x| if x >= 0.0 { d_max } else { -d_max }).collect();
    let dist = a.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    (c, dist)
}

pub fn is_corner(a: &[f64], d_max: f64) -> bool {
    a.iter().all(|x| (x.abs() - d_max).abs() <= 1e-12)
}

/// Neighbouring cells `a` and `b = a + e_axis`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPair {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub axis: usize,
}

/// Two neighbours match when their potentials are mirror images across the
/// shared face: `ω_{n,j} = -ω_{n+e_j,j}` and equal transverse coordinates.
pub fn is_matching(wa: &[f64], wb: &[f64], axis: usize) -> bool {
    wa.iter().zip(wb).enumerate().all(|(i, (x, y))| {
        if i == axis {
            (x + y).abs() <= 1e-12
        } else {
            (x - y).abs() <= 1e-12
        }
    })
}

/// Non-matching neighbour pairs of a corner configuration. With `periodic`
/// the pairs across the wrapped faces are included.
pub fn nonmatching_pairs(config: &DisplacementConfig, d_max: f64, periodic: bool) -> Result<Vec<CellPair>> {
    for (cell, w) in config.iter() {
        if !is_corner(w, d_max) {
            return Err(Error::NonCornerDisplacement { cell });
        }
    }
    let mut out = Vec::new();
    for (cell, w) in config.iter() {
        for axis in 0..config.dim() {
            let mut nb = cell.clone();
            nb[axis] += 1;
            let wb = match config.get(&nb) {
                Some(wb) => wb,
                None if periodic => {
                    nb[axis] = config.lower()[axis];
                    config.get(&nb).expect("wrapped cell")
                }
                None => continue,
            };
            if !is_matching(w, wb, axis) {
                out.push(CellPair { a: cell.clone(), b: nb, axis });
            }
        }
    }
    Ok(out)
}
