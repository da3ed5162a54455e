//! Cell-centred finite-difference discretisation of `-Δ + V` on blocks of
//! unit cells.
//!
//! A box is a rectangular block of unit cells `n + (-1/2, 1/2)^d` with `m`
//! nodes per unit length along every axis. Nodes sit at cell centres of the
//! `h`-grid, so cell faces always fall halfway between nodes. Nodes are
//! numbered with axis 0 varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{DisplacementConfig, Sample, SingleSite};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    lower: Vec<i64>,
    cells: Vec<usize>,
    m: usize,
    bc: BoundaryCondition,
}

impl BoxSpec {
    /// The cube `Λ_L = (-L-1/2, L+1/2)^d`.
    pub fn cube(d: usize, half_extent: usize, m: usize, bc: BoundaryCondition) -> Result<Self> {
        let l = half_extent as i64;
        Self::block(vec![-l; d], vec![2 * half_extent + 1; d], m, bc)
    }

    /// A block of `cells[j]` cells per axis starting at cell index `lower[j]`.
    pub fn block(lower: Vec<i64>, cells: Vec<usize>, m: usize, bc: BoundaryCondition) -> Result<Self> {
        let d = lower.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidBox(format!("dimension {d} not in 1..=3")));
        }
        if cells.len() != d {
            return Err(Error::InvalidBox("cell counts and lower corner differ in length".into()));
        }
        if cells.contains(&0) {
            return Err(Error::InvalidBox("empty axis".into()));
        }
        if m == 0 {
            return Err(Error::ResolutionTooSmall { m, min: 1 });
        }
        Ok(Self { lower, cells, m, bc })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }
    pub fn lower(&self) -> &[i64] {
        &self.lower
    }
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn with_bc(&self, bc: BoundaryCondition) -> Self {
        Self { bc, ..self.clone() }
    }

    /// `Some(L)` when the box is the cube `Λ_L`.
    pub fn half_extent(&self) -> Option<usize> {
        let c = self.cells[0];
        let cube = c % 2 == 1
            && self.cells.iter().all(|&x| x == c)
            && self.lower.iter().all(|&x| x == -((c / 2) as i64));
        cube.then_some(c / 2)
    }

    pub fn axis_nodes(&self, axis: usize) -> usize {
        self.cells[axis] * self.m
    }

    pub fn n_dofs(&self) -> usize {
        (0..self.dim()).map(|j| self.axis_nodes(j)).product()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// Coordinate of node `i` along `axis`.
    pub fn node_coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] as f64 - 0.5 + (i as f64 + 0.5) * self.h()
    }

    pub fn node_multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let nj = self.axis_nodes(j);
            out.push(idx % nj);
            idx /= nj;
        }
        out
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for j in (0..self.dim()).rev() {
            idx = idx * self.axis_nodes(j) + multi[j];
        }
        idx
    }

    /// Cell index (in lattice coordinates) containing a node.
    pub fn cell_of_node(&self, idx: usize) -> Vec<i64> {
        self.node_multi(idx)
            .iter()
            .enumerate()
            .map(|(j, &i)| self.lower[j] + (i / self.m) as i64)
            .collect()
    }

    /// Position of a cell inside the block, counted from zero per axis.
    pub fn cell_position(&self, cell: &[i64]) -> Option<Vec<usize>> {
        cell.iter()
            .enumerate()
            .map(|(j, &c)| {
                let p = c - self.lower[j];
                (p >= 0 && (p as usize) < self.cells[j]).then_some(p as usize)
            })
            .collect()
    }

    /// Linear cell number, axis 0 fastest.
    pub fn cell_number(&self, cell: &[i64]) -> Option<usize> {
        let pos = self.cell_position(cell)?;
        let mut k = 0;
        for j in (0..self.dim()).rev() {
            k = k * self.cells[j] + pos[j];
        }
        Some(k)
    }

    /// All cells in linear order.
    pub fn cell_list(&self) -> Vec<Vec<i64>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.n_cells());
        for mut k in 0..self.n_cells() {
            let mut c = Vec::with_capacity(d);
            for j in 0..d {
                c.push(self.lower[j] + (k % self.cells[j]) as i64);
                k /= self.cells[j];
            }
            out.push(c);
        }
        out
    }

    /// Global node indices of the `m^d` nodes of a cell, in local order
    /// (axis 0 fastest).
    pub fn cell_nodes(&self, cell: &[i64]) -> Option<Vec<usize>> {
        let pos = self.cell_position(cell)?;
        let d = self.dim();
        let m = self.m;
        let total = m.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut multi = vec![0; d];
        for mut l in 0..total {
            for j in 0..d {
                multi[j] = pos[j] * m + l % m;
                l /= m;
            }
            out.push(self.node_index(&multi));
        }
        Some(out)
    }

    /// Builds a node field by filling every cell from `f`. `None` leaves the
    /// cell at zero.
    pub fn scatter_cells<F>(&self, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[i64]) -> Result<Option<Vec<f64>>>,
    {
        let mut out = vec![0.0; self.n_dofs()];
        for cell in self.cell_list() {
            if let Some(local) = f(&cell)? {
                let nodes = self.cell_nodes(&cell).expect("cell in box");
                for (g, v) in nodes.into_iter().zip(local) {
                    out[g] = v;
                }
            }
        }
        Ok(out)
    }

    /// `h^d Σ u_i v_i`, the discrete L² inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h().powi(self.dim() as i32) * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub min_resolution: usize,
    pub max_nonzeros: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { min_resolution: 4, max_nonzeros: 20_000_000 }
    }
}

/// `-Δ_h + diag(V)` together with the box it lives on.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOperator {
    matrix: CsrMatrix,
    box_spec: BoxSpec,
    potential: Vec<f64>,
}

impl DiscreteOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }
    pub fn potential_values(&self) -> &[f64] {
        &self.potential
    }
    pub fn n_dofs(&self) -> usize {
        self.matrix.n()
    }

    /// Adds a node potential to the operator.
    pub fn with_potential(mut self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.n_dofs());
        self.matrix.add_to_diagonal(&values);
        for (p, v) in self.potential.iter_mut().zip(&values) {
            *p += v;
        }
        self
    }

    /// A purely diagonal operator on `box_spec` (no stencil).
    pub fn diagonal_only(box_spec: BoxSpec, values: Vec<f64>) -> Self {
        let n = box_spec.n_dofs();
        assert_eq!(values.len(), n);
        let trip: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self { matrix: CsrMatrix::from_triplets(n, &trip), box_spec, potential: values }
    }

    /// True when the matrix is tridiagonal in natural node order.
    pub fn is_tridiagonal(&self) -> bool {
        self.matrix.bandwidth() <= 1
    }
}

pub fn build_laplacian(box_spec: &BoxSpec) -> Result<DiscreteOperator> {
    build_laplacian_with(box_spec, &BuildOptions::default())
}

/// Neumann walls drop the missing neighbour (ghost equal to the wall node),
/// Dirichlet walls use an antisymmetric ghost (one extra `1/h²` on the
/// diagonal per adjacent wall), periodic walls wrap around.
pub fn build_laplacian_with(box_spec: &BoxSpec, opts: &BuildOptions) -> Result<DiscreteOperator> {
    let m = box_spec.m();
    if m < opts.min_resolution {
        return Err(Error::ResolutionTooSmall { m, min: opts.min_resolution });
    }
    let d = box_spec.dim();
    let n = box_spec.n_dofs();
    let estimate = n.saturating_mul(2 * d + 1);
    if estimate > opts.max_nonzeros {
        return Err(Error::Capacity { nonzeros: estimate, cap: opts.max_nonzeros });
    }
    let inv_h2 = (m * m) as f64;
    let mut trip = Vec::with_capacity(estimate);
    let mut multi = vec![0usize; d];
    for i in 0..n {
        let mut rem = i;
        for (j, mj) in multi.iter_mut().enumerate() {
            let nj = box_spec.axis_nodes(j);
            *mj = rem % nj;
            rem /= nj;
        }
        let mut diag = 0.0;
        for j in 0..d {
            let nj = box_spec.axis_nodes(j);
            let stride: usize = (0..j).map(|k| box_spec.axis_nodes(k)).product();
            for dir in [-1i64, 1] {
                let pos = multi[j] as i64 + dir;
                if pos >= 0 && (pos as usize) < nj {
                    let nb = (i as i64 + dir * stride as i64) as usize;
                    trip.push((i, nb, -inv_h2));
                    diag += inv_h2;
                } else {
                    match box_spec.bc() {
                        BoundaryCondition::Neumann => {}
                        BoundaryCondition::Dirichlet => diag += 2.0 * inv_h2,
                        BoundaryCondition::Periodic => {
                            if nj > 1 {
                                let wrapped = pos.rem_euclid(nj as i64) as usize;
                                let nb = i - multi[j] * stride + wrapped * stride;
                                trip.push((i, nb, -inv_h2));
                                diag += inv_h2;
                            }
                        }
                    }
                }
            }
        }
        trip.push((i, i, diag));
    }
    Ok(DiscreteOperator {
        matrix: CsrMatrix::from_triplets(n, &trip),
        box_spec: box_spec.clone(),
        potential: vec![0.0; n],
    })
}

/// Node values of `Σ_n q(x - n - ω_n)` on the box, each node carrying the
/// average of the potential over its `h`-cell.
pub fn potential_field(box_spec: &BoxSpec, config: &DisplacementConfig, site: &SingleSite) -> Result<Vec<f64>> {
    let d_max = site.d_max();
    box_spec.scatter_cells(|cell| {
        let w = config
            .get(cell)
            .ok_or_else(|| Error::MissingCell { cell: cell.to_vec() })?;
        check_displacement(cell, w, d_max)?;
        if site.amplitude() == 0.0 {
            return Ok(None);
        }
        Ok(Some(site.cell_samples(w, box_spec.m(), Sample::Value)))
    })
}

pub(crate) fn check_displacement(cell: &[i64], w: &[f64], d_max: f64) -> Result<()> {
    for &v in w {
        if !(v.abs() <= d_max + 1e-12) {
            return Err(Error::DisplacementOutOfRange { cell: cell.to_vec(), value: v, d_max });
        }
    }
    Ok(())
}

pub fn assemble(box_spec: &BoxSpec, config: &DisplacementConfig, site: &SingleSite) -> Result<DiscreteOperator> {
    assemble_with(box_spec, config, site, &BuildOptions::default())
}

pub fn assemble_with(
    box_spec: &BoxSpec,
    config: &DisplacementConfig,
    site: &SingleSite,
    opts: &BuildOptions,
) -> Result<DiscreteOperator> {
    if config.dim() != box_spec.dim() {
        return Err(Error::InvalidArgument("configuration and box dimensions differ".into()));
    }
    let lap = build_laplacian_with(box_spec, opts)?;
    let v = potential_field(box_spec, config, site)?;
    Ok(lap.with_potential(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryCondition::*;

    fn loose() -> BuildOptions {
        BuildOptions { min_resolution: 1, ..Default::default() }
    }

    #[test]
    fn two_node_neumann() {
        let b = BoxSpec::cube(1, 0, 2, Neumann).unwrap();
        let op = build_laplacian_with(&b, &loose()).unwrap();
        let a = op.matrix();
        assert_eq!((a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1)), (4.0, -4.0, -4.0, 4.0));
    }

    #[test]
    fn two_node_periodic_accumulates() {
        let b = BoxSpec::cube(1, 0, 2, Periodic).unwrap();
        let op = build_laplacian_with(&b, &loose()).unwrap();
        assert_eq!(op.matrix().get(0, 1), -8.0);
        assert_eq!(op.matrix().get(0, 0), 8.0);
    }

    #[test]
    fn rejects_coarse_grids_and_caps() {
        let b = BoxSpec::cube(1, 0, 2, Neumann).unwrap();
        assert!(matches!(build_laplacian(&b), Err(Error::ResolutionTooSmall { .. })));
        let b = BoxSpec::cube(3, 5, 32, Neumann).unwrap();
        let opts = BuildOptions { max_nonzeros: 1000, ..Default::default() };
        assert!(matches!(build_laplacian_with(&b, &opts), Err(Error::Capacity { .. })));
    }

    #[test]
    fn constant_kernel_is_exact() {
        for bc in [Neumann, Periodic] {
            for d in 1..=3 {
                let b = BoxSpec::cube(d, 1, 4, bc).unwrap();
                let op = build_laplacian(&b).unwrap();
                let y = op.matrix().apply(&vec![1.0; op.n_dofs()]);
                assert!(y.iter().all(|&v| v == 0.0));
                assert!(op.matrix().is_symmetric());
            }
        }
    }

    #[test]
    fn node_bookkeeping() {
        let b = BoxSpec::block(vec![-1, 0], vec![3, 2], 4, Neumann).unwrap();
        assert_eq!(b.n_dofs(), 12 * 8);
        assert_eq!(b.half_extent(), None);
        assert_eq!(BoxSpec::cube(2, 1, 4, Neumann).unwrap().half_extent(), Some(1));
        for i in [0, 7, 50, 95] {
            assert_eq!(b.node_index(&b.node_multi(i)), i);
        }
        assert_eq!(b.node_coord(0, 0), -1.5 + 0.125);
        assert_eq!(b.cell_of_node(b.node_index(&[4, 5])), vec![0, 1]);
        let nodes = b.cell_nodes(&[0, 1]).unwrap();
        assert_eq!(nodes.len(), 16);
        assert_eq!(b.node_multi(nodes[0]), vec![4, 4]);
        assert_eq!(b.node_multi(nodes[5]), vec![5, 5]);
    }
}
