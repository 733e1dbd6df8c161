//! Phase-space mesh over the torus `[0, L)` times a symmetric velocity
//! interval `[-U, U]`, the nodal density table living on it, and the
//! growing velocity half-width.
//!
//! The half-width is stored as an integer number of velocity cells so that
//! grid alignment can never drift through floating-point accumulation.

use crate::error::{Error, Result};

const ALIGN_RTOL: f64 = 1e-9;

/// Round `num / den` to an integer, rejecting ratios that are not integral
/// to within a relative tolerance of `1e-9`.
pub(crate) fn aligned_ratio(what: &'static str, num: f64, den: f64) -> Result<usize> {
    let ratio = num / den;
    if !ratio.is_finite() || ratio < 0.0 {
        return Err(Error::Misaligned { what, ratio });
    }
    let n = ratio.round();
    if (ratio - n).abs() > ALIGN_RTOL * ratio.max(1.0) {
        return Err(Error::Misaligned { what, ratio });
    }
    Ok(n as usize)
}

/// Uniform mesh of `T_L x [-U, U]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    length: f64,
    dx: f64,
    dv: f64,
    nx: usize,
    half_nodes: usize,
}

impl PhaseGrid {
    /// Build a grid, checking that `L/dx` and `U/dv` are positive integers.
    pub fn new(length: f64, dx: f64, dv: f64, half_width: f64) -> Result<Self> {
        if !(length > 0.0 && dx > 0.0 && dv > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid requires L, dx, dv > 0 (got L={length}, dx={dx}, dv={dv})"
            )));
        }
        let nx = aligned_ratio("L/dx", length, dx)?;
        let half_nodes = aligned_ratio("U/dv", half_width, dv)?;
        if nx == 0 {
            return Err(Error::Misaligned { what: "L/dx", ratio: length / dx });
        }
        if half_nodes == 0 {
            return Err(Error::Misaligned { what: "U/dv", ratio: half_width / dv });
        }
        Ok(Self { length, dx, dv, nx, half_nodes })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    /// Number of stored position nodes; the node at `x = L` is node 0.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// `U / dv`.
    pub fn half_nodes(&self) -> usize {
        self.half_nodes
    }

    pub fn nv(&self) -> usize {
        2 * self.half_nodes + 1
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.nv()
    }

    /// Current velocity half-width `U`.
    pub fn half_width(&self) -> f64 {
        self.half_nodes as f64 * self.dv
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Velocity of signed node index `k`, `-U/dv <= k <= U/dv`.
    pub fn v(&self, k: isize) -> f64 {
        k as f64 * self.dv
    }

    /// Velocity of storage column `c`, `0 <= c < nv`.
    pub fn v_col(&self, c: usize) -> f64 {
        (c as isize - self.half_nodes as isize) as f64 * self.dv
    }

    /// Same mesh with the half-width enlarged by `extra` velocity cells.
    pub fn widened(&self, extra: usize) -> Self {
        Self { half_nodes: self.half_nodes + extra, ..*self }
    }

    /// True when both grids share `L`, `dx` and `dv`.
    pub fn same_mesh(&self, other: &Self) -> bool {
        self.length == other.length && self.dx == other.dx && self.dv == other.dv
    }
}

/// Nodal values of the numerical density, row-major with position outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { values: vec![0.0; grid.node_count()], grid }
    }

    pub fn from_values(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} nodal values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Pointwise nodal sampling of `f(x, v)`.
    pub fn sample(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nv = grid.nv();
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..grid.nx() {
            let x = grid.x(j);
            values.extend((0..nv).map(|c| f(x, grid.v_col(c))));
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values along the velocity axis at position node `j`.
    pub fn row(&self, j: usize) -> &[f64] {
        let nv = self.grid.nv();
        &self.values[j * nv..(j + 1) * nv]
    }

    /// Value at position node `j` and signed velocity node `k`.
    pub fn at(&self, j: usize, k: isize) -> f64 {
        let c = k + self.grid.half_nodes() as isize;
        self.values[j * self.grid.nv() + c as usize]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Enlarge the velocity half-width by `xi`, padding with zero rows.
    pub fn grow(&self, xi: f64) -> Result<Self> {
        let extra = aligned_ratio("Xi/dv", xi, self.grid.dv())?;
        Ok(self.grow_cells(extra))
    }

    /// Enlarge the half-width by `extra` velocity cells. Old nodal values are
    /// copied bit-for-bit into the aligned interior.
    pub fn grow_cells(&self, extra: usize) -> Self {
        if extra == 0 {
            return self.clone();
        }
        let grid = self.grid.widened(extra);
        let (old_nv, new_nv) = (self.grid.nv(), grid.nv());
        let mut values = vec![0.0; grid.node_count()];
        for j in 0..grid.nx() {
            let dst = j * new_nv + extra;
            values[dst..dst + old_nv].copy_from_slice(self.row(j));
        }
        Self { grid, values }
    }

    /// True when some node whose `|v|` lies in `[U - m dv, U]` has
    /// `|f| > epsilon0`. A band of `m >= U/dv` cells is reported as exceeded
    /// unconditionally.
    pub fn band_exceeds(&self, band_cells: usize, epsilon0: f64) -> bool {
        let m = self.grid.half_nodes();
        if band_cells >= m {
            return true;
        }
        let nv = self.grid.nv();
        // columns 0..=band_cells and nv-1-band_cells..nv
        (0..self.grid.nx()).any(|j| {
            let row = self.row(j);
            row[..=band_cells]
                .iter()
                .chain(&row[nv - 1 - band_cells..])
                .any(|f| f.abs() > epsilon0)
        })
    }
}

/// Decide the next half-width: keep `U` if every band node is within the
/// threshold, otherwise grow by `xi`. Returns `(U_new, grew)`.
pub fn update_halfwidth(field: &DensityField, xi: f64, epsilon0: f64) -> Result<(f64, bool)> {
    if !(epsilon0 > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon0 must be > 0, got {epsilon0}")));
    }
    let cells = aligned_ratio("Xi/dv", xi, field.grid().dv())?;
    let grew = field.band_exceeds(cells, epsilon0);
    let u = field.grid().half_width();
    Ok(if grew { (u + cells as f64 * field.grid().dv(), true) } else { (u, false) })
}

/// Half-width bookkeeping across a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainState {
    pub half_nodes: usize,
    pub epsilon0: f64,
    /// `(step index, Xi_n)` for every step at which the domain grew.
    pub growth_log: Vec<(usize, f64)>,
}

impl DomainState {
    pub fn new(grid: &PhaseGrid, epsilon0: f64) -> Self {
        Self { half_nodes: grid.half_nodes(), epsilon0, growth_log: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = PhaseGrid::new(1.0, 1.0 / 64.0, 1.0 / 64.0, 6.0).unwrap();
        assert_eq!((g.nx(), g.nv()), (64, 769));

        let pi = std::f64::consts::PI;
        let g = PhaseGrid::new(4.0 * pi, 4.0 * pi / 256.0, 4.0 * pi / 256.0, 123.0 * pi / 64.0)
            .unwrap();
        assert_eq!(g.nx(), 256);
        assert_eq!(g.half_nodes(), 123);
        assert_eq!(g.nv(), 247);
    }

    #[test]
    fn misaligned_grid_names_ratio() {
        let err = PhaseGrid::new(1.0, 0.3, 0.1, 1.0).unwrap_err();
        assert!(err.to_string().contains("L/dx"), "{err}");
        let err = PhaseGrid::new(1.0, 0.25, 0.3, 1.0).unwrap_err();
        assert!(err.to_string().contains("U/dv"), "{err}");
    }

    #[test]
    fn grow_pads_zero_rows() {
        let g = PhaseGrid::new(1.0, 0.25, 0.01, 6.0).unwrap();
        let f = DensityField::sample(g, |x, v| 1.0 + x + v * v);
        let grown = f.grow(0.5).unwrap();
        assert_eq!(grown.grid().half_nodes(), 650);
        assert!((grown.grid().half_width() - 6.5).abs() < 1e-12);
        for j in 0..g.nx() {
            let row = grown.row(j);
            assert!(row[..50].iter().all(|&v| v == 0.0));
            assert!(row[row.len() - 50..].iter().all(|&v| v == 0.0));
            for k in -600..=600isize {
                assert_eq!(grown.at(j, k).to_bits(), f.at(j, k).to_bits());
            }
        }
        assert_eq!(f.grow(0.0).unwrap(), f);
        assert!(f.grow(0.005).is_err());
    }

    #[test]
    fn halfwidth_update() {
        let g = PhaseGrid::new(1.0, 0.25, 0.5, 3.0).unwrap();
        let zero = DensityField::zeros(g);
        assert_eq!(update_halfwidth(&zero, 1.0, 1e-8).unwrap(), (3.0, false));

        let eps = 1e-3;
        let mut f = DensityField::zeros(g);
        // |v| = 2.5 lies in the band [2, 3]
        let c = (5 + g.half_nodes() as isize) as usize;
        f.values_mut()[2 * g.nv() + c] = 2.0 * eps;
        assert_eq!(update_halfwidth(&f, 1.0, eps).unwrap(), (4.0, true));
        // a tie is not growth
        f.values_mut()[2 * g.nv() + c] = eps;
        assert_eq!(update_halfwidth(&f, 1.0, eps).unwrap(), (3.0, false));
        // degenerate band always grows
        assert_eq!(update_halfwidth(&zero, 3.0, eps).unwrap(), (6.0, true));
    }

    #[test]
    fn node_outside_band_is_ignored() {
        let g = PhaseGrid::new(1.0, 0.25, 0.5, 3.0).unwrap();
        let mut f = DensityField::zeros(g);
        let c = g.half_nodes(); // v = 0
        f.values_mut()[c] = 1.0;
        assert_eq!(update_halfwidth(&f, 1.0, 1e-3).unwrap(), (3.0, false));
    }
}
