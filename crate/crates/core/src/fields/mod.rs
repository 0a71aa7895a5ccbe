//! Structured-grid containers, ghost layers and deterministic reductions.
//!
//! Every field stores `NG` ghost layers around the `nx × ny` interior so the
//! MUSCL reconstruction at a boundary face can reach two cells past the wall.
//! Interior cells are addressed with signed indices `0..nx`, ghosts with
//! `-NG..0` and `nx..nx+NG`.

pub(crate) mod bc;
mod ops;
mod reduce;

pub use bc::apply_bcs;
pub use ops::{
    advective_divergence, div_tensor, div_tensor_vec, div_vector, grad_scalar, grad_vector,
    gradient_energy, laplacian, upper_convected_point, upper_convected_source,
};
pub use reduce::{integrate, l2_norm, pairwise_sum, reduce_cells, sup_norm};

use rayon::prelude::*;
use thiserror::Error;

/// Number of ghost layers on every side.
pub const NG: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{op} requires physical boundary mode")]
    WrongMode { op: &'static str },
    #[error("non-finite value in {field} at cell ({i}, {j})")]
    NonFinite {
        field: &'static str,
        i: isize,
        j: isize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    /// Walls: no-slip velocity, homogeneous Neumann for η and 𝕋.
    Physical,
    /// Doubly periodic; used for verification runs.
    Periodic,
}

/// Reflection parity used to fill ghost cells at physical walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Mirror copy (zero normal derivative).
    Even,
    /// Negated mirror copy (zero face value).
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    pub mode: BoundaryMode,
}

impl Grid {
    pub fn new(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        mode: BoundaryMode,
    ) -> Result<Self, FieldError> {
        if nx < 8 || ny < 8 {
            return Err(FieldError::InvalidGrid(format!(
                "cell counts must be at least 8, got {nx} x {ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(FieldError::InvalidGrid(format!(
                "domain extents must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            mode,
        })
    }

    pub fn unit_square(n: usize, mode: BoundaryMode) -> Result<Self, FieldError> {
        Self::new(n, n, 1.0, 1.0, mode)
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.nx + 2 * NG
    }

    /// Total number of stored samples, ghosts included.
    #[inline]
    pub fn len(&self) -> usize {
        self.stride() * (self.ny + 2 * NG)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: isize, j: isize) -> usize {
        (j + NG as isize) as usize * self.stride() + (i + NG as isize) as usize
    }

    /// Cell-center abscissa of column `i`.
    #[inline]
    pub fn x(&self, i: isize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y(&self, j: isize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Smallest cell width.
    pub fn h(&self) -> f64 {
        self.dx.min(self.dy)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Same extents and mode with every cell count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self, FieldError> {
        Self::new(self.nx * factor, self.ny * factor, self.lx, self.ly, self.mode)
    }
}

/// Cell-centered scalar samples with ghost layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    /// Evaluates `f(i, j)` at every interior cell in parallel over rows.
    /// Ghost cells are left at zero.
    pub fn from_cells(grid: Grid, f: impl Fn(isize, isize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; grid.len()];
        let stride = grid.stride();
        data.par_chunks_mut(stride)
            .enumerate()
            .for_each(|(row, chunk)| {
                let j = row as isize - NG as isize;
                if j < 0 || j >= grid.ny as isize {
                    return;
                }
                for i in 0..grid.nx {
                    chunk[i + NG] = f(i as isize, j);
                }
            });
        Self { grid, data }
    }

    /// Samples a closed-form function at interior cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        Self::from_cells(grid, |i, j| f(grid.x(i), grid.y(j)))
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, v: f64) {
        let k = self.grid.idx(i, j);
        self.data[k] = v;
    }

    /// Pointwise map over every stored sample, ghosts included. Pointwise maps
    /// commute with even reflection and periodic copies, so ghost layers stay
    /// consistent.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            grid: self.grid,
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise binary map over every stored sample.
    pub fn zip_map(
        &self,
        other: &ScalarField,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<Self, FieldError> {
        check_same(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self, FieldError> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn interior(&self) -> impl Iterator<Item = f64> + '_ {
        let g = self.grid;
        (0..g.ny as isize).flat_map(move |j| (0..g.nx as isize).map(move |i| self.at(i, j)))
    }

    /// Interior samples in row-major order, without ghosts.
    pub fn interior_vec(&self) -> Vec<f64> {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.cells());
        for j in 0..g.ny as isize {
            let start = g.idx(0, j);
            out.extend_from_slice(&self.data[start..start + g.nx]);
        }
        out
    }

    pub fn min_interior(&self) -> f64 {
        self.interior().fold(f64::INFINITY, f64::min)
    }

    pub fn max_interior(&self) -> f64 {
        self.interior().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First interior cell holding NaN or ±∞, if any.
    pub fn first_non_finite(&self) -> Option<(isize, isize)> {
        let g = self.grid;
        for j in 0..g.ny as isize {
            for i in 0..g.nx as isize {
                if !self.at(i, j).is_finite() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn check_finite(&self, field: &'static str) -> Result<(), FieldError> {
        match self.first_non_finite() {
            Some((i, j)) => Err(FieldError::NonFinite { field, i, j }),
            None => Ok(()),
        }
    }

    /// Fills the ghost layers: periodic copies or wall reflections.
    pub fn fill_ghosts(&mut self, parity: Parity) {
        let g = self.grid;
        let (nx, ny) = (g.nx as isize, g.ny as isize);
        let ng = NG as isize;
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        // x direction, interior rows
        for j in 0..ny {
            for k in 1..=ng {
                let (lo, hi) = match g.mode {
                    BoundaryMode::Periodic => (self.at(nx - k, j), self.at(k - 1, j)),
                    BoundaryMode::Physical => {
                        (sign * self.at(k - 1, j), sign * self.at(nx - k, j))
                    }
                };
                self.set(-k, j, lo);
                self.set(nx - 1 + k, j, hi);
            }
        }
        // y direction over full rows, which also fills the corners
        for i in -ng..nx + ng {
            for k in 1..=ng {
                let (lo, hi) = match g.mode {
                    BoundaryMode::Periodic => (self.at(i, ny - k), self.at(i, k - 1)),
                    BoundaryMode::Physical => {
                        (sign * self.at(i, k - 1), sign * self.at(i, ny - k))
                    }
                };
                self.set(i, -k, lo);
                self.set(i, ny - 1 + k, hi);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VecField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2] + Sync) -> Self {
        Self {
            x: ScalarField::from_fn(grid, |x, y| f(x, y)[0]),
            y: ScalarField::from_fn(grid, |x, y| f(x, y)[1]),
        }
    }

    pub fn grid(&self) -> Grid {
        self.x.grid
    }

    pub fn sub(&self, other: &VecField) -> Result<Self, FieldError> {
        Ok(Self {
            x: self.x.sub(&other.x)?,
            y: self.y.sub(&other.y)?,
        })
    }

    pub fn fill_ghosts(&mut self, parity: Parity) {
        self.x.fill_ghosts(parity);
        self.y.fill_ghosts(parity);
    }
}

/// Symmetric 2×2 tensor field stored as its three independent planes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl SymTensorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            xx: ScalarField::zeros(grid),
            xy: ScalarField::zeros(grid),
            yy: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 3] + Sync) -> Self {
        Self {
            xx: ScalarField::from_fn(grid, |x, y| f(x, y)[0]),
            xy: ScalarField::from_fn(grid, |x, y| f(x, y)[1]),
            yy: ScalarField::from_fn(grid, |x, y| f(x, y)[2]),
        }
    }

    pub fn grid(&self) -> Grid {
        self.xx.grid
    }

    pub fn planes(&self) -> [&ScalarField; 3] {
        [&self.xx, &self.xy, &self.yy]
    }

    pub fn sub(&self, other: &SymTensorField) -> Result<Self, FieldError> {
        Ok(Self {
            xx: self.xx.sub(&other.xx)?,
            xy: self.xy.sub(&other.xy)?,
            yy: self.yy.sub(&other.yy)?,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            xx: self.xx.scaled(s),
            xy: self.xy.scaled(s),
            yy: self.yy.scaled(s),
        }
    }

    pub fn fill_ghosts(&mut self, parity: Parity) {
        self.xx.fill_ghosts(parity);
        self.xy.fill_ghosts(parity);
        self.yy.fill_ghosts(parity);
    }
}

/// Full (non-symmetric) 2×2 tensor field, used for velocity gradients with
/// the convention `(∇u)_{ij} = ∂_j u_i`: `xy` holds `∂_y u_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yx: ScalarField,
    pub yy: ScalarField,
}

impl TensorField {
    pub fn grid(&self) -> Grid {
        self.xx.grid
    }

    /// The 2×2 matrix at one cell, row index = velocity component.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> [[f64; 2]; 2] {
        let k = self.xx.grid.idx(i, j);
        [
            [self.xx.data[k], self.xy.data[k]],
            [self.yx.data[k], self.yy.data[k]],
        ]
    }
}

pub(crate) fn check_same(a: &Grid, b: &Grid) -> Result<(), FieldError> {
    if a == b {
        Ok(())
    } else {
        Err(FieldError::GridMismatch("operands live on different grids"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_extents_match_cell_counts() {
        let g = Grid::new(12, 20, 0.3, 2.0, BoundaryMode::Physical).unwrap();
        assert!((g.nx as f64 * g.dx - g.lx).abs() <= f64::EPSILON * g.lx);
        assert!((g.ny as f64 * g.dy - g.ly).abs() <= f64::EPSILON * g.ly);
        assert!((g.x(0) - 0.5 * g.dx).abs() < 1e-15);
        assert!((g.y(19) - 19.5 * g.dy).abs() < 1e-15);
    }

    #[test]
    fn tiny_grids_rejected() {
        assert!(Grid::new(4, 16, 1.0, 1.0, BoundaryMode::Periodic).is_err());
        assert!(Grid::new(16, 16, -1.0, 1.0, BoundaryMode::Periodic).is_err());
    }

    #[test]
    fn periodic_ghosts_wrap() {
        let g = Grid::unit_square(8, BoundaryMode::Periodic).unwrap();
        let mut s = ScalarField::from_cells(g, |i, j| (i + 10 * j) as f64);
        s.fill_ghosts(Parity::Even);
        assert_eq!(s.at(-1, 3), s.at(7, 3));
        assert_eq!(s.at(-2, 3), s.at(6, 3));
        assert_eq!(s.at(8, 0), s.at(0, 0));
        assert_eq!(s.at(2, -1), s.at(2, 7));
        assert_eq!(s.at(-1, -1), s.at(7, 7));
    }

    #[test]
    fn wall_reflections() {
        let g = Grid::unit_square(8, BoundaryMode::Physical).unwrap();
        let mut s = ScalarField::from_cells(g, |i, j| 1.0 + (i + 10 * j) as f64);
        let mut o = s.clone();
        s.fill_ghosts(Parity::Even);
        o.fill_ghosts(Parity::Odd);
        assert_eq!(s.at(-1, 2), s.at(0, 2));
        assert_eq!(s.at(-2, 2), s.at(1, 2));
        assert_eq!(s.at(8, 2), s.at(7, 2));
        assert_eq!(o.at(-1, 2), -o.at(0, 2));
        assert_eq!(o.at(3, 9), -o.at(3, 6));
        // face value of an odd field vanishes exactly
        assert_eq!(0.5 * (o.at(-1, 4) + o.at(0, 4)), 0.0);
    }
}
