//! Uniform node-centred grids and the fields that live on them.
//!
//! Values are stored row-major with `ξ₂` rows outer and `ξ₁` inner, so node
//! `(i, j)` lives at `j * nx + i`. All difference operators are second-order
//! centred at interior nodes. First derivatives use second-order one-sided
//! stencils on the boundary ring; second derivatives use the first-order
//! one-sided three-point stencil there (exact on quadratics either way).

pub(crate) mod calculus;
pub mod io;

pub use calculus::{divergence, gradient, hessian, laplacian, perp_gradient, rot, Hessian};
pub use io::{read_field, write_field, write_field_to, AnyField, FieldKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        let finite = [x0, x1, y0, y1].iter().all(|v| v.is_finite());
        if !finite || x1 <= x0 || y1 <= y0 {
            return Err(Error::Config(format!(
                "grid bounds must satisfy x0 < x1, y0 < y1 (got [{x0}, {x1}] x [{y0}, {y1}])"
            )));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::Config(format!(
                "grid needs at least 3 nodes per axis (got {nx} x {ny})"
            )));
        }
        Ok(Self { x0, x1, y0, y1, nx, ny })
    }

    /// Square grid `[lo, hi]²` with `n` nodes per side.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, lo, hi, n, n)
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x1
        } else {
            self.x0 + i as f64 * self.hx()
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.y1
        } else {
            self.y0 + j as f64 * self.hy()
        }
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x(i), self.y(j))
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Distance (in rings) of node `(i, j)` from the frame; the frame is ring 0.
    pub fn ring(&self, i: usize, j: usize) -> usize {
        i.min(j).min(self.nx - 1 - i).min(self.ny - 1 - j)
    }

    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    /// Frame node indices in a fixed order (bottom, right, top, left, counter-clockwise).
    pub fn frame(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx + ny) - 4);
        out.extend((0..nx).map(|i| self.idx(i, 0)));
        out.extend((1..ny).map(|j| self.idx(nx - 1, j)));
        out.extend((0..nx - 1).rev().map(|i| self.idx(i, ny - 1)));
        out.extend((1..ny - 1).rev().map(|j| self.idx(0, j)));
        out
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    pub(crate) fn same_as(&self, other: &Grid2D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "fields live on different grids ({}x{} vs {}x{})",
                self.nx, self.ny, other.nx, other.ny
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.nx,
                grid.ny,
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(ξ₁, ξ₂)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max |value| over interior nodes only.
    pub fn max_abs_interior(&self) -> f64 {
        self.grid.interior().fold(0.0, |m, (i, j)| m.max(self.at(i, j).abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs_diff_interior(&self, other: &ScalarField) -> f64 {
        self.grid
            .interior()
            .fold(0.0, |m, (i, j)| m.max((self.at(i, j) - other.at(i, j)).abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copy of `self` with frame values taken from `frame_source`.
    pub fn with_frame_of(&self, frame_source: &ScalarField) -> Self {
        let mut out = self.clone();
        for k in self.grid.frame() {
            out.values[k] = frame_source.values[k];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid2D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_components(u: ScalarField, v: ScalarField) -> Result<Self> {
        u.grid.same_as(&v.grid)?;
        Ok(Self {
            grid: u.grid,
            u: u.values,
            v: v.values,
        })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (u, v) = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .unzip();
        Self { grid, u, v }
    }

    pub fn u_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.u.clone(),
        }
    }

    pub fn v_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.v.clone(),
        }
    }

    pub fn norm_sq(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.u.iter().zip(&self.v).map(|(a, b)| a * a + b * b).collect(),
        }
    }

    pub fn axpy(&self, alpha: f64, other: &VectorField) -> VectorField {
        VectorField {
            grid: self.grid,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + alpha * b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        let du = self.u.iter().zip(&other.u).map(|(a, b)| (a - b).abs());
        let dv = self.v.iter().zip(&other.v).map(|(a, b)| (a - b).abs());
        du.chain(dv).fold(0.0, f64::max)
    }
}
