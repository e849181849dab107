//! Second-order linear operators with variable coefficients on the grid
//! interior, with Dirichlet data on the frame:
//!
//! `L[φ] = a₁₁φ₁₁ + a₁₂φ₁₂ + a₂₂φ₂₂ + b₁φ₁ + b₂φ₂ + cφ`
//!
//! Discretized with the field-module stencils: three-point second
//! differences, the four-point cross for `φ₁₂`, centred first differences.

use crate::error::{Error, Result};
use crate::field::{calculus, Grid2D, ScalarField};
use crate::linalg::{self, CsrMatrix, LinearOptions, LinearStats};

#[derive(Debug, Clone)]
pub struct StencilOperator {
    pub grid: Grid2D,
    /// Coefficients per node (full-grid arrays; frame entries are unused).
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub c: Vec<f64>,
}

impl StencilOperator {
    pub fn zeros(grid: Grid2D) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            a11: z.clone(),
            a12: z.clone(),
            a22: z.clone(),
            b1: z.clone(),
            b2: z.clone(),
            c: z,
        }
    }

    /// `κ Δ`.
    pub fn laplacian(grid: Grid2D, kappa: f64) -> Self {
        let mut op = Self::zeros(grid);
        op.a11.fill(kappa);
        op.a22.fill(kappa);
        op
    }

    /// Apply at interior nodes; frame entries of the result are zero.
    pub fn apply(&self, phi: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let f = &phi.values;
        let mut out = ScalarField::zeros(*g);
        for (i, j) in g.interior() {
            let k = g.idx(i, j);
            let fx = calculus::dx(g, f, i, j);
            let fy = calculus::dy(g, f, i, j);
            let fxx = calculus::dxx(g, f, i, j);
            let fyy = calculus::dyy(g, f, i, j);
            let fxy = cross(g, f, i, j);
            out.values[k] = self.a11[k] * fxx
                + self.a12[k] * fxy
                + self.a22[k] * fyy
                + self.b1[k] * fx
                + self.b2[k] * fy
                + self.c[k] * f[k];
        }
        out
    }

    /// Smallest eigenvalue of the symmetric principal part over interior nodes.
    pub fn min_principal_eigenvalue(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, j) in self.grid.interior() {
            let k = self.grid.idx(i, j);
            let (p, q, off) = (self.a11[k], self.a22[k], 0.5 * self.a12[k]);
            let mean = 0.5 * (p + q);
            let rad = (0.25 * (p - q) * (p - q) + off * off).sqrt();
            let lam = mean - rad;
            if lam < best.0 {
                best = (lam, k);
            }
        }
        best
    }

    fn interior_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.grid.nx - 2) + (i - 1)
    }

    /// Matrix over interior unknowns plus the frame contribution to the rhs
    /// (already negated, so the system reads `A x = rhs + frame_rhs`).
    pub fn assemble(&self, boundary: &ScalarField) -> (CsrMatrix, Vec<f64>) {
        let g = &self.grid;
        let m = g.nx - 2;
        let n = m * (g.ny - 2);
        let (hx, hy) = (g.hx(), g.hy());
        let mut a = CsrMatrix::with_capacity(n, 9 * n);
        let mut frame_rhs = vec![0.0; n];
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
        for (i, j) in g.interior() {
            let k = g.idx(i, j);
            let r = self.interior_index(i, j);
            let cxx = self.a11[k] / (hx * hx);
            let cyy = self.a22[k] / (hy * hy);
            let cx = self.b1[k] / (2.0 * hx);
            let cy = self.b2[k] / (2.0 * hy);
            let cxy = self.a12[k] / (4.0 * hx * hy);
            let entries = [
                (i, j, -2.0 * cxx - 2.0 * cyy + self.c[k]),
                (i + 1, j, cxx + cx),
                (i - 1, j, cxx - cx),
                (i, j + 1, cyy + cy),
                (i, j - 1, cyy - cy),
                (i + 1, j + 1, cxy),
                (i - 1, j - 1, cxy),
                (i + 1, j - 1, -cxy),
                (i - 1, j + 1, -cxy),
            ];
            row.clear();
            for (ii, jj, v) in entries {
                if g.is_boundary(ii, jj) {
                    frame_rhs[r] -= v * boundary.at(ii, jj);
                } else {
                    row.push((self.interior_index(ii, jj), v));
                }
            }
            a.push_row(&mut row);
        }
        (a, frame_rhs)
    }

    /// Solve `L[φ] = rhs` in the interior with `φ = boundary` on the frame.
    ///
    /// `guess` seeds Krylov methods. The returned field carries the frame
    /// values of `boundary`.
    pub fn solve_dirichlet(
        &self,
        rhs: &ScalarField,
        boundary: &ScalarField,
        guess: Option<&ScalarField>,
        opts: &LinearOptions,
    ) -> Result<(ScalarField, LinearStats)> {
        let g = &self.grid;
        g.same_as(&rhs.grid)?;
        g.same_as(&boundary.grid)?;
        let (a, mut b) = self.assemble(boundary);
        for (i, j) in g.interior() {
            b[self.interior_index(i, j)] += rhs.at(i, j);
        }
        let x0: Option<Vec<f64>> = guess.map(|f| g.interior().map(|(i, j)| f.at(i, j)).collect());
        let (x, stats) = linalg::solve(&a, &b, x0.as_deref(), opts)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal("linear solve produced non-finite values".into()));
        }
        let mut out = boundary.clone();
        for ((i, j), v) in g.interior().zip(x) {
            out.set(i, j, v);
        }
        Ok((out, stats))
    }
}

#[inline]
pub(crate) fn cross(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    (f[g.idx(i + 1, j + 1)] - f[g.idx(i + 1, j - 1)] - f[g.idx(i - 1, j + 1)] + f[g.idx(i - 1, j - 1)])
        / (4.0 * g.hx() * g.hy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::hessian;
    use crate::linalg::LinearMethod;

    fn opts(method: LinearMethod) -> LinearOptions {
        LinearOptions {
            method,
            tol: 1e-12,
            max_iters: 5000,
        }
    }

    #[test]
    fn pure_laplacian_entries() {
        let g = Grid2D::square(0.0, 1.0, 5).unwrap();
        let op = StencilOperator::laplacian(g, 1.0);
        let (a, _) = op.assemble(&ScalarField::zeros(g));
        let h2 = 1.0 / (0.25 * 0.25);
        // centre unknown (2,2) -> interior index 4
        assert_eq!(a.get(4, 4), -4.0 * h2);
        assert_eq!(a.get(4, 1), h2);
        assert_eq!(a.get(4, 3), h2);
        assert_eq!(a.get(4, 0), 0.0);
    }

    #[test]
    fn harmonic_linear_function() {
        let g = Grid2D::new(0.0, 2.0, -1.0, 1.0, 9, 7).unwrap();
        let op = StencilOperator::laplacian(g, 1.0);
        let bnd = ScalarField::from_fn(g, |x, _| x);
        for (m, tol) in [(LinearMethod::BandedLu, 1e-12), (LinearMethod::Bicgstab, 1e-10)] {
            let (phi, _) = op
                .solve_dirichlet(&ScalarField::zeros(g), &bnd, None, &opts(m))
                .unwrap();
            assert!(phi.max_abs_diff(&bnd) < tol, "{m:?} {}", phi.max_abs_diff(&bnd));
        }
        let (phi, _) = op
            .solve_dirichlet(
                &ScalarField::zeros(g),
                &ScalarField::zeros(g),
                None,
                &opts(LinearMethod::BandedLu),
            )
            .unwrap();
        assert_eq!(phi.max_abs(), 0.0);
    }

    #[test]
    fn matrix_matches_apply() {
        let g = Grid2D::new(-0.5, 0.5, 0.0, 1.0, 8, 6).unwrap();
        let mut op = StencilOperator::zeros(g);
        for k in 0..g.len() {
            let (x, y) = g.point(k);
            op.a11[k] = 1.0 + x * x;
            op.a12[k] = 0.3 * x * y;
            op.a22[k] = 2.0 - y;
            op.b1[k] = x;
            op.b2[k] = -y;
            op.c[k] = 0.5;
        }
        let phi = ScalarField::from_fn(g, |x, y| (x * 2.0).sin() + y * y * x);
        let direct = op.apply(&phi);
        let (a, frame) = op.assemble(&phi);
        let xin: Vec<f64> = g.interior().map(|(i, j)| phi.at(i, j)).collect();
        let ax = a.matvec(&xin);
        for (r, (i, j)) in g.interior().enumerate() {
            assert!((ax[r] - frame[r] - direct.at(i, j)).abs() < 1e-10);
        }
        // cross stencil agrees with the Hessian's mixed derivative
        let h = hessian(&phi);
        for (i, j) in g.interior() {
            assert!((cross(&g, &phi.values, i, j) - h.f12.at(i, j)).abs() < 1e-10);
        }
    }

    #[test]
    fn principal_eigenvalue() {
        let g = Grid2D::square(0.0, 1.0, 3).unwrap();
        let mut op = StencilOperator::zeros(g);
        let k = g.idx(1, 1);
        // [[2, -1], [-1, 2]] written with a12 = -2
        op.a11[k] = 2.0;
        op.a22[k] = 2.0;
        op.a12[k] = -2.0;
        let (lam, node) = op.min_principal_eigenvalue();
        assert!((lam - 1.0).abs() < 1e-14);
        assert_eq!(node, k);
    }
}
