//! Hodge–Helmholtz splitting `U = ∇ψ + W`, stream functions, and the
//! Bernoulli-type construction `∇F = (G, H)`.
//!
//! The potential solves the discrete Neumann problem built from the same
//! stencils used to differentiate `W` afterwards: at interior nodes the
//! equation is `div(grad ψ) = div U` with the wide (composed) stencil, so
//! `div W` vanishes there up to the linear solve. Frame nodes carry the
//! one-sided normal-derivative condition `∂ψ/∂ν = U·ν`, corners a bilinear
//! extrapolation. That system has exactly the constants as kernel; one
//! boundary row is replaced by `ψ = 0` at an anchor node, and the result is
//! shifted to zero mean. The Neumann condition of the dropped row is then
//! reported as the flux defect.

use crate::error::{Error, Result};
use crate::field::calculus::{dx_weights, dy_weights};
use crate::field::{divergence, gradient, perp_gradient, rot, Grid2D, ScalarField, VectorField};
use crate::gas::GasLaw;
use crate::linalg::{BandedLu, CsrMatrix, LinearOptions};
use crate::stencil::StencilOperator;

/// Relative residual the decomposition's direct solve is refined to.
const HODGE_LIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub psi: ScalarField,
    pub w: VectorField,
    /// `‖U − ∇ψ − W‖∞`; zero by construction.
    pub residual: f64,
    /// `‖div W‖∞` over interior nodes.
    pub div_w_norm: f64,
    /// Largest `|W·ν|` over non-corner frame nodes.
    pub flux_defect: f64,
}

/// Factorized Neumann system for one grid; reusable across many fields.
#[derive(Debug, Clone)]
pub struct HodgeSolver {
    grid: Grid2D,
    matrix: CsrMatrix,
    lu: BandedLu,
    anchor: usize,
}

fn is_corner(g: &Grid2D, i: usize, j: usize) -> bool {
    (i == 0 || i == g.nx - 1) && (j == 0 || j == g.ny - 1)
}

impl HodgeSolver {
    pub fn new(grid: Grid2D) -> Result<Self> {
        let g = grid;
        let n = g.len();
        // The left null vector of the full system vanishes on alternate
        // frame rows, so the anchor must sit where it does not: (0, 1).
        let anchor = g.idx(0, 1);
        let mut a = CsrMatrix::with_capacity(n, 13 * n);
        let mut row = Vec::with_capacity(16);
        for k in 0..n {
            let (i, j) = g.ij(k);
            row.clear();
            if k == anchor {
                row.push((k, 1.0));
            } else if !g.is_boundary(i, j) {
                // div(grad ψ): compose the first-derivative stencils
                for (m, w) in dx_weights(&g, i, j) {
                    let (mi, mj) = g.ij(m);
                    row.extend(dx_weights(&g, mi, mj).into_iter().map(|(c, v)| (c, w * v)));
                }
                for (m, w) in dy_weights(&g, i, j) {
                    let (mi, mj) = g.ij(m);
                    row.extend(dy_weights(&g, mi, mj).into_iter().map(|(c, v)| (c, w * v)));
                }
            } else if is_corner(&g, i, j) {
                let si = if i == 0 { 1 } else { i - 1 };
                let sj = if j == 0 { 1 } else { j - 1 };
                row.extend([
                    (k, 1.0),
                    (g.idx(si, j), -1.0),
                    (g.idx(i, sj), -1.0),
                    (g.idx(si, sj), 1.0),
                ]);
            } else if i == 0 || i == g.nx - 1 {
                row.extend(dx_weights(&g, i, j));
            } else {
                row.extend(dy_weights(&g, i, j));
            }
            a.push_row(&mut row);
        }
        let lu = BandedLu::factor(&a)?;
        Ok(Self {
            grid,
            matrix: a,
            lu,
            anchor,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn decompose(&self, u: &VectorField) -> Result<Decomposition> {
        let g = self.grid;
        g.same_as(&u.grid)?;
        if u.u.iter().chain(&u.v).any(|v| !v.is_finite()) {
            return Err(Error::Domain("pseudo-velocity has non-finite entries".into()));
        }
        let div_u = divergence(u);
        let mut b = vec![0.0; g.len()];
        for (k, bk) in b.iter_mut().enumerate() {
            let (i, j) = g.ij(k);
            *bk = if k == self.anchor || is_corner(&g, i, j) {
                0.0
            } else if !g.is_boundary(i, j) {
                div_u.values[k]
            } else if i == 0 || i == g.nx - 1 {
                u.u[k]
            } else {
                u.v[k]
            };
        }
        let values = if b.iter().all(|v| *v == 0.0) {
            vec![0.0; g.len()]
        } else {
            self.lu.solve_refined(&self.matrix, &b, HODGE_LIN_TOL, 3)?.0
        };
        let mut psi = ScalarField::from_values(g, values)?;
        let mean = psi.mean();
        psi.values.iter_mut().for_each(|v| *v -= mean);
        let w = u.axpy(-1.0, &gradient(&psi));
        let residual = u.axpy(-1.0, &gradient(&psi).axpy(1.0, &w)).max_abs();
        let div_w_norm = divergence(&w).max_abs_interior();
        let mut flux_defect = 0.0f64;
        for k in g.frame() {
            let (i, j) = g.ij(k);
            if is_corner(&g, i, j) {
                continue;
            }
            let wn = if i == 0 || i == g.nx - 1 { w.u[k] } else { w.v[k] };
            flux_defect = flux_defect.max(wn.abs());
        }
        Ok(Decomposition {
            psi,
            w,
            residual,
            div_w_norm,
            flux_defect,
        })
    }
}

/// One-off decomposition; build a [`HodgeSolver`] to reuse the factorization.
pub fn decompose(u: &VectorField) -> Result<Decomposition> {
    HodgeSolver::new(u.grid)?.decompose(u)
}

#[derive(Debug, Clone)]
pub struct StreamFunction {
    pub zeta: ScalarField,
    /// `max |∇⊥ζ − W|` over interior nodes (the harmonic remainder).
    pub mismatch: f64,
}

/// Solve `Δζ = rot W` with `ζ = 0` on the frame.
pub fn stream_function(w: &VectorField, div_tol: f64, opts: &LinearOptions) -> Result<StreamFunction> {
    let g = w.grid;
    let div = divergence(w).max_abs_interior();
    if div > div_tol {
        return Err(Error::NonSolenoidalInput(div));
    }
    let zero = ScalarField::zeros(g);
    let (zeta, _) = StencilOperator::laplacian(g, 1.0).solve_dirichlet(&rot(w), &zero, None, opts)?;
    let p = perp_gradient(&zeta);
    let mismatch = g.interior().fold(0.0f64, |m, (i, j)| {
        let k = g.idx(i, j);
        m.max((p.u[k] - w.u[k]).abs()).max((p.v[k] - w.v[k]).abs())
    });
    Ok(StreamFunction { zeta, mismatch })
}

/// `G = ωU² − W¹`, `H = −ωU¹ − W²` with `ω = rot U`.
///
/// This is the sign for which `∂₁H − ∂₂G = −(div(ωU) + ω)` when
/// `rot W = ω`, i.e. `∇F = −W − ωU⊥` with `U⊥ = (−U², U¹)`.
pub fn bernoulli_gh(u: &VectorField, w: &VectorField) -> Result<(ScalarField, ScalarField)> {
    u.grid.same_as(&w.grid)?;
    let omega = rot(u);
    let g = u.grid;
    let gv = (0..g.len()).map(|k| omega.values[k] * u.v[k] - w.u[k]).collect();
    let hv = (0..g.len()).map(|k| -omega.values[k] * u.u[k] - w.v[k]).collect();
    Ok((ScalarField::from_values(g, gv)?, ScalarField::from_values(g, hv)?))
}

/// Two-leg line integral of `(G, H)`: along `ξ₂ = ξ₂(anchor)` first, then
/// vertically, with composite trapezoid quadrature on grid lines.
pub fn reconstruct_f(
    g_field: &ScalarField,
    h_field: &ScalarField,
    c: f64,
    anchor: (usize, usize),
) -> Result<ScalarField> {
    let g = g_field.grid;
    g.same_as(&h_field.grid)?;
    let (ia, ja) = anchor;
    if ia >= g.nx || ja >= g.ny {
        return Err(Error::Domain(format!(
            "anchor ({ia}, {ja}) outside a {}x{} grid",
            g.nx, g.ny
        )));
    }
    let (hx, hy) = (g.hx(), g.hy());
    // first leg: cumulative integral of G along row ja, starting at ia
    let mut first = vec![0.0; g.nx];
    for i in ia + 1..g.nx {
        first[i] = first[i - 1] + 0.5 * hx * (g_field.at(i - 1, ja) + g_field.at(i, ja));
    }
    for i in (0..ia).rev() {
        first[i] = first[i + 1] - 0.5 * hx * (g_field.at(i, ja) + g_field.at(i + 1, ja));
    }
    let mut f = ScalarField::zeros(g);
    for i in 0..g.nx {
        f.set(i, ja, c + first[i]);
        for j in ja + 1..g.ny {
            let v = f.at(i, j - 1) + 0.5 * hy * (h_field.at(i, j - 1) + h_field.at(i, j));
            f.set(i, j, v);
        }
        for j in (0..ja).rev() {
            let v = f.at(i, j + 1) - 0.5 * hy * (h_field.at(i, j) + h_field.at(i, j + 1));
            f.set(i, j, v);
        }
    }
    Ok(f)
}

/// `max |∂₁H − ∂₂G|` over interior nodes.
pub fn integrability_residual(g_field: &ScalarField, h_field: &ScalarField) -> Result<f64> {
    g_field.grid.same_as(&h_field.grid)?;
    let v = VectorField {
        grid: g_field.grid,
        u: g_field.values.clone(),
        v: h_field.values.clone(),
    };
    Ok(rot(&v).max_abs_interior())
}

#[derive(Debug, Clone)]
pub struct BernoulliFields {
    pub g: ScalarField,
    pub h: ScalarField,
    pub f: ScalarField,
    pub c: f64,
    pub integrability_residual: f64,
}

/// `G`, `H` and the reconstructed `F` for a decomposed pseudo-velocity.
pub fn bernoulli_fields(u: &VectorField, w: &VectorField, c: f64, anchor: (usize, usize)) -> Result<BernoulliFields> {
    let (g, h) = bernoulli_gh(u, w)?;
    let f = reconstruct_f(&g, &h, c, anchor)?;
    let integrability_residual = integrability_residual(&g, &h)?;
    Ok(BernoulliFields {
        g,
        h,
        f,
        c,
        integrability_residual,
    })
}

/// `h(ρ) + ψ + ½|U|² − F` nodewise.
pub fn bernoulli_residual(
    law: &GasLaw,
    rho: &ScalarField,
    psi: &ScalarField,
    u: &VectorField,
    f: &ScalarField,
) -> Result<ScalarField> {
    let g = rho.grid;
    g.same_as(&psi.grid)?;
    g.same_as(&u.grid)?;
    g.same_as(&f.grid)?;
    let mut out = ScalarField::zeros(g);
    for k in 0..g.len() {
        let h = law.enthalpy(rho.values[k])?;
        out.values[k] = h + psi.values[k] + 0.5 * (u.u[k] * u.u[k] + u.v[k] * u.v[k]) - f.values[k];
    }
    Ok(out)
}

/// Vorticity-equation residual `div(ωU) + ω` with `ω = rot U`, at interior nodes.
pub fn vorticity_equation_residual(u: &VectorField) -> ScalarField {
    let omega = rot(u);
    let flux = VectorField {
        grid: u.grid,
        u: omega.values.iter().zip(&u.u).map(|(w, a)| w * a).collect(),
        v: omega.values.iter().zip(&u.v).map(|(w, a)| w * a).collect(),
    };
    let mut r = divergence(&flux).zip_map(&omega, |d, w| d + w);
    for k in u.grid.frame() {
        r.values[k] = 0.0;
    }
    r
}
