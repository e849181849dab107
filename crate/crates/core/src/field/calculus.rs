use super::{Grid2D, ScalarField, VectorField};

/// `∂/∂ξ₁` of `f` at node `(i, j)`.
#[inline]
pub(crate) fn dx(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let h2 = 2.0 * g.hx();
    let at = |ii: usize| f[g.idx(ii, j)];
    if i == 0 {
        (4.0 * (at(1) - at(0)) - (at(2) - at(0))) / h2
    } else if i == g.nx - 1 {
        (4.0 * (at(i) - at(i - 1)) - (at(i) - at(i - 2))) / h2
    } else {
        (at(i + 1) - at(i - 1)) / h2
    }
}

/// `∂/∂ξ₂` of `f` at node `(i, j)`.
#[inline]
pub(crate) fn dy(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let h2 = 2.0 * g.hy();
    let at = |jj: usize| f[g.idx(i, jj)];
    if j == 0 {
        (4.0 * (at(1) - at(0)) - (at(2) - at(0))) / h2
    } else if j == g.ny - 1 {
        (4.0 * (at(j) - at(j - 1)) - (at(j) - at(j - 2))) / h2
    } else {
        (at(j + 1) - at(j - 1)) / h2
    }
}

/// Weights of [`dx`] at `(i, j)` as `(node index, weight)` pairs.
pub(crate) fn dx_weights(g: &Grid2D, i: usize, j: usize) -> Vec<(usize, f64)> {
    let h2 = 2.0 * g.hx();
    let at = |ii: usize| g.idx(ii, j);
    if i == 0 {
        vec![(at(0), -3.0 / h2), (at(1), 4.0 / h2), (at(2), -1.0 / h2)]
    } else if i == g.nx - 1 {
        vec![(at(i), 3.0 / h2), (at(i - 1), -4.0 / h2), (at(i - 2), 1.0 / h2)]
    } else {
        vec![(at(i + 1), 1.0 / h2), (at(i - 1), -1.0 / h2)]
    }
}

/// Weights of [`dy`] at `(i, j)`.
pub(crate) fn dy_weights(g: &Grid2D, i: usize, j: usize) -> Vec<(usize, f64)> {
    let h2 = 2.0 * g.hy();
    let at = |jj: usize| g.idx(i, jj);
    if j == 0 {
        vec![(at(0), -3.0 / h2), (at(1), 4.0 / h2), (at(2), -1.0 / h2)]
    } else if j == g.ny - 1 {
        vec![(at(j), 3.0 / h2), (at(j - 1), -4.0 / h2), (at(j - 2), 1.0 / h2)]
    } else {
        vec![(at(j + 1), 1.0 / h2), (at(j - 1), -1.0 / h2)]
    }
}

#[inline]
pub(crate) fn dxx(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let c = if i == 0 {
        1
    } else if i == g.nx - 1 {
        g.nx - 2
    } else {
        i
    };
    let hx = g.hx();
    (f[g.idx(c - 1, j)] - 2.0 * f[g.idx(c, j)] + f[g.idx(c + 1, j)]) / (hx * hx)
}

#[inline]
pub(crate) fn dyy(g: &Grid2D, f: &[f64], i: usize, j: usize) -> f64 {
    let c = if j == 0 {
        1
    } else if j == g.ny - 1 {
        g.ny - 2
    } else {
        j
    };
    let hy = g.hy();
    (f[g.idx(i, c - 1)] - 2.0 * f[g.idx(i, c)] + f[g.idx(i, c + 1)]) / (hy * hy)
}

fn apply(g: &Grid2D, op: impl Fn(usize, usize) -> f64) -> ScalarField {
    let mut values = Vec::with_capacity(g.len());
    for j in 0..g.ny {
        for i in 0..g.nx {
            values.push(op(i, j));
        }
    }
    ScalarField { grid: *g, values }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let g = &f.grid;
    VectorField {
        grid: *g,
        u: apply(g, |i, j| dx(g, &f.values, i, j)).values,
        v: apply(g, |i, j| dy(g, &f.values, i, j)).values,
    }
}

/// Second derivatives `(f₁₁, f₁₂, f₂₂)`.
#[derive(Debug, Clone)]
pub struct Hessian {
    pub f11: ScalarField,
    pub f12: ScalarField,
    pub f22: ScalarField,
}

/// The mixed derivative is `∂₂(∂₁ f)` built from the first-derivative
/// stencils, which is the four-point cross stencil at interior nodes.
pub fn hessian(f: &ScalarField) -> Hessian {
    let g = &f.grid;
    let fx = apply(g, |i, j| dx(g, &f.values, i, j));
    Hessian {
        f11: apply(g, |i, j| dxx(g, &f.values, i, j)),
        f12: apply(g, |i, j| dy(g, &fx.values, i, j)),
        f22: apply(g, |i, j| dyy(g, &f.values, i, j)),
    }
}

/// Compact (five-point at interior nodes) Laplacian `f₁₁ + f₂₂`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = &f.grid;
    apply(g, |i, j| dxx(g, &f.values, i, j) + dyy(g, &f.values, i, j))
}

pub fn divergence(w: &VectorField) -> ScalarField {
    let g = &w.grid;
    apply(g, |i, j| dx(g, &w.u, i, j) + dy(g, &w.v, i, j))
}

/// Scalar curl `∂₁V² − ∂₂V¹`.
pub fn rot(w: &VectorField) -> ScalarField {
    let g = &w.grid;
    apply(g, |i, j| dx(g, &w.v, i, j) - dy(g, &w.u, i, j))
}

/// `∇⊥z = (−∂₂z, ∂₁z)`, using the same stencils as [`divergence`].
pub fn perp_gradient(z: &ScalarField) -> VectorField {
    let g = &z.grid;
    VectorField {
        grid: *g,
        u: apply(g, |i, j| -dy(g, &z.values, i, j)).values,
        v: apply(g, |i, j| dx(g, &z.values, i, j)).values,
    }
}
