//! Quasi-potential flows `U = ∇ψ + δ∇⊥ζ̃` truncated at first order in `δ`.
//!
//! The `ψ`-equation is the potential equation with `c² = c₀² − δQ₁` and the
//! extra forcing `δN₁`; `ω̃ = Δζ̃` is transported along `∇ψ`. The solver
//! runs a block Gauss–Seidel outer loop per `δ` and warm-starts the next.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{calculus, gradient, hessian, laplacian, perp_gradient, Grid2D, ScalarField, VectorField};
use crate::gas::GasLaw;
use crate::hodge::{integrability_residual, reconstruct_f};
use crate::potential::{
    self, c2_of_phi, epsilon_continuation, picard_solve_with, residual_q, residual_with, C2Field, EpsilonSchedule,
    Forcing, PicardParams, PotentialProblem, SolveReport, StageFailure,
};
use crate::regime::pseudo_mach_field;
use crate::stencil::{cross, StencilOperator};
use crate::vorticity::{self, Drift, TransportParams};

/// Nodewise `(D∇⊥ζ)` as `[[∂₁w₁, ∂₂w₁], [∂₁w₂, ∂₂w₂]]` with `w = ∇⊥ζ`.
fn perp_jacobian(zeta: &ScalarField) -> [Vec<f64>; 4] {
    let h = hessian(zeta);
    let neg = |f: &ScalarField| f.values.iter().map(|v| -v).collect::<Vec<_>>();
    [neg(&h.f12), neg(&h.f22), h.f11.values, h.f12.values]
}

/// `(Mx)·y` for a row-major 2×2 matrix.
#[inline]
fn quad(m: [f64; 4], x: (f64, f64), y: (f64, f64)) -> f64 {
    (m[0] * x.0 + m[1] * x.1) * y.0 + (m[2] * x.0 + m[3] * x.1) * y.1
}

/// The three expansion terms `N₁, N₂, N₃` of the first rotational equation.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub n1: ScalarField,
    pub n2: ScalarField,
    pub n3: ScalarField,
}

pub fn expansion_terms(psi: &ScalarField, zeta: &ScalarField) -> Result<Expansion> {
    psi.grid.same_as(&zeta.grid)?;
    let g = psi.grid;
    let a = gradient(psi);
    let w = perp_gradient(zeta);
    let hp = hessian(psi);
    let dw = perp_jacobian(zeta);
    let (mut n1, mut n2, mut n3) = (ScalarField::zeros(g), ScalarField::zeros(g), ScalarField::zeros(g));
    for k in 0..g.len() {
        let av = (a.u[k], a.v[k]);
        let wv = (w.u[k], w.v[k]);
        let d2 = [hp.f11.values[k], hp.f12.values[k], hp.f12.values[k], hp.f22.values[k]];
        let dwk = [dw[0][k], dw[1][k], dw[2][k], dw[3][k]];
        let aw = av.0 * wv.0 + av.1 * wv.1;
        n1.values[k] = quad(dwk, av, av) + quad(d2, av, wv) + quad(d2, wv, av) + 2.0 * aw;
        n2.values[k] = quad(d2, wv, wv) + quad(dwk, av, wv) + quad(dwk, wv, av) + wv.0 * wv.0 + wv.1 * wv.1;
        n3.values[k] = quad(dwk, wv, wv);
    }
    Ok(Expansion { n1, n2, n3 })
}

/// First-order forcing `N₁(ψ, ζ)`.
pub fn compute_n1(psi: &ScalarField, zeta: &ScalarField) -> Result<ScalarField> {
    Ok(expansion_terms(psi, zeta)?.n1)
}

#[derive(Debug, Clone)]
pub struct F1Reconstruction {
    pub f1: ScalarField,
    /// `max |∂₁V² − ∂₂V¹|` over interior nodes of the target `V`.
    pub curl_defect: f64,
}

/// Targets `V = Δζ∇⊥ψ + ∇⊥ζ` of `∇F₁`.
fn f1_target(psi: &ScalarField, zeta: &ScalarField) -> (ScalarField, ScalarField) {
    let lz = laplacian(zeta);
    let pp = perp_gradient(psi);
    let pz = perp_gradient(zeta);
    let g = psi.grid;
    let mut vg = ScalarField::zeros(g);
    let mut vh = ScalarField::zeros(g);
    for k in 0..g.len() {
        vg.values[k] = lz.values[k] * pp.u[k] + pz.u[k];
        vh.values[k] = lz.values[k] * pp.v[k] + pz.v[k];
    }
    (vg, vh)
}

/// Reconstruct `F₁` from `∇F₁ = Δζ∇⊥ψ + ∇⊥ζ` by two-leg quadrature with
/// `F₁(anchor) = c`.
pub fn reconstruct_f1(
    psi: &ScalarField,
    zeta: &ScalarField,
    c: f64,
    anchor: (usize, usize),
) -> Result<F1Reconstruction> {
    psi.grid.same_as(&zeta.grid)?;
    let (vg, vh) = f1_target(psi, zeta);
    Ok(F1Reconstruction {
        f1: reconstruct_f(&vg, &vh, c, anchor)?,
        curl_defect: integrability_residual(&vg, &vh)?,
    })
}

/// `Q₁ = (γ−1)(F₁ + ∇ψ·∇⊥ζ)`; identically zero for the isothermal law.
pub fn compute_q1(law: &GasLaw, psi: &ScalarField, zeta: &ScalarField, f1: &ScalarField) -> Result<ScalarField> {
    psi.grid.same_as(&zeta.grid)?;
    psi.grid.same_as(&f1.grid)?;
    if law.is_isothermal() {
        return Ok(ScalarField::zeros(psi.grid));
    }
    let a = gradient(psi);
    let w = perp_gradient(zeta);
    let gm1 = law.gamma() - 1.0;
    Ok(ScalarField {
        grid: psi.grid,
        values: (0..psi.grid.len())
            .map(|k| gm1 * (f1.values[k] + a.u[k] * w.u[k] + a.v[k] * w.v[k]))
            .collect(),
    })
}

/// `c² = c₀²(ψ) − δQ₁`, clamped at `c2_floor`.
pub fn c2_quasi(
    law: &GasLaw,
    psi: &ScalarField,
    zeta: &ScalarField,
    delta: f64,
    f1: &ScalarField,
    c2_floor: f64,
) -> Result<C2Field> {
    let base = c2_of_phi(law, psi, &gradient(psi), f64::NEG_INFINITY)?;
    let q1 = compute_q1(law, psi, zeta, f1)?;
    let mut c2 = base.c2;
    let mut clamped = 0;
    for (c, q) in c2.values.iter_mut().zip(&q1.values) {
        *c -= delta * q;
        if *c <= c2_floor {
            clamped += 1;
            *c = c2_floor;
        }
    }
    Ok(C2Field { c2, clamped })
}

/// `F(0, ψ) = c₀²(Δψ + 2) − (D²ψ)∇ψ·∇ψ − |∇ψ|²` at interior nodes.
pub fn unperturbed_map(law: &GasLaw, psi: &ScalarField) -> Result<ScalarField> {
    Ok(residual_q(law, psi, 0.0, f64::NEG_INFINITY)?.0)
}

/// The derivative of [`unperturbed_map`] at `ψ₀` as a stencil operator:
///
/// `L[v] = c₀²Δv − (D²v)∇ψ₀·∇ψ₀ − 2(D²ψ₀)∇ψ₀·∇v − [(γ−1)(2+Δψ₀) + 2]∇ψ₀·∇v − (γ−1)(2+Δψ₀)v`
pub fn linearized_operator(law: &GasLaw, psi0: &ScalarField) -> Result<StencilOperator> {
    let g = psi0.grid;
    let f = &psi0.values;
    let c0 = c2_of_phi(law, psi0, &gradient(psi0), f64::NEG_INFINITY)?.c2;
    let gm1 = if law.is_isothermal() { 0.0 } else { law.gamma() - 1.0 };
    let mut op = StencilOperator::zeros(g);
    for (i, j) in g.interior() {
        let k = g.idx(i, j);
        let (p1, p2) = (calculus::dx(&g, f, i, j), calculus::dy(&g, f, i, j));
        let (p11, p22) = (calculus::dxx(&g, f, i, j), calculus::dyy(&g, f, i, j));
        let p12 = cross(&g, f, i, j);
        let s = gm1 * (2.0 + p11 + p22);
        op.a11[k] = c0.values[k] - p1 * p1;
        op.a12[k] = -2.0 * p1 * p2;
        op.a22[k] = c0.values[k] - p2 * p2;
        op.b1[k] = -2.0 * (p11 * p1 + p12 * p2) - (s + 2.0) * p1;
        op.b2[k] = -2.0 * (p12 * p1 + p22 * p2) - (s + 2.0) * p2;
        op.c[k] = -s;
    }
    Ok(op)
}

pub fn linearized_l(law: &GasLaw, psi0: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    psi0.grid.same_as(&v.grid)?;
    Ok(linearized_operator(law, psi0)?.apply(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateauxRow {
    pub tau: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateauxTable {
    pub rows: Vec<GateauxRow>,
    /// Least-squares slope of `log defect` against `log τ`; `None` when a
    /// defect vanishes.
    pub slope: Option<f64>,
}

/// Compare difference quotients of `F(0, ·)` at `ψ₀` along `v` with `L[v]`.
pub fn gateaux_check(law: &GasLaw, psi0: &ScalarField, v: &ScalarField, taus: &[f64]) -> Result<GateauxTable> {
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("gateaux taus must be positive".into()));
    }
    if taus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("gateaux taus must be decreasing".into()));
    }
    let base = unperturbed_map(law, psi0)?;
    let lv = linearized_l(law, psi0, v)?;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let moved = psi0.zip_map(v, |p, q| p + tau * q);
        let fm = unperturbed_map(law, &moved)?;
        let mut defect = 0.0f64;
        for (i, j) in psi0.grid.interior() {
            let k = psi0.grid.idx(i, j);
            defect = defect.max(((fm.values[k] - base.values[k]) / tau - lv.values[k]).abs());
        }
        rows.push(GateauxRow { tau, defect });
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.defect > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.tau.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.defect.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(GateauxTable { rows, slope })
}

#[derive(Debug, Clone)]
pub struct FullResidual {
    pub r1: ScalarField,
    pub r2: ScalarField,
    /// `c²` from the Bernoulli reconstruction with the full velocity.
    pub c2: ScalarField,
    pub f: ScalarField,
    pub curl_defect: f64,
}

/// Residuals of the untruncated rotational system with `U = ∇ψ + ∇⊥ζ`.
///
/// `F` is reconstructed from `∇F = −Δζ(∇⊥ψ − ∇ζ) − ∇⊥ζ` with
/// `F(anchor) = c`, and `c² = (γ−1)(F − ψ − ½|U|²)`.
pub fn full_rotational_residual(
    law: &GasLaw,
    psi: &ScalarField,
    zeta: &ScalarField,
    c: f64,
    anchor: (usize, usize),
    c2_floor: f64,
) -> Result<FullResidual> {
    psi.grid.same_as(&zeta.grid)?;
    let g = psi.grid;
    let (vg, vh) = f1_target(psi, zeta);
    let lz = laplacian(zeta);
    let gz = gradient(zeta);
    let tg = ScalarField {
        grid: g,
        values: (0..g.len()).map(|k| -vg.values[k] + lz.values[k] * gz.u[k]).collect(),
    };
    let th = ScalarField {
        grid: g,
        values: (0..g.len()).map(|k| -vh.values[k] + lz.values[k] * gz.v[k]).collect(),
    };
    let f = reconstruct_f(&tg, &th, c, anchor)?;
    let curl_defect = integrability_residual(&tg, &th)?;

    let a = gradient(psi);
    let w = perp_gradient(zeta);
    let c0 = c2_of_phi(law, psi, &a, f64::NEG_INFINITY)?.c2;
    let c2 = if law.is_isothermal() {
        ScalarField::constant(g, law.a() * law.a())
    } else {
        let gm1 = law.gamma() - 1.0;
        ScalarField {
            grid: g,
            values: (0..g.len())
                .map(|k| {
                    let (u1, u2) = (a.u[k] + w.u[k], a.v[k] + w.v[k]);
                    gm1 * (f.values[k] - psi.values[k] - 0.5 * (u1 * u1 + u2 * u2))
                })
                .collect(),
        }
    };
    let e = expansion_terms(psi, zeta)?;
    let shift = c2.zip_map(&c0, |full, base| full - base);
    let rhs = ScalarField {
        grid: g,
        values: (0..g.len())
            .map(|k| -2.0 * shift.values[k] + e.n1.values[k] + e.n2.values[k] + e.n3.values[k])
            .collect(),
    };
    let forcing = Forcing {
        rhs: Some(rhs),
        c2_shift: Some(shift),
    };
    let (r1, _) = residual_with(law, psi, 0.0, c2_floor, &forcing)?;

    let lp = laplacian(psi);
    let glz = gradient(&lz);
    let mut r2 = ScalarField::zeros(g);
    for (i, j) in g.interior() {
        let k = g.idx(i, j);
        r2.values[k] =
            lz.values[k] * (lp.values[k] + 1.0) + (a.u[k] + w.u[k]) * glz.u[k] + (a.v[k] + w.v[k]) * glz.v[k];
    }
    Ok(FullResidual {
        r1,
        r2,
        c2,
        f,
        curl_defect,
    })
}

#[derive(Debug, Clone)]
pub struct QuasiConfig {
    /// Ascending, in `[0, 1)`.
    pub delta_targets: Vec<f64>,
    /// Sup-norm change of `(ψ, δζ̃)` ending the outer loop.
    pub outer_tol: f64,
    pub outer_max_iters: usize,
    /// Replace the inner Picard solve by one Newton correction per outer step.
    pub newton: bool,
    /// `ζ̃_b` on the whole grid; frame values are the Dirichlet data and the
    /// Laplacian at inflow nodes gives `ω̃_b`.
    pub zeta_b: ScalarField,
    pub f_anchor: (usize, usize),
    pub f_constant: f64,
    pub sonic_margin: f64,
    pub transport: TransportParams,
    /// Turn uncovered nodes and curl defects above `curl_tol` into errors.
    pub strict: bool,
    pub curl_tol: f64,
}

impl QuasiConfig {
    pub fn new(delta_targets: Vec<f64>, zeta_b: ScalarField) -> Self {
        Self {
            delta_targets,
            outer_tol: 1e-8,
            outer_max_iters: 50,
            newton: false,
            zeta_b,
            f_anchor: (0, 0),
            f_constant: 0.0,
            sonic_margin: 1e-3,
            transport: TransportParams::default(),
            strict: false,
            curl_tol: 1e-6,
        }
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        grid.same_as(&self.zeta_b.grid)?;
        if self.delta_targets.is_empty() {
            return Err(Error::Config("delta_targets is empty".into()));
        }
        if self.delta_targets.iter().any(|d| !(0.0..1.0).contains(d)) {
            return Err(Error::Config("delta_targets must lie in [0, 1)".into()));
        }
        if self.delta_targets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("delta_targets must be strictly ascending".into()));
        }
        if !(self.outer_tol > 0.0) || self.outer_max_iters == 0 {
            return Err(Error::Config("outer_tol and outer_max_iters must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.sonic_margin) {
            return Err(Error::Config("sonic_margin must lie in [0, 1)".into()));
        }
        let (ia, ja) = self.f_anchor;
        if ia >= grid.nx || ja >= grid.ny {
            return Err(Error::Config(format!("F anchor ({ia}, {ja}) is outside the grid")));
        }
        if !self.zeta_b.is_finite() {
            return Err(Error::Config("zeta_b is not finite".into()));
        }
        Ok(())
    }
}

/// One converged `δ` stage.
#[derive(Debug, Clone)]
pub struct QuasiState {
    pub delta: f64,
    pub psi: ScalarField,
    /// The physical stream potential `ζ = δζ̃`.
    pub zeta: ScalarField,
    pub zeta_tilde: ScalarField,
    pub omega_tilde: ScalarField,
    pub f1: ScalarField,
    pub q1: ScalarField,
    pub n1: ScalarField,
    pub c2: ScalarField,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiStageReport {
    pub delta: f64,
    pub outer_iterations: usize,
    pub change_history: Vec<f64>,
    pub inner_iterations: usize,
    /// `‖c₀²Δψ − … − δ((2+Δψ)Q₁ + N₁)‖∞` at the returned state.
    pub residual_inf: f64,
    pub curl_defect: f64,
    pub uncovered: usize,
    pub max_l2: f64,
    pub clamped: usize,
    pub distance_from_potential: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiReport {
    pub status: potential::SolveStatus,
    pub potential: SolveReport,
    pub stages: Vec<QuasiStageReport>,
    pub failure: Option<StageFailure>,
}

#[derive(Debug, Clone)]
pub struct QuasiSolution {
    /// The `δ = 0` potential solution the continuation starts from.
    pub phi: ScalarField,
    pub states: Vec<QuasiState>,
    pub report: QuasiReport,
}

struct Closures {
    f1: F1Reconstruction,
    q1: ScalarField,
    n1: ScalarField,
}

fn closures(law: &GasLaw, psi: &ScalarField, zt: &ScalarField, cfg: &QuasiConfig) -> Result<Closures> {
    let f1 = reconstruct_f1(psi, zt, cfg.f_constant, cfg.f_anchor)?;
    let q1 = compute_q1(law, psi, zt, &f1.f1)?;
    let n1 = compute_n1(psi, zt)?;
    Ok(Closures { f1, q1, n1 })
}

fn forcing(delta: f64, cl: &Closures) -> Forcing {
    Forcing {
        rhs: Some(cl.q1.zip_map(&cl.n1, |q, n| delta * (2.0 * q + n))),
        c2_shift: Some(cl.q1.map(|q| -delta * q)),
    }
}

fn newton_step(
    problem: &PotentialProblem,
    psi: &ScalarField,
    eps: f64,
    force: &Forcing,
    params: &PicardParams,
) -> Result<ScalarField> {
    let (res, _) = residual_with(&problem.law, psi, eps, problem.c2_floor, force)?;
    let mut op = linearized_operator(&problem.law, psi)?;
    let shift = force.c2_shift.as_ref();
    for (i, j) in problem.grid.interior() {
        let k = problem.grid.idx(i, j);
        let s = shift.map_or(0.0, |s| s.values[k]) + eps;
        op.a11[k] += s;
        op.a22[k] += s;
    }
    let (min_lambda, node) = op.min_principal_eigenvalue();
    if !(min_lambda > 0.0) {
        return Err(Error::IndefiniteSystem { min_lambda, node });
    }
    let (v, _) = op.solve_dirichlet(
        &res.map(|r| -r),
        &ScalarField::zeros(problem.grid),
        None,
        &params.linear_options(&problem.grid),
    )?;
    Ok(psi.zip_map(&v, |p, d| p + d))
}

struct StageOutcome {
    state: QuasiState,
    report: QuasiStageReport,
}

fn solve_stage(
    problem: &PotentialProblem,
    eps: f64,
    params: &PicardParams,
    cfg: &QuasiConfig,
    delta: f64,
    phi: &ScalarField,
    psi0: &ScalarField,
    zt0: &ScalarField,
) -> Result<StageOutcome> {
    let g = problem.grid;
    let law = &problem.law;
    let omega_b = laplacian(&cfg.zeta_b);
    let zeta_solver = StencilOperator::laplacian(g, 1.0);
    let lin = params.linear_options(&g);
    let mut psi = psi0.clone();
    let mut zt = zt0.clone();
    let mut changes = Vec::new();
    let mut inner = 0;
    for it in 1..=cfg.outer_max_iters {
        let drift = Drift::from_potential(&psi);
        let inflow = vorticity::inflow_boundary(&psi, cfg.transport.tol_inflow).with_field(&omega_b);
        let tr = vorticity::transport_with_drift(&drift, &inflow, &cfg.transport)?;
        if cfg.strict && !tr.uncovered.is_empty() {
            return Err(Error::UncoveredNodes {
                count: tr.uncovered.len(),
            });
        }
        let (zt_new, _) = zeta_solver.solve_dirichlet(&tr.omega, &cfg.zeta_b, Some(&zt), &lin)?;
        let cl = closures(law, &psi, &zt_new, cfg)?;
        if cfg.strict && cl.f1.curl_defect > cfg.curl_tol {
            return Err(Error::NonIntegrable(cl.f1.curl_defect));
        }
        let force = forcing(delta, &cl);
        let psi_new = if cfg.newton {
            inner += 1;
            newton_step(problem, &psi, eps, &force, params)?
        } else {
            let (p, rep) = picard_solve_with(problem, eps, params, &psi, &force)?;
            inner += rep.iterations;
            p
        };
        let change = psi_new.max_abs_diff(&psi).max(delta * zt_new.max_abs_diff(&zt));
        changes.push(change);
        psi = psi_new;
        zt = zt_new;
        if !change.is_finite() {
            break;
        }
        if change <= cfg.outer_tol {
            let cl = closures(law, &psi, &zt, cfg)?;
            let force = forcing(delta, &cl);
            let (res, clamped) = residual_with(law, &psi, 0.0, problem.c2_floor, &force)?;
            let c2 = c2_quasi(law, &psi, &zt, delta, &cl.f1.f1, problem.c2_floor)?;
            let u = gradient(&psi).axpy(delta, &perp_gradient(&zt));
            let l2 = pseudo_mach_field(&u, &c2.c2)?;
            let max_l2 = l2
                .values
                .iter()
                .fold(0.0f64, |m, v| if v.is_finite() { m.max(*v) } else { f64::INFINITY });
            if max_l2 >= 1.0 - cfg.sonic_margin {
                return Err(Error::SonicEncroachment(max_l2));
            }
            let report = QuasiStageReport {
                delta,
                outer_iterations: it,
                change_history: changes,
                inner_iterations: inner,
                residual_inf: res.max_abs_interior(),
                curl_defect: cl.f1.curl_defect,
                uncovered: tr.uncovered.len(),
                max_l2,
                clamped: clamped + c2.clamped,
                distance_from_potential: psi.max_abs_diff(phi),
            };
            let state = QuasiState {
                delta,
                zeta: zt.map(|z| delta * z),
                zeta_tilde: zt,
                omega_tilde: tr.omega,
                f1: cl.f1.f1,
                q1: cl.q1,
                n1: cl.n1,
                c2: c2.c2,
                psi,
            };
            return Ok(StageOutcome { state, report });
        }
    }
    Err(Error::NonConvergence {
        iters: changes.len(),
        last_change: changes.last().copied().unwrap_or(f64::NAN),
        reason: format!("quasi-potential outer loop at delta = {delta}"),
    })
}

/// Potential solve by `ε`-continuation, then `δ`-continuation over
/// `config.delta_targets`.
pub fn solve_quasi(
    config: &QuasiConfig,
    base: &PotentialProblem,
    schedule: &EpsilonSchedule,
    params: &PicardParams,
) -> Result<QuasiSolution> {
    base.validate()?;
    config.validate(&base.grid)?;
    let (phi, potential) = epsilon_continuation(base, schedule, params)?;
    let eps = potential.final_eps;
    let mut psi = phi.clone();
    let mut zt = config.zeta_b.clone();
    let mut states = Vec::new();
    let mut stages = Vec::new();
    let mut failure = None;
    for &delta in &config.delta_targets {
        match solve_stage(base, eps, params, config, delta, &phi, &psi, &zt) {
            Ok(out) => {
                psi = out.state.psi.clone();
                zt = out.state.zeta_tilde.clone();
                states.push(out.state);
                stages.push(out.report);
            }
            Err(e) if states.is_empty() => return Err(e),
            Err(e) => {
                failure = Some(StageFailure {
                    eps: delta,
                    error: e.to_string(),
                });
                break;
            }
        }
    }
    let status = if failure.is_some() || potential.status != potential::SolveStatus::Converged {
        potential::SolveStatus::PartialContinuation
    } else {
        potential::SolveStatus::Converged
    };
    Ok(QuasiSolution {
        phi,
        states,
        report: QuasiReport {
            status,
            potential,
            stages,
            failure,
        },
    })
}

/// `|∇ψ + δ∇⊥ζ̃|` as a field, for reporting.
pub fn quasi_velocity(psi: &ScalarField, zeta_tilde: &ScalarField, delta: f64) -> Result<VectorField> {
    psi.grid.same_as(&zeta_tilde.grid)?;
    Ok(gradient(psi).axpy(delta, &perp_gradient(zeta_tilde)))
}
