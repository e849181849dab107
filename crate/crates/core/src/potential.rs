//! Solver for the degenerate elliptic potential equation
//!
//! `Qφ = (c² − φ₁²)φ₁₁ − 2φ₁φ₂φ₁₂ + (c² − φ₂²)φ₂₂ − γ|∇φ|² − 2(γ−1)φ = 0`
//!
//! with `c² = −(γ−1)(φ + ½|∇φ|²)`, regularized as `Q_ε = Q + εΔ`.
//!
//! For `γ = 1` the closure is `c² ≡ a²` and the lower-order part is
//! `−|∇φ|² + 2a²`, which is what the general form `−|∇φ|² + 2c²` reduces to.
//!
//! Each Picard step freezes the coefficients at the current iterate `w` and
//! solves the linear Dirichlet problem
//!
//! `(c²(w) − w₁² + ε)φ₁₁ − 2w₁w₂φ₁₂ + (c²(w) − w₂² + ε)φ₂₂ − γ∇w·∇φ − 2(γ−1)φ = f`,
//!
//! then relaxes `w ← (1−θ)w + θφ`. Continuation in `ε` walks the
//! regularization down geometrically, warm-starting every stage.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{calculus, gradient, Grid2D, ScalarField, VectorField};
use crate::gas::GasLaw;
use crate::linalg::{LinearMethod, LinearOptions, LinearStats};
use crate::regime::{ellipticity_audit, pseudo_mach_field, Audit};
use crate::stencil::{cross, StencilOperator};

#[derive(Debug, Clone)]
pub struct PotentialProblem {
    pub law: GasLaw,
    pub grid: Grid2D,
    /// Frame values are the Dirichlet data; interior values seed the iteration.
    pub phi_b: ScalarField,
    pub c2_floor: f64,
    pub cap_m: f64,
}

impl PotentialProblem {
    pub fn new(law: GasLaw, phi_b: ScalarField) -> Result<Self> {
        let p = Self {
            law,
            grid: phi_b.grid,
            phi_b,
            c2_floor: 1e-8,
            cap_m: 1e6,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi_b.is_finite() {
            return Err(Error::Config("boundary data contain non-finite values".into()));
        }
        if !(self.c2_floor > 0.0) {
            return Err(Error::Config(format!(
                "solver.c2_floor must be positive, got {}",
                self.c2_floor
            )));
        }
        if !(self.cap_m > 0.0) {
            return Err(Error::Config(format!(
                "solver.cap_M must be positive, got {}",
                self.cap_m
            )));
        }
        self.grid.same_as(&self.phi_b.grid)
    }
}

/// `−|ξ|²/2 + K` on the whole grid.
pub fn quiescent(grid: Grid2D, k: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| -0.5 * (x * x + y * y) + k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardParams {
    pub relax_theta: f64,
    pub tol_fixed_point: f64,
    pub max_iters: usize,
    pub lin_tol: f64,
    /// Defaults to `20·nx·ny` when `None`.
    pub lin_max_iters: Option<usize>,
    pub linear: LinearMethod,
}

impl Default for PicardParams {
    fn default() -> Self {
        Self {
            relax_theta: 0.7,
            tol_fixed_point: 1e-10,
            max_iters: 200,
            lin_tol: 1e-11,
            lin_max_iters: None,
            linear: LinearMethod::BandedLu,
        }
    }
}

impl PicardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.relax_theta > 0.0 && self.relax_theta <= 1.0) {
            return Err(Error::Config(format!(
                "solver.relax_theta must lie in (0, 1], got {}",
                self.relax_theta
            )));
        }
        if !(self.tol_fixed_point > 0.0) || !(self.lin_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Config(
                "solver tolerances and iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn linear_options(&self, grid: &Grid2D) -> LinearOptions {
        LinearOptions {
            method: self.linear,
            tol: self.lin_tol,
            max_iters: self.lin_max_iters.unwrap_or(20 * grid.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub eps_min: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            eps0: 0.1,
            ratio: 0.5,
            eps_min: 1e-6,
        }
    }
}

impl EpsilonSchedule {
    /// `eps0, eps0·ratio, …` while above `eps_min`, then `eps_min` itself.
    pub fn stages(&self) -> Result<Vec<f64>> {
        if !(self.eps_min > 0.0) || !(self.eps0 >= self.eps_min) {
            return Err(Error::Config(format!(
                "epsilon schedule needs eps0 >= eps_min > 0 (got eps0 = {}, eps_min = {})",
                self.eps0, self.eps_min
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!(
                "solver.ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        let mut out = Vec::new();
        let mut e = self.eps0;
        while e > self.eps_min * (1.0 + 1e-12) {
            out.push(e);
            e *= self.ratio;
        }
        out.push(self.eps_min);
        Ok(out)
    }
}

/// Extra data entering the frozen equation: a right-hand side `f` and an
/// additive shift of `c²` in the principal coefficients.
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    pub rhs: Option<ScalarField>,
    pub c2_shift: Option<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct C2Field {
    pub c2: ScalarField,
    /// Nodes where the closure fell to or below the floor.
    pub clamped: usize,
}

#[inline]
fn closure(law: &GasLaw, phi: f64, gx: f64, gy: f64) -> f64 {
    if law.is_isothermal() {
        law.a() * law.a()
    } else {
        -(law.gamma() - 1.0) * (phi + 0.5 * (gx * gx + gy * gy))
    }
}

/// `c²(φ)` nodewise, clamped at `c2_floor`.
pub fn c2_of_phi(law: &GasLaw, phi: &ScalarField, grad_phi: &VectorField, c2_floor: f64) -> Result<C2Field> {
    phi.grid.same_as(&grad_phi.grid)?;
    let mut clamped = 0;
    let values = (0..phi.grid.len())
        .map(|k| {
            let c = closure(law, phi.values[k], grad_phi.u[k], grad_phi.v[k]);
            if c <= c2_floor {
                clamped += 1;
                c2_floor
            } else {
                c
            }
        })
        .collect();
    Ok(C2Field {
        c2: ScalarField::from_values(phi.grid, values)?,
        clamped,
    })
}

/// Interior residual `Q_ε φ − f` (zero on the frame) and the number of
/// interior nodes whose `c²` was clamped.
pub fn residual_with(
    law: &GasLaw,
    phi: &ScalarField,
    eps: f64,
    c2_floor: f64,
    forcing: &Forcing,
) -> Result<(ScalarField, usize)> {
    let g = phi.grid;
    if let Some(r) = &forcing.rhs {
        g.same_as(&r.grid)?;
    }
    if let Some(s) = &forcing.c2_shift {
        g.same_as(&s.grid)?;
    }
    let f = &phi.values;
    let gamma = law.gamma();
    let mut out = ScalarField::zeros(g);
    let mut clamped = 0;
    for (i, j) in g.interior() {
        let k = g.idx(i, j);
        let (p1, p2) = (calculus::dx(&g, f, i, j), calculus::dy(&g, f, i, j));
        let (p11, p22) = (calculus::dxx(&g, f, i, j), calculus::dyy(&g, f, i, j));
        let p12 = cross(&g, f, i, j);
        let shift = forcing.c2_shift.as_ref().map_or(0.0, |s| s.values[k]);
        let mut c2 = closure(law, f[k], p1, p2) + shift;
        if c2 <= c2_floor {
            clamped += 1;
            c2 = c2_floor;
        }
        let principal = (c2 - p1 * p1 + eps) * p11 - 2.0 * p1 * p2 * p12 + (c2 - p2 * p2 + eps) * p22;
        let lower = if law.is_isothermal() {
            -(p1 * p1 + p2 * p2) + 2.0 * law.a() * law.a()
        } else {
            -gamma * (p1 * p1 + p2 * p2) - 2.0 * (gamma - 1.0) * f[k]
        };
        let rhs = forcing.rhs.as_ref().map_or(0.0, |r| r.values[k]);
        out.values[k] = principal + lower - rhs;
    }
    Ok((out, clamped))
}

/// Interior residual of `Q_ε φ`.
pub fn residual_q(law: &GasLaw, phi: &ScalarField, eps: f64, c2_floor: f64) -> Result<(ScalarField, usize)> {
    residual_with(law, phi, eps, c2_floor, &Forcing::default())
}

/// The linear problem obtained by freezing coefficients at `w`.
#[derive(Debug, Clone)]
pub struct FrozenSystem {
    pub op: StencilOperator,
    /// Right-hand side contributed by the equation itself (forcing and, for
    /// `γ = 1`, the constant `−2a²`).
    pub rhs: ScalarField,
    pub clamped: usize,
    /// `min (c² − |∇w|² + ε)` over interior nodes and where it occurs.
    pub min_lambda: f64,
    pub min_node: usize,
}

pub fn assemble_frozen(
    problem: &PotentialProblem,
    w: &ScalarField,
    eps: f64,
    forcing: &Forcing,
) -> Result<FrozenSystem> {
    let g = problem.grid;
    g.same_as(&w.grid)?;
    let norm = w.max_abs();
    if !(norm <= problem.cap_m) {
        return Err(Error::CapExceeded {
            norm,
            cap: problem.cap_m,
        });
    }
    let law = &problem.law;
    let gamma = law.gamma();
    let f = &w.values;
    let mut op = StencilOperator::zeros(g);
    let mut rhs = ScalarField::zeros(g);
    let mut clamped = 0;
    for (i, j) in g.interior() {
        let k = g.idx(i, j);
        let (w1, w2) = (calculus::dx(&g, f, i, j), calculus::dy(&g, f, i, j));
        let shift = forcing.c2_shift.as_ref().map_or(0.0, |s| s.values[k]);
        let mut c2 = closure(law, f[k], w1, w2) + shift;
        if c2 <= problem.c2_floor {
            clamped += 1;
            c2 = problem.c2_floor;
        }
        op.a11[k] = c2 - w1 * w1 + eps;
        op.a12[k] = -2.0 * w1 * w2;
        op.a22[k] = c2 - w2 * w2 + eps;
        op.b1[k] = -gamma * w1;
        op.b2[k] = -gamma * w2;
        op.c[k] = -2.0 * (gamma - 1.0);
        let mut r = forcing.rhs.as_ref().map_or(0.0, |r| r.values[k]);
        if law.is_isothermal() {
            op.b1[k] = -w1;
            op.b2[k] = -w2;
            op.c[k] = 0.0;
            r -= 2.0 * law.a() * law.a();
        }
        rhs.values[k] = r;
    }
    let (min_lambda, min_node) = op.min_principal_eigenvalue();
    Ok(FrozenSystem {
        op,
        rhs,
        clamped,
        min_lambda,
        min_node,
    })
}

/// Solve the frozen system with Dirichlet data `phi_b`, refusing
/// non-elliptic coefficients.
pub fn solve_linear_dirichlet(
    system: &FrozenSystem,
    rhs: &ScalarField,
    phi_b: &ScalarField,
    guess: Option<&ScalarField>,
    opts: &LinearOptions,
) -> Result<(ScalarField, LinearStats)> {
    if !(system.min_lambda > 0.0) {
        return Err(Error::IndefiniteSystem {
            min_lambda: system.min_lambda,
            node: system.min_node,
        });
    }
    system.op.solve_dirichlet(rhs, phi_b, guess, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub eps: f64,
    pub iterations: usize,
    pub converged: bool,
    pub theta: f64,
    pub change_history: Vec<f64>,
    pub linear_residual_history: Vec<f64>,
    /// `‖Q_ε φ − f‖∞` over interior nodes at the returned iterate.
    pub residual_inf: f64,
    /// Whether `residual_inf ≤ 100·tol_fixed_point/h²`.
    pub residual_within_bound: bool,
    pub clamped: usize,
    pub min_lambda: f64,
}

/// Relaxed Picard iteration at fixed `ε`.
pub fn picard_solve(
    problem: &PotentialProblem,
    eps: f64,
    params: &PicardParams,
    w0: &ScalarField,
) -> Result<(ScalarField, PicardReport)> {
    picard_solve_with(problem, eps, params, w0, &Forcing::default())
}

pub fn picard_solve_with(
    problem: &PotentialProblem,
    eps: f64,
    params: &PicardParams,
    w0: &ScalarField,
    forcing: &Forcing,
) -> Result<(ScalarField, PicardReport)> {
    problem.validate()?;
    params.validate()?;
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("epsilon must be non-negative, got {eps}")));
    }
    let g = problem.grid;
    g.same_as(&w0.grid)?;
    let opts = params.linear_options(&g);
    let mut w = w0.with_frame_of(&problem.phi_b);
    let mut theta = params.relax_theta;
    let mut halved = false;
    let mut growing = 0;
    let mut prev = f64::INFINITY;
    let mut changes = Vec::new();
    let mut lin_hist = Vec::new();
    let mut min_lambda = f64::INFINITY;
    for it in 1..=params.max_iters {
        let sys = assemble_frozen(problem, &w, eps, forcing)?;
        min_lambda = sys.min_lambda;
        let (t, stats) = solve_linear_dirichlet(&sys, &sys.rhs, &problem.phi_b, Some(&w), &opts)?;
        lin_hist.push(stats.relative_residual);
        let next = w.zip_map(&t, |a, b| (1.0 - theta) * a + theta * b);
        let change = next.max_abs_diff(&w);
        changes.push(change);
        w = next;
        if !change.is_finite() {
            return Err(Error::NonConvergence {
                iters: it,
                last_change: change,
                reason: "iterate became non-finite".into(),
            });
        }
        if change <= params.tol_fixed_point {
            let (res, clamped) = residual_with(&problem.law, &w, eps, problem.c2_floor, forcing)?;
            if clamped > 0 {
                return Err(Error::NonConvergence {
                    iters: it,
                    last_change: change,
                    reason: format!("{clamped} interior nodes still have clamped c^2"),
                });
            }
            let residual_inf = res.max_abs_interior();
            let h = g.hx().min(g.hy());
            let report = PicardReport {
                eps,
                iterations: it,
                converged: true,
                theta,
                change_history: changes,
                linear_residual_history: lin_hist,
                residual_inf,
                residual_within_bound: residual_inf <= 100.0 * params.tol_fixed_point / (h * h),
                clamped,
                min_lambda,
            };
            return Ok((w, report));
        }
        growing = if change > prev { growing + 1 } else { 0 };
        prev = change;
        if growing >= 5 {
            if halved {
                return Err(Error::NonConvergence {
                    iters: it,
                    last_change: change,
                    reason: format!("iterate changes grew for 5 steps after halving theta to {theta}"),
                });
            }
            theta *= 0.5;
            halved = true;
            growing = 0;
        }
    }
    Err(Error::NonConvergence {
        iters: params.max_iters,
        last_change: changes.last().copied().unwrap_or(f64::NAN),
        reason: format!("min principal coefficient {min_lambda:.3e}"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    PartialContinuation,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageFailure {
    pub eps: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub stages: Vec<PicardReport>,
    pub failure: Option<StageFailure>,
    /// The `ε` of the returned field (0 when the final unregularized pass converged).
    pub final_eps: f64,
    pub zero_eps_converged: bool,
    /// `‖Qφ‖∞` (unregularized) over interior nodes.
    pub residual_inf: f64,
    pub c2_min: f64,
    pub c2_max: f64,
    pub max_l2: f64,
    pub clamped: usize,
    pub audit: Audit,
}

/// Diagnostic fields of a potential: `c²`, `L² = |∇φ|²/c²` and the audit.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub c2: C2Field,
    pub l2: ScalarField,
    pub audit: Audit,
    pub residual_inf: f64,
}

pub fn diagnostics(problem: &PotentialProblem, phi: &ScalarField) -> Result<Diagnostics> {
    let grad = gradient(phi);
    let c2 = c2_of_phi(&problem.law, phi, &grad, problem.c2_floor)?;
    let l2 = pseudo_mach_field(&grad, &c2.c2)?;
    let audit = ellipticity_audit(&l2, None, 1e-12)?;
    let (res, _) = residual_q(&problem.law, phi, 0.0, problem.c2_floor)?;
    Ok(Diagnostics {
        c2,
        l2,
        audit,
        residual_inf: res.max_abs_interior(),
    })
}

/// Continuation `ε = eps0, eps0·ratio, …, eps_min`, then one optional pass at `ε = 0`.
pub fn epsilon_continuation(
    problem: &PotentialProblem,
    schedule: &EpsilonSchedule,
    params: &PicardParams,
) -> Result<(ScalarField, SolveReport)> {
    let stages = schedule.stages()?;
    let mut w = problem.phi_b.clone();
    let mut reports = Vec::new();
    let mut failure = None;
    let mut final_eps = f64::NAN;
    for &eps in &stages {
        match picard_solve(problem, eps, params, &w) {
            Ok((phi, rep)) => {
                w = phi;
                final_eps = eps;
                reports.push(rep);
            }
            Err(e) if reports.is_empty() => return Err(e),
            Err(e) => {
                failure = Some(StageFailure {
                    eps,
                    error: e.to_string(),
                });
                break;
            }
        }
    }
    let mut zero_eps_converged = false;
    if failure.is_none() {
        if let Ok((phi, rep)) = picard_solve(problem, 0.0, params, &w) {
            w = phi;
            final_eps = 0.0;
            zero_eps_converged = true;
            reports.push(rep);
        }
    }
    let d = diagnostics(problem, &w)?;
    let finite_c2 = d.c2.c2.values.iter().copied();
    let report = SolveReport {
        status: if failure.is_some() {
            SolveStatus::PartialContinuation
        } else {
            SolveStatus::Converged
        },
        stages: reports,
        failure,
        final_eps,
        zero_eps_converged,
        residual_inf: d.residual_inf,
        c2_min: finite_c2.clone().fold(f64::INFINITY, f64::min),
        c2_max: finite_c2.fold(f64::NEG_INFINITY, f64::max),
        max_l2: d
            .l2
            .values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max),
        clamped: d.c2.clamped,
        audit: d.audit,
    };
    Ok((w, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::LawVariant;
    use crate::regime::AuditVerdict;
    use approx::assert_abs_diff_eq;

    fn law(gamma: f64) -> GasLaw {
        let floor = if gamma <= 1.0 { 1.0 } else { 0.0 };
        GasLaw::new(1.0, gamma, floor, LawVariant::Standard).unwrap()
    }

    fn unit_grid(n: usize) -> Grid2D {
        Grid2D::square(-0.5, 0.5, n).unwrap()
    }

    #[test]
    fn closure_examples() {
        let g = unit_grid(9);
        let phi = ScalarField::constant(g, -1.0);
        let c = c2_of_phi(&law(2.0), &phi, &VectorField::zeros(g), 1e-8).unwrap();
        assert!(c.c2.values.iter().all(|v| *v == 1.0));
        let iso = GasLaw::new(3.0, 1.0, 1.0, LawVariant::Standard).unwrap();
        let c = c2_of_phi(&iso, &quiescent(g, 5.0), &gradient(&quiescent(g, 5.0)), 1e-8).unwrap();
        assert!(c.c2.values.iter().all(|v| *v == 9.0));
        for gamma in [1.4, 2.0, 3.0] {
            let phi = quiescent(g, -2.0);
            let c = c2_of_phi(&law(gamma), &phi, &gradient(&phi), 1e-8).unwrap();
            for v in &c.c2.values {
                assert_abs_diff_eq!(*v, 2.0 * (gamma - 1.0), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn quiescent_residual_vanishes() {
        let g = unit_grid(17);
        for (gamma, k) in [
            (2.0, -1.0),
            (1.4, -3.0),
            (3.0, -0.5),
            (0.5, 2.0),
            (-1.0, 1.0),
            (1.0, 0.0),
        ] {
            let (r, clamped) = residual_q(&law(gamma), &quiescent(g, k), 0.0, 1e-8).unwrap();
            assert_eq!(clamped, 0, "gamma {gamma}");
            assert!(r.max_abs() <= 1e-12, "gamma {gamma}: {}", r.max_abs());
        }
        let (r, _) = residual_q(&law(2.0), &quiescent(g, -1.0), 1e-2, 1e-8).unwrap();
        for (i, j) in g.interior() {
            assert_abs_diff_eq!(r.at(i, j), -0.02, epsilon = 1e-12);
        }
        let (r, clamped) = residual_q(&law(2.0), &ScalarField::zeros(g), 0.0, 1e-8).unwrap();
        assert_eq!(r.max_abs(), 0.0);
        assert_eq!(clamped, 15 * 15);
    }

    #[test]
    fn frozen_laplacian_and_cap() {
        let g = unit_grid(5);
        let iso = GasLaw::new(1.0, 1.0, 1.0, LawVariant::Standard).unwrap();
        let p = PotentialProblem::new(iso, ScalarField::constant(g, 0.3)).unwrap();
        let sys = assemble_frozen(&p, &p.phi_b, 0.0, &Forcing::default()).unwrap();
        let (a, _) = sys.op.assemble(&p.phi_b);
        let h2 = 1.0 / (0.25 * 0.25);
        assert_abs_diff_eq!(a.get(4, 4), -4.0 * h2, epsilon = 1e-12);
        assert_abs_diff_eq!(a.get(4, 1), h2, epsilon = 1e-12);

        let mut p = PotentialProblem::new(law(2.0), quiescent(g, -1.0)).unwrap();
        let sys = assemble_frozen(&p, &p.phi_b, 0.0, &Forcing::default()).unwrap();
        let (i, j) = (1, 3);
        assert_abs_diff_eq!(sys.op.a11[g.idx(i, j)], sys.op.a22[g.idx(j, i)], epsilon = 1e-14);
        p.cap_m = 0.5;
        assert!(matches!(
            assemble_frozen(&p, &p.phi_b, 0.0, &Forcing::default()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn frozen_inverse_recovers_quiescent() {
        let g = unit_grid(17);
        let p = PotentialProblem::new(law(2.0), quiescent(g, -1.0)).unwrap();
        let sys = assemble_frozen(&p, &p.phi_b, 0.0, &Forcing::default()).unwrap();
        let rhs = sys.op.apply(&p.phi_b);
        let opts = PicardParams::default().linear_options(&g);
        let (phi, _) = solve_linear_dirichlet(&sys, &rhs, &p.phi_b, None, &opts).unwrap();
        assert!(phi.max_abs_diff(&p.phi_b) <= 1e-10);
    }

    #[test]
    fn picard_on_quiescent_data() {
        let g = unit_grid(17);
        let exact = quiescent(g, -1.0);
        for gamma in [2.0, 1.0] {
            let l = if gamma == 1.0 {
                GasLaw::new(1.0, 1.0, 1.0, LawVariant::Standard).unwrap()
            } else {
                law(gamma)
            };
            // interior starts away from the answer
            let mut start = exact.clone();
            for (i, j) in g.interior() {
                let (x, y) = (g.x(i), g.y(j));
                start.set(
                    i,
                    j,
                    exact.at(i, j) + 0.05 * (x + 0.5) * (0.5 - x) * (y + 0.5) * (0.5 - y),
                );
            }
            let p = PotentialProblem::new(l, start.clone()).unwrap();
            let (phi, rep) = picard_solve(&p, 1e-6, &PicardParams::default(), &start).unwrap();
            assert!(rep.converged);
            assert!(
                phi.max_abs_diff(&exact) <= 5e-6,
                "gamma {gamma}: {}",
                phi.max_abs_diff(&exact)
            );
        }
    }

    #[test]
    fn supersonic_data_rejected() {
        let g = unit_grid(9);
        let p = PotentialProblem::new(law(2.0), ScalarField::from_fn(g, |x, _| 10.0 * x)).unwrap();
        let r = picard_solve(&p, 1e-6, &PicardParams::default(), &p.phi_b);
        assert!(matches!(
            r,
            Err(Error::IndefiniteSystem { .. }) | Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn schedule_stages() {
        let s = EpsilonSchedule {
            eps0: 0.1,
            ratio: 0.5,
            eps_min: 0.01,
        };
        assert_eq!(s.stages().unwrap(), vec![0.1, 0.05, 0.025, 0.0125, 0.01]);
        let bad = EpsilonSchedule {
            eps0: 1e-3,
            ratio: 0.5,
            eps_min: 1e-2,
        };
        assert!(matches!(bad.stages(), Err(Error::Config(_))));
    }

    #[test]
    fn continuation_on_quiescent_data() {
        let g = unit_grid(17);
        let p = PotentialProblem::new(law(2.0), quiescent(g, -1.0)).unwrap();
        let sched = EpsilonSchedule {
            eps0: 0.1,
            ratio: 0.1,
            eps_min: 1e-6,
        };
        let (phi, rep) = epsilon_continuation(&p, &sched, &PicardParams::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert!(phi.max_abs_diff(&quiescent(g, -1.0)) <= 5e-6);
        assert_abs_diff_eq!(rep.max_l2, 0.5, epsilon = 1e-10);
        assert_eq!(rep.audit.verdict, AuditVerdict::Pass);
    }
}
