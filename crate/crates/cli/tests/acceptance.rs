//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Built with `harness = false` so the table shows up in plain `cargo test`
//! output.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfsim::field::{divergence, gradient, rot, Grid2D, ScalarField, VectorField};
use selfsim::gas::{GasLaw, LawVariant};
use selfsim::hodge::{bernoulli_gh, integrability_residual, vorticity_equation_residual, HodgeSolver};
use selfsim::potential::{
    assemble_frozen, diagnostics, epsilon_continuation, picard_solve, picard_solve_with, quiescent,
    solve_linear_dirichlet, EpsilonSchedule, Forcing, PicardParams, PotentialProblem,
};
use selfsim::quasipotential::{full_rotational_residual, gateaux_check, linearized_l, solve_quasi, QuasiConfig};
use selfsim::regime::{discriminant, eigen_steady, eigen_time_dependent, AuditVerdict};
use selfsim::vorticity::{inflow_boundary, transport_omega, transport_residual, TransportParams};
use selfsim::Result;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn law2() -> GasLaw {
    GasLaw::polytropic(1.0, 2.0).expect("gamma = 2 is admissible")
}

fn unit(n: usize) -> Grid2D {
    Grid2D::square(-0.5, 0.5, n).expect("fixed grid")
}

fn bump(g: Grid2D) -> ScalarField {
    ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin())
}

fn quiescent_solution() -> Result<Outcome> {
    let g = unit(65);
    let exact = quiescent(g, -1.0);
    let problem = PotentialProblem::new(law2(), exact.clone())?;
    let params = PicardParams::default();
    let schedule = EpsilonSchedule::default();
    let (phi, rep) = epsilon_continuation(&problem, &schedule, &params)?;
    let err = phi.max_abs_diff(&exact);
    let bound = (10.0 * params.lin_tol).max(5.0 * schedule.eps_min);
    let d = diagnostics(&problem, &phi)?;
    let h = g.hx();
    let n = g.nx - 1;
    let corner_gap = [(0, 0), (n, 0), (0, n), (n, n)]
        .iter()
        .map(|&(i, j)| (d.l2.at(i, j) - 0.5).abs())
        .fold(0.0, f64::max);
    let pass =
        err <= bound && corner_gap <= 2.0 * h && rep.max_l2 <= 0.5 + 2.0 * h && rep.audit.verdict == AuditVerdict::Pass;
    outcome(
        pass,
        format!(
            "err {err:.2e} (<= {bound:.0e}), corner |L^2 - 0.5| {corner_gap:.2e}, max L^2 {:.6}, audit {:?}",
            rep.max_l2, rep.audit.verdict
        ),
    )
}

fn perturbed(g: Grid2D) -> ScalarField {
    quiescent(g, -1.0).zip_map(&bump(g), |a, b| a + 0.05 * b)
}

fn frozen_inversion() -> Result<Outcome> {
    let g = unit(65);
    let star = perturbed(g);
    let problem = PotentialProblem::new(law2(), star.clone())?;
    let params = PicardParams::default();
    let sys = assemble_frozen(&problem, &star, 0.0, &Forcing::default())?;
    let rhs = sys.op.apply(&star);
    let (phi, _) = solve_linear_dirichlet(&sys, &rhs, &star, None, &params.linear_options(&g))?;
    let err = phi.max_abs_diff(&star);
    outcome(
        err <= 10.0 * params.lin_tol,
        format!("err {err:.2e} (<= {:.0e})", 10.0 * params.lin_tol),
    )
}

/// `Q(φ*)` from closed-form derivatives of `φ* = −|ξ|²/2 − 1 + A sin(πξ₁) sin(πξ₂)`, `γ = 2`.
fn manufactured_forcing(g: Grid2D, amp: f64) -> ScalarField {
    let gamma = 2.0;
    ScalarField::from_fn(g, |x, y| {
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let phi = -0.5 * (x * x + y * y) - 1.0 + amp * sx * sy;
        let p1 = -x + amp * PI * cx * sy;
        let p2 = -y + amp * PI * sx * cy;
        let p11 = -1.0 - amp * PI * PI * sx * sy;
        let p22 = p11;
        let p12 = amp * PI * PI * cx * cy;
        let grad2 = p1 * p1 + p2 * p2;
        let c2 = -(gamma - 1.0) * (phi + 0.5 * grad2);
        (c2 - p1 * p1) * p11 - 2.0 * p1 * p2 * p12 + (c2 - p2 * p2) * p22 - gamma * grad2 - 2.0 * (gamma - 1.0) * phi
    })
}

fn manufactured_error(n: usize) -> Result<f64> {
    let g = unit(n);
    let star = perturbed(g);
    let problem = PotentialProblem::new(law2(), star.clone())?;
    let forcing = Forcing {
        rhs: Some(manufactured_forcing(g, 0.05)),
        c2_shift: None,
    };
    // splicing the quiescent interior onto this frame is not elliptic next
    // to the corners; the discrete fixed point does not depend on the start
    let start = star.clone();
    let params = PicardParams {
        tol_fixed_point: 1e-12,
        ..Default::default()
    };
    let (phi, rep) = picard_solve_with(&problem, 0.0, &params, &start, &forcing)?;
    if rep.iterations < 2 {
        return Err(selfsim::Error::Internal("manufactured solve did not iterate".into()));
    }
    Ok(phi.max_abs_diff_interior(&star))
}

fn manufactured_convergence() -> Result<Outcome> {
    let (e33, e65) = (manufactured_error(33)?, manufactured_error(65)?);
    let ratio = e33 / e65;
    outcome(
        (3.4..=4.6).contains(&ratio),
        format!("err {e33:.3e} -> {e65:.3e}, ratio {ratio:.3}"),
    )
}

fn regularization_bias() -> Result<Outcome> {
    let g = unit(65);
    let exact = quiescent(g, -1.0);
    let problem = PotentialProblem::new(law2(), exact.clone())?;
    let params = PicardParams::default();
    let mut errs = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let (phi, _) = picard_solve(&problem, eps, &params, &exact)?;
        errs.push(phi.max_abs_diff(&exact));
    }
    let r = [errs[0] / errs[1], errs[1] / errs[2]];
    let pass = r.iter().all(|v| (8.0..=12.0).contains(v));
    outcome(
        pass,
        format!(
            "err {:.3e}, {:.3e}, {:.3e}; ratios {:.3}, {:.3}",
            errs[0], errs[1], errs[2], r[0], r[1]
        ),
    )
}

fn discriminant_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let grad = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let c2 = rng.gen_range(0.5..2.0);
        let (d, want) = discriminant(grad, c2)?;
        worst = worst.max((d - want).abs());
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.2e} over 10^4 samples"))
}

fn eigen_goldens() -> Result<Outcome> {
    let r3 = 3f64.sqrt() / 3.0;
    let steady = eigen_steady(2.0, 0.0, 1.0).sorted();
    let s_err = steady.map_or(f64::INFINITY, |[a, b, c]| {
        (a + r3).abs().max(b.abs()).max((c - r3).abs())
    });
    let td = eigen_time_dependent(0.0, 0.0, 1.0, (1.0, 0.0))?.sorted();
    let t_err = td.map_or(f64::INFINITY, |[a, b, c]| {
        (a + 1.0).abs().max(b.abs()).max((c - 1.0).abs())
    });
    let complex = eigen_steady(0.5, 0.0, 1.0).is_complex();
    outcome(
        s_err <= 1e-14 && t_err <= 1e-14 && complex,
        format!("steady err {s_err:.1e}, time-dependent err {t_err:.1e}, complex at (0.5, 0, 1): {complex}"),
    )
}

fn hodge_round_trip() -> Result<Outcome> {
    let g = Grid2D::square(0.0, 1.0, 65)?;
    let solver = HodgeSolver::new(g)?;
    let lin_tol = PicardParams::default().lin_tol;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut div, mut rot_gap) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..3.0)).collect();
        let u = VectorField::from_fn(g, |x, y| {
            (
                c[0] * (k[0] * y).sin() + c[1] * x * x + c[2] * (k[1] * x * y).cos() + c[3] * y,
                c[4] * (k[2] * x).cos() + c[5] * x * y + c[6] * (k[3] * (x - y)).sin() + c[7],
            )
        });
        let d = solver.decompose(&u)?;
        div = div.max(divergence(&d.w).max_abs_interior());
        rot_gap = rot_gap.max(rot(&d.w).max_abs_diff_interior(&rot(&u)));
    }
    outcome(
        div <= 10.0 * lin_tol && rot_gap <= 1e-10,
        format!(
            "max |div W| {div:.2e} (<= {:.0e}), max |rot W - rot U| {rot_gap:.2e}",
            10.0 * lin_tol
        ),
    )
}

fn bernoulli_equivalence() -> Result<Outcome> {
    let g = Grid2D::square(-1.0, 1.0, 33)?;
    let solver = HodgeSolver::new(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_vort, mut worst_int) = (0.0f64, 0.0f64);
    for n in 0..20 {
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // gradients have no vorticity; affine fields with trace −1 carry a
        // constant vorticity that the transport law preserves
        let u = if n % 2 == 0 {
            gradient(&ScalarField::from_fn(g, |x, y| {
                c[0] * (2.0 * x).sin() * y + c[1] * x * x * y + c[2] * (x - y).cos()
            }))
        } else {
            let (a, b, d) = (c[0] - 0.5, c[1], c[2]);
            VectorField::from_fn(g, |x, y| (a * x + b * y + c[3], d * x - (1.0 + a) * y + c[4]))
        };
        let r = vorticity_equation_residual(&u).max_abs_interior();
        if r > 1e-10 {
            continue;
        }
        let w = solver.decompose(&u)?.w;
        let (gf, hf) = bernoulli_gh(&u, &w)?;
        worst_vort = worst_vort.max(r);
        worst_int = worst_int.max(integrability_residual(&gf, &hf)?);
    }
    let rigid = VectorField::from_fn(g, |x, y| (-y, x));
    let (gf, hf) = bernoulli_gh(&rigid, &rigid)?;
    let ri = integrability_residual(&gf, &hf)?;
    let rv = vorticity_equation_residual(&rigid).max_abs_interior();
    let pass = worst_int <= 5e-10 && (ri - 2.0).abs() <= 1e-12 && (rv - 2.0).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "max integrability {worst_int:.2e} at vorticity residual <= {worst_vort:.1e}; rigid rotation {ri}, {rv}"
        ),
    )
}

/// Inflow data curved along the sides, so the piecewise-linear interpolation
/// between frame nodes is the leading error.
fn inflow_data(x: f64, y: f64) -> f64 {
    (3.0 * x).sin() + (2.0 * y).cos()
}

fn transport_case(n: usize) -> Result<(Grid2D, ScalarField, f64)> {
    let g = Grid2D::square(0.25, 0.75, n)?;
    let psi = ScalarField::from_fn(g, |x, y| -0.5 * (x * x + y * y));
    let inflow = inflow_boundary(&psi, 1e-12).with_values(inflow_data);
    let t = transport_omega(&psi, &inflow, &TransportParams::default())?;
    let res = transport_residual(&t.omega, &gradient(&psi))?.max_abs_interior();
    Ok((g, t.omega, res))
}

fn vorticity_transport() -> Result<Outcome> {
    let (g, omega, r65) = transport_case(65)?;
    let mut rel = 0.0f64;
    for k in 0..g.len() {
        let (x, y) = g.point(k);
        let s = 0.75 / x.max(y);
        let (xb, yb) = (x * s, y * s);
        // ω|ξ| is carried unchanged from the inflow point
        let want = inflow_data(xb, yb) * xb.hypot(yb);
        rel = rel.max((omega.values[k] * x.hypot(y) - want).abs() / want);
    }
    let psi = ScalarField::from_fn(g, |x, y| -0.5 * (x * x + y * y));
    let zero = transport_omega(
        &psi,
        &inflow_boundary(&psi, 1e-12).with_values(|_, _| 0.0),
        &TransportParams::default(),
    )?;
    let zero_ok = zero.omega.values.iter().all(|v| *v == 0.0);
    let (_, _, r129) = transport_case(129)?;
    let ratio = r65 / r129;
    outcome(
        rel <= 1e-4 && zero_ok && (1.6..=2.6).contains(&ratio),
        format!("max rel |w|xi| - const| {rel:.2e}, zero data exact: {zero_ok}, residual {r65:.3e} -> {r129:.3e}, ratio {ratio:.3}"),
    )
}

fn gateaux() -> Result<Outcome> {
    let g = Grid2D::square(0.25, 0.75, 33)?;
    let law = law2();
    let psi0 = quiescent(g, -2.0);
    let t = gateaux_check(&law, &psi0, &bump(g), &[1e-2, 1e-3, 1e-4])?;
    let slope = t.slope.unwrap_or(f64::NAN);
    let l = linearized_l(&law, &psi0, &ScalarField::from_fn(g, |x, _| x))?.max_abs();
    outcome(
        (0.9..=1.1).contains(&slope) && l <= 1e-12,
        format!("defect slope {slope:.4}, |L[xi_1]| {l:.1e}"),
    )
}

fn quasi_continuation() -> Result<Outcome> {
    let g = Grid2D::square(0.25, 0.75, 33)?;
    let law = law2();
    let problem = PotentialProblem::new(law, quiescent(g, -2.0))?;
    let cfg = QuasiConfig::new(vec![0.0, 1e-3, 1e-2], bump(g));
    let params = PicardParams {
        tol_fixed_point: 1e-13,
        ..Default::default()
    };
    let sol = solve_quasi(&cfg, &problem, &EpsilonSchedule::default(), &params)?;
    if sol.states.len() != 3 {
        return outcome(
            false,
            format!("only {} of 3 stages: {:?}", sol.states.len(), sol.report.failure),
        );
    }
    let d: Vec<f64> = sol.report.stages.iter().map(|s| s.distance_from_potential).collect();
    let mut r1 = Vec::new();
    for s in &sol.states[1..] {
        let full = full_rotational_residual(&law, &s.psi, &s.zeta, cfg.f_constant, cfg.f_anchor, problem.c2_floor)?;
        r1.push(full.r1.max_abs_interior());
    }
    let dist_ratio = d[2] / d[1];
    let r1_ratio = r1[1] / r1[0];
    let pass = d[0] <= cfg.outer_tol && (5.0..=15.0).contains(&dist_ratio) && (100.0 / 3.0..=300.0).contains(&r1_ratio);
    outcome(
        pass,
        format!(
            "delta = 0 gap {:.1e}, distance ratio {dist_ratio:.3}, r1 {:.3e} -> {:.3e} ratio {r1_ratio:.1}",
            d[0], r1[0], r1[1]
        ),
    )
}

fn gas_suite() -> Result<Outcome> {
    let mut min_slope = f64::INFINITY;
    let (mut c2_err, mut round_trip) = (0.0f64, 0.0f64);
    for gamma in [-1.0, -0.5, 0.5, 1.0, 1.4, 2.0, 3.0] {
        let law = GasLaw::new(1.3, gamma, 0.2, LawVariant::Standard)?;
        for k in 1..=60 {
            let rho = 0.2 + 0.05 * k as f64;
            let h = 1e-5 * rho;
            let fd = (law.pressure(rho + h)? - law.pressure(rho - h)?) / (2.0 * h);
            let c2 = law.sound_speed_sq(rho)?;
            min_slope = min_slope.min(fd);
            c2_err = c2_err.max((c2 - fd).abs() / c2);
            let back = law.enthalpy_inverse(law.enthalpy(rho)?)?;
            round_trip = round_trip.max((back - rho).abs() / rho);
        }
    }
    outcome(
        min_slope > 0.0 && c2_err <= 1e-6 && round_trip <= 1e-10,
        format!("min p' {min_slope:.3e}, c^2 rel err {c2_err:.2e}, enthalpy round trip {round_trip:.2e}"),
    )
}

const QUIESCENT_CONFIG: &str = r#"{
  "gas": {"a": 1.0, "gamma": 2.0},
  "grid": {"x0": -0.5, "x1": 0.5, "y0": -0.5, "y1": 0.5, "nx": 65, "ny": 65},
  "boundary": {"kind": "quiescent", "K": -1.0},
  "solver": {"eps_min": 1e-6},
  "output": {"dir": "out"}
}
"#;

fn run_binary(config: &Path) -> Result<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_selfsim"))
        .arg("solve-potential")
        .arg("--config")
        .arg(config)
        .env("SELFSIM_THREADS", "2")
        .output()
        .map_err(|e| selfsim::Error::Internal(format!("could not run selfsim: {e}")))?;
    if !status.status.success() {
        return Err(selfsim::Error::Internal(format!(
            "selfsim exited with {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        )));
    }
    let out = config.parent().unwrap_or(Path::new(".")).join("out");
    let mut bytes = std::fs::read(out.join("phi.f2d")).map_err(|e| selfsim::Error::Internal(e.to_string()))?;
    bytes.extend(std::fs::read(out.join("report.json")).map_err(|e| selfsim::Error::Internal(e.to_string()))?);
    Ok(bytes)
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| selfsim::Error::Internal(e.to_string()))?;
    let cfg = dir.path().join("quiescent.json");
    std::fs::write(&cfg, QUIESCENT_CONFIG).map_err(|e| selfsim::Error::Internal(e.to_string()))?;
    let first = run_binary(&cfg)?;
    let second = run_binary(&cfg)?;
    outcome(
        first == second,
        format!(
            "{} bytes of phi.f2d + report.json, identical: {}",
            first.len(),
            first == second
        ),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("exact quiescent solution", quiescent_solution),
        ("frozen-system inversion", frozen_inversion),
        ("manufactured-solution convergence", manufactured_convergence),
        ("regularization bias", regularization_bias),
        ("discriminant identity", discriminant_identity),
        ("eigenvalue goldens", eigen_goldens),
        ("hodge round trip", hodge_round_trip),
        ("bernoulli integrability", bernoulli_equivalence),
        ("vorticity transport", vorticity_transport),
        ("gateaux check", gateaux),
        ("quasi-potential continuation", quasi_continuation),
        ("gas-law suite", gas_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
        });
        let tag = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!(
            "{tag} {:>2} {name}: {} [{:.1}s]",
            n + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
