//! Built-in self-checks, one suite per module, on small closed-form cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::field::{divergence, gradient, laplacian, rot, Grid2D, ScalarField, VectorField};
use crate::gas::{GasLaw, LawVariant};
use crate::hodge::HodgeSolver;
use crate::potential::{epsilon_continuation, quiescent, EpsilonSchedule, PicardParams, PotentialProblem};
use crate::quasipotential::{compute_n1, gateaux_check, linearized_l};
use crate::regime::{discriminant, eigen_steady, eigen_time_dependent, AuditVerdict};
use crate::vorticity::{inflow_boundary, transport_omega, TransportParams};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub module: &'static str,
    pub checks: Vec<Check>,
}

impl Suite {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check {
        name,
        passed: value <= tol,
        detail: format!("{value:.3e} <= {tol:.0e}"),
    }
}

fn outcome(name: &'static str, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check {
        name,
        passed: false,
        detail: e.to_string(),
    })
}

fn gas_suite() -> Suite {
    let gammas = [-1.0, -0.5, 0.5, 1.0, 1.4, 2.0, 3.0];
    let mut min_slope = f64::INFINITY;
    let mut c2_err = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut errors = Vec::new();
    for &g in &gammas {
        let law = match GasLaw::new(1.3, g, 0.2, LawVariant::Standard) {
            Ok(l) => l,
            Err(e) => {
                errors.push(e.to_string());
                continue;
            }
        };
        for k in 1..=40 {
            let rho = 0.2 + 0.1 * k as f64;
            let h = 1e-5 * rho;
            let mut run = || -> Result<()> {
                let fd = (law.pressure(rho + h)? - law.pressure(rho - h)?) / (2.0 * h);
                let c2 = law.sound_speed_sq(rho)?;
                min_slope = min_slope.min(fd);
                c2_err = c2_err.max((c2 - fd).abs() / c2);
                let back = law.enthalpy_inverse(law.enthalpy(rho)?)?;
                round_trip = round_trip.max((back - rho).abs() / rho);
                Ok(())
            };
            if let Err(e) = run() {
                errors.push(e.to_string());
            }
        }
    }
    let mut checks = vec![
        Check {
            name: "pressure is increasing",
            passed: min_slope > 0.0 && errors.is_empty(),
            detail: format!("min p' = {min_slope:.3e}, {} errors", errors.len()),
        },
        check("sound speed matches dp/drho", c2_err, 1e-6),
        check("enthalpy round trip", round_trip, 1e-10),
    ];
    checks.push(Check {
        name: "gamma = 0 rejected",
        passed: GasLaw::polytropic(1.0, 0.0).is_err(),
        detail: String::new(),
    });
    Suite { module: "gas", checks }
}

fn field_suite() -> Suite {
    let g = Grid2D::new(-0.5, 0.5, -0.2, 0.9, 13, 11).expect("fixed grid");
    let f = ScalarField::from_fn(g, |x, y| 0.7 * x * x - 0.4 * x * y + 1.1 * y * y - x + 2.0);
    let d = gradient(&f);
    let want = VectorField::from_fn(g, |x, y| (1.4 * x - 0.4 * y - 1.0, -0.4 * x + 2.2 * y));
    let lap = laplacian(&f).map(|v| v - 3.6);
    let s = ScalarField::from_fn(g, |x, y| (2.0 * x).sin() * (3.0 * y).cos());
    Suite {
        module: "field",
        checks: vec![
            check("gradient exact on quadratics", d.max_abs_diff(&want), 1e-12),
            check("laplacian exact on quadratics", lap.max_abs(), 1e-11),
            check("rot grad = 0", rot(&gradient(&s)).max_abs_interior(), 1e-12),
        ],
    }
}

fn regime_suite() -> Suite {
    let s = eigen_steady(2.0, 0.0, 1.0);
    let r3 = 3f64.sqrt() / 3.0;
    let steady_err = match s.sorted() {
        Some([a, b, c]) => (a + r3).abs().max(b.abs()).max((c - r3).abs()),
        None => f64::INFINITY,
    };
    let t = eigen_time_dependent(0.0, 0.0, 1.0, (1.0, 0.0))
        .ok()
        .and_then(|t| t.sorted());
    let td_err = t.map_or(f64::INFINITY, |[a, b, c]| {
        (a + 1.0).abs().max(b.abs()).max((c - 1.0).abs())
    });
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let grad = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let c2 = rng.gen_range(0.5..2.0);
        if let Ok((d, want)) = discriminant(grad, c2) {
            worst = worst.max((d - want).abs());
        } else {
            worst = f64::INFINITY;
        }
    }
    Suite {
        module: "regime",
        checks: vec![
            check("steady eigenvalues", steady_err, 1e-14),
            check("time-dependent eigenvalues", td_err, 1e-14),
            Check {
                name: "complex pair below sonic",
                passed: eigen_steady(0.5, 0.0, 1.0).is_complex(),
                detail: String::new(),
            },
            check("discriminant identity", worst, 1e-12),
        ],
    }
}

fn hodge_suite() -> Suite {
    let name = "decomposition round trip";
    let run = || -> Result<Check> {
        let g = Grid2D::square(0.0, 1.0, 25)?;
        let u = VectorField::from_fn(g, |x, y| ((2.0 * y).sin() + x * x, (x * y).cos() - y));
        let d = HodgeSolver::new(g)?.decompose(&u)?;
        let rot_gap = rot(&d.w).max_abs_diff_interior(&rot(&u));
        let div = divergence(&d.w).max_abs_interior();
        Ok(check(name, div.max(rot_gap), 1e-10))
    };
    Suite {
        module: "hodge",
        checks: vec![outcome(name, run())],
    }
}

fn potential_suite() -> Suite {
    let name = "quiescent state recovered";
    let run = || -> Result<Vec<Check>> {
        let g = Grid2D::square(-0.5, 0.5, 17)?;
        let law = GasLaw::polytropic(1.0, 2.0)?;
        let exact = quiescent(g, -1.0);
        let problem = PotentialProblem::new(law, exact.clone())?;
        let (phi, rep) = epsilon_continuation(&problem, &EpsilonSchedule::default(), &PicardParams::default())?;
        Ok(vec![
            check(name, phi.max_abs_diff(&exact), 1e-8),
            Check {
                name: "ellipticity audit",
                passed: rep.audit.verdict == AuditVerdict::Pass,
                detail: format!("{:?}", rep.audit.verdict),
            },
        ])
    };
    Suite {
        module: "potential",
        checks: run().unwrap_or_else(|e| vec![outcome(name, Err(e))]),
    }
}

fn vorticity_suite() -> Suite {
    let name = "sink closed form";
    let run = || -> Result<Vec<Check>> {
        let g = Grid2D::square(0.25, 0.75, 17)?;
        let psi = ScalarField::from_fn(g, |x, y| -0.5 * (x * x + y * y));
        let inflow = inflow_boundary(&psi, 1e-12).with_values(|_, _| 1.0);
        let t = transport_omega(&psi, &inflow, &TransportParams::default())?;
        let mut rel = 0.0f64;
        for k in 0..g.len() {
            let (x, y) = g.point(k);
            let want = 0.75 / x.max(y);
            rel = rel.max((t.omega.values[k] - want).abs() / want);
        }
        let zero = transport_omega(&psi, &inflow.with_values(|_, _| 0.0), &TransportParams::default())?;
        Ok(vec![
            check(name, rel, 1e-4),
            check("zero data stay zero", zero.omega.max_abs(), 0.0),
        ])
    };
    Suite {
        module: "vorticity",
        checks: run().unwrap_or_else(|e| vec![outcome(name, Err(e))]),
    }
}

fn quasi_suite() -> Suite {
    let name = "L[xi_1] = 0 at rest";
    let run = || -> Result<Vec<Check>> {
        let g = Grid2D::square(0.25, 0.75, 17)?;
        let law = GasLaw::polytropic(1.0, 2.0)?;
        let psi0 = quiescent(g, -2.0);
        let l = linearized_l(&law, &psi0, &ScalarField::from_fn(g, |x, _| x))?;
        let pi = std::f64::consts::PI;
        let v = ScalarField::from_fn(g, |x, y| (pi * x).sin() * (pi * y).sin());
        let slope = gateaux_check(&law, &psi0, &v, &[1e-2, 1e-3, 1e-4])?
            .slope
            .unwrap_or(f64::NAN);
        let n1 = compute_n1(&psi0, &ScalarField::from_fn(g, |x, y| 0.5 * (x * x + y * y)))?;
        Ok(vec![
            check(name, l.max_abs(), 1e-12),
            Check {
                name: "Gateaux defect is first order",
                passed: (0.9..=1.1).contains(&slope),
                detail: format!("slope {slope:.4}"),
            },
            check("N1 vanishes for radial pair", n1.max_abs(), 1e-12),
        ])
    };
    Suite {
        module: "quasipotential",
        checks: run().unwrap_or_else(|e| vec![outcome(name, Err(e))]),
    }
}

/// Run every suite.
pub fn run_all() -> Vec<Suite> {
    vec![
        gas_suite(),
        field_suite(),
        regime_suite(),
        hodge_suite(),
        potential_suite(),
        vorticity_suite(),
        quasi_suite(),
    ]
}
