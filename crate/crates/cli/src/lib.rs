//! Command-line front end: config parsing, subcommand dispatch, reports and
//! the exit-code contract.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use selfsim::field::{gradient, io as fio, Grid2D, ScalarField};
use selfsim::hodge::HodgeSolver;
use selfsim::potential::{c2_of_phi, diagnostics, epsilon_continuation, SolveStatus};
use selfsim::quasipotential::solve_quasi;
use selfsim::regime::{classify, pseudo_mach_field};
use selfsim::vorticity::{inflow_boundary, transport_omega, transport_residual};
use selfsim::{verify, Error, Result};

use config::RunConfig;
use output::Batch;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "selfsim",
    version,
    about = "Self-similar potential and quasi-potential flow solvers"
)]
struct Cli {
    /// Upgrade warnings (unknown config keys, uncovered nodes) to errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a potential's flow regime and audit the pseudo-Mach field.
    Classify {
        #[arg(long)]
        config: PathBuf,
        /// Potential to classify; defaults to the configured boundary profile.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Hodge decomposition of a vector field.
    Decompose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// Transport vorticity along the gradient of a potential.
    Transport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        psi: PathBuf,
    },
    /// Solve the potential-flow equation by epsilon-continuation.
    SolvePotential {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the quasi-potential system by delta-continuation.
    SolveQuasi {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in self-check suites.
    Verify,
}

/// Why a run ended with a non-zero code.
#[derive(Debug)]
pub enum Failure {
    Error(Error),
    /// The run produced output but did not fully converge.
    Partial(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Range(_) | Error::Format { .. } | Error::DimensionMismatch(_) => {
            EXIT_CONFIG
        }
        Error::Io { .. } => EXIT_IO,
        Error::Internal(_) => EXIT_INTERNAL,
        Error::LinearStagnation { .. }
        | Error::Singular(_)
        | Error::IndefiniteSystem { .. }
        | Error::CapExceeded { .. }
        | Error::NonConvergence { .. }
        | Error::NonSolenoidalInput(_)
        | Error::UncoveredNodes { .. }
        | Error::NonIntegrable(_)
        | Error::SonicEncroachment(_) => EXIT_SOLVER,
    }
}

/// Number of worker threads from `SELFSIM_THREADS` (default 1).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var("SELFSIM_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!(
                "SELFSIM_THREADS must be a positive integer, got {s:?}"
            ))),
        },
    }
}

#[derive(Debug, Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
}

fn metadata(cfg: &RunConfig, command: &'static str) -> Metadata {
    Metadata {
        tool: "selfsim",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
    }
}

#[derive(Debug, Serialize)]
struct Report<T: Serialize> {
    metadata: Metadata,
    #[serde(flatten)]
    body: T,
}

fn load_config(path: &Path, strict: bool, err: &mut impl Write) -> Result<RunConfig> {
    let loaded = config::load(path)?;
    let mut cfg = loaded.config;
    cfg.strict |= strict;
    if !loaded.unknown.is_empty() {
        if cfg.strict {
            return Err(Error::Config(format!(
                "unknown config keys: {}",
                loaded.unknown.join(", ")
            )));
        }
        for k in &loaded.unknown {
            let _ = writeln!(err, "warning: ignoring unknown config key `{k}`");
        }
    }
    Ok(cfg)
}

fn report_path(cfg: &RunConfig) -> PathBuf {
    cfg.output
        .report_path
        .as_ref()
        .map(|p| cfg.resolve(p))
        .unwrap_or_else(|| cfg.out_path("report.json"))
}

fn read_scalar(cfg: &RunConfig, path: &Path, grid: Grid2D) -> Result<ScalarField> {
    let f = fio::read_field(cfg.resolve_cli(path))?.into_scalar()?;
    if f.grid != grid {
        return Err(Error::DimensionMismatch(format!(
            "{} does not live on the configured grid",
            path.display()
        )));
    }
    Ok(f)
}

impl RunConfig {
    /// Paths given on the command line are relative to the working directory.
    fn resolve_cli(&self, p: &Path) -> PathBuf {
        p.to_path_buf()
    }
}

fn cmd_classify(cfg: &RunConfig, phi: Option<&Path>, out: &mut impl Write) -> std::result::Result<(), Failure> {
    let grid = cfg.grid.grid()?;
    let law = cfg.gas.law()?;
    let phi = match phi {
        Some(p) => read_scalar(cfg, p, grid)?,
        None => cfg.boundary_field(grid)?,
    };
    let grad = gradient(&phi);
    let c2 = c2_of_phi(&law, &phi, &grad, f64::NEG_INFINITY)?;
    let rep = classify(&grad, &c2.c2, selfsim::gas::DEFAULT_TOL_SONIC)?;
    let mut batch = Batch::new(cfg.output.csv);
    batch.field(cfg.out_path("L2.f2d"), rep.l2.clone());
    let rpath = report_path(cfg);
    batch.json(
        rpath.clone(),
        &Report {
            metadata: metadata(cfg, "classify"),
            body: rep.summary(),
        },
    )?;
    batch.commit()?;
    let c = rep.counts;
    let _ = writeln!(
        out,
        "classify: max L^2 = {:.6} ({} subsonic, {} sonic, {} supersonic, {} flagged), audit {:?}; report {}",
        rep.max_l2,
        c.subsonic,
        c.sonic,
        c.supersonic,
        rep.flagged,
        rep.audit.verdict,
        rpath.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct DecomposeSummary {
    residual: f64,
    div_w_norm: f64,
    flux_defect: f64,
}

fn cmd_decompose(cfg: &RunConfig, field: &Path, out: &mut impl Write) -> std::result::Result<(), Failure> {
    let grid = cfg.grid.grid()?;
    let u = fio::read_field(cfg.resolve_cli(field))?.into_vector()?;
    if u.grid != grid {
        return Err(
            Error::DimensionMismatch(format!("{} does not live on the configured grid", field.display())).into(),
        );
    }
    let d = HodgeSolver::new(grid)?.decompose(&u)?;
    let mut batch = Batch::new(cfg.output.csv);
    batch.field(cfg.out_path("psi.f2d"), d.psi.clone());
    batch.field(cfg.out_path("w.f2d"), d.w.clone());
    let rpath = report_path(cfg);
    let summary = DecomposeSummary {
        residual: d.residual,
        div_w_norm: d.div_w_norm,
        flux_defect: d.flux_defect,
    };
    batch.json(
        rpath.clone(),
        &Report {
            metadata: metadata(cfg, "decompose"),
            body: &summary,
        },
    )?;
    batch.commit()?;
    let _ = writeln!(
        out,
        "decompose: max |div W| = {:.3e}, flux defect {:.3e}; report {}",
        d.div_w_norm,
        d.flux_defect,
        rpath.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct TransportSummary {
    inflow_nodes: usize,
    uncovered: usize,
    residual_inf: f64,
}

fn read_inflow_csv(path: &Path, grid: &Grid2D) -> Result<Vec<(usize, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('i') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Format {
            line: n + 1,
            msg: format!("expected `i,j,value`, got {line:?}"),
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let i: usize = parts[0].parse().map_err(|_| bad())?;
        let j: usize = parts[1].parse().map_err(|_| bad())?;
        let v: f64 = parts[2].parse().map_err(|_| bad())?;
        if i >= grid.nx || j >= grid.ny || !grid.is_boundary(i, j) {
            return Err(Error::Format {
                line: n + 1,
                msg: format!("({i}, {j}) is not a frame node"),
            });
        }
        out.push((grid.idx(i, j), v));
    }
    Ok(out)
}

fn cmd_transport(
    cfg: &RunConfig,
    psi: &Path,
    threads: usize,
    out: &mut impl Write,
) -> std::result::Result<(), Failure> {
    let grid = cfg.grid.grid()?;
    let psi = read_scalar(cfg, psi, grid)?;
    let t = &cfg.transport;
    let mut data = vec![0.0; grid.len()];
    for sv in &t.inflow {
        for k in grid.frame() {
            let (i, j) = grid.ij(k);
            if sv.side.contains(&grid, i, j) {
                data[k] = sv.value;
            }
        }
    }
    if let Some(p) = &t.inflow_csv {
        for (k, v) in read_inflow_csv(&cfg.resolve(p), &grid)? {
            data[k] = v;
        }
    }
    let inflow = inflow_boundary(&psi, t.tol_inflow).with_field(&ScalarField::from_values(grid, data)?);
    let res = transport_omega(&psi, &inflow, &t.params(threads))?;
    if cfg.strict && !res.uncovered.is_empty() {
        return Err(Error::UncoveredNodes {
            count: res.uncovered.len(),
        }
        .into());
    }
    let r = transport_residual(&res.omega, &gradient(&psi))?;
    let summary = TransportSummary {
        inflow_nodes: inflow.nodes.len(),
        uncovered: res.uncovered.len(),
        residual_inf: r.max_abs_interior(),
    };
    let mut batch = Batch::new(cfg.output.csv);
    batch.field(cfg.out_path("omega.f2d"), res.omega);
    let rpath = report_path(cfg);
    batch.json(
        rpath.clone(),
        &Report {
            metadata: metadata(cfg, "transport"),
            body: &summary,
        },
    )?;
    batch.commit()?;
    let _ = writeln!(
        out,
        "transport: {} inflow nodes, {} uncovered, residual {:.3e}; report {}",
        summary.inflow_nodes,
        summary.uncovered,
        summary.residual_inf,
        rpath.display()
    );
    Ok(())
}

fn cmd_solve_potential(cfg: &RunConfig, out: &mut impl Write) -> std::result::Result<(), Failure> {
    let problem = cfg.problem()?;
    let params = cfg.solver.picard()?;
    let schedule = cfg.solver.schedule()?;
    let (phi, rep) = epsilon_continuation(&problem, &schedule, &params)?;
    let d = diagnostics(&problem, &phi)?;
    let mut batch = Batch::new(cfg.output.csv);
    let phi_path = cfg
        .output
        .phi_path
        .as_ref()
        .map(|p| cfg.resolve(p))
        .unwrap_or_else(|| cfg.out_path("phi.f2d"));
    batch.field(phi_path, phi);
    batch.field(cfg.out_path("c2.f2d"), d.c2.c2);
    batch.field(cfg.out_path("L2.f2d"), d.l2);
    let rpath = report_path(cfg);
    batch.json(
        rpath.clone(),
        &Report {
            metadata: metadata(cfg, "solve-potential"),
            body: &rep,
        },
    )?;
    batch.commit()?;
    let _ = writeln!(
        out,
        "solve-potential: {:?} at eps = {:e}, residual {:.3e}, max L^2 = {:.6}, audit {:?}; report {}",
        rep.status,
        rep.final_eps,
        rep.residual_inf,
        rep.max_l2,
        rep.audit.verdict,
        rpath.display()
    );
    match rep.status {
        SolveStatus::Converged => Ok(()),
        SolveStatus::PartialContinuation => Err(Failure::Partial(
            rep.failure
                .map(|f| format!("stage eps = {:e}: {}", f.eps, f.error))
                .unwrap_or_default(),
        )),
    }
}

fn cmd_solve_quasi(cfg: &RunConfig, threads: usize, out: &mut impl Write) -> std::result::Result<(), Failure> {
    let problem = cfg.problem()?;
    let params = cfg.solver.picard()?;
    let schedule = cfg.solver.schedule()?;
    let qcfg = cfg.quasi_config(problem.grid, threads)?;
    let sol = solve_quasi(&qcfg, &problem, &schedule, &params)?;
    let mut batch = Batch::new(cfg.output.csv);
    for s in &sol.states {
        let dir = format!("delta_{:e}", s.delta);
        let p = |name: &str| cfg.out_path(&dir).join(name);
        batch.field(p("psi.f2d"), s.psi.clone());
        batch.field(p("zeta.f2d"), s.zeta.clone());
        batch.field(p("omega_tilde.f2d"), s.omega_tilde.clone());
        batch.field(p("c2.f2d"), s.c2.clone());
        batch.field(p("N1.f2d"), s.n1.clone());
        batch.field(p("F1.f2d"), s.f1.clone());
        let u = selfsim::quasipotential::quasi_velocity(&s.psi, &s.zeta_tilde, s.delta)?;
        batch.field(p("L2.f2d"), pseudo_mach_field(&u, &s.c2)?);
    }
    let rpath = report_path(cfg);
    batch.json(
        rpath.clone(),
        &Report {
            metadata: metadata(cfg, "solve-quasi"),
            body: &sol.report,
        },
    )?;
    batch.commit()?;
    let last = sol.report.stages.last();
    let _ = writeln!(
        out,
        "solve-quasi: {:?}, {} of {} delta stages, last delta = {}, max L^2 = {:.6}; report {}",
        sol.report.status,
        sol.states.len(),
        qcfg.delta_targets.len(),
        last.map_or(f64::NAN, |s| s.delta),
        last.map_or(f64::NAN, |s| s.max_l2),
        rpath.display()
    );
    match sol.report.status {
        SolveStatus::Converged => Ok(()),
        SolveStatus::PartialContinuation => Err(Failure::Partial(
            sol.report
                .failure
                .map(|f| format!("stage delta = {}: {}", f.eps, f.error))
                .unwrap_or_else(|| "potential continuation was partial".into()),
        )),
    }
}

fn cmd_verify(out: &mut impl Write) -> std::result::Result<(), Failure> {
    let suites = verify::run_all();
    let (mut pass, mut fail) = (0, 0);
    for s in &suites {
        for c in &s.checks {
            let tag = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {}::{} {}", s.module, c.name, c.detail);
        }
        pass += s.passed();
        fail += s.failed();
    }
    let _ = writeln!(out, "verify: {pass} passed, {fail} failed in {} suites", suites.len());
    if fail == 0 {
        Ok(())
    } else {
        Err(Failure::Error(Error::Internal(format!("{fail} self-checks failed"))))
    }
}

fn dispatch(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> std::result::Result<(), Failure> {
    let threads = threads_from_env()?;
    match cli.command {
        Command::Verify => cmd_verify(out),
        Command::Classify { config, phi } => {
            let cfg = load_config(&config, cli.strict, err)?;
            cmd_classify(&cfg, phi.as_deref(), out)
        }
        Command::Decompose { config, field } => {
            let cfg = load_config(&config, cli.strict, err)?;
            cmd_decompose(&cfg, &field, out)
        }
        Command::Transport { config, psi } => {
            let cfg = load_config(&config, cli.strict, err)?;
            cmd_transport(&cfg, &psi, threads, out)
        }
        Command::SolvePotential { config } => {
            let cfg = load_config(&config, cli.strict, err)?;
            cmd_solve_potential(&cfg, out)
        }
        Command::SolveQuasi { config } => {
            let cfg = load_config(&config, cli.strict, err)?;
            cmd_solve_quasi(&cfg, threads, out)
        }
    }
}

/// Run the CLI on `args` (including the program name), writing the summary
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Partial(msg)) => {
            let _ = writeln!(err, "error: continuation stopped early: {msg}");
            EXIT_SOLVER
        }
        Err(Failure::Error(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
