//! Vorticity transport `div(ωb) + ω = 0` along the characteristics of the
//! drift `b = ∇ψ`.
//!
//! Along `dξ/dr = b` the equation reduces to `dω/dr = −(1 + div b)ω`, so
//! `ω(ξ(r)) = ω(ξ_b)·exp(−∫₀^r (1 + div b) ds)`. Every node is traced
//! backwards to the inflow boundary with classical RK4, carrying the
//! exponent as an extra ODE component; the exit point is located by
//! bisecting the last step.

use std::thread;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{divergence, gradient, Grid2D, ScalarField, VectorField};

/// Drift magnitude below which a trace is declared stagnant.
pub const STAGNATION: f64 = 1e-10;

/// `∇ψ` and `div ∇ψ` with bilinear interpolation inside the grid.
#[derive(Debug, Clone)]
pub struct Drift {
    grid: Grid2D,
    b: VectorField,
    div: ScalarField,
}

impl Drift {
    pub fn from_potential(psi: &ScalarField) -> Self {
        let b = gradient(psi);
        let div = divergence(&b);
        Self { grid: psi.grid, b, div }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn field(&self) -> &VectorField {
        &self.b
    }

    /// `(b₁, b₂, div b)` at a point, clamped into the rectangle.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let g = &self.grid;
        let locate = |p: f64, lo: f64, h: f64, n: usize| {
            let s = ((p - lo) / h).clamp(0.0, (n - 1) as f64);
            let c = (s.floor() as usize).min(n - 2);
            (c, s - c as f64)
        };
        let (i, tx) = locate(x, g.x0, g.hx(), g.nx);
        let (j, ty) = locate(y, g.y0, g.hy(), g.ny);
        let k00 = g.idx(i, j);
        let (k10, k01, k11) = (k00 + 1, k00 + g.nx, k00 + g.nx + 1);
        let lerp =
            |f: &[f64]| (1.0 - ty) * ((1.0 - tx) * f[k00] + tx * f[k10]) + ty * ((1.0 - tx) * f[k01] + tx * f[k11]);
        (lerp(&self.b.u), lerp(&self.b.v), lerp(&self.div.values))
    }
}

/// Outward unit normal at frame node `(i, j)`; corners use the diagonal.
pub fn outward_normal(g: &Grid2D, i: usize, j: usize) -> (f64, f64) {
    let mut n = (0.0f64, 0.0f64);
    if i == 0 {
        n.0 -= 1.0;
    }
    if i == g.nx - 1 {
        n.0 += 1.0;
    }
    if j == 0 {
        n.1 -= 1.0;
    }
    if j == g.ny - 1 {
        n.1 += 1.0;
    }
    let len = n.0.hypot(n.1);
    if len > 0.0 {
        (n.0 / len, n.1 / len)
    } else {
        n
    }
}

/// Frame nodes where the drift enters the domain, with their data.
#[derive(Debug, Clone, PartialEq)]
pub struct InflowSet {
    pub grid: Grid2D,
    pub nodes: Vec<usize>,
    /// `ω` at each entry of `nodes`.
    pub omega: Vec<f64>,
}

impl InflowSet {
    /// Replace the data with `f(ξ)` sampled at the inflow nodes.
    pub fn with_values(mut self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.omega = self
            .nodes
            .iter()
            .map(|&k| {
                let (x, y) = self.grid.point(k);
                f(x, y)
            })
            .collect();
        self
    }

    /// Take the data from a full-grid field.
    pub fn with_field(mut self, f: &ScalarField) -> Self {
        self.omega = self.nodes.iter().map(|&k| f.values[k]).collect();
        self
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Frame nodes with `∇ψ·ν < −tol`, carrying zero data.
pub fn inflow_boundary(psi: &ScalarField, tol: f64) -> InflowSet {
    inflow_of(&Drift::from_potential(psi), tol)
}

fn inflow_of(drift: &Drift, tol: f64) -> InflowSet {
    let g = drift.grid;
    let nodes: Vec<usize> = g
        .frame()
        .into_iter()
        .filter(|&k| {
            let (i, j) = g.ij(k);
            let n = outward_normal(&g, i, j);
            drift.b.u[k] * n.0 + drift.b.v[k] * n.1 < -tol
        })
        .collect();
    let omega = vec![0.0; nodes.len()];
    InflowSet { grid: g, nodes, omega }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LeftDomain,
    MaxLength,
    Stagnation,
}

#[derive(Debug, Clone)]
pub struct CharacteristicTrace {
    pub start: (f64, f64),
    /// Positions after every accepted step, starting with `start`.
    pub nodes: Vec<(f64, f64)>,
    /// `∫₀^r (1 + div b) ds` at the same positions.
    pub accumulated: Vec<f64>,
    /// Parameter length `r` at the end of the trace.
    pub length: f64,
    pub terminated: Termination,
}

impl CharacteristicTrace {
    pub fn end(&self) -> (f64, f64) {
        *self.nodes.last().expect("a trace holds its start")
    }

    pub fn integral(&self) -> f64 {
        *self.accumulated.last().expect("a trace holds its start")
    }
}

type State = [f64; 3];

fn rk4(drift: &Drift, s: State, h: f64, sign: f64) -> State {
    let f = |p: State| {
        let (b1, b2, d) = drift.sample(p[0], p[1]);
        [sign * b1, sign * b2, 1.0 + d]
    };
    let add = |p: State, k: State, t: f64| [p[0] + t * k[0], p[1] + t * k[1], p[2] + t * k[2]];
    let k1 = f(s);
    let k2 = f(add(s, k1, 0.5 * h));
    let k3 = f(add(s, k2, 0.5 * h));
    let k4 = f(add(s, k3, h));
    let mut out = s;
    for c in 0..3 {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

fn inside(g: &Grid2D, x: f64, y: f64) -> bool {
    g.contains(x, y)
}

/// Snap a point within rounding of the frame onto it.
fn snap(g: &Grid2D, x: f64, y: f64) -> (f64, f64) {
    (x.clamp(g.x0, g.x1), y.clamp(g.y0, g.y1))
}

fn trace_impl(
    drift: &Drift,
    start: (f64, f64),
    step: f64,
    max_len: f64,
    sign: f64,
    record: bool,
) -> CharacteristicTrace {
    let g = drift.grid;
    let mut s: State = [start.0, start.1, 0.0];
    let mut r = 0.0;
    let mut nodes = vec![start];
    let mut acc = vec![0.0];
    let terminated = loop {
        let (b1, b2, _) = drift.sample(s[0], s[1]);
        if b1.hypot(b2) < STAGNATION {
            break Termination::Stagnation;
        }
        if r >= max_len {
            break Termination::MaxLength;
        }
        let h = step.min(max_len - r).max(f64::MIN_POSITIVE);
        let next = rk4(drift, s, h, sign);
        if inside(&g, next[0], next[1]) {
            s = next;
            r += h;
            if record {
                nodes.push((s[0], s[1]));
                acc.push(s[2]);
            }
            continue;
        }
        // bisect the step length so the endpoint lands on the frame
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let p = rk4(drift, s, mid, sign);
            if inside(&g, p[0], p[1]) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = rk4(drift, s, hi, sign);
        let (x, y) = snap(&g, p[0], p[1]);
        s = [x, y, p[2]];
        r += hi;
        if record {
            nodes.push((x, y));
            acc.push(s[2]);
        }
        break Termination::LeftDomain;
    };
    if !record {
        nodes = vec![start, (s[0], s[1])];
        acc = vec![0.0, s[2]];
    }
    CharacteristicTrace {
        start,
        nodes,
        accumulated: acc,
        length: r,
        terminated,
    }
}

/// Forward characteristic `dξ/dr = ∇ψ(ξ)` from `start`.
pub fn trace_characteristic(drift: &Drift, start: (f64, f64), step: f64, max_len: f64) -> Result<CharacteristicTrace> {
    check_trace_args(drift, start, step, max_len)?;
    Ok(trace_impl(drift, start, step, max_len, 1.0, true))
}

/// Backward characteristic `dξ/dr = −∇ψ(ξ)` from `start`.
pub fn trace_backward(drift: &Drift, start: (f64, f64), step: f64, max_len: f64) -> Result<CharacteristicTrace> {
    check_trace_args(drift, start, step, max_len)?;
    Ok(trace_impl(drift, start, step, max_len, -1.0, true))
}

fn check_trace_args(drift: &Drift, start: (f64, f64), step: f64, max_len: f64) -> Result<()> {
    if !inside(&drift.grid, start.0, start.1) {
        return Err(Error::Domain(format!(
            "trace start ({}, {}) is outside the grid",
            start.0, start.1
        )));
    }
    if !(step > 0.0) || !(max_len > 0.0) {
        return Err(Error::Config("trace step and max_len must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportParams {
    /// RK4 step in `r`; defaults to a quarter of the smaller grid spacing.
    pub step: Option<f64>,
    pub max_len: f64,
    pub tol_inflow: f64,
    /// Worker threads for the per-node traces; output does not depend on it.
    pub threads: usize,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            step: None,
            max_len: 100.0,
            tol_inflow: 1e-12,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transported {
    pub omega: ScalarField,
    /// Nodes whose trace stagnated, ran out of length or exited away from inflow data.
    pub uncovered: Vec<usize>,
}

/// Data on the frame at an exit point: linear interpolation between the
/// adjacent frame nodes that carry inflow data, or the one that does.
fn boundary_value(g: &Grid2D, data: &[Option<f64>], x: f64, y: f64) -> Option<f64> {
    let (hx, hy) = (g.hx(), g.hy());
    let on = |p: f64, q: f64, h: f64| (p - q).abs() <= 1e-9 * h;
    let mut candidates = Vec::with_capacity(2);
    if on(x, g.x0, hx) || on(x, g.x1, hx) {
        let i = if on(x, g.x0, hx) { 0 } else { g.nx - 1 };
        let s = ((y - g.y0) / hy).clamp(0.0, (g.ny - 1) as f64);
        let j = (s.floor() as usize).min(g.ny - 2);
        candidates.push((g.idx(i, j), g.idx(i, j + 1), s - j as f64));
    }
    if on(y, g.y0, hy) || on(y, g.y1, hy) {
        let j = if on(y, g.y0, hy) { 0 } else { g.ny - 1 };
        let s = ((x - g.x0) / hx).clamp(0.0, (g.nx - 1) as f64);
        let i = (s.floor() as usize).min(g.nx - 2);
        candidates.push((g.idx(i, j), g.idx(i + 1, j), s - i as f64));
    }
    for (ka, kb, t) in candidates {
        match (data[ka], data[kb]) {
            (Some(a), Some(b)) => return Some((1.0 - t) * a + t * b),
            (Some(a), None) => return Some(a),
            (None, Some(b)) => return Some(b),
            (None, None) => {}
        }
    }
    None
}

/// Solve the transport equation at every node from inflow data.
pub fn transport_omega(psi: &ScalarField, inflow: &InflowSet, params: &TransportParams) -> Result<Transported> {
    let drift = Drift::from_potential(psi);
    transport_with_drift(&drift, inflow, params)
}

pub fn transport_with_drift(drift: &Drift, inflow: &InflowSet, params: &TransportParams) -> Result<Transported> {
    let g = drift.grid;
    g.same_as(&inflow.grid)?;
    if inflow.nodes.len() != inflow.omega.len() {
        return Err(Error::DimensionMismatch(
            "inflow nodes and values differ in length".into(),
        ));
    }
    let step = params.step.unwrap_or(0.25 * g.hx().min(g.hy()));
    if !(step > 0.0) || !(params.max_len > 0.0) {
        return Err(Error::Config("transport step and max_len must be positive".into()));
    }
    let mut data: Vec<Option<f64>> = vec![None; g.len()];
    for (&k, &w) in inflow.nodes.iter().zip(&inflow.omega) {
        data[k] = Some(w);
    }
    let solve_node = |k: usize| -> Option<f64> {
        if let Some(w) = data[k] {
            return Some(w);
        }
        let start = g.point(k);
        let t = trace_impl(drift, start, step, params.max_len, -1.0, false);
        if t.terminated != Termination::LeftDomain {
            return None;
        }
        let (x, y) = t.end();
        let wb = boundary_value(&g, &data, x, y)?;
        if wb == 0.0 {
            return Some(0.0);
        }
        Some(wb * (-t.integral()).exp())
    };
    let threads = params.threads.max(1).min(g.len());
    let results: Vec<Option<f64>> = if threads == 1 {
        (0..g.len()).map(solve_node).collect()
    } else {
        let chunk = g.len().div_ceil(threads);
        let mut out = vec![None; g.len()];
        thread::scope(|s| {
            for (c, slot) in out.chunks_mut(chunk).enumerate() {
                let solve_node = &solve_node;
                s.spawn(move || {
                    for (off, v) in slot.iter_mut().enumerate() {
                        *v = solve_node(c * chunk + off);
                    }
                });
            }
        });
        out
    };
    let mut omega = ScalarField::zeros(g);
    let mut uncovered = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Some(v) => omega.values[k] = v,
            None => uncovered.push(k),
        }
    }
    Ok(Transported { omega, uncovered })
}

/// `div(ωU) + ω` at interior nodes (zero on the frame).
pub fn transport_residual(omega: &ScalarField, u: &VectorField) -> Result<ScalarField> {
    omega.grid.same_as(&u.grid)?;
    let flux = VectorField {
        grid: u.grid,
        u: omega.values.iter().zip(&u.u).map(|(w, a)| w * a).collect(),
        v: omega.values.iter().zip(&u.v).map(|(w, a)| w * a).collect(),
    };
    let mut r = divergence(&flux).zip_map(omega, |d, w| d + w);
    for k in u.grid.frame() {
        r.values[k] = 0.0;
    }
    Ok(r)
}
