//! Characteristic eigenvalues, mixed-type classification and the
//! interior-maximum audit of the pseudo-Mach number.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{gradient, hessian, ScalarField, VectorField};
use crate::gas::FlowRegime;

/// Relative size below which an eigenvalue denominator counts as zero.
const DEGENERATE_REL: f64 = 1e-14;

/// The outer eigenvalue pair `λ₁, λ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenPair {
    /// Sorted ascending.
    Real(f64, f64),
    /// `re ± i·im` with `im > 0`.
    Complex { re: f64, im: f64 },
    /// The denominator vanished.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenTriple {
    pub outer: EigenPair,
    /// `λ₂`; `None` when its denominator vanishes.
    pub middle: Option<f64>,
    pub degenerate: bool,
}

impl EigenTriple {
    /// All three values sorted ascending, if they are real and defined.
    pub fn sorted(&self) -> Option<[f64; 3]> {
        match (self.outer, self.middle) {
            (EigenPair::Real(a, b), Some(m)) => {
                let mut v = [a, m, b];
                v.sort_by(f64::total_cmp);
                Some(v)
            }
            _ => None,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.outer, EigenPair::Complex { .. })
    }
}

/// Eigenvalues of the time-dependent system in direction `alpha`.
pub fn eigen_time_dependent(u: f64, v: f64, c: f64, alpha: (f64, f64)) -> Result<EigenTriple> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("sound speed must be positive, got {c}")));
    }
    let norm = alpha.0.hypot(alpha.1);
    if !((norm - 1.0).abs() <= 1e-12) {
        return Err(Error::Domain(format!(
            "direction must be a unit vector, |alpha| = {norm}"
        )));
    }
    let s = u * alpha.0 + v * alpha.1;
    Ok(EigenTriple {
        outer: EigenPair::Real(s - c, s + c),
        middle: Some(s),
        degenerate: false,
    })
}

/// Eigenvalues of the steady system, `λ₁,₃ = (uv ± c√(u²+v²−c²))/(c²−u²)`, `λ₂ = v/u`.
pub fn eigen_steady(u: f64, v: f64, c: f64) -> EigenTriple {
    outer_and_middle(u, v, c)
}

/// Self-similar eigenvalues in the pseudo-velocity `U`. With `L = |U|/c`
/// the radicand `c²(L²−1)` equals `|U|² − c²`, so the algebra is the steady one.
pub fn eigen_self_similar(u1: f64, u2: f64, c: f64) -> EigenTriple {
    outer_and_middle(u1, u2, c)
}

fn outer_and_middle(u: f64, v: f64, c: f64) -> EigenTriple {
    let c2 = c * c;
    let den = c2 - u * u;
    let den_zero = den.abs() <= DEGENERATE_REL * c2;
    let u_zero = u.abs() <= DEGENERATE_REL * c;
    let radicand = u * u + v * v - c2;
    let outer = if den_zero {
        EigenPair::Undefined
    } else if radicand >= 0.0 {
        let r = c * radicand.sqrt();
        let (a, b) = ((u * v - r) / den, (u * v + r) / den);
        EigenPair::Real(a.min(b), a.max(b))
    } else {
        EigenPair::Complex {
            re: u * v / den,
            im: c * (-radicand).sqrt() / den.abs(),
        }
    };
    EigenTriple {
        outer,
        middle: (!u_zero).then(|| v / u),
        degenerate: den_zero || u_zero,
    }
}

/// Discriminant `B² − 4AC` of the normalized principal part together with
/// the closed form `4(L² − 1)` it must equal.
pub fn discriminant(grad_phi: (f64, f64), c2: f64) -> Result<(f64, f64)> {
    if !(c2 > 0.0) || !c2.is_finite() {
        return Err(Error::Domain(format!("c^2 must be positive, got {c2}")));
    }
    let (p, q) = (grad_phi.0 / c2.sqrt(), grad_phi.1 / c2.sqrt());
    let a = (-p).mul_add(p, 1.0);
    let b = -2.0 * p * q;
    let c = (-q).mul_add(q, 1.0);
    let disc = b.mul_add(b, -4.0 * a * c);
    let l2 = (grad_phi.0 * grad_phi.0 + grad_phi.1 * grad_phi.1) / c2;
    Ok((disc, 4.0 * (l2 - 1.0)))
}

/// `L² = |U|²/c²` nodewise. Nodes with non-positive or non-finite `c²` get NaN.
pub fn pseudo_mach_field(u: &VectorField, c2: &ScalarField) -> Result<ScalarField> {
    u.grid.same_as(&c2.grid)?;
    let values = (0..u.grid.len())
        .map(|k| {
            let c = c2.values[k];
            if c > 0.0 && c.is_finite() {
                (u.u[k] * u.u[k] + u.v[k] * u.v[k]) / c
            } else {
                f64::NAN
            }
        })
        .collect();
    ScalarField::from_values(u.grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    Pass,
    InteriorMaxViolation,
    IdenticallyZero,
}

#[derive(Debug, Clone, Serialize)]
pub struct Audit {
    pub verdict: AuditVerdict,
    /// Max of `L² + b` over nodes at least two rings inside the frame.
    pub m_int: f64,
    /// Max over the two outer rings.
    pub m_bnd: f64,
    /// Node `(i, j)` of the interior maximum when the verdict is a violation.
    pub argmax: Option<(usize, usize)>,
    /// `max |Db|` and `max |D²b|` of the optional weight.
    pub b_grad_max: Option<f64>,
    pub b_hess_max: Option<f64>,
}

/// Empirical maximum-principle check on `L² + b`.
///
/// Flagged (NaN) nodes are skipped. A constant field counts as `Pass`.
pub fn ellipticity_audit(l2: &ScalarField, b: Option<&ScalarField>, tol: f64) -> Result<Audit> {
    let g = l2.grid;
    let (mut b_grad_max, mut b_hess_max) = (None, None);
    if let Some(b) = b {
        g.same_as(&b.grid)?;
        let db = gradient(b);
        let h = hessian(b);
        b_grad_max = Some((0..g.len()).map(|k| db.u[k].hypot(db.v[k])).fold(0.0, f64::max));
        b_hess_max = Some(
            (0..g.len())
                .map(|k| {
                    let (p, q, r) = (h.f11.values[k], h.f12.values[k], h.f22.values[k]);
                    (p * p + 2.0 * q * q + r * r).sqrt()
                })
                .fold(0.0, f64::max),
        );
    }
    let weight = |k: usize| b.map_or(0.0, |b| b.values[k]);
    let (mut m_int, mut m_bnd) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut arg = None;
    let mut max_l2 = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let v = l2.values[k];
            if !v.is_finite() {
                continue;
            }
            max_l2 = max_l2.max(v.abs());
            let s = v + weight(k);
            if g.ring(i, j) >= 2 {
                if s > m_int {
                    m_int = s;
                    arg = Some((i, j));
                }
            } else {
                m_bnd = m_bnd.max(s);
            }
        }
    }
    let verdict = if max_l2 <= tol {
        AuditVerdict::IdenticallyZero
    } else if m_int <= m_bnd + tol {
        AuditVerdict::Pass
    } else {
        AuditVerdict::InteriorMaxViolation
    };
    Ok(Audit {
        verdict,
        m_int,
        m_bnd,
        argmax: (verdict == AuditVerdict::InteriorMaxViolation).then_some(arg).flatten(),
        b_grad_max,
        b_hess_max,
    })
}

#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub regime_map: Vec<Option<FlowRegime>>,
    pub l2: ScalarField,
    pub discriminant: ScalarField,
    pub max_l2: f64,
    pub max_l2_node: (usize, usize),
    pub counts: RegimeCounts,
    /// Nodes with non-positive or non-finite `c²`; excluded from statistics.
    pub flagged: usize,
    pub audit: Audit,
}

/// The scalar part of a [`RegimeReport`], for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub max_l2: f64,
    pub max_l2_node: (usize, usize),
    pub counts: RegimeCounts,
    pub flagged: usize,
    pub audit: Audit,
}

impl RegimeReport {
    pub fn summary(&self) -> RegimeSummary {
        RegimeSummary {
            max_l2: self.max_l2,
            max_l2_node: self.max_l2_node,
            counts: self.counts,
            flagged: self.flagged,
            audit: self.audit.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RegimeCounts {
    pub subsonic: usize,
    pub sonic: usize,
    pub supersonic: usize,
}

/// Classify every node of a pseudo-velocity field.
pub fn classify(u: &VectorField, c2: &ScalarField, tol_sonic: f64) -> Result<RegimeReport> {
    let l2 = pseudo_mach_field(u, c2)?;
    let g = l2.grid;
    let mut regime_map = Vec::with_capacity(g.len());
    let mut disc = Vec::with_capacity(g.len());
    let mut counts = RegimeCounts::default();
    let (mut max_l2, mut max_k, mut flagged) = (f64::NEG_INFINITY, 0, 0);
    for k in 0..g.len() {
        let v = l2.values[k];
        if !v.is_finite() {
            flagged += 1;
            regime_map.push(None);
            disc.push(f64::NAN);
            continue;
        }
        let r = FlowRegime::from_ratio(v.sqrt(), tol_sonic);
        match r {
            FlowRegime::Subsonic => counts.subsonic += 1,
            FlowRegime::Sonic => counts.sonic += 1,
            FlowRegime::Supersonic => counts.supersonic += 1,
        }
        regime_map.push(Some(r));
        disc.push(discriminant((u.u[k], u.v[k]), c2.values[k])?.0);
        if v > max_l2 {
            max_l2 = v;
            max_k = k;
        }
    }
    let audit = ellipticity_audit(&l2, None, tol_sonic.max(1e-12))?;
    Ok(RegimeReport {
        regime_map,
        discriminant: ScalarField::from_values(g, disc)?,
        l2,
        max_l2,
        max_l2_node: g.ij(max_k),
        counts,
        flagged,
        audit,
    })
}
