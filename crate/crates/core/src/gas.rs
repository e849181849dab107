//! Generalized polytropic gas law.
//!
//! Pressure is `p(ρ) = (a²/γ)(ρ^γ − ρ̲^γ)` for `γ ∈ [−1, ∞) \ {0}`, which
//! covers the usual polytropic gases (`γ > 1`), the isothermal case
//! (`γ = 1`) and the Chaplygin gas (`γ = −1`). The optional
//! [`LawVariant::DarkEnergy`] law `p(ρ) = −a²(ρ^γ − ρ̲^γ)` is available for
//! `γ ∈ [−1, 0)` and yields negative pressure with `p′ > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for deciding that a Mach number equals one.
pub const DEFAULT_TOL_SONIC: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawVariant {
    #[default]
    Standard,
    DarkEnergy,
}

/// Constitutive parameters of the gas. Construct through [`GasLaw::new`],
/// which enforces the admissible parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasLaw {
    a: f64,
    gamma: f64,
    rho_floor: f64,
    variant: LawVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowRegime {
    Subsonic,
    Sonic,
    Supersonic,
}

impl FlowRegime {
    /// Classify a Mach-type ratio against one with relative tolerance `tol`.
    pub fn from_ratio(m: f64, tol: f64) -> Self {
        if (m - 1.0).abs() <= tol {
            FlowRegime::Sonic
        } else if m < 1.0 {
            FlowRegime::Subsonic
        } else {
            FlowRegime::Supersonic
        }
    }
}

impl GasLaw {
    pub fn new(a: f64, gamma: f64, rho_floor: f64, variant: LawVariant) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Config(format!("gas.a must be positive, got {a}")));
        }
        if !gamma.is_finite() || gamma < -1.0 || gamma == 0.0 {
            return Err(Error::Config(format!(
                "gas.gamma = {gamma} is outside the admissible set [-1, inf) \\ {{0}}"
            )));
        }
        if !rho_floor.is_finite() || rho_floor < 0.0 {
            return Err(Error::Config(format!(
                "gas.rho_floor must be finite and >= 0, got {rho_floor}"
            )));
        }
        if gamma <= 1.0 && rho_floor <= 0.0 {
            // gamma < 1 needs it for a positive pressure, gamma = 1 needs it
            // to anchor the logarithmic enthalpy.
            return Err(Error::Config(format!(
                "gas.rho_floor must be > 0 when gamma = {gamma} <= 1"
            )));
        }
        if variant == LawVariant::DarkEnergy && gamma >= 0.0 {
            return Err(Error::Config(format!(
                "dark_energy variant requires gamma in [-1, 0), got {gamma}"
            )));
        }
        Ok(Self {
            a,
            gamma,
            rho_floor,
            variant,
        })
    }

    /// Standard polytropic law with `ρ̲ = 0`.
    pub fn polytropic(a: f64, gamma: f64) -> Result<Self> {
        Self::new(a, gamma, 0.0, LawVariant::Standard)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho_floor(&self) -> f64 {
        self.rho_floor
    }

    pub fn variant(&self) -> LawVariant {
        self.variant
    }

    pub fn is_isothermal(&self) -> bool {
        self.gamma == 1.0
    }

    /// Coefficient `κ` in `p′(ρ) = κ ρ^{γ−1}`.
    fn kappa(&self) -> f64 {
        match self.variant {
            LawVariant::Standard => self.a * self.a,
            LawVariant::DarkEnergy => -self.a * self.a * self.gamma,
        }
    }

    fn check_rho(&self, rho: f64) -> Result<()> {
        if !rho.is_finite() {
            return Err(Error::Domain(format!("density {rho} is not finite")));
        }
        let ok = if self.gamma < 1.0 {
            rho > self.rho_floor
        } else {
            rho >= self.rho_floor && rho > 0.0
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "density {rho} not admissible for rho_floor = {} and gamma = {}",
                self.rho_floor, self.gamma
            )))
        }
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        self.check_rho(rho)?;
        let g = self.gamma;
        let diff = rho.powf(g) - self.rho_floor.powf(g);
        Ok(match self.variant {
            LawVariant::Standard => self.a * self.a / g * diff,
            LawVariant::DarkEnergy => -self.a * self.a * diff,
        })
    }

    /// `c² = p′(ρ)`.
    pub fn sound_speed_sq(&self, rho: f64) -> Result<f64> {
        self.check_rho(rho)?;
        let c2 = if self.is_isothermal() {
            self.a * self.a
        } else {
            self.kappa() * rho.powf(self.gamma - 1.0)
        };
        if c2 > 0.0 && c2.is_finite() {
            Ok(c2)
        } else {
            Err(Error::Internal(format!(
                "sound speed squared {c2} not positive at rho = {rho}"
            )))
        }
    }

    /// Specific enthalpy relative to the floor density, `∫_{ρ̲}^{ρ} p′(z)/z dz`.
    pub fn enthalpy(&self, rho: f64) -> Result<f64> {
        self.check_rho(rho)?;
        if self.is_isothermal() {
            return Ok(self.a * self.a * (rho / self.rho_floor).ln());
        }
        let e = self.gamma - 1.0;
        Ok(self.kappa() * (rho.powf(e) - self.rho_floor.powf(e)) / e)
    }

    /// Supremum of the enthalpy over admissible densities (`+∞` when unbounded).
    pub fn enthalpy_sup(&self) -> f64 {
        if self.gamma > 1.0 || self.is_isothermal() {
            f64::INFINITY
        } else {
            let e = self.gamma - 1.0;
            self.kappa() * self.rho_floor.powf(e) / (-e)
        }
    }

    /// Density with the given relative enthalpy (closed-form inverse).
    pub fn enthalpy_inverse(&self, h: f64) -> Result<f64> {
        if !h.is_finite() || h < 0.0 || h >= self.enthalpy_sup() {
            return Err(Error::Range(format!(
                "enthalpy {h} outside the attainable range [0, {})",
                self.enthalpy_sup()
            )));
        }
        if h == 0.0 {
            return Ok(self.rho_floor);
        }
        if self.is_isothermal() {
            return Ok(self.rho_floor * (h / (self.a * self.a)).exp());
        }
        let e = self.gamma - 1.0;
        let base = self.rho_floor.powf(e) + h * e / self.kappa();
        Ok(base.powf(1.0 / e))
    }
}

/// Mach-type ratio `speed / c` with its regime classification.
pub fn mach(speed: f64, c: f64, tol_sonic: f64) -> Result<(f64, FlowRegime)> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("sound speed must be positive, got {c}")));
    }
    if !(speed >= 0.0) {
        return Err(Error::Domain(format!("speed must be >= 0, got {speed}")));
    }
    let m = speed / c;
    Ok((m, FlowRegime::from_ratio(m, tol_sonic)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(a: f64, g: f64, floor: f64) -> GasLaw {
        GasLaw::new(a, g, floor, LawVariant::Standard).unwrap()
    }

    #[test]
    fn pressure_examples() {
        assert_relative_eq!(law(1.0, 2.0, 0.0).pressure(2.0).unwrap(), 2.0);
        assert_relative_eq!(law(1.0, -1.0, 1.0).pressure(2.0).unwrap(), 0.5);
        assert_eq!(law(1.0, 2.0, 0.5).pressure(0.5).unwrap(), 0.0);
    }

    #[test]
    fn sound_speed_examples() {
        assert_eq!(law(3.0, 1.0, 1.0).sound_speed_sq(7.0).unwrap(), 9.0);
        assert_relative_eq!(law(1.0, 2.0, 0.0).sound_speed_sq(2.0).unwrap(), 2.0);
        assert_relative_eq!(law(2.0, -1.0, 1.0).sound_speed_sq(2.0).unwrap(), 1.0);
    }

    #[test]
    fn enthalpy_examples() {
        assert_relative_eq!(law(1.0, 2.0, 0.0).enthalpy(3.0).unwrap(), 3.0);
        assert_eq!(law(1.0, 1.4, 0.7).enthalpy(0.7).unwrap(), 0.0);
        let iso = law(1.0, 1.0, 1.0);
        assert_relative_eq!(iso.enthalpy(std::f64::consts::E).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(law(1.0, 2.0, 0.0).enthalpy_inverse(3.0).unwrap(), 3.0);
        assert_eq!(law(1.0, -0.5, 0.3).enthalpy_inverse(0.0).unwrap(), 0.3);
        assert_relative_eq!(
            iso.enthalpy_inverse(1.0).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-15
        );
    }

    #[test]
    fn enthalpy_inverse_range() {
        let chaplygin = law(1.0, -1.0, 1.0);
        // sup is a^2 rho_floor^{-2} / 2 = 0.5
        assert_relative_eq!(chaplygin.enthalpy_sup(), 0.5);
        assert!(matches!(chaplygin.enthalpy_inverse(0.6), Err(Error::Range(_))));
        assert!(matches!(chaplygin.enthalpy_inverse(-1.0), Err(Error::Range(_))));
    }

    #[test]
    fn admissible_set() {
        assert!(matches!(GasLaw::polytropic(1.0, 0.0), Err(Error::Config(_))));
        assert!(GasLaw::polytropic(1.0, -1.5).is_err());
        assert!(GasLaw::polytropic(-1.0, 2.0).is_err());
        assert!(GasLaw::polytropic(1.0, 0.5).is_err());
        assert!(GasLaw::new(1.0, 0.5, 1.0, LawVariant::DarkEnergy).is_err());
        assert!(GasLaw::new(1.0, -0.5, 1.0, LawVariant::DarkEnergy).is_ok());
    }

    #[test]
    fn floor_density_rules() {
        assert!(law(1.0, 2.0, 1.0).pressure(1.0).is_ok());
        assert!(law(1.0, 0.5, 1.0).pressure(1.0).is_err());
        assert!(law(1.0, 2.0, 1.0).pressure(0.5).is_err());
        assert!(law(1.0, 2.0, 1.0).pressure(f64::NAN).is_err());
    }

    #[test]
    fn dark_energy_law() {
        let de = GasLaw::new(1.0, -1.0, 1.0, LawVariant::DarkEnergy).unwrap();
        // p = -(rho^-1 - 1) < 0 for rho > 1, c^2 = rho^-2 > 0
        assert_relative_eq!(de.pressure(2.0).unwrap(), 0.5);
        assert_relative_eq!(de.sound_speed_sq(2.0).unwrap(), 0.25);
        let h = de.enthalpy(2.0).unwrap();
        assert_relative_eq!(de.enthalpy_inverse(h).unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn closure_identity_for_zero_floor() {
        for g in [1.4, 2.0, 3.0] {
            let l = law(1.3, g, 0.0);
            for rho in [0.1, 1.0, 4.5] {
                assert_relative_eq!(
                    (g - 1.0) * l.enthalpy(rho).unwrap(),
                    l.sound_speed_sq(rho).unwrap(),
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn mach_examples() {
        assert_eq!(mach(0.0, 1.0, DEFAULT_TOL_SONIC).unwrap(), (0.0, FlowRegime::Subsonic));
        assert_eq!(
            mach(2.0, 1.0, DEFAULT_TOL_SONIC).unwrap(),
            (2.0, FlowRegime::Supersonic)
        );
        assert_eq!(mach(1.0, 1.0, DEFAULT_TOL_SONIC).unwrap(), (1.0, FlowRegime::Sonic));
        assert!(mach(1.0, 0.0, DEFAULT_TOL_SONIC).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const GAMMAS: [f64; 7] = [-1.0, -0.5, 0.5, 1.0, 1.4, 2.0, 3.0];

        fn any_law() -> impl Strategy<Value = GasLaw> {
            (0.2f64..3.0, 0usize..GAMMAS.len(), 0.1f64..2.0).prop_map(|(a, k, floor)| law(a, GAMMAS[k], floor))
        }

        proptest! {
            #[test]
            fn pressure_is_increasing(l in any_law(), t1 in 0.01f64..5.0, dt in 0.01f64..5.0) {
                let r1 = l.rho_floor() * (1.0 + t1);
                let r2 = r1 * (1.0 + dt);
                prop_assert!(l.pressure(r2).unwrap() > l.pressure(r1).unwrap());
            }

            #[test]
            fn sound_speed_matches_pressure_slope(l in any_law(), t in 0.05f64..5.0) {
                let rho = l.rho_floor() * (1.0 + t);
                let d = 1e-5 * rho;
                let fd = (l.pressure(rho + d).unwrap() - l.pressure(rho - d).unwrap()) / (2.0 * d);
                let c2 = l.sound_speed_sq(rho).unwrap();
                prop_assert!(((fd - c2) / c2).abs() <= 1e-6);
            }

            #[test]
            fn enthalpy_round_trip(l in any_law(), t in 0.01f64..5.0) {
                let rho = l.rho_floor() * (1.0 + t);
                let back = l.enthalpy_inverse(l.enthalpy(rho).unwrap()).unwrap();
                prop_assert!(((back - rho) / rho).abs() <= 1e-10);
            }
        }
    }
}
