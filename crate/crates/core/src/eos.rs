//! Singular pressure laws and their truncation/renormalization operators.

use crate::math::{ln, ln_1p, powf, sqrt};
use crate::quad::Adaptive;
use crate::{Error, Result};

/// Smallest density used as a quadrature bound where the integrand has a
/// `1/ρ` factor. Below it the integrand is replaced by its leading term.
pub const RHO_FLOOR: f64 = 1e-12;

/// Concrete pressure families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureFamily {
    /// `p = Θ a ρ / (ρ̄ − ρ)^γ`, `γ ≥ 1`.
    Rational { a: f64, gamma: f64 },
    /// `p = Θ a ρ (−ln(1 − ρ/ρ̄))`.
    Log { a: f64 },
}

/// Barotropic pressure law singular at the maximal density `rho_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    /// Maximal density.
    pub rho_bar: f64,
    /// Temperature factor multiplying the whole law.
    pub theta: f64,
    pub family: PressureFamily,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(alloc::format!("{name} must be positive and finite, got {v}")))
    }
}

impl PressureLaw {
    pub fn new(rho_bar: f64, theta: f64, family: PressureFamily) -> Result<Self> {
        positive("rho_bar", rho_bar)?;
        positive("theta", theta)?;
        match family {
            PressureFamily::Rational { a, gamma } => {
                positive("a", a)?;
                if !(gamma >= 1.0 && gamma.is_finite()) {
                    return Err(Error::InvalidInput(alloc::format!("gamma must be >= 1, got {gamma}")));
                }
            }
            PressureFamily::Log { a } => positive("a", a)?,
        }
        Ok(Self { rho_bar, theta, family })
    }

    pub fn rational(rho_bar: f64, a: f64, gamma: f64, theta: f64) -> Result<Self> {
        Self::new(rho_bar, theta, PressureFamily::Rational { a, gamma })
    }

    pub fn log(rho_bar: f64, a: f64, theta: f64) -> Result<Self> {
        Self::new(rho_bar, theta, PressureFamily::Log { a })
    }

    /// `ρ/(1 − ρ)` with `ρ̄ = 1`.
    pub fn hard_sphere() -> Self {
        Self {
            rho_bar: 1.0,
            theta: 1.0,
            family: PressureFamily::Rational { a: 1.0, gamma: 1.0 },
        }
    }

    fn check(&self, rho: f64) -> Result<()> {
        if rho >= 0.0 && rho < self.rho_bar {
            Ok(())
        } else {
            Err(Error::Domain {
                quantity: "density",
                value: rho,
                lower: 0.0,
                upper: self.rho_bar,
            })
        }
    }

    /// Pressure at `rho ∈ [0, ρ̄)`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(self.pressure_raw(rho))
    }

    /// `p'(rho)` for `rho ∈ [0, ρ̄)`.
    pub fn dpressure(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(self.dpressure_raw(rho))
    }

    pub(crate) fn pressure_raw(&self, rho: f64) -> f64 {
        match self.family {
            PressureFamily::Rational { a, gamma } => {
                self.theta * a * rho / powf(self.rho_bar - rho, gamma)
            }
            PressureFamily::Log { a } => self.theta * a * rho * -ln_1p(-rho / self.rho_bar),
        }
    }

    pub(crate) fn dpressure_raw(&self, rho: f64) -> f64 {
        match self.family {
            PressureFamily::Rational { a, gamma } => {
                let gap = self.rho_bar - rho;
                self.theta * a * (gap + gamma * rho) / powf(gap, gamma + 1.0)
            }
            PressureFamily::Log { a } => {
                let x = rho / self.rho_bar;
                self.theta * a * (-ln_1p(-x) + x / (1.0 - x))
            }
        }
    }

    /// `f(rho) = ∫_{rho_ref}^{rho} s p'(s) ds`, the potential whose gradient
    /// is `ρ ∇p`.
    pub fn primitive(&self, rho: f64, rho_ref: f64) -> Result<f64> {
        for v in [rho, rho_ref] {
            if !(v > 0.0 && v < self.rho_bar) {
                return Err(Error::Domain {
                    quantity: "density",
                    value: v,
                    lower: 0.0,
                    upper: self.rho_bar,
                });
            }
        }
        let q = Adaptive {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_intervals: 4000,
        };
        Ok(q.integrate(|s| s * self.dpressure_raw(s), rho_ref, rho, &[])?.value)
    }
}

/// Cut-off `T`: clamps a density into `[0, ρ̄]`.
pub fn cutoff(rho_bar: f64, rho: f64) -> f64 {
    rho.clamp(0.0, rho_bar)
}

/// A pressure law equipped with truncation level, artificial viscosity and
/// reference mean density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedEos {
    pub law: PressureLaw,
    /// Truncation level `R`; the law is continued affinely from `ρ̄ − 1/R`.
    pub truncation: f64,
    /// Artificial viscosity `δ`.
    pub delta: f64,
    /// Reference mean density `ρ_M`.
    pub rho_m: f64,
}

impl RegularizedEos {
    pub fn new(law: PressureLaw, truncation: f64, delta: f64, rho_m: f64) -> Result<Self> {
        positive("delta", delta)?;
        if !(truncation * law.rho_bar > 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "truncation level must exceed 1/rho_bar = {}, got {truncation}",
                1.0 / law.rho_bar
            )));
        }
        if !(rho_m > 0.0 && law.rho_bar - 1.0 / truncation > rho_m) {
            return Err(Error::InvalidInput(alloc::format!(
                "need 0 < rho_M < rho_bar - 1/R = {}, got rho_M = {rho_m}",
                law.rho_bar - 1.0 / truncation
            )));
        }
        Ok(Self { law, truncation, delta, rho_m })
    }

    /// Same truncation and mean density with a different `δ`.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.law, self.truncation, delta, self.rho_m)
    }

    /// Density where the affine continuation starts.
    pub fn knot(&self) -> f64 {
        self.law.rho_bar - 1.0 / self.truncation
    }

    pub fn cutoff(&self, rho: f64) -> f64 {
        cutoff(self.law.rho_bar, rho)
    }

    fn check_nonneg(&self, rho: f64) -> Result<()> {
        if rho >= 0.0 && rho.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain {
                quantity: "density",
                value: rho,
                lower: 0.0,
                upper: f64::INFINITY,
            })
        }
    }

    /// Truncated pressure `p_R`.
    pub fn truncated_pressure(&self, rho: f64) -> Result<f64> {
        self.check_nonneg(rho)?;
        Ok(self.pr(rho))
    }

    /// Slope of `p_R` (right derivative at the knot).
    pub fn truncated_dpressure(&self, rho: f64) -> Result<f64> {
        self.check_nonneg(rho)?;
        Ok(self.dpr(rho))
    }

    fn pr(&self, rho: f64) -> f64 {
        let k = self.knot();
        if rho <= k {
            self.law.pressure_raw(rho)
        } else {
            self.law.dpressure_raw(k) * (rho - k) + self.law.pressure_raw(k)
        }
    }

    fn dpr(&self, rho: f64) -> f64 {
        self.law.dpressure_raw(rho.min(self.knot()))
    }

    /// `p_R(ρ) + √δ ρ` and its slope, continued affinely below zero so that
    /// iterates that undershoot by round-off stay evaluable.
    pub fn solver_pressure(&self, rho: f64) -> (f64, f64) {
        let sd = sqrt(self.delta);
        if rho >= 0.0 {
            (self.pr(rho) + sd * rho, self.dpr(rho) + sd)
        } else {
            let s = self.dpr(0.0) + sd;
            (self.pr(0.0) + s * rho, s)
        }
    }

    fn quad(&self) -> Adaptive {
        Adaptive {
            abs_tol: 1e-10,
            // large R makes G' of order R² near the knot
            rel_tol: 1e-15,
            max_intervals: 2000,
        }
    }

    fn g_prime_integrand(&self, y: f64) -> f64 {
        (self.dpr(y) + sqrt(self.delta)) / self.cutoff(y)
    }

    /// `G'_{R,δ}(ρ) = ∫_{ρ_M}^{ρ} (p_R'(y) + √δ)/T(y) dy`.
    pub fn g_prime(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain {
                quantity: "density",
                value: rho,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        self.g_prime_clipped(rho)
    }

    fn g_prime_clipped(&self, rho: f64) -> Result<f64> {
        let breaks = [self.knot(), self.law.rho_bar];
        let lower = rho.max(RHO_FLOOR);
        let body = self
            .quad()
            .integrate(|y| self.g_prime_integrand(y), self.rho_m, lower, &breaks)?
            .value;
        if rho >= RHO_FLOOR {
            return Ok(body);
        }
        // leading term of the integrand near zero: (p_R'(0) + √δ)/y
        let tail = (self.dpr(0.0) + sqrt(self.delta)) * ln(RHO_FLOOR / rho.max(f64::MIN_POSITIVE));
        Ok(body - tail)
    }

    /// `H(ρ) = −p_R(ρ_M) − √δ ρ_M + ∫_{ρ_M}^{ρ} G'(y) T'(y) dy` for `ρ ≥ 0`.
    pub fn h_func(&self, rho: f64) -> Result<f64> {
        self.check_nonneg(rho)?;
        let top = rho.min(self.law.rho_bar);
        let mut failure = None;
        let outer = self.quad().integrate(
            |y| match self.g_prime_clipped(y) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            self.rho_m,
            top,
            &[self.knot()],
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(-self.pr(self.rho_m) - sqrt(self.delta) * self.rho_m + outer?.value)
    }

    /// `G'(ρ)T(ρ) − H(ρ) − p_R(ρ) − √δ ρ`, which vanishes identically.
    pub fn renormalization_residual(&self, rho: f64) -> Result<f64> {
        self.check_nonneg(rho)?;
        let gt = if rho == 0.0 {
            0.0
        } else {
            self.g_prime_clipped(rho)? * self.cutoff(rho)
        };
        Ok(gt - self.h_func(rho)? - self.pr(rho) - sqrt(self.delta) * rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> RegularizedEos {
        RegularizedEos::new(PressureLaw::hard_sphere(), 10.0, 0.01, 0.4).unwrap()
    }

    #[test]
    fn hard_sphere_values() {
        let law = PressureLaw::hard_sphere();
        assert_eq!(law.pressure(0.0).unwrap(), 0.0);
        assert_eq!(law.pressure(0.5).unwrap(), 1.0);
        assert!(matches!(law.pressure(1.0), Err(Error::Domain { .. })));
        assert!(law.pressure(-0.1).is_err());
    }

    #[test]
    fn cutoff_clamps() {
        assert_eq!(cutoff(1.0, -0.3), 0.0);
        assert_eq!(cutoff(1.0, 0.4), 0.4);
        assert_eq!(cutoff(1.0, 2.0), 1.0);
    }

    #[test]
    fn truncation_hand_values() {
        let r = reg();
        assert_eq!(r.truncated_pressure(0.5).unwrap(), 1.0);
        assert!((r.truncated_pressure(0.95).unwrap() - 14.0).abs() < 1e-12);
        assert!((r.truncated_pressure(0.9).unwrap() - 9.0).abs() < 1e-12);
        assert!(r.truncated_pressure(-1e-3).is_err());
    }

    #[test]
    fn g_prime_sign_and_zero() {
        let r = reg();
        assert_eq!(r.g_prime(0.4).unwrap(), 0.0);
        assert!(r.g_prime(0.4001).unwrap() > 0.0);
        assert!(r.g_prime(0.3).unwrap() < 0.0);
        assert!(r.g_prime(0.0).is_err());
    }

    #[test]
    fn renormalization_identity_pointwise() {
        let r = reg();
        for rho in [0.0, 1e-14, 0.01, 0.4, 0.7, 0.9, 0.95, 1.0, 1.7] {
            let res = r.renormalization_residual(rho).unwrap();
            assert!(res.abs() < 1e-8, "rho={rho} residual={res}");
        }
    }

    #[test]
    fn primitive_against_closed_form() {
        // for ρ/(1−ρ): s p'(s) = s/(1−s)², antiderivative 1/(1−s) + ln(1−s)
        let law = PressureLaw::hard_sphere();
        let anti = |s: f64| 1.0 / (1.0 - s) + ln(1.0 - s);
        let v = law.primitive(0.6, 0.5).unwrap();
        assert!((v - (anti(0.6) - anti(0.5))).abs() < 1e-13);
        assert!((v - 0.276_856_448_685_790_3).abs() < 1e-12);
        assert_eq!(law.primitive(0.5, 0.5).unwrap(), 0.0);
        assert!(law.primitive(0.0, 0.5).is_err());
    }

    #[test]
    fn reg_validation() {
        let law = PressureLaw::hard_sphere();
        assert!(RegularizedEos::new(law, 10.0, 0.01, 0.95).is_err());
        assert!(RegularizedEos::new(law, 0.5, 0.01, 0.4).is_err());
        assert!(RegularizedEos::new(law, 10.0, 0.0, 0.4).is_err());
    }

    #[test]
    fn solver_pressure_continuous_at_zero() {
        let r = reg();
        let (a, _) = r.solver_pressure(0.0);
        let (b, _) = r.solver_pressure(-1e-12);
        assert!((a - b).abs() < 1e-10);
    }
}
