//! Shared physical model: medium parameters, incidence, emergent patterns
//! and the elementary analytic quantities the solvers consume.
//!
//! Lengths are optical depths throughout; the medium is identified
//! entirely by its single-scattering albedo `omega`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{AlbedoError, Result};

/// Largest accepted single-scattering albedo. `omega = 1` collapses the
/// free-mode roots onto the origin.
pub const MAX_OMEGA: f64 = 1.0 - 1e-9;

/// Single-scattering albedo together with the free-mode constant
/// `s_plus = sqrt(1 - omega^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    omega: f64,
    s_plus: f64,
}

impl MediumParams {
    pub fn new(omega: f64) -> Result<Self> {
        if !(0.0..=MAX_OMEGA).contains(&omega) {
            return Err(AlbedoError::domain(format!(
                "single-scattering albedo must lie in [0, 1), got {omega}"
            )));
        }
        // (1 - w)(1 + w) keeps full relative precision as w -> 1.
        let s_plus = ((1.0 - omega) * (1.0 + omega)).sqrt();
        Ok(MediumParams { omega, s_plus })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn s_plus(&self) -> f64 {
        self.s_plus
    }
}

/// Direction of the incident collimated beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidenceSpec {
    theta0: f64,
    mu0: f64,
}

impl IncidenceSpec {
    /// `theta0` in radians, strictly inside `(-pi/2, pi/2)`.
    pub fn new(theta0: f64) -> Result<Self> {
        if !theta0.is_finite() || theta0.abs() >= PI / 2.0 {
            return Err(AlbedoError::domain(format!(
                "incidence angle must lie in (-pi/2, pi/2), got {theta0} rad"
            )));
        }
        let mu0 = theta0.cos();
        if mu0 <= 0.0 {
            return Err(AlbedoError::domain("incidence cosine is not positive"));
        }
        Ok(IncidenceSpec { theta0, mu0 })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }
}

/// Which solver produced a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    WienerHopf,
    DiscreteOrdinates,
    MonteCarlo,
}

/// Emergent diffuse flux per unit angle at the boundary, sampled at
/// backward directions `pi/2 < |theta| < pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlbedoPattern {
    pub method: Method,
    /// Radians.
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
}

impl AlbedoPattern {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.angles.iter().copied().zip(self.values.iter().copied())
    }
}

/// Roots `(s_minus, s_plus)` of the kernel numerator, the decay constants
/// of the source-free modes.
pub fn free_mode_roots(params: &MediumParams) -> (f64, f64) {
    (-params.s_plus(), params.s_plus())
}

/// Checked variant taking a raw albedo.
pub fn free_mode_roots_for(omega: f64) -> Result<(f64, f64)> {
    MediumParams::new(omega).map(|p| free_mode_roots(&p))
}

/// `I(s) = int_{-pi}^{pi} dtheta / (1 + s cos theta) = 2 pi / sqrt(1 - s^2)`
/// on the real branch `|s| < 1`.
pub fn resolvent_integral(s: f64) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return Err(AlbedoError::domain(format!(
            "resolvent integral needs |s| < 1, got {s}"
        )));
    }
    Ok(2.0 * PI / ((1.0 - s) * (1.0 + s)).sqrt())
}

/// `1 - omega / sqrt(1 - lambda^2)`; vanishes at the free-mode roots.
pub fn dispersion_residual(lambda: f64, params: &MediumParams) -> Result<f64> {
    if !(lambda.abs() < 1.0) {
        return Err(AlbedoError::domain(format!(
            "dispersion relation needs |lambda| < 1, got {lambda}"
        )));
    }
    Ok(1.0 - params.omega() / ((1.0 - lambda) * (1.0 + lambda)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trapezoid_periodic(n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = 2.0 * PI / n as f64;
        (0..n).map(|j| f(-PI + j as f64 * h)).sum::<f64>() * h
    }

    #[test]
    fn roots_at_textbook_albedos() {
        let (m, p) = free_mode_roots_for(0.6).unwrap();
        assert_relative_eq!(p, 0.8, epsilon = 1e-15);
        assert_eq!(m, -p);
        assert_eq!(free_mode_roots_for(0.0).unwrap(), (-1.0, 1.0));
        // mpmath, 30 digits
        let (_, p) = free_mode_roots_for(0.99).unwrap();
        assert_relative_eq!(p, 0.141_067_359_796_658_84, max_relative = 1e-14);
    }

    #[test]
    fn albedo_out_of_range_rejected() {
        for bad in [-0.1, 1.0, 1.5, f64::NAN] {
            assert!(matches!(
                MediumParams::new(bad),
                Err(AlbedoError::Domain(_))
            ));
        }
        assert!(MediumParams::new(MAX_OMEGA).is_ok());
    }

    #[test]
    fn incidence_range() {
        assert!(IncidenceSpec::new(PI / 2.0).is_err());
        assert!(IncidenceSpec::new(-PI / 2.0).is_err());
        let inc = IncidenceSpec::from_degrees(45.0).unwrap();
        assert_relative_eq!(inc.mu0(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(IncidenceSpec::new(0.0).unwrap().mu0(), 1.0);
    }

    #[test]
    fn resolvent_examples() {
        assert_relative_eq!(resolvent_integral(0.0).unwrap(), 2.0 * PI);
        // mpmath quadrature of the defining integral
        assert_relative_eq!(
            resolvent_integral(0.6).unwrap(),
            7.853_981_633_974_483,
            max_relative = 1e-14
        );
        assert_eq!(
            resolvent_integral(0.3).unwrap(),
            resolvent_integral(-0.3).unwrap()
        );
        assert!(resolvent_integral(1.0).is_err());
        assert!(resolvent_integral(-1.2).is_err());
    }

    #[test]
    fn dispersion_examples() {
        let p = MediumParams::new(0.6).unwrap();
        assert!(dispersion_residual(0.8, &p).unwrap().abs() < 1e-15);
        assert_relative_eq!(dispersion_residual(0.0, &p).unwrap(), 0.4, epsilon = 1e-15);
        assert_relative_eq!(
            dispersion_residual(0.5, &p).unwrap(),
            0.307_179_676_972_449_1,
            epsilon = 1e-15
        );
        assert!(dispersion_residual(1.0, &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn roots_zero_the_dispersion_relation(omega in 0.0f64..0.999) {
            let p = MediumParams::new(omega).unwrap();
            let (sm, sp) = free_mode_roots(&p);
            prop_assert!(dispersion_residual(sp, &p).unwrap().abs() < 1e-12);
            prop_assert!(dispersion_residual(sm, &p).unwrap().abs() < 1e-12);
            prop_assert!((sp * sp + omega * omega - 1.0).abs() < 4.0 * f64::EPSILON);
        }

        #[test]
        fn resolvent_matches_trapezoid(s in -0.95f64..0.95) {
            let brute = trapezoid_periodic(10_000, |t| 1.0 / (1.0 + s * t.cos()));
            let closed = resolvent_integral(s).unwrap();
            prop_assert!(((brute - closed) / closed).abs() < 1e-8);
        }

        // (w/pi) int_{-pi/2}^{pi/2} dtheta / (1 - l^2 mu^2) == w / sqrt(1 - l^2)
        #[test]
        fn half_range_dispersion_integral(lambda in -0.95f64..0.95, omega in 0.0f64..0.99) {
            let n = 20_000;
            let h = PI / n as f64;
            let sum: f64 = (0..n)
                .map(|j| {
                    let t = -PI / 2.0 + (j as f64 + 0.5) * h;
                    let mu = t.cos();
                    1.0 / (1.0 - lambda * lambda * mu * mu)
                })
                .sum::<f64>() * h;
            let lhs = omega / PI * sum;
            let rhs = omega / (1.0 - lambda * lambda).sqrt();
            prop_assert!((lhs - rhs).abs() < 1e-8);
        }
    }
}
