//! Analytic solution of the albedo problem by Wiener-Hopf factorization.
//!
//! The kernel `kappa(s)` splits as `kappa_plus(s) / kappa_minus(s)`. Both
//! factors are evaluated on the real axis through the branch-cut integral
//!
//! ```text
//! ln kappa_minus(s) = (1/pi) int_1^inf atan(omega / sqrt(z^2 - 1)) dz / (z + s)
//! ```
//!
//! rewritten with `tan(t) = omega / sqrt(z^2 - 1)` as an integral over
//! `t in (0, pi/2)` with integrand `omega^2 t cot(t) csc^2(t) / (z (z + s))`,
//! `z = sqrt(1 + omega^2 cot^2 t)`. The integrand stays bounded at both
//! ends but develops boundary layers near `t = 0` (width `~ omega / s`) and
//! near `t = pi/2` (width `~ sqrt(1 + s) / omega`), so the rule is a
//! composite Gauss-Legendre net graded geometrically toward both endpoints.
//!
//! The factors tend to 1 (not 0) as `|s| -> inf`; the exponent is what
//! vanishes.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{AlbedoError, Result};
use crate::quadrature::{legendre_rule_unchecked, AngularGrid};
use crate::transport::{AlbedoPattern, IncidenceSpec, MediumParams, Method};

/// Quadrature layout for the branch-cut integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaQuadrature {
    /// Geometric panels on each half of `(0, pi/2)`.
    pub panels_per_side: usize,
    /// Gauss-Legendre order on each panel.
    pub order: usize,
    /// Ratio between consecutive panel widths, toward the endpoint.
    pub grading: f64,
}

impl Default for KappaQuadrature {
    fn default() -> Self {
        KappaQuadrature {
            panels_per_side: 24,
            order: 10,
            grading: 0.3,
        }
    }
}

impl KappaQuadrature {
    pub fn node_count(&self) -> usize {
        2 * self.panels_per_side * self.order
    }

    fn refined(&self) -> Self {
        KappaQuadrature {
            order: 2 * self.order,
            ..*self
        }
    }
}

/// `kappa_plus` / `kappa_minus` for one medium, with the branch-cut nodes
/// precomputed.
#[derive(Debug, Clone)]
pub struct KappaFactorization {
    params: MediumParams,
    quadrature: KappaQuadrature,
    tolerance: f64,
    // (z_i, a_i) so that the exponent is (1/pi) sum a_i / (s + z_i)
    nodes: Vec<(f64, f64)>,
    // Contribution of (0, t_min), where the integrand is ~1.
    tail: f64,
}

pub const DEFAULT_KAPPA_TOLERANCE: f64 = 1e-10;

impl KappaFactorization {
    pub fn new(params: MediumParams) -> Self {
        Self::with_quadrature(params, KappaQuadrature::default())
    }

    pub fn with_quadrature(params: MediumParams, quadrature: KappaQuadrature) -> Self {
        let omega = params.omega();
        let rule = legendre_rule_unchecked(quadrature.order);
        let mut nodes = Vec::with_capacity(quadrature.node_count());
        let mut push_panel = |lo: f64, hi: f64| {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + half * x;
                let cot = 1.0 / t.tan();
                let csc = 1.0 / t.sin();
                let z = (1.0 + (omega * cot).powi(2)).sqrt();
                let a = half * w * omega * omega * t * cot * csc * csc / z;
                nodes.push((z, a));
            }
        };
        let mut hi = FRAC_PI_4;
        for _ in 0..quadrature.panels_per_side {
            let lo = hi * quadrature.grading;
            push_panel(lo, hi);
            hi = lo;
        }
        let t_min = hi;
        let mut gap = FRAC_PI_4;
        for _ in 0..quadrature.panels_per_side {
            let next = gap * quadrature.grading;
            push_panel(FRAC_PI_2 - gap, FRAC_PI_2 - next);
            gap = next;
        }
        // The sliver (pi/2 - gap, pi/2) is dropped: the integrand is O(1) there.
        let tail = if omega > 0.0 { t_min } else { 0.0 };
        KappaFactorization {
            params,
            quadrature,
            tolerance: DEFAULT_KAPPA_TOLERANCE,
            nodes,
            tail,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn params(&self) -> &MediumParams {
        &self.params
    }

    pub fn quadrature(&self) -> KappaQuadrature {
        self.quadrature
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `ln kappa_minus(s)` for `s > -1`.
    fn log_minus(&self, s: f64) -> f64 {
        if self.params.omega() == 0.0 {
            return 0.0;
        }
        let sum: f64 = self.nodes.iter().map(|&(z, a)| a / (s + z)).sum();
        // Near t = 0 the integrand is omega^2 / (omega^2 + s t omega + ..) ~ 1.
        let tail = if s.is_finite() && s > 0.0 {
            let omega = self.params.omega();
            self.tail * omega / (omega + 0.5 * s * self.tail)
        } else {
            self.tail
        };
        (sum + tail) / PI
    }

    /// Minus factor, analytic for `Re s > -1`.
    pub fn kappa_minus(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s <= -1.0 {
            return Err(AlbedoError::domain(format!(
                "kappa_minus needs s > -1, got {s}"
            )));
        }
        if s == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(self.log_minus(s).exp())
    }

    /// Plus factor, analytic for `Re s < 1`. Equal to `1 / kappa_minus(-s)`.
    pub fn kappa_plus(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s >= 1.0 {
            return Err(AlbedoError::domain(format!(
                "kappa_plus needs s < 1, got {s}"
            )));
        }
        if s == f64::NEG_INFINITY {
            return Ok(1.0);
        }
        Ok((-self.log_minus(-s)).exp())
    }

    /// The unsplit kernel on `|s| < 1`.
    pub fn kappa(&self, s: f64) -> Result<f64> {
        kappa(s, &self.params)
    }

    /// Relative change of `kappa_minus(s)` when the per-panel order doubles.
    pub fn error_estimate(&self, s: f64) -> Result<f64> {
        let fine = KappaFactorization::with_quadrature(self.params, self.quadrature.refined());
        let a = self.kappa_minus(s)?;
        let b = fine.kappa_minus(s)?;
        Ok(((a - b) / b).abs())
    }

    /// Order-doubling check at the given points against the configured tolerance.
    pub fn validate(&self, points: &[f64]) -> Result<()> {
        for &s in points {
            let err = self.error_estimate(s)?;
            if err > self.tolerance {
                return Err(AlbedoError::diagnostic(
                    format!(
                        "kappa_minus({s}) not converged: order-doubling change {err:.3e} > {:.1e}",
                        self.tolerance
                    ),
                    self.params.omega(),
                    self.quadrature.node_count(),
                ));
            }
        }
        Ok(())
    }
}

/// `kappa(s) = (1 - s^2) / ((omega + r) r)`, `r = sqrt(1 - s^2)`, for real
/// `|s| < 1`.
///
/// This is the real branch of `(s^2-1)(sqrt(s^2-1) - i omega) /
/// ((s^2 - s_+^2) sqrt(s^2-1))` with `sqrt(s^2 - 1) = i r`, after cancelling
/// `s_+^2 - s^2 = (r - omega)(r + omega)`; the points `s = +-s_+` need no
/// special treatment.
pub fn kappa(s: f64, params: &MediumParams) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return Err(AlbedoError::domain(format!("kappa needs |s| < 1, got {s}")));
    }
    let r = ((1.0 - s) * (1.0 + s)).sqrt();
    Ok(r / (params.omega() + r))
}

/// Laplace transform of the diffuse density, `hat rho_d(s)`.
pub fn rho_hat_d(fac: &KappaFactorization, inc: &IncidenceSpec, s: f64) -> Result<f64> {
    let p = fac.params();
    let mu0 = inc.mu0();
    let sp = p.s_plus();
    if (1.0 + mu0 * s) == 0.0 || (s + 1.0 / mu0).abs() < 1e-14 {
        return Err(AlbedoError::Pole {
            s,
            what: "incidence pole s = -1/mu0",
        });
    }
    if (s + sp).abs() < 1e-14 {
        return Err(AlbedoError::Pole {
            s,
            what: "free-mode pole s = -s_plus",
        });
    }
    let amp = mu0 * (1.0 + mu0) / (fac.kappa_plus(-1.0 / mu0)? * (1.0 + mu0 * sp));
    let km = fac.kappa_minus(s)?;
    Ok(amp * (s + 1.0) * km / ((s + sp) * (1.0 + mu0 * s)) - mu0 / (1.0 + mu0 * s))
}

fn backward_mu(theta: f64) -> Result<f64> {
    let a = theta.abs();
    if !(a > FRAC_PI_2 && a <= PI) {
        return Err(AlbedoError::domain(format!(
            "emergent direction needs pi/2 < |theta| <= pi, got {theta}"
        )));
    }
    Ok(theta.cos().min(-f64::MIN_POSITIVE))
}

fn check_mu(mu: f64) -> Result<()> {
    if !(-1.0..0.0).contains(&mu) {
        return Err(AlbedoError::domain(format!(
            "emergent cosine must lie in [-1, 0), got {mu}"
        )));
    }
    Ok(())
}

fn albedo_prefactor(p: &MediumParams, mu0: f64, mu: f64) -> f64 {
    let sp = p.s_plus();
    p.omega() / (2.0 * PI) * mu0 * (1.0 + mu0) * (1.0 - mu)
        / ((mu0 - mu) * (1.0 + mu0 * sp) * (1.0 - mu * sp))
}

/// Emergent flux `psi_d(theta, 0)` as a function of the emergent cosine
/// `mu in [-1, 0)`, product-of-`kappa_minus` form.
pub fn albedo_wh_mu(fac: &KappaFactorization, inc: &IncidenceSpec, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let mu0 = inc.mu0();
    let pre = albedo_prefactor(fac.params(), mu0, mu);
    if pre == 0.0 {
        return Ok(0.0);
    }
    Ok(pre * fac.kappa_minus(1.0 / mu0)? * fac.kappa_minus(-1.0 / mu)?)
}

/// Emergent flux at backward angle `theta` (radians).
pub fn albedo_wh(fac: &KappaFactorization, inc: &IncidenceSpec, theta: f64) -> Result<f64> {
    albedo_wh_mu(fac, inc, backward_mu(theta)?)
}

/// Same quantity through `1 / (kappa_plus(-1/mu0) kappa_plus(1/mu))`.
pub fn albedo_wh_reciprocal(fac: &KappaFactorization, inc: &IncidenceSpec, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let mu0 = inc.mu0();
    let pre = albedo_prefactor(fac.params(), mu0, mu);
    Ok(pre / (fac.kappa_plus(-1.0 / mu0)? * fac.kappa_plus(1.0 / mu)?))
}

/// Same quantity assembled from the transformed density:
/// `-(omega / 2 pi mu) hat rho_d(-1/mu) + (omega / 2 pi) mu0 / (mu0 - mu)`.
pub fn albedo_wh_from_density(
    fac: &KappaFactorization,
    inc: &IncidenceSpec,
    mu: f64,
) -> Result<f64> {
    check_mu(mu)?;
    let omega = fac.params().omega();
    let mu0 = inc.mu0();
    let rho = rho_hat_d(fac, inc, -1.0 / mu)?;
    Ok(-omega / (2.0 * PI * mu) * rho + omega / (2.0 * PI) * mu0 / (mu0 - mu))
}

/// Reciprocity function with `psi_d(theta, 0) = D(-mu, mu0) / (-mu)`.
/// Both arguments are direction cosines in `(0, 1]`.
pub fn d_function(fac: &KappaFactorization, x: f64, y: f64) -> Result<f64> {
    for v in [x, y] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(AlbedoError::domain(format!(
                "D arguments must lie in (0, 1], got {v}"
            )));
        }
    }
    let p = fac.params();
    let sp = p.s_plus();
    let num = p.omega() / (2.0 * PI) * x * y * (1.0 + x) * (1.0 + y);
    let den = (x + y)
        * (1.0 + x * sp)
        * (1.0 + y * sp)
        * fac.kappa_plus(-1.0 / x)?
        * fac.kappa_plus(-1.0 / y)?;
    Ok(num / den)
}

/// Evaluates the analytic albedo at every backward node of `grid`.
pub fn pattern_on_grid(
    fac: &KappaFactorization,
    inc: &IncidenceSpec,
    grid: &AngularGrid,
) -> Result<AlbedoPattern> {
    let mut angles = Vec::with_capacity(grid.len() / 2);
    let mut values = Vec::with_capacity(grid.len() / 2);
    for k in grid.backward() {
        angles.push(grid.theta()[k]);
        values.push(albedo_wh_mu(fac, inc, grid.mu()[k])?);
    }
    Ok(AlbedoPattern {
        method: Method::WienerHopf,
        angles,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fac(omega: f64) -> KappaFactorization {
        KappaFactorization::new(MediumParams::new(omega).unwrap())
    }

    /// `ln kappa_minus(s)` straight from the `z`-form with `z = cosh u` and a
    /// plain midpoint rule. Slow but independent of the graded rule.
    fn log_minus_oracle(omega: f64, s: f64) -> f64 {
        // int_0^inf atan(omega / sinh u) sinh u / (cosh u + s) du
        let u_max = 60.0;
        let n = 2_000_000;
        let h = u_max / n as f64;
        let mut sum = 0.0;
        for j in 0..n {
            let u = (j as f64 + 0.5) * h;
            let sh = u.sinh();
            sum += (omega / sh).atan() * sh / (u.cosh() + s);
        }
        sum * h / PI
    }

    /// The unsimplified complex-branch kernel written in real arithmetic:
    /// (s^2-1)(r - omega) / ((s^2 - s_+^2) r).
    fn kappa_raw(s: f64, omega: f64) -> f64 {
        let r = (1.0 - s * s).sqrt();
        let sp2 = 1.0 - omega * omega;
        (s * s - 1.0) * (r - omega) / ((s * s - sp2) * r)
    }

    #[test]
    fn kappa_examples() {
        let p = MediumParams::new(0.6).unwrap();
        assert_relative_eq!(kappa(0.0, &p).unwrap(), 0.625, epsilon = 1e-15);
        let eps = 1e-7;
        assert_relative_eq!(kappa_raw(eps, 0.6), 0.625, epsilon = 1e-10);
        assert_eq!(kappa(0.3, &p).unwrap(), kappa(-0.3, &p).unwrap());
        for s in [-0.9, -0.5, 0.2, 0.7] {
            assert_relative_eq!(
                kappa(s, &p).unwrap(),
                kappa_raw(s, 0.6),
                max_relative = 1e-13
            );
        }
        assert!(kappa(1.0, &p).is_err());
    }

    #[test]
    fn kappa_limit_at_free_mode_root() {
        let p = MediumParams::new(0.6).unwrap();
        let sp = p.s_plus();
        let at_root = kappa(sp, &p).unwrap();
        assert!(at_root.is_finite() && at_root > 0.0);
        let seq: Vec<f64> = (2..=6)
            .map(|k| kappa_raw(sp * (1.0 - 10f64.powi(-k)), 0.6))
            .collect();
        for w in seq.windows(2) {
            assert!((w[1] - at_root).abs() < (w[0] - at_root).abs());
        }
        assert!((seq[4] - at_root).abs() < 1e-5);
    }

    #[test]
    fn factor_values_at_origin() {
        let f = fac(0.6);
        assert_relative_eq!(
            f.kappa_minus(0.0).unwrap(),
            1.6f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f.kappa_plus(0.0).unwrap(),
            1.0 / 1.6f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f.kappa_minus(0.0).unwrap(),
            1.264_911_064_067_351_7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f.kappa_plus(0.0).unwrap(),
            0.790_569_415_042_094_8,
            max_relative = 1e-12
        );
    }

    #[test]
    fn matches_branch_cut_oracle() {
        for omega in [0.3, 0.6, 0.99] {
            let f = fac(omega);
            for s in [-0.5, 0.0, 1.414, 10.0] {
                let got = f.kappa_minus(s).unwrap().ln();
                let want = log_minus_oracle(omega, s);
                assert!(
                    (got - want).abs() < 1e-9 * want.abs().max(1e-3),
                    "omega {omega} s {s}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn large_argument_limit() {
        let f = fac(0.6);
        assert!((f.kappa_minus(1e6).unwrap() - 1.0).abs() < 1e-5);
        assert!((f.kappa_plus(-1e6).unwrap() - 1.0).abs() < 1e-5);
        assert_eq!(f.kappa_minus(f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn vacuum_medium() {
        let f = fac(0.0);
        for s in [-0.9, 0.0, 3.0, 1e8] {
            assert_eq!(f.kappa_minus(s).unwrap(), 1.0);
            assert_eq!(f.kappa_plus(-s).unwrap(), 1.0);
        }
        let inc = IncidenceSpec::from_degrees(45.0).unwrap();
        for s in [-0.5, 0.5, 1.0, 20.0] {
            assert!(rho_hat_d(&f, &inc, s).unwrap().abs() < 1e-15);
        }
        assert_eq!(albedo_wh(&f, &inc, 2.5).unwrap(), 0.0);
        assert_eq!(d_function(&f, 0.3, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let f = fac(0.6);
        assert!(f.kappa_minus(-1.0).is_err());
        assert!(f.kappa_plus(1.0).is_err());
        let inc = IncidenceSpec::from_degrees(45.0).unwrap();
        assert!(albedo_wh(&f, &inc, 1.0).is_err());
        assert!(albedo_wh(&f, &inc, FRAC_PI_2).is_err());
        assert!(albedo_wh(&f, &inc, PI).is_ok());
        assert!(d_function(&f, 0.0, 0.5).is_err());
        assert!(d_function(&f, 0.5, 1.2).is_err());
        let sp = f.params().s_plus();
        assert!(matches!(
            rho_hat_d(&f, &inc, -sp),
            Err(AlbedoError::Pole { .. })
        ));
    }

    #[test]
    fn plus_minus_reflection() {
        let f = fac(0.6);
        let mu0 = (PI / 4.0).cos();
        for s in [-2.0, -1.0 / mu0, 0.5] {
            let lhs = f.kappa_plus(s).unwrap();
            let rhs = 1.0 / f.kappa_minus(-s).unwrap();
            assert!(((lhs - rhs) / rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn minus_factor_decreases_toward_one() {
        let f = fac(0.6);
        let mut prev = f.kappa_minus(-0.999).unwrap();
        for i in 1..200 {
            let s = -0.999 + i as f64 * 0.1;
            let k = f.kappa_minus(s).unwrap();
            assert!(k < prev && k > 1.0, "s {s}");
            prev = k;
        }
    }

    #[test]
    fn order_doubling_meets_tolerance() {
        for omega in [0.01, 0.6, 0.99, 0.999_999] {
            let f = fac(omega);
            f.validate(&[-0.9, 0.0, 1.0, 1.0 / 0.05, 1e3]).unwrap();
        }
    }

    #[test]
    fn albedo_examples() {
        let f = fac(0.6);
        let inc = IncidenceSpec::from_degrees(45.0).unwrap();
        let a = albedo_wh(&f, &inc, 135f64.to_radians()).unwrap();
        let b = albedo_wh(&f, &inc, -135f64.to_radians()).unwrap();
        assert!(a > 0.0);
        assert!(((a - b) / a).abs() < 1e-14);
        let grazing = albedo_wh_mu(&f, &inc, -1e-9).unwrap();
        assert!(grazing.is_finite() && grazing > 0.0);
        let small = fac(1e-8);
        assert!(albedo_wh(&small, &inc, PI).unwrap() < 1e-8);
    }

    #[test]
    fn three_albedo_routes_agree() {
        for omega in [0.3, 0.6, 0.99] {
            let f = fac(omega);
            for deg in [0.0, 30.0, 45.0, 80.0] {
                let inc = IncidenceSpec::from_degrees(deg).unwrap();
                for mu in [-1.0, -0.8, -0.5, -0.2, -0.05, -0.001] {
                    let a = albedo_wh_mu(&f, &inc, mu).unwrap();
                    let b = albedo_wh_reciprocal(&f, &inc, mu).unwrap();
                    let c = albedo_wh_from_density(&f, &inc, mu).unwrap();
                    assert!(((a - b) / a).abs() < 1e-9, "{omega} {deg} {mu}");
                    assert!(((a - c) / a).abs() < 1e-9, "{omega} {deg} {mu}: {a} {c}");
                }
            }
        }
    }

    #[test]
    fn density_transform_positive_at_one() {
        let f = fac(0.6);
        let inc = IncidenceSpec::from_degrees(45.0).unwrap();
        assert!(rho_hat_d(&f, &inc, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn reciprocity_function() {
        let f = fac(0.6);
        let d1 = d_function(&f, 0.5, 0.7).unwrap();
        let d2 = d_function(&f, 0.7, 0.5).unwrap();
        assert!(d1 > 0.0);
        assert!(((d1 - d2) / d1).abs() < 1e-9);
        // psi_d(theta, 0) = D(-mu, mu0) / (-mu)
        let inc = IncidenceSpec::new(0.7f64.acos()).unwrap();
        let psi = albedo_wh_mu(&f, &inc, -0.5).unwrap();
        assert!((psi - d1 / 0.5).abs() < 1e-12 * psi);
    }
}
