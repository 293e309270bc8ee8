//! Auxiliary kernels and angular quadratures from the density formulation
//! of the half-space problem, kept as standalone checks. The integral
//! equation they feed is not solved here.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{AlbedoError, Result};
use crate::quadrature::{legendre_rule_unchecked, GaussLegendre};
use crate::transport::IncidenceSpec;

const PANEL_ORDER: usize = 16;

fn check_separation(delta_tau: f64) -> Result<()> {
    if !(delta_tau > 0.0) || !delta_tau.is_finite() {
        return Err(AlbedoError::domain(format!(
            "optical separation must be positive and finite, got {delta_tau}"
        )));
    }
    Ok(())
}

fn uniform_panels(
    rule: &GaussLegendre,
    lo: f64,
    hi: f64,
    panels: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|j| {
            let a = lo + j as f64 * h;
            rule.integrate(a, a + h, &f)
        })
        .sum()
}

/// Panels shrinking geometrically toward `end`, which is `lo` or `hi`.
fn graded_panels(
    rule: &GaussLegendre,
    lo: f64,
    hi: f64,
    toward_hi: bool,
    panels: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let mut gap = hi - lo;
    let mut sum = 0.0;
    for _ in 0..panels {
        let next = gap * 0.3;
        sum += if toward_hi {
            rule.integrate(hi - gap, hi - next, &f)
        } else {
            rule.integrate(lo + next, lo + gap, &f)
        };
        gap = next;
    }
    sum
}

/// Kernel value with the rule that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub delta_tau: f64,
    pub value: f64,
    pub nodes: usize,
}

impl KernelEval {
    pub fn milne(delta_tau: f64) -> Result<Self> {
        check_separation(delta_tau)?;
        let (value, nodes) = milne_kernel_with_nodes(delta_tau);
        Ok(KernelEval {
            delta_tau,
            value,
            nodes,
        })
    }
}

fn milne_kernel_with_nodes(delta_tau: f64) -> (f64, usize) {
    // z = cosh u turns the z-integral into int_0^umax exp(-dt cosh u) du.
    let u_max = (2.0 * (40.0 / delta_tau + 1.0)).ln();
    let panels = (u_max / 0.25).ceil() as usize;
    let rule = legendre_rule_unchecked(PANEL_ORDER);
    let value = uniform_panels(&rule, 0.0, u_max, panels, |u| (-delta_tau * u.cosh()).exp());
    (value, panels * PANEL_ORDER)
}

/// `K(dt) = int_1^inf exp(-z dt) / sqrt(z^2 - 1) dz` for `dt > 0`.
pub fn milne_kernel(delta_tau: f64) -> Result<f64> {
    check_separation(delta_tau)?;
    Ok(milne_kernel_with_nodes(delta_tau).0)
}

/// The same kernel as an angular integral,
/// `int_0^{pi/2} exp(-dt / mu) / mu dtheta`.
pub fn milne_kernel_angular(delta_tau: f64) -> Result<f64> {
    check_separation(delta_tau)?;
    let rule = legendre_rule_unchecked(PANEL_ORDER);
    let f = |t: f64| {
        let mu = t.cos();
        if mu <= 0.0 {
            0.0
        } else {
            (-delta_tau / mu).exp() / mu
        }
    };
    Ok(graded_panels(&rule, 0.0, FRAC_PI_2, true, 40, f))
}

/// `int_1^inf exp(-z dt) / z dz`, the exponential integral `E_1(dt)`.
pub fn e1_kernel(delta_tau: f64) -> Result<f64> {
    check_separation(delta_tau)?;
    // z = e^v: int_0^vmax exp(-dt e^v) dv
    let v_max = (1.0 + 40.0 / delta_tau).ln() + 1.0;
    let panels = (v_max / 0.25).ceil() as usize;
    let rule = legendre_rule_unchecked(PANEL_ORDER);
    Ok(uniform_panels(&rule, 0.0, v_max, panels, |v| {
        (-delta_tau * v.exp()).exp()
    }))
}

fn check_incidence_closed_form(inc: &IncidenceSpec) -> f64 {
    inc.theta0().abs()
}

/// `int_0^{pi/2} dtheta / (mu0 + mu)` in closed form,
/// `csc|t0| ln[(1 + tan(|t0|/2)) / (1 - tan(|t0|/2))]`, with limit 1 at
/// normal incidence.
pub fn boundary_angle_integral(inc: &IncidenceSpec) -> f64 {
    let x = check_incidence_closed_form(inc);
    if x < 1e-4 {
        return 1.0 + x * x / 3.0;
    }
    let t = (0.5 * x).tan();
    (2.0 * t / (1.0 - t)).ln_1p() / x.sin()
}

/// Same integral through `2 atanh(sqrt((1-mu0)/(1+mu0))) / sqrt(1 - mu0^2)`.
pub fn boundary_angle_integral_atanh(inc: &IncidenceSpec) -> f64 {
    let mu0 = inc.mu0();
    let x = check_incidence_closed_form(inc);
    if x < 1e-4 {
        return 1.0 + x * x / 3.0;
    }
    2.0 * ((1.0 - mu0) / (1.0 + mu0)).sqrt().atanh() / ((1.0 - mu0) * (1.0 + mu0)).sqrt()
}

/// Checked form rejecting grazing incidence.
pub fn boundary_angle_integral_for(theta0: f64) -> Result<f64> {
    if theta0.abs() >= FRAC_PI_2 {
        return Err(AlbedoError::domain(format!(
            "closed form diverges at |theta0| >= pi/2, got {theta0}"
        )));
    }
    Ok(boundary_angle_integral(&IncidenceSpec::new(theta0)?))
}

fn check_mode(lambda: f64, mu: f64) -> Result<()> {
    if !(lambda.abs() < 1.0) {
        return Err(AlbedoError::domain(format!(
            "need |lambda| < 1, got {lambda}"
        )));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(AlbedoError::domain(format!("need 0 < mu <= 1, got {mu}")));
    }
    Ok(())
}

/// `int_{-inf}^{tau} exp(-lambda t' - (tau - t')/mu) dt' = mu/(1 - lambda mu) exp(-lambda tau)`.
pub fn upstream_mode_integral(lambda: f64, mu: f64, tau: f64) -> Result<f64> {
    check_mode(lambda, mu)?;
    Ok(mu / (1.0 - lambda * mu) * (-lambda * tau).exp())
}

/// `int_{tau}^{inf} exp(-lambda t' - (t' - tau)/mu) dt' = mu/(1 + lambda mu) exp(-lambda tau)`.
pub fn downstream_mode_integral(lambda: f64, mu: f64, tau: f64) -> Result<f64> {
    check_mode(lambda, mu)?;
    Ok(mu / (1.0 + lambda * mu) * (-lambda * tau).exp())
}

/// The three angular quadratures appearing in the density equation at
/// depth `tau`: the kernel at separation `tau`, the boundary integral, and
/// `int_0^{pi/2} (exp(-tau/mu0) - exp(-tau/mu)) / (mu0 - mu) dtheta`.
pub fn density_equation_quadratures(inc: &IncidenceSpec, tau: f64) -> Result<[f64; 3]> {
    check_separation(tau)?;
    let mu0 = inc.mu0();
    let a0 = (-tau / mu0).exp();
    let f = |t: f64| {
        let mu = t.cos();
        let d = mu0 - mu;
        if d == 0.0 {
            a0 * tau / (mu0 * mu0)
        } else if mu <= 0.0 {
            a0 / d
        } else {
            // e^{-tau/mu0} - e^{-tau/mu} without cancellation near mu = mu0
            -a0 * (-tau * d / (mu * mu0)).exp_m1() / d
        }
    };
    let rule = legendre_rule_unchecked(PANEL_ORDER);
    let split = inc.theta0().abs();
    let third = if split > 0.0 {
        uniform_panels(&rule, 0.0, split, 8, f)
            + graded_panels(&rule, split, FRAC_PI_2, true, 40, f)
    } else {
        graded_panels(&rule, 0.0, FRAC_PI_2, true, 40, f)
    };
    Ok([milne_kernel(tau)?, boundary_angle_integral(inc), third])
}

/// `K(dt) / (exp(-dt) sqrt(pi / (2 dt)))`, tending to 1 for large `dt`.
pub fn milne_asymptotic_ratio(delta_tau: f64) -> Result<f64> {
    Ok(milne_kernel(delta_tau)? / ((-delta_tau).exp() * (PI / (2.0 * delta_tau)).sqrt()))
}
