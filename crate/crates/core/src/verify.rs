//! Identity table behind the CLI `verify` command: the auxiliary kernel and
//! angular identities, the factorization identities, and a small-grid
//! smoke run of both solvers.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::appendix::{
    boundary_angle_integral, boundary_angle_integral_atanh, e1_kernel, milne_kernel,
    milne_kernel_angular,
};
use crate::error::Result;
use crate::quadrature::legendre_rule;
use crate::report::{run_comparison, RunConfig};
use crate::transport::{dispersion_residual, IncidenceSpec, MediumParams};
use crate::wiener_hopf::{d_function, KappaFactorization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: String, error: f64, tolerance: f64) -> Self {
        Check {
            name,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn direct_boundary(mu0: f64) -> Result<f64> {
    let rule = legendre_rule(20)?;
    let h = FRAC_PI_2 / 64.0;
    Ok((0..64)
        .map(|i| rule.integrate(i as f64 * h, (i + 1) as f64 * h, |t| 1.0 / (mu0 + t.cos())))
        .sum())
}

/// Runs every check; `pass` on each row tells whether it held.
pub fn identity_table() -> Result<Vec<Check>> {
    let mut rows = Vec::new();
    for dt in [0.1, 1.0, 5.0] {
        let k = milne_kernel(dt)?;
        rows.push(Check::new(
            format!("kernel z-form vs angular form, dtau={dt}"),
            rel(milne_kernel_angular(dt)?, k),
            1e-7,
        ));
        let e = e1_kernel(dt)?;
        rows.push(Check::new(
            format!("E1 kernel below Bessel-type kernel, dtau={dt}"),
            if e < k { 0.0 } else { e - k },
            0.0,
        ));
    }
    for deg in [15.0, 30.0, 45.0, 60.0] {
        let inc = IncidenceSpec::from_degrees(deg)?;
        let closed = boundary_angle_integral(&inc);
        rows.push(Check::new(
            format!("boundary integral closed form vs quadrature, theta0={deg}"),
            (closed - direct_boundary(inc.mu0())?).abs(),
            1e-8,
        ));
        rows.push(Check::new(
            format!("boundary integral closed form vs atanh form, theta0={deg}"),
            rel(boundary_angle_integral_atanh(&inc), closed),
            1e-10,
        ));
    }
    for omega in [0.1, 0.3, 0.6, 0.9, 0.99, 0.999] {
        let p = MediumParams::new(omega)?;
        rows.push(Check::new(
            format!("dispersion residual at s+, omega={omega}"),
            dispersion_residual(p.s_plus(), &p)?.abs(),
            1e-12,
        ));
    }
    for omega in [0.3, 0.6, 0.99] {
        let fac = KappaFactorization::new(MediumParams::new(omega)?);
        let mut split: f64 = 0.0;
        for i in 0..19 {
            let s = -0.9 + 0.1 * i as f64;
            split = split.max(rel(fac.kappa_plus(s)? / fac.kappa_minus(s)?, fac.kappa(s)?));
        }
        rows.push(Check::new(
            format!("kappa+/kappa- = kappa on (-0.9, 0.9), omega={omega}"),
            split,
            1e-8,
        ));
        let mut refl: f64 = 0.0;
        let mut sym: f64 = 0.0;
        for i in 1..=10 {
            let mu = -(i as f64) / 10.0;
            refl = refl.max((fac.kappa_minus(-1.0 / mu)? * fac.kappa_plus(1.0 / mu)? - 1.0).abs());
            let (x, y) = (0.1 * i as f64, 1.05 - 0.1 * i as f64);
            sym = sym.max(rel(d_function(&fac, x, y)?, d_function(&fac, y, x)?));
        }
        rows.push(Check::new(
            format!("reflection kappa-(-1/mu) kappa+(1/mu) = 1, omega={omega}"),
            refl,
            1e-9,
        ));
        rows.push(Check::new(
            format!("D(x,y) = D(y,x), omega={omega}"),
            sym,
            1e-9,
        ));
    }
    for omega in [0.3, 0.6, 0.99] {
        let r = run_comparison(&RunConfig {
            omega,
            subintervals: 8,
            gl_order: 6,
            ..Default::default()
        })?;
        rows.push(Check::new(
            format!("smoke: WH vs DO on 48-node grid, omega={omega}"),
            r.discrepancy.max_rel_diff,
            1e-4,
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_identity_holds() {
        let rows = identity_table().unwrap();
        assert!(rows.len() > 20);
        for r in rows {
            assert!(r.pass, "{}: {:.3e} > {:.1e}", r.name, r.error, r.tolerance);
        }
    }
}
