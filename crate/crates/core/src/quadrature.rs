//! Gauss-Legendre rules and the concatenated angular net over `(-pi, pi)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{AlbedoError, Result};

pub const MAX_GL_ORDER: usize = 64;

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Integrate `f` over `[lo, hi]` with this rule.
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule of the given order, `1 <= order <= 64`.
pub fn legendre_rule(order: usize) -> Result<GaussLegendre> {
    if order == 0 || order > MAX_GL_ORDER {
        return Err(AlbedoError::domain(format!(
            "Gauss-Legendre order must be in 1..={MAX_GL_ORDER}, got {order}"
        )));
    }
    Ok(legendre_rule_unchecked(order))
}

/// Newton iteration on `P_n` from the usual cosine initial guesses. Also used
/// internally for orders above the public cap.
pub(crate) fn legendre_rule_unchecked(n: usize) -> GaussLegendre {
    if n == 1 {
        return GaussLegendre {
            nodes: vec![0.0],
            weights: vec![2.0],
        };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i-th root from the top; store mirrored so nodes ascend.
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

/// Concatenated Gauss-Legendre net over `(-pi, pi)`.
///
/// `subintervals` uniform panels of width `2a = 2 pi / M`, each carrying an
/// `order`-point rule with weights scaled by `a`. With `M` divisible by four,
/// `0` and `+-pi/2` fall on panel boundaries so no node has `mu = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    subintervals: usize,
    order: usize,
    theta: Vec<f64>,
    mu: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularGrid {
    pub fn new(subintervals: usize, order: usize) -> Result<Self> {
        if subintervals == 0 || !subintervals.is_multiple_of(4) {
            return Err(AlbedoError::Config(format!(
                "subinterval count must be a positive multiple of 4, got {subintervals}"
            )));
        }
        let rule = legendre_rule(order).map_err(|e| AlbedoError::Config(e.to_string()))?;
        let width = 2.0 * PI / subintervals as f64;
        let half = 0.5 * width;
        let n = subintervals * order;
        let mut theta = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..subintervals {
            let mid = -PI + (j as f64 + 0.5) * width;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                theta.push(mid + half * x);
                weights.push(half * w);
            }
        }
        let mu: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let grid = AngularGrid {
            subintervals,
            order,
            theta,
            mu,
            weights,
        };
        if let Some(k) = grid.mu.iter().position(|m| m.abs() < 1e-12) {
            return Err(AlbedoError::Config(format!(
                "node {k} lies on the boundary plane (|mu| < 1e-12)"
            )));
        }
        let q = grid.quartile_len();
        debug_assert!(grid.theta[q..3 * q].iter().all(|t| t.abs() < PI / 2.0));
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quartile_len(&self) -> usize {
        self.len() / 4
    }

    /// Zero-based index range of quartile `q` in `1..=4`.
    pub fn quartile(&self, q: usize) -> Range<usize> {
        assert!((1..=4).contains(&q), "quartile index {q} out of 1..=4");
        let n4 = self.quartile_len();
        (q - 1) * n4..q * n4
    }

    /// Second and third quartiles, `|theta| < pi/2`.
    pub fn forward(&self) -> Range<usize> {
        let n4 = self.quartile_len();
        n4..3 * n4
    }

    /// First and fourth quartiles in ascending index order.
    pub fn backward(&self) -> impl Iterator<Item = usize> + Clone {
        self.quartile(1).chain(self.quartile(4))
    }

    pub fn is_backward(&self, k: usize) -> bool {
        !self.forward().contains(&k)
    }

    /// Index of the node at `-theta_k`.
    pub fn reflect(&self, k: usize) -> usize {
        self.len() - 1 - k
    }

    /// Index of the node at `sign(theta_k) pi - theta_k`.
    pub fn supplement(&self, k: usize) -> usize {
        let n = self.len();
        if k < n / 2 {
            n / 2 - 1 - k
        } else {
            3 * n / 2 - 1 - k
        }
    }

    /// Weighted sum `sum_k w_k f_k`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.len() {
            return Err(AlbedoError::Usage(format!(
                "expected {} samples, got {}",
                self.len(),
                samples.len()
            )));
        }
        Ok(self.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
    }

    /// CSV dump with columns `index,theta_rad,mu,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,theta_rad,mu,weight\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e}",
                k, self.theta[k], self.mu[k], self.weights[k]
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_orders() {
        let r = legendre_rule(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
        let r = legendre_rule(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r.nodes[0], -x, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], x, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn order_bounds() {
        assert!(legendre_rule(0).is_err());
        assert!(legendre_rule(65).is_err());
        assert!(legendre_rule(64).is_ok());
    }

    #[test]
    fn exact_to_degree_2n_minus_1() {
        let r = legendre_rule(10).unwrap();
        let m8 = r.integrate(-1.0, 1.0, |x| x.powi(8));
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
        let m19 = r.integrate(-1.0, 1.0, |x| x.powi(18) + x.powi(19));
        assert!((m19 - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn every_order_sums_to_two_and_is_symmetric() {
        for n in 1..=MAX_GL_ORDER {
            let r = legendre_rule(n).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {n}: {s}");
            for i in 0..n {
                assert!((r.nodes[i] + r.nodes[n - 1 - i]).abs() < 1e-15);
                if i > 0 {
                    assert!(r.nodes[i] > r.nodes[i - 1]);
                }
            }
        }
    }

    #[test]
    fn reference_grid_layout() {
        let g = AngularGrid::new(40, 10).unwrap();
        assert_eq!(g.len(), 400);
        assert_eq!(g.quartile_len(), 100);
        for q in 1..=4 {
            let r = g.quartile(q);
            let lo = -PI + (q - 1) as f64 * PI / 2.0;
            assert!(g.theta()[r].iter().all(|&t| t > lo && t < lo + PI / 2.0));
        }
        assert_eq!(g.forward(), 100..300);
        assert_eq!(g.backward().count(), 200);
        assert!(g.mu()[g.forward()].iter().all(|&m| m > 0.0));
        assert!(g.backward().all(|k| g.mu()[k] < 0.0));
    }

    #[test]
    fn midpoint_grid() {
        let g = AngularGrid::new(4, 1).unwrap();
        let expected = [-0.75 * PI, -0.25 * PI, 0.25 * PI, 0.75 * PI];
        for (t, e) in g.theta().iter().zip(expected) {
            assert_relative_eq!(*t, e, epsilon = 1e-15);
        }
        for w in g.weights() {
            assert_relative_eq!(*w, PI / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn bad_subintervals() {
        assert!(matches!(
            AngularGrid::new(6, 10),
            Err(AlbedoError::Config(_))
        ));
        assert!(matches!(
            AngularGrid::new(0, 10),
            Err(AlbedoError::Config(_))
        ));
        assert!(AngularGrid::new(8, 0).is_err());
    }

    #[test]
    fn weights_and_symmetry() {
        for (m, p) in [(4, 1), (4, 7), (8, 3), (40, 10), (80, 10), (12, 64)] {
            let g = AngularGrid::new(m, p).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 2.0 * PI).abs() < 1e-12, "({m},{p}) {total}");
            assert!(g.mu().iter().all(|m| m.abs() >= 1e-12));
            for k in 0..g.len() {
                let r = g.reflect(k);
                assert!((g.theta()[r] + g.theta()[k]).abs() < 1e-13);
                assert!((g.mu()[r] - g.mu()[k]).abs() < 1e-14);
                let s = g.supplement(k);
                let t = g.theta()[k];
                assert!((g.theta()[s] - (t.signum() * PI - t)).abs() < 1e-13);
                assert!((g.mu()[s] + g.mu()[k]).abs() < 1e-14);
                assert!((g.weights()[s] - g.weights()[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn integrate_examples() {
        let g = AngularGrid::new(40, 10).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!(g.integrate(g.mu()).unwrap().abs() < 1e-12);
        let cos2: Vec<f64> = g.theta().iter().map(|t| t.cos().powi(2)).collect();
        assert!((g.integrate(&cos2).unwrap() - PI).abs() < 1e-10);
        assert!(matches!(
            g.integrate(&ones[1..]),
            Err(AlbedoError::Usage(_))
        ));
    }

    #[test]
    fn fourier_modes_vanish() {
        let g = AngularGrid::new(40, 10).unwrap();
        for k in 1..=6 {
            let c: Vec<f64> = g.theta().iter().map(|t| (k as f64 * t).cos()).collect();
            let s: Vec<f64> = g.theta().iter().map(|t| (k as f64 * t).sin()).collect();
            assert!(g.integrate(&c).unwrap().abs() < 1e-10);
            assert!(g.integrate(&s).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn csv_dump_shape() {
        let g = AngularGrid::new(4, 2).unwrap();
        let csv = g.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "index,theta_rad,mu,weight");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("0,"));
    }
}
