//! Analog Monte Carlo transport in the plane transverse to the fibers.
//!
//! Only the depth `tau` and flight angle `theta` are tracked. Each photon
//! enters at `theta0`, flies `Exp(1)` optical path lengths (depth advances
//! by `path * cos theta`), is absorbed at a collision with probability
//! `1 - omega` and otherwise re-emitted uniformly in `(-pi, pi]`. A photon
//! whose depth goes negative has escaped.
//!
//! Every photon draws from its own ChaCha8 stream selected by its index, so
//! the tallies do not depend on how the work is split across threads.

use std::f64::consts::{FRAC_PI_2, PI};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AlbedoError, Result};
use crate::transport::{AlbedoPattern, IncidenceSpec, MediumParams, Method};

/// Photons per parallel work item.
const BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub photons: u64,
    pub seed: u64,
    /// Histogram bins over the backward range `pi/2 < |theta| < pi`.
    pub bins: usize,
    pub max_collisions: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            photons: 1_000_000,
            seed: 0x5eed_a1be_d0f1_be25,
            bins: 36,
            max_collisions: 1_000_000,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.photons == 0 {
            return Err(AlbedoError::Usage("photon count must be at least 1".into()));
        }
        if self.bins < 4 {
            return Err(AlbedoError::Usage(format!(
                "need at least 4 histogram bins, got {}",
                self.bins
            )));
        }
        if self.max_collisions == 0 {
            return Err(AlbedoError::Usage(
                "collision cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub photons: u64,
    pub escaped: u64,
    pub absorbed: u64,
    /// Walks stopped at the collision cap; already included in `absorbed`.
    pub capped: u64,
    pub escaped_fraction: f64,
    pub escaped_std_error: f64,
    pub absorbed_fraction: f64,
    pub mu0: f64,
    /// Bin centres in radians, ascending through the backward range
    /// starting just past `+pi/2` and wrapping through `pi` to `-pi/2`.
    pub bin_centers: Vec<f64>,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Escaping current per unit angle over incident normal current,
    /// `|mu| psi_d / mu0` averaged over each bin.
    pub histogram: Vec<f64>,
    pub histogram_std_error: Vec<f64>,
}

impl McResult {
    /// Converts the current histogram into flux per unit angle using the
    /// bin-centre cosine.
    pub fn to_pattern(&self) -> AlbedoPattern {
        let values = self
            .bin_centers
            .iter()
            .zip(&self.histogram)
            .map(|(t, h)| h * self.mu0 / t.cos().abs())
            .collect();
        AlbedoPattern {
            method: Method::MonteCarlo,
            angles: self.bin_centers.clone(),
            values,
        }
    }

    /// Standard errors of [`McResult::to_pattern`].
    pub fn pattern_std_error(&self) -> Vec<f64> {
        self.bin_centers
            .iter()
            .zip(&self.histogram_std_error)
            .map(|(t, s)| s * self.mu0 / t.cos().abs())
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    escaped: u64,
    absorbed: u64,
    capped: u64,
    counts: Vec<u64>,
}

impl Tally {
    fn new(bins: usize) -> Self {
        Tally {
            counts: vec![0; bins],
            ..Default::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.escaped += other.escaped;
        self.absorbed += other.absorbed;
        self.capped += other.capped;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

/// Backward angle mapped onto the contiguous coordinate `(pi/2, 3pi/2)`.
fn unwrap_backward(theta: f64) -> f64 {
    if theta > 0.0 {
        theta
    } else {
        theta + 2.0 * PI
    }
}

fn bin_of(theta: f64, bins: usize) -> usize {
    let x = (unwrap_backward(theta) - FRAC_PI_2) / PI;
    ((x * bins as f64) as usize).min(bins - 1)
}

enum Fate {
    Escaped(f64),
    Absorbed,
    Capped,
}

fn walk(rng: &mut ChaCha8Rng, omega: f64, theta0: f64, cap: u64) -> Fate {
    let mut tau = 0.0;
    let mut theta = theta0;
    let mut mu = theta0.cos();
    let mut collisions = 0u64;
    loop {
        let u: f64 = rng.random();
        let path = -(-u).ln_1p();
        tau += path * mu;
        if tau < 0.0 {
            assert!(mu < 0.0, "escape with forward direction");
            return Fate::Escaped(theta);
        }
        collisions += 1;
        if collisions > cap {
            return Fate::Capped;
        }
        if rng.random::<f64>() >= omega {
            return Fate::Absorbed;
        }
        // uniform on (-pi, pi]
        theta = PI - 2.0 * PI * rng.random::<f64>();
        mu = theta.cos();
    }
}

/// Runs the analog game. Bit-identical for identical inputs.
pub fn simulate(params: &MediumParams, inc: &IncidenceSpec, cfg: &McConfig) -> Result<McResult> {
    cfg.validate()?;
    let omega = params.omega();
    let theta0 = inc.theta0();
    let blocks = cfg.photons.div_ceil(BLOCK);
    let tally = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut t = Tally::new(cfg.bins);
            let end = ((blk + 1) * BLOCK).min(cfg.photons);
            for idx in blk * BLOCK..end {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(idx);
                match walk(&mut rng, omega, theta0, cfg.max_collisions) {
                    Fate::Escaped(theta) => {
                        t.escaped += 1;
                        t.counts[bin_of(theta, cfg.bins)] += 1;
                    }
                    Fate::Absorbed => t.absorbed += 1,
                    Fate::Capped => {
                        t.absorbed += 1;
                        t.capped += 1;
                    }
                }
            }
            t
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::new(cfg.bins), Tally::merge);

    let n = cfg.photons as f64;
    if tally.capped as f64 > 1e-4 * n {
        warn!(
            "{} of {} walks hit the {}-collision cap and were counted absorbed",
            tally.capped, cfg.photons, cfg.max_collisions
        );
    }
    let p = tally.escaped as f64 / n;
    let width = PI / cfg.bins as f64;
    let bin_centers = (0..cfg.bins)
        .map(|k| {
            let x = FRAC_PI_2 + (k as f64 + 0.5) * width;
            if x > PI {
                x - 2.0 * PI
            } else {
                x
            }
        })
        .collect();
    let (histogram, histogram_std_error) = tally
        .counts
        .iter()
        .map(|&c| {
            let q = c as f64 / n;
            (q / width, (q * (1.0 - q) / n).sqrt() / width)
        })
        .unzip();
    Ok(McResult {
        photons: cfg.photons,
        escaped: tally.escaped,
        absorbed: tally.absorbed,
        capped: tally.capped,
        escaped_fraction: p,
        escaped_std_error: (p * (1.0 - p) / n).sqrt(),
        absorbed_fraction: tally.absorbed as f64 / n,
        mu0: inc.mu0(),
        bin_centers,
        bin_width: width,
        counts: tally.counts,
        histogram,
        histogram_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(omega: f64, photons: u64, seed: u64) -> McResult {
        let cfg = McConfig {
            photons,
            seed,
            ..Default::default()
        };
        simulate(
            &MediumParams::new(omega).unwrap(),
            &IncidenceSpec::from_degrees(45.0).unwrap(),
            &cfg,
        )
        .unwrap()
    }

    #[test]
    fn vacuum_never_returns() {
        let r = run(0.0, 20_000, 1);
        assert_eq!(r.escaped, 0);
        assert_eq!(r.escaped_fraction, 0.0);
        assert_eq!(r.absorbed, 20_000);
    }

    #[test]
    fn conservation_and_reproducibility() {
        let a = run(0.9, 50_000, 7);
        assert_eq!(a.escaped + a.absorbed, a.photons);
        assert_eq!(a.escaped_fraction + a.absorbed_fraction, 1.0);
        assert_eq!(a.counts.iter().sum::<u64>(), a.escaped);
        let b = run(0.9, 50_000, 7);
        assert_eq!(a, b);
        let c = run(0.9, 50_000, 8);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let a = serial.install(|| run(0.6, 30_000, 3));
        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let b = wide.install(|| run(0.6, 30_000, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn more_scattering_more_return() {
        let rs: Vec<McResult> = [0.3, 0.6, 0.9]
            .iter()
            .map(|&w| run(w, 100_000, 11))
            .collect();
        for pair in rs.windows(2) {
            let lo = pair[0].escaped_fraction + 3.0 * pair[0].escaped_std_error;
            let hi = pair[1].escaped_fraction - 3.0 * pair[1].escaped_std_error;
            assert!(lo < hi);
        }
    }

    #[test]
    fn bins_cover_backward_range() {
        assert_eq!(bin_of(FRAC_PI_2 + 1e-9, 8), 0);
        assert_eq!(bin_of(PI - 1e-9, 8), 3);
        assert_eq!(bin_of(PI, 8), 4);
        assert_eq!(bin_of(-PI + 1e-9, 8), 4);
        assert_eq!(bin_of(-FRAC_PI_2 - 1e-9, 8), 7);
        let r = run(0.6, 1000, 1);
        assert!(r.bin_centers.iter().all(|t| t.abs() > FRAC_PI_2));
        let p = r.to_pattern();
        assert_eq!(p.len(), r.bin_centers.len());
    }

    #[test]
    fn collision_cap_counts_as_absorbed() {
        let cfg = McConfig {
            photons: 2000,
            seed: 5,
            bins: 4,
            max_collisions: 1,
        };
        let r = simulate(
            &MediumParams::new(0.99).unwrap(),
            &IncidenceSpec::new(0.0).unwrap(),
            &cfg,
        )
        .unwrap();
        assert!(r.capped > 0);
        assert_eq!(r.escaped + r.absorbed, 2000);
    }

    #[test]
    fn invalid_config() {
        let p = MediumParams::new(0.5).unwrap();
        let inc = IncidenceSpec::new(0.0).unwrap();
        for cfg in [
            McConfig {
                photons: 0,
                ..Default::default()
            },
            McConfig {
                bins: 3,
                ..Default::default()
            },
            McConfig {
                max_collisions: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                simulate(&p, &inc, &cfg),
                Err(AlbedoError::Usage(_))
            ));
        }
    }
}
