//! Side-by-side run of all three methods and the files written from it.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::discrete_ordinates::{cumulative_albedo, CumulativeMode, EigenSystem};
use crate::error::{AlbedoError, Result};
use crate::monte_carlo::{simulate, McConfig};
use crate::quadrature::AngularGrid;
use crate::transport::{AlbedoPattern, IncidenceSpec, MediumParams};
use crate::wiener_hopf::{albedo_wh, pattern_on_grid, KappaFactorization};

pub use svg::render_svg;

/// Nodes closer to grazing than this are left out of the discrepancy summary.
pub const MIN_COMPARED_MU: f64 = 0.05;
/// MC bins closer to grazing than this are left out of the per-bin check.
pub const MIN_MC_BIN_MU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Svg];

    pub fn file_name(&self) -> &'static str {
        match self {
            Format::Csv => "pattern.csv",
            Format::Json => "report.json",
            Format::Svg => "pattern.svg",
        }
    }

    /// Parses a comma-separated list such as `csv,json,svg`.
    pub fn parse_list(s: &str) -> Result<Vec<Format>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let f: Format = part.parse()?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        Ok(out)
    }
}

impl FromStr for Format {
    type Err = AlbedoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(AlbedoError::Usage(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub photons: u64,
    pub seed: u64,
    pub bins: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        let d = McConfig::default();
        McSettings {
            photons: d.photons,
            seed: d.seed,
            bins: d.bins,
        }
    }
}

impl McSettings {
    pub fn to_config(self) -> McConfig {
        McConfig {
            photons: self.photons,
            seed: self.seed,
            bins: self.bins,
            ..McConfig::default()
        }
    }
}

/// Everything needed to reproduce one comparison run. Unset fields in a
/// JSON config take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub theta0_deg: f64,
    pub subintervals: usize,
    pub gl_order: usize,
    /// Every `winnow`-th discrete-ordinates node is drawn as a marker.
    pub winnow: usize,
    pub mc: Option<McSettings>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    /// Largest allowed WH/DO relative difference before the run counts as failed.
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega: 0.6,
            theta0_deg: 45.0,
            subintervals: 40,
            gl_order: 10,
            winnow: 5,
            mc: None,
            out_dir: PathBuf::from("out"),
            formats: Format::ALL.to_vec(),
            threshold: 2e-2,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AlbedoError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| AlbedoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        MediumParams::new(self.omega)?;
        IncidenceSpec::from_degrees(self.theta0_deg)?;
        AngularGrid::new(self.subintervals, self.gl_order)?;
        if self.winnow == 0 {
            return Err(AlbedoError::Config(
                "winnow factor must be at least 1".into(),
            ));
        }
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(AlbedoError::Config(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if let Some(mc) = self.mc {
            mc.to_config().validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub theta_deg: f64,
    pub mu: f64,
    pub psi_wh: f64,
    pub psi_do: f64,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeEntry {
    pub mode: CumulativeMode,
    pub wiener_hopf: f64,
    pub discrete_ordinates: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub max_rel_diff: f64,
    pub mean_rel_diff: f64,
    pub nodes_compared: usize,
    pub min_abs_mu: f64,
    pub threshold: f64,
    pub within_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSection {
    pub config: McConfig,
    pub escaped_fraction: f64,
    pub escaped_std_error: f64,
    pub absorbed_fraction: f64,
    pub capped: u64,
    /// WH cumulative albedo in current mode, the quantity the escaped
    /// fraction estimates.
    pub wh_current: f64,
    /// `(escaped_fraction - wh_current) / escaped_std_error`.
    pub deviation_sigmas: f64,
    pub bin_centers_deg: Vec<f64>,
    pub histogram: Vec<f64>,
    pub histogram_std_error: Vec<f64>,
    pub psi_mc: Vec<f64>,
    pub psi_mc_std_error: Vec<f64>,
    pub psi_wh_at_centers: Vec<f64>,
}

impl McSection {
    /// Largest per-bin `|psi_mc - psi_wh| / sigma` over bins with
    /// `|mu| >= MIN_MC_BIN_MU`.
    pub fn max_bin_sigmas(&self) -> f64 {
        self.bin_centers_deg
            .iter()
            .enumerate()
            .filter(|(_, t)| t.to_radians().cos().abs() >= MIN_MC_BIN_MU)
            .map(|(k, _)| {
                (self.psi_mc[k] - self.psi_wh_at_centers[k]).abs() / self.psi_mc_std_error[k]
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub omega: f64,
    pub s_plus: f64,
    pub theta0_deg: f64,
    pub subintervals: usize,
    pub gl_order: usize,
    pub nodes: usize,
    pub winnow: usize,
    pub kappa_nodes: usize,
    pub kappa_tolerance: f64,
    pub min_positive_eigenvalue: f64,
    pub eigen_pairing_defect: f64,
    pub reentrant_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metadata: Metadata,
    pub nodes: Vec<NodeRow>,
    pub cumulative: Vec<CumulativeEntry>,
    pub discrepancy: Discrepancy,
    pub normalization_note: String,
    pub monte_carlo: Option<McSection>,
}

const NORMALIZATION_NOTE: &str = "current = (1/mu0) sum w|mu|psi is the emergent-to-incident \
current ratio and the quantity Monte Carlo estimates; flat = sum w psi; flat-normalized = \
(1/mu0) sum w psi; current-mu0sq = (1/mu0^2) sum w|mu|psi is not a physical ratio but is the mode that reproduces the \
reference cumulative values 0.29253 (omega 0.60) and 1.14332 (omega 0.99).";

impl ComparisonReport {
    pub fn cumulative(&self, mode: CumulativeMode) -> Option<&CumulativeEntry> {
        self.cumulative.iter().find(|c| c.mode == mode)
    }

    pub fn wh_pattern(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|r| (r.theta_deg, r.psi_wh)).collect()
    }

    /// Every floating-point value in the report is finite.
    pub fn all_finite(&self) -> bool {
        let m = &self.metadata;
        let mut xs = vec![
            m.omega,
            m.s_plus,
            m.theta0_deg,
            m.kappa_tolerance,
            m.min_positive_eigenvalue,
            m.eigen_pairing_defect,
            m.reentrant_residual,
            self.discrepancy.max_rel_diff,
            self.discrepancy.mean_rel_diff,
            self.discrepancy.min_abs_mu,
            self.discrepancy.threshold,
        ];
        for r in &self.nodes {
            xs.extend([r.theta_deg, r.mu, r.psi_wh, r.psi_do, r.rel_diff]);
        }
        for c in &self.cumulative {
            xs.extend([c.wiener_hopf, c.discrete_ordinates]);
        }
        if let Some(mc) = &self.monte_carlo {
            xs.extend([
                mc.escaped_fraction,
                mc.escaped_std_error,
                mc.absorbed_fraction,
                mc.wh_current,
                mc.deviation_sigmas,
            ]);
            for v in [
                &mc.bin_centers_deg,
                &mc.histogram,
                &mc.histogram_std_error,
                &mc.psi_mc,
                &mc.psi_mc_std_error,
                &mc.psi_wh_at_centers,
            ] {
                xs.extend(v.iter().copied());
            }
        }
        xs.iter().all(|x| x.is_finite())
    }

    /// 0 when the WH/DO discrepancy is within the threshold, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.discrepancy.within_threshold {
            0
        } else {
            1
        }
    }
}

fn relative_difference(reference: f64, other: f64) -> f64 {
    let d = (other - reference).abs();
    if d == 0.0 {
        0.0
    } else if reference == 0.0 {
        d
    } else {
        d / reference.abs()
    }
}

/// Runs WH and DO on the configured grid, and MC when requested.
pub fn run_comparison(config: &RunConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let params = MediumParams::new(config.omega)?;
    let inc = IncidenceSpec::from_degrees(config.theta0_deg)?;
    let grid = AngularGrid::new(config.subintervals, config.gl_order)?;

    let fac = KappaFactorization::new(params);
    let grazing = grid
        .backward()
        .map(|k| grid.mu()[k].abs())
        .fold(f64::INFINITY, f64::min);
    fac.validate(&[1.0 / inc.mu0(), 1.0, 1.0 / grazing])?;
    let wh = pattern_on_grid(&fac, &inc, &grid)?;

    let sys = EigenSystem::solve(&grid, &params, &inc)?;
    let psi0 = sys.flux_at_boundary();
    let reentrant = sys.reentrant_residual(&grid, &psi0);
    let dor = sys.albedo(&grid)?;

    let nodes: Vec<NodeRow> = grid
        .backward()
        .zip(wh.values.iter().zip(&dor.values))
        .map(|(k, (&a, &b))| NodeRow {
            theta_deg: grid.theta()[k].to_degrees(),
            mu: grid.mu()[k],
            psi_wh: a,
            psi_do: b,
            rel_diff: relative_difference(a, b),
        })
        .collect();
    let compared: Vec<f64> = nodes
        .iter()
        .filter(|r| r.mu.abs() >= MIN_COMPARED_MU)
        .map(|r| r.rel_diff)
        .collect();
    let max_rel_diff = compared.iter().copied().fold(0.0, f64::max);
    let mean_rel_diff = if compared.is_empty() {
        0.0
    } else {
        compared.iter().sum::<f64>() / compared.len() as f64
    };
    let discrepancy = Discrepancy {
        max_rel_diff,
        mean_rel_diff,
        nodes_compared: compared.len(),
        min_abs_mu: MIN_COMPARED_MU,
        threshold: config.threshold,
        within_threshold: max_rel_diff <= config.threshold,
    };
    info!(
        "omega {}: WH/DO max rel diff {:.3e}, mean {:.3e} over {} nodes",
        config.omega,
        max_rel_diff,
        mean_rel_diff,
        compared.len()
    );

    let cumulative = CumulativeMode::ALL
        .into_iter()
        .map(|mode| {
            Ok(CumulativeEntry {
                mode,
                wiener_hopf: cumulative_albedo(&wh, &grid, &inc, mode)?,
                discrete_ordinates: cumulative_albedo(&dor, &grid, &inc, mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let wh_current = cumulative[0].wiener_hopf;

    let monte_carlo = match config.mc {
        Some(settings) => Some(mc_section(
            &fac,
            &params,
            &inc,
            settings.to_config(),
            wh_current,
        )?),
        None => None,
    };

    Ok(ComparisonReport {
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            omega: params.omega(),
            s_plus: params.s_plus(),
            theta0_deg: config.theta0_deg,
            subintervals: config.subintervals,
            gl_order: config.gl_order,
            nodes: grid.len(),
            winnow: config.winnow,
            kappa_nodes: fac.quadrature().node_count(),
            kappa_tolerance: fac.tolerance(),
            min_positive_eigenvalue: sys.basis.min_positive().unwrap_or(0.0),
            eigen_pairing_defect: sys.basis.pairing_defect(),
            reentrant_residual: reentrant,
        },
        nodes,
        cumulative,
        discrepancy,
        normalization_note: NORMALIZATION_NOTE.to_string(),
        monte_carlo,
    })
}

fn mc_section(
    fac: &KappaFactorization,
    params: &MediumParams,
    inc: &IncidenceSpec,
    cfg: McConfig,
    wh_current: f64,
) -> Result<McSection> {
    let r = simulate(params, inc, &cfg)?;
    let pattern: AlbedoPattern = r.to_pattern();
    let psi_wh_at_centers = r
        .bin_centers
        .iter()
        .map(|&t| albedo_wh(fac, inc, t))
        .collect::<Result<Vec<_>>>()?;
    let deviation_sigmas = if r.escaped_std_error > 0.0 {
        (r.escaped_fraction - wh_current) / r.escaped_std_error
    } else {
        0.0
    };
    Ok(McSection {
        config: cfg,
        escaped_fraction: r.escaped_fraction,
        escaped_std_error: r.escaped_std_error,
        absorbed_fraction: r.absorbed_fraction,
        capped: r.capped,
        wh_current,
        deviation_sigmas,
        bin_centers_deg: r.bin_centers.iter().map(|t| t.to_degrees()).collect(),
        histogram: r.histogram.clone(),
        histogram_std_error: r.histogram_std_error.clone(),
        psi_mc_std_error: r.pattern_std_error(),
        psi_mc: pattern.values,
        psi_wh_at_centers,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AlbedoError + '_ {
    move |source| AlbedoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// CSV with one row per backward node.
pub fn render_csv(report: &ComparisonReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| AlbedoError::Config(format!("csv: {e}"));
    w.write_record(["theta_deg", "mu", "psi_wh", "psi_do", "rel_diff"])
        .map_err(csv_err)?;
    for r in &report.nodes {
        w.write_record(
            [r.theta_deg, r.mu, r.psi_wh, r.psi_do, r.rel_diff].map(|x| format!("{x:.15e}")),
        )
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| AlbedoError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

pub fn render_json(report: &ComparisonReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Writes the requested formats into `config.out_dir` and returns the
/// paths written.
pub fn emit_outputs(report: &ComparisonReport, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for f in &config.formats {
        let path = dir.join(f.file_name());
        let body = match f {
            Format::Csv => render_csv(report)?,
            Format::Json => render_json(report)?,
            Format::Svg => render_svg(report, config.winnow),
        };
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
