use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use albedo_core::report::ComparisonReport;
use albedo_core::verify::identity_table;
use albedo_core::{emit_outputs, run_comparison, AlbedoError, AngularGrid, Format, RunConfig};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;

/// Half-space albedo of a fibered medium: Wiener-Hopf, discrete ordinates
/// and Monte Carlo side by side.
#[derive(Debug, Parser)]
#[command(name = "fiber-albedo", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve with both methods, compare, and write the requested outputs.
    Run {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the identity table and small-grid smoke checks.
    Verify,
    /// Reference setup at omega = 0.60.
    Figure3 {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reference setup at omega = 0.99.
    Figure4 {
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// JSON run configuration; flags given here override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long = "theta0-deg", allow_hyphen_values = true)]
    theta0_deg: Option<f64>,
    /// Angular subintervals M (multiple of 4).
    #[arg(long)]
    subintervals: Option<usize>,
    /// Gauss-Legendre order per subinterval.
    #[arg(long = "gl-order")]
    gl_order: Option<usize>,
    /// Plot every n-th discrete-ordinates node.
    #[arg(long)]
    winnow: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Photon count; enables the Monte Carlo run.
    #[arg(long = "mc-photons")]
    mc_photons: Option<u64>,
    /// Monte Carlo seed; enables the Monte Carlo run.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo histogram bins; enables the Monte Carlo run.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long)]
    formats: Option<String>,
    /// Largest accepted WH/DO relative difference.
    #[arg(long)]
    threshold: Option<f64>,
    /// Also write the angular grid (index, theta, mu, weight) as CSV.
    #[arg(long = "dump-grid")]
    dump_grid: Option<PathBuf>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.omega {
            cfg.omega = v;
        }
        if let Some(v) = self.theta0_deg {
            cfg.theta0_deg = v;
        }
        if let Some(v) = self.subintervals {
            cfg.subintervals = v;
        }
        if let Some(v) = self.gl_order {
            cfg.gl_order = v;
        }
        if let Some(v) = self.winnow {
            cfg.winnow = v;
        }
    }
}

impl OutputArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), AlbedoError> {
        if self.mc_photons.is_some() || self.seed.is_some() || self.bins.is_some() {
            let mut mc = cfg.mc.unwrap_or_default();
            if let Some(v) = self.mc_photons {
                mc.photons = v;
            }
            if let Some(v) = self.seed {
                mc.seed = v;
            }
            if let Some(v) = self.bins {
                mc.bins = v;
            }
            cfg.mc = Some(mc);
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.formats {
            cfg.formats = Format::parse_list(v)?;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        Ok(())
    }
}

fn error_block(kind: &str, message: &str, code: i32) {
    eprintln!("error: {message}");
    let block = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{block}");
}

fn print_summary(report: &ComparisonReport, written: &[PathBuf]) {
    let m = &report.metadata;
    let d = &report.discrepancy;
    println!(
        "omega {} theta0 {} deg, grid {} x {} = {} nodes",
        m.omega, m.theta0_deg, m.subintervals, m.gl_order, m.nodes
    );
    println!(
        "WH vs DO over {} nodes with |mu| >= {}: max rel diff {:.3e}, mean {:.3e} (threshold {:.1e})",
        d.nodes_compared, d.min_abs_mu, d.max_rel_diff, d.mean_rel_diff, d.threshold
    );
    println!("cumulative albedo        wiener-hopf   discrete-ordinates");
    for c in &report.cumulative {
        println!(
            "  {:<20} {:>13.8} {:>13.8}",
            c.mode.name(),
            c.wiener_hopf,
            c.discrete_ordinates
        );
    }
    if let Some(mc) = &report.monte_carlo {
        println!(
            "monte carlo: {} photons, escaped {:.6} +- {:.6} ({:+.2} sigma from WH current), absorbed {:.6}",
            mc.config.photons,
            mc.escaped_fraction,
            mc.escaped_std_error,
            mc.deviation_sigmas,
            mc.absorbed_fraction
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
}

fn run(cfg: RunConfig, dump_grid: Option<&PathBuf>) -> Result<i32, AlbedoError> {
    cfg.validate()?;
    if let Some(path) = dump_grid {
        let grid = AngularGrid::new(cfg.subintervals, cfg.gl_order)?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| AlbedoError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        fs::write(path, grid.to_csv()).map_err(|source| AlbedoError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let report = run_comparison(&cfg)?;
    let written = emit_outputs(&report, &cfg)?;
    print_summary(&report, &written);
    let code = report.exit_code();
    if code != 0 {
        error_block(
            "tolerance",
            &format!(
                "WH/DO max relative difference {:.3e} exceeds threshold {:.1e}",
                report.discrepancy.max_rel_diff, report.discrepancy.threshold
            ),
            code,
        );
    }
    Ok(code)
}

fn verify() -> Result<i32, AlbedoError> {
    let rows = identity_table()?;
    let mut failed = 0;
    for r in &rows {
        println!(
            "{}  {:<60} {:>10.3e}  tol {:.0e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.error,
            r.tolerance
        );
        failed += usize::from(!r.pass);
    }
    println!("{} checks, {} failed", rows.len(), failed);
    if failed > 0 {
        error_block("tolerance", &format!("{failed} identity checks failed"), 1);
        return Ok(1);
    }
    Ok(0)
}

fn figure(omega: f64, name: &str, output: &OutputArgs) -> Result<i32, AlbedoError> {
    let mut cfg = RunConfig {
        omega,
        out_dir: PathBuf::from("out").join(name),
        ..Default::default()
    };
    output.apply(&mut cfg)?;
    run(cfg, output.dump_grid.as_ref())
}

fn dispatch(cli: &Cli) -> Result<i32, AlbedoError> {
    match &cli.command {
        Command::Run { model, output } => {
            let mut cfg = match &model.config {
                Some(path) => RunConfig::from_file(path)?,
                None => RunConfig::default(),
            };
            model.apply(&mut cfg);
            output.apply(&mut cfg)?;
            run(cfg, output.dump_grid.as_ref())
        }
        Command::Verify => verify(),
        Command::Figure3 { output } => figure(0.60, "figure3", output),
        Command::Figure4 { output } => figure(0.99, "figure4", output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let rendered = e.render().to_string();
            let msg = rendered
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_string();
            let block = json!({ "error": { "kind": "usage", "message": msg, "exit_code": 3 } });
            eprintln!("{block}");
            return ExitCode::from(3);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            error_block(e.kind(), &e.to_string(), code);
            code
        }
    };
    ExitCode::from(code as u8)
}
