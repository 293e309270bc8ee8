use albedo_core::report::{render_csv, render_json, render_svg};
use albedo_core::{
    emit_outputs, run_comparison, ComparisonReport, CumulativeMode, Format, McSettings, RunConfig,
};

fn reference(omega: f64, mc: Option<McSettings>) -> ComparisonReport {
    run_comparison(&RunConfig {
        omega,
        mc,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn reference_grid_outputs() {
    let r = reference(0.6, None);
    let csv = render_csv(&r).unwrap();
    assert_eq!(csv.lines().count(), 1 + 200);

    let svg = render_svg(&r, 5);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let markers = doc
        .descendants()
        .filter(|n| {
            n.has_tag_name("circle")
                && n.parent().and_then(|p| p.attribute("class")) == Some("discrete-ordinates")
        })
        .count();
    assert_eq!(markers, 40);
}

#[test]
fn json_round_trips() {
    let r = reference(
        0.99,
        Some(McSettings {
            photons: 20_000,
            seed: 4,
            bins: 18,
        }),
    );
    let text = render_json(&r).unwrap();
    let back: ComparisonReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn monte_carlo_bins_follow_the_analytic_pattern() {
    for omega in [0.6, 0.99] {
        let r = reference(
            omega,
            Some(McSettings {
                photons: 1_000_000,
                seed: 2024,
                bins: 36,
            }),
        );
        let mc = r.monte_carlo.as_ref().unwrap();
        assert!(mc.capped == 0);
        let worst = mc.max_bin_sigmas();
        assert!(worst <= 3.0, "omega {omega}: worst bin {worst:.2} sigma");
    }
}

#[test]
fn current_mode_stays_below_one_where_mu0sq_mode_exceeds_it() {
    let r = reference(0.99, None);
    let current = r
        .cumulative(CumulativeMode::Current)
        .unwrap()
        .discrete_ordinates;
    let alt = r
        .cumulative(CumulativeMode::CurrentOverMu0Squared)
        .unwrap()
        .discrete_ordinates;
    assert!(current < 1.0);
    assert!(alt > 1.0);
}

#[test]
fn emits_requested_files_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        omega: 0.3,
        subintervals: 8,
        gl_order: 4,
        out_dir: tmp.path().join("nested/out"),
        formats: vec![Format::Csv, Format::Svg],
        ..Default::default()
    };
    let r = run_comparison(&cfg).unwrap();
    let written = emit_outputs(&r, &cfg).unwrap();
    assert_eq!(written.len(), 2);
    assert!(cfg.out_dir.join("pattern.csv").exists());
    assert!(cfg.out_dir.join("pattern.svg").exists());
    assert!(!cfg.out_dir.join("report.json").exists());
}

#[test]
fn threshold_drives_exit_code() {
    let mut cfg = RunConfig {
        omega: 0.9,
        subintervals: 4,
        gl_order: 1,
        ..Default::default()
    };
    let coarse = run_comparison(&cfg).unwrap();
    assert!(coarse.discrepancy.max_rel_diff > 1e-6);
    cfg.threshold = coarse.discrepancy.max_rel_diff / 2.0;
    assert_eq!(run_comparison(&cfg).unwrap().exit_code(), 1);
    cfg.threshold = 1.0;
    assert_eq!(run_comparison(&cfg).unwrap().exit_code(), 0);
}
