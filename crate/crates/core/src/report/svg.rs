//! Static polar plot of the emergent pattern.
//!
//! Directions are drawn in the exterior half-plane: the outward normal
//! points up and a node at angle `theta` sits at the exterior angle
//! `sign(theta) (180 - |theta|)` degrees from it.

use std::fmt::Write;

use super::ComparisonReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const CX: f64 = 320.0;
const CY: f64 = 360.0;
const RADIUS: f64 = 280.0;

fn exterior_deg(theta_deg: f64) -> f64 {
    theta_deg.signum() * (180.0 - theta_deg.abs())
}

/// Smallest of 1, 2, 2.5, 5 times a power of ten that is `>= x`.
fn nice_ceiling(x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let p = 10f64.powf(x.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .map(|m| m * p)
        .find(|&v| v >= x * (1.0 - 1e-12))
        .unwrap_or(10.0 * p)
}

fn point(alpha_deg: f64, r: f64, scale: f64) -> (f64, f64) {
    let a = alpha_deg.to_radians();
    let rho = RADIUS * r / scale;
    (CX + rho * a.sin(), CY - rho * a.cos())
}

/// Renders the WH curve with every `winnow`-th DO node as a marker, plus
/// the MC histogram converted to flux when present.
pub fn render_svg(report: &ComparisonReport, winnow: usize) -> String {
    let winnow = winnow.max(1);
    let mut peak = report
        .nodes
        .iter()
        .flat_map(|n| [n.psi_wh, n.psi_do])
        .fold(0.0, f64::max);
    if let Some(mc) = &report.monte_carlo {
        peak = mc
            .bin_centers_deg
            .iter()
            .zip(&mc.psi_mc)
            .filter(|(t, _)| t.to_radians().cos().abs() >= super::MIN_MC_BIN_MU)
            .fold(peak, |a, (_, v)| a.max(*v));
    }
    let scale = nice_ceiling(peak);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{CX}" y="22" text-anchor="middle" font-size="15">Angular albedo pattern, omega = {:.2}, incidence {:.0} deg</text>"#,
        report.metadata.omega, report.metadata.theta0_deg
    );

    let _ = writeln!(
        s,
        r##"<g fill="none" stroke="#bbbbbb" stroke-width="0.8">"##
    );
    for i in 1..=4 {
        let rho = RADIUS * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<path d="M {:.2} {CY} A {rho:.2} {rho:.2} 0 0 1 {:.2} {CY}"/>"#,
            CX - rho,
            CX + rho
        );
    }
    for k in -3..=3 {
        let (x, y) = point(30.0 * k as f64, scale, scale);
        let _ = writeln!(s, r#"<line x1="{CX}" y1="{CY}" x2="{x:.2}" y2="{y:.2}"/>"#);
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g fill="#444444">"##);
    for k in -3..=3 {
        let alpha = 30.0 * k as f64;
        let (x, y) = point(alpha, scale * 1.07, scale);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle">{alpha:.0}</text>"#
        );
    }
    for i in 1..=4 {
        let r = scale * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            CX + RADIUS * i as f64 / 4.0,
            CY + 14.0,
            format_tick(r)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{CX}" y="{:.2}" text-anchor="middle">exterior angle from the outward normal, degrees</text>"#,
        CY + 34.0
    );
    let _ = writeln!(s, "</g>");

    let mut order: Vec<usize> = (0..report.nodes.len()).collect();
    order.sort_by(|&a, &b| {
        exterior_deg(report.nodes[a].theta_deg).total_cmp(&exterior_deg(report.nodes[b].theta_deg))
    });
    let pts: Vec<String> = order
        .iter()
        .map(|&k| {
            let n = &report.nodes[k];
            let (x, y) = point(exterior_deg(n.theta_deg), n.psi_wh, scale);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline class="wiener-hopf" fill="none" stroke="#1f4e9c" stroke-width="1.6" points="{}"/>"##,
        pts.join(" ")
    );

    let _ = writeln!(
        s,
        r##"<g class="discrete-ordinates" fill="none" stroke="#c0392b" stroke-width="1.2">"##
    );
    for (i, n) in report.nodes.iter().enumerate() {
        if i % winnow != 0 {
            continue;
        }
        let (x, y) = point(exterior_deg(n.theta_deg), n.psi_do, scale);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
    }
    let _ = writeln!(s, "</g>");

    if let Some(mc) = &report.monte_carlo {
        let _ = writeln!(s, r##"<g class="monte-carlo" fill="#2e8b57">"##);
        for (t, v) in mc.bin_centers_deg.iter().zip(&mc.psi_mc) {
            if t.to_radians().cos().abs() < super::MIN_MC_BIN_MU {
                continue;
            }
            let (x, y) = point(exterior_deg(*t), *v, scale);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="5" height="5"/>"#,
                x - 2.5,
                y - 2.5
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(
        s,
        r##"<g font-size="11"><line x1="24" y1="50" x2="48" y2="50" stroke="#1f4e9c" stroke-width="1.6"/><text x="54" y="54">Wiener-Hopf</text>
<circle cx="36" cy="68" r="3" fill="none" stroke="#c0392b" stroke-width="1.2"/><text x="54" y="72">discrete ordinates (every {winnow})</text>"##
    );
    if report.monte_carlo.is_some() {
        let _ = writeln!(
            s,
            r##"<rect x="33.5" y="83.5" width="5" height="5" fill="#2e8b57"/><text x="54" y="90">Monte Carlo</text>"##
        );
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

fn format_tick(r: f64) -> String {
    let t = format!("{r:.4}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}
