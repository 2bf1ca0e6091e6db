use std::fmt::Write as _;

use super::StudyResult;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Tip deflection (um) against voltage, one solid polyline per entry and a
/// dashed `G/3` line per distinct gap.
pub fn render_svg(result: &StudyResult) -> String {
    let mut limits: Vec<f64> = vec![];
    for e in &result.entries {
        if !limits.contains(&e.stability_limit) {
            limits.push(e.stability_limit);
        }
    }
    let pts = || result.converged_points().map(|(_, p)| p);
    let v_max = nice(pts().map(|p| p.voltage).fold(0.0, f64::max));
    let y_max = nice(
        pts()
            .map(|p| p.tip_deflection)
            .chain(limits.iter().copied())
            .fold(0.0, f64::max)
            * 1e6,
    );

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + v / v_max * plot_w;
    let sy = |y_um: f64| TOP + plot_h - y_um / y_max * plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Tip deflection vs voltage, varying {}</text>"#,
        LEFT + plot_w / 2.0,
        result.spec.vary
    )
    .unwrap();

    // axes and ticks
    let x0 = sx(0.0);
    let y0 = sy(0.0);
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, sx(v_max)).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{}" stroke="black"/>"#, sy(y_max)).unwrap();
    for i in 0..=TICKS {
        let v = v_max * i as f64 / TICKS as f64;
        let y = y_max * i as f64 / TICKS as f64;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(v),
            y0 + 18.0,
            label(v)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            sy(y) + 4.0,
            label(y)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Voltage (V)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">Tip deflection (um)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    for g3 in &limits {
        let y = sy(g3 * 1e6);
        writeln!(
            s,
            r#"<line x1="{x0}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            sx(v_max)
        )
        .unwrap();
    }

    for (k, e) in result.entries.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = e
            .curve
            .iter()
            .flat_map(|c| c.converged())
            .map(|p| format!("{:.2},{:.2}", sx(p.voltage), sy(p.tip_deflection * 1e6)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        writeln!(
            s,
            r#"<rect x="{lx}" y="{}" width="20" height="3" fill="{color}"/>"#,
            ly - 4.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{ly}">{} = {} um</text>"#,
            lx + 26.0,
            result.spec.vary,
            label(e.value * 1e6)
        )
        .unwrap();
    }
    let ly = TOP + 10.0 + 18.0 * result.entries.len() as f64;
    writeln!(
        s,
        r#"<text x="{}" y="{ly}" fill="gray">dashed: G/3</text>"#,
        WIDTH - RIGHT + 15.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

/// Smallest 1, 2 or 5 times a power of ten at or above `x`.
fn nice(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return 1.0;
    }
    let p = 10f64.powf(x.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * p)
        .find(|v| *v >= x * (1.0 - 1e-12))
        .unwrap()
}

fn label(x: f64) -> String {
    let r = (x * 1000.0).round() / 1000.0;
    format!("{r}")
}
