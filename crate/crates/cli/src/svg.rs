//! Minimal SVG plots: empirical-CDF overlays and QQ scatters. Plots are
//! cosmetic; no verdict ever depends on them.

use std::io::Write;

use crate::CliError;

const W: f64 = 560.0;
const H: f64 = 360.0;
const PAD: f64 = 40.0;

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{:.2},{:.2}", x, y))
        .collect();
    format!(
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
        coords.join(" ")
    )
}

fn frame(title: &str, body: &str) -> String {
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            r#"<rect width="{w}" height="{h}" fill="white"/>"#,
            r#"<text x="{tx}" y="20" font-family="monospace" font-size="13">{title}</text>"#,
            r##"<rect x="{pad}" y="{pad}" width="{iw}" height="{ih}" fill="none" stroke="#888"/>"##,
            "{body}</svg>\n"
        ),
        w = W,
        h = H,
        tx = PAD,
        pad = PAD,
        iw = W - 2.0 * PAD,
        ih = H - 2.0 * PAD,
        title = title,
        body = body,
    )
}

fn scale(points: &[(f64, f64)]) -> impl Fn(f64, f64) -> (f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let xr = (x1 - x0).max(1e-12);
    let yr = (y1 - y0).max(1e-12);
    move |x, y| {
        (
            PAD + (x - x0) / xr * (W - 2.0 * PAD),
            H - PAD - (y - y0) / yr * (H - 2.0 * PAD),
        )
    }
}

/// Overlay of two empirical CDFs.
pub fn cdf_overlay<Wr: Write>(
    mut out: Wr,
    title: &str,
    a: &[f64],
    b: &[f64],
) -> Result<(), CliError> {
    let steps = |vals: &[f64]| -> Vec<(f64, f64)> {
        let mut sorted = vals.to_vec();
        sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
        sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, (i + 1) as f64 / sorted.len() as f64))
            .collect()
    };
    let ca = steps(a);
    let cb = steps(b);
    let all: Vec<(f64, f64)> = ca.iter().chain(cb.iter()).cloned().collect();
    let sc = scale(&all);
    let map = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
        pts.iter().map(|&(x, y)| sc(x, y)).collect()
    };
    let body = format!(
        "{}{}",
        polyline(&map(&ca), "#1f77b4"),
        polyline(&map(&cb), "#d62728")
    );
    out.write_all(frame(title, &body).as_bytes())?;
    Ok(())
}

/// QQ scatter with the diagonal.
pub fn qq_plot<Wr: Write>(
    mut out: Wr,
    title: &str,
    points: &[(f64, f64)],
) -> Result<(), CliError> {
    let sc = scale(points);
    let lo = points
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .fold(f64::MAX, f64::min);
    let hi = points
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .fold(f64::MIN, f64::max);
    let diag = polyline(&[sc(lo, lo), sc(hi, hi)], "#aaaaaa");
    let mut dots = String::new();
    for &(a, b) in points {
        let (x, y) = sc(a, b);
        dots.push_str(&format!(
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="#1f77b4"/>"##
        ));
    }
    let body = format!("{diag}{dots}");
    out.write_all(frame(title, &body).as_bytes())?;
    Ok(())
}
