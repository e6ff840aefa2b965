//! Minimal static SVG 1.1 log-log chart: points, a fitted line and a
//! reference slope line.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 64.0;

#[derive(Clone, Debug)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Positive `(x, y)` points, drawn as markers.
    pub points: Vec<(f64, f64)>,
    /// Lines `ln y = intercept + slope ln x` as `(label, slope, intercept, colour)`.
    pub lines: Vec<(String, f64, f64, String)>,
}

impl LogLogPlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        LogLogPlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn line(mut self, label: impl Into<String>, slope: f64, intercept: f64, colour: impl Into<String>) -> Self {
        self.lines.push((label.into(), slope, intercept, colour.into()));
        self
    }

    pub fn render(&self) -> Result<String> {
        if self.points.is_empty() {
            return Err(Error::usage("plot", "nothing to plot"));
        }
        if self
            .points
            .iter()
            .any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite())
        {
            return Err(Error::domain("plot", "log-log points must be positive and finite"));
        }
        let lx: Vec<f64> = self.points.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = self.points.iter().map(|p| p.1.ln()).collect();
        let (mut x0, mut x1) = bounds(&lx);
        let (mut y0, mut y1) = bounds(&ly);
        for (_, s, b, _) in &self.lines {
            for x in [x0, x1] {
                let y = b + s * x;
                if y.is_finite() {
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        pad(&mut x0, &mut x1);
        pad(&mut y0, &mut y1);
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut s = String::new();
        writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        )
        .unwrap();
        let (ax0, ay0, ax1, ay1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
        writeln!(
            s,
            r#"<path d="M {ax0} {ay1} L {ax0} {ay0} L {ax1} {ay0}" fill="none" stroke="black" stroke-width="1"/>"#
        )
        .unwrap();
        for (lo, hi, horizontal) in [(x0, x1, true), (y0, y1, false)] {
            for t in ticks(lo, hi) {
                let label = format_tick(t.exp());
                if horizontal {
                    let x = sx(t);
                    writeln!(
                        s,
                        r#"<line x1="{x:.2}" y1="{ay0}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
                        ay0 + 5.0
                    )
                    .unwrap();
                    writeln!(
                        s,
                        r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
                        ay0 + 18.0
                    )
                    .unwrap();
                } else {
                    let y = sy(t);
                    writeln!(
                        s,
                        r#"<line x1="{}" y1="{y:.2}" x2="{ax0}" y2="{y:.2}" stroke="black"/>"#,
                        ax0 - 5.0
                    )
                    .unwrap();
                    writeln!(
                        s,
                        r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
                        ax0 - 8.0,
                        y + 4.0
                    )
                    .unwrap();
                }
            }
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        for (i, (label, slope, intercept, colour)) in self.lines.iter().enumerate() {
            let (a, b) = (x0, x1);
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"/>"#,
                sx(a),
                sy(intercept + slope * a),
                sx(b),
                sy(intercept + slope * b),
                escape(colour)
            )
            .unwrap();
            let ly = MARGIN + 14.0 + 16.0 * i as f64;
            writeln!(
                s,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.5"/>"#,
                WIDTH - MARGIN - 150.0,
                WIDTH - MARGIN - 130.0,
                escape(colour)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
                WIDTH - MARGIN - 124.0,
                ly + 4.0,
                escape(label)
            )
            .unwrap();
        }
        for (x, y) in lx.iter().zip(&ly) {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="black"/>"#,
                sx(*x),
                sy(*y)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

fn pad(lo: &mut f64, hi: &mut f64) {
    let span = (*hi - *lo).max(1e-3);
    *lo -= 0.08 * span;
    *hi += 0.08 * span;
}

/// Natural-log positions of powers of ten (or of 2 when the range is narrow).
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (d0, d1) = (lo / std::f64::consts::LN_10, hi / std::f64::consts::LN_10);
    let decades: Vec<f64> = (d0.ceil() as i32..=d1.floor() as i32)
        .map(|k| k as f64 * std::f64::consts::LN_10)
        .collect();
    if decades.len() >= 2 {
        return decades;
    }
    let (b0, b1) = (lo / std::f64::consts::LN_2, hi / std::f64::consts::LN_2);
    (b0.ceil() as i32..=b1.floor() as i32)
        .map(|k| k as f64 * std::f64::consts::LN_2)
        .collect()
}

fn format_tick(v: f64) -> String {
    if (1e-3..1e5).contains(&v) {
        let r = (v * 1e4).round() / 1e4;
        format!("{r}")
    } else {
        format!("{v:.0e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
