//! Minimal deterministic SVG output: line/marker plots with optional
//! log-scaled x axis, and matrix heatmaps.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Index into the built-in palette; series sharing a color share an index.
    pub color: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, log_x: bool) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x,
            series: Vec::new(),
        }
    }

    pub fn add(&mut self, label: &str, points: Vec<(f64, f64)>, style: Style, color: usize) -> &mut Self {
        self.series.push(Series {
            label: label.into(),
            points,
            style,
            color,
        });
        self
    }

    pub fn to_svg(&self) -> String {
        let fx = |x: f64| if self.log_x { x.log10() } else { x };
        let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0);
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied().filter(usable))
            .map(|(x, y)| (fx(x), y))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;

        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        let x_ticks: Vec<f64> = if self.log_x {
            (x0.ceil() as i64..=x1.floor() as i64).map(|k| k as f64).collect()
        } else {
            nice_ticks(x0, x1, 6)
        };
        for t in x_ticks {
            let x = sx(t);
            let label = if self.log_x {
                tick_label(10f64.powf(t))
            } else {
                tick_label(t)
            };
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for t in nice_ticks(y0, y1, 6) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[s.color % PALETTE.len()];
            let coords: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(usable)
                .map(|(x, y)| (sx(fx(x)), sy(y)))
                .collect();
            match s.style {
                Style::Line | Style::Dashed => {
                    let path: Vec<String> = coords.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let dash = if s.style == Style::Dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        path.join(" ")
                    );
                }
                Style::Markers => {
                    for (x, y) in &coords {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="none" stroke="{color}"/>"#
                        );
                    }
                }
            }
            let ly = TOP + 12.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 10.0;
            match s.style {
                Style::Markers => {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="none" stroke="{color}"/>"#,
                        lx + 10.0,
                        ly - 4.0
                    );
                }
                _ => {
                    let dash = if s.style == Style::Dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        out,
                        r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        ly - 4.0,
                        lx + 20.0,
                        ly - 4.0
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
                lx + 26.0,
                esc(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Square matrix as a diverging heatmap (blue negative, red positive), with
/// each cell's value printed.
pub fn heatmap(title: &str, matrix: &[Vec<f64>], labels: &[&str]) -> String {
    let n = matrix.len();
    let cell = 70.0;
    let left = 60.0;
    let top = 50.0;
    let size = left + cell * n as f64 + 20.0;
    let scale = matrix
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0}" height="{:.0}" viewBox="0 0 {size:.0} {:.0}" font-family="sans-serif" font-size="12">"#,
        size + 10.0,
        size + 10.0
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        size / 2.0,
        esc(title)
    );
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let a = (v.abs() / scale).clamp(0.0, 1.0);
            let shade = (255.0 * (1.0 - a)).round() as u8;
            let fill = if v >= 0.0 {
                format!("rgb(255,{shade},{shade})")
            } else {
                format!("rgb({shade},{shade},255)")
            };
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{fill}" stroke="gray"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                v
            );
        }
    }
    for (k, l) in labels.iter().enumerate().take(n) {
        let c = cell * k as f64 + cell / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text><text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left - 6.0,
            top + c + 4.0,
            esc(l),
            left + c,
            top + cell * n as f64 + 18.0,
            esc(l)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_deterministic_and_well_formed() {
        let mut p = Plot::new("chi T", "T (K)", "value", true);
        p.add("vqt", vec![(0.1, 0.0), (1.0, 0.2), (10.0, 2.4)], Style::Markers, 0);
        p.add(
            "analytic",
            vec![(0.1, 0.0), (1.0, 0.19), (10.0, 2.45)],
            Style::Dashed,
            0,
        );
        let a = p.to_svg();
        assert_eq!(a, p.to_svg());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("stroke-dasharray"));
        assert_eq!(a.matches("<circle").count(), 4);
    }

    #[test]
    fn empty_and_degenerate_plots_render() {
        let p = Plot::new("empty", "x", "y", false);
        assert!(p.to_svg().contains("</svg>"));
        let mut q = Plot::new("flat", "x", "y", true);
        q.add("c", vec![(1.0, 2.0), (-1.0, 3.0), (f64::NAN, 1.0)], Style::Line, 1);
        assert!(!q.to_svg().contains("NaN"));
    }

    #[test]
    fn heatmap_cells() {
        let m = vec![vec![0.5, -0.5], vec![-0.5, 0.5]];
        let svg = heatmap("rho", &m, &["0", "1"]);
        assert_eq!(svg.matches("<rect x=").count(), 4);
        assert!(svg.contains("-0.500"));
    }
}
