//! Bare-bones SVG line charts for QQ, KS and trajectory plots.

use std::fmt::Write as _;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// One drawn series.
pub enum Series {
    Line { points: Vec<(f64, f64)>, color: &'static str },
    Dots { points: Vec<(f64, f64)>, color: &'static str },
    /// Piecewise constant, holding each `y` until the next `x`.
    Steps { points: Vec<(f64, f64)>, end: f64, color: &'static str },
}

impl Series {
    fn points(&self) -> &[(f64, f64)] {
        match self {
            Series::Line { points, .. } | Series::Dots { points, .. } | Series::Steps { points, .. } => points,
        }
    }
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points().iter().copied());
        let mut xs = bounds(all().map(|p| p.0));
        for s in &self.series {
            if let Series::Steps { end, .. } = s {
                xs.1 = xs.1.max(*end);
            }
        }
        let ys = bounds(all().map(|p| p.1));
        let sx = |x: f64| MARGIN + (x - xs.0) / (xs.1 - xs.0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - ys.0) / (ys.1 - ys.0) * (HEIGHT - 2.0 * MARGIN);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (xs.0 + f * (xs.1 - xs.0), ys.0 + f * (ys.1 - ys.0));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(xv),
                y0 + 14.0,
                tick(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for s in &self.series {
            match s {
                Series::Line { points, color } => {
                    let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}"/>"#, line_path(points, &sx, &sy));
                }
                Series::Dots { points, color } => {
                    for &(x, y) in points {
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, sx(x), sy(y));
                    }
                }
                Series::Steps { points, end, color } => {
                    let mut stepped = Vec::with_capacity(2 * points.len());
                    for (i, &(x, y)) in points.iter().enumerate() {
                        let next = points.get(i + 1).map_or(*end, |p| p.0);
                        stepped.push((x, y));
                        stepped.push((next, y));
                    }
                    let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}"/>"#, line_path(&stepped, &sx, &sy));
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn line_path(points: &[(f64, f64)], sx: &impl Fn(f64) -> f64, sy: &impl Fn(f64) -> f64) -> String {
    let mut d = String::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, sx(x), sy(y));
    }
    d.trim_end().to_string()
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
