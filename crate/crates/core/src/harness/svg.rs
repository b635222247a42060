//! Minimal SVG line charts: axes with ticks, polylines, dashed lines and
//! markers, and a grid layout for multi-panel figures.

use std::fmt::Write as _;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#111111", "#ff7f0e", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: Style,
    pub color: String,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>, style: Style, color: &str) -> Self {
        Series {
            name: name.into(),
            x,
            y,
            style,
            color: color.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub width: f64,
    pub height: f64,
}

const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 44.0;

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            width: 420.0,
            height: 300.0,
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                if x.is_finite() && y.is_finite() {
                    xr = (xr.0.min(x), xr.1.max(x));
                    yr = (yr.0.min(y), yr.1.max(y));
                }
            }
        }
        let fix = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 <= f64::EPSILON * r.1.abs().max(1.0) {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        (fix(xr), fix(yr))
    }

    /// Renders the plot as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            w = self.width,
            h = self.height
        );
        self.render_into(&mut out, 0.0, 0.0);
        out.push_str("</svg>\n");
        out
    }

    fn render_into(&self, out: &mut String, ox: f64, oy: f64) {
        let (xr, yr) = self.bounds();
        let (xt, yt) = (nice_ticks(xr.0, xr.1, 5), nice_ticks(yr.0, yr.1, 5));
        let x0 = xt.first().copied().unwrap_or(xr.0).min(xr.0);
        let x1 = xt.last().copied().unwrap_or(xr.1).max(xr.1);
        let y0 = yt.first().copied().unwrap_or(yr.0).min(yr.0);
        let y1 = yt.last().copied().unwrap_or(yr.1).max(yr.1);
        let pw = self.width - MARGIN_L - MARGIN_R;
        let ph = self.height - MARGIN_T - MARGIN_B;
        let px = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| oy + MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;

        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="white" stroke="#444" stroke-width="1"/>"##,
            ox + MARGIN_L,
            oy + MARGIN_T,
            pw,
            ph
        );
        for &t in &xt {
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{a:.2}" x2="{x:.2}" y2="{b:.2}" stroke="#444"/><text x="{x:.2}" y="{c:.2}" font-size="10" text-anchor="middle">{}</text>"##,
                tick_label(t),
                x = px(t),
                a = oy + MARGIN_T + ph,
                b = oy + MARGIN_T + ph + 4.0,
                c = oy + MARGIN_T + ph + 15.0
            );
        }
        for &t in &yt {
            let _ = writeln!(
                out,
                r##"<line x1="{a:.2}" y1="{y:.2}" x2="{b:.2}" y2="{y:.2}" stroke="#444"/><text x="{c:.2}" y="{d:.2}" font-size="10" text-anchor="end">{}</text>"##,
                tick_label(t),
                y = py(t),
                a = ox + MARGIN_L - 4.0,
                b = ox + MARGIN_L,
                c = ox + MARGIN_L - 6.0,
                d = py(t) + 3.5
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + 17.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + self.height - 8.0,
            escape(&self.x_label)
        );
        let (lx, ly) = (ox + 14.0, oy + MARGIN_T + ph / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{lx:.2}" y="{ly:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
            escape(&self.y_label)
        );

        for s in &self.series {
            let pts: Vec<(f64, f64)> = s
                .x
                .iter()
                .zip(&s.y)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| (px(x), py(y)))
                .collect();
            match s.style {
                Style::Markers => {
                    for (x, y) in &pts {
                        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.2" fill="{}"/>"#, s.color);
                    }
                }
                Style::Line | Style::Dashed => {
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let list: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.6"{dash} points="{}"/>"#,
                        s.color,
                        list.join(" ")
                    );
                }
            }
        }

        for (k, s) in self.series.iter().enumerate() {
            let (x, y) = (ox + MARGIN_L + 8.0, oy + MARGIN_T + 12.0 + 13.0 * k as f64);
            match s.style {
                Style::Markers => {
                    let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, x + 8.0, y - 3.5, s.color);
                }
                _ => {
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="4 3""# } else { "" };
                    let _ = write!(
                        out,
                        r#"<line x1="{x:.2}" y1="{a:.2}" x2="{b:.2}" y2="{a:.2}" stroke="{}" stroke-width="1.6"{dash}/>"#,
                        s.color,
                        a = y - 3.5,
                        b = x + 16.0
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{y:.2}" font-size="10">{}</text>"#,
                x + 20.0,
                escape(&s.name)
            );
        }
    }
}

/// Lays panels out row-major in `cols` columns.
pub fn grid_svg(panels: &[Plot], cols: usize) -> String {
    let cols = cols.max(1);
    let (w, h) = panels
        .iter()
        .fold((0.0f64, 0.0f64), |(w, h), p| (w.max(p.width), h.max(p.height)));
    let rows = panels.len().div_ceil(cols);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{tw}" height="{th}" viewBox="0 0 {tw} {th}" font-family="sans-serif">"#,
        tw = w * cols.min(panels.len().max(1)) as f64,
        th = h * rows as f64
    );
    for (i, p) in panels.iter().enumerate() {
        p.render_into(&mut out, w * (i % cols) as f64, h * (i / cols) as f64);
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(t: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    let a = t.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{t:.1e}")
    } else {
        let s = format!("{t:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Round-number ticks covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let mut ticks = Vec::new();
    let mut k = 0;
    loop {
        let t = start + k as f64 * step;
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        if t >= hi - step * 1e-9 || k > 100 {
            break;
        }
        k += 1;
    }
    ticks
}
