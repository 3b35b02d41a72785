//! Minimal deterministic SVG charts: line plots and a heatmap.
//!
//! Output depends only on the input numbers, so re-plotting from a saved CSV
//! reproduces the same bytes.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[iy][ix]`.
    pub values: Vec<Vec<f64>>,
    /// Cells to outline, as `(ix, iy)`.
    pub marked: Vec<(usize, usize)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions covering `[lo, hi]` at a 1/2/5 step.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x.0, x.1) {
        let px = x0 + (t - x.0) / (x.1 - x.0) * (x1 - x0);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y.0, y.1) {
        let py = y0 - (t - y.0) / (y.1 - y.0) * (y0 - y1);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

pub fn line_svg(plot: &LinePlot) -> String {
    let x = bounds(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (_, yhi) = bounds(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let y = (0.0, if yhi > 0.0 { yhi * 1.05 } else { 1.0 });
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let px = |v: f64| x0 + (v - x.0) / (x.1 - x.0) * (x1 - x0);
    let py = |v: f64| y0 - (v - y.0) / (y.1 - y.0) * (y0 - y1);

    let mut out = String::new();
    header(&mut out, &plot.title);
    axes(&mut out, x, y, &plot.x_label, &plot.y_label);
    for (k, s) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let mut d = String::new();
        for (i, &(a, b)) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, px(a), py(b));
        }
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#
        );
        if s.points.len() <= 60 {
            for &(a, b) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(a), py(b));
            }
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            x1 + 12.0,
            x1 + 36.0,
            x1 + 42.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// White to dark blue.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Cell edges around sorted grid values.
fn edges(v: &[f64]) -> Vec<f64> {
    if v.len() == 1 {
        return vec![v[0] - 0.5, v[0] + 0.5];
    }
    let mut e = Vec::with_capacity(v.len() + 1);
    e.push(v[0] - (v[1] - v[0]) / 2.0);
    for w in v.windows(2) {
        e.push((w[0] + w[1]) / 2.0);
    }
    let n = v.len();
    e.push(v[n - 1] + (v[n - 1] - v[n - 2]) / 2.0);
    e
}

pub fn heatmap_svg(map: &Heatmap) -> String {
    let ex = edges(&map.xs);
    let ey = edges(&map.ys);
    let x = (ex[0], ex[ex.len() - 1]);
    let y = (ey[0], ey[ey.len() - 1]);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let px = |v: f64| x0 + (v - x.0) / (x.1 - x.0) * (x1 - x0);
    let py = |v: f64| y0 - (v - y.0) / (y.1 - y.0) * (y0 - y1);
    let (vlo, vhi) = bounds(map.values.iter().flatten().copied());

    let mut out = String::new();
    header(&mut out, &map.title);
    for (iy, row) in map.values.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            let (ax, bx) = (px(ex[ix]), px(ex[ix + 1]));
            let (ay, by) = (py(ey[iy + 1]), py(ey[iy]));
            let marked = map.marked.contains(&(ix, iy));
            let stroke = if marked { r##" stroke="#d62728" stroke-width="2""## } else { "" };
            let _ = writeln!(
                out,
                r#"<rect x="{ax:.2}" y="{ay:.2}" width="{:.2}" height="{:.2}" fill="{}"{stroke}/>"#,
                bx - ax,
                by - ay,
                shade((v - vlo) / (vhi - vlo))
            );
        }
    }
    axes(&mut out, x, y, &map.x_label, &map.y_label);
    // colour bar
    let (bx, bw) = (x1 + 30.0, 18.0);
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let h = (y0 - y1) / 50.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="{bw}" height="{:.2}" fill="{}"/>"#,
            y0 - (k + 1) as f64 * h,
            h + 0.5,
            shade(t)
        );
    }
    for (t, v) in [(0.0, vlo), (1.0, vhi)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}">{}</text>"#,
            bx + bw + 6.0,
            y0 - t * (y0 - y1) + 4.0,
            fmt_tick(v)
        );
    }
    if !map.marked.is_empty() {
        let _ = writeln!(
            out,
            r##"<rect x="{bx}" y="{}" width="12" height="12" fill="none" stroke="#d62728" stroke-width="2"/><text x="{}" y="{}">fair</text>"##,
            HEIGHT - 40.0,
            bx + 18.0,
            HEIGHT - 30.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(fmt_tick(0.6000000000000001), "0.6");
        assert_eq!(fmt_tick(-0.0), "0");
        assert!(ticks(0.0, 5000.0).contains(&1000.0));
    }

    #[test]
    fn line_plot_is_deterministic_and_escaped() {
        let p = LinePlot {
            title: "a < b".into(),
            x_label: "g".into(),
            y_label: "s".into(),
            series: vec![Series {
                name: "n0".into(),
                points: vec![(0.0, 0.0), (0.5, 0.1), (1.0, f64::NAN)],
                dashed: true,
            }],
        };
        let a = line_svg(&p);
        assert_eq!(a, line_svg(&p));
        assert!(a.contains("a &lt; b"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(!a.contains("NaN"));
    }

    #[test]
    fn heatmap_cells() {
        let h = Heatmap {
            title: "S".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            xs: vec![0.1, 0.2],
            ys: vec![0.1, 0.2, 0.3],
            values: vec![vec![0.0, 1.0]; 3],
            marked: vec![(1, 2)],
        };
        let svg = heatmap_svg(&h);
        assert_eq!(svg.matches("<rect").count(), 1 + 6 + 50 + 1);
        assert_eq!(shade(0.0), "#f7fbff");
        assert_eq!(shade(1.0), "#08306b");
    }
}
