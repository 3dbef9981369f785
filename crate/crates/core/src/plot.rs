//! Minimal deterministic SVG charts: a point cloud with overlaid lines.

use std::fmt::Write;

const W: f64 = 800.0;
const H: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// A polyline; `None` breaks it. The third coordinate is stroke opacity.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub color: String,
    pub width: f64,
    pub points: Vec<Option<(f64, f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub lines: Vec<Line>,
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.03;
    (lo - pad, hi + pad)
}

/// Round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let line_pts = self.lines.iter().flat_map(|l| l.points.iter().flatten());
        let (x0, x1) = extent(self.points.iter().map(|p| p.0).chain(line_pts.clone().map(|p| p.0)));
        let (y0, y1) = extent(self.points.iter().map(|p| p.1).chain(line_pts.map(|p| p.1)));
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, W / 2.0, esc(&self.title));
        let (bx, by) = (LEFT, H - BOTTOM);
        let _ = writeln!(s, r#"<path d="M{bx} {TOP} L{bx} {by} L{} {by}" stroke="black" fill="none"/>"#, W - RIGHT);
        for t in ticks(x0, x1, 8) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                sx(t),
                by + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1, 6) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                bx - 6.0,
                sy(t) + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        let _ = writeln!(s, r#"<g fill="steelblue" fill-opacity="0.35">"#);
        for &(x, y) in self.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#, sx(x), sy(y));
        }
        let _ = writeln!(s, "</g>");
        for line in &self.lines {
            let _ = writeln!(s, r#"<g stroke="{}" stroke-width="{}" fill="none"><title>{}</title>"#, esc(&line.color), line.width, esc(&line.label));
            for pair in line.points.windows(2) {
                if let [Some(a), Some(b)] = pair {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-opacity="{:.3}"/>"#,
                        sx(a.0),
                        sy(a.1),
                        sx(b.0),
                        sy(b.1),
                        a.2.min(b.2)
                    );
                }
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_cover_range() {
        assert_eq!(ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(1803.0, 1987.0, 8);
        assert!(t.iter().all(|v| v % 50.0 == 0.0) && t[0] >= 1803.0);
    }

    #[test]
    fn svg_is_deterministic_and_escaped() {
        let chart = Chart {
            title: "a < b".into(),
            x_label: "year".into(),
            y_label: "PC1".into(),
            points: vec![(1.0, 2.0), (2.0, 3.0)],
            lines: vec![Line {
                label: "median".into(),
                color: "black".into(),
                width: 2.0,
                points: vec![Some((1.0, 2.0, 1.0)), None, Some((2.0, 2.5, 0.5)), Some((3.0, 2.7, 0.5))],
            }],
        };
        let a = chart.to_svg();
        assert_eq!(a, chart.to_svg());
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("<line ").count(), 1);
        assert_eq!(a.matches("<circle ").count(), 2);
    }
}
