//! Static SVG figures: a row of panels, each with polylines and shaded
//! x-ranges.

use std::fmt::Write;

const PANEL: f64 = 420.0;
const PAD: f64 = 48.0;

pub struct Curve {
    pub points: Vec<[f64; 2]>,
    pub color: &'static str,
    pub dashed: bool,
    pub width: f64,
}

impl Curve {
    pub fn new(points: Vec<[f64; 2]>, color: &'static str) -> Curve {
        Curve {
            points,
            color,
            dashed: false,
            width: 1.5,
        }
    }

    pub fn dashed(mut self) -> Curve {
        self.dashed = true;
        self
    }
}

pub struct Panel {
    pub title: String,
    pub xlabel: &'static str,
    pub ylabel: &'static str,
    pub curves: Vec<Curve>,
    /// Shaded `[x0, x1]` bands.
    pub bands: Vec<(f64, f64)>,
    /// Same scale on both axes.
    pub equal: bool,
}

impl Panel {
    pub fn new(title: impl Into<String>, xlabel: &'static str, ylabel: &'static str, equal: bool) -> Panel {
        Panel {
            title: title.into(),
            xlabel,
            ylabel,
            curves: Vec::new(),
            bands: Vec::new(),
            equal,
        }
    }
}

fn bounds(p: &Panel) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in &p.curves {
        for q in c.points.iter().filter(|q| q[0].is_finite() && q[1].is_finite()) {
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
            }
        }
    }
    if !lo[0].is_finite() {
        return ([0.0, 1.0], [0.0, 1.0]);
    }
    let mut span = [hi[0] - lo[0], hi[1] - lo[1]];
    for k in 0..2 {
        if span[k] < 1e-9 {
            lo[k] -= 0.5;
            span[k] = 1.0;
        }
    }
    if p.equal {
        let s = span[0].max(span[1]);
        for k in 0..2 {
            lo[k] -= 0.5 * (s - span[k]);
            span[k] = s;
        }
    }
    let x = [lo[0] - 0.05 * span[0], lo[0] + 1.05 * span[0]];
    let y = [lo[1] - 0.05 * span[1], lo[1] + 1.05 * span[1]];
    (x, y)
}

fn panel_svg(out: &mut String, p: &Panel, x0: f64) {
    let (bx, by) = bounds(p);
    let w = PANEL - 2.0 * PAD;
    let sx = |x: f64| x0 + PAD + (x - bx[0]) / (bx[1] - bx[0]) * w;
    let sy = |y: f64| PAD + (by[1] - y) / (by[1] - by[0]) * w;
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{PAD:.2}" width="{w:.2}" height="{w:.2}" fill="none" stroke="#444"/>"##,
        x0 + PAD
    );
    for &(a, b) in &p.bands {
        let (a, b) = (sx(a.max(bx[0])), sx(b.min(bx[1])));
        let _ = writeln!(
            out,
            r##"<rect x="{a:.2}" y="{PAD:.2}" width="{:.2}" height="{w:.2}" fill="#f4c542" fill-opacity="0.35"/>"##,
            (b - a).max(1.0)
        );
    }
    for c in &p.curves {
        let mut pts = String::new();
        for q in c.points.iter().filter(|q| q[0].is_finite() && q[1].is_finite()) {
            let _ = write!(pts, "{:.2},{:.2} ", sx(q[0]), sy(q[1]));
        }
        let dash = if c.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"{dash}/>"#,
            pts.trim_end(),
            c.color,
            c.width
        );
    }
    let mid = x0 + PANEL / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="{mid:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        PAD - 16.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{mid:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        PANEL - 12.0,
        p.xlabel
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 + 16.0,
        PANEL / 2.0,
        x0 + 16.0,
        PANEL / 2.0,
        p.ylabel
    );
    let ty = PAD + w + 14.0;
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{ty:.2}" text-anchor="start" font-size="10">{:.3}</text>"#,
        sx(bx[0]),
        bx[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{ty:.2}" text-anchor="end" font-size="10">{:.3}</text>"#,
        sx(bx[1]),
        bx[1]
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{:.3}</text>"#,
        x0 + PAD - 4.0,
        PAD + w,
        by[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{:.3}</text>"#,
        x0 + PAD - 4.0,
        PAD + 8.0,
        by[1]
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(panels: &[Panel]) -> String {
    let width = PANEL * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL:.0}" viewBox="0 0 {width:.0} {PANEL:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        panel_svg(&mut out, p, i as f64 * PANEL);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_bands_and_curves() {
        let mut p = Panel::new("chi", "s", "chi", false);
        p.curves.push(Curve::new(
            vec![[0.0, 0.0], [1.0, 0.5], [2.0, 0.5], [3.0, 1.0]],
            "black",
        ));
        p.bands.push((1.0, 2.0));
        let a = render(&[p]);
        assert!(a.starts_with("<svg") && a.contains("polyline") && a.contains("fill-opacity"));
    }
}
