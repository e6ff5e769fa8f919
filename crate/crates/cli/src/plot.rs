//! Static SVG of a profile: the generating curve (t, r) and the scalar curvature R(s).

use std::fmt::Write as _;

use scalarforge::gluing::GluedManifold;
use scalarforge::warped::{scalar_curvature_gauss, GaussConvention};

const WIDTH: f64 = 720.0;
const PANEL: f64 = 300.0;
const MARGIN: f64 = 50.0;
const MAX_POINTS: usize = 2000;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    top: f64,
}

impl Frame {
    fn new(pts: &[(f64, f64)], extra_y: &[f64], top: f64) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
            top,
        };
        for &(x, y) in pts {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        for &y in extra_y {
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if f.x1 <= f.x0 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 <= f.y0 {
            f.y0 -= 1.0;
            f.y1 += 1.0;
        }
        f
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN);
        let py = self.top + PANEL
            - MARGIN
            - (y - self.y0) / (self.y1 - self.y0) * (PANEL - 2.0 * MARGIN);
        (px, py)
    }
}

fn thin(pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let stride = pts.len().div_ceil(MAX_POINTS).max(1);
    let last = pts.last().copied();
    let mut out: Vec<(f64, f64)> = pts.into_iter().step_by(stride).collect();
    if let Some(l) = last {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

fn polyline(o: &mut String, f: &Frame, pts: &[(f64, f64)], style: &str) {
    o.push_str("<polyline fill=\"none\" ");
    o.push_str(style);
    o.push_str(" points=\"");
    for &(x, y) in pts {
        let (px, py) = f.map(x, y);
        let _ = write!(o, "{px:.2},{py:.2} ");
    }
    o.push_str("\"/>\n");
}

fn axes(o: &mut String, f: &Frame, title: &str, xlabel: &str) {
    let (l, b) = f.map(f.x0, f.y0);
    let (r, t) = f.map(f.x1, f.y1);
    let _ = writeln!(o, "<rect x=\"{l:.2}\" y=\"{t:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#999\"/>", r - l, b - t);
    let _ = writeln!(
        o,
        "<text x=\"{l:.2}\" y=\"{:.2}\" font-size=\"14\">{title}</text>",
        t - 12.0
    );
    let _ = writeln!(
        o,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{xlabel}</text>",
        r - 20.0,
        b + 16.0
    );
    let _ = writeln!(
        o,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{:.4e}</text>",
        l,
        b + 16.0,
        f.x0
    );
    let _ = writeln!(
        o,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{:.4e}</text>",
        2.0, b, f.y0
    );
    let _ = writeln!(
        o,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{:.4e}</text>",
        2.0,
        t + 8.0,
        f.y1
    );
}

/// Two stacked panels; the R panel carries the background value n(n−1)K0 as a dashed line.
pub fn profile_svg(m: &GluedManifold) -> String {
    let curve: Vec<(f64, f64)> = m
        .curve
        .samples()
        .map(|(p, s)| (p.t_start + s.dt, s.r))
        .collect();
    let gauss = scalar_curvature_gauss(&m.curve, &m.bg, GaussConvention::Derived);
    let mut trace = Vec::new();
    for (p, row) in m.curve.pieces.iter().zip(&gauss) {
        for (s, r) in p.samples.iter().zip(row) {
            if let Some(r) = r {
                trace.push((p.s_start + s.sigma, *r));
            }
        }
    }
    let reference = m.bg.scalar();
    let curve = thin(curve);
    let trace = thin(trace);
    let fc = Frame::new(&curve, &[], 0.0);
    let fr = Frame::new(&trace, &[reference], PANEL);
    let mut o = String::new();
    let _ = writeln!(
        o,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{}\" viewBox=\"0 0 {WIDTH} {}\">",
        2.0 * PANEL,
        2.0 * PANEL
    );
    o.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    axes(&mut o, &fc, "generating curve (t, r)", "t");
    polyline(
        &mut o,
        &fc,
        &curve,
        "stroke=\"#1f4e9c\" stroke-width=\"1.5\"",
    );
    axes(
        &mut o,
        &fr,
        &format!("scalar curvature R(s), reference {reference}"),
        "s",
    );
    let (l, y) = fr.map(fr.x0, reference);
    let (r, _) = fr.map(fr.x1, reference);
    let _ = writeln!(
        o,
        "<line class=\"reference\" x1=\"{l:.2}\" y1=\"{y:.2}\" x2=\"{r:.2}\" y2=\"{y:.2}\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>"
    );
    polyline(&mut o, &fr, &trace, "stroke=\"#222\" stroke-width=\"1\"");
    o.push_str("</svg>\n");
    o
}
