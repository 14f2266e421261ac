//! Minimal static SVG renderings: heatmaps of 2D grids and line plots.

use std::fmt::Write;

use boxpath::density::{Axis, Layout};

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (VIRIDIS[i][k] + f * (VIRIDIS[i + 1][k] - VIRIDIS[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (f.px(f.x.0), f.px(f.x.1), f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(out, "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y0 - y1);
    for t in 0..=4 {
        let u = t as f64 / 4.0;
        let (xv, yv) = (f.x.0 + u * (f.x.1 - f.x.0), f.y.0 + u * (f.y.1 - f.y.0));
        let (xp, yp) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            "<line x1=\"{xp:.1}\" y1=\"{y0:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{x0:.1}\" y2=\"{yp:.1}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            yp + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{0:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.1})\">{1}</text>",
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Extent of each plotted cell: cells fill their bins, nodes get a bin of one step centred on them.
fn spans(axis: &Axis) -> Vec<(f64, f64)> {
    let h = axis.step();
    axis.coords()
        .into_iter()
        .map(|c| match axis.layout() {
            Layout::Cells => (c - 0.5 * h, c + 0.5 * h),
            Layout::Nodes => ((c - 0.5 * h).max(axis.lo()), (c + 0.5 * h).min(axis.hi())),
        })
        .collect()
}

/// Heatmap of row-major values over `(x, y)`.
pub fn heatmap(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x: &Axis,
    y: &Axis,
    values: &[f64],
) -> String {
    let f = Frame {
        x: (x.lo(), x.hi()),
        y: (y.lo(), y.hi()),
    };
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut out = String::new();
    header(&mut out, title);
    let (xs, ys) = (spans(x), spans(y));
    for (i, sx) in xs.iter().enumerate() {
        for (j, sy) in ys.iter().enumerate() {
            let v = values[i * ys.len() + j];
            let t = if max > 0.0 { v / max } else { 0.0 };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                f.px(sx.0),
                f.py(sy.1),
                f.px(sx.1) - f.px(sx.0) + 0.3,
                f.py(sy.0) - f.py(sy.1) + 0.3,
                colour(t)
            );
        }
    }
    axes(&mut out, &f, xlabel, ylabel);
    let (bx, top, bottom) = (W - RIGHT + 20.0, f.py(f.y.1), f.py(f.y.0));
    for s in 0..32 {
        let h = (bottom - top) / 32.0;
        let _ = writeln!(
            out,
            "<rect x=\"{bx:.1}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>",
            bottom - (s + 1) as f64 * h,
            h + 0.3,
            colour((s as f64 + 0.5) / 32.0)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
        bx + 20.0,
        top + 10.0,
        tick(max)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\">0</text>",
        bx + 20.0,
        bottom
    );
    out.push_str("</svg>\n");
    out
}

/// Line plot of several series over shared `x` values.
pub fn lines(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x: &[f64],
    series: &[(&str, &[f64])],
) -> String {
    let (xl, xh) = (
        x.first().copied().unwrap_or(0.0),
        x.last().copied().unwrap_or(1.0),
    );
    let ymax = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .fold(0.0, f64::max);
    let f = Frame {
        x: (xl, if xh > xl { xh } else { xl + 1.0 }),
        y: (0.0, if ymax > 0.0 { 1.05 * ymax } else { 1.0 }),
    };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (m, (name, ys)) in series.iter().enumerate() {
        let c = PALETTE[m % PALETTE.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(ys.iter())
            .map(|(a, b)| format!("{:.2},{:.2}", f.px(*a), f.py(*b)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
        let ly = TOP + 20.0 + 18.0 * m as f64;
        let lx = W - RIGHT + 8.0;
        let _ = writeln!(out, "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{c}\" stroke-width=\"2\"/>", lx + 18.0);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 22.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
