//! Static SVG plots with no plotting dependency: scatter charts, line
//! charts, and heat maps. Output is byte-deterministic for identical input.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct ScatterSeries {
    pub label: String,
    pub points: Vec<[f64; 2]>,
    /// Palette index; series with the same index share a color.
    pub color: usize,
}

pub struct LineSeries {
    pub label: String,
    /// (x, y) pairs in plot order.
    pub points: Vec<[f64; 2]>,
    pub color: usize,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_points<'a>(points: impl Iterator<Item = &'a [f64; 2]>) -> Frame {
        let mut f = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in points {
            f.x_min = f.x_min.min(p[0]);
            f.x_max = f.x_max.max(p[0]);
            f.y_min = f.y_min.min(p[1]);
            f.y_max = f.y_max.max(p[1]);
        }
        f.pad();
        f
    }

    fn pad(&mut self) {
        let dx = (self.x_max - self.x_min).max(1e-9) * 0.05;
        let dy = (self.y_max - self.y_min).max(1e-9) * 0.05;
        self.x_min -= dx;
        self.x_max += dx;
        self.y_min -= dy;
        self.y_max += dy;
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn fnum(v: f64) -> String {
    // Fixed decimals keep the output stable and compact.
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"##
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"##,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        s,
        r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        x1 - x0,
        y0 - y1
    );
    for i in 0..=4 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / 4.0;
        let px = frame.sx(fx);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333"/>"##,
            y0 + 4.0
        );
        let _ = writeln!(
            s,
            r##"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"##,
            y0 + 16.0,
            fnum(fx)
        );
        let fy = frame.y_min + (frame.y_max - frame.y_min) * i as f64 / 4.0;
        let py = frame.sy(fy);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="#333"/>"##,
            x0 - 4.0
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            py + 3.0,
            fnum(fy)
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"##,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r##"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"##,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(s: &mut String, entries: &[(String, usize)]) {
    let lx = WIDTH - MARGIN_R + 12.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let ly = MARGIN_T + 14.0 + i as f64 * 16.0;
        let _ = writeln!(
            s,
            r##"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}"/>"##,
            ly - 9.0,
            PALETTE[color % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="11">{}</text>"##,
            lx + 14.0,
            escape(label)
        );
    }
}

/// Scatter chart of one or more point series.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, series: &[ScatterSeries]) -> String {
    let frame = Frame::from_points(series.iter().flat_map(|s| s.points.iter()));
    let mut s = header(title);
    axes(&mut s, &frame, x_label, y_label);
    for ser in series {
        let color = PALETTE[ser.color % PALETTE.len()];
        for p in &ser.points {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{color}" fill-opacity="0.7"/>"##,
                frame.sx(p[0]),
                frame.sy(p[1])
            );
        }
    }
    legend(
        &mut s,
        &series
            .iter()
            .map(|x| (x.label.clone(), x.color))
            .collect::<Vec<_>>(),
    );
    s.push_str("</svg>\n");
    s
}

/// Line chart; `hline` draws a dashed horizontal reference line.
pub fn line_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
    hline: Option<f64>,
) -> String {
    let mut frame = Frame::from_points(series.iter().flat_map(|s| s.points.iter()));
    if let Some(h) = hline {
        frame.y_min = frame.y_min.min(h - 1.0);
        frame.y_max = frame.y_max.max(h + 1.0);
    }
    let mut s = header(title);
    axes(&mut s, &frame, x_label, y_label);
    if let Some(h) = hline {
        let py = frame.sy(h);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
            MARGIN_L,
            WIDTH - MARGIN_R
        );
    }
    for ser in series {
        let color = PALETTE[ser.color % PALETTE.len()];
        let mut path = String::new();
        for (i, p) in ser.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.1} {:.1} ", frame.sx(p[0]), frame.sy(p[1]));
        }
        let _ = writeln!(
            s,
            r##"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
            path.trim_end()
        );
    }
    legend(
        &mut s,
        &series
            .iter()
            .map(|x| (x.label.clone(), x.color))
            .collect::<Vec<_>>(),
    );
    s.push_str("</svg>\n");
    s
}

/// Heat map over a small grid. `cells[i][j]` is the value at `(xs[i], ys[j])`;
/// `None` renders as a hatched invalid cell.
pub fn heatmap_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    cells: &[Vec<Option<f64>>],
) -> String {
    let mut s = header(title);
    let (lo, hi) = cells
        .iter()
        .flatten()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = (hi - lo).max(1e-12);
    let x0 = MARGIN_L;
    let y1 = MARGIN_T;
    let cw = (WIDTH - MARGIN_L - MARGIN_R) / xs.len() as f64;
    let ch = (HEIGHT - MARGIN_T - MARGIN_B) / ys.len() as f64;
    for (i, &xv) in xs.iter().enumerate() {
        for (j, &yv) in ys.iter().enumerate() {
            let px = x0 + i as f64 * cw;
            // larger y at the top row
            let py = y1 + (ys.len() - 1 - j) as f64 * ch;
            match cells[i][j] {
                Some(v) => {
                    let t = (v - lo) / span;
                    let r = (255.0 * t) as u8;
                    let b = (255.0 * (1.0 - t)) as u8;
                    let _ = writeln!(
                        s,
                        r##"<rect x="{px:.1}" y="{py:.1}" width="{cw:.1}" height="{ch:.1}" fill="rgb({r},64,{b})" stroke="#fff"/>"##
                    );
                    let _ = writeln!(
                        s,
                        r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle" fill="#fff">{}</text>"##,
                        px + cw / 2.0,
                        py + ch / 2.0 + 3.0,
                        fnum(v)
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{px:.1}" y="{py:.1}" width="{cw:.1}" height="{ch:.1}" fill="#ddd" stroke="#fff"/>"##
                    );
                    let _ = writeln!(
                        s,
                        r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle" fill="#666">n/a</text>"##,
                        px + cw / 2.0,
                        py + ch / 2.0 + 3.0
                    );
                }
            }
            let _ = writeln!(
                s,
                r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"##,
                px + cw / 2.0,
                HEIGHT - MARGIN_B + 16.0,
                fnum(xv)
            );
            let _ = writeln!(
                s,
                r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"##,
                x0 - 6.0,
                py + ch / 2.0 + 3.0,
                fnum(yv)
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"##,
        (x0 + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r##"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"##,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_deterministic() {
        let series = vec![ScatterSeries {
            label: "pts".into(),
            points: vec![[0.0, 0.0], [1.0, 1.0], [0.5, -0.25]],
            color: 0,
        }];
        let a = scatter_svg("t", "x", "y", &series);
        let b = scatter_svg("t", "x", "y", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn heatmap_marks_invalid_cells() {
        let svg = heatmap_svg(
            "grid",
            "a",
            "b",
            &[0.4, 0.5],
            &[0.7, 0.8],
            &[vec![Some(1.0), None], vec![Some(2.0), Some(3.0)]],
        );
        assert!(svg.contains("n/a"));
    }

    #[test]
    fn line_chart_has_reference_line() {
        let svg = line_svg(
            "angles",
            "iteration",
            "degrees",
            &[LineSeries {
                label: "a".into(),
                points: vec![[0.0, 100.0], [1.0, 120.0]],
                color: 1,
            }],
            Some(90.0),
        );
        assert!(svg.contains("stroke-dasharray"));
    }
}
