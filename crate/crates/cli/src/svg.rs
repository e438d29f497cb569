//! Minimal static SVG output.

use std::fmt::Write;

use intervaldyn::Interval;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 40.0;

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Square plot of `[x0, x1] × [y0, y1]` with the y axis pointing up.
pub struct Plot {
    body: String,
    x: Interval,
    y: Interval,
    width: f64,
    height: f64,
}

impl Plot {
    pub fn new(x: Interval, y: Interval, title: &str) -> Self {
        let mut p = Plot {
            body: String::new(),
            x,
            y,
            width: WIDTH,
            height: HEIGHT,
        };
        let (l, t) = (MARGIN, MARGIN);
        let (w, h) = (p.width - 2.0 * MARGIN, p.height - 2.0 * MARGIN);
        let _ = writeln!(
            p.body,
            r#"<rect x="{l:.3}" y="{t:.3}" width="{w:.3}" height="{h:.3}" fill="none" stroke="black" stroke-width="1"/>"#
        );
        p.text(MARGIN, MARGIN * 0.6, title);
        p.text(MARGIN, p.height - MARGIN * 0.3, &format!("{}", x.lo));
        p.text(p.width - MARGIN * 1.5, p.height - MARGIN * 0.3, &format!("{}", x.hi));
        p
    }

    pub fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.lo) / self.x.len() * (self.width - 2.0 * MARGIN)
    }

    pub fn sy(&self, y: f64) -> f64 {
        self.height - MARGIN - (y - self.y.lo) / self.y.len() * (self.height - 2.0 * MARGIN)
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="monospace" font-size="12">{}</text>"#,
            escape(s)
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            if i > 0 {
                d.push(' ');
            }
            let _ = write!(d, "{:.3},{:.3}", self.sx(x), self.sy(y));
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    pub fn finish(self) -> String {
        document(self.width, self.height, &self.body)
    }
}

pub fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// One horizontal strip per row, cells drawn as filled rectangles over `ambient`.
pub fn strips(ambient: Interval, rows: &[(String, Vec<Interval>)]) -> String {
    let row_h = 36.0;
    let label_w = 220.0;
    let plot_w = WIDTH - label_w - MARGIN;
    let height = MARGIN + row_h * rows.len().max(1) as f64 + MARGIN;
    let mut body = String::new();
    for (i, (label, cells)) in rows.iter().enumerate() {
        let top = MARGIN + i as f64 * row_h;
        let _ = writeln!(
            body,
            r#"<text x="8" y="{:.3}" font-family="monospace" font-size="12">{}</text>"#,
            top + row_h * 0.6,
            escape(label)
        );
        let _ = writeln!(
            body,
            r#"<rect x="{label_w:.3}" y="{:.3}" width="{plot_w:.3}" height="{:.3}" fill="none" stroke="gray"/>"#,
            top + 4.0,
            row_h - 8.0
        );
        for c in cells {
            let x0 = label_w + (c.lo - ambient.lo) / ambient.len() * plot_w;
            let w = (c.len() / ambient.len() * plot_w).max(0.5);
            let _ = writeln!(
                body,
                r#"<rect x="{x0:.3}" y="{:.3}" width="{w:.3}" height="{:.3}" fill="steelblue"/>"#,
                top + 6.0,
                row_h - 12.0
            );
        }
    }
    let _ = writeln!(
        body,
        r#"<text x="{label_w:.3}" y="{:.3}" font-family="monospace" font-size="12">{}</text>"#,
        height - MARGIN * 0.4,
        escape(&format!("{} .. {}", ambient.lo, ambient.hi))
    );
    document(WIDTH, height, &body)
}
