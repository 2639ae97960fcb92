use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CsixError, Result};

/// Minimal SVG 1.1 writer. Coordinates are written with two decimals so the
/// output is byte-stable; non-finite values are written as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub width: f64,
    pub height: f64,
    elements: Vec<String>,
}

pub(crate) fn num(v: f64) -> String {
    let v = if v.is_finite() { v } else { 0.0 };
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl SvgDocument {
    pub fn new(width: f64, height: f64) -> Self {
        let mut doc = SvgDocument {
            width,
            height,
            elements: Vec::new(),
        };
        doc.rect(0.0, 0.0, width, height, "#ffffff", None);
        doc
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, class: Option<&str>) {
        let class = class.map(|c| format!(" class=\"{c}\"")).unwrap_or_default();
        self.elements.push(format!(
            "<rect{class} x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            num(x),
            num(y),
            num(w.max(0.0)),
            num(h.max(0.0))
        ));
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, class: Option<&str>) {
        let class = class.map(|c| format!(" class=\"{c}\"")).unwrap_or_default();
        self.elements.push(format!(
            "<circle{class} cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>",
            num(cx),
            num(cy),
            num(r)
        ));
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        self.elements.push(format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"1\"/>",
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        ));
    }

    /// `dash` is an SVG dash pattern such as `"6 3"`.
    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, dash: Option<&str>, class: Option<&str>) {
        let mut pts = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{},{}", num(*x), num(*y));
        }
        let class = class.map(|c| format!(" class=\"{c}\"")).unwrap_or_default();
        let dash = dash
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        self.elements.push(format!(
            "<polyline{class} points=\"{pts}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{}\"{dash}/>",
            num(width)
        ));
    }

    /// `anchor` is one of `start`, `middle`, `end`.
    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        self.elements.push(format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"{anchor}\">{}</text>",
            num(x),
            num(y),
            num(size),
            escape(content)
        ));
    }

    pub fn render(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
            num(self.width),
            num(self.height),
            num(self.width),
            num(self.height)
        );
        for e in &self.elements {
            out.push_str(e);
            out.push('\n');
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()).map_err(|e| CsixError::io(path, e))
    }
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scale {
    pub d0: f64,
    pub d1: f64,
    pub p0: f64,
    pub p1: f64,
}

impl Scale {
    pub fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        // widen a degenerate domain so constant data lands mid-range
        let (d0, d1) = if (d1 - d0).abs() > 0.0 && d0.is_finite() && d1.is_finite() {
            (d0, d1)
        } else {
            (d0 - 1.0, d0 + 1.0)
        };
        Scale { d0, d1, p0, p1 }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_xml() {
        let mut d = SvgDocument::new(100.0, 50.0);
        d.circle(f64::NAN, 1.0, 2.0, "#000000", Some("pt"));
        d.polyline(&[(0.0, 0.0), (1.5, -0.001)], "#ff0000", 1.0, Some("4 2"), None);
        d.text(1.0, 2.0, 10.0, "start", "a < b & \"c\"");
        let s = d.render();
        let doc = roxmltree::Document::parse(&s).unwrap();
        let circle = doc.descendants().find(|n| n.has_tag_name("circle")).unwrap();
        assert_eq!(circle.attribute("cx"), Some("0.00"));
        let poly = doc.descendants().find(|n| n.has_tag_name("polyline")).unwrap();
        assert_eq!(poly.attribute("points"), Some("0.00,0.00 1.50,0.00"));
        let text = doc.descendants().find(|n| n.has_tag_name("text")).unwrap();
        assert_eq!(text.text(), Some("a < b & \"c\""));
    }

    #[test]
    fn scale_maps_endpoints_and_degenerate_domains() {
        let s = Scale::new(0.0, 10.0, 100.0, 0.0);
        assert_eq!(s.map(0.0), 100.0);
        assert_eq!(s.map(10.0), 0.0);
        let flat = Scale::new(3.0, 3.0, 0.0, 100.0);
        assert_eq!(flat.map(3.0), 50.0);
    }
}
