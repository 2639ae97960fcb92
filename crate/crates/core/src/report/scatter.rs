use super::color::{class_color, hex};
use super::svg::{Scale, SvgDocument};
use crate::dataset::Split;
use crate::embedding::Embedding2D;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 30.0;
const LEGEND: f64 = 150.0;

/// Class-coloured scatterplot. Points of the `highlight` split use the dark
/// shade of their class and are drawn on top; the other split is light.
/// The legend carries the silhouette of the highlighted split.
pub fn render_scatter(embedding: &Embedding2D, highlight: Split, names: &[String]) -> SvgDocument {
    let mut doc = SvgDocument::new(SIZE + LEGEND, SIZE);
    let classes = embedding
        .labels
        .iter()
        .max()
        .map_or(1, |m| m + 1)
        .max(names.len());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &embedding.points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let sx = Scale::new(x0, x1, MARGIN, SIZE - MARGIN);
    let sy = Scale::new(y0, y1, SIZE - MARGIN, MARGIN);

    for dark in [false, true] {
        for ((p, &label), &split) in embedding
            .points
            .iter()
            .zip(&embedding.labels)
            .zip(&embedding.splits)
        {
            if (split == highlight) != dark {
                continue;
            }
            let class = if dark { "point highlight" } else { "point" };
            doc.circle(sx.map(p[0]), sy.map(p[1]), 3.0, &hex(class_color(label, classes, dark)), Some(class));
        }
    }

    let lx = SIZE + 10.0;
    let score = embedding
        .silhouette_on(highlight)
        .map_or_else(|_| "n/a".to_string(), |s| format!("{s:.2}"));
    doc.text(lx, 24.0, 13.0, "start", &format!("silhouette ({highlight}): {score}"));
    for c in 0..classes {
        let y = 48.0 + 18.0 * c as f64;
        doc.circle(lx + 6.0, y - 4.0, 5.0, &hex(class_color(c, classes, true)), None);
        doc.circle(lx + 20.0, y - 4.0, 5.0, &hex(class_color(c, classes, false)), None);
        let name = names.get(c).cloned().unwrap_or_else(|| format!("p{}", c + 1));
        doc.text(lx + 32.0, y, 12.0, "start", &name);
    }
    doc
}
