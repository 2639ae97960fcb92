use super::color::{class_color, hex};
use super::svg::{Scale, SvgDocument};
use crate::error::{CsixError, Result};
use crate::manipulation::{ExperimentCurve, Mode};

pub(crate) const PLOT_LEFT: f64 = 60.0;
pub(crate) const PLOT_RIGHT: f64 = 560.0;
pub(crate) const PLOT_TOP: f64 = 30.0;
pub(crate) const PLOT_BOTTOM: f64 = 330.0;

fn label(c: &ExperimentCurve) -> String {
    let mode = match c.mode {
        Mode::Nullify => "nullify",
        Mode::Modify => "modify",
    };
    format!("{} {mode} p{}->p{}", c.kind, c.pair.0 + 1, c.pair.1 + 1)
}

/// Percentage of samples classified as the true class (solid) and, when the
/// target differs, as the target class (dashed) against manipulation steps.
pub fn render_curve(curves: &[ExperimentCurve]) -> Result<SvgDocument> {
    let steps = curves.first().map_or(0, ExperimentCurve::steps);
    if let Some(c) = curves.iter().find(|c| c.steps() != steps) {
        return Err(CsixError::DimensionMismatch {
            expected: steps,
            got: c.steps(),
        });
    }
    let series: usize = curves
        .iter()
        .map(|c| if c.pair.0 == c.pair.1 { 1 } else { 2 })
        .sum();
    let height = PLOT_BOTTOM + 50.0 + 18.0 * series as f64;
    let mut doc = SvgDocument::new(PLOT_RIGHT + 30.0, height);
    let sx = Scale::new(0.0, steps as f64, PLOT_LEFT, PLOT_RIGHT);
    let sy = Scale::new(0.0, 100.0, PLOT_BOTTOM, PLOT_TOP);

    doc.line(PLOT_LEFT, PLOT_BOTTOM, PLOT_RIGHT, PLOT_BOTTOM, "#000000");
    doc.line(PLOT_LEFT, PLOT_BOTTOM, PLOT_LEFT, PLOT_TOP, "#000000");
    for pct in [0, 25, 50, 75, 100] {
        let y = sy.map(pct as f64);
        doc.line(PLOT_LEFT - 4.0, y, PLOT_LEFT, y, "#000000");
        doc.text(PLOT_LEFT - 7.0, y + 4.0, 10.0, "end", &format!("{pct}%"));
    }
    for i in 0..=4 {
        let t = steps * i / 4;
        let x = sx.map(t as f64);
        doc.line(x, PLOT_BOTTOM, x, PLOT_BOTTOM + 4.0, "#000000");
        doc.text(x, PLOT_BOTTOM + 16.0, 10.0, "middle", &t.to_string());
    }
    doc.text(
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        PLOT_BOTTOM + 32.0,
        11.0,
        "middle",
        "manipulated channels t",
    );

    let mut legend_y = PLOT_BOTTOM + 52.0;
    for (i, c) in curves.iter().enumerate() {
        let color = hex(class_color(i, curves.len().max(2), true));
        let mut draw = |doc: &mut SvgDocument, target: bool| {
            let pts: Vec<(f64, f64)> = c
                .points
                .iter()
                .map(|p| {
                    let f = if target { p.frac_target } else { p.frac_true };
                    (sx.map(p.t as f64), sy.map(100.0 * f))
                })
                .collect();
            let (dash, name, class) = if target {
                (Some("6 3"), "target", "series target")
            } else {
                (None, "true", "series true")
            };
            doc.polyline(&pts, &color, 1.8, dash, Some(class));
            doc.line(PLOT_LEFT, legend_y - 4.0, PLOT_LEFT + 24.0, legend_y - 4.0, &color);
            doc.text(PLOT_LEFT + 30.0, legend_y, 11.0, "start", &format!("{} ({name})", label(c)));
            legend_y += 18.0;
        };
        draw(&mut doc, false);
        if c.pair.0 != c.pair.1 {
            draw(&mut doc, true);
        }
    }
    Ok(doc)
}
