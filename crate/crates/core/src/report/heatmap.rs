use super::color::{diverging, hex};
use super::svg::{Scale, SvgDocument};
use crate::error::{CsixError, Result};

const PANEL_W: f64 = 720.0;
const CURVE_H: f64 = 220.0;
const ROW_H: f64 = 6.0;
const LEFT: f64 = 50.0;

fn check(samples: &[Vec<f64>], h_primes: &[Vec<f64>]) -> Result<usize> {
    if samples.len() != h_primes.len() {
        return Err(CsixError::DimensionMismatch {
            expected: samples.len(),
            got: h_primes.len(),
        });
    }
    let k = samples.first().map_or(0, Vec::len);
    for row in samples.iter().chain(h_primes) {
        if row.len() != k {
            return Err(CsixError::DimensionMismatch {
                expected: k,
                got: row.len(),
            });
        }
    }
    Ok(k)
}

/// Draws amplitude curves with relevance-coloured markers over `channels`,
/// then one strip row per sample. Returns the panel height.
fn panel(
    doc: &mut SvgDocument,
    top: f64,
    title: &str,
    samples: &[Vec<f64>],
    h_primes: &[Vec<f64>],
    channels: &[usize],
) -> f64 {
    doc.rect(LEFT, top, PANEL_W, CURVE_H, "#f7f7f7", Some("panel"));
    doc.text(LEFT, top - 6.0, 13.0, "start", title);
    let max_amp = samples
        .iter()
        .flat_map(|s| channels.iter().map(move |&c| s[c]))
        .fold(0.0f64, f64::max);
    let cells = channels.len().max(1) as f64;
    let cell_w = PANEL_W / cells;
    let sx = |i: usize| LEFT + (i as f64 + 0.5) * cell_w;
    let sy = Scale::new(0.0, max_amp, top + CURVE_H - 8.0, top + 8.0);

    for s in samples {
        let pts: Vec<(f64, f64)> = channels
            .iter()
            .enumerate()
            .map(|(i, &c)| (sx(i), sy.map(s[c])))
            .collect();
        doc.polyline(&pts, "#8c8c8c", 0.6, None, Some("amplitude"));
    }
    for (s, h) in samples.iter().zip(h_primes) {
        for (i, &c) in channels.iter().enumerate() {
            doc.circle(sx(i), sy.map(s[c]), 1.8, &hex(diverging(h[c])), Some("marker"));
        }
    }
    doc.text(LEFT - 6.0, top + 12.0, 10.0, "end", &format!("{max_amp:.2}"));
    doc.text(LEFT - 6.0, top + CURVE_H - 4.0, 10.0, "end", "0");

    let strip_top = top + CURVE_H + 8.0;
    for (r, h) in h_primes.iter().enumerate() {
        let y = strip_top + r as f64 * ROW_H;
        for (i, &c) in channels.iter().enumerate() {
            doc.rect(LEFT + i as f64 * cell_w, y, cell_w, ROW_H, &hex(diverging(h[c])), Some("cell"));
        }
    }
    let strip_h = h_primes.len() as f64 * ROW_H;
    let axis_y = strip_top + strip_h + 14.0;
    doc.text(LEFT, axis_y, 10.0, "start", &format!("{}", channels.first().map_or(0, |c| c + 1)));
    doc.text(LEFT + PANEL_W, axis_y, 10.0, "end", &format!("{}", channels.last().map_or(0, |c| c + 1)));
    CURVE_H + 8.0 + strip_h + 24.0
}

fn colorbar(doc: &mut SvgDocument, top: f64) {
    let steps = 40;
    let w = 240.0 / steps as f64;
    for i in 0..steps {
        let v = -1.0 + 2.0 * (i as f64 + 0.5) / steps as f64;
        doc.rect(LEFT + i as f64 * w, top, w, 10.0, &hex(diverging(v)), None);
    }
    doc.text(LEFT, top + 24.0, 10.0, "start", "-1");
    doc.text(LEFT + 120.0, top + 24.0, 10.0, "middle", "0");
    doc.text(LEFT + 240.0, top + 24.0, 10.0, "end", "+1");
    doc.text(LEFT + 256.0, top + 9.0, 11.0, "start", "normalized relevance h'");
}

/// Relevance heatmap for the samples of class `pair.0` explained toward
/// `pair.1` (zero-based): overlaid amplitude curves with markers coloured by
/// h', and a strip of K cells per sample.
pub fn render_heatmap(samples: &[Vec<f64>], h_primes: &[Vec<f64>], pair: (usize, usize)) -> Result<SvgDocument> {
    let k = check(samples, h_primes)?;
    let channels: Vec<usize> = (0..k).collect();
    let height = 40.0 + CURVE_H + 32.0 + h_primes.len() as f64 * ROW_H + 60.0;
    let mut doc = SvgDocument::new(LEFT + PANEL_W + 20.0, height);
    let title = format!("relevance p{} -> p{}, channels 1..{k}", pair.0 + 1, pair.1 + 1);
    let used = panel(&mut doc, 30.0, &title, samples, h_primes, &channels);
    colorbar(&mut doc, 30.0 + used + 4.0);
    Ok(doc)
}

/// One panel per antenna pair, each spanning that pair's `subcarriers` channels.
pub fn render_subcarrier_heatmap(
    samples: &[Vec<f64>],
    h_primes: &[Vec<f64>],
    subcarriers: usize,
    antenna_pairs: usize,
    pair: (usize, usize),
) -> Result<SvgDocument> {
    let k = check(samples, h_primes)?;
    if k != subcarriers * antenna_pairs {
        return Err(CsixError::DimensionMismatch {
            expected: subcarriers * antenna_pairs,
            got: k,
        });
    }
    let panel_h = CURVE_H + 8.0 + h_primes.len() as f64 * ROW_H + 24.0 + 26.0;
    let height = 30.0 + panel_h * antenna_pairs as f64 + 40.0;
    let mut doc = SvgDocument::new(LEFT + PANEL_W + 20.0, height);
    let mut top = 30.0;
    for a in 0..antenna_pairs {
        let channels: Vec<usize> = (a * subcarriers..(a + 1) * subcarriers).collect();
        let title = format!(
            "antenna pair {}: relevance p{} -> p{}, subcarriers 1..{subcarriers}",
            a + 1,
            pair.0 + 1,
            pair.1 + 1
        );
        top += panel(&mut doc, top, &title, samples, h_primes, &channels) + 26.0;
    }
    colorbar(&mut doc, top);
    Ok(doc)
}
