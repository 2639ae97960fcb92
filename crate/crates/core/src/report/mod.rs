//! Static SVG figures: embedding scatterplots, relevance heatmaps and
//! manipulation curves.

mod color;
mod curve;
mod heatmap;
mod scatter;
mod svg;

pub use color::{class_color, diverging, hex, Rgb};
pub use curve::render_curve;
pub use heatmap::{render_heatmap, render_subcarrier_heatmap};
pub use scatter::render_scatter;
pub use svg::SvgDocument;
