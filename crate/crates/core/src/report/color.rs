/// RGB triple.
pub type Rgb = (u8, u8, u8);

const STOPS: [(f64, Rgb); 3] = [(0.0, (255, 255, 255)), (0.5, (255, 255, 0)), (1.0, (255, 0, 0))];

/// Diverging relevance scale: blue (-1), cyan, white (0), yellow, red (+1).
/// Values outside [-1, 1] are clamped; NaN maps to white. The negative half
/// mirrors the positive half with red and blue swapped.
pub fn diverging(v: f64) -> Rgb {
    let v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    let a = v.abs();
    let (lo, hi) = if a <= 0.5 { (STOPS[0], STOPS[1]) } else { (STOPS[1], STOPS[2]) };
    let t = (a - lo.0) / (hi.0 - lo.0);
    let mix = |x: u8, y: u8| (x as f64 + t * (y as f64 - x as f64)).round() as u8;
    let (r, g, b) = (mix(lo.1 .0, hi.1 .0), mix(lo.1 .1, hi.1 .1), mix(lo.1 .2, hi.1 .2));
    if v < 0.0 {
        (b, g, r)
    } else {
        (r, g, b)
    }
}

pub fn hex((r, g, b): Rgb) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn hsl(h: f64, s: f64, l: f64) -> Rgb {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to(r), to(g), to(b))
}

/// Hue shared by every shade of zero-based class `class` out of `classes`.
pub fn class_hue(class: usize, classes: usize) -> f64 {
    360.0 * class as f64 / classes.max(1) as f64
}

/// Dark shade for highlighted points, light shade for the rest.
pub fn class_color(class: usize, classes: usize, dark: bool) -> Rgb {
    let l = if dark { 0.35 } else { 0.75 };
    hsl(class_hue(class, classes), 0.7, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(diverging(0.0), (255, 255, 255));
        assert_eq!(diverging(1.0), (255, 0, 0));
        assert_eq!(diverging(-1.0), (0, 0, 255));
        assert_eq!(diverging(-0.5), (0, 255, 255));
        assert_eq!(diverging(0.5), (255, 255, 0));
        assert_eq!(diverging(7.0), diverging(1.0));
        assert_eq!(hex(diverging(1.0)), "#ff0000");
    }

    #[test]
    fn symmetric_and_monotone() {
        let mut prev = diverging(-1.0);
        for i in -1000..=1000 {
            let v = i as f64 / 1000.0;
            let (r, g, b) = diverging(v);
            assert_eq!(diverging(-v), (b, g, r));
            assert!(r >= prev.0 && b <= prev.2, "at {v}");
            prev = (r, g, b);
        }
    }

    #[test]
    fn shades_share_hue() {
        for c in 0..8 {
            let (d, l) = (class_color(c, 8, true), class_color(c, 8, false));
            assert_ne!(d, l);
            let hue = |(r, g, b): Rgb| {
                let (r, g, b) = (r as f64, g as f64, b as f64);
                let (max, min) = (r.max(g).max(b), r.min(g).min(b));
                let h = if max == r {
                    60.0 * ((g - b) / (max - min))
                } else if max == g {
                    60.0 * ((b - r) / (max - min) + 2.0)
                } else {
                    60.0 * ((r - g) / (max - min) + 4.0)
                };
                h.rem_euclid(360.0)
            };
            assert!((hue(d) - hue(l)).abs() < 2.0, "class {c}");
        }
    }
}
