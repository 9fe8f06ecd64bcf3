//! Standalone SVG rendering of the tilted ECDF with influential points
//! highlighted.

use crate::influence::EcdfPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const BASE_COLOR: &str = "#4878a8";
const HIGHLIGHT_COLOR: &str = "#d62728";

fn x_px(x: f64) -> f64 {
    MARGIN + x * (WIDTH - 2.0 * MARGIN)
}

fn y_px(tilted: f64, lim: f64) -> f64 {
    // tilted in [-lim, lim] mapped top-down
    let frac = (tilted + lim) / (2.0 * lim);
    HEIGHT - MARGIN - frac * (HEIGHT - 2.0 * MARGIN)
}

/// Tilted-ECDF scatter: one marker per observation, highlighted markers in a
/// distinct color, plus the zero reference line (a perfectly uniform sample
/// lies on it).
pub fn svg_tilted_ecdf(points: &[EcdfPoint]) -> String {
    let lim = points
        .iter()
        .map(|p| p.tilted.abs())
        .fold(0.05f64, f64::max)
        * 1.15;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        x_px(0.0),
        HEIGHT - MARGIN,
        x_px(1.0),
        HEIGHT - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN,
        y_px(-lim, lim),
        MARGIN,
        y_px(lim, lim)
    ));
    // zero reference
    svg.push_str(&format!(
        "<line class=\"reference\" x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" \
         stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n",
        x_px(0.0),
        x_px(1.0),
        y0 = y_px(0.0, lim)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">PIT value</text>\n",
        x_px(0.5),
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">ECDF(x) - x</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));
    for p in points {
        let (class, color, r) = if p.highlighted {
            ("point highlight", HIGHLIGHT_COLOR, 4.0)
        } else {
            ("point", BASE_COLOR, 2.5)
        };
        svg.push_str(&format!(
            "<circle class=\"{class}\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"{r}\" fill=\"{color}\"/>\n",
            x_px(p.x),
            y_px(p.tilted, lim)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, ecdf: f64, highlighted: bool) -> EcdfPoint {
        EcdfPoint {
            x,
            ecdf,
            tilted: ecdf - x,
            highlighted,
        }
    }

    #[test]
    fn marker_counts_match() {
        let points = vec![
            pt(0.1, 0.25, false),
            pt(0.2, 0.5, true),
            pt(0.6, 0.75, true),
            pt(0.9, 1.0, false),
        ];
        let svg = svg_tilted_ecdf(&points);
        assert_eq!(svg.matches("class=\"point highlight\"").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("class=\"reference\"").count(), 1);
    }

    #[test]
    fn structurally_valid() {
        let svg = svg_tilted_ecdf(&[pt(0.5, 1.0, false)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // every element is closed
        assert_eq!(
            svg.matches("<circle").count(),
            svg.matches("/>").count() - svg.matches("<line").count() - svg.matches("<rect").count()
        );
    }
}
