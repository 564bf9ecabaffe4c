//! SVG and CSV renderings of plans and sweeps.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::sweep::{BoundFit, SweepRecord};
use crate::error::{Error, Result};
use crate::measures::Coupling;

/// Cells below this fraction of the largest entry are not drawn.
pub const DRAW_REL: f64 = 1e-2;
/// Drawn cells at or above this fraction of the largest entry are black.
pub const BLACK_REL: f64 = 1e-1;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shade {
    Black,
    Gray,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Arrow {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
    pub shade: Shade,
}

/// Arrows of a plan, heaviest shade first, then row-major.
pub fn plan_arrows(gamma: &Coupling) -> Vec<Arrow> {
    let top = gamma.max_entry();
    let mut arrows: Vec<Arrow> = gamma
        .entries()
        .indexed_iter()
        .filter(|(_, &g)| g > 0.0 && g >= DRAW_REL * top)
        .map(|((i, j), &g)| Arrow {
            from: i,
            to: j,
            mass: g,
            shade: if g >= BLACK_REL * top { Shade::Black } else { Shade::Gray },
        })
        .collect();
    arrows.sort_by_key(|a| a.shade == Shade::Gray);
    arrows
}

/// Affine map from data coordinates to the drawing area, y pointing up.
struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone, square: bool) -> Self {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) }
        };
        let (xl, xh) = span(&mut xs.clone());
        let (yl, yh) = span(&mut ys.clone());
        let inner = SIZE - 2.0 * MARGIN;
        let (mut sx, mut sy) = (inner / (xh - xl), inner / (yh - yl));
        if square {
            sx = sx.min(sy);
            sy = sx;
        }
        Self { x0: xl, y0: yl, sx, sy }
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * self.sx
    }

    fn y(&self, y: f64) -> f64 {
        SIZE - MARGIN - (y - self.y0) * self.sy
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Arrow plot of a plan between planar measures: `mu` in blue, `nu` in red.
pub fn plan_svg(gamma: &Coupling) -> Result<String> {
    let (mu, nu) = (gamma.mu(), gamma.nu());
    if mu.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "plan plots need planar points, got dimension {}",
            mu.dim()
        )));
    }
    let pts = || mu.points().iter().chain(nu.points());
    let frame = Frame::fit(pts().map(|p| p[0]), pts().map(|p| p[1]), true);

    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        r#"<defs><marker id="head" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>"#
    );
    let arrows = plan_arrows(gamma);
    for a in arrows.iter().rev() {
        let (x, y) = (mu.point(a.from), nu.point(a.to));
        let color = match a.shade {
            Shade::Black => "black",
            Shade::Gray => "#aaaaaa",
        };
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5" marker-end="url(#head)"/>"#,
            frame.x(x[0]),
            frame.y(x[1]),
            frame.x(y[0]),
            frame.y(y[1])
        );
    }
    for (points, color) in [(mu.points(), "blue"), (nu.points(), "red")] {
        for p in points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                frame.x(p[0]),
                frame.y(p[1])
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], style: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, coords.join(" "));
}

/// `v_p - v_inf` against `p` (blue) with the fitted envelopes
/// `B e^{-beta p}` (green) and `-A/p` (orange).
pub fn sweep_svg(records: &[SweepRecord], fit: &BoundFit) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyData("no sweep records"));
    }
    let gap: Vec<(f64, f64)> = records.iter().map(|r| (r.p, r.gap)).collect();
    let upper: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| fit.upper(r.p).map(|u| (r.p, u)))
        .collect();
    let lower: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| fit.lower(r.p).map(|l| (r.p, l)))
        .collect();
    let axis = [(records[0].p, 0.0)];
    let all = || gap.iter().chain(&upper).chain(&lower).chain(&axis);
    let frame = Frame::fit(all().map(|q| q.0), all().map(|q| q.1), false);

    let mut out = String::new();
    header(&mut out);
    let (p0, p1) = (records[0].p, records[records.len() - 1].p);
    polyline(&mut out, &frame, &[(p0, 0.0), (p1, 0.0)], r##"stroke="#999999" stroke-dasharray="4 3""##);
    polyline(&mut out, &frame, &upper, r#"stroke="green" stroke-width="1.5""#);
    polyline(&mut out, &frame, &lower, r#"stroke="orange" stroke-width="1.5""#);
    polyline(&mut out, &frame, &gap, r#"stroke="blue" stroke-width="2""#);
    for &(p, g) in &gap {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="blue"/>"#,
            frame.x(p),
            frame.y(g)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="14" text-anchor="middle">p ({p0} to {p1})</text>"#,
        SIZE / 2.0,
        SIZE - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.0}" font-family="sans-serif" font-size="14" transform="rotate(-90 15 {:.0})" text-anchor="middle">v_p - v_inf</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes `i,j,mass` for every drawn arrow.
pub fn write_plan_csv<W: Write>(gamma: &Coupling, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "mass", "shade"])?;
    for a in plan_arrows(gamma) {
        let shade = match a.shade {
            Shade::Black => "black",
            Shade::Gray => "gray",
        };
        w.write_record([a.from.to_string(), a.to.to_string(), a.mass.to_string(), shade.into()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;
    use ndarray::array;
    use std::sync::Arc;

    fn plan() -> Coupling {
        let mu = Arc::new(DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap());
        let nu = Arc::new(DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap());
        Coupling::new(array![[0.47, 0.03], [0.03, 0.47]], mu, nu).unwrap()
    }

    #[test]
    fn arrow_shades() {
        let arrows = plan_arrows(&plan());
        let cells: Vec<_> = arrows.iter().map(|a| (a.from, a.to, a.shade)).collect();
        assert_eq!(
            cells,
            vec![(0, 0, Shade::Black), (1, 1, Shade::Black), (0, 1, Shade::Gray), (1, 0, Shade::Gray)]
        );
    }

    #[test]
    fn plan_svg_contents() {
        let svg = plan_svg(&plan()).unwrap();
        assert_eq!(svg.matches("<line").count(), 4);
        assert_eq!(svg.matches("stroke=\"black\"").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn sweep_svg_needs_records() {
        let fit = BoundFit::fit(&[], 1.5);
        assert!(sweep_svg(&[], &fit).is_err());
        let r = SweepRecord {
            p: 10.0,
            eps: 1.0,
            v_p: 1.4,
            gap: -0.1,
            iterations: 3,
            converged: true,
        };
        let fit = BoundFit::fit(std::slice::from_ref(&r), 1.5);
        let svg = sweep_svg(&[r], &fit).unwrap();
        assert!(svg.contains("stroke=\"orange\""));
        assert!(!svg.contains("stroke=\"green\""));
    }
}
