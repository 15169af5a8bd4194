//! SVG view of a flow field: cell hue follows flow direction, lightness
//! follows density. Paths and the ROI are drawn on top.

use std::collections::BTreeMap;
use std::fmt::Write;

use flowpath::field::FlowField;
use flowpath::geometry::{CellIndex, Polygon, Polyline, Vec2};

const PX_PER_M: f64 = 8.0;
const MARGIN_M: f64 = 2.0;

pub struct Overlay<'a> {
    pub line: &'a Polyline,
    pub color: &'static str,
    pub width: f64,
}

struct View {
    lo: Vec2,
    hi: Vec2,
}

impl View {
    fn include(&mut self, p: Vec2) {
        self.lo = Vec2::new(self.lo.x.min(p.x), self.lo.y.min(p.y));
        self.hi = Vec2::new(self.hi.x.max(p.x), self.hi.y.max(p.y));
    }

    /// World to SVG pixels, y pointing down.
    fn px(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.lo.x + MARGIN_M) * PX_PER_M,
            (self.hi.y - p.y + MARGIN_M) * PX_PER_M,
        )
    }

    fn size(&self) -> (f64, f64) {
        (
            (self.hi.x - self.lo.x + 2.0 * MARGIN_M) * PX_PER_M,
            (self.hi.y - self.lo.y + 2.0 * MARGIN_M) * PX_PER_M,
        )
    }
}

fn points_attr(view: &View, pts: &[Vec2]) -> String {
    pts.iter()
        .map(|&p| {
            let (x, y) = view.px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the selected channels (all when `channels` is empty).
pub fn render_svg(
    field: &FlowField,
    channels: &[u32],
    roi: Option<&Polygon>,
    overlays: &[Overlay<'_>],
) -> String {
    // merge channels: summed density, density-weighted direction
    let mut cells: BTreeMap<CellIndex, (u32, Vec2)> = BTreeMap::new();
    for ch in field
        .channels()
        .iter()
        .filter(|c| channels.is_empty() || channels.contains(&c.id))
    {
        for (&c, cell) in ch.cells() {
            let e = cells.entry(c).or_insert((0, Vec2::ZERO));
            e.0 += cell.density;
            e.1 += cell.direction * cell.density as f64;
        }
    }
    let frame = field.frame();
    let r = frame.resolution;
    let mut view = View {
        lo: Vec2::new(f64::INFINITY, f64::INFINITY),
        hi: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    };
    for &c in cells.keys() {
        let center = frame.cell_center(c);
        view.include(center - Vec2::new(r, r));
        view.include(center + Vec2::new(r, r));
    }
    if let Some(poly) = roi {
        poly.vertices().iter().for_each(|&p| view.include(p));
    }
    for o in overlays {
        o.line.points().iter().for_each(|&p| view.include(p));
    }
    if !view.lo.x.is_finite() {
        view.lo = Vec2::ZERO;
        view.hi = Vec2::new(1.0, 1.0);
    }
    let (w, h) = view.size();
    let max_density = cells.values().map(|c| c.0).max().unwrap_or(1).max(1) as f64;
    let cell_px = r * PX_PER_M;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<g shape-rendering="crispEdges">"#);
    for (&c, &(density, dir)) in &cells {
        let corner = frame.cell_center(c) + Vec2::new(-0.5 * r, 0.5 * r);
        let (x, y) = view.px(corner);
        let hue = dir.angle().to_degrees().rem_euclid(360.0);
        let light = 88.0 - 48.0 * (density as f64 / max_density);
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{cell_px:.2}" height="{cell_px:.2}" fill="hsl({hue:.0},80%,{light:.0}%)"/>"#
        );
    }
    svg.push_str("</g>\n");
    if let Some(poly) = roi {
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="none" stroke="gray" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            points_attr(&view, poly.vertices())
        );
    }
    for o in overlays {
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{:.1}" stroke-linejoin="round"/>"#,
            points_attr(&view, o.line.points()),
            o.color,
            o.width
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowpath::field::{ChannelField, FieldCell};
    use flowpath::geometry::GridFrame;
    use flowpath::grouping::{Channel, EntryPoint, GoalPair};
    use flowpath::roi::RoiEdge;

    fn tiny_field() -> FlowField {
        let edge = RoiEdge {
            a: Vec2::new(0.0, 0.0),
            b: Vec2::new(0.0, 1.0),
            refined: false,
        };
        let ch = Channel {
            id: 0,
            goal: GoalPair { g_in: 0, g_out: 1 },
            entry: EntryPoint {
                position: Vec2::ZERO,
                lateral_offset: 0.0,
                member_count: 1,
            },
            entry_edge: edge,
            exit_edge: edge,
            members: vec![],
            low_confidence: true,
        };
        let cells = [(CellIndex::new(0, 0), 1), (CellIndex::new(1, 0), 4)]
            .into_iter()
            .map(|(c, d)| {
                (
                    c,
                    FieldCell {
                        density: d,
                        direction: Vec2::new(1.0, 0.0),
                    },
                )
            })
            .collect();
        FlowField::new(
            GridFrame::with_resolution(0.2).unwrap(),
            vec![ChannelField::new(&ch, cells)],
        )
    }

    #[test]
    fn one_rect_per_cell_and_overlays() {
        let f = tiny_field();
        let line = Polyline::new(vec![Vec2::ZERO, Vec2::new(3.0, 1.0)]).unwrap();
        let svg = render_svg(
            &f,
            &[],
            None,
            &[Overlay {
                line: &line,
                color: "black",
                width: 2.0,
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("hsl(").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        // denser cell is darker
        assert!(svg.contains("hsl(0,80%,40%)") && svg.contains("hsl(0,80%,76%)"));
        assert_eq!(
            svg,
            render_svg(
                &f,
                &[],
                None,
                &[Overlay {
                    line: &line,
                    color: "black",
                    width: 2.0
                }]
            )
        );
    }

    #[test]
    fn channel_filter() {
        let svg = render_svg(&tiny_field(), &[5], None, &[]);
        assert_eq!(svg.matches("hsl(").count(), 0);
    }
}
