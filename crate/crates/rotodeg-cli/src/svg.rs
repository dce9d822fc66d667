//! Deterministic SVG snapshots of boundary arrow fields.
//!
//! Twelve arrows per circle, fixed coordinate formatting, no randomness:
//! identical inputs produce byte-identical files.

use rotodeg::{IntegratorConfig, Region, Result, TimeVaryingField, Vec2};
use std::fmt::Write as _;

/// Which map the arrows show.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotMap {
    /// The plane displacement `f_T`.
    DisplacementPlane,
    /// The chart displacement `F_T` pushed to the plane (its `(dtheta, dr)`
    /// pair drawn as a plane vector).
    DisplacementChart,
}

impl SnapshotMap {
    pub fn label(&self) -> &'static str {
        match self {
            SnapshotMap::DisplacementPlane => "f_T",
            SnapshotMap::DisplacementChart => "F_T in chart coordinates",
        }
    }
}

const ARROWS_PER_CIRCLE: usize = 12;
const CANVAS: f64 = 640.0;
/// Arrows longer than this fraction of the region radius are clipped and
/// drawn with the clip marker.
const CLIP_FRACTION: f64 = 0.45;

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

struct Canvas {
    body: String,
    scale: f64,
    cx: f64,
    cy: f64,
}

impl Canvas {
    fn to_svg(&self, x: f64, y: f64) -> (f64, f64) {
        // Plane y points up; SVG y points down.
        (CANVAS / 2.0 + (x - self.cx) * self.scale, CANVAS / 2.0 - (y - self.cy) * self.scale)
    }

    fn circle(&mut self, center: Vec2, radius: f64) {
        let (x, y) = self.to_svg(center.x, center.y);
        writeln!(
            self.body,
            r#"  <circle cx="{}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="1.2"/>"#,
            fmt(x),
            fmt(y),
            fmt(radius * self.scale)
        )
        .unwrap();
    }

    fn arrow(&mut self, from: Vec2, vector: Vec2, limit: f64) {
        let len = vector.norm();
        let (draw, clipped) = if len > limit && len > 0.0 {
            (vector * (limit / len), true)
        } else {
            (vector, false)
        };
        let (x1, y1) = self.to_svg(from.x, from.y);
        let tip = from + draw;
        let (x2, y2) = self.to_svg(tip.x, tip.y);
        let (stroke, marker) =
            if clipped { ("#b03030", "url(#clip)") } else { ("#2a6f2a", "url(#head)") };
        writeln!(
            self.body,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="1.4" marker-end="{}"/>"#,
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2),
            stroke,
            marker
        )
        .unwrap();
    }
}

fn region_circles(region: &Region) -> Vec<(Vec2, f64)> {
    match region {
        Region::Ball { center, radius } => vec![(*center, *radius)],
        Region::Annulus(a) => {
            // The shipped annuli are origin-centered circles; read the radii
            // off the sampled curves.
            let r_out = a.outer().scale();
            let r_in = a.inner().scale();
            vec![(Vec2::zeros(), r_out), (Vec2::zeros(), r_in)]
        }
    }
}

/// Render boundary arrows for every region into one SVG document.
pub fn render_snapshot(
    field: &TimeVaryingField,
    regions: &[Region],
    which: SnapshotMap,
    cfg: &IntegratorConfig,
) -> Result<String> {
    let circles: Vec<(Vec2, f64)> = regions.iter().flat_map(region_circles).collect();

    let (mut lo, mut hi) = (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
    for (c, r) in &circles {
        lo.x = lo.x.min(c.x - r);
        lo.y = lo.y.min(c.y - r);
        hi.x = hi.x.max(c.x + r);
        hi.y = hi.y.max(c.y + r);
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y) * 1.3;
    let mut canvas = Canvas {
        body: String::new(),
        scale: CANVAS / span,
        cx: 0.5 * (lo.x + hi.x),
        cy: 0.5 * (lo.y + hi.y),
    };

    for (center, radius) in &circles {
        canvas.circle(*center, *radius);
        let limit = CLIP_FRACTION * radius;
        for k in 0..ARROWS_PER_CIRCLE {
            let ang = std::f64::consts::TAU * k as f64 / ARROWS_PER_CIRCLE as f64;
            let p = center + *radius * Vec2::new(ang.cos(), ang.sin());
            let v = match which {
                SnapshotMap::DisplacementPlane => rotodeg::displacement_ft(field, p, cfg)?,
                SnapshotMap::DisplacementChart => rotodeg::displacement_big_ft(field, p, cfg)?,
            };
            canvas.arrow(p, v, limit);
        }
    }

    let mut doc = String::new();
    writeln!(
        doc,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS as u32
    )
    .unwrap();
    doc.push_str(concat!(
        "  <defs>\n",
        r##"    <marker id="head" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#2a6f2a"/></marker>"##,
        "\n",
        r##"    <marker id="clip" markerWidth="8" markerHeight="8" refX="3" refY="3" orient="auto"><path d="M1,0 L1,6 M5,0 L5,6" stroke="#b03030" stroke-width="1.5"/></marker>"##,
        "\n  </defs>\n",
    ));
    writeln!(
        doc,
        r#"  <text x="8" y="16" font-family="monospace" font-size="12">{} | 1 unit = {} px</text>"#,
        which.label(),
        fmt(canvas.scale)
    )
    .unwrap();
    doc.push_str(&canvas.body);
    doc.push_str("</svg>\n");
    Ok(doc)
}
