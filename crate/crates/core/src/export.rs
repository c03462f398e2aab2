//! Result files: CSV tables, JSON documents and top-view SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Aabb, Shape, WorldState};
use crate::trajectory::TimedTrajectory;

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Rows of floats under `header`.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Waypoints as `index, c0, c1, ...`.
pub fn write_waypoints(path: &Path, columns: &[&str], waypoints: &[Vec<f64>]) -> Result<()> {
    let mut header = vec!["index"];
    header.extend_from_slice(columns);
    let rows: Vec<Vec<f64>> = waypoints
        .iter()
        .enumerate()
        .map(|(i, w)| std::iter::once(i as f64).chain(w.iter().copied()).collect())
        .collect();
    write_rows(path, &header, &rows)
}

/// Samples as `t, c0, c1, ...`.
pub fn write_trajectory(path: &Path, columns: &[&str], traj: &TimedTrajectory) -> Result<()> {
    let mut header = vec!["t"];
    header.extend_from_slice(columns);
    let rows: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|s| std::iter::once(s.t).chain(s.q.iter().copied()).collect())
        .collect();
    write_rows(path, &header, &rows)
}

/// Top view (x right, y up) of a world region.
#[derive(Debug, Clone)]
pub struct TopView {
    min: [f64; 2],
    max: [f64; 2],
    scale: f64,
    body: String,
}

const MARGIN: f64 = 20.0;

impl TopView {
    /// `pixels` is the width of the drawing area.
    pub fn new(bounds: &Aabb, pixels: f64) -> Self {
        let w = bounds.max.x - bounds.min.x;
        Self {
            min: [bounds.min.x, bounds.min.y],
            max: [bounds.max.x, bounds.max.y],
            scale: pixels / w,
            body: String::new(),
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.min[0]) * self.scale,
            MARGIN + (self.max[1] - y) * self.scale,
        )
    }

    fn footprint(&mut self, s: &Shape, style: &str) {
        match *s {
            Shape::Box {
                center,
                half_extents,
            } => {
                let (x, y) = self.px(center.x - half_extents.x, center.y + half_extents.y);
                let _ = writeln!(
                    self.body,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
                    2.0 * half_extents.x * self.scale,
                    2.0 * half_extents.y * self.scale
                );
            }
            Shape::Cylinder { center, radius, .. } | Shape::Sphere { center, radius } => {
                let (x, y) = self.px(center.x, center.y);
                let _ = writeln!(
                    self.body,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" {style}/>"#,
                    radius * self.scale
                );
            }
        }
    }

    /// Obstacle footprints, with their security hull drawn dashed.
    pub fn world(mut self, w: &WorldState) -> Self {
        for o in &w.obstacles {
            self.footprint(
                &o.shape.grown(w.security_hull()),
                r##"fill="none" stroke="#999" stroke-dasharray="4 3""##,
            );
            let fill = if o.dynamic { "#4cc3d9" } else { "#777" };
            self.footprint(&o.shape, &format!(r#"fill="{fill}" fill-opacity="0.6""#));
        }
        self
    }

    pub fn polyline(mut self, points: &[[f64; 2]], color: &str, dashed: bool) -> Self {
        let pts: Vec<String> = points
            .iter()
            .map(|p| {
                let (x, y) = self.px(p[0], p[1]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            pts.join(" ")
        );
        self
    }

    pub fn marker(mut self, p: [f64; 2], color: &str, label: &str) -> Self {
        let (x, y) = self.px(p[0], p[1]);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#,
            x + 6.0,
            y - 6.0
        );
        self
    }

    /// Base disc of `radius` with a heading tick.
    pub fn robot(mut self, pose: [f64; 3], radius: f64, color: &str) -> Self {
        let (x, y) = self.px(pose[0], pose[1]);
        let (hx, hy) = self.px(
            pose[0] + radius * pose[2].cos(),
            pose[1] + radius * pose[2].sin(),
        );
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="{color}"/><line x1="{x:.2}" y1="{y:.2}" x2="{hx:.2}" y2="{hy:.2}" stroke="{color}"/>"#,
            radius * self.scale
        );
        self
    }

    pub fn render(&self) -> String {
        let w = (self.max[0] - self.min[0]) * self.scale + 2.0 * MARGIN;
        let h = (self.max[1] - self.min[1]) * self.scale + 2.0 * MARGIN;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}
