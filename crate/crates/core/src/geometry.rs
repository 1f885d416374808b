//! Planar object geometry: rigid poses and closed polygonal contours with
//! outward normals.
//!
//! A contour is the polygon boundary resampled edge by edge at a fixed arc
//! step. Every polygon vertex is itself a sample, so the resampled polyline
//! coincides with the polygon. Sample `i` starts segment `i` (from sample `i`
//! to sample `i + 1`, wrapping) and carries that segment's outward normal.

use std::f64::consts::PI;

use nalgebra::{Rotation2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped -= 2.0 * PI;
    }
    wrapped
}

/// 2D cross product (z component).
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Rotates a vector by `angle` radians (counter-clockwise positive).
#[inline]
pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Counter-clockwise perpendicular, `(-y, x)`.
#[inline]
pub fn perp(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Rigid planar pose: object-frame origin in the world and its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub theta: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            position: Vec2::new(x, y),
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self {
            position: Vec2::zeros(),
            theta: 0.0,
        }
    }

    pub fn rotation(&self) -> Rotation2<f64> {
        Rotation2::new(self.theta)
    }

    /// Maps an object-frame point to the world frame.
    pub fn transform_point(&self, p: &Vec2) -> Vec2 {
        self.position + self.rotation() * p
    }

    /// Maps an object-frame direction to the world frame.
    pub fn transform_vector(&self, v: &Vec2) -> Vec2 {
        self.rotation() * v
    }

    /// Maps a world point into this pose's frame.
    pub fn inverse_transform_point(&self, p: &Vec2) -> Vec2 {
        self.rotation().inverse() * (p - self.position)
    }

    pub fn inverse_transform_vector(&self, v: &Vec2) -> Vec2 {
        self.rotation().inverse() * v
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2 {
            position: self.transform_point(&other.position),
            theta: wrap_angle(self.theta + other.theta),
        }
    }

    pub fn inverse(&self) -> Pose2 {
        Pose2 {
            position: -(self.rotation().inverse() * self.position),
            theta: wrap_angle(-self.theta),
        }
    }

    /// Euclidean position error and absolute wrapped angle error to `other`.
    pub fn error_to(&self, other: &Pose2) -> (f64, f64) {
        (
            (other.position - self.position).norm(),
            wrap_angle(other.theta - self.theta).abs(),
        )
    }
}

/// Closed polygonal outline resampled at a fixed arc step, with one outward
/// unit normal per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeContour {
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub arc_step: f64,
    pub is_closed: bool,
}

/// First intersection of a ray with a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Vec2,
    pub normal: Vec2,
    pub segment: usize,
    /// Distance travelled along the ray.
    pub distance: f64,
}

/// A location on a contour: a segment and the distance from its start sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceContact {
    pub segment: usize,
    pub offset: f64,
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| cross(&vertices[i], &vertices[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

fn segments_intersect(a0: &Vec2, a1: &Vec2, b0: &Vec2, b1: &Vec2) -> bool {
    let orient = |p: &Vec2, q: &Vec2, r: &Vec2| cross(&(q - p), &(r - p));
    let on_segment = |p: &Vec2, q: &Vec2, r: &Vec2| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(b0, b1, a0))
        || (d2 == 0.0 && on_segment(b0, b1, a1))
        || (d3 == 0.0 && on_segment(a0, a1, b0))
        || (d4 == 0.0 && on_segment(a0, a1, b1))
}

/// Resamples a simple polygon into a [`ShapeContour`].
///
/// Vertices may be given in either winding order. Each edge is split into
/// `round(len / arc_step)` equal pieces, so spacing stays within a few
/// percent of `arc_step` for edges much longer than the step.
pub fn make_polygon_contour(vertices: &[Vec2], arc_step: f64) -> Result<ShapeContour> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    let area = signed_area(vertices);
    if !area.is_finite() || area.abs() < 1e-12 {
        return Err(Error::DegeneratePolygon);
    }
    let mut verts: Vec<Vec2> = vertices.to_vec();
    if area < 0.0 {
        verts.reverse();
    }

    for i in 0..n {
        let a0 = verts[i];
        let a1 = verts[(i + 1) % n];
        if (a1 - a0).norm() < 1e-12 {
            return Err(Error::DegeneratePolygon);
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let b0 = verts[j];
            let b1 = verts[(j + 1) % n];
            if segments_intersect(&a0, &a1, &b0, &b1) {
                return Err(Error::SelfIntersecting(i, j));
            }
        }
    }

    let shortest_edge = (0..n)
        .map(|i| (verts[(i + 1) % n] - verts[i]).norm())
        .fold(f64::INFINITY, f64::min);
    if !(arc_step > 0.0 && arc_step < shortest_edge) {
        return Err(Error::InvalidArcStep {
            arc_step,
            shortest_edge,
        });
    }

    let mut points = Vec::new();
    let mut normals = Vec::new();
    for i in 0..n {
        let start = verts[i];
        let edge = verts[(i + 1) % n] - start;
        let len = edge.norm();
        let pieces = ((len / arc_step).round() as usize).max(1);
        // Counter-clockwise winding: the outward normal is the clockwise perpendicular.
        let normal = Vec2::new(edge.y, -edge.x) / len;
        for j in 0..pieces {
            points.push(start + edge * (j as f64 / pieces as f64));
            normals.push(normal);
        }
    }

    Ok(ShapeContour {
        points,
        normals,
        arc_step,
        is_closed: true,
    })
}

/// Rigidly transforms a contour into the frame given by `pose`.
pub fn world_contour(contour: &ShapeContour, pose: &Pose2) -> ShapeContour {
    let rot = pose.rotation();
    ShapeContour {
        points: contour
            .points
            .iter()
            .map(|p| pose.position + rot * p)
            .collect(),
        normals: contour.normals.iter().map(|n| rot * n).collect(),
        arc_step: contour.arc_step,
        is_closed: contour.is_closed,
    }
}

/// Ray cast against the contour.
///
/// Only segments the ray enters (direction against the outward normal) can
/// be hit. When the ray passes exactly through a sample shared by two such
/// segments, the lower segment index wins.
pub fn contact_query(contour: &ShapeContour, origin: &Vec2, direction: &Vec2) -> Option<RayHit> {
    const EPS: f64 = 1e-12;
    let mut best: Option<RayHit> = None;
    for seg in 0..contour.len() {
        let normal = contour.normals[seg];
        if direction.dot(&normal) >= 0.0 {
            continue;
        }
        let a = contour.points[seg];
        let edge = contour.segment_vector(seg);
        let denom = cross(direction, &edge);
        if denom.abs() < EPS {
            continue;
        }
        let w = a - origin;
        let t = cross(&w, &edge) / denom;
        let s = cross(&w, direction) / denom;
        let tol = EPS * (1.0 + t.abs());
        if t < -tol || s < -1e-12 || s > 1.0 + 1e-12 {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => t < b.distance - tol,
        };
        if better {
            best = Some(RayHit {
                point: a + edge * s.clamp(0.0, 1.0),
                normal,
                segment: seg,
                distance: t.max(0.0),
            });
        }
    }
    best
}

impl ShapeContour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn next_index(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    pub fn prev_index(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    /// Vector from sample `i` to sample `i + 1`.
    pub fn segment_vector(&self, i: usize) -> Vec2 {
        self.points[self.next_index(i)] - self.points[i]
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        self.segment_vector(i).norm()
    }

    /// Unit tangent of segment `i`, following the counter-clockwise winding.
    pub fn tangent(&self, i: usize) -> Vec2 {
        self.segment_vector(i).normalize()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len()).map(|i| self.segment_length(i)).sum()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.points)
    }

    /// Area centroid of the enclosed polygon.
    pub fn centroid(&self) -> Vec2 {
        let n = self.len();
        let mut acc = Vec2::zeros();
        let mut area2 = 0.0;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let c = cross(&a, &b);
            area2 += c;
            acc += (a + b) * c;
        }
        acc / (3.0 * area2)
    }

    /// Largest distance from the frame origin to any sample.
    pub fn bounding_radius(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, q: &Vec2) -> bool {
        let n = self.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let pi = self.points[i];
            let pj = self.points[j];
            if (pi.y > q.y) != (pj.y > q.y) {
                let x_cross = pj.x + (q.y - pj.y) * (pi.x - pj.x) / (pi.y - pj.y);
                if q.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Contact located exactly at sample `index`.
    pub fn contact_at(&self, index: usize) -> Result<SurfaceContact> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(SurfaceContact {
            segment: index,
            offset: 0.0,
        })
    }

    /// Checks that a contact lies on this contour.
    pub fn validate_contact(&self, contact: &SurfaceContact) -> Result<()> {
        let ok = contact.segment < self.len()
            && contact.offset.is_finite()
            && contact.offset >= -1e-9
            && contact.offset <= self.segment_length(contact.segment) + 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::ContactNotOnContour {
                segment: contact.segment,
                offset: contact.offset,
            })
        }
    }

    /// Object-frame point of a contact.
    pub fn contact_point(&self, contact: &SurfaceContact) -> Vec2 {
        self.points[contact.segment] + self.tangent(contact.segment) * contact.offset
    }

    /// Converts a ray hit on this contour into a surface contact.
    pub fn contact_from_hit(&self, hit: &RayHit) -> SurfaceContact {
        let seg = hit.segment;
        let offset = (hit.point - self.points[seg])
            .dot(&self.tangent(seg))
            .clamp(0.0, self.segment_length(seg));
        SurfaceContact {
            segment: seg,
            offset,
        }
    }

    /// Whether the normals of segments `a` and `b` are parallel.
    pub fn same_normal(&self, a: usize, b: usize) -> bool {
        self.normals[a].dot(&self.normals[b]) > 1.0 - 1e-12
    }
}

/// Shape fixture as stored on disk: `{name, vertices: [[x, y], ...], arc_step}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFixture {
    pub name: String,
    pub vertices: Vec<[f64; 2]>,
    pub arc_step: f64,
}

impl ShapeFixture {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ShapeFile(e.to_string()))
    }

    /// Builds the contour with the polygon's area centroid moved to the
    /// object-frame origin, so that a centred COM is `c = 0`.
    pub fn contour(&self) -> Result<ShapeContour> {
        let verts: Vec<Vec2> = self.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
        let raw = make_polygon_contour(&verts, self.arc_step)?;
        let centroid = raw.centroid();
        let shifted: Vec<Vec2> = verts.iter().map(|v| v - centroid).collect();
        make_polygon_contour(&shifted, self.arc_step)
    }
}

/// Named collection of shape fixtures.
#[derive(Debug, Clone, Default)]
pub struct ShapeLibrary {
    shapes: Vec<ShapeFixture>,
}

const BUILTIN_SHAPES: [&str; 5] = [
    include_str!("../shapes/square.json"),
    include_str!("../shapes/triangle.json"),
    include_str!("../shapes/butter.json"),
    include_str!("../shapes/hexagon.json"),
    include_str!("../shapes/lshape.json"),
];

impl ShapeLibrary {
    /// The bundled test objects: square, triangle, butter, hexagon and an L-shape.
    pub fn builtin() -> Self {
        let shapes = BUILTIN_SHAPES
            .iter()
            .map(|text| ShapeFixture::from_json(text).expect("bundled shape fixtures parse"))
            .collect();
        Self { shapes }
    }

    /// Loads every `*.json` fixture in a directory.
    pub fn from_dir(dir: &std::path::Path) -> Result<Self> {
        let mut shapes = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let text = std::fs::read_to_string(&path)?;
            shapes.push(ShapeFixture::from_json(&text)?);
        }
        Ok(Self { shapes })
    }

    pub fn insert(&mut self, fixture: ShapeFixture) {
        self.shapes.retain(|s| s.name != fixture.name);
        self.shapes.push(fixture);
    }

    pub fn names(&self) -> Vec<&str> {
        self.shapes.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&ShapeFixture> {
        self.shapes
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownObject(name.to_string()))
    }

    pub fn contour(&self, name: &str) -> Result<ShapeContour> {
        self.get(name)?.contour()
    }
}
