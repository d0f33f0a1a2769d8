//! Planar multipolygon algebra for support-surface regions.
//!
//! Regions are stored as polygons with holes. Outer rings are counter-clockwise,
//! holes clockwise, so the filled interior always lies to the left of every edge.
//! Boolean operations are exact up to a vertex snapping tolerance of [`SNAP_TOL`].

mod boolean;
mod sample;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boolean::Op;
pub use sample::{sample_point, RegionSampler};

pub type Vec2 = Vector2<f64>;

/// Vertex snapping tolerance (m).
pub const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Geom2dError {
    #[error("degenerate input: ring with {0} vertices")]
    DegenerateInput(usize),
    #[error("region has zero area")]
    EmptyRegion,
}

/// A simple polygon with optional holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub outer: Vec<Vec2>,
    pub holes: Vec<Vec<Vec2>>,
}

/// Borrowed view of one ring together with its orientation role.
#[derive(Debug, Clone, Copy)]
pub struct RingRef<'a> {
    pub vertices: &'a [Vec2],
    pub is_hole: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiPolygon {
    polygons: Vec<Polygon>,
}

/// Admissible set `{p : p . normal >= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    normal: Vec2,
    offset: f64,
}

impl HalfPlane {
    /// Builds a half-plane, normalizing `normal` and rescaling `offset` to match.
    pub fn new(normal: Vec2, offset: f64) -> Self {
        let len = normal.norm();
        assert!(len > 0.0, "half-plane normal must be nonzero");
        Self {
            normal: normal / len,
            offset: offset / len,
        }
    }

    /// Half-plane whose boundary passes through `point`.
    pub fn through(point: Vec2, normal: Vec2) -> Self {
        let n = normal.normalize();
        Self {
            normal: n,
            offset: n.dot(&point),
        }
    }

    pub fn normal(&self) -> Vec2 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: Vec2) -> f64 {
        p.dot(&self.normal) - self.offset
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.signed_distance(p) >= 0.0
    }
}

pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed shoelace area: positive for counter-clockwise rings.
pub fn signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += cross(ring[i], ring[(i + 1) % n]);
    }
    0.5 * acc
}

/// Even-odd crossing test against a single ring.
fn ring_crossings(ring: &[Vec2], p: Vec2) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Point-in-ring test for a single closed ring.
pub fn point_in_ring(ring: &[Vec2], p: Vec2) -> bool {
    ring.len() >= 3 && ring_crossings(ring, p)
}

impl Polygon {
    pub fn area(&self) -> f64 {
        signed_area(&self.outer).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        point_in_ring(&self.outer, p) && !self.holes.iter().any(|h| point_in_ring(h, p))
    }
}

impl MultiPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Axis-aligned rectangle `[min, max]`.
    pub fn rect(min: Vec2, max: Vec2) -> Self {
        if max.x <= min.x || max.y <= min.y {
            return Self::empty();
        }
        Self::from_polygon(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
        .expect("rectangle has four vertices")
    }

    /// A single simple ring in either orientation.
    pub fn from_polygon(ring: Vec<Vec2>) -> Result<Self, Geom2dError> {
        Self::from_parts(vec![Polygon {
            outer: ring,
            holes: Vec::new(),
        }])
    }

    /// Polygons with holes; orientations are normalized. Rings must be simple and
    /// holes must lie inside their outer ring.
    pub fn from_parts(polygons: Vec<Polygon>) -> Result<Self, Geom2dError> {
        let mut out = Vec::with_capacity(polygons.len());
        for mut poly in polygons {
            for ring in std::iter::once(&poly.outer).chain(poly.holes.iter()) {
                if ring.len() < 3 {
                    return Err(Geom2dError::DegenerateInput(ring.len()));
                }
            }
            if signed_area(&poly.outer) < 0.0 {
                poly.outer.reverse();
            }
            for h in &mut poly.holes {
                if signed_area(h) > 0.0 {
                    h.reverse();
                }
            }
            if poly.area() > 0.0 {
                out.push(poly);
            }
        }
        Ok(Self { polygons: out })
    }

    pub(crate) fn from_normalized(polygons: Vec<Polygon>) -> Self {
        Self { polygons }
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn rings(&self) -> impl Iterator<Item = RingRef<'_>> {
        self.polygons.iter().flat_map(|p| {
            std::iter::once(RingRef {
                vertices: &p.outer,
                is_hole: false,
            })
            .chain(p.holes.iter().map(|h| RingRef {
                vertices: h,
                is_hole: true,
            }))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum::<f64>().max(0.0)
    }

    /// Even-odd membership over all rings.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for r in self.rings() {
            if point_in_ring(r.vertices, p) {
                inside = !inside;
            }
        }
        inside
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(|r| r.vertices.len()).sum()
    }

    pub fn bbox(&self) -> Option<(Vec2, Vec2)> {
        let mut it = self.rings().flat_map(|r| r.vertices.iter());
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for v in it {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        Some((lo, hi))
    }

    pub fn subtract(&self, cut: &MultiPolygon) -> MultiPolygon {
        boolean::overlay(self, cut, Op::Difference)
    }

    pub fn intersect(&self, other: &MultiPolygon) -> MultiPolygon {
        boolean::overlay(self, other, Op::Intersection)
    }

    pub fn union(&self, other: &MultiPolygon) -> MultiPolygon {
        boolean::overlay(self, other, Op::Union)
    }

    pub fn clip_halfplane(&self, hp: &HalfPlane) -> MultiPolygon {
        clip_halfplane(self, hp)
    }

    /// Checks the structural invariants: rings have at least three vertices, are
    /// simple, carry the right orientation, and holes sit inside their outer ring.
    pub fn validate(&self) -> Result<(), String> {
        for (pi, poly) in self.polygons.iter().enumerate() {
            if signed_area(&poly.outer) <= 0.0 {
                return Err(format!("polygon {pi}: outer ring is not counter-clockwise"));
            }
            check_simple(&poly.outer).map_err(|e| format!("polygon {pi} outer: {e}"))?;
            for (hi, h) in poly.holes.iter().enumerate() {
                if signed_area(h) >= 0.0 {
                    return Err(format!("polygon {pi} hole {hi}: not clockwise"));
                }
                check_simple(h).map_err(|e| format!("polygon {pi} hole {hi}: {e}"))?;
                let probe = h.iter().fold(Vec2::zeros(), |a, v| a + v) / h.len() as f64;
                let edge_mid = (h[0] + h[1]) * 0.5;
                if !point_in_ring(&poly.outer, probe) && !point_in_ring(&poly.outer, edge_mid) {
                    return Err(format!("polygon {pi} hole {hi}: outside outer ring"));
                }
            }
        }
        Ok(())
    }
}

fn check_simple(ring: &[Vec2]) -> Result<(), String> {
    let n = ring.len();
    if n < 3 {
        return Err(format!("{n} vertices"));
    }
    for i in 0..n {
        let (a0, a1) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b0, b1) = (ring[j], ring[(j + 1) % n]);
            if segments_cross(a0, a1, b0, b1) {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
    }
    Ok(())
}

/// Proper or touching intersection of two closed segments, ignoring contacts
/// closer than the snapping tolerance to shared endpoints.
fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = a1 - a0;
    let d2 = b1 - b0;
    let denom = cross(d1, d2);
    if denom.abs() < 1e-18 {
        return false;
    }
    let t = cross(b0 - a0, d2) / denom;
    let u = cross(b0 - a0, d1) / denom;
    let ta = SNAP_TOL / d1.norm().max(1e-300);
    let tb = SNAP_TOL / d2.norm().max(1e-300);
    t > ta && t < 1.0 - ta && u > tb && u < 1.0 - tb
}

/// Intersection of `region` with the admissible side of `hp`.
pub fn clip_halfplane(region: &MultiPolygon, hp: &HalfPlane) -> MultiPolygon {
    let Some((lo, hi)) = region.bbox() else {
        return MultiPolygon::empty();
    };
    let mut any_in = false;
    let mut any_out = false;
    for r in region.rings() {
        for v in r.vertices {
            if hp.contains(*v) {
                any_in = true;
            } else {
                any_out = true;
            }
        }
    }
    if !any_out {
        return region.clone();
    }
    if !any_in {
        return MultiPolygon::empty();
    }
    let margin = (hi - lo).norm() + 1.0;
    let lo = lo - Vec2::new(margin, margin);
    let hi = hi + Vec2::new(margin, margin);
    let frame = vec![lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)];
    let clipped = clip_convex_ring(&frame, hp);
    if clipped.len() < 3 {
        return MultiPolygon::empty();
    }
    let cutter = MultiPolygon::from_normalized(vec![Polygon {
        outer: clipped,
        holes: Vec::new(),
    }]);
    region.intersect(&cutter)
}

/// Clips a convex counter-clockwise ring against a half-plane, one edge at a time.
pub(crate) fn clip_convex_ring(ring: &[Vec2], hp: &HalfPlane) -> Vec<Vec2> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = ring[i];
        let next = ring[(i + 1) % n];
        let dc = hp.signed_distance(cur);
        let dn = hp.signed_distance(next);
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc >= 0.0) != (dn >= 0.0) {
            let t = dc / (dc - dn);
            out.push(cur + (next - cur) * t);
        }
    }
    out.dedup_by(|a, b| (*a - *b).norm() <= SNAP_TOL);
    if out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= SNAP_TOL {
        out.pop();
    }
    out
}

/// Regular polygon circumscribing the disc, so the disc is fully covered.
/// `segments` below 8 is promoted to 8.
pub fn inflate_disc(center: Vec2, radius: f64, segments: usize) -> MultiPolygon {
    let ring = disc_ring(center, radius, segments, true);
    MultiPolygon::from_normalized(vec![Polygon {
        outer: ring,
        holes: Vec::new(),
    }])
}

/// Regular polygon inscribed in the disc, so every point lies within `radius`.
pub fn inscribed_disc(center: Vec2, radius: f64, segments: usize) -> MultiPolygon {
    let ring = disc_ring(center, radius, segments, false);
    MultiPolygon::from_normalized(vec![Polygon {
        outer: ring,
        holes: Vec::new(),
    }])
}

fn disc_ring(center: Vec2, radius: f64, segments: usize, circumscribe: bool) -> Vec<Vec2> {
    let n = segments.max(8);
    let step = std::f64::consts::TAU / n as f64;
    let r = if circumscribe {
        radius / (step * 0.5).cos()
    } else {
        radius
    };
    (0..n)
        .map(|i| {
            let a = step * i as f64;
            center + Vec2::new(a.cos(), a.sin()) * r
        })
        .collect()
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (*a - *b).norm() <= SNAP_TOL);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross(b - a, p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Convex polygon from an arbitrary point cloud (its hull).
pub fn convex_region(points: &[Vec2]) -> MultiPolygon {
    let hull = convex_hull(points);
    if hull.len() < 3 || signed_area(&hull) <= 0.0 {
        return MultiPolygon::empty();
    }
    MultiPolygon::from_normalized(vec![Polygon {
        outer: hull,
        holes: Vec::new(),
    }])
}

/// Minkowski sum of a convex point set with a disc, approximated by the hull of
/// circumscribed disc polygons at each point. Covers the exact sum.
pub fn minkowski_disc(points: &[Vec2], radius: f64, segments: usize) -> MultiPolygon {
    let disc = disc_ring(Vec2::zeros(), radius, segments, true);
    let cloud: Vec<Vec2> = points
        .iter()
        .flat_map(|p| disc.iter().map(move |d| p + d))
        .collect();
    convex_region(&cloud)
}

/// Shrinks a convex polygon by `distance`, intersecting inward-shifted edge half-planes.
pub fn erode_convex(ring: &[Vec2], distance: f64) -> MultiPolygon {
    erode_with(ring, |_| distance)
}

/// Positions `p` for which the translated shape `p + shape` stays inside the
/// convex ring.
pub fn erode_convex_by(ring: &[Vec2], shape: &[Vec2]) -> MultiPolygon {
    erode_with(ring, |inward| -shape.iter().map(|v| inward.dot(v)).fold(f64::INFINITY, f64::min))
}

fn erode_with(ring: &[Vec2], shift: impl Fn(Vec2) -> f64) -> MultiPolygon {
    let mut ring: Vec<Vec2> = ring.to_vec();
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    let n = ring.len();
    let mut cur = ring.clone();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let d = b - a;
        if d.norm() <= SNAP_TOL {
            continue;
        }
        let inward = Vec2::new(-d.y, d.x).normalize();
        let hp = HalfPlane::new(inward, inward.dot(&a) + shift(inward));
        cur = clip_convex_ring(&cur, &hp);
        if cur.len() < 3 {
            return MultiPolygon::empty();
        }
    }
    if signed_area(&cur) <= 0.0 {
        return MultiPolygon::empty();
    }
    MultiPolygon::from_normalized(vec![Polygon {
        outer: cur,
        holes: Vec::new(),
    }])
}

/// Minkowski sum of two convex point sets (hull of pairwise sums).
pub fn minkowski_convex(a: &[Vec2], b: &[Vec2]) -> MultiPolygon {
    let cloud: Vec<Vec2> = a.iter().flat_map(|p| b.iter().map(move |q| p + q)).collect();
    convex_region(&cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn shape_erosion_keeps_shape_inside() {
        let ring = [Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(4.0, 2.0), Vec2::new(0.0, 2.0)];
        let shape = [Vec2::new(-0.5, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.5), Vec2::new(-0.5, 0.5)];
        let r = erode_convex_by(&ring, &shape);
        // x in [0.5, 3], y in [0, 1.5]
        assert!((r.area() - 2.5 * 1.5).abs() < 1e-9);
        let sum = minkowski_convex(&ring, &shape);
        assert!((sum.area() - 5.5 * 2.5).abs() < 1e-9);
    }

    fn unit_square_centered() -> MultiPolygon {
        MultiPolygon::rect(Vec2::new(-0.5, -0.5), Vec2::new(0.5, 0.5))
    }

    #[test]
    fn halfplane_splits_square_in_half() {
        let sq = unit_square_centered();
        let left = sq.clip_halfplane(&HalfPlane::new(Vec2::new(-1.0, 0.0), 0.0));
        assert!((left.area() - 0.5).abs() < 1e-12);
        assert!(left.contains(Vec2::new(-0.25, 0.0)));
        assert!(!left.contains(Vec2::new(0.25, 0.0)));
    }

    #[test]
    fn containing_halfplane_is_noop() {
        let sq = unit_square_centered();
        let hp = HalfPlane::new(Vec2::new(1.0, 0.0), -5.0);
        assert_eq!(sq.clip_halfplane(&hp), sq);
    }

    #[test]
    fn disc_promotes_segments_and_covers() {
        let d = inflate_disc(Vec2::zeros(), 1.0, 4);
        assert_eq!(d.vertex_count(), 8);
        assert!(d.area() >= PI);
        let tiny = inflate_disc(Vec2::new(3.0, 1.0), 0.001, 8);
        assert!(tiny.area() >= PI * 1e-6);
    }

    #[test]
    fn disc_converges_to_circle_area() {
        // Circumscribed n-gon area is n r^2 tan(pi/n).
        let d = inflate_disc(Vec2::zeros(), 2.0, 64);
        let exact = PI * 4.0;
        assert!(d.area() >= exact);
        assert!((d.area() - exact) / exact < 0.005);
        let analytic = 64.0 * 4.0 * (PI / 64.0).tan();
        assert!((d.area() - analytic).abs() < 1e-9);
    }

    #[test]
    fn inscribed_disc_stays_inside_radius() {
        let d = inscribed_disc(Vec2::new(1.0, 1.0), 0.5, 16);
        for r in d.rings() {
            for v in r.vertices {
                assert!((v - Vec2::new(1.0, 1.0)).norm() <= 0.5 + 1e-12);
            }
        }
    }

    #[test]
    fn erosion_of_rectangle() {
        let ring = vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        let e = erode_convex(&ring, 0.1);
        assert!((e.area() - 1.8 * 1.8).abs() < 1e-12);
        assert!(erode_convex(&ring, 1.0).is_empty());
    }

    #[test]
    fn degenerate_ring_rejected() {
        let err = MultiPolygon::from_polygon(vec![Vec2::zeros(), Vec2::new(1.0, 0.0)]).unwrap_err();
        assert_eq!(err, Geom2dError::DegenerateInput(2));
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!((signed_area(&h) - 1.0).abs() < 1e-12);
    }
}
