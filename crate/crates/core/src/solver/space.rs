//! The contracted pose space: admissible origin positions on a support plane,
//! admissible yaws, and an admissible tilt interval.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom2d::{MultiPolygon, Vec2};
use super::orientation;
use crate::geom3d::{FaceLabel, Vec3};

const YAW_EPS: f64 = 1e-9;

/// Disjoint closed yaw intervals inside `[0, 2pi]`. Degenerate intervals
/// `[y, y]` represent isolated admissible yaws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YawSet {
    intervals: Vec<(f64, f64)>,
}

impl YawSet {
    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, TAU)],
        }
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn single(yaw: f64) -> Self {
        let y = yaw.rem_euclid(TAU);
        Self {
            intervals: vec![(y, y)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, yaw: f64) -> bool {
        let y = yaw.rem_euclid(TAU);
        self.intervals.iter().any(|&(a, b)| {
            (y >= a - YAW_EPS && y <= b + YAW_EPS)
                || (b >= TAU - YAW_EPS && y <= YAW_EPS)
                || (a <= YAW_EPS && y >= TAU - YAW_EPS)
        })
    }

    pub fn intersect(&self, other: &YawSet) -> YawSet {
        let mut out = Vec::new();
        for &(a0, a1) in &self.intervals {
            for &(b0, b1) in &other.intervals {
                if a0 == a1 || b0 == b1 {
                    // Isolated yaws survive when the other side contains them.
                    let (y, set) = if a0 == a1 { (a0, other) } else { (b0, self) };
                    if set.contains(y) {
                        out.push((y, y));
                    }
                    continue;
                }
                let (lo, hi) = (a0.max(b0), a1.min(b1));
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.dedup_by(|a, b| (a.0 - b.0).abs() <= YAW_EPS && (a.1 - b.1).abs() <= YAW_EPS);
        Self { intervals: out }
    }

    /// Uniform over the measure when positive, otherwise uniform over the isolated yaws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        if self.intervals.is_empty() {
            return None;
        }
        let total = self.measure();
        if total <= 0.0 {
            return Some(self.intervals[rng.gen_range(0..self.intervals.len())].0);
        }
        let mut t = rng.gen_range(0.0..total);
        for &(a, b) in &self.intervals {
            if t < b - a {
                return Some(a + t);
            }
            t -= b - a;
        }
        self.intervals.last().map(|&(_, b)| b)
    }
}

/// How the asset's height above the support plane is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HeightMode {
    /// The named face lies in the support plane.
    Face { part: String, face: FaceLabel },
    /// The lowest point of the oriented asset touches the support plane.
    Rest,
}

/// Data needed to solve for the lean angle once a position is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Lean {
    pub normal: Vec3,
    pub offset: f64,
    pub corners: [Vec3; 4],
    pub yaw: f64,
    pub axis: Vec2,
}

impl Lean {
    /// Signed gap between the designated face and the anchor plane for an
    /// origin position `p` and tilt `t`.
    pub fn gap(&self, p: Vec2, t: f64) -> f64 {
        let r = orientation(self.yaw, t, self.axis);
        let n2 = self.normal.xy();
        let min = self
            .corners
            .iter()
            .map(|c| self.normal.dot(&(r * c)))
            .fold(f64::INFINITY, f64::min);
        n2.dot(&p) + min - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePoseSpace {
    /// Admissible world XY positions of the asset origin.
    pub region: MultiPolygon,
    pub plane_height: f64,
    pub yaw_set: YawSet,
    /// `None` leaves the tilt unconstrained over `[0, pi]`.
    pub tilt_interval: Option<(f64, f64)>,
    /// Tilt axis in the yawed asset frame.
    pub tilt_axis: Vec2,
    pub height: HeightMode,
    pub bound_part: Option<(String, FaceLabel)>,
    pub anchor_face: Option<(String, String, FaceLabel)>,
    /// Set by `against`: the tilt is solved from the drawn position.
    pub lean: Option<Lean>,
}

/// Sizes of the three factors, used to assert that every step contracts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub area: f64,
    pub yaw: f64,
    pub tilt: f64,
}

impl Measures {
    /// True when no factor grew beyond `eps` (relative for the area).
    pub fn within(&self, prev: &Measures, eps: f64) -> bool {
        self.area <= prev.area * (1.0 + eps) + eps * 1e-6
            && self.yaw <= prev.yaw + eps
            && self.tilt <= prev.tilt + eps
    }
}

impl FeasiblePoseSpace {
    pub fn new(region: MultiPolygon, plane_height: f64) -> Self {
        Self {
            region,
            plane_height,
            yaw_set: YawSet::full(),
            tilt_interval: None,
            tilt_axis: Vec2::new(1.0, 0.0),
            height: HeightMode::Rest,
            bound_part: None,
            anchor_face: None,
            lean: None,
        }
    }

    pub fn tilt_range(&self) -> (f64, f64) {
        self.tilt_interval.unwrap_or((0.0, PI))
    }

    pub fn measures(&self) -> Measures {
        let (a, b) = self.tilt_range();
        Measures {
            area: self.region.area(),
            yaw: self.yaw_set.measure(),
            tilt: b - a,
        }
    }

    pub fn is_empty(&self) -> bool {
        let (a, b) = self.tilt_range();
        self.region.area() <= 0.0 || self.yaw_set.is_empty() || b < a
    }

    /// Narrows the tilt interval; a positive tilt must agree on the axis.
    pub fn restrict_tilt(&mut self, lo: f64, hi: f64, axis: Option<Vec2>) -> bool {
        let (a, b) = self.tilt_range();
        let (lo, hi) = (lo.max(a), hi.min(b));
        if hi < lo - 1e-12 {
            self.tilt_interval = Some((1.0, 0.0));
            return false;
        }
        let hi = hi.max(lo);
        if let Some(axis) = axis {
            let had_axis = self.tilt_interval.is_some_and(|(_, b)| b > 0.0);
            if had_axis && hi > 0.0 && (self.tilt_axis - axis).norm() > 1e-9 {
                self.tilt_interval = Some((1.0, 0.0));
                return false;
            }
            if hi > 0.0 {
                self.tilt_axis = axis;
            }
        }
        self.tilt_interval = Some((lo, hi));
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_intersections() {
        let full = YawSet::full();
        let s = YawSet::single(1.0);
        assert_eq!(full.intersect(&s), s);
        assert_eq!(s.intersect(&full), s);
        assert!(s.intersect(&YawSet::single(2.0)).is_empty());
        assert_eq!(full.intersect(&s).measure(), 0.0);
    }

    #[test]
    fn wraparound_membership() {
        let s = YawSet::full();
        assert!(s.contains(TAU - 1e-12));
        assert!(YawSet::single(0.0).intersect(&s).contains(0.0));
    }

    #[test]
    fn tilt_restriction_is_monotone() {
        let mut sp = FeasiblePoseSpace::new(MultiPolygon::empty(), 0.0);
        assert!(sp.restrict_tilt(0.1, 0.4, Some(Vec2::new(0.0, 1.0))));
        let m0 = sp.measures();
        assert!(sp.restrict_tilt(0.2, 1.0, Some(Vec2::new(0.0, 1.0))));
        assert!(sp.measures().tilt <= m0.tilt);
        assert!(!sp.restrict_tilt(0.0, 0.0, None));
        assert!(sp.is_empty());
    }
}
