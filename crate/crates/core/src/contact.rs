//! Quasi-static settling and extraction of the part-level contact graph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom2d::{convex_region, Vec2};
use crate::geom3d::{min_axis_overlap, ray_obb, Face, FaceLabel, Ray, Vec3, WorldObb};
use crate::solver::Scene;

/// Contact threshold: part faces closer than 1 mm are in contact.
pub const DEFAULT_THRESHOLD: f64 = 0.001;

/// Face normals within this angle of antiparallel form face contacts.
pub const MAX_NORMAL_ANGLE_DEG: f64 = 15.0;

/// Faces behind one another by more than this are interpenetrating, not touching.
const PENETRATION_SLACK: f64 = 1e-4;

/// Drop probes start this far above the casting corner so coplanar supports
/// are hit at a positive distance.
const PROBE_OFFSET: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum ContactError {
    #[error("object `{object}` has no supporting surface below it")]
    UnsupportedObject { object: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContactEnd {
    pub object: String,
    pub part: String,
    pub face: FaceLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactClass {
    /// Near-antiparallel faces with positive overlap.
    Face,
    /// Boxes within the threshold without a qualifying face pair; no area.
    Oblique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPair {
    pub a: ContactEnd,
    pub b: ContactEnd,
    pub gap: f64,
    pub overlap_area: f64,
    /// Unit normal of `a`'s face, pointing from `a` toward `b`.
    pub contact_normal: Vec3,
    pub class: ContactClass,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContactNode {
    pub object: String,
    pub part: String,
    /// Part of the synthetic room (floor or walls).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub room: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactGraph {
    pub nodes: Vec<ContactNode>,
    pub edges: Vec<ContactPair>,
}

impl ContactGraph {
    pub fn face_contacts(&self) -> impl Iterator<Item = &ContactPair> {
        self.edges.iter().filter(|e| e.class == ContactClass::Face)
    }

    /// True when some face contact joins the two (object, part) pairs.
    pub fn touches(&self, a: (&str, &str), b: (&str, &str)) -> bool {
        self.face_contacts().any(|e| {
            let (x, y) = ((e.a.object.as_str(), e.a.part.as_str()), (e.b.object.as_str(), e.b.part.as_str()));
            (x == a && y == b) || (x == b && y == a)
        })
    }
}

/// Largest downward distance an instance can move before touching anything.
fn drop_distance(mine: &[WorldObb], others: &[&WorldObb]) -> Option<f64> {
    let down = Vec3::new(0.0, 0.0, -1.0);
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        let d = (t - PROBE_OFFSET).max(0.0);
        if best.map_or(true, |b| d < b) {
            best = Some(d);
        }
    };
    for c in mine.iter().flat_map(|p| p.corners()) {
        let ray = Ray::new(c + Vec3::new(0.0, 0.0, PROBE_OFFSET), down);
        for o in others {
            if !o.contains_point(&ray.origin) {
                if let Some(t) = ray_obb(&ray, o) {
                    consider(t);
                }
            }
        }
    }
    // Upward probes from the other boxes catch corners that poke up into
    // the instance's faces.
    for o in others {
        for c in o.corners() {
            let ray = Ray::new(c - Vec3::new(0.0, 0.0, PROBE_OFFSET), -down);
            for p in mine {
                if !p.contains_point(&ray.origin) {
                    if let Some(t) = ray_obb(&ray, p) {
                        consider(t);
                    }
                }
            }
        }
    }
    best
}

fn depth_against(mine: &[WorldObb], others: &[&WorldObb], dz: f64) -> f64 {
    let shift = Vec3::new(0.0, 0.0, -dz);
    mine.iter()
        .map(|p| p.translated(&shift))
        .flat_map(|p| others.iter().map(move |o| min_axis_overlap(&p, o)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Drops every non-root instance straight down, in assembly order, until it
/// rests on the nearest surface below. Instances already resting stay put.
pub fn settle(scene: &Scene) -> Result<Scene, ContactError> {
    let mut out = scene.clone();
    let root = scene.instances.first().map(|i| i.object_id.clone());
    for k in 0..out.instances.len() {
        if Some(&out.instances[k].object_id) == root.as_ref() {
            continue;
        }
        let id = out.instances[k].object_id.clone();
        let others: Vec<&WorldObb> = out
            .instances
            .iter()
            .filter(|i| i.object_id != id)
            .flat_map(|i| i.parts.iter())
            .collect();
        let mine = &out.instances[k].parts;
        let Some(mut d) = drop_distance(mine, &others) else {
            return Err(ContactError::UnsupportedObject { object: id });
        };
        // Edge-on-edge contacts are invisible to vertex probes; back off to
        // the largest drop that adds no penetration.
        let base = depth_against(mine, &others, 0.0).max(0.0);
        if d > 0.0 && depth_against(mine, &others, d) > base + 1e-9 {
            let (mut lo, mut hi) = (0.0, d);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if depth_against(mine, &others, mid) > base + 1e-9 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            d = lo;
        }
        if d > 0.0 {
            let shift = Vec3::new(0.0, 0.0, -d);
            let inst = &mut out.instances[k];
            inst.pose.translation += shift;
            for p in &mut inst.parts {
                *p = p.translated(&shift);
            }
        }
    }
    Ok(out)
}

/// Face-plane coordinates of a point.
fn plane_coords(f: &Face, p: &Vec3) -> Vec2 {
    let d = p - f.center;
    Vec2::new(d.dot(&f.u), d.dot(&f.v))
}

/// Gap and projected overlap area of two faces with near-antiparallel
/// normals. The gap is the smallest signed distance from the smaller face's
/// corners to the larger face's plane.
fn face_pair(fa: &Face, fb: &Face) -> (f64, f64) {
    let (big, small) = if fa.area() >= fb.area() { (fa, fb) } else { (fb, fa) };
    let gap = small
        .corners()
        .iter()
        .map(|c| big.signed_distance(c))
        .fold(f64::INFINITY, f64::min);
    let pb: Vec<Vec2> = big.corners().iter().map(|c| plane_coords(big, c)).collect();
    let ps: Vec<Vec2> = small.corners().iter().map(|c| plane_coords(big, c)).collect();
    let area = convex_region(&pb).intersect(&convex_region(&ps)).area();
    (gap, area)
}

fn end(obb: &WorldObb, face: FaceLabel) -> ContactEnd {
    ContactEnd {
        object: obb.object.clone(),
        part: obb.part.clone(),
        face,
    }
}

/// Face of `obb` whose normal points most directly at `target`.
fn facing(obb: &WorldObb, target: &Vec3) -> Face {
    let dir = target - obb.center;
    obb.faces()
        .into_iter()
        .max_by(|x, y| x.normal.dot(&dir).total_cmp(&y.normal.dot(&dir)))
        .expect("boxes have faces")
}

fn contacts_between(a: &WorldObb, b: &WorldObb, threshold: f64, cos_max: f64, out: &mut Vec<ContactPair>) {
    let reach = a.half_extents.norm() + b.half_extents.norm() + threshold;
    if (a.center - b.center).norm() > reach || min_axis_overlap(a, b) < -threshold {
        return;
    }
    let before = out.len();
    for fa in a.faces() {
        for fb in b.faces() {
            if fa.normal.dot(&-fb.normal) < cos_max {
                continue;
            }
            let (gap, area) = face_pair(&fa, &fb);
            if gap > threshold || gap < -PENETRATION_SLACK || area <= 1e-12 {
                continue;
            }
            out.push(ContactPair {
                a: end(a, fa.label),
                b: end(b, fb.label),
                gap,
                overlap_area: area,
                contact_normal: fa.normal,
                class: ContactClass::Face,
            });
        }
    }
    if out.len() == before {
        let (fa, fb) = (facing(a, &b.center), facing(b, &a.center));
        out.push(ContactPair {
            a: end(a, fa.label),
            b: end(b, fb.label),
            gap: (-min_axis_overlap(a, b)).max(0.0),
            overlap_area: 0.0,
            contact_normal: fa.normal,
            class: ContactClass::Oblique,
        });
    }
}

/// All cross-object part contacts within `threshold`, canonically ordered.
pub fn extract_contacts(scene: &Scene, threshold: f64) -> ContactGraph {
    let cos_max = MAX_NORMAL_ANGLE_DEG.to_radians().cos();
    let room = scene.instances.first().map(|i| i.object_id.as_str());
    let parts: Vec<&WorldObb> = scene.all_parts().collect();
    let mut edges = Vec::new();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let (mut a, mut b) = (parts[i], parts[j]);
            if a.object == b.object {
                continue;
            }
            if (&b.object, &b.part) < (&a.object, &a.part) {
                std::mem::swap(&mut a, &mut b);
            }
            contacts_between(a, b, threshold, cos_max, &mut edges);
        }
    }
    edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    let nodes: BTreeSet<ContactNode> = edges
        .iter()
        .flat_map(|e| [&e.a, &e.b])
        .map(|e| ContactNode {
            object: e.object.clone(),
            part: e.part.clone(),
            room: Some(e.object.as_str()) == room,
        })
        .collect();
    ContactGraph {
        nodes: nodes.into_iter().collect(),
        edges,
    }
}
