//! Post-hoc verification of a solved scene. Every PAG edge is replayed as a
//! predicate on the final geometry, without reusing the solver's contraction
//! code, and every cross-object part pair is checked for penetration.

use serde::{Deserialize, Serialize};

use crate::geom3d::{enclosure_fraction, min_axis_overlap, Face, Vec3, WorldObb, DEFAULT_TOL};
use crate::pag::{ObjectRelation, Pag, PartRelation};
use crate::solver::{EdgeBinding, PlacedInstance, Scene, SolverConfig};

/// Coplanarity and parallelism limits for bound faces.
pub const COPLANAR_TOL: f64 = 1e-6;
pub const PARALLEL_TOL: f64 = 1e-6;
pub const CONTACT_TOL: f64 = DEFAULT_TOL;
pub const PENETRATION_TOL: f64 = DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    /// Edge or part pair the check is about.
    pub subject: String,
    pub predicate: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn at_most(&mut self, subject: &str, predicate: &str, value: f64, limit: f64) {
        self.push(subject, predicate, value, limit, value <= limit);
    }

    fn at_least(&mut self, subject: &str, predicate: &str, value: f64, limit: f64) {
        self.push(subject, predicate, value, limit, value >= limit);
    }

    fn push(&mut self, subject: &str, predicate: &str, value: f64, limit: f64, passed: bool) {
        self.checks.push(AuditCheck {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            value,
            limit,
            passed,
        });
    }
}

/// Area of the convex polygon `a` clipped by the convex polygon `b`, both
/// counter-clockwise (Sutherland-Hodgman).
fn clipped_area(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut poly = a.to_vec();
    for i in 0..b.len() {
        let (p, q) = (b[i], b[(i + 1) % b.len()]);
        let side = |x: [f64; 2]| (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
        let input = std::mem::take(&mut poly);
        for j in 0..input.len() {
            let (s, e) = (input[j], input[(j + 1) % input.len()]);
            let (ds, de) = (side(s), side(e));
            if ds >= 0.0 {
                poly.push(s);
            }
            if (ds >= 0.0) != (de >= 0.0) {
                let t = ds / (ds - de);
                poly.push([s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]);
            }
        }
        if poly.is_empty() {
            return 0.0;
        }
    }
    area(&poly)
}

fn area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1])
        .sum::<f64>()
}

/// Counter-clockwise XY projection of a face.
fn projected(face: &Face) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = face.corners().iter().map(|c| [c.x, c.y]).collect();
    if area(&pts) < 0.0 {
        pts.reverse();
    }
    pts
}

/// Fraction of the placed face's vertical projection covered by the anchor face.
fn support_fraction(placed: &Face, anchor: &Face) -> f64 {
    let a = projected(placed);
    let total = area(&a);
    if total <= 0.0 {
        return 0.0;
    }
    clipped_area(&a, &projected(anchor)) / total
}

fn max_plane_distance(face: &Face, plane: &Face) -> f64 {
    face.corners()
        .iter()
        .map(|c| plane.signed_distance(c).abs())
        .fold(0.0, f64::max)
}

fn min_plane_distance(face: &Face, plane: &Face) -> f64 {
    face.corners()
        .iter()
        .map(|c| plane.signed_distance(c))
        .fold(f64::INFINITY, f64::min)
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    // atan2 keeps precision near zero, unlike acos of the dot product.
    a.cross(b).norm().atan2(a.dot(b))
}

fn face_of(inst: &PlacedInstance, part: &str, label: crate::geom3d::FaceLabel) -> Option<Face> {
    inst.part(part).map(|p| p.face(label))
}

/// Verifies every edge of `pag` against `scene` and checks all cross-object
/// part pairs for penetration.
pub fn audit(pag: &Pag, scene: &Scene, config: &SolverConfig) -> AuditReport {
    let mut report = AuditReport::default();
    let get = |id: &str| scene.instance(id);

    for e in &pag.object_edges {
        let subject = format!("{} {} {}", e.source, e.relation.as_str(), e.target);
        let (Some(src), Some(anchor)) = (get(&e.source), get(&e.target)) else {
            report.push(&subject, "placed", 0.0, 0.0, false);
            continue;
        };
        let p = src.pose.translation.xy();
        let c = anchor.pose.translation.xy();
        let yaw = anchor.pose.yaw_rotation();
        let front = (yaw * Vec3::y()).xy();
        let left = (yaw * -Vec3::x()).xy();
        let d = p - c;
        match e.relation {
            ObjectRelation::Near => {
                let limit = config.near_factor * (src.bounding_radius + anchor.bounding_radius);
                report.at_most(&subject, "near", d.norm(), limit);
            }
            rel => {
                let n = match rel {
                    ObjectRelation::LeftOf => left,
                    ObjectRelation::RightOf => -left,
                    ObjectRelation::InFrontOf => front,
                    _ => -front,
                };
                report.at_least(&subject, "half_plane", d.dot(&n), 0.0);
            }
        }
    }

    for b in &scene.bindings {
        audit_binding(pag, scene, b, config, &mut report);
    }

    let parts: Vec<&WorldObb> = scene.all_parts().collect();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let (a, b) = (parts[i], parts[j]);
            if a.object == b.object {
                continue;
            }
            let depth = min_axis_overlap(a, b).max(0.0);
            if depth > PENETRATION_TOL {
                let subject = format!("{}.{} / {}.{}", a.object, a.part, b.object, b.part);
                report.at_most(&subject, "penetration", depth, PENETRATION_TOL);
            }
        }
    }
    let pairs = parts.len() * parts.len().saturating_sub(1) / 2;
    if report.failures().all(|c| c.predicate != "penetration") {
        report.push(&format!("{pairs} part pairs"), "penetration", 0.0, PENETRATION_TOL, true);
    }
    report
}

fn audit_binding(pag: &Pag, scene: &Scene, eb: &EdgeBinding, config: &SolverConfig, report: &mut AuditReport) {
    let b = &eb.binding;
    let subject = match eb.edge.and_then(|k| pag.part_edges.get(k)) {
        Some(e) => {
            let s = format!("{} {} {}", e.source, e.relation.as_str(), e.target);
            // Explicit names must pass through to the binding unchanged.
            let kept = e.source.part.as_ref().map_or(true, |p| *p == b.placed.part)
                && e.source.face.map_or(true, |f| f == b.placed.face)
                && e.target.part.as_ref().map_or(true, |p| *p == b.anchor.part)
                && e.target.face.map_or(true, |f| f == b.anchor.face)
                && e.relation == b.relation;
            report.push(&s, "binding", kept as u8 as f64, 1.0, kept);
            s
        }
        None => format!("{} rests on {}", eb.object, b.anchor_object),
    };
    let (Some(inst), Some(anchor)) = (scene.instance(&eb.object), scene.instance(&b.anchor_object)) else {
        report.push(&subject, "placed", 0.0, 0.0, false);
        return;
    };
    let (Some(fp), Some(fa)) = (
        face_of(inst, &b.placed.part, b.placed.face),
        face_of(anchor, &b.anchor.part, b.anchor.face),
    ) else {
        report.push(&subject, "faces", 0.0, 0.0, false);
        return;
    };

    match b.relation {
        PartRelation::On | PartRelation::In if b.implicit => {
            // Lowest point of the instance on the supporter's plane.
            let lowest = inst
                .parts
                .iter()
                .flat_map(|p| p.corners())
                .map(|c| c.z)
                .fold(f64::INFINITY, f64::min);
            report.at_most(&subject, "rest", (lowest - fa.center.z).abs(), COPLANAR_TOL);
        }
        PartRelation::On | PartRelation::In => {
            let normals = angle_between(&fp.normal, &(-fa.normal));
            report.at_most(&subject, "antiparallel", normals, PARALLEL_TOL);
            report.at_most(&subject, "coplanar", max_plane_distance(&fp, &fa), COPLANAR_TOL);
            if b.relation == PartRelation::On {
                report.at_least(&subject, "overlap", support_fraction(&fp, &fa), config.support_overlap_min);
            } else {
                let f = enclosure_fraction(&inst.centroid(), &anchor.parts);
                report.at_least(&subject, "enclosure", f, config.enclosure_min);
            }
        }
        PartRelation::Against => {
            report.at_most(&subject, "contact", min_plane_distance(&fp, &fa).abs(), CONTACT_TOL);
            let tilt = angle_between(&(inst.pose.rotation() * Vec3::z()), &Vec3::z());
            let inside = tilt >= config.tilt_min - 1e-9 && tilt <= config.tilt_max + 1e-9;
            report.push(&subject, "tilt", tilt, config.tilt_max, inside);
        }
        PartRelation::AlignedWith => {
            report.at_most(&subject, "parallel", angle_between(&fp.normal, &fa.normal), PARALLEL_TOL);
            report.at_most(&subject, "coplanar", fa.signed_distance(&fp.center).abs(), CONTACT_TOL);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_square_area() {
        let a = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = [[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        assert!((clipped_area(&a, &b) - 1.0).abs() < 1e-12);
        assert_eq!(clipped_area(&a, &[[5.0, 5.0], [6.0, 5.0], [6.0, 6.0]]), 0.0);
    }

    #[test]
    fn parallel_angle_is_precise() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 1e-9, 0.0);
        assert!((angle_between(&a, &b) - 1e-9).abs() < 1e-15);
    }
}
