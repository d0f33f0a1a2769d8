//! Contraction operators. Each takes a pose space and returns a subset of it.

use std::f64::consts::TAU;

use super::space::{FeasiblePoseSpace, HeightMode, Lean, YawSet};
use super::{face_down_tilt, rot_tilt, rot_z, Binding, PlacedInstance, SolveError, SolverConfig};
use crate::catalog::Asset;
use crate::geom2d::{
    erode_convex, erode_convex_by, inscribed_disc, minkowski_convex, minkowski_disc, HalfPlane, MultiPolygon, Vec2,
};
use crate::geom3d::{Face, Vec3, WorldObb, DEFAULT_TOL};
use crate::pag::{ObjectRelation, PartRelation};

/// Polygon resolution of the `near` disc.
pub const NEAR_SEGMENTS: usize = 64;

/// Polygon resolution of inflated occupied footprints.
const FOOTPRINT_SEGMENTS: usize = 16;

/// Half-width of the coplanarity band for `aligned_with`.
const ALIGN_BAND: f64 = DEFAULT_TOL;

/// Samples of the tilt range used to bound the lean band.
const LEAN_GRID: usize = 64;

pub struct CoarseInput<'a> {
    pub object: &'a str,
    /// Convex support polygon in world XY.
    pub plane: &'a [Vec2],
    pub plane_height: f64,
    /// Footprint radius of the incoming asset about its origin.
    pub radius: f64,
    /// Vertical extent of the incoming asset above the plane.
    pub vertical_extent: f64,
    /// Shrink the support polygon by `radius` so the footprint stays on it.
    pub erode: bool,
    /// `(object, part)` pairs not treated as occupancy (contact anchors).
    pub exclude: &'a [(String, String)],
    /// Exact footprint about the origin when the yaw is already pinned; used
    /// in place of the radius disc.
    pub footprint: Option<&'a [Vec2]>,
}

fn empty(object: &str, step: &str) -> SolveError {
    SolveError::EmptyFeasibleSpace {
        object: object.to_string(),
        step: step.to_string(),
    }
}

fn check(space: FeasiblePoseSpace, object: &str, step: &str) -> Result<FeasiblePoseSpace, SolveError> {
    if space.is_empty() {
        Err(empty(object, step))
    } else {
        Ok(space)
    }
}

/// Support polygon minus every occupied footprint in the vertical band the
/// incoming asset will occupy, each inflated by the incoming radius.
pub fn coarse_localize(input: &CoarseInput<'_>, obstacles: &[WorldObb]) -> Result<FeasiblePoseSpace, SolveError> {
    let mut region = if input.erode {
        match input.footprint {
            Some(f) => erode_convex_by(input.plane, f),
            None => erode_convex(input.plane, input.radius),
        }
    } else {
        MultiPolygon::from_polygon(input.plane.to_vec()).unwrap_or_default()
    };
    let (z_lo, z_hi) = (input.plane_height, input.plane_height + input.vertical_extent);
    for o in obstacles {
        if input.exclude.iter().any(|(obj, part)| *obj == o.object && *part == o.part) {
            continue;
        }
        let corners = o.corners();
        let (lo, hi) = corners
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.z), hi.max(c.z)));
        if hi <= z_lo + 1e-6 || lo >= z_hi - 1e-6 {
            continue;
        }
        if region.is_empty() {
            break;
        }
        let pts: Vec<Vec2> = corners.iter().map(|c| c.xy()).collect();
        let occupied = match input.footprint {
            Some(f) => minkowski_convex(&pts, &f.iter().map(|v| -v).collect::<Vec<_>>()),
            None => minkowski_disc(&pts, input.radius, FOOTPRINT_SEGMENTS),
        };
        region = region.subtract(&occupied);
    }
    check(FeasiblePoseSpace::new(region, input.plane_height), input.object, "coarse localization")
}

/// Admissible side of an anchor-relative directional relation. The normal is
/// the anchor's yawed left, right, front or back axis.
pub fn relation_halfplane(relation: ObjectRelation, anchor: &PlacedInstance) -> HalfPlane {
    let (s, c) = anchor.pose.yaw.sin_cos();
    let front = Vec2::new(-s, c);
    let left = Vec2::new(-c, -s);
    let n = match relation {
        ObjectRelation::LeftOf => left,
        ObjectRelation::RightOf => -left,
        ObjectRelation::InFrontOf => front,
        ObjectRelation::Behind => -front,
        ObjectRelation::Near => unreachable!("near is not a half-plane"),
    };
    HalfPlane::through(anchor.center(), n)
}

pub fn apply_object_relation(
    space: &FeasiblePoseSpace,
    relation: ObjectRelation,
    anchor: &PlacedInstance,
    incoming_radius: f64,
    config: &SolverConfig,
    object: &str,
) -> Result<FeasiblePoseSpace, SolveError> {
    let mut out = space.clone();
    out.region = match relation {
        ObjectRelation::Near => {
            let r = config.near_factor * (anchor.bounding_radius + incoming_radius);
            space.region.intersect(&inscribed_disc(anchor.center(), r, NEAR_SEGMENTS))
        }
        _ => space.region.clip_halfplane(&relation_halfplane(relation, anchor)),
    };
    check(out, object, &format!("{} {}", relation.as_str(), anchor.object_id))
}

/// Placed face in the asset frame.
fn local_face(asset: &Asset, binding: &Binding) -> Face {
    asset
        .part(&binding.placed.part)
        .expect("binding resolved against this asset")
        .local()
        .face(binding.placed.face)
}

fn anchor_face(anchor: &PlacedInstance, binding: &Binding) -> Face {
    anchor
        .part(&binding.anchor.part)
        .expect("binding resolved against this anchor")
        .face(binding.anchor.face)
}

fn polygon_xy(face: &Face) -> Vec<Vec2> {
    face.corners().iter().map(|c| c.xy()).collect()
}

fn set_height(out: &mut FeasiblePoseSpace, height: f64) -> bool {
    if (out.plane_height - height).abs() > 1e-9 {
        return false;
    }
    out.plane_height = height;
    true
}

/// Yaw fixed by an `against` or `aligned_with` binding: the placed face
/// normal must oppose, respectively match, the anchor face normal.
pub fn pinned_yaw(binding: &Binding, asset: &Asset, anchor: &PlacedInstance) -> Option<f64> {
    let sign = match binding.relation {
        PartRelation::Against => -1.0,
        PartRelation::AlignedWith => 1.0,
        _ => return None,
    };
    let fa = anchor_face(anchor, binding);
    let fp = local_face(asset, binding);
    if fa.normal.z.abs() > 1e-6 || fp.normal.z.abs() > 1e-9 {
        return None;
    }
    let n2 = fa.normal.xy().normalize() * sign;
    Some((n2.y.atan2(n2.x) - fp.normal.y.atan2(fp.normal.x)).rem_euclid(TAU))
}

pub fn apply_part_constraint(
    space: &FeasiblePoseSpace,
    binding: &Binding,
    asset: &Asset,
    anchor: &PlacedInstance,
    config: &SolverConfig,
    object: &str,
) -> Result<FeasiblePoseSpace, SolveError> {
    let step = format!("{} {}", binding.relation.as_str(), anchor.object_id);
    let unsupported = |reason: String| SolveError::Unsupported {
        object: object.to_string(),
        reason,
    };
    let mut out = space.clone();
    let fa = anchor_face(anchor, binding);
    let fp = local_face(asset, binding);
    match binding.relation {
        PartRelation::On | PartRelation::In if binding.implicit => {
            if !set_height(&mut out, fa.center.z) {
                return Err(empty(object, &step));
            }
        }
        PartRelation::On | PartRelation::In => {
            if (fa.normal - Vec3::z()).norm() > 1e-9 {
                return Err(unsupported(format!(
                    "{} face {}.{} is not horizontal",
                    binding.relation.as_str(),
                    binding.anchor.part,
                    binding.anchor.face
                )));
            }
            let (t, axis) = face_down_tilt(&fp.normal);
            if !out.restrict_tilt(t, t, axis) || !set_height(&mut out, fa.center.z) {
                return Err(empty(object, &step));
            }
            out.height = HeightMode::Face {
                part: binding.placed.part.clone(),
                face: binding.placed.face,
            };
            // The placed face center must sit on the anchor face; for `on` it is
            // also kept a fraction of the face size away from the edge.
            let rho = (rot_tilt(axis.unwrap_or(Vec2::x()), t) * fp.center).xy().norm();
            let margin = if binding.relation == PartRelation::On {
                config.support_overlap_min * fp.half_u.min(fp.half_v)
            } else {
                0.0
            };
            let allowed = erode_convex(&polygon_xy(&fa), rho + margin);
            out.region = out.region.intersect(&allowed);
            out.bound_part = Some((binding.placed.part.clone(), binding.placed.face));
            out.anchor_face = Some((anchor.object_id.clone(), binding.anchor.part.clone(), binding.anchor.face));
        }
        PartRelation::Against => {
            let n = fa.normal;
            if n.z.abs() > 1e-6 {
                return Err(unsupported(format!(
                    "against face {}.{} is not vertical",
                    binding.anchor.part, binding.anchor.face
                )));
            }
            if fp.normal.z.abs() > 1e-9 {
                return Err(unsupported(format!(
                    "against face {}.{} of the placed asset is not vertical",
                    binding.placed.part, binding.placed.face
                )));
            }
            let n2 = n.xy().normalize();
            let yaw = pinned_yaw(binding, asset, anchor).expect("vertical faces pin the yaw");
            out.yaw_set = out.yaw_set.intersect(&YawSet::single(yaw));
            let axis = Vec2::new(-fp.normal.y, fp.normal.x).normalize();
            if !out.restrict_tilt(config.tilt_min, config.tilt_max, Some(axis)) {
                return Err(empty(object, &step));
            }
            let lean = Lean {
                normal: Vec3::new(n2.x, n2.y, 0.0),
                offset: n.dot(&fa.center),
                corners: fp.corners(),
                yaw,
                axis,
            };
            // Band of origin positions for which some tilt in range makes the
            // face touch: n.p in [-max gap0, -min gap0] with gap0 at p = 0.
            let (lo, hi) = out.tilt_range();
            let gaps: Vec<f64> = (0..=LEAN_GRID)
                .map(|k| lean.gap(Vec2::zeros(), lo + (hi - lo) * k as f64 / LEAN_GRID as f64))
                .collect();
            let gmin = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            let gmax = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = if gmax - gmin < 1e-6 { 1e-6 } else { 0.0 };
            out.region = out
                .region
                .clip_halfplane(&HalfPlane::new(n2, -gmax - pad))
                .clip_halfplane(&HalfPlane::new(-n2, gmin - pad));
            // Keep the designated face within the lateral extent of the anchor face.
            let tangent = Vec3::new(-n2.y, n2.x, 0.0);
            let lat = |f: &Face| f.half_u * f.u.dot(&tangent).abs() + f.half_v * f.v.dot(&tangent).abs();
            let ry = rot_z(yaw);
            let placed_yawed = Face {
                center: ry * fp.center,
                normal: ry * fp.normal,
                u: ry * fp.u,
                v: ry * fp.v,
                ..fp
            };
            let slack = lat(&fa) - lat(&placed_yawed);
            if slack < 0.0 {
                return Err(empty(object, &step));
            }
            let t2 = tangent.xy();
            let mid = t2.dot(&fa.center.xy()) - t2.dot(&placed_yawed.center.xy());
            out.region = out
                .region
                .clip_halfplane(&HalfPlane::new(t2, mid - slack))
                .clip_halfplane(&HalfPlane::new(-t2, -(mid + slack)));
            out.lean = Some(lean);
            out.anchor_face = Some((anchor.object_id.clone(), binding.anchor.part.clone(), binding.anchor.face));
        }
        PartRelation::AlignedWith => {
            if fp.normal.z.abs() > 1e-9 || fa.normal.z.abs() > 1e-6 {
                return Err(unsupported(format!(
                    "aligned_with supports vertical faces only ({}.{} / {}.{})",
                    binding.placed.part, binding.placed.face, binding.anchor.part, binding.anchor.face
                )));
            }
            let n2 = fa.normal.xy().normalize();
            let yaw = pinned_yaw(binding, asset, anchor).expect("vertical faces pin the yaw");
            out.yaw_set = out.yaw_set.intersect(&YawSet::single(yaw));
            if !out.restrict_tilt(0.0, 0.0, None) {
                return Err(empty(object, &step));
            }
            let s = n2.dot(&fa.center.xy()) - n2.dot(&(rot_z(yaw) * fp.center).xy());
            out.region = out
                .region
                .clip_halfplane(&HalfPlane::new(n2, s - ALIGN_BAND))
                .clip_halfplane(&HalfPlane::new(-n2, -(s + ALIGN_BAND)));
        }
    }
    check(out, object, &step)
}
