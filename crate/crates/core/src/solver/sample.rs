//! Drawing poses from a contracted space and validating them against the scene.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::space::{FeasiblePoseSpace, HeightMode, Lean};
use super::{make_pose, orientation, Binding, PlacedInstance, SolverConfig};
use crate::catalog::Asset;
use crate::geom2d::{convex_region, HalfPlane, RegionSampler, Vec2};
use crate::geom3d::{enclosure_fraction, obb_intersect, Face, Vec3, WorldObb};
use crate::pag::PartRelation;

/// Lean contact must close to within this distance after solving for the tilt.
const LEAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum RelationCheck {
    Side(HalfPlane),
    Within { center: Vec2, radius: f64 },
}

impl RelationCheck {
    fn holds(&self, p: Vec2) -> bool {
        match self {
            RelationCheck::Side(hp) => hp.signed_distance(p) >= 0.0,
            RelationCheck::Within { center, radius } => (p - center).norm() <= *radius,
        }
    }
}

/// Predicates a drawn pose must satisfy besides being collision free.
#[derive(Debug, Clone, Default)]
pub struct Requirements {
    pub relations: Vec<RelationCheck>,
    /// Placed (part, face) that must overlap an anchor face by a fraction.
    pub overlaps: Vec<(String, crate::geom3d::FaceLabel, Face, f64)>,
    /// Container boxes that must enclose the placed centroid.
    pub enclosures: Vec<(Vec<WorldObb>, f64)>,
}

impl Requirements {
    pub fn add_binding(&mut self, binding: &Binding, _asset: &Asset, anchor: &PlacedInstance, config: &SolverConfig) {
        let anchor_face = || {
            anchor
                .part(&binding.anchor.part)
                .expect("resolved anchor part")
                .face(binding.anchor.face)
        };
        match binding.relation {
            PartRelation::On if !binding.implicit => self.overlaps.push((
                binding.placed.part.clone(),
                binding.placed.face,
                anchor_face(),
                config.support_overlap_min,
            )),
            PartRelation::In if !binding.implicit => {
                self.enclosures.push((anchor.parts.clone(), config.enclosure_min))
            }
            _ => {}
        }
    }
}

/// Fraction of `placed` whose vertical projection lies on `anchor`.
pub fn projected_overlap(placed: &Face, anchor: &Face) -> f64 {
    let a: Vec<Vec2> = placed.corners().iter().map(|c| c.xy()).collect();
    let b: Vec<Vec2> = anchor.corners().iter().map(|c| c.xy()).collect();
    let pa = convex_region(&a);
    let area = pa.area();
    if area <= 0.0 {
        return 0.0;
    }
    pa.intersect(&convex_region(&b)).area() / area
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub attempts: usize,
    /// Rejected draws by cause.
    pub rejections: BTreeMap<String, usize>,
}

impl Diagnostics {
    fn reject(&mut self, cause: &str) {
        *self.rejections.entry(cause.to_string()).or_insert(0) += 1;
    }

    pub fn summary(&self) -> String {
        if self.rejections.is_empty() {
            return "no draws".into();
        }
        self.rejections
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Tilt in `[lo, hi]` closing the lean gap at position `p`, by bracketing on a
/// grid and bisecting.
fn solve_lean(lean: &Lean, p: Vec2, lo: f64, hi: f64) -> Option<f64> {
    const GRID: usize = 64;
    let f = |t: f64| lean.gap(p, t);
    let mut prev_t = lo;
    let mut prev = f(lo);
    if prev.abs() <= LEAN_TOL * 1e-3 {
        return Some(lo);
    }
    for k in 1..=GRID {
        let t = lo + (hi - lo) * k as f64 / GRID as f64;
        let v = f(t);
        if v.abs() <= LEAN_TOL * 1e-3 {
            return Some(t);
        }
        if (prev < 0.0) != (v < 0.0) {
            let (mut a, mut b, mut fa) = (prev_t, t, prev);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if (fa < 0.0) == (fm < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev_t = t;
        prev = v;
    }
    None
}

/// Draws up to `max_samples_per_object` poses and returns the first one that is
/// collision free and meets every requirement.
pub fn sample_and_validate<R: Rng + ?Sized>(
    space: &FeasiblePoseSpace,
    asset: &Asset,
    object: &str,
    scene: &[WorldObb],
    req: &Requirements,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<PlacedInstance, Diagnostics> {
    let mut diag = Diagnostics::default();
    let sampler = match RegionSampler::new(&space.region) {
        Ok(s) => s,
        Err(_) => {
            diag.reject("empty region");
            return Err(diag);
        }
    };
    let (tlo, thi) = space.tilt_range();
    let local_corners: Vec<Vec3> = asset.parts.iter().flat_map(|p| p.obb.corners()).collect();
    let height_face = match &space.height {
        HeightMode::Face { part, face } => Some(asset.part(part).expect("bound part").local().face(*face).center),
        HeightMode::Rest => None,
    };

    for _ in 0..config.max_samples_per_object {
        diag.attempts += 1;
        let p = sampler.sample(rng);
        let yaw = space.yaw_set.sample(rng).expect("non-empty yaw set");
        let tilt = match &space.lean {
            Some(lean) => match solve_lean(lean, p, tlo, thi) {
                Some(t) => t,
                None => {
                    diag.reject("lean");
                    continue;
                }
            },
            None if thi > tlo => rng.gen_range(tlo..=thi),
            None => tlo,
        };
        if !req.relations.iter().all(|r| r.holds(p)) {
            diag.reject("relation");
            continue;
        }
        let rot = orientation(yaw, tilt, space.tilt_axis);
        let z = match height_face {
            Some(c) => space.plane_height - (rot * c).z,
            None => {
                space.plane_height - local_corners.iter().map(|c| (rot * c).z).fold(f64::INFINITY, f64::min)
            }
        };
        let pose = make_pose(Vec3::new(p.x, p.y, z), yaw, tilt, space.tilt_axis);
        let inst = PlacedInstance::new(object, asset, pose);

        if let Some(lean) = &space.lean {
            if lean_residual(lean, &inst).abs() > LEAN_TOL {
                diag.reject("lean");
                continue;
            }
        }
        if req.overlaps.iter().any(|(part, face, anchor, min)| {
            let f = inst.part(part).expect("bound part").face(*face);
            projected_overlap(&f, anchor) < *min
        }) {
            diag.reject("support");
            continue;
        }
        if inst
            .parts
            .iter()
            .any(|a| scene.iter().any(|b| obb_intersect(a, b, config.collision_tol).is_penetrating()))
        {
            diag.reject("collision");
            continue;
        }
        if !req.enclosures.is_empty() {
            let c = inst.centroid();
            if req.enclosures.iter().any(|(boxes, min)| enclosure_fraction(&c, boxes) < *min) {
                diag.reject("enclosure");
                continue;
            }
        }
        return Ok(inst);
    }
    Err(diag)
}

/// Residual gap between the leaning face and its anchor plane.
fn lean_residual(lean: &Lean, inst: &PlacedInstance) -> f64 {
    let r = inst.pose.rotation();
    let min = lean
        .corners
        .iter()
        .map(|c| lean.normal.dot(&(r * c + inst.pose.translation)))
        .fold(f64::INFINITY, f64::min);
    min - lean.offset
}
