//! Binding part edges to concrete faces: explicit names pass through, missing
//! ones are inferred from geometry.

use serde::{Deserialize, Serialize};

use super::{rot_tilt, PlacedInstance, SolveError, SolverConfig};
use crate::geom2d::Vec2;
use crate::catalog::{lowest_part, support_planes_of, Asset};
use crate::geom3d::{enclosure_fraction, ray_cast, FaceLabel, Ray, Vec3, WorldObb};
use crate::pag::{PartEdge, PartRelation};

/// Faces whose normal tilts less than this from horizontal count as vertical.
const VERTICAL_SIN: f64 = 0.173_648_177_666_930_35; // sin 10 deg

/// Height above a candidate floor at which cavity enclosure is probed.
const CAVITY_PROBE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRef {
    pub part: String,
    pub face: FaceLabel,
}

impl FaceRef {
    fn new(part: &str, face: FaceLabel) -> Self {
        Self {
            part: part.to_string(),
            face,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub relation: PartRelation,
    /// Supplied by the supporter field alone: rest on the supporter's largest
    /// support plane without a coplanarity requirement.
    #[serde(default)]
    pub implicit: bool,
    pub support: bool,
    pub anchor_object: String,
    pub placed: FaceRef,
    pub anchor: FaceRef,
    pub inferred: bool,
}

fn describe(edge: &PartEdge) -> String {
    format!("{} {} {}", edge.source, edge.relation.as_str(), edge.target)
}

/// Part whose `label` face lies furthest out along its own normal.
fn extreme_part<'a>(boxes: impl Iterator<Item = &'a WorldObb>, label: FaceLabel) -> Option<&'a WorldObb> {
    let mut best: Option<(&WorldObb, f64)> = None;
    for b in boxes {
        let f = b.face(label);
        let s = f.normal.dot(&f.center);
        let better = match best {
            None => true,
            Some((bb, bs)) => s > bs + 1e-9 || ((s - bs).abs() <= 1e-9 && b.part < bb.part),
        };
        if better {
            best = Some((b, s));
        }
    }
    best.map(|(b, _)| b)
}

/// Part whose `label` face reaches furthest along the face normal once the
/// asset is tilted toward that normal by `tilt`: the part that meets a wall
/// first when leaning.
fn leaning_part<'a>(boxes: &'a [WorldObb], label: FaceLabel, tilt: f64) -> Option<&'a WorldObb> {
    let mut best: Option<(&WorldObb, f64)> = None;
    for b in boxes {
        let f = b.face(label);
        let dir = Vec3::new(f.normal.x, f.normal.y, 0.0);
        if dir.norm() < 1e-9 {
            return extreme_part(boxes.iter(), label);
        }
        let dir = dir.normalize();
        let r = rot_tilt(Vec2::new(-dir.y, dir.x), tilt);
        let s = f.corners().iter().map(|c| dir.dot(&(r * c))).fold(f64::NEG_INFINITY, f64::max);
        let better = match best {
            None => true,
            Some((bb, bs)) => s > bs + 1e-9 || ((s - bs).abs() <= 1e-9 && b.part < bb.part),
        };
        if better {
            best = Some((b, s));
        }
    }
    best.map(|(b, _)| b)
}

/// Lowest upward face of the anchor above which a probe point is enclosed.
fn cavity_floor(anchor: &PlacedInstance, tau: f64) -> Option<FaceRef> {
    let mut best: Option<(&str, f64, f64)> = None;
    for sp in support_planes_of(&anchor.parts) {
        let c = sp.polygon.iter().sum::<nalgebra::Vector2<f64>>() / sp.polygon.len() as f64;
        let probe = Vec3::new(c.x, c.y, sp.height + CAVITY_PROBE);
        if enclosure_fraction(&probe, &anchor.parts) < tau {
            continue;
        }
        let better = match best {
            None => true,
            Some((name, h, a)) => {
                if (sp.height - h).abs() > 1e-9 {
                    sp.height < h
                } else if (sp.area - a).abs() > 1e-12 {
                    sp.area > a
                } else {
                    sp.part.as_str() < name
                }
            }
        };
        if better {
            let part = anchor.parts.iter().find(|p| p.part == sp.part).expect("plane from anchor part");
            best = Some((part.part.as_str(), sp.height, sp.area));
        }
    }
    best.map(|(p, _, _)| FaceRef::new(p, FaceLabel::Top))
}

/// Vertical face of the anchor with the most free space in front of it. Faces
/// whose probe ray leaves the scene (pointing out of the room) rank below any
/// face that sees an obstacle; remaining ties go to area, then name.
fn exposed_vertical_face(anchor: &PlacedInstance, only_part: Option<&str>, obstacles: &[WorldObb]) -> Option<FaceRef> {
    let mut best: Option<(FaceRef, bool, f64, f64)> = None;
    for part in anchor.parts.iter().filter(|p| only_part.map_or(true, |n| p.part == n)) {
        for f in part.faces() {
            if f.normal.z.abs() > VERTICAL_SIN {
                continue;
            }
            let start = f.center + f.normal * 1e-6;
            if anchor.parts.iter().any(|p| p.contains_point(&start)) {
                continue;
            }
            let hit = ray_cast(&Ray::new(start, f.normal), obstacles).map(|h| h.distance);
            let (bounded, free) = match hit {
                Some(d) => (true, d),
                None => (false, 0.0),
            };
            let key = FaceRef::new(&part.part, f.label);
            let better = match &best {
                None => true,
                Some((bk, bb, bf, ba)) => {
                    if bounded != *bb {
                        bounded
                    } else if (free - bf).abs() > 1e-9 {
                        free > *bf
                    } else if (f.area() - ba).abs() > 1e-12 {
                        f.area() > *ba
                    } else {
                        (key.part.as_str(), key.face) < (bk.part.as_str(), bk.face)
                    }
                }
            };
            if better {
                best = Some((key, bounded, free, f.area()));
            }
        }
    }
    best.map(|(k, ..)| k)
}

/// Support on the supporter's largest upward plane, used when a node names a
/// supporter but no support edge.
pub fn implicit_support(asset: &Asset, anchor: &PlacedInstance) -> Result<Binding, String> {
    let plane = support_planes_of(&anchor.parts)
        .into_iter()
        .next()
        .ok_or_else(|| format!("`{}` has no upward-facing support plane", anchor.object_id))?;
    let (part, face) = lowest_part(asset);
    Ok(Binding {
        relation: PartRelation::On,
        implicit: true,
        support: true,
        anchor_object: anchor.object_id.clone(),
        placed: FaceRef::new(&part, face),
        anchor: FaceRef::new(&plane.part, plane.face),
        inferred: true,
    })
}

pub fn resolve_part_constraint(
    edge: &PartEdge,
    asset: &Asset,
    anchor: &PlacedInstance,
    obstacles: &[WorldObb],
    config: &SolverConfig,
) -> Result<Binding, SolveError> {
    let object = edge.source.object.clone();
    let rel = edge.relation;
    let missing = || SolveError::MissingFaces { edge: describe(edge) };
    let unresolvable = |part: &str, reason: &str| SolveError::UnresolvablePart {
        object: object.clone(),
        part: part.to_string(),
        reason: reason.to_string(),
    };

    let local: Vec<WorldObb> = asset.parts.iter().map(|p| p.local()).collect();
    let mid_tilt = 0.5 * (config.tilt_min + config.tilt_max);
    let mut inferred = false;
    let placed = match (&edge.source.part, edge.source.face) {
        (Some(p), face) => {
            if asset.part(p).is_none() {
                return Err(unresolvable(p, &format!("asset `{}` has no such part", asset.id)));
            }
            let face = match (face, rel) {
                (Some(f), _) => f,
                (None, PartRelation::On | PartRelation::In) => FaceLabel::Bottom,
                (None, PartRelation::Against) => FaceLabel::Back,
                (None, PartRelation::AlignedWith) => return Err(missing()),
            };
            inferred |= edge.source.face.is_none();
            FaceRef::new(p, face)
        }
        (None, Some(face)) => {
            inferred = true;
            let b = if rel == PartRelation::Against {
                leaning_part(&local, face, mid_tilt)
            } else {
                extreme_part(local.iter(), face)
            };
            FaceRef::new(&b.expect("assets have parts").part, face)
        }
        (None, None) => {
            inferred = true;
            match rel {
                PartRelation::On | PartRelation::In => {
                    let (p, f) = lowest_part(asset);
                    FaceRef::new(&p, f)
                }
                PartRelation::Against => {
                    let b = leaning_part(&local, FaceLabel::Back, mid_tilt).expect("assets have parts");
                    FaceRef::new(&b.part, FaceLabel::Back)
                }
                PartRelation::AlignedWith => return Err(missing()),
            }
        }
    };

    let anchor_ref = match (&edge.target.part, edge.target.face) {
        (Some(p), face) => {
            if anchor.part(p).is_none() {
                return Err(unresolvable(
                    p,
                    &format!("anchor `{}` ({}) has no such part", anchor.object_id, anchor.asset_id),
                ));
            }
            match (face, rel) {
                (Some(f), _) => FaceRef::new(p, f),
                (None, PartRelation::On | PartRelation::In) => {
                    inferred = true;
                    FaceRef::new(p, FaceLabel::Top)
                }
                (None, PartRelation::Against) => {
                    inferred = true;
                    exposed_vertical_face(anchor, Some(p), obstacles)
                        .ok_or_else(|| unresolvable(p, "no exposed vertical face"))?
                }
                (None, PartRelation::AlignedWith) => return Err(missing()),
            }
        }
        (None, Some(face)) => {
            inferred = true;
            let b = extreme_part(anchor.parts.iter(), face).expect("instances have parts");
            FaceRef::new(&b.part, face)
        }
        (None, None) => {
            inferred = true;
            match rel {
                PartRelation::On => {
                    let sp = support_planes_of(&anchor.parts)
                        .into_iter()
                        .next()
                        .ok_or_else(|| unresolvable(&anchor.object_id, "no upward-facing support plane"))?;
                    FaceRef::new(&sp.part, sp.face)
                }
                PartRelation::In => cavity_floor(anchor, config.enclosure_min)
                    .ok_or_else(|| unresolvable(&anchor.object_id, "no enclosed cavity floor"))?,
                PartRelation::Against => exposed_vertical_face(anchor, None, obstacles)
                    .ok_or_else(|| unresolvable(&anchor.object_id, "no exposed vertical face"))?,
                PartRelation::AlignedWith => return Err(missing()),
            }
        }
    };

    Ok(Binding {
        relation: rel,
        implicit: false,
        support: edge.support_flag,
        anchor_object: anchor.object_id.clone(),
        placed,
        anchor: anchor_ref,
        inferred,
    })
}
