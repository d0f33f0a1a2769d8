//! Part-segmented assets in canonical pose (+Z up, +Y front, grounded at z = 0)
//! and semantic retrieval by category.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom2d::Vec2;
use crate::geom3d::{FaceLabel, FaceMap, Mat3, Obb, Pose, Vec3, WorldObb};

/// Maximum tilt of a face normal from +Z for it to count as upward facing.
pub const SUPPORT_ANGLE_DEG: f64 = 10.0;

const CANON_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("no asset matches query {0:?}")]
    NoMatchingAsset(Vec<String>),
    #[error("asset `{asset}`: {reason}")]
    InvalidAsset { asset: String, reason: String },
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("synonym `{0}` maps to another alias")]
    SynonymChain(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub name: String,
    pub obb: Obb,
    pub faces: FaceMap,
}

impl Part {
    pub fn new(name: &str, obb: Obb) -> Self {
        Self {
            name: name.to_string(),
            faces: FaceMap::canonical(&obb.rotation),
            obb,
        }
    }

    pub fn boxed(name: &str, min: Vec3, max: Vec3) -> Self {
        Self::new(name, Obb::axis_aligned((min + max) * 0.5, (max - min) * 0.5))
    }

    /// The part's box in the asset frame, as a world box under the identity pose.
    pub fn local(&self) -> WorldObb {
        WorldObb::from_local(&self.obb, self.faces, &Pose::default(), "", &self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    pub id: String,
    pub category: String,
    pub parts: Vec<Part>,
    pub bounding_radius: f64,
}

impl Asset {
    /// Checks the canonical-pose invariants and computes the bounding radius.
    pub fn new(id: &str, category: &str, parts: Vec<Part>) -> Result<Self, CatalogError> {
        let bad = |reason: String| CatalogError::InvalidAsset {
            asset: id.to_string(),
            reason,
        };
        if parts.is_empty() {
            return Err(bad("no parts".into()));
        }
        let mut names: Vec<&str> = parts.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad(format!("duplicate part `{}`", w[0])));
        }
        for p in &parts {
            if p.obb.half_extents.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
                return Err(bad(format!("part `{}` has non-positive extents", p.name)));
            }
            let r = &p.obb.rotation;
            if (r.transpose() * r - Mat3::identity()).norm() > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
                return Err(bad(format!("part `{}` rotation is not proper orthonormal", p.name)));
            }
        }
        let (lo, hi) = bounds(&parts);
        if lo.z.abs() > CANON_TOL {
            return Err(bad(format!("lowest point at z = {} instead of 0", lo.z)));
        }
        let mid = (lo + hi) * 0.5;
        if mid.x.abs() > 1e-6 || mid.y.abs() > 1e-6 {
            return Err(bad(format!("footprint centered at ({}, {}) instead of origin", mid.x, mid.y)));
        }
        let bounding_radius = corners(&parts)
            .map(|c| c.xy().norm())
            .fold(0.0, f64::max);
        Ok(Self {
            id: id.to_string(),
            category: category.to_string(),
            parts,
            bounding_radius,
        })
    }

    /// Shifts the parts into canonical pose before validating.
    pub fn canonicalize(id: &str, category: &str, mut parts: Vec<Part>) -> Result<Self, CatalogError> {
        if !parts.is_empty() {
            let (lo, hi) = bounds(&parts);
            let shift = Vec3::new(-(lo.x + hi.x) * 0.5, -(lo.y + hi.y) * 0.5, -lo.z);
            for p in &mut parts {
                p.obb.center += shift;
            }
        }
        Self::new(id, category, parts)
    }

    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn height(&self) -> f64 {
        bounds(&self.parts).1.z
    }

    pub fn world_parts(&self, pose: &Pose, object: &str) -> Vec<WorldObb> {
        self.parts
            .iter()
            .map(|p| WorldObb::from_local(&p.obb, p.faces, pose, object, &p.name))
            .collect()
    }
}

fn corners(parts: &[Part]) -> impl Iterator<Item = Vec3> + '_ {
    parts.iter().flat_map(|p| p.obb.corners())
}

fn bounds(parts: &[Part]) -> (Vec3, Vec3) {
    corners(parts).fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), c| (lo.inf(&c), hi.sup(&c)),
    )
}

/// The part touching the ground and its bottom face. Ties on height go to the
/// larger bottom face, then to the smaller name.
pub fn lowest_part(asset: &Asset) -> (String, FaceLabel) {
    let key = |p: &Part| {
        let z = p.obb.corners().iter().map(|c| c.z).fold(f64::INFINITY, f64::min);
        (z, p.local().face(FaceLabel::Bottom).area())
    };
    let mut best = &asset.parts[0];
    let (mut bz, mut ba) = key(best);
    for p in &asset.parts[1..] {
        let (z, a) = key(p);
        let better = if (z - bz).abs() > CANON_TOL {
            z < bz
        } else if (a - ba).abs() > CANON_TOL {
            a > ba
        } else {
            p.name < best.name
        };
        if better {
            best = p;
            (bz, ba) = (z, a);
        }
    }
    (best.name.clone(), FaceLabel::Bottom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportPlane {
    pub part: String,
    pub face: FaceLabel,
    /// Face rectangle projected onto the XY plane, counter-clockwise.
    pub polygon: Vec<Vec2>,
    pub height: f64,
    pub area: f64,
}

/// Upward-facing top faces of the given boxes, largest first.
pub fn support_planes_of(boxes: &[WorldObb]) -> Vec<SupportPlane> {
    let cos_max = SUPPORT_ANGLE_DEG.to_radians().cos();
    let mut out: Vec<SupportPlane> = boxes
        .iter()
        .filter_map(|b| {
            let f = b.face(FaceLabel::Top);
            if f.normal.z < cos_max {
                return None;
            }
            let polygon: Vec<Vec2> = f.corners().iter().map(|c| c.xy()).collect();
            Some(SupportPlane {
                part: b.part.clone(),
                face: FaceLabel::Top,
                polygon,
                height: f.center.z,
                area: f.area(),
            })
        })
        .collect();
    out.sort_by(|a, b| b.area.total_cmp(&a.area).then_with(|| a.part.cmp(&b.part)));
    out
}

pub fn support_planes(asset: &Asset) -> Vec<SupportPlane> {
    let local: Vec<WorldObb> = asset.parts.iter().map(Part::local).collect();
    support_planes_of(&local)
}

#[derive(Debug, Clone, Default)]
pub struct AssetCatalog {
    by_category: BTreeMap<String, Vec<Asset>>,
    synonyms: BTreeMap<String, String>,
}

impl AssetCatalog {
    pub fn new(assets: Vec<Asset>, synonyms: BTreeMap<String, String>) -> Result<Self, CatalogError> {
        for (alias, canon) in &synonyms {
            if synonyms.contains_key(canon) && alias != canon {
                return Err(CatalogError::SynonymChain(alias.clone()));
            }
        }
        let mut by_category: BTreeMap<String, Vec<Asset>> = BTreeMap::new();
        let mut ids = std::collections::BTreeSet::new();
        for a in assets {
            if !ids.insert(a.id.clone()) {
                return Err(CatalogError::InvalidAsset {
                    asset: a.id,
                    reason: "duplicate id".into(),
                });
            }
            let cat = synonyms.get(&a.category).cloned().unwrap_or_else(|| a.category.clone());
            by_category.entry(cat).or_default().push(a);
        }
        for list in by_category.values_mut() {
            list.sort_by(|a, b| a.id.cmp(&b.id));
        }
        Ok(Self { by_category, synonyms })
    }

    pub fn canonical<'a>(&'a self, label: &'a str) -> &'a str {
        self.synonyms.get(label).map(String::as_str).unwrap_or(label)
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.by_category.keys().map(String::as_str)
    }

    pub fn assets(&self) -> impl Iterator<Item = &Asset> {
        self.by_category.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_category.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_category.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&Asset, CatalogError> {
        self.assets()
            .find(|a| a.id == id)
            .ok_or_else(|| CatalogError::UnknownAsset(id.to_string()))
    }

    /// All assets whose canonical category appears in the query, in a stable order.
    pub fn candidates(&self, query: &[String]) -> Vec<&Asset> {
        let mut cats: Vec<&str> = query.iter().map(|q| self.canonical(q)).collect();
        cats.sort_unstable();
        cats.dedup();
        cats.iter()
            .filter_map(|c| self.by_category.get(*c))
            .flatten()
            .collect()
    }

    /// Uniform choice over every asset matching any category in the query.
    pub fn retrieve<R: Rng + ?Sized>(&self, query: &[String], rng: &mut R) -> Result<&Asset, CatalogError> {
        let pool = self.candidates(query);
        if pool.is_empty() {
            return Err(CatalogError::NoMatchingAsset(query.to_vec()));
        }
        Ok(pool[rng.gen_range(0..pool.len())])
    }

    pub fn retrieve_seeded(&self, query: &[String], seed: u64) -> Result<&Asset, CatalogError> {
        self.retrieve(query, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chair() -> Asset {
        Asset::canonicalize(
            "chair_a",
            "chair",
            vec![
                Part::boxed("legs", Vec3::new(-0.2, -0.2, 0.0), Vec3::new(0.2, 0.2, 0.4)),
                Part::boxed("seat", Vec3::new(-0.22, -0.22, 0.4), Vec3::new(0.22, 0.22, 0.45)),
                Part::boxed("back", Vec3::new(-0.22, -0.22, 0.45), Vec3::new(0.22, -0.18, 0.9)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chair_stands_on_legs() {
        assert_eq!(lowest_part(&chair()), ("legs".to_string(), FaceLabel::Bottom));
    }

    #[test]
    fn grounded_and_centered() {
        let c = chair();
        let z = c.parts.iter().flat_map(|p| p.obb.corners()).map(|v| v.z).fold(f64::INFINITY, f64::min);
        assert_eq!(z, 0.0);
        assert!((c.bounding_radius - (0.22f64.powi(2) * 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn off_origin_asset_rejected() {
        let err = Asset::new(
            "x",
            "box",
            vec![Part::boxed("body", Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0))],
        );
        assert!(matches!(err, Err(CatalogError::InvalidAsset { .. })));
    }

    #[test]
    fn tilted_shelf_is_not_a_support_plane() {
        let rot = *nalgebra::Rotation3::from_axis_angle(&Vec3::x_axis(), std::f64::consts::FRAC_PI_4).matrix();
        let a = Asset::canonicalize(
            "rack",
            "rack",
            vec![
                Part::boxed("base", Vec3::new(-0.5, -0.5, 0.0), Vec3::new(0.5, 0.5, 0.1)),
                Part::new(
                    "shelf",
                    Obb {
                        center: Vec3::new(0.0, 0.0, 0.6),
                        half_extents: Vec3::new(0.4, 0.3, 0.02),
                        rotation: rot,
                    },
                ),
            ],
        )
        .unwrap();
        let planes = support_planes(&a);
        assert_eq!(planes.len(), 1);
        assert_eq!(planes[0].part, "base");
    }

    #[test]
    fn synonym_query_is_deterministic() {
        let mug = |id: &str| {
            Asset::canonicalize(id, "mug", vec![Part::boxed("body", Vec3::zeros(), Vec3::new(0.08, 0.08, 0.1))]).unwrap()
        };
        let cat = AssetCatalog::new(
            vec![mug("mug_a"), mug("mug_b")],
            BTreeMap::from([("cup".to_string(), "mug".to_string())]),
        )
        .unwrap();
        let q = vec!["cup".to_string()];
        let a = cat.retrieve_seeded(&q, 3).unwrap();
        assert_eq!(a.category, "mug");
        assert_eq!(a.id, cat.retrieve_seeded(&q, 3).unwrap().id);
        assert!(matches!(
            cat.retrieve_seeded(&["sofa".to_string()], 0),
            Err(CatalogError::NoMatchingAsset(_))
        ));
    }
}
