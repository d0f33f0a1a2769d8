//! Versioned JSON file formats for catalogs and scenes, and OBJ export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::AuditReport;
use crate::catalog::{Asset, AssetCatalog, CatalogError, Part};
use crate::geom3d::{Mat3, Obb, Pose, Vec3, WorldObb};
use crate::pag::Room;
use crate::solver::{asset_for, room_asset, EdgeBinding, PlacedInstance, Scene};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error("instance `{object}`: {reason}")]
    Instance { object: String, reason: String },
}

fn check_version(v: u32) -> Result<(), IoError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(IoError::SchemaVersion(v))
    }
}

fn row_major(m: &Mat3) -> [f64; 9] {
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

fn from_row_major(r: &[f64; 9]) -> Mat3 {
    Mat3::from_row_slice(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub name: String,
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    /// Row-major 3x3 rotation; identity when omitted.
    #[serde(default = "identity_rows")]
    pub rotation: [f64; 9],
}

fn identity_rows() -> [f64; 9] {
    row_major(&Mat3::identity())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSpec {
    pub id: String,
    pub category: String,
    pub parts: Vec<PartSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub assets: Vec<AssetSpec>,
    #[serde(default)]
    pub synonyms: BTreeMap<String, String>,
}

impl CatalogFile {
    pub fn from_catalog(catalog: &AssetCatalog) -> Self {
        let assets = catalog
            .assets()
            .map(|a| AssetSpec {
                id: a.id.clone(),
                category: a.category.clone(),
                parts: a
                    .parts
                    .iter()
                    .map(|p| PartSpec {
                        name: p.name.clone(),
                        center: p.obb.center.into(),
                        half_extents: p.obb.half_extents.into(),
                        rotation: row_major(&p.obb.rotation),
                    })
                    .collect(),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            assets,
            synonyms: catalog.synonyms().clone(),
        }
    }

    pub fn into_catalog(self) -> Result<AssetCatalog, IoError> {
        check_version(self.schema_version)?;
        let assets = self
            .assets
            .into_iter()
            .map(|a| {
                let parts = a
                    .parts
                    .iter()
                    .map(|p| {
                        Part::new(
                            &p.name,
                            Obb {
                                center: p.center.into(),
                                half_extents: p.half_extents.into(),
                                rotation: from_row_major(&p.rotation),
                            },
                        )
                    })
                    .collect();
                Asset::new(&a.id, &a.category, parts)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AssetCatalog::new(assets, self.synonyms)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub part: String,
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    pub rotation: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub object_id: String,
    pub asset_id: String,
    pub translation: [f64; 3],
    pub yaw: f64,
    pub tilt: f64,
    /// World-frame horizontal tilt axis.
    pub tilt_axis: [f64; 2],
    /// World boxes of the parts, for consumers without the catalog.
    pub parts: Vec<BoxRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub pag_id: String,
    pub seed: u64,
    pub room: Room,
    pub instances: Vec<InstanceRecord>,
    #[serde(default)]
    pub bindings: Vec<EdgeBinding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
}

impl SceneFile {
    pub fn from_scene(scene: &Scene, audit: Option<AuditReport>) -> Self {
        let instances = scene
            .instances
            .iter()
            .map(|i| InstanceRecord {
                object_id: i.object_id.clone(),
                asset_id: i.asset_id.clone(),
                translation: i.pose.translation.into(),
                yaw: i.pose.yaw,
                tilt: i.pose.tilt,
                tilt_axis: i.pose.tilt_axis.into(),
                parts: i
                    .parts
                    .iter()
                    .map(|p| BoxRecord {
                        part: p.part.clone(),
                        center: p.center.into(),
                        half_extents: p.half_extents.into(),
                        rotation: row_major(&p.axes),
                    })
                    .collect(),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            pag_id: scene.pag_id.clone(),
            seed: scene.seed,
            room: scene.room,
            instances,
            bindings: scene.bindings.clone(),
            audit,
        }
    }

    /// Rebuilds the scene from poses; part boxes come from the catalog.
    pub fn into_scene(self, catalog: &AssetCatalog) -> Result<Scene, IoError> {
        check_version(self.schema_version)?;
        let room = room_asset(&self.room);
        let instances = self
            .instances
            .iter()
            .map(|r| {
                let asset = asset_for(&r.asset_id, &room, catalog).map_err(|e| IoError::Instance {
                    object: r.object_id.clone(),
                    reason: e.to_string(),
                })?;
                // Fields are restored verbatim so rebuilt boxes match bit for bit.
                let pose = Pose {
                    translation: r.translation.into(),
                    yaw: r.yaw,
                    tilt: r.tilt,
                    tilt_axis: r.tilt_axis.into(),
                };
                Ok(PlacedInstance::new(&r.object_id, asset, pose))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(Scene {
            pag_id: self.pag_id,
            seed: self.seed,
            room: self.room,
            instances,
            bindings: self.bindings,
        })
    }
}

/// Versioned envelope for the contact graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub threshold: f64,
    #[serde(flatten)]
    pub graph: crate::contact::ContactGraph,
}

/// Vertex index of the box corner with the given axis signs.
fn corner_index(s: [f64; 3]) -> usize {
    (0..3).map(|i| ((s[i] > 0.0) as usize) << i).sum()
}

/// Two counter-clockwise (outward) triangles per box face, as 0-based corner
/// indices.
fn box_triangles() -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(12);
    for i in 0..3 {
        for sign in [1.0, -1.0] {
            let (mut j, mut k) = ((i + 1) % 3, (i + 2) % 3);
            if sign < 0.0 {
                std::mem::swap(&mut j, &mut k);
            }
            let quad = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].map(|(a, b)| {
                let mut s = [0.0; 3];
                s[i] = sign;
                s[j] = a;
                s[k] = b;
                corner_index(s)
            });
            out.push([quad[0], quad[1], quad[2]]);
            out.push([quad[0], quad[2], quad[3]]);
        }
    }
    out
}

fn box_vertices(b: &WorldObb) -> [Vec3; 8] {
    std::array::from_fn(|n| {
        let s = Vec3::new(
            if n & 1 != 0 { 1.0 } else { -1.0 },
            if n & 2 != 0 { 1.0 } else { -1.0 },
            if n & 4 != 0 { 1.0 } else { -1.0 },
        );
        b.center + b.axes * s.component_mul(&b.half_extents)
    })
}

/// Wavefront OBJ with one group `object/part` of 8 vertices and 12 triangles
/// per part box.
pub fn scene_to_obj(scene: &Scene) -> String {
    let tris = box_triangles();
    let mut out = format!("# scene {} seed {}\n", scene.pag_id, scene.seed);
    let mut base = 1;
    for b in scene.all_parts() {
        let _ = writeln!(out, "g {}/{}", b.object, b.part);
        for v in box_vertices(b) {
            let _ = writeln!(out, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z);
        }
        for t in &tris {
            let _ = writeln!(out, "f {} {} {}", base + t[0], base + t[1], base + t[2]);
        }
        base += 8;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangles_face_outward() {
        let b = WorldObb::from_local(
            &Obb::axis_aligned(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0)),
            crate::geom3d::FaceMap::canonical(&Mat3::identity()),
            &Pose::default(),
            "o",
            "p",
        );
        let v = box_vertices(&b);
        let tris = box_triangles();
        assert_eq!(tris.len(), 12);
        let mut volume = 0.0;
        for t in &tris {
            let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&((a + b + c) / 3.0)) > 0.0);
            volume += a.dot(&b.cross(&c)) / 6.0;
        }
        assert!((volume - 48.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_rows_round_trip() {
        let m = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(from_row_major(&row_major(&m)), m);
        assert_eq!(row_major(&m)[1], -1.0);
    }
}
