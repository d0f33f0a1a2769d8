//! Area-uniform point sampling over a multipolygon.

use rand::Rng;

use super::{Geom2dError, MultiPolygon, Vec2};

/// Triangulates a region once and draws area-uniform points from it.
#[derive(Debug, Clone)]
pub struct RegionSampler {
    triangles: Vec<[Vec2; 3]>,
    cumulative: Vec<f64>,
}

fn tri_area(t: &[Vec2; 3]) -> f64 {
    0.5 * super::cross(t[1] - t[0], t[2] - t[0]).abs()
}

impl RegionSampler {
    pub fn new(region: &MultiPolygon) -> Result<Self, Geom2dError> {
        if region.area() <= 0.0 {
            return Err(Geom2dError::EmptyRegion);
        }
        let mut triangles = Vec::new();
        for poly in region.polygons() {
            let mut coords: Vec<f64> = Vec::new();
            let mut hole_starts = Vec::new();
            let mut verts: Vec<Vec2> = Vec::new();
            for ring in std::iter::once(&poly.outer).chain(poly.holes.iter()) {
                if !verts.is_empty() {
                    hole_starts.push(verts.len());
                }
                for v in ring {
                    coords.push(v.x);
                    coords.push(v.y);
                    verts.push(*v);
                }
            }
            // Ear clipping bridges each hole into the outer ring before cutting ears.
            let idx = earcutr::earcut(&coords, &hole_starts, 2).map_err(|_| Geom2dError::EmptyRegion)?;
            for t in idx.chunks_exact(3) {
                let tri = [verts[t[0]], verts[t[1]], verts[t[2]]];
                if tri_area(&tri) > 0.0 {
                    triangles.push(tri);
                }
            }
        }
        let mut cumulative = Vec::with_capacity(triangles.len());
        let mut acc = 0.0;
        for t in &triangles {
            acc += tri_area(t);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Geom2dError::EmptyRegion);
        }
        let expected = region.area();
        if ((acc - expected) / expected).abs() > 1e-6 {
            log::warn!("triangulated area {acc} differs from region area {expected}");
        }
        Ok(Self {
            triangles,
            cumulative,
        })
    }

    pub fn area(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn triangles(&self) -> &[[Vec2; 3]] {
        &self.triangles
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let total = self.area();
        let pick = rng.gen::<f64>() * total;
        let k = self
            .cumulative
            .partition_point(|&c| c <= pick)
            .min(self.triangles.len() - 1);
        let [a, b, c] = self.triangles[k];
        let r1 = rng.gen::<f64>().sqrt();
        let r2 = rng.gen::<f64>();
        a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
    }
}

/// One uniform draw; prefer [`RegionSampler`] when sampling repeatedly.
pub fn sample_point<R: Rng + ?Sized>(region: &MultiPolygon, rng: &mut R) -> Result<Vec2, Geom2dError> {
    Ok(RegionSampler::new(region)?.sample(rng))
}
