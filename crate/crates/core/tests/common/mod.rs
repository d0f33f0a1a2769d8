//! Independent reference implementations used by the oracle and acceptance tests.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use pag_core::geom3d::{FaceMap, Mat3, Obb, Pose, Vec3, WorldObb};
use rand::Rng;

pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    // Uniform quaternion (Shoemake).
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
        b * (tau * u3).cos(),
    );
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn random_obb(rng: &mut impl Rng, spread: f64, hmin: f64, hmax: f64) -> WorldObb {
    let obb = Obb {
        center: Vec3::new(
            rng.gen_range(-spread..spread),
            rng.gen_range(-spread..spread),
            rng.gen_range(-spread..spread),
        ),
        half_extents: Vec3::new(
            rng.gen_range(hmin..hmax),
            rng.gen_range(hmin..hmax),
            rng.gen_range(hmin..hmax),
        ),
        rotation: random_rotation(rng),
    };
    WorldObb::from_local(&obb, FaceMap::canonical(&obb.rotation), &Pose::default(), "o", "p")
}

/// Box described only by its six bounding planes, derived from corner triples.
pub struct PlaneBox {
    planes: [(Vec3, f64); 6],
}

impl PlaneBox {
    pub fn new(o: &WorldObb) -> Self {
        let c = o.corners();
        // corner index bits: x=1, y=2, z=4; (a, b, d, interior corner)
        let faces = [(0usize, 4usize, 2usize, 1usize), (1, 3, 5, 0), (0, 1, 4, 2), (2, 6, 3, 0), (0, 2, 1, 4), (4, 5, 6, 0)];
        let planes = faces.map(|(a, b, d, inner)| {
            let mut n = (c[b] - c[a]).cross(&(c[d] - c[a])).normalize();
            if n.dot(&(c[inner] - c[a])) < 0.0 {
                n = -n;
            }
            (n, n.dot(&c[a]))
        });
        Self { planes }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.planes.iter().all(|(n, d)| n.dot(p) >= d - 1e-15)
    }
}

pub fn inside_by_planes(o: &WorldObb, p: &Vec3) -> bool {
    PlaneBox::new(o).contains(p)
}

fn aabb(o: &WorldObb) -> (Vec3, Vec3) {
    let c = o.corners();
    let mut lo = c[0];
    let mut hi = c[0];
    for p in &c[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Closest point of the box to `p`, by clamping in the box frame.
pub fn project_onto(o: &WorldObb, p: &Vec3) -> Vec3 {
    let d = p - o.center;
    let mut q = o.center;
    for i in 0..3 {
        let ax = o.axes.column(i).into_owned();
        q += ax * d.dot(&ax).clamp(-o.half_extents[i], o.half_extents[i]);
    }
    q
}

/// Distance between two boxes estimated by alternating projections.
pub fn projected_gap(a: &WorldObb, b: &WorldObb) -> f64 {
    let mut p = a.center;
    let mut gap = f64::INFINITY;
    for _ in 0..20_000 {
        let q = project_onto(b, &p);
        p = project_onto(a, &q);
        let g = (p - q).norm();
        if g < 1e-12 || (gap - g).abs() < 1e-15 {
            return g;
        }
        gap = g;
    }
    gap
}

/// Point-sampling overlap oracle: draws `n` points uniformly in the intersection
/// of the two boxes' axis-aligned bounds and reports whether any lies in both.
/// Shallow corner overlaps have volume on the order of depth cubed, so a miss is
/// confirmed by alternating projections before it is reported.
pub fn sampled_overlap(a: &WorldObb, b: &WorldObb, n: usize, rng: &mut impl Rng) -> bool {
    sampled_hit(a, b, n, rng) || projected_gap(a, b) < 1e-9
}

fn sampled_hit(a: &WorldObb, b: &WorldObb, n: usize, rng: &mut impl Rng) -> bool {
    let (la, ha) = aabb(a);
    let (lb, hb) = aabb(b);
    let lo = la.sup(&lb);
    let hi = ha.inf(&hb);
    if (0..3).any(|i| lo[i] >= hi[i]) {
        return false;
    }
    let (pa, pb) = (PlaneBox::new(a), PlaneBox::new(b));
    (0..n).any(|_| {
        let p = Vec3::new(
            rng.gen_range(lo.x..hi.x),
            rng.gen_range(lo.y..hi.y),
            rng.gen_range(lo.z..hi.z),
        );
        pa.contains(&p) && pb.contains(&p)
    })
}

/// Exact signed distance to an oriented box.
pub fn box_sdf(o: &WorldObb, p: &Vec3) -> f64 {
    let d = p - o.center;
    let q = Vec3::new(
        d.dot(&o.axes.column(0)).abs() - o.half_extents.x,
        d.dot(&o.axes.column(1)).abs() - o.half_extents.y,
        d.dot(&o.axes.column(2)).abs() - o.half_extents.z,
    );
    let outside = q.sup(&Vec3::zeros()).norm();
    outside + q.max().min(0.0)
}

/// Sphere-tracing ray march against the union of boxes. Returns the hit distance.
pub fn march(origin: &Vec3, dir: &Vec3, boxes: &[WorldObb], max_t: f64) -> Option<f64> {
    let dir = dir.normalize();
    let mut t = 0.0;
    for _ in 0..2_000_000 {
        let p = origin + dir * t;
        let s = boxes.iter().map(|b| box_sdf(b, &p)).fold(f64::INFINITY, f64::min);
        if s < 1e-10 {
            return Some(t);
        }
        t += s;
        if t > max_t {
            return None;
        }
    }
    None
}

/// Quasi-uniform directions on the sphere (Fibonacci lattice).
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Dense-ray enclosure estimate using the marching oracle.
pub fn dense_enclosure(point: &Vec3, container: &[WorldObb], n: usize) -> f64 {
    let dirs = fibonacci_directions(n);
    let hits = dirs
        .iter()
        .filter(|d| march(point, d, container, 50.0).is_some())
        .count();
    hits as f64 / n as f64
}

/// Axis-aligned panel in world space.
pub fn panel(name: &str, lo: Vec3, hi: Vec3) -> WorldObb {
    let obb = Obb::axis_aligned((lo + hi) * 0.5, (hi - lo) * 0.5);
    WorldObb::from_local(&obb, FaceMap::canonical(&Mat3::identity()), &Pose::default(), "container", name)
}

/// Hollow box with inner extent `inner` (centered at origin) and wall thickness `t`;
/// `open_top` drops the lid.
pub fn hollow_box(inner: Vec3, t: f64, open_top: bool) -> Vec<WorldObb> {
    let h = inner * 0.5;
    let mut walls = vec![
        panel("bottom", Vec3::new(-h.x - t, -h.y - t, -h.z - t), Vec3::new(h.x + t, h.y + t, -h.z)),
        panel("left", Vec3::new(-h.x - t, -h.y - t, -h.z), Vec3::new(-h.x, h.y + t, h.z)),
        panel("right", Vec3::new(h.x, -h.y - t, -h.z), Vec3::new(h.x + t, h.y + t, h.z)),
        panel("back", Vec3::new(-h.x, -h.y - t, -h.z), Vec3::new(h.x, -h.y, h.z)),
        panel("front", Vec3::new(-h.x, h.y, -h.z), Vec3::new(h.x, h.y + t, h.z)),
    ];
    if !open_top {
        walls.push(panel("lid", Vec3::new(-h.x - t, -h.y - t, h.z), Vec3::new(h.x + t, h.y + t, h.z + t)));
    }
    walls
}
