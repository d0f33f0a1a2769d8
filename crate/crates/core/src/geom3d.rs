//! Rigid poses, oriented boxes with labeled faces, separating-axis overlap,
//! slab ray casting and ray-based enclosure probing.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default penetration tolerance (m).
pub const DEFAULT_TOL: f64 = 1e-4;

/// Minimum ray parameter counted as a hit.
pub const RAY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceLabel {
    Top,
    Bottom,
    Front,
    Back,
    Left,
    Right,
}

impl FaceLabel {
    /// Label priority order used when binding faces.
    pub const ALL: [FaceLabel; 6] = [
        FaceLabel::Top,
        FaceLabel::Bottom,
        FaceLabel::Front,
        FaceLabel::Back,
        FaceLabel::Left,
        FaceLabel::Right,
    ];

    pub fn opposite(self) -> FaceLabel {
        match self {
            FaceLabel::Top => FaceLabel::Bottom,
            FaceLabel::Bottom => FaceLabel::Top,
            FaceLabel::Front => FaceLabel::Back,
            FaceLabel::Back => FaceLabel::Front,
            FaceLabel::Left => FaceLabel::Right,
            FaceLabel::Right => FaceLabel::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaceLabel::Top => "top",
            FaceLabel::Bottom => "bottom",
            FaceLabel::Front => "front",
            FaceLabel::Back => "back",
            FaceLabel::Left => "left",
            FaceLabel::Right => "right",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaceLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown face label `{s}`"))
    }
}

/// Binding of the six labels to box axes: label -> (axis index, sign).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceMap {
    slots: [(usize, f64); 6],
}

impl FaceMap {
    /// Assigns labels from a part rotation in canonical asset pose. Each label
    /// pair picks greedily in priority order (top, front, left) and its
    /// opposite label takes the antipodal face.
    pub fn canonical(rotation: &Mat3) -> Self {
        let mut free: Vec<(usize, f64)> = (0..3).flat_map(|i| [(i, 1.0), (i, -1.0)]).collect();
        let mut slots = [(0usize, 0.0f64); 6];
        let picks: [(FaceLabel, fn(&Vec3) -> f64); 3] = [
            (FaceLabel::Top, |n| n.z),
            (FaceLabel::Front, |n| n.y),
            (FaceLabel::Left, |n| -n.x),
        ];
        for (label, score) in picks {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (k, &(axis, sign)) in free.iter().enumerate() {
                let n = rotation.column(axis) * sign;
                let s = score(&n);
                if s > best_score + 1e-12 {
                    best = k;
                    best_score = s;
                }
            }
            let (axis, sign) = free[best];
            slots[label.index()] = (axis, sign);
            slots[label.opposite().index()] = (axis, -sign);
            free.retain(|&(a, _)| a != axis);
        }
        Self { slots }
    }

    pub fn axis_sign(&self, label: FaceLabel) -> (usize, f64) {
        self.slots[label.index()]
    }
}

/// Oriented box in some parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub rotation: Mat3,
}

impl Obb {
    pub fn axis_aligned(center: Vec3, half_extents: Vec3) -> Self {
        Self {
            center,
            half_extents,
            rotation: Mat3::identity(),
        }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        box_corners(&self.center, &self.rotation, &self.half_extents)
    }
}

fn box_corners(center: &Vec3, axes: &Mat3, h: &Vec3) -> [Vec3; 8] {
    let mut out = [Vec3::zeros(); 8];
    for (k, slot) in out.iter_mut().enumerate() {
        let sx = if k & 1 == 0 { -1.0 } else { 1.0 };
        let sy = if k & 2 == 0 { -1.0 } else { 1.0 };
        let sz = if k & 4 == 0 { -1.0 } else { 1.0 };
        *slot = center
            + axes.column(0) * (sx * h.x)
            + axes.column(1) * (sy * h.y)
            + axes.column(2) * (sz * h.z);
    }
    out
}

/// Asset pose: yaw about +Z, then tilt about a horizontal axis, then translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: Vec3,
    pub yaw: f64,
    pub tilt: f64,
    pub tilt_axis: Vector2<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self {
            translation: Vec3::zeros(),
            yaw: 0.0,
            tilt: 0.0,
            tilt_axis: Vector2::new(1.0, 0.0),
        }
    }
}

impl Pose {
    pub fn new(translation: Vec3, yaw: f64) -> Self {
        Self {
            translation,
            yaw: yaw.rem_euclid(std::f64::consts::TAU),
            ..Self::default()
        }
    }

    pub fn with_tilt(mut self, tilt: f64, axis: Vector2<f64>) -> Self {
        self.tilt = tilt;
        let n = axis.norm();
        self.tilt_axis = if n > 0.0 { axis / n } else { Vector2::new(1.0, 0.0) };
        self
    }

    pub fn yaw_rotation(&self) -> Mat3 {
        *Rotation3::from_axis_angle(&Vec3::z_axis(), self.yaw).matrix()
    }

    pub fn rotation(&self) -> Mat3 {
        let yaw = self.yaw_rotation();
        if self.tilt == 0.0 {
            return yaw;
        }
        let axis = Unit::new_normalize(Vec3::new(self.tilt_axis.x, self.tilt_axis.y, 0.0));
        Rotation3::from_axis_angle(&axis, self.tilt).matrix() * yaw
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p + self.translation
    }
}

/// An oriented box placed in the world, tagged with its owner and part name.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldObb {
    pub object: String,
    pub part: String,
    pub center: Vec3,
    pub half_extents: Vec3,
    pub axes: Mat3,
    pub faces: FaceMap,
}

/// A labeled rectangular face in world space. `u x v = normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub label: FaceLabel,
    pub center: Vec3,
    pub normal: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub half_u: f64,
    pub half_v: f64,
}

impl Face {
    /// Corners counter-clockwise when viewed from outside.
    pub fn corners(&self) -> [Vec3; 4] {
        let (u, v) = (self.u * self.half_u, self.v * self.half_v);
        [
            self.center - u - v,
            self.center + u - v,
            self.center + u + v,
            self.center - u + v,
        ]
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_u * self.half_v
    }

    /// Plane offset `d` in `normal . p = d`.
    pub fn offset(&self) -> f64 {
        self.normal.dot(&self.center)
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset()
    }
}

impl WorldObb {
    pub fn from_local(obb: &Obb, faces: FaceMap, pose: &Pose, object: &str, part: &str) -> Self {
        let r = pose.rotation();
        Self {
            object: object.to_string(),
            part: part.to_string(),
            center: r * obb.center + pose.translation,
            half_extents: obb.half_extents,
            axes: r * obb.rotation,
            faces,
        }
    }

    pub fn axis(&self, i: usize) -> Vec3 {
        self.axes.column(i).into_owned()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        box_corners(&self.center, &self.axes, &self.half_extents)
    }

    pub fn face(&self, label: FaceLabel) -> Face {
        face_polygon(self, label)
    }

    pub fn faces(&self) -> [Face; 6] {
        FaceLabel::ALL.map(|l| self.face(l))
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        let d = p - self.center;
        (0..3).all(|i| d.dot(&self.axis(i)).abs() <= self.half_extents[i])
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    pub fn translated(&self, delta: &Vec3) -> Self {
        let mut out = self.clone();
        out.center += delta;
        out
    }
}

/// World rectangle of a labeled face. Labels stay bound to the canonical-pose
/// assignment and move rigidly with the box.
pub fn face_polygon(obb: &WorldObb, label: FaceLabel) -> Face {
    let (i, sign) = obb.faces.axis_sign(label);
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let normal = obb.axis(i) * sign;
    let (mut u, mut v) = (obb.axis(j), obb.axis(k));
    let (mut hu, mut hv) = (obb.half_extents[j], obb.half_extents[k]);
    if sign < 0.0 {
        std::mem::swap(&mut u, &mut v);
        std::mem::swap(&mut hu, &mut hv);
    }
    Face {
        label,
        center: obb.center + normal * obb.half_extents[i],
        normal,
        u,
        v,
        half_u: hu,
        half_v: hv,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Overlap {
    Separated,
    Touching,
    Penetrating { depth: f64 },
}

impl Overlap {
    pub fn is_penetrating(&self) -> bool {
        matches!(self, Overlap::Penetrating { .. })
    }
}

fn order_key(o: &WorldObb) -> [f64; 6] {
    [
        o.center.x,
        o.center.y,
        o.center.z,
        o.half_extents.x,
        o.half_extents.y,
        o.half_extents.z,
    ]
}

/// Minimum signed overlap over the 15 separating-axis candidates. Negative
/// values are a separation distance along the best separating axis.
pub fn min_axis_overlap(a: &WorldObb, b: &WorldObb) -> f64 {
    // Evaluate in a fixed argument order so the result is exactly symmetric.
    let (a, b) = {
        let (ka, kb) = (order_key(a), order_key(b));
        let swap = ka
            .iter()
            .zip(kb.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .is_some_and(|o| o.is_gt());
        if swap {
            (b, a)
        } else {
            (a, b)
        }
    };
    let ha = a.half_extents;
    let hb = b.half_extents;
    let mut r = [[0.0f64; 3]; 3];
    let mut abs_r = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = a.axis(i).dot(&b.axis(j));
            abs_r[i][j] = r[i][j].abs();
        }
    }
    let d = b.center - a.center;
    let t = [d.dot(&a.axis(0)), d.dot(&a.axis(1)), d.dot(&a.axis(2))];
    let mut best = f64::INFINITY;

    for i in 0..3 {
        let rb = hb[0] * abs_r[i][0] + hb[1] * abs_r[i][1] + hb[2] * abs_r[i][2];
        best = best.min(ha[i] + rb - t[i].abs());
    }
    for j in 0..3 {
        let ra = ha[0] * abs_r[0][j] + ha[1] * abs_r[1][j] + ha[2] * abs_r[2][j];
        let dist = (t[0] * r[0][j] + t[1] * r[1][j] + t[2] * r[2][j]).abs();
        best = best.min(ra + hb[j] - dist);
    }
    for i in 0..3 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        for j in 0..3 {
            let len = (1.0 - r[i][j] * r[i][j]).max(0.0).sqrt();
            if len < 1e-9 {
                continue;
            }
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            let ra = ha[i1] * abs_r[i2][j] + ha[i2] * abs_r[i1][j];
            let rb = hb[j1] * abs_r[i][j2] + hb[j2] * abs_r[i][j1];
            let dist = (t[i2] * r[i1][j] - t[i1] * r[i2][j]).abs();
            best = best.min((ra + rb - dist) / len);
        }
    }
    best
}

/// Separating-axis classification with a symmetric contact band of `tol`.
pub fn obb_intersect(a: &WorldObb, b: &WorldObb, tol: f64) -> Overlap {
    let m = min_axis_overlap(a, b);
    if m > tol {
        Overlap::Penetrating { depth: m }
    } else if m >= -tol {
        Overlap::Touching
    } else {
        Overlap::Separated
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub index: usize,
    pub object: String,
    pub part: String,
}

/// Slab test; nearest parameter greater than [`RAY_EPS`].
pub fn ray_obb(ray: &Ray, obb: &WorldObb) -> Option<f64> {
    let rel = ray.origin - obb.center;
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for i in 0..3 {
        let axis = obb.axis(i);
        let o = rel.dot(&axis);
        let d = ray.direction.dot(&axis);
        let h = obb.half_extents[i];
        if d.abs() < 1e-15 {
            if o.abs() > h {
                return None;
            }
            continue;
        }
        let (mut t1, mut t2) = ((-h - o) / d, (h - o) / d);
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        t_min = t_min.max(t1);
        t_max = t_max.min(t2);
        if t_max < t_min {
            return None;
        }
    }
    if t_min > RAY_EPS {
        Some(t_min)
    } else if t_max > RAY_EPS {
        Some(t_max)
    } else {
        None
    }
}

pub fn ray_cast(ray: &Ray, obbs: &[WorldObb]) -> Option<RayHit> {
    let mut best: Option<(f64, usize)> = None;
    for (i, o) in obbs.iter().enumerate() {
        if let Some(t) = ray_obb(ray, o) {
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
    }
    best.map(|(distance, index)| RayHit {
        distance,
        index,
        object: obbs[index].object.clone(),
        part: obbs[index].part.clone(),
    })
}

/// The 26 unit directions toward the neighbours of a cell in a 3x3x3 lattice.
pub fn lattice_directions() -> Vec<Vec3> {
    let mut out = Vec::with_capacity(26);
    for x in -1..=1 {
        for y in -1..=1 {
            for z in -1..=1 {
                if (x, y, z) != (0, 0, 0) {
                    out.push(Vec3::new(x as f64, y as f64, z as f64).normalize());
                }
            }
        }
    }
    out
}

/// Fraction of probe rays from `point` that hit any of the container boxes.
pub fn enclosure_fraction_with(point: &Vec3, container: &[WorldObb], directions: &[Vec3]) -> f64 {
    if directions.is_empty() {
        return 0.0;
    }
    let hits = directions
        .iter()
        .filter(|d| container.iter().any(|o| ray_obb(&Ray::new(*point, **d), o).is_some()))
        .count();
    hits as f64 / directions.len() as f64
}

/// Enclosure with the 26-direction lattice probe. The lattice is expressed in
/// the frame of the container's first box, so the result is unchanged when
/// point and container move together rigidly.
pub fn enclosure_fraction(point: &Vec3, container: &[WorldObb]) -> f64 {
    let frame = container.first().map_or_else(Mat3::identity, |o| o.axes);
    let dirs: Vec<Vec3> = lattice_directions().iter().map(|d| frame * d).collect();
    enclosure_fraction_with(point, container, &dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn cube(center: Vec3, pose: &Pose) -> WorldObb {
        let obb = Obb::axis_aligned(center, Vec3::new(0.5, 0.5, 0.5));
        WorldObb::from_local(&obb, FaceMap::canonical(&Mat3::identity()), pose, "o", "p")
    }

    #[test]
    fn canonical_faces_for_identity() {
        let m = FaceMap::canonical(&Mat3::identity());
        assert_eq!(m.axis_sign(FaceLabel::Top), (2, 1.0));
        assert_eq!(m.axis_sign(FaceLabel::Bottom), (2, -1.0));
        assert_eq!(m.axis_sign(FaceLabel::Front), (1, 1.0));
        assert_eq!(m.axis_sign(FaceLabel::Left), (0, -1.0));
        assert_eq!(m.axis_sign(FaceLabel::Right), (0, 1.0));
    }

    #[test]
    fn cubes_far_apart_are_separated() {
        let a = cube(Vec3::zeros(), &Pose::default());
        let b = cube(Vec3::new(3.0, 0.0, 0.0), &Pose::default());
        assert_eq!(obb_intersect(&a, &b, DEFAULT_TOL), Overlap::Separated);
    }

    #[test]
    fn coincident_cubes_penetrate_fully() {
        let a = cube(Vec3::zeros(), &Pose::default());
        match obb_intersect(&a, &a.clone(), DEFAULT_TOL) {
            Overlap::Penetrating { depth } => assert!((depth - 1.0).abs() < 1e-12),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn stacked_cubes_touch() {
        let a = cube(Vec3::zeros(), &Pose::default());
        let b = cube(Vec3::new(0.2, 0.1, 1.0), &Pose::new(Vec3::zeros(), 0.3));
        assert_eq!(obb_intersect(&a, &b, DEFAULT_TOL), Overlap::Touching);
    }

    #[test]
    fn top_face_at_identity() {
        let c = cube(Vec3::zeros(), &Pose::default());
        let f = c.face(FaceLabel::Top);
        assert!((f.center.z - 0.5).abs() < 1e-15);
        assert!((f.normal - Vec3::z()).norm() < 1e-15);
        assert!((f.u.cross(&f.v) - f.normal).norm() < 1e-12);
    }

    #[test]
    fn labels_move_rigidly_under_yaw() {
        let c = cube(Vec3::zeros(), &Pose::new(Vec3::zeros(), FRAC_PI_2));
        assert!((c.face(FaceLabel::Top).normal - Vec3::z()).norm() < 1e-12);
        assert!((c.face(FaceLabel::Front).normal - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn toppled_book_front_points_down() {
        // Tilt 80 degrees about -X: the +Y front face swings toward -Z.
        let pose = Pose::default().with_tilt(80f64.to_radians(), Vector2::new(-1.0, 0.0));
        let book = cube(Vec3::zeros(), &pose);
        let n = book.face(FaceLabel::Front).normal;
        let angle = n.dot(&-Vec3::z()).clamp(-1.0, 1.0).acos().to_degrees();
        assert!(angle <= 10.0 + 1e-9, "front normal {angle} deg from -Z");
    }

    #[test]
    fn ray_hits_slab_at_unit_distance() {
        let b = WorldObb::from_local(
            &Obb::axis_aligned(Vec3::new(0.0, 0.0, 1.5), Vec3::new(1.0, 1.0, 0.5)),
            FaceMap::canonical(&Mat3::identity()),
            &Pose::default(),
            "box",
            "body",
        );
        let hit = ray_cast(&Ray::new(Vec3::zeros(), Vec3::z()), &[b.clone()]).unwrap();
        assert!((hit.distance - 1.0).abs() < 1e-12);
        assert_eq!(hit.part, "body");
        assert!(ray_cast(&Ray::new(Vec3::zeros(), -Vec3::z()), &[b]).is_none());
    }

    #[test]
    fn lattice_has_26_unit_directions() {
        let d = lattice_directions();
        assert_eq!(d.len(), 26);
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }
}
