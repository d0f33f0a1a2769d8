//! Region algebra checked against independent point-membership and clipping oracles.

use pag_core::geom2d::{
    clip_halfplane, convex_hull, signed_area, HalfPlane, MultiPolygon, RegionSampler, Vec2,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rotated rectangle described by center, half extents and angle.
#[derive(Debug, Clone, Copy)]
struct Rect {
    c: Vec2,
    h: Vec2,
    a: f64,
}

impl Rect {
    fn random(rng: &mut impl Rng) -> Self {
        Self {
            c: Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            h: Vec2::new(rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)),
            a: rng.gen_range(0.0..std::f64::consts::PI),
        }
    }

    fn axes(&self) -> (Vec2, Vec2) {
        let u = Vec2::new(self.a.cos(), self.a.sin());
        (u, Vec2::new(-u.y, u.x))
    }

    fn corners(&self) -> Vec<Vec2> {
        let (u, v) = self.axes();
        [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .iter()
            .map(|&(s, t)| self.c + u * (s * self.h.x) + v * (t * self.h.y))
            .collect()
    }

    fn contains(&self, p: Vec2) -> bool {
        let (u, v) = self.axes();
        let d = p - self.c;
        d.dot(&u).abs() <= self.h.x && d.dot(&v).abs() <= self.h.y
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec2 {
        let (u, v) = self.axes();
        self.c + u * (rng.gen_range(-1.0..1.0) * self.h.x) + v * (rng.gen_range(-1.0..1.0) * self.h.y)
    }

    fn area(&self) -> f64 {
        4.0 * self.h.x * self.h.y
    }

    fn region(&self) -> MultiPolygon {
        MultiPolygon::from_polygon(self.corners()).unwrap()
    }
}

#[test]
fn subtract_matches_monte_carlo_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let a = Rect::random(&mut rng);
        let b = Rect::random(&mut rng);
        let diff = a.region().subtract(&b.region());
        diff.validate().unwrap();
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let p = a.sample(&mut rng);
            if !b.contains(p) {
                hits += 1;
            }
        }
        let mc = a.area() * hits as f64 / n as f64;
        assert!(
            (mc - diff.area()).abs() <= 0.01 * a.area(),
            "case {case}: exact {} vs monte-carlo {mc}",
            diff.area()
        );
        let inter = a.region().intersect(&b.region()).area();
        assert!(((diff.area() + inter) - a.area()).abs() <= 1e-6 * a.area());
    }
}

/// Reference clipper: one Sutherland-Hodgman pass over a convex ring.
fn sutherland_hodgman(ring: &[Vec2], n: Vec2, off: f64) -> Vec<Vec2> {
    let inside = |p: &Vec2| p.dot(&n) - off >= 0.0;
    let mut out = Vec::new();
    for i in 0..ring.len() {
        let s = ring[i];
        let e = ring[(i + 1) % ring.len()];
        match (inside(&s), inside(&e)) {
            (true, true) => out.push(e),
            (true, false) => {
                let t = (off - s.dot(&n)) / (e - s).dot(&n);
                out.push(s + (e - s) * t);
            }
            (false, true) => {
                let t = (off - s.dot(&n)) / (e - s).dot(&n);
                out.push(s + (e - s) * t);
                out.push(e);
            }
            (false, false) => {}
        }
    }
    out
}

#[test]
fn halfplane_clip_matches_reference_clipper() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..300 {
        let pts: Vec<Vec2> = (0..rng.gen_range(3..12))
            .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let hull = convex_hull(&pts);
        if hull.len() < 3 {
            continue;
        }
        let region = MultiPolygon::from_polygon(hull.clone()).unwrap();
        let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let n = Vec2::new(ang.cos(), ang.sin());
        let off = rng.gen_range(-0.8..0.8);
        let ours = clip_halfplane(&region, &HalfPlane::new(n, off));
        let reference = sutherland_hodgman(&hull, n, off);
        let ref_area = signed_area(&reference).abs();
        assert!((ours.area() - ref_area).abs() < 1e-9, "case {case}");
        // every reference vertex (after dropping duplicates) appears in our output
        let ours_pts: Vec<Vec2> = ours.rings().flat_map(|r| r.vertices.to_vec()).collect();
        for v in &reference {
            let near_ours = ours_pts.iter().any(|o| (o - v).norm() <= 1e-9);
            let collinear_dup = reference
                .iter()
                .filter(|w| (*w - v).norm() <= 1e-9)
                .count()
                > 1;
            assert!(near_ours || collinear_dup || ref_area < 1e-12, "case {case}: vertex {v:?} missing");
        }
        for o in &ours_pts {
            assert!(reference.iter().any(|v| (o - v).norm() <= 1e-9), "case {case}: extra vertex {o:?}");
        }
    }
}

#[test]
fn unit_square_quadrants_uniform() {
    let sq = MultiPolygon::rect(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0));
    let s = RegionSampler::new(&sq).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut q = [0usize; 4];
    let n = 10_000;
    for _ in 0..n {
        let p = s.sample(&mut rng);
        assert!(sq.contains(p));
        q[(p.x >= 0.5) as usize + 2 * (p.y >= 0.5) as usize] += 1;
    }
    for c in q {
        let f = c as f64 / n as f64;
        assert!((f - 0.25).abs() <= 0.02, "quadrant fraction {f}");
    }
}

#[test]
fn l_shape_arms_area_weighted() {
    // Long arm [0,3]x[0,1] (area 3) and short arm [0,1]x[1,2] (area 1).
    let l = MultiPolygon::rect(Vec2::new(0.0, 0.0), Vec2::new(3.0, 1.0))
        .union(&MultiPolygon::rect(Vec2::new(0.0, 1.0), Vec2::new(1.0, 2.0)));
    let s = RegionSampler::new(&l).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 20_000;
    let upper = (0..n).filter(|_| s.sample(&mut rng).y > 1.0).count();
    let f = upper as f64 / n as f64;
    assert!((f - 0.25).abs() <= 0.03, "upper arm fraction {f}");
}

proptest! {
    #[test]
    fn clip_is_idempotent(ax in 0.0f64..6.28, off in -0.5f64..0.5, w in 0.2f64..2.0) {
        let r = MultiPolygon::rect(Vec2::new(-w, -0.7), Vec2::new(w, 0.9))
            .subtract(&MultiPolygon::rect(Vec2::new(-0.1, -0.1), Vec2::new(0.1, 0.1)));
        let hp = HalfPlane::new(Vec2::new(ax.cos(), ax.sin()), off);
        let once = r.clip_halfplane(&hp);
        let twice = once.clip_halfplane(&hp);
        prop_assert!((once.area() - twice.area()).abs() < 1e-12);
        prop_assert_eq!(once.vertex_count(), twice.vertex_count());
        prop_assert!(once.validate().is_ok());
    }

    #[test]
    fn sampled_points_are_members(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Rect::random(&mut rng).region();
        let b = Rect::random(&mut rng).region();
        let d = a.subtract(&b);
        if let Ok(s) = RegionSampler::new(&d) {
            for _ in 0..50 {
                prop_assert!(d.contains(s.sample(&mut rng)));
            }
        }
    }
}
