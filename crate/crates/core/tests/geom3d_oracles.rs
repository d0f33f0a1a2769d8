mod common;

use common::*;
use pag_core::geom3d::{
    enclosure_fraction, face_polygon, min_axis_overlap, obb_intersect, ray_cast, FaceLabel, Mat3,
    Overlap, Ray, Vec3, WorldObb, DEFAULT_TOL,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sat_agrees_with_point_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs: Vec<(WorldObb, WorldObb)> = (0..2000)
        .map(|_| (random_obb(&mut rng, 0.8, 0.05, 0.5), random_obb(&mut rng, 0.8, 0.05, 0.5)))
        .collect();
    let mut compared = 0;
    let mut disagree = 0;
    for (k, (a, b)) in pairs.iter().enumerate() {
        let m = min_axis_overlap(a, b);
        if m.abs() <= DEFAULT_TOL {
            continue;
        }
        let mut orng = ChaCha8Rng::seed_from_u64(k as u64);
        let oracle = sampled_overlap(a, b, 100_000, &mut orng);
        compared += 1;
        if oracle != (m > DEFAULT_TOL) {
            disagree += 1;
        }
    }
    assert!(compared > 1900);
    assert!(disagree as f64 / compared as f64 <= 0.001, "{disagree}/{compared}");
}

#[test]
fn rays_agree_with_marching_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..300 {
        let boxes: Vec<WorldObb> = (0..4).map(|_| random_obb(&mut rng, 2.0, 0.1, 0.6)).collect();
        let origin = loop {
            let o = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if boxes.iter().all(|b| box_sdf(b, &o) > 1e-3) {
                break o;
            }
        };
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let ours = ray_cast(&Ray::new(origin, dir), &boxes).map(|h| h.distance);
        let oracle = march(&origin, &dir, &boxes, 100.0);
        match (ours, oracle) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-4, "case {case}: {a} vs {b}"),
            (None, None) => {}
            other => panic!("case {case}: {other:?}"),
        }
    }
}

#[test]
fn closed_box_fully_encloses_center() {
    let walls = hollow_box(Vec3::new(1.0, 0.8, 0.6), 0.02, false);
    assert_eq!(enclosure_fraction(&Vec3::zeros(), &walls), 1.0);
    assert_eq!(enclosure_fraction(&Vec3::new(20.0, 7.3, 3.1), &walls), 0.0);
}

#[test]
fn open_top_box_close_to_dense_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let inner = Vec3::new(rng.gen_range(0.4..1.0), rng.gen_range(0.4..1.0), rng.gen_range(0.3..0.8));
        let walls = hollow_box(inner, 0.02, true);
        let p = Vec3::new(
            rng.gen_range(-0.3..0.3) * inner.x,
            rng.gen_range(-0.3..0.3) * inner.y,
            -0.5 * inner.z + rng.gen_range(0.05..0.5) * inner.z,
        );
        let coarse = enclosure_fraction(&p, &walls);
        let dense = dense_enclosure(&p, &walls, 1000);
        assert!((coarse - dense).abs() <= 0.15, "{coarse} vs {dense}");
    }
}

#[test]
fn opposite_face_normals_antiparallel() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let o = random_obb(&mut rng, 1.0, 0.1, 1.0);
        for l in [FaceLabel::Top, FaceLabel::Front, FaceLabel::Left] {
            let a = face_polygon(&o, l).normal;
            let b = face_polygon(&o, l.opposite()).normal;
            assert!((a + b).norm() <= 1e-9);
        }
    }
}

fn rigid(o: &WorldObb, rot: &Mat3, shift: &Vec3) -> WorldObb {
    let mut out = o.clone();
    out.center = rot * o.center + shift;
    out.axes = rot * o.axes;
    out
}

proptest! {
    #[test]
    fn sat_is_symmetric_and_rigid_invariant(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_obb(&mut rng, 0.7, 0.05, 0.5);
        let b = random_obb(&mut rng, 0.7, 0.05, 0.5);
        prop_assert_eq!(obb_intersect(&a, &b, DEFAULT_TOL), obb_intersect(&b, &a, DEFAULT_TOL));
        let rot = random_rotation(&mut rng);
        let shift = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let m0 = min_axis_overlap(&a, &b);
        let m1 = min_axis_overlap(&rigid(&a, &rot, &shift), &rigid(&b, &rot, &shift));
        prop_assert!((m0 - m1).abs() <= 1e-9);
        if m0.abs() > 1e-6 + DEFAULT_TOL {
            let c0 = obb_intersect(&a, &b, DEFAULT_TOL);
            let c1 = obb_intersect(&rigid(&a, &rot, &shift), &rigid(&b, &rot, &shift), DEFAULT_TOL);
            prop_assert_eq!(std::mem::discriminant(&c0), std::mem::discriminant(&c1));
            if let (Overlap::Penetrating { depth: d0 }, Overlap::Penetrating { depth: d1 }) = (c0, c1) {
                prop_assert!((d0 - d1).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn enclosure_invariant_under_rigid_motion(seed in 0u64..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let walls = hollow_box(Vec3::new(0.9, 0.7, 0.5), 0.03, rng.gen_bool(0.5));
        let p = Vec3::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2));
        let rot = random_rotation(&mut rng);
        let shift = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let moved: Vec<WorldObb> = walls.iter().map(|w| rigid(w, &rot, &shift)).collect();
        let f0 = enclosure_fraction(&p, &walls);
        let f1 = enclosure_fraction(&(rot * p + shift), &moved);
        prop_assert_eq!(f0, f1);
    }
}
