use std::collections::BTreeMap;

use pag_core::evalkit::{evaluate, SCHEMA_VERSION, iou, match_boxes, normalize_labels, BBox, Detection, SceneGraph, Triplet};
use proptest::prelude::*;

fn bbox() -> impl Strategy<Value = BBox> {
    (0.0..10.0f64, 0.0..10.0f64, 0.1..5.0f64, 0.1..5.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h))
}

fn graph() -> impl Strategy<Value = SceneGraph> {
    prop::collection::vec((0..3usize, bbox()), 2..7).prop_flat_map(|dets| {
        let n = dets.len();
        let detections: Vec<Detection> = dets
            .into_iter()
            .map(|(l, b)| Detection { label: ["cup", "mug", "table"][l].to_string(), bbox: b })
            .collect();
        let rel = (0..n, 0..3usize, 1..n).prop_map(move |(s, p, d)| Triplet {
            s,
            p: ["on", "near", "in"][p].to_string(),
            o: (s + d) % n,
        });
        prop::collection::vec(rel, 0..8).prop_map(move |relations| SceneGraph {
            detections: detections.clone(),
            relations,
            schema_version: SCHEMA_VERSION,
        })
    })
}

fn synonyms() -> BTreeMap<String, String> {
    BTreeMap::from([("mug".to_string(), "cup".to_string())])
}

proptest! {
    #[test]
    fn iou_is_symmetric_bounded_and_scale_invariant(a in bbox(), b in bbox(), s in 0.1..10.0f64) {
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v - iou(&b, &a)).abs() < 1e-12);
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        let scale = |x: &BBox| BBox::new(x.x_min * s, x.y_min * s, x.x_max * s, x.y_max * s);
        prop_assert!((v - iou(&scale(&a), &scale(&b))).abs() < 1e-9);
    }

    #[test]
    fn matching_is_one_to_one_within_class(p in graph(), g in graph(), t in 0.0..1.0f64) {
        let m = match_boxes(&p.detections, &g.detections, t);
        let mut seen_p = std::collections::BTreeSet::new();
        let mut seen_g = std::collections::BTreeSet::new();
        for &(i, j) in &m.pairs {
            prop_assert!(seen_p.insert(i) && seen_g.insert(j));
            prop_assert_eq!(&p.detections[i].label, &g.detections[j].label);
            prop_assert!(iou(&p.detections[i].bbox, &g.detections[j].bbox) >= t);
        }
    }

    #[test]
    fn scores_are_bounded_and_agnostic_dominates(p in graph(), g in graph()) {
        let r = evaluate(&[(p, g)], &synonyms(), 0.5).unwrap();
        for s in [&r.grounded, &r.agnostic] {
            for v in [s.recall, s.precision, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        prop_assert!(r.agnostic.correct >= r.grounded.correct);
        prop_assert!(r.avg_relations <= r.avg_relations_raw);
    }

    #[test]
    fn ground_truth_scores_perfectly(g in graph()) {
        let mut dedup = g.clone();
        dedup.relations.sort();
        dedup.relations.dedup();
        let r = evaluate(&[(dedup.clone(), dedup.clone())], &synonyms(), 0.5).unwrap();
        if !dedup.relations.is_empty() {
            prop_assert_eq!(r.grounded.f1, 1.0);
            prop_assert_eq!(r.agnostic.f1, 1.0);
        }
    }

    #[test]
    fn normalization_is_idempotent(labels in prop::collection::vec(prop::sample::select(vec!["cup", "mug", "table"]), 0..10)) {
        let labels: Vec<String> = labels.into_iter().map(String::from).collect();
        let once = normalize_labels(&labels, &synonyms());
        prop_assert_eq!(normalize_labels(&once, &synonyms()), once.clone());
        prop_assert!(!once.iter().any(|l| l == "mug"));
    }
}
