//! Scene-graph evaluation: synonym normalization, class-wise Hungarian box
//! matching and relation scoring with and without grounding.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Default IoU below which an assigned pair is discarded.
pub const DEFAULT_IOU_MIN: f64 = 0.5;

/// Axis-aligned box `[x_min, y_min, x_max, y_max]` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub bbox: BBox,
}

/// `(subject, predicate, object)` with indices into the detection list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub s: usize,
    pub p: String,
    pub o: usize,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Detections and relations of one image, predicted or ground truth.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub detections: Vec<Detection>,
    #[serde(default)]
    pub relations: Vec<Triplet>,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("detection {index} has an invalid box {bbox:?}")]
    InvalidBox { index: usize, bbox: [f64; 4] },
    #[error("relation {index} refers to detection {detection}, but only {len} exist")]
    BadIndex { index: usize, detection: usize, len: usize },
    #[error("relation {index} relates detection {detection} to itself")]
    SelfRelation { index: usize, detection: usize },
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
}

impl SceneGraph {
    pub fn check(&self) -> Result<(), EvalError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(EvalError::SchemaVersion(self.schema_version));
        }
        for (index, d) in self.detections.iter().enumerate() {
            if !d.bbox.is_valid() {
                return Err(EvalError::InvalidBox {
                    index,
                    bbox: d.bbox.into(),
                });
            }
        }
        let len = self.detections.len();
        for (index, t) in self.relations.iter().enumerate() {
            for detection in [t.s, t.o] {
                if detection >= len {
                    return Err(EvalError::BadIndex { index, detection, len });
                }
            }
            if t.s == t.o {
                return Err(EvalError::SelfRelation { index, detection: t.s });
            }
        }
        Ok(())
    }

    /// Copy with every detection label mapped through the synonym table.
    pub fn normalized(&self, synonyms: &BTreeMap<String, String>) -> SceneGraph {
        let labels: Vec<String> = self.detections.iter().map(|d| d.label.clone()).collect();
        let mut out = self.clone();
        for (d, l) in out.detections.iter_mut().zip(normalize_labels(&labels, synonyms)) {
            d.label = l;
        }
        out
    }
}

/// Replaces aliases by their canonical label; canonicals map to themselves.
pub fn normalize_labels(labels: &[String], synonyms: &BTreeMap<String, String>) -> Vec<String> {
    labels
        .iter()
        .map(|l| synonyms.get(l).unwrap_or(l).clone())
        .collect()
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows <= cols`), by the shortest augmenting path method with potentials.
fn assign_rows(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    debug_assert!(n <= m);
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            rows[owner[j] - 1] = j - 1;
        }
    }
    rows
}

/// Assignment maximizing the summed weight over a rectangular matrix. Returns
/// `(row, col)` pairs; the smaller side is fully assigned.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = weights.len();
    let m = weights.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    if n <= m {
        let cost: Vec<Vec<f64>> = weights.iter().map(|r| r.iter().map(|w| -w).collect()).collect();
        assign_rows(&cost).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| -weights[i][j]).collect()).collect();
        let mut pairs: Vec<(usize, usize)> = assign_rows(&cost).into_iter().enumerate().map(|(j, i)| (i, j)).collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Predicted index to ground-truth index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub total_iou: f64,
}

impl Matching {
    pub fn gt_of(&self, pred: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == pred).map(|p| p.1)
    }
}

/// Class-wise assignment maximizing summed IoU; assigned pairs below
/// `iou_min` are dropped afterwards. Labels must already be normalized.
pub fn match_boxes(pred: &[Detection], gt: &[Detection], iou_min: f64) -> Matching {
    let classes: BTreeSet<&str> = pred.iter().map(|d| d.label.as_str()).collect();
    let mut pairs = Vec::new();
    let mut total = 0.0;
    for class in classes {
        let pi: Vec<usize> = (0..pred.len()).filter(|&i| pred[i].label == class).collect();
        let gi: Vec<usize> = (0..gt.len()).filter(|&j| gt[j].label == class).collect();
        let w: Vec<Vec<f64>> = pi
            .iter()
            .map(|&i| gi.iter().map(|&j| iou(&pred[i].bbox, &gt[j].bbox)).collect())
            .collect();
        for (r, c) in max_weight_assignment(&w) {
            if w[r][c] >= iou_min {
                pairs.push((pi[r], gi[c]));
                total += w[r][c];
            }
        }
    }
    pairs.sort_unstable();
    Matching { pairs, total_iou: total }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub correct: usize,
    /// Predicted relations after removing duplicates.
    pub predicted: usize,
    /// Predicted relations as submitted.
    pub predicted_raw: usize,
    pub ground_truth: usize,
}

impl Scores {
    fn from_counts(correct: usize, predicted: usize, predicted_raw: usize, ground_truth: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let recall = ratio(correct, ground_truth);
        let precision = ratio(correct, predicted);
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            recall,
            precision,
            f1,
            correct,
            predicted,
            predicted_raw,
            ground_truth,
        }
    }
}

fn dedup(triplets: &[Triplet]) -> Vec<&Triplet> {
    let mut seen = BTreeSet::new();
    triplets.iter().filter(|t| seen.insert(*t)).collect()
}

/// Correct predicted relations: grounded through the box matching, or by
/// `(subject label, predicate, object label)` with each ground-truth triplet
/// consumable once. Duplicate predictions count once.
pub fn count_correct(pred: &SceneGraph, gt: &SceneGraph, matching: &Matching, grounded: bool) -> usize {
    let preds = dedup(&pred.relations);
    if grounded {
        let mut remaining: BTreeSet<&Triplet> = gt.relations.iter().collect();
        preds
            .iter()
            .filter(|t| match (matching.gt_of(t.s), matching.gt_of(t.o)) {
                (Some(s), Some(o)) => remaining.remove(&Triplet { s, p: t.p.clone(), o }),
                _ => false,
            })
            .count()
    } else {
        let key = |g: &SceneGraph, t: &Triplet| {
            (g.detections[t.s].label.clone(), t.p.clone(), g.detections[t.o].label.clone())
        };
        let mut pool: BTreeMap<(String, String, String), usize> = BTreeMap::new();
        for t in &gt.relations {
            *pool.entry(key(gt, t)).or_insert(0) += 1;
        }
        preds
            .iter()
            .filter(|t| match pool.get_mut(&key(pred, t)) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    true
                }
                _ => false,
            })
            .count()
    }
}

pub fn score_relations(pred: &SceneGraph, gt: &SceneGraph, matching: &Matching, grounded: bool) -> Scores {
    let correct = count_correct(pred, gt, matching, grounded);
    Scores::from_counts(correct, dedup(&pred.relations).len(), pred.relations.len(), gt.relations.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub iou_min: f64,
    pub scenes: usize,
    pub matched_boxes: usize,
    pub grounded: Scores,
    pub agnostic: Scores,
    /// Predicted relations per scene, after and before removing duplicates.
    pub avg_relations: f64,
    pub avg_relations_raw: f64,
}

impl EvalReport {
    /// Table rows with each cell as "grounded/agnostic".
    pub fn table(&self) -> String {
        let pair = |a: f64, b: f64| format!("{a:.4}/{b:.4}");
        let (g, a) = (&self.grounded, &self.agnostic);
        format!(
            "Recall     {}\nPrecision  {}\nF1         {}\nAvg        {:.2} (raw {:.2})\n",
            pair(g.recall, a.recall),
            pair(g.precision, a.precision),
            pair(g.f1, a.f1),
            self.avg_relations,
            self.avg_relations_raw
        )
    }
}

/// Scores paired prediction and ground-truth graphs, micro-averaged over
/// scenes. Labels are normalized with `synonyms` first.
pub fn evaluate(
    pairs: &[(SceneGraph, SceneGraph)],
    synonyms: &BTreeMap<String, String>,
    iou_min: f64,
) -> Result<EvalReport, EvalError> {
    let (mut cg, mut ca, mut np, mut nraw, mut ngt, mut matched) = (0, 0, 0, 0, 0, 0);
    for (pred, gt) in pairs {
        pred.check()?;
        gt.check()?;
        let (pred, gt) = (pred.normalized(synonyms), gt.normalized(synonyms));
        let m = match_boxes(&pred.detections, &gt.detections, iou_min);
        matched += m.pairs.len();
        cg += count_correct(&pred, &gt, &m, true);
        ca += count_correct(&pred, &gt, &m, false);
        np += dedup(&pred.relations).len();
        nraw += pred.relations.len();
        ngt += gt.relations.len();
    }
    let scenes = pairs.len();
    let per = |x: usize| if scenes == 0 { 0.0 } else { x as f64 / scenes as f64 };
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        iou_min,
        scenes,
        matched_boxes: matched,
        grounded: Scores::from_counts(cg, np, nraw, ngt),
        agnostic: Scores::from_counts(ca, np, nraw, ngt),
        avg_relations: per(np),
        avg_relations_raw: per(nraw),
    })
}
