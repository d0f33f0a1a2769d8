//! Boolean overlay of two multipolygons.
//!
//! Both operands' edges are split at every mutual intersection, vertices within
//! [`SNAP_TOL`] are merged, and each resulting edge is classified by which side
//! of it lies inside each operand. Edges whose two sides disagree under the
//! chosen operation form the output boundary; they are oriented with the result
//! on the left and linked into rings by always taking the tightest turn.

use std::collections::{BTreeMap, HashMap};

use super::{cross, point_in_ring, signed_area, MultiPolygon, Polygon, Vec2, SNAP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Intersection,
    Union,
    Difference,
    Xor,
}

impl Op {
    fn apply(self, a: bool, b: bool) -> bool {
        match self {
            Op::Intersection => a && b,
            Op::Union => a || b,
            Op::Difference => a && !b,
            Op::Xor => a != b,
        }
    }
}

struct Segment {
    p: Vec2,
    q: Vec2,
    owner: usize,
}

/// Merges points closer than the snapping tolerance. Insertion order decides
/// which coordinates survive, so the subject's vertices are kept verbatim.
struct VertexPool {
    points: Vec<Vec2>,
    grid: HashMap<(i64, i64), Vec<u32>>,
}

const CELL: f64 = 1e-6;

impl VertexPool {
    fn new() -> Self {
        Self {
            points: Vec::new(),
            grid: HashMap::new(),
        }
    }

    fn cell(p: Vec2) -> (i64, i64) {
        ((p.x / CELL).floor() as i64, (p.y / CELL).floor() as i64)
    }

    fn intern(&mut self, p: Vec2) -> u32 {
        let (cx, cy) = Self::cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) {
                    for &id in ids {
                        if (self.points[id as usize] - p).norm() <= SNAP_TOL {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        self.grid.entry((cx, cy)).or_default().push(id);
        id
    }
}

fn collect_segments(mp: &MultiPolygon, owner: usize, out: &mut Vec<Segment>) {
    for ring in mp.rings() {
        let v = ring.vertices;
        for i in 0..v.len() {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            if (q - p).norm() > SNAP_TOL {
                out.push(Segment { p, q, owner });
            }
        }
    }
}

fn boxes_disjoint(a: (Vec2, Vec2), b: (Vec2, Vec2)) -> bool {
    a.1.x < b.0.x - SNAP_TOL
        || b.1.x < a.0.x - SNAP_TOL
        || a.1.y < b.0.y - SNAP_TOL
        || b.1.y < a.0.y - SNAP_TOL
}

/// True when `p` and `q` lie strictly on opposite sides of the line through
/// `o` along `d`, each more than the snapping tolerance away.
fn straddles(o: Vec2, d: Vec2, p: Vec2, q: Vec2) -> bool {
    let n = d.norm();
    let sp = cross(d, p - o) / n;
    let sq = cross(d, q - o) / n;
    (sp > SNAP_TOL && sq < -SNAP_TOL) || (sp < -SNAP_TOL && sq > SNAP_TOL)
}

fn concat(a: &MultiPolygon, b: &MultiPolygon) -> MultiPolygon {
    let mut polys = a.polygons().to_vec();
    polys.extend_from_slice(b.polygons());
    MultiPolygon::from_normalized(polys)
}

pub(crate) fn overlay(a: &MultiPolygon, b: &MultiPolygon, op: Op) -> MultiPolygon {
    match (a.bbox(), b.bbox()) {
        (None, None) => return MultiPolygon::empty(),
        (Some(_), None) => {
            return if op.apply(true, false) {
                a.clone()
            } else {
                MultiPolygon::empty()
            }
        }
        (None, Some(_)) => {
            return if op.apply(false, true) {
                b.clone()
            } else {
                MultiPolygon::empty()
            }
        }
        (Some(ba), Some(bb)) if boxes_disjoint(ba, bb) => {
            return match op {
                Op::Intersection => MultiPolygon::empty(),
                Op::Difference => a.clone(),
                Op::Union | Op::Xor => concat(a, b),
            }
        }
        _ => {}
    }

    let mut segs = Vec::new();
    collect_segments(a, 0, &mut segs);
    collect_segments(b, 1, &mut segs);

    let mut pool = VertexPool::new();
    for s in &segs {
        pool.intern(s.p);
    }

    // Winding contribution per operand for each undirected edge (lo id, hi id):
    // +1 when the operand traverses it lo -> hi (interior on the left).
    let mut edges: BTreeMap<(u32, u32), [i32; 2]> = BTreeMap::new();
    let seg_boxes: Vec<(Vec2, Vec2)> = segs.iter().map(|s| (s.p.inf(&s.q), s.p.sup(&s.q))).collect();

    for (i, si) in segs.iter().enumerate() {
        let d1 = si.q - si.p;
        let len2 = d1.norm_squared();
        let mut cuts: Vec<(f64, Vec2)> = vec![(0.0, si.p), (1.0, si.q)];
        for (j, sj) in segs.iter().enumerate() {
            if i == j || boxes_disjoint(seg_boxes[i], seg_boxes[j]) {
                continue;
            }
            for e in [sj.p, sj.q] {
                let t = ((e - si.p).dot(&d1) / len2).clamp(0.0, 1.0);
                let foot = si.p + d1 * t;
                if (foot - e).norm() <= SNAP_TOL {
                    cuts.push((t, e));
                }
            }
            // Only proper crossings, with every endpoint clearly off the other
            // line; touching and collinear overlaps are handled by the
            // endpoint cuts above, so near-parallel pairs never produce
            // spurious intersection points.
            let d2 = sj.q - sj.p;
            if !straddles(si.p, d1, sj.p, sj.q) || !straddles(sj.p, d2, si.p, si.q) {
                continue;
            }
            let denom = cross(d1, d2);
            let w = sj.p - si.p;
            let t = cross(w, d2) / denom;
            let u = cross(w, d1) / denom;
            if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                cuts.push((t, si.p + d1 * t));
            }
        }
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut ids: Vec<u32> = cuts.iter().map(|c| pool.intern(c.1)).collect();
        ids.dedup();
        for w in ids.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            let sign = if u < v { 1 } else { -1 };
            edges.entry(key).or_insert([0, 0])[si.owner] += sign;
        }
    }

    let pts = &pool.points;
    let operands = [a, b];
    let mut directed: Vec<(u32, u32)> = Vec::new();
    for (&(lo, hi), winding) in &edges {
        let mid = (pts[lo as usize] + pts[hi as usize]) * 0.5;
        let mut left = [false; 2];
        let mut right = [false; 2];
        for k in 0..2 {
            match winding[k].signum() {
                1 => left[k] = true,
                -1 => right[k] = true,
                _ => {
                    let inside = operands[k].contains(mid);
                    left[k] = inside;
                    right[k] = inside;
                }
            }
        }
        let rl = op.apply(left[0], left[1]);
        let rr = op.apply(right[0], right[1]);
        if rl == rr {
            continue;
        }
        directed.push(if rl { (lo, hi) } else { (hi, lo) });
    }

    let rings = trace_rings(pts, &directed);
    assemble(rings)
}

fn angle_of(d: Vec2) -> f64 {
    d.y.atan2(d.x)
}

fn trace_rings(pts: &[Vec2], directed: &[(u32, u32)]) -> Vec<Vec<Vec2>> {
    let mut outgoing: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, &(u, _)) in directed.iter().enumerate() {
        outgoing.entry(u).or_default().push(i);
    }
    let mut used = vec![false; directed.len()];
    let mut rings = Vec::new();
    for start in 0..directed.len() {
        if used[start] {
            continue;
        }
        let mut ring = Vec::new();
        let mut e = start;
        let mut closed = false;
        for _ in 0..=directed.len() {
            used[e] = true;
            let (u, v) = directed[e];
            ring.push(pts[u as usize]);
            let back = angle_of(pts[u as usize] - pts[v as usize]);
            let mut best: Option<(f64, usize)> = None;
            for &cand in outgoing.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                let (_, w) = directed[cand];
                let mut cw = (back - angle_of(pts[w as usize] - pts[v as usize]))
                    .rem_euclid(std::f64::consts::TAU);
                if cw <= 1e-15 {
                    cw = std::f64::consts::TAU;
                }
                if best.map_or(true, |(b, _)| cw < b) {
                    best = Some((cw, cand));
                }
            }
            let Some((_, next)) = best else { break };
            if next == start {
                closed = true;
                break;
            }
            if used[next] {
                break;
            }
            e = next;
        }
        if closed {
            rings.push(ring);
        } else {
            log::warn!("overlay produced an open boundary chain of {} vertices; dropped", ring.len());
        }
    }
    rings
}

/// Removes repeated vertices, straight-through vertices and zero-width spikes.
fn simplify(mut ring: Vec<Vec2>) -> Vec<Vec2> {
    loop {
        let n = ring.len();
        if n < 3 {
            return ring;
        }
        let mut keep = Vec::with_capacity(n);
        let mut changed = false;
        for i in 0..n {
            let a = ring[(i + n - 1) % n];
            let b = ring[i];
            let c = ring[(i + 1) % n];
            let ab = b - a;
            let bc = c - b;
            let span = (c - a).norm().max(ab.norm()).max(bc.norm());
            if ab.norm() <= SNAP_TOL || cross(ab, bc).abs() <= SNAP_TOL * span {
                changed = true;
                continue;
            }
            keep.push(b);
        }
        if !changed {
            return keep;
        }
        ring = keep;
    }
}

fn rotate_to_min(ring: &mut [Vec2]) {
    if let Some(k) = (0..ring.len()).min_by(|&i, &j| {
        ring[i]
            .x
            .total_cmp(&ring[j].x)
            .then(ring[i].y.total_cmp(&ring[j].y))
    }) {
        ring.rotate_left(k);
    }
}

fn assemble(rings: Vec<Vec<Vec2>>) -> MultiPolygon {
    let mut outers: Vec<(f64, Vec<Vec2>, Vec<Vec<Vec2>>)> = Vec::new();
    let mut holes: Vec<Vec<Vec2>> = Vec::new();
    for ring in rings {
        let mut ring = simplify(ring);
        if ring.len() < 3 {
            continue;
        }
        let a = signed_area(&ring);
        if a.abs() <= 1e-20 {
            continue;
        }
        rotate_to_min(&mut ring);
        if a > 0.0 {
            outers.push((a, ring, Vec::new()));
        } else {
            holes.push(ring);
        }
    }
    for hole in holes {
        let probe = hole_probe(&hole);
        let owner = outers
            .iter()
            .enumerate()
            .filter(|(_, (_, o, _))| point_in_ring(o, probe))
            .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i);
        match owner {
            Some(i) => outers[i].2.push(hole),
            None => log::warn!("overlay hole without enclosing ring; dropped"),
        }
    }
    let mut polys: Vec<Polygon> = outers
        .into_iter()
        .map(|(_, outer, mut holes)| {
            holes.sort_by(|x, y| x[0].x.total_cmp(&y[0].x).then(x[0].y.total_cmp(&y[0].y)));
            Polygon { outer, holes }
        })
        .collect();
    polys.sort_by(|x, y| {
        x.outer[0]
            .x
            .total_cmp(&y.outer[0].x)
            .then(x.outer[0].y.total_cmp(&y.outer[0].y))
    });
    MultiPolygon::from_normalized(polys)
}

/// A point just on the filled side of the hole's longest edge.
fn hole_probe(hole: &[Vec2]) -> Vec2 {
    let n = hole.len();
    let i = (0..n)
        .max_by(|&i, &j| {
            (hole[(i + 1) % n] - hole[i])
                .norm()
                .total_cmp(&(hole[(j + 1) % n] - hole[j]).norm())
        })
        .unwrap_or(0);
    let (a, b) = (hole[i], hole[(i + 1) % n]);
    let d = b - a;
    let left = Vec2::new(-d.y, d.x).normalize();
    (a + b) * 0.5 + left * (1e-7f64).min(0.01 * d.norm())
}
