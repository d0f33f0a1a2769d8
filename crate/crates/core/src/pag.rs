//! Part-centric assembly graphs: object nodes with semantic queries, part
//! references with labeled faces, spatial and geometric edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom3d::FaceLabel;

pub const SCHEMA_VERSION: u32 = 1;

/// Either a single label or a set of candidate labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Query {
    One(String),
    Any(Vec<String>),
}

impl Query {
    pub fn labels(&self) -> Vec<String> {
        match self {
            Query::One(s) => vec![s.clone()],
            Query::Any(v) => v.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Query::One(s) => s.is_empty(),
            Query::Any(v) => v.is_empty() || v.iter().all(|s| s.is_empty()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: String,
    pub query: Query,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supporter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartNodeRef {
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<FaceLabel>,
}

impl PartNodeRef {
    pub fn object(id: &str) -> Self {
        Self {
            object: id.to_string(),
            part: None,
            face: None,
        }
    }

    pub fn face(id: &str, part: &str, face: FaceLabel) -> Self {
        Self {
            object: id.to_string(),
            part: Some(part.to_string()),
            face: Some(face),
        }
    }
}

impl fmt::Display for PartNodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.object)?;
        if let Some(p) = &self.part {
            write!(f, ".{p}")?;
        }
        if let Some(face) = self.face {
            write!(f, ".{face}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectRelation {
    LeftOf,
    RightOf,
    Behind,
    InFrontOf,
    Near,
}

impl ObjectRelation {
    pub const ALL: [ObjectRelation; 5] = [
        ObjectRelation::LeftOf,
        ObjectRelation::RightOf,
        ObjectRelation::Behind,
        ObjectRelation::InFrontOf,
        ObjectRelation::Near,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectRelation::LeftOf => "left_of",
            ObjectRelation::RightOf => "right_of",
            ObjectRelation::Behind => "behind",
            ObjectRelation::InFrontOf => "in_front_of",
            ObjectRelation::Near => "near",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartRelation {
    On,
    In,
    Against,
    AlignedWith,
}

impl PartRelation {
    pub const ALL: [PartRelation; 4] = [
        PartRelation::On,
        PartRelation::In,
        PartRelation::Against,
        PartRelation::AlignedWith,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PartRelation::On => "on",
            PartRelation::In => "in",
            PartRelation::Against => "against",
            PartRelation::AlignedWith => "aligned_with",
        }
    }

    pub fn can_support(self) -> bool {
        matches!(self, PartRelation::On | PartRelation::In)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEdge {
    pub source: String,
    pub target: String,
    pub relation: ObjectRelation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartEdge {
    pub source: PartNodeRef,
    pub target: PartNodeRef,
    pub relation: PartRelation,
    #[serde(default, rename = "support")]
    pub support_flag: bool,
}

/// Interior dimensions of the synthetic room hosting the root node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub wall_height: f64,
}

impl Default for Room {
    fn default() -> Self {
        Self {
            width: 6.0,
            depth: 5.0,
            wall_height: 2.5,
        }
    }
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pag {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub id: String,
    pub root: String,
    #[serde(default)]
    pub room: Room,
    pub objects: Vec<ObjectNode>,
    #[serde(default)]
    pub object_edges: Vec<ObjectEdge>,
    #[serde(default)]
    pub part_edges: Vec<PartEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateObject { id: String },
    EmptyQuery { id: String },
    UnknownRoot { id: String },
    RootHasSupporter { id: String },
    DanglingReference { edge: String, id: String },
    SelfEdge { edge: String },
    MultipleSupporters { id: String, supporters: Vec<String> },
    MissingSupporter { id: String },
    InvalidSupportFlag { edge: String },
    /// One witness per strongly connected component; `members` is the whole component.
    Cycle { members: Vec<String>, witness: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateObject { id } => write!(f, "duplicate object id `{id}`"),
            Violation::EmptyQuery { id } => write!(f, "object `{id}` has an empty query"),
            Violation::UnknownRoot { id } => write!(f, "root `{id}` is not an object"),
            Violation::RootHasSupporter { id } => write!(f, "root `{id}` has a supporter"),
            Violation::DanglingReference { edge, id } => {
                write!(f, "{edge} references unknown object `{id}`")
            }
            Violation::SelfEdge { edge } => write!(f, "self edge {edge}"),
            Violation::MultipleSupporters { id, supporters } => {
                write!(f, "object `{id}` has several supporters: {}", supporters.join(", "))
            }
            Violation::MissingSupporter { id } => write!(f, "object `{id}` has no supporter"),
            Violation::InvalidSupportFlag { edge } => {
                write!(f, "{edge} is flagged as support but its relation cannot support")
            }
            Violation::Cycle { witness, .. } => {
                write!(f, "cycle {} -> {}", witness.join(" -> "), witness[0])
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn cycles(&self) -> impl Iterator<Item = &Vec<String>> {
        self.violations.iter().filter_map(|v| match v {
            Violation::Cycle { members, .. } => Some(members),
            _ => None,
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "- {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PagError {
    #[error("invalid PAG ({} violation(s)):\n{report}", report.violations.len())]
    Invalid { report: ValidationReport },
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
}

fn describe_object_edge(e: &ObjectEdge) -> String {
    format!("{} {} {}", e.source, e.relation.as_str(), e.target)
}

fn describe_part_edge(e: &PartEdge) -> String {
    format!("{} {} {}", e.source, e.relation.as_str(), e.target)
}

impl Pag {
    pub fn object(&self, id: &str) -> Option<&ObjectNode> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Supporter of every node: the explicit `supporter` field plus the targets
    /// of support-flagged part edges.
    pub fn supporters(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for o in &self.objects {
            let entry = out.entry(o.id.as_str()).or_default();
            if let Some(s) = &o.supporter {
                entry.insert(s.as_str());
            }
        }
        for e in &self.part_edges {
            if e.support_flag && e.relation.can_support() {
                out.entry(e.source.object.as_str())
                    .or_default()
                    .insert(e.target.object.as_str());
            }
        }
        out
    }

    /// The unique supporter of `id`, if the graph is valid.
    pub fn supporter_of(&self, id: &str) -> Option<&str> {
        self.supporters().get(id).and_then(|s| s.iter().next().copied())
    }

    /// Dependency edges `anchor -> dependent` from supporters, object edges
    /// and part edges. References to unknown ids and self-edges are skipped.
    pub fn dependency_edges(&self) -> BTreeSet<(&str, &str)> {
        let known: BTreeSet<&str> = self.objects.iter().map(|o| o.id.as_str()).collect();
        let mut edges = BTreeSet::new();
        let pairs = self
            .objects
            .iter()
            .filter_map(|o| o.supporter.as_deref().map(|s| (s, o.id.as_str())))
            .chain(self.object_edges.iter().map(|e| (e.target.as_str(), e.source.as_str())))
            .chain(self.part_edges.iter().map(|e| (e.target.object.as_str(), e.source.object.as_str())));
        for (from, to) in pairs {
            if from != to && known.contains(from) && known.contains(to) {
                edges.insert((from, to));
            }
        }
        edges
    }
}

/// Reports every structural problem; an empty report means the graph is a valid PAG.
pub fn validate(pag: &Pag) -> ValidationReport {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for o in &pag.objects {
        if !seen.insert(o.id.as_str()) {
            out.push(Violation::DuplicateObject { id: o.id.clone() });
        }
        if o.query.is_empty() {
            out.push(Violation::EmptyQuery { id: o.id.clone() });
        }
    }
    let known = seen;
    let root_known = known.contains(pag.root.as_str());
    if !root_known {
        out.push(Violation::UnknownRoot { id: pag.root.clone() });
    }

    for o in &pag.objects {
        if let Some(s) = &o.supporter {
            let edge = format!("{} supported by {}", o.id, s);
            if !known.contains(s.as_str()) {
                out.push(Violation::DanglingReference { edge, id: s.clone() });
            } else if *s == o.id {
                out.push(Violation::SelfEdge { edge });
            }
        }
    }
    for e in &pag.object_edges {
        let edge = describe_object_edge(e);
        for id in [&e.source, &e.target] {
            if !known.contains(id.as_str()) {
                out.push(Violation::DanglingReference { edge: edge.clone(), id: id.clone() });
            }
        }
        if e.source == e.target {
            out.push(Violation::SelfEdge { edge });
        }
    }
    for e in &pag.part_edges {
        let edge = describe_part_edge(e);
        for id in [&e.source.object, &e.target.object] {
            if !known.contains(id.as_str()) {
                out.push(Violation::DanglingReference { edge: edge.clone(), id: id.clone() });
            }
        }
        if e.source.object == e.target.object {
            out.push(Violation::SelfEdge { edge: edge.clone() });
        }
        if e.support_flag && !e.relation.can_support() {
            out.push(Violation::InvalidSupportFlag { edge });
        }
    }

    for (id, sups) in pag.supporters() {
        let sups: Vec<String> = sups
            .into_iter()
            .filter(|s| known.contains(s) && *s != id)
            .map(str::to_string)
            .collect();
        if id == pag.root {
            if !sups.is_empty() {
                out.push(Violation::RootHasSupporter { id: id.to_string() });
            }
        } else if sups.len() > 1 {
            out.push(Violation::MultipleSupporters { id: id.to_string(), supporters: sups });
        } else if sups.is_empty() && root_known {
            out.push(Violation::MissingSupporter { id: id.to_string() });
        }
    }

    out.extend(cycles(pag));
    out.sort();
    out.dedup();
    ValidationReport { violations: out }
}

/// Tarjan's strongly connected components; each non-trivial component yields
/// one violation with a witness cycle found inside it.
fn cycles(pag: &Pag) -> Vec<Violation> {
    let edges = pag.dependency_edges();
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for o in &pag.objects {
        adj.entry(o.id.as_str()).or_default();
    }
    for &(a, b) in &edges {
        adj.entry(a).or_default().push(b);
    }

    struct State<'a> {
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        stack: Vec<&'a str>,
        on_stack: BTreeSet<&'a str>,
        next: usize,
        comps: Vec<Vec<&'a str>>,
    }

    fn strongconnect<'a>(v: &'a str, adj: &BTreeMap<&'a str, Vec<&'a str>>, st: &mut State<'a>) {
        // Iterative to survive long chains.
        let mut work: Vec<(&'a str, usize)> = vec![(v, 0)];
        st.index.insert(v, st.next);
        st.low.insert(v, st.next);
        st.next += 1;
        st.stack.push(v);
        st.on_stack.insert(v);
        while let Some(&mut (u, ref mut i)) = work.last_mut() {
            let succ = &adj[u];
            if *i < succ.len() {
                let w = succ[*i];
                *i += 1;
                if !st.index.contains_key(w) {
                    st.index.insert(w, st.next);
                    st.low.insert(w, st.next);
                    st.next += 1;
                    st.stack.push(w);
                    st.on_stack.insert(w);
                    work.push((w, 0));
                } else if st.on_stack.contains(w) {
                    let lw = st.index[w].min(st.low[u]);
                    st.low.insert(u, lw);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                let lp = st.low[parent].min(st.low[u]);
                st.low.insert(parent, lp);
            }
            if st.low[u] == st.index[u] {
                let mut comp = Vec::new();
                loop {
                    let w = st.stack.pop().expect("tarjan stack");
                    st.on_stack.remove(w);
                    comp.push(w);
                    if w == u {
                        break;
                    }
                }
                st.comps.push(comp);
            }
        }
    }

    let mut st = State {
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on_stack: BTreeSet::new(),
        next: 0,
        comps: Vec::new(),
    };
    let nodes: Vec<&str> = adj.keys().copied().collect();
    for v in nodes {
        if !st.index.contains_key(v) {
            strongconnect(v, &adj, &mut st);
        }
    }

    let mut out = Vec::new();
    for comp in st.comps.into_iter().filter(|c| c.len() > 1) {
        let members: BTreeSet<&str> = comp.iter().copied().collect();
        let start = *members.iter().next().expect("non-empty");
        let witness = witness_cycle(start, &members, &adj);
        out.push(Violation::Cycle {
            members: members.iter().map(|s| s.to_string()).collect(),
            witness: witness.iter().map(|s| s.to_string()).collect(),
        });
    }
    out
}

/// Shortest path back to `start` inside the component (BFS over sorted successors).
fn witness_cycle<'a>(
    start: &'a str,
    members: &BTreeSet<&'a str>,
    adj: &BTreeMap<&'a str, Vec<&'a str>>,
) -> Vec<&'a str> {
    let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if !members.contains(w) {
                continue;
            }
            if w == start {
                let mut path = vec![u];
                let mut cur = u;
                while cur != start {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return path;
            }
            if !prev.contains_key(w) {
                prev.insert(w, u);
                queue.push_back(w);
            }
        }
    }
    unreachable!("strongly connected component without a cycle through its member")
}

/// Topological order over all dependency edges; ties go to the smallest id.
pub fn assembly_order(pag: &Pag) -> Result<Vec<String>, PagError> {
    let report = validate(pag);
    if !report.is_valid() {
        return Err(PagError::Invalid { report });
    }
    let edges = pag.dependency_edges();
    let mut indeg: BTreeMap<&str, usize> = pag.objects.iter().map(|o| (o.id.as_str(), 0)).collect();
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for &(a, b) in &edges {
        *indeg.get_mut(b).expect("known id") += 1;
        adj.entry(a).or_default().push(b);
    }
    let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
    let mut order = Vec::with_capacity(indeg.len());
    while let Some(u) = ready.pop_first() {
        order.push(u.to_string());
        for &w in adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indeg.get_mut(w).expect("known id");
            *d -= 1;
            if *d == 0 {
                ready.insert(w);
            }
        }
    }
    debug_assert_eq!(order.len(), pag.objects.len());
    Ok(order)
}
