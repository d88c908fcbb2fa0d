//! R-graphs: a finite vertex set, a signed edge partition, and a per-pair
//! relation between opposite-sign edges.
//!
//! A minus edge of the pair `(q, r)` runs `q -> r`; a plus edge of the same
//! pair runs `r -> q`. The relation of the pair couples minus edges with plus
//! edges and drives the cancellation rule of the associated semigroup.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Edge polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Minus,
    Plus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Minus => f.write_str("minus"),
            Sign::Plus => f.write_str("plus"),
        }
    }
}

/// A directed edge with a sign. `source` and `target` are vertex names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    pub sign: Sign,
    pub source: String,
    pub target: String,
}

/// An R-graph as loaded or constructed. Construction only enforces token
/// well-formedness and id uniqueness; everything else is reported by
/// [`RGraph::validate`] so that broken inputs can be diagnosed in full.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    relations: Vec<(String, String)>,
}

/// Construction-time failures (malformed data, as opposed to violated
/// structural invariants).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex set must not be empty")]
    NoVertices,
    #[error("bad token {token:?}: {reason}")]
    BadToken { token: String, reason: String },
    #[error("duplicate vertex name {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdgeId(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("input digraph is not strongly connected")]
    InputNotStronglyConnected,
    #[error("input digraph has no edges")]
    InputHasNoEdges,
    #[error("unknown vertex {0:?} in input digraph")]
    UnknownInputVertex(String),
}

/// A violated structural invariant, reported by [`RGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DanglingEndpoint {
        edge: String,
        end: String,
        vertex: String,
    },
    UnknownRelationEdge {
        id: String,
    },
    MistypedRelation {
        minus: String,
        plus: String,
        detail: String,
    },
    DuplicateRelation {
        minus: String,
        plus: String,
    },
    EmptinessMismatch {
        from: String,
        to: String,
    },
    NotStronglyConnected {
        unreachable: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEndpoint { edge, end, vertex } => {
                write!(f, "edge {edge:?} has unknown {end} vertex {vertex:?}")
            }
            Violation::UnknownRelationEdge { id } => {
                write!(f, "relation refers to unknown edge id {id:?}")
            }
            Violation::MistypedRelation { minus, plus, detail } => {
                write!(f, "mistyped relation ({minus:?}, {plus:?}): {detail}")
            }
            Violation::DuplicateRelation { minus, plus } => {
                write!(f, "duplicate relation pair ({minus:?}, {plus:?})")
            }
            Violation::EmptinessMismatch { from, to } => {
                write!(
                    f,
                    "vertex pair ({from}, {to}) has edges of one sign only"
                )
            }
            Violation::NotStronglyConnected { unreachable } => {
                write!(
                    f,
                    "minus-edge digraph is not strongly connected (witness vertices: {})",
                    unreachable.join(", ")
                )
            }
        }
    }
}

/// Error for operations that require a structurally valid graph.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("graph fails validation: {}", summarize(violations))]
pub struct InvalidGraph {
    pub violations: Vec<Violation>,
}

fn summarize(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn check_token(tok: &str, what: &str) -> Result<(), GraphError> {
    if tok.is_empty() {
        return Err(GraphError::BadToken {
            token: tok.to_owned(),
            reason: format!("{what} must not be empty"),
        });
    }
    if tok.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(GraphError::BadToken {
            token: tok.to_owned(),
            reason: format!("{what} must not contain whitespace or control characters"),
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RGraphFile {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    relations: Vec<(String, String)>,
}

impl RGraph {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<Edge>,
        relations: Vec<(String, String)>,
    ) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::NoVertices);
        }
        let mut seen = HashSet::new();
        for v in &vertices {
            check_token(v, "vertex name")?;
            if !seen.insert(v.clone()) {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let mut eseen = HashSet::new();
        for e in &edges {
            check_token(&e.id, "edge id")?;
            if !eseen.insert(e.id.clone()) {
                return Err(GraphError::DuplicateEdgeId(e.id.clone()));
            }
        }
        Ok(RGraph {
            vertices,
            edges,
            relations,
        })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn relations(&self) -> &[(String, String)] {
        &self.relations
    }

    pub fn from_json_str(s: &str) -> Result<Self, ParseError> {
        let file: RGraphFile = serde_json::from_str(s)?;
        Ok(RGraph::new(file.vertices, file.edges, file.relations)?)
    }

    pub fn to_json_string(&self) -> String {
        let file = RGraphFile {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            relations: self.relations.clone(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    /// Checks every structural invariant and returns the full list of
    /// violations. An empty list means the graph is a valid R-graph.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let vset: HashSet<&str> = self.vertices.iter().map(|s| s.as_str()).collect();
        let emap: HashMap<&str, &Edge> =
            self.edges.iter().map(|e| (e.id.as_str(), e)).collect();

        for e in &self.edges {
            if !vset.contains(e.source.as_str()) {
                out.push(Violation::DanglingEndpoint {
                    edge: e.id.clone(),
                    end: "source".into(),
                    vertex: e.source.clone(),
                });
            }
            if !vset.contains(e.target.as_str()) {
                out.push(Violation::DanglingEndpoint {
                    edge: e.id.clone(),
                    end: "target".into(),
                    vertex: e.target.clone(),
                });
            }
        }

        let mut rel_seen = HashSet::new();
        for (mid, pid) in &self.relations {
            let fm = emap.get(mid.as_str());
            let gp = emap.get(pid.as_str());
            if fm.is_none() {
                out.push(Violation::UnknownRelationEdge { id: mid.clone() });
            }
            if gp.is_none() {
                out.push(Violation::UnknownRelationEdge { id: pid.clone() });
            }
            let (Some(fm), Some(gp)) = (fm, gp) else {
                continue;
            };
            if !rel_seen.insert((mid.clone(), pid.clone())) {
                out.push(Violation::DuplicateRelation {
                    minus: mid.clone(),
                    plus: pid.clone(),
                });
                continue;
            }
            if fm.sign != Sign::Minus {
                out.push(Violation::MistypedRelation {
                    minus: mid.clone(),
                    plus: pid.clone(),
                    detail: "first id does not name a minus edge".into(),
                });
                continue;
            }
            if gp.sign != Sign::Plus {
                out.push(Violation::MistypedRelation {
                    minus: mid.clone(),
                    plus: pid.clone(),
                    detail: "second id does not name a plus edge".into(),
                });
                continue;
            }
            // A related plus edge must run backwards along the minus edge's pair.
            if gp.source != fm.target || gp.target != fm.source {
                out.push(Violation::MistypedRelation {
                    minus: mid.clone(),
                    plus: pid.clone(),
                    detail: "plus edge belongs to a different vertex pair".into(),
                });
            }
        }

        // Pair emptiness: minus edges q->r demand plus edges r->q and vice versa.
        let mut minus_pairs: HashSet<(String, String)> = HashSet::new();
        let mut plus_pairs: HashSet<(String, String)> = HashSet::new();
        for e in &self.edges {
            if !vset.contains(e.source.as_str()) || !vset.contains(e.target.as_str()) {
                continue;
            }
            match e.sign {
                Sign::Minus => {
                    minus_pairs.insert((e.source.clone(), e.target.clone()));
                }
                Sign::Plus => {
                    plus_pairs.insert((e.target.clone(), e.source.clone()));
                }
            }
        }
        let mut all_pairs: Vec<&(String, String)> =
            minus_pairs.symmetric_difference(&plus_pairs).collect();
        all_pairs.sort();
        for (q, r) in all_pairs {
            out.push(Violation::EmptinessMismatch {
                from: q.clone(),
                to: r.clone(),
            });
        }

        if let Some(unreachable) = self.minus_unreachable() {
            out.push(Violation::NotStronglyConnected { unreachable });
        }

        out
    }

    /// Vertices breaking strong connectivity of the minus-edge digraph,
    /// or `None` when it is strongly connected.
    fn minus_unreachable(&self) -> Option<Vec<String>> {
        let n = self.vertices.len();
        if n <= 1 {
            return None;
        }
        let vix: HashMap<&str, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for e in &self.edges {
            if e.sign != Sign::Minus {
                continue;
            }
            let (Some(&s), Some(&t)) = (vix.get(e.source.as_str()), vix.get(e.target.as_str()))
            else {
                continue;
            };
            fwd[s].push(t);
            bwd[t].push(s);
        }
        let reach = |adj: &Vec<Vec<usize>>| -> Vec<bool> {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        };
        let f = reach(&fwd);
        let b = reach(&bwd);
        let mut missing: Vec<String> = (0..n)
            .filter(|&i| !f[i] || !b[i])
            .map(|i| self.vertices[i].clone())
            .collect();
        if missing.is_empty() {
            None
        } else {
            missing.sort();
            Some(missing)
        }
    }
}

/// File loading / JSON parse error.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// One-vertex graph with `n` matched minus/plus pairs (ids `a1m`, `a1p`, ...).
pub fn build_dyck(n: usize) -> Result<RGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::BadParameter(
            "number of bracket pairs must be at least 1".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut relations = Vec::new();
    for i in 1..=n {
        edges.push(Edge {
            id: format!("a{i}m"),
            sign: Sign::Minus,
            source: "p".into(),
            target: "p".into(),
        });
    }
    for i in 1..=n {
        edges.push(Edge {
            id: format!("a{i}p"),
            sign: Sign::Plus,
            source: "p".into(),
            target: "p".into(),
        });
        relations.push((format!("a{i}m"), format!("a{i}p")));
    }
    RGraph::new(vec!["p".into()], edges, relations)
}

/// Doubles every arc of a strongly connected digraph into a matched
/// minus/plus pair (ids `e1m`/`e1p`, ... in arc order).
pub fn build_markov_dyck(
    vertices: &[String],
    arcs: &[(String, String)],
) -> Result<RGraph, GraphError> {
    if arcs.is_empty() {
        return Err(GraphError::InputHasNoEdges);
    }
    let vix: HashMap<&str, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    for (s, t) in arcs {
        if !vix.contains_key(s.as_str()) {
            return Err(GraphError::UnknownInputVertex(s.clone()));
        }
        if !vix.contains_key(t.as_str()) {
            return Err(GraphError::UnknownInputVertex(t.clone()));
        }
    }
    // Strong connectivity of the input digraph.
    let n = vertices.len();
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for (s, t) in arcs {
        fwd[vix[s.as_str()]].push(vix[t.as_str()]);
        bwd[vix[t.as_str()]].push(vix[s.as_str()]);
    }
    let reach = |adj: &Vec<Vec<usize>>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        if n > 0 {
            seen[0] = true;
        }
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    if n > 1 && (reach(&fwd).contains(&false) || reach(&bwd).contains(&false)) {
        return Err(GraphError::InputNotStronglyConnected);
    }

    let mut edges = Vec::new();
    let mut relations = Vec::new();
    for (i, (s, t)) in arcs.iter().enumerate() {
        let k = i + 1;
        edges.push(Edge {
            id: format!("e{k}m"),
            sign: Sign::Minus,
            source: s.clone(),
            target: t.clone(),
        });
        edges.push(Edge {
            id: format!("e{k}p"),
            sign: Sign::Plus,
            source: t.clone(),
            target: s.clone(),
        });
        relations.push((format!("e{k}m"), format!("e{k}p")));
    }
    RGraph::new(vertices.to_vec(), edges, relations)
}

/// One-vertex graph whose minus and plus edges carry an index `1..=k` and a
/// bit; edges are related exactly when their bits agree. Ids `e1m0`, `e1p0`,
/// etc.
pub fn build_product_dyck_full(k: usize) -> Result<RGraph, GraphError> {
    if k < 2 {
        return Err(GraphError::BadParameter(
            "index bound must be at least 2".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut relations = Vec::new();
    for beta in 0..2usize {
        for m in 1..=k {
            edges.push(Edge {
                id: format!("e{m}m{beta}"),
                sign: Sign::Minus,
                source: "p".into(),
                target: "p".into(),
            });
        }
    }
    for beta in 0..2usize {
        for l in 1..=k {
            edges.push(Edge {
                id: format!("e{l}p{beta}"),
                sign: Sign::Plus,
                source: "p".into(),
                target: "p".into(),
            });
        }
    }
    for beta in 0..2usize {
        for m in 1..=k {
            for l in 1..=k {
                relations.push((format!("e{m}m{beta}"), format!("e{l}p{beta}")));
            }
        }
    }
    RGraph::new(vec!["p".into()], edges, relations)
}

// ---------------------------------------------------------------------------
// Indexed view
// ---------------------------------------------------------------------------

pub(crate) struct PairBucket {
    pub minus: Vec<u32>,
    pub plus: Vec<u32>,
}

/// Indexed view of a valid graph. All analysis runs on this.
pub(crate) struct Topology {
    pub vnames: Vec<String>,
    pub vix: HashMap<String, u32>,
    pub eids: Vec<String>,
    pub eix: HashMap<String, u32>,
    pub sign: Vec<Sign>,
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
    pub rel: HashSet<(u32, u32)>,
    /// Keyed by `(q, r)`: minus edges run q->r, plus edges run r->q.
    pub pairs: BTreeMap<(u32, u32), PairBucket>,
    /// Per minus edge: related plus edges, sorted. Empty for plus slots.
    pub omega_plus: Vec<Vec<u32>>,
    /// Per plus edge: related minus edges, sorted. Empty for minus slots.
    pub omega_minus: Vec<Vec<u32>>,
}

impl Topology {
    pub fn new(g: &RGraph) -> Result<Self, InvalidGraph> {
        let violations = g.validate();
        if !violations.is_empty() {
            return Err(InvalidGraph { violations });
        }
        let vnames: Vec<String> = g.vertices.clone();
        let vix: HashMap<String, u32> = vnames
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect();
        let eids: Vec<String> = g.edges.iter().map(|e| e.id.clone()).collect();
        let eix: HashMap<String, u32> = eids
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i as u32))
            .collect();
        let sign: Vec<Sign> = g.edges.iter().map(|e| e.sign).collect();
        let src: Vec<u32> = g.edges.iter().map(|e| vix[&e.source]).collect();
        let tgt: Vec<u32> = g.edges.iter().map(|e| vix[&e.target]).collect();
        let mut rel = HashSet::new();
        for (m, p) in &g.relations {
            rel.insert((eix[m], eix[p]));
        }
        let mut pairs: BTreeMap<(u32, u32), PairBucket> = BTreeMap::new();
        for (i, e) in g.edges.iter().enumerate() {
            let key = match e.sign {
                Sign::Minus => (src[i], tgt[i]),
                Sign::Plus => (tgt[i], src[i]),
            };
            let bucket = pairs.entry(key).or_insert_with(|| PairBucket {
                minus: Vec::new(),
                plus: Vec::new(),
            });
            match e.sign {
                Sign::Minus => bucket.minus.push(i as u32),
                Sign::Plus => bucket.plus.push(i as u32),
            }
        }
        let ne = g.edges.len();
        let mut omega_plus = vec![Vec::new(); ne];
        let mut omega_minus = vec![Vec::new(); ne];
        for &(m, p) in &rel {
            omega_plus[m as usize].push(p);
            omega_minus[p as usize].push(m);
        }
        for v in omega_plus.iter_mut().chain(omega_minus.iter_mut()) {
            v.sort_unstable();
        }
        Ok(Topology {
            vnames,
            vix,
            eids,
            eix,
            sign,
            src,
            tgt,
            rel,
            pairs,
            omega_plus,
            omega_minus,
        })
    }

    /// The vertex pair an edge belongs to: `(q, r)` with minus edges q->r.
    pub fn pair_of(&self, e: u32) -> (u32, u32) {
        match self.sign[e as usize] {
            Sign::Minus => (self.src[e as usize], self.tgt[e as usize]),
            Sign::Plus => (self.tgt[e as usize], self.src[e as usize]),
        }
    }
}

// ---------------------------------------------------------------------------
// Derived sets
// ---------------------------------------------------------------------------

pub(crate) struct DerivedIx {
    pub saturated_minus_by_pair: BTreeMap<(u32, u32), Vec<u32>>,
    pub saturated_plus_by_pair: BTreeMap<(u32, u32), Vec<u32>>,
    /// Vertices with a single minus-predecessor vertex, mapped to it.
    pub sole_pred: BTreeMap<u32, u32>,
    pub sat_minus_union: BTreeSet<u32>,
    pub sat_plus_union: BTreeSet<u32>,
    pub full_relation_vertices: BTreeSet<u32>,
}

pub(crate) fn derive(topo: &Topology) -> DerivedIx {
    let mut saturated_minus_by_pair = BTreeMap::new();
    let mut saturated_plus_by_pair = BTreeMap::new();
    for (&key, bucket) in &topo.pairs {
        let sat_minus: Vec<u32> = bucket
            .minus
            .iter()
            .copied()
            .filter(|&m| topo.omega_plus[m as usize].len() == bucket.plus.len())
            .collect();
        let sat_plus: Vec<u32> = bucket
            .plus
            .iter()
            .copied()
            .filter(|&p| topo.omega_minus[p as usize].len() == bucket.minus.len())
            .collect();
        saturated_minus_by_pair.insert(key, sat_minus);
        saturated_plus_by_pair.insert(key, sat_plus);
    }

    let mut preds: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for &(q, r) in topo.pairs.keys() {
        preds.entry(r).or_default().insert(q);
    }
    let mut sole_pred = BTreeMap::new();
    for (r, qs) in &preds {
        if qs.len() == 1 {
            sole_pred.insert(*r, *qs.iter().next().unwrap());
        }
    }

    let mut sat_minus_union = BTreeSet::new();
    let mut sat_plus_union = BTreeSet::new();
    let mut full_relation_vertices = BTreeSet::new();
    for (&p, &kappa) in &sole_pred {
        let key = (kappa, p);
        if let Some(sm) = saturated_minus_by_pair.get(&key) {
            sat_minus_union.extend(sm.iter().copied());
        }
        if let Some(sp) = saturated_plus_by_pair.get(&key) {
            sat_plus_union.extend(sp.iter().copied());
        }
        if let Some(bucket) = topo.pairs.get(&key) {
            let full = bucket.minus.len() * bucket.plus.len();
            let count = topo
                .rel
                .iter()
                .filter(|&&(m, _)| topo.pair_of(m) == key)
                .count();
            if full > 0 && count == full {
                full_relation_vertices.insert(p);
            }
        }
    }

    DerivedIx {
        saturated_minus_by_pair,
        saturated_plus_by_pair,
        sole_pred,
        sat_minus_union,
        sat_plus_union,
        full_relation_vertices,
    }
}

/// Per-pair saturated edge sets, rendered with names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairSaturated {
    pub from: String,
    pub to: String,
    /// Minus edges of the pair related to every plus edge of the pair.
    pub minus: Vec<String>,
    /// Plus edges of the pair related to every minus edge of the pair.
    pub plus: Vec<String>,
}

/// The derived structure of a valid R-graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivedSets {
    pub saturated: Vec<PairSaturated>,
    /// Vertices with a unique minus-predecessor vertex, mapped to it.
    pub sole_predecessor: BTreeMap<String, String>,
    /// Union of saturated minus edges over sole-predecessor pairs.
    pub saturated_minus_union: Vec<String>,
    /// Union of saturated plus edges over sole-predecessor pairs.
    pub saturated_plus_union: Vec<String>,
    /// Sole-predecessor vertices whose pair relation is the full product.
    pub full_relation_vertices: Vec<String>,
}

pub fn derived_sets(g: &RGraph) -> Result<DerivedSets, InvalidGraph> {
    let topo = Topology::new(g)?;
    let d = derive(&topo);
    let name = |e: &u32| topo.eids[*e as usize].clone();
    let vname = |v: &u32| topo.vnames[*v as usize].clone();
    let mut saturated = Vec::new();
    for (&(q, r), sm) in &d.saturated_minus_by_pair {
        let sp = &d.saturated_plus_by_pair[&(q, r)];
        let mut minus: Vec<String> = sm.iter().map(name).collect();
        let mut plus: Vec<String> = sp.iter().map(name).collect();
        minus.sort();
        plus.sort();
        saturated.push(PairSaturated {
            from: vname(&q),
            to: vname(&r),
            minus,
            plus,
        });
    }
    let mut sole_predecessor = BTreeMap::new();
    for (p, kappa) in &d.sole_pred {
        sole_predecessor.insert(vname(p), vname(kappa));
    }
    let collect_sorted = |s: &BTreeSet<u32>| {
        let mut v: Vec<String> = s.iter().map(name).collect();
        v.sort();
        v
    };
    Ok(DerivedSets {
        saturated,
        sole_predecessor,
        saturated_minus_union: collect_sorted(&d.sat_minus_union),
        saturated_plus_union: collect_sorted(&d.sat_plus_union),
        full_relation_vertices: {
            let mut v: Vec<String> = d.full_relation_vertices.iter().map(vname).collect();
            v.sort();
            v
        },
    })
}

/// Related-edge sets, per edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaSets {
    /// For each minus edge: the plus edges it is related to.
    pub plus_of_minus: BTreeMap<String, Vec<String>>,
    /// For each plus edge: the minus edges it is related to.
    pub minus_of_plus: BTreeMap<String, Vec<String>>,
}

pub fn omega_sets(g: &RGraph) -> Result<OmegaSets, InvalidGraph> {
    let topo = Topology::new(g)?;
    let mut plus_of_minus = BTreeMap::new();
    let mut minus_of_plus = BTreeMap::new();
    for (i, id) in topo.eids.iter().enumerate() {
        let names = |v: &Vec<u32>| {
            let mut out: Vec<String> = v.iter().map(|e| topo.eids[*e as usize].clone()).collect();
            out.sort();
            out
        };
        match topo.sign[i] {
            Sign::Minus => {
                plus_of_minus.insert(id.clone(), names(&topo.omega_plus[i]));
            }
            Sign::Plus => {
                minus_of_plus.insert(id.clone(), names(&topo.omega_minus[i]));
            }
        }
    }
    Ok(OmegaSets {
        plus_of_minus,
        minus_of_plus,
    })
}

// ---------------------------------------------------------------------------
// Conditions
// ---------------------------------------------------------------------------

/// Concrete evidence for a failed condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Two same-sign edges of one pair with identical related-edge sets.
    OmegaClash { first: String, second: String },
    /// A closed walk inside a saturated edge union.
    Cycle { edges: Vec<String> },
    /// A sole-predecessor vertex whose pair keeps saturated edges on both sides.
    BothSidesSaturated {
        vertex: String,
        minus: Vec<String>,
        plus: Vec<String>,
    },
    /// Saturated minus and plus paths joining the same ordered vertex pair.
    ParallelPaths {
        from: String,
        to: String,
        minus_path: Vec<String>,
        plus_path: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConditionStatus {
    Holds,
    Fails { witness: Witness },
}

impl ConditionStatus {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionStatus::Holds)
    }
}

/// Pass/fail record for the six graph conditions, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub a_minus: ConditionStatus,
    pub a_plus: ConditionStatus,
    pub b_minus: ConditionStatus,
    pub b_plus: ConditionStatus,
    pub c: ConditionStatus,
    pub d: ConditionStatus,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.a_minus.holds()
            && self.a_plus.holds()
            && self.b_minus.holds()
            && self.b_plus.holds()
            && self.c.holds()
            && self.d.holds()
    }

    pub fn rows(&self) -> [(&'static str, &ConditionStatus); 6] {
        [
            ("(a-)", &self.a_minus),
            ("(a+)", &self.a_plus),
            ("(b-)", &self.b_minus),
            ("(b+)", &self.b_plus),
            ("(c)", &self.c),
            ("(d)", &self.d),
        ]
    }
}

/// Evaluation switches for the two conditions whose statement admits more
/// than one reading. Defaults match the primary reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionOptions {
    /// Evaluate condition (c) with the minus side only (the literal,
    /// tautology-prone reading) instead of minus-or-plus emptiness.
    pub literal_c: bool,
    /// Orient plus edges target-to-source when searching condition (d) paths.
    pub reverse_plus_paths: bool,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            literal_c: false,
            reverse_plus_paths: false,
        }
    }
}

pub fn check_conditions(g: &RGraph) -> Result<ConditionReport, InvalidGraph> {
    check_conditions_with(g, ConditionOptions::default())
}

pub fn check_conditions_with(
    g: &RGraph,
    opts: ConditionOptions,
) -> Result<ConditionReport, InvalidGraph> {
    let topo = Topology::new(g)?;
    let d = derive(&topo);

    let a_status = |minus_side: bool| -> ConditionStatus {
        for bucket in topo.pairs.values() {
            let edges = if minus_side { &bucket.minus } else { &bucket.plus };
            let omega = |e: u32| {
                if minus_side {
                    &topo.omega_plus[e as usize]
                } else {
                    &topo.omega_minus[e as usize]
                }
            };
            let mut seen: HashMap<&Vec<u32>, u32> = HashMap::new();
            for &e in edges {
                if let Some(&first) = seen.get(omega(e)) {
                    return ConditionStatus::Fails {
                        witness: Witness::OmegaClash {
                            first: topo.eids[first as usize].clone(),
                            second: topo.eids[e as usize].clone(),
                        },
                    };
                }
                seen.insert(omega(e), e);
            }
        }
        ConditionStatus::Holds
    };
    let a_minus = a_status(true);
    let a_plus = a_status(false);

    let b_status = |edges: &BTreeSet<u32>| -> ConditionStatus {
        match find_cycle(&topo, edges) {
            Some(cycle) => ConditionStatus::Fails {
                witness: Witness::Cycle {
                    edges: cycle.iter().map(|e| topo.eids[*e as usize].clone()).collect(),
                },
            },
            None => ConditionStatus::Holds,
        }
    };
    let b_minus = b_status(&d.sat_minus_union);
    let b_plus = b_status(&d.sat_plus_union);

    let mut c = ConditionStatus::Holds;
    for (&p, &kappa) in &d.sole_pred {
        if kappa == p {
            continue;
        }
        let key = (kappa, p);
        let sm = d.saturated_minus_by_pair.get(&key).map_or(0, |v| v.len());
        let sp = d.saturated_plus_by_pair.get(&key).map_or(0, |v| v.len());
        let ok = if opts.literal_c { sm == 0 } else { sm == 0 || sp == 0 };
        if !ok {
            let name = |e: &u32| topo.eids[*e as usize].clone();
            c = ConditionStatus::Fails {
                witness: Witness::BothSidesSaturated {
                    vertex: topo.vnames[p as usize].clone(),
                    minus: d.saturated_minus_by_pair[&key].iter().map(name).collect(),
                    plus: d.saturated_plus_by_pair[&key].iter().map(name).collect(),
                },
            };
            break;
        }
    }

    let mut dcond = ConditionStatus::Holds;
    'outer: for &q in d.sole_pred.keys() {
        for &r in d.sole_pred.keys() {
            if q == r {
                continue;
            }
            let mp = find_path(&topo, &d.sat_minus_union, q, r, false);
            if mp.is_none() {
                continue;
            }
            let pp = find_path(&topo, &d.sat_plus_union, q, r, opts.reverse_plus_paths);
            if let (Some(mp), Some(pp)) = (mp, pp) {
                let name = |e: &u32| topo.eids[*e as usize].clone();
                dcond = ConditionStatus::Fails {
                    witness: Witness::ParallelPaths {
                        from: topo.vnames[q as usize].clone(),
                        to: topo.vnames[r as usize].clone(),
                        minus_path: mp.iter().map(name).collect(),
                        plus_path: pp.iter().map(name).collect(),
                    },
                };
                break 'outer;
            }
        }
    }

    Ok(ConditionReport {
        a_minus,
        a_plus,
        b_minus,
        b_plus,
        c,
        d: dcond,
    })
}

/// Directed cycle (as an edge list) inside the given edge subset, if any.
fn find_cycle(topo: &Topology, edges: &BTreeSet<u32>) -> Option<Vec<u32>> {
    let n = topo.vnames.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &e in edges {
        adj[topo.src[e as usize] as usize].push(e);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut edge_stack: Vec<u32> = Vec::new();
    let mut vertex_stack: Vec<u32> = Vec::new();

    fn dfs(
        v: u32,
        adj: &Vec<Vec<u32>>,
        topo: &Topology,
        color: &mut Vec<u8>,
        edge_stack: &mut Vec<u32>,
        vertex_stack: &mut Vec<u32>,
    ) -> Option<Vec<u32>> {
        color[v as usize] = 1;
        vertex_stack.push(v);
        for &e in &adj[v as usize] {
            let w = topo.tgt[e as usize];
            match color[w as usize] {
                1 => {
                    // Close the cycle at w.
                    let pos = vertex_stack.iter().position(|&x| x == w).unwrap();
                    let mut cycle = edge_stack[pos..].to_vec();
                    cycle.push(e);
                    return Some(cycle);
                }
                0 => {
                    edge_stack.push(e);
                    if let Some(c) = dfs(w, adj, topo, color, edge_stack, vertex_stack) {
                        return Some(c);
                    }
                    edge_stack.pop();
                }
                _ => {}
            }
        }
        vertex_stack.pop();
        color[v as usize] = 2;
        None
    }

    for v in 0..n as u32 {
        if color[v as usize] == 0 {
            if let Some(c) = dfs(v, &adj, topo, &mut color, &mut edge_stack, &mut vertex_stack) {
                return Some(c);
            }
        }
    }
    None
}

/// Path of length >= 1 from `from` to `to` inside the edge subset, as an edge
/// list. `reversed` walks edges target-to-source.
fn find_path(
    topo: &Topology,
    edges: &BTreeSet<u32>,
    from: u32,
    to: u32,
    reversed: bool,
) -> Option<Vec<u32>> {
    let n = topo.vnames.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &e in edges {
        let s = if reversed { topo.tgt[e as usize] } else { topo.src[e as usize] };
        adj[s as usize].push(e);
    }
    let step_to = |e: u32| {
        if reversed {
            topo.src[e as usize]
        } else {
            topo.tgt[e as usize]
        }
    };
    let step_from = |e: u32| {
        if reversed {
            topo.tgt[e as usize]
        } else {
            topo.src[e as usize]
        }
    };
    // BFS tree rooted at `from`. The root stays unmarked so a nonempty walk
    // back to it would still be found, though callers pass from != to.
    let mut prev: Vec<Option<u32>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    for &e in &adj[from as usize] {
        let w = step_to(e);
        if w == to {
            return Some(vec![e]);
        }
        if !seen[w as usize] {
            seen[w as usize] = true;
            prev[w as usize] = Some(e);
            queue.push_back(w);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &e in &adj[v as usize] {
            let w = step_to(e);
            if w == to {
                let mut path = vec![e];
                let mut cur = v;
                while let Some(pe) = prev[cur as usize] {
                    path.push(pe);
                    cur = step_from(pe);
                    if cur == from {
                        break;
                    }
                }
                path.reverse();
                return Some(path);
            }
            if !seen[w as usize] {
                seen[w as usize] = true;
                prev[w as usize] = Some(e);
                queue.push_back(w);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(id: &str, sign: Sign, s: &str, t: &str) -> Edge {
        Edge {
            id: id.into(),
            sign,
            source: s.into(),
            target: t.into(),
        }
    }

    #[test]
    fn dyck_graph_is_valid() {
        let g = build_dyck(2).unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(g.vertices().len(), 1);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.relations().len(), 2);
    }

    #[test]
    fn dyck_sizes() {
        let g1 = build_dyck(1).unwrap();
        assert_eq!(g1.edges().len(), 2);
        assert_eq!(g1.relations().len(), 1);
        let g3 = build_dyck(3).unwrap();
        assert_eq!(g3.relations().len(), 3);
        assert!(build_dyck(0).is_err());
    }

    #[test]
    fn mistyped_relation_is_reported() {
        // Relating edges of the same one-vertex pair is fine even off the
        // diagonal.
        let g = build_dyck(2).unwrap();
        let twisted = RGraph::new(
            g.vertices().to_vec(),
            g.edges().to_vec(),
            vec![("a1m".into(), "a1p".into()), ("a2m".into(), "a1p".into())],
        )
        .unwrap();
        assert!(twisted.validate().is_empty());
        // Relating across vertex pairs is mistyped.
        let g2 = RGraph::new(
            vec!["p".into(), "q".into()],
            vec![
                edge("f1m", Sign::Minus, "p", "q"),
                edge("f1p", Sign::Plus, "q", "p"),
                edge("g1m", Sign::Minus, "q", "p"),
                edge("g1p", Sign::Plus, "p", "q"),
            ],
            vec![("f1m".into(), "g1p".into())],
        )
        .unwrap();
        let vs = g2.validate();
        assert!(vs
            .iter()
            .any(|v| matches!(v, Violation::MistypedRelation { .. })));
    }

    #[test]
    fn emptiness_mismatch_is_reported() {
        let g = RGraph::new(
            vec!["p".into(), "q".into()],
            vec![
                edge("f1m", Sign::Minus, "p", "q"),
                edge("f1p", Sign::Plus, "q", "p"),
                edge("g1m", Sign::Minus, "q", "p"),
                edge("g1p", Sign::Plus, "p", "q"),
                edge("h1m", Sign::Minus, "p", "p"),
            ],
            vec![("f1m".into(), "f1p".into())],
        )
        .unwrap();
        let vs = g.validate();
        assert!(vs
            .iter()
            .any(|v| matches!(v, Violation::EmptinessMismatch { from, to } if from == "p" && to == "p")));
    }

    #[test]
    fn dangling_endpoint_is_reported() {
        let g = RGraph::new(
            vec!["p".into()],
            vec![edge("a1m", Sign::Minus, "p", "nowhere")],
            vec![],
        )
        .unwrap();
        let vs = g.validate();
        assert!(vs
            .iter()
            .any(|v| matches!(v, Violation::DanglingEndpoint { .. })));
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let g = RGraph::new(
            vec!["p".into(), "q".into()],
            vec![
                edge("f1m", Sign::Minus, "p", "q"),
                edge("f1p", Sign::Plus, "q", "p"),
            ],
            vec![("f1m".into(), "f1p".into())],
        )
        .unwrap();
        let vs = g.validate();
        assert!(vs
            .iter()
            .any(|v| matches!(v, Violation::NotStronglyConnected { .. })));
    }

    #[test]
    fn markov_dyck_of_loops_is_dyck_like() {
        let g = build_markov_dyck(
            &["p".into()],
            &[("p".into(), "p".into()), ("p".into(), "p".into())],
        )
        .unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.relations().len(), 2);
    }

    #[test]
    fn markov_dyck_two_vertices() {
        let g = build_markov_dyck(
            &["p".into(), "q".into()],
            &[
                ("p".into(), "q".into()),
                ("q".into(), "p".into()),
                ("p".into(), "p".into()),
            ],
        )
        .unwrap();
        assert!(g.validate().is_empty());
        let minus = g.edges().iter().filter(|e| e.sign == Sign::Minus).count();
        let plus = g.edges().iter().filter(|e| e.sign == Sign::Plus).count();
        assert_eq!((minus, plus, g.relations().len()), (3, 3, 3));
    }

    #[test]
    fn markov_dyck_rejects_disconnected() {
        let err = build_markov_dyck(
            &["p".into(), "q".into()],
            &[("p".into(), "q".into())],
        );
        assert!(matches!(err, Err(GraphError::InputNotStronglyConnected)));
    }

    #[test]
    fn product_dyck_full_sizes() {
        let g = build_product_dyck_full(2).unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(g.edges().len(), 8);
        assert_eq!(g.relations().len(), 8);
        let g3 = build_product_dyck_full(3).unwrap();
        assert_eq!(g3.relations().len(), 18);
        assert!(build_product_dyck_full(1).is_err());
    }

    #[test]
    fn omega_sets_on_dyck_and_product() {
        let g = build_dyck(2).unwrap();
        let om = omega_sets(&g).unwrap();
        assert_eq!(om.plus_of_minus["a1m"], vec!["a1p".to_string()]);

        let gp = build_product_dyck_full(2).unwrap();
        let om = omega_sets(&gp).unwrap();
        assert_eq!(
            om.plus_of_minus["e1m0"],
            vec!["e1p0".to_string(), "e2p0".to_string()]
        );
        assert_eq!(om.plus_of_minus["e1m0"], om.plus_of_minus["e2m0"]);
    }

    #[test]
    fn derived_sets_on_dyck() {
        let g = build_dyck(2).unwrap();
        let d = derived_sets(&g).unwrap();
        assert_eq!(d.sole_predecessor.get("p"), Some(&"p".to_string()));
        assert!(d.saturated_minus_union.is_empty());
        assert!(d.full_relation_vertices.is_empty());
    }

    #[test]
    fn derived_sets_on_product() {
        let g = build_product_dyck_full(2).unwrap();
        let d = derived_sets(&g).unwrap();
        // No minus edge relates to both bit classes.
        assert!(d.saturated_minus_union.is_empty());
        assert!(d.saturated_plus_union.is_empty());
    }

    #[test]
    fn derived_sets_full_relation_vertex() {
        let g = build_dyck(1).unwrap();
        let d = derived_sets(&g).unwrap();
        assert_eq!(d.full_relation_vertices, vec!["p".to_string()]);
        assert_eq!(d.saturated_minus_union, vec!["a1m".to_string()]);
    }

    #[test]
    fn conditions_on_dyck_all_hold() {
        let g = build_dyck(2).unwrap();
        let rep = check_conditions(&g).unwrap();
        assert!(rep.all_hold(), "{rep:?}");
    }

    #[test]
    fn conditions_on_product_fail_a() {
        let g = build_product_dyck_full(2).unwrap();
        let rep = check_conditions(&g).unwrap();
        assert!(!rep.a_minus.holds());
        assert!(!rep.a_plus.holds());
        if let ConditionStatus::Fails {
            witness: Witness::OmegaClash { first, second },
        } = &rep.a_minus
        {
            // Witness edges must genuinely share their related-plus set.
            let om = omega_sets(&g).unwrap();
            assert_eq!(om.plus_of_minus[first], om.plus_of_minus[second]);
        } else {
            panic!("expected omega clash witness");
        }
    }

    #[test]
    fn conditions_vacuous_when_no_sole_predecessor() {
        // Two vertices, two parallel arcs in each direction: every vertex has
        // two distinct predecessor vertices? No: build a 2-vertex digraph
        // where each vertex is entered from both vertices.
        let g = build_markov_dyck(
            &["p".into(), "q".into()],
            &[
                ("p".into(), "q".into()),
                ("q".into(), "p".into()),
                ("p".into(), "p".into()),
                ("q".into(), "q".into()),
            ],
        )
        .unwrap();
        let d = derived_sets(&g).unwrap();
        assert!(d.sole_predecessor.is_empty());
        let rep = check_conditions(&g).unwrap();
        assert!(rep.c.holds());
        assert!(rep.d.holds());
    }

    #[test]
    fn condition_b_fails_on_markov_dyck_cycle() {
        let g = build_markov_dyck(
            &["p".into(), "q".into(), "r".into()],
            &[
                ("p".into(), "q".into()),
                ("q".into(), "r".into()),
                ("r".into(), "p".into()),
            ],
        )
        .unwrap();
        let rep = check_conditions(&g).unwrap();
        assert!(!rep.b_minus.holds());
        assert!(!rep.b_plus.holds());
        if let ConditionStatus::Fails {
            witness: Witness::Cycle { edges },
        } = &rep.b_minus
        {
            assert_eq!(edges.len(), 3);
        } else {
            panic!("expected cycle witness");
        }
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let g = build_dyck(2).unwrap();
        let s = g.to_json_string();
        let g2 = RGraph::from_json_str(&s).unwrap();
        assert_eq!(g, g2);

        let unknown_key = r#"{"vertices":["p"],"edges":[],"relations":[],"extra":1}"#;
        assert!(RGraph::from_json_str(unknown_key).is_err());

        let dup = r#"{"vertices":["p"],"edges":[
            {"id":"x","sign":"minus","source":"p","target":"p"},
            {"id":"x","sign":"plus","source":"p","target":"p"}],
            "relations":[]}"#;
        assert!(RGraph::from_json_str(dup).is_err());
    }
}
