//! The cancellation semigroup of an R-graph.
//!
//! Generators are the edges; every vertex contributes an idempotent. The only
//! reduction consumes a minus edge immediately followed by a related plus
//! edge, so irreducible elements carry all plus generators to the left of all
//! minus generators:
//!
//! ```text
//! plus walk . idempotent at mid . minus walk
//! ```
//!
//! Products of unrelated or non-consecutive generators collapse to zero.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{derive, InvalidGraph, RGraph, Sign, Topology};

/// A semigroup element in normal form. `plus` and `minus` hold edge indices
/// of the owning [`Semigroup`]; both walks are source-to-target consecutive,
/// the plus walk ends at `mid` and the minus walk starts there.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Zero,
    Reduced {
        plus: Vec<u32>,
        mid: u32,
        minus: Vec<u32>,
    },
}

impl Element {
    pub fn is_zero(&self) -> bool {
        matches!(self, Element::Zero)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("empty generator word")]
    Empty,
    #[error("unknown edge id {0:?}")]
    UnknownEdge(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElementError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown edge id {0:?}")]
    UnknownEdge(String),
    #[error("bad element: {0}")]
    Malformed(String),
}

/// Multiplication context for one graph. Owns the index tables the
/// cancellation rule needs.
#[derive(Clone)]
pub struct Semigroup {
    edge_ids: Vec<String>,
    vertex_names: Vec<String>,
    sign: Vec<Sign>,
    src: Vec<u32>,
    tgt: Vec<u32>,
    rel: HashSet<(u32, u32)>,
    edge_ix: HashMap<String, u32>,
    vertex_ix: HashMap<String, u32>,
}

impl Semigroup {
    pub fn new(g: &RGraph) -> Result<Self, InvalidGraph> {
        let topo = Topology::new(g)?;
        Ok(Semigroup {
            edge_ids: topo.eids,
            vertex_names: topo.vnames,
            sign: topo.sign,
            src: topo.src,
            tgt: topo.tgt,
            rel: topo.rel,
            edge_ix: topo.eix,
            vertex_ix: topo.vix,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_id(&self, e: u32) -> &str {
        &self.edge_ids[e as usize]
    }

    pub fn edge_sign(&self, e: u32) -> Sign {
        self.sign[e as usize]
    }

    pub fn edge_source(&self, e: u32) -> u32 {
        self.src[e as usize]
    }

    pub fn edge_target(&self, e: u32) -> u32 {
        self.tgt[e as usize]
    }

    pub fn vertex_name(&self, v: u32) -> &str {
        &self.vertex_names[v as usize]
    }

    pub fn edge_ix(&self, id: &str) -> Option<u32> {
        self.edge_ix.get(id).copied()
    }

    pub fn vertex_ix(&self, name: &str) -> Option<u32> {
        self.vertex_ix.get(name).copied()
    }

    pub fn related(&self, minus: u32, plus: u32) -> bool {
        self.rel.contains(&(minus, plus))
    }

    /// The idempotent sitting at a vertex.
    pub fn idempotent(&self, vertex: &str) -> Result<Element, ElementError> {
        let v = self
            .vertex_ix(vertex)
            .ok_or_else(|| ElementError::UnknownVertex(vertex.into()))?;
        Ok(self.idempotent_ix(v))
    }

    pub fn idempotent_ix(&self, v: u32) -> Element {
        Element::Reduced {
            plus: Vec::new(),
            mid: v,
            minus: Vec::new(),
        }
    }

    /// A single generator as an element.
    pub fn generator_ix(&self, e: u32) -> Element {
        match self.sign[e as usize] {
            Sign::Minus => Element::Reduced {
                plus: Vec::new(),
                mid: self.src[e as usize],
                minus: vec![e],
            },
            Sign::Plus => Element::Reduced {
                plus: vec![e],
                mid: self.tgt[e as usize],
                minus: Vec::new(),
            },
        }
    }

    pub fn generator(&self, id: &str) -> Result<Element, ElementError> {
        let e = self
            .edge_ix(id)
            .ok_or_else(|| ElementError::UnknownEdge(id.into()))?;
        Ok(self.generator_ix(e))
    }

    /// Product of two normal forms. Cancels minus-then-plus pairs at the
    /// junction; a junction pair outside the relation, or any vertex
    /// mismatch at the splice, gives zero.
    pub fn multiply(&self, x: &Element, y: &Element) -> Element {
        let (xp, xm, xmin) = match x {
            Element::Zero => return Element::Zero,
            Element::Reduced { plus, mid, minus } => (plus, *mid, minus),
        };
        let (yp, ym, ymin) = match y {
            Element::Zero => return Element::Zero,
            Element::Reduced { plus, mid, minus } => (plus, *mid, minus),
        };

        let mut keep = xmin.len();
        let mut drop = 0usize;
        while keep > 0 && drop < yp.len() {
            let f = xmin[keep - 1];
            let g = yp[drop];
            if self.rel.contains(&(f, g)) {
                keep -= 1;
                drop += 1;
            } else {
                return Element::Zero;
            }
        }

        if keep > 0 {
            // Right plus walk consumed; splice the minus walks.
            let last = xmin[keep - 1];
            if self.tgt[last as usize] != ym {
                return Element::Zero;
            }
            let mut minus = Vec::with_capacity(keep + ymin.len());
            minus.extend_from_slice(&xmin[..keep]);
            minus.extend_from_slice(ymin);
            Element::Reduced {
                plus: xp.clone(),
                mid: xm,
                minus,
            }
        } else if drop < yp.len() {
            // Left minus walk consumed; splice the plus walks.
            let first = yp[drop];
            if self.src[first as usize] != xm {
                return Element::Zero;
            }
            let mut plus = Vec::with_capacity(xp.len() + yp.len() - drop);
            plus.extend_from_slice(xp);
            plus.extend_from_slice(&yp[drop..]);
            Element::Reduced {
                plus,
                mid: ym,
                minus: ymin.clone(),
            }
        } else {
            // Junction fully cancelled down to idempotents.
            if xm != ym {
                return Element::Zero;
            }
            Element::Reduced {
                plus: xp.clone(),
                mid: xm,
                minus: ymin.clone(),
            }
        }
    }

    /// Folds a nonempty generator word into its normal form without building
    /// intermediate elements.
    pub fn reduce_word_ix(&self, word: &[u32]) -> Result<Element, WordError> {
        let (&first, rest) = word.split_first().ok_or(WordError::Empty)?;
        let mut el = self.generator_ix(first);
        for &e in rest {
            el = self.append_generator(&el, e);
            if el.is_zero() {
                return Ok(Element::Zero);
            }
        }
        Ok(el)
    }

    /// `el . generator(e)`, specialised to avoid rebuilding walks.
    pub fn append_generator(&self, el: &Element, e: u32) -> Element {
        let Element::Reduced { plus, mid, minus } = el else {
            return Element::Zero;
        };
        match self.sign[e as usize] {
            Sign::Minus => {
                let joint = match minus.last() {
                    Some(&last) => self.tgt[last as usize],
                    None => *mid,
                };
                if joint != self.src[e as usize] {
                    return Element::Zero;
                }
                let mut minus = minus.clone();
                minus.push(e);
                Element::Reduced {
                    plus: plus.clone(),
                    mid: *mid,
                    minus,
                }
            }
            Sign::Plus => {
                match minus.last() {
                    Some(&last) => {
                        if !self.rel.contains(&(last, e)) {
                            return Element::Zero;
                        }
                        let mut minus = minus.clone();
                        minus.pop();
                        Element::Reduced {
                            plus: plus.clone(),
                            mid: *mid,
                            minus,
                        }
                    }
                    None => {
                        if *mid != self.src[e as usize] {
                            return Element::Zero;
                        }
                        let mut plus = plus.clone();
                        plus.push(e);
                        Element::Reduced {
                            plus,
                            mid: self.tgt[e as usize],
                            minus: Vec::new(),
                        }
                    }
                }
            }
        }
    }

    /// Nonzero check for `el . generator(e)` without allocating.
    pub fn extends_nonzero(&self, el: &Element, e: u32) -> bool {
        let Element::Reduced { mid, minus, .. } = el else {
            return false;
        };
        match self.sign[e as usize] {
            Sign::Minus => {
                let joint = match minus.last() {
                    Some(&last) => self.tgt[last as usize],
                    None => *mid,
                };
                joint == self.src[e as usize]
            }
            Sign::Plus => match minus.last() {
                Some(&last) => self.rel.contains(&(last, e)),
                None => *mid == self.src[e as usize],
            },
        }
    }

    pub fn reduce_tokens(&self, tokens: &[&str]) -> Result<Element, WordError> {
        let word: Vec<u32> = tokens
            .iter()
            .map(|t| {
                self.edge_ix(t)
                    .ok_or_else(|| WordError::UnknownEdge((*t).into()))
            })
            .collect::<Result<_, _>>()?;
        self.reduce_word_ix(&word)
    }

    /// Builds a normal form from explicit walks, checking the shape
    /// invariants.
    pub fn make_element(
        &self,
        plus_ids: &[&str],
        mid: &str,
        minus_ids: &[&str],
    ) -> Result<Element, ElementError> {
        let mid_v = self
            .vertex_ix(mid)
            .ok_or_else(|| ElementError::UnknownVertex(mid.into()))?;
        let mut plus = Vec::new();
        for id in plus_ids {
            let e = self
                .edge_ix(id)
                .ok_or_else(|| ElementError::UnknownEdge((*id).into()))?;
            if self.sign[e as usize] != Sign::Plus {
                return Err(ElementError::Malformed(format!(
                    "{id:?} is not a plus edge"
                )));
            }
            plus.push(e);
        }
        let mut minus = Vec::new();
        for id in minus_ids {
            let e = self
                .edge_ix(id)
                .ok_or_else(|| ElementError::UnknownEdge((*id).into()))?;
            if self.sign[e as usize] != Sign::Minus {
                return Err(ElementError::Malformed(format!(
                    "{id:?} is not a minus edge"
                )));
            }
            minus.push(e);
        }
        for w in plus.windows(2) {
            if self.tgt[w[0] as usize] != self.src[w[1] as usize] {
                return Err(ElementError::Malformed("plus walk not consecutive".into()));
            }
        }
        for w in minus.windows(2) {
            if self.tgt[w[0] as usize] != self.src[w[1] as usize] {
                return Err(ElementError::Malformed("minus walk not consecutive".into()));
            }
        }
        if let Some(&last) = plus.last() {
            if self.tgt[last as usize] != mid_v {
                return Err(ElementError::Malformed(
                    "plus walk does not end at mid".into(),
                ));
            }
        }
        if let Some(&first) = minus.first() {
            if self.src[first as usize] != mid_v {
                return Err(ElementError::Malformed(
                    "minus walk does not start at mid".into(),
                ));
            }
        }
        Ok(Element::Reduced {
            plus,
            mid: mid_v,
            minus,
        })
    }

    /// Renders an element as `0` or `plus:[ids] @mid minus:[ids]`.
    pub fn render(&self, el: &Element) -> String {
        match el {
            Element::Zero => "0".into(),
            Element::Reduced { plus, mid, minus } => {
                let ids = |v: &Vec<u32>| {
                    v.iter()
                        .map(|e| self.edge_ids[*e as usize].clone())
                        .collect::<Vec<_>>()
                        .join(",")
                };
                format!(
                    "plus:[{}] @{} minus:[{}]",
                    ids(plus),
                    self.vertex_names[*mid as usize],
                    ids(minus)
                )
            }
        }
    }

    /// Parses the [`render`](Self::render) format back.
    pub fn parse_element(&self, s: &str) -> Result<Element, ElementError> {
        let s = s.trim();
        if s == "0" {
            return Ok(Element::Zero);
        }
        let malformed = |msg: &str| ElementError::Malformed(msg.into());
        let rest = s
            .strip_prefix("plus:[")
            .ok_or_else(|| malformed("expected plus:["))?;
        let (plus_part, rest) = rest
            .split_once("] @")
            .ok_or_else(|| malformed("expected ] @"))?;
        let (mid_part, minus_rest) = rest
            .split_once(" minus:[")
            .ok_or_else(|| malformed("expected minus:["))?;
        let minus_part = minus_rest
            .strip_suffix(']')
            .ok_or_else(|| malformed("expected closing ]"))?;
        let split = |part: &str| -> Vec<String> {
            if part.is_empty() {
                Vec::new()
            } else {
                part.split(',').map(|t| t.trim().to_owned()).collect()
            }
        };
        let plus_ids = split(plus_part);
        let minus_ids = split(minus_part);
        self.make_element(
            &plus_ids.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            mid_part,
            &minus_ids.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        )
    }
}

// ---------------------------------------------------------------------------
// Fingerprint
// ---------------------------------------------------------------------------

/// Relabeling-invariant profile of one vertex pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PairProfile {
    pub minus_edges: usize,
    pub plus_edges: usize,
    pub relation_pairs: usize,
    /// Sorted per-minus-edge counts of related plus edges.
    pub minus_degrees: Vec<usize>,
    /// Sorted per-plus-edge counts of related minus edges.
    pub plus_degrees: Vec<usize>,
}

/// Canonical isomorphism invariants of an R-graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Fingerprint {
    pub vertices: usize,
    /// Sorted multiset of pair profiles.
    pub pair_profiles: Vec<PairProfile>,
    pub saturated_minus_edges: usize,
    pub saturated_plus_edges: usize,
    pub sole_predecessor_vertices: usize,
    pub full_relation_vertices: usize,
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "vertices: {}", self.vertices)?;
        writeln!(
            f,
            "saturated edges: {} minus, {} plus",
            self.saturated_minus_edges, self.saturated_plus_edges
        )?;
        writeln!(
            f,
            "sole-predecessor vertices: {} ({} with full relation)",
            self.sole_predecessor_vertices, self.full_relation_vertices
        )?;
        writeln!(f, "pairs:")?;
        for p in &self.pair_profiles {
            writeln!(
                f,
                "  minus {} plus {} relations {} degrees {:?}/{:?}",
                p.minus_edges, p.plus_edges, p.relation_pairs, p.minus_degrees, p.plus_degrees
            )?;
        }
        Ok(())
    }
}

pub fn fingerprint(g: &RGraph) -> Result<Fingerprint, InvalidGraph> {
    let topo = Topology::new(g)?;
    let d = derive(&topo);
    let mut pair_profiles = Vec::new();
    let mut rel_count: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for &(m, _) in &topo.rel {
        *rel_count.entry(topo.pair_of(m)).or_default() += 1;
    }
    for (&key, bucket) in &topo.pairs {
        let mut minus_degrees: Vec<usize> = bucket
            .minus
            .iter()
            .map(|&e| topo.omega_plus[e as usize].len())
            .collect();
        let mut plus_degrees: Vec<usize> = bucket
            .plus
            .iter()
            .map(|&e| topo.omega_minus[e as usize].len())
            .collect();
        minus_degrees.sort_unstable();
        plus_degrees.sort_unstable();
        pair_profiles.push(PairProfile {
            minus_edges: bucket.minus.len(),
            plus_edges: bucket.plus.len(),
            relation_pairs: rel_count.get(&key).copied().unwrap_or(0),
            minus_degrees,
            plus_degrees,
        });
    }
    pair_profiles.sort();
    Ok(Fingerprint {
        vertices: topo.vnames.len(),
        pair_profiles,
        saturated_minus_edges: d.sat_minus_union.len(),
        saturated_plus_edges: d.sat_plus_union.len(),
        sole_predecessor_vertices: d.sole_pred.len(),
        full_relation_vertices: d.full_relation_vertices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dyck, build_product_dyck_full};

    fn dyck2() -> (RGraph, Semigroup) {
        let g = build_dyck(2).unwrap();
        let sg = Semigroup::new(&g).unwrap();
        (g, sg)
    }

    #[test]
    fn idempotent_laws() {
        let (_, sg) = dyck2();
        let one = sg.idempotent("p").unwrap();
        assert_eq!(sg.multiply(&one, &one), one);
        assert!(sg.idempotent("q").is_err());
        let gen = sg.generator("a1m").unwrap();
        assert_eq!(sg.multiply(&one, &gen), gen);
        assert_eq!(sg.multiply(&gen, &one), gen);
    }

    #[test]
    fn distinct_idempotents_annihilate() {
        let g = crate::graph::build_markov_dyck(
            &["p".into(), "q".into()],
            &[("p".into(), "q".into()), ("q".into(), "p".into())],
        )
        .unwrap();
        let sg = Semigroup::new(&g).unwrap();
        let p = sg.idempotent("p").unwrap();
        let q = sg.idempotent("q").unwrap();
        assert_eq!(sg.multiply(&p, &q), Element::Zero);
    }

    #[test]
    fn reduce_matched_and_mismatched() {
        let (_, sg) = dyck2();
        let one = sg.idempotent("p").unwrap();
        assert_eq!(sg.reduce_tokens(&["a1m", "a1p"]).unwrap(), one);
        assert_eq!(sg.reduce_tokens(&["a1m", "a2p"]).unwrap(), Element::Zero);
        let el = sg.reduce_tokens(&["a1p", "a1m"]).unwrap();
        assert_eq!(el, sg.make_element(&["a1p"], "p", &["a1m"]).unwrap());
        assert!(matches!(
            sg.reduce_tokens(&[]),
            Err(WordError::Empty)
        ));
        assert!(sg.reduce_tokens(&["zz"]).is_err());
    }

    #[test]
    fn double_cancellation() {
        let (_, sg) = dyck2();
        let x = sg.make_element(&[], "p", &["a1m", "a2m"]).unwrap();
        let y = sg.make_element(&["a2p", "a1p"], "p", &[]).unwrap();
        assert_eq!(sg.multiply(&x, &y), sg.idempotent("p").unwrap());
    }

    #[test]
    fn walk_consecutiveness_is_enforced() {
        let g = crate::graph::build_markov_dyck(
            &["p".into(), "q".into()],
            &[("p".into(), "q".into()), ("q".into(), "p".into())],
        )
        .unwrap();
        let sg = Semigroup::new(&g).unwrap();
        // e1m runs p->q, e2m runs q->p.
        assert!(!sg.reduce_tokens(&["e1m", "e2m", "e1m"]).unwrap().is_zero());
        assert!(sg.reduce_tokens(&["e1m", "e1m"]).unwrap().is_zero());
        // Mid-vertex mismatch through idempotent splice.
        let e1 = sg.generator("e1m").unwrap();
        let q = sg.idempotent("q").unwrap();
        let p = sg.idempotent("p").unwrap();
        assert!(!sg.multiply(&e1, &q).is_zero());
        assert!(sg.multiply(&e1, &p).is_zero());
    }

    #[test]
    fn render_parse_round_trip() {
        let (_, sg) = dyck2();
        for toks in [
            vec!["a1m", "a1p"],
            vec!["a1p", "a1m"],
            vec!["a1p", "a2p", "a1m", "a2m"],
            vec!["a1m", "a2p"],
        ] {
            let el = sg.reduce_tokens(&toks).unwrap();
            let s = sg.render(&el);
            assert_eq!(sg.parse_element(&s).unwrap(), el, "{s}");
        }
    }

    #[test]
    fn make_element_rejects_bad_shapes() {
        let (_, sg) = dyck2();
        assert!(sg.make_element(&["a1m"], "p", &[]).is_err());
        assert!(sg.make_element(&[], "p", &["a1p"]).is_err());
        assert!(sg.make_element(&[], "zz", &[]).is_err());
    }

    #[test]
    fn fingerprints_separate_product_from_dyck() {
        let d4 = build_dyck(4).unwrap();
        let p2 = build_product_dyck_full(2).unwrap();
        let f1 = fingerprint(&d4).unwrap();
        let f2 = fingerprint(&p2).unwrap();
        // Same edge counts, different relation degrees.
        assert_eq!(
            (f1.pair_profiles[0].minus_edges, f1.pair_profiles[0].plus_edges),
            (f2.pair_profiles[0].minus_edges, f2.pair_profiles[0].plus_edges)
        );
        assert_ne!(f1, f2);
    }

    #[test]
    fn fingerprint_distinguishes_sizes() {
        let d2 = build_dyck(2).unwrap();
        let d3 = build_dyck(3).unwrap();
        assert_ne!(fingerprint(&d2).unwrap(), fingerprint(&d3).unwrap());
    }
}
