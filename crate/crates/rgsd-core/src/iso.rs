//! Backtracking isomorphism search between R-graphs.
//!
//! Vertex bijections are pruned by per-pair invariant profiles; edge
//! bijections are then solved pair by pair. A plus-edge image is forced to
//! reproduce the mapped related-minus set exactly, which makes relation
//! preservation hold by construction and keeps the search exhaustive.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::graph::{InvalidGraph, RGraph, Sign, Topology};

/// A sign-preserving, relation-preserving graph isomorphism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphIso {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
}

impl GraphIso {
    /// Re-checks the whole definition against both graphs.
    pub fn verify(&self, g1: &RGraph, g2: &RGraph) -> bool {
        let Ok(t1) = Topology::new(g1) else {
            return false;
        };
        let Ok(t2) = Topology::new(g2) else {
            return false;
        };
        if self.vertex_map.len() != t1.vnames.len() || t1.vnames.len() != t2.vnames.len() {
            return false;
        }
        if self.edge_map.len() != t1.eids.len() || t1.eids.len() != t2.eids.len() {
            return false;
        }
        let mut vmap: HashMap<u32, u32> = HashMap::new();
        let mut vseen = vec![false; t2.vnames.len()];
        for (a, b) in &self.vertex_map {
            let (Some(&ia), Some(&ib)) = (t1.vix.get(a), t2.vix.get(b)) else {
                return false;
            };
            if vseen[ib as usize] {
                return false;
            }
            vseen[ib as usize] = true;
            vmap.insert(ia, ib);
        }
        let mut emap: HashMap<u32, u32> = HashMap::new();
        let mut eseen = vec![false; t2.eids.len()];
        for (a, b) in &self.edge_map {
            let (Some(&ia), Some(&ib)) = (t1.eix.get(a), t2.eix.get(b)) else {
                return false;
            };
            if eseen[ib as usize] {
                return false;
            }
            eseen[ib as usize] = true;
            emap.insert(ia, ib);
        }
        for (&e1, &e2) in &emap {
            if t1.sign[e1 as usize] != t2.sign[e2 as usize] {
                return false;
            }
            if vmap[&t1.src[e1 as usize]] != t2.src[e2 as usize] {
                return false;
            }
            if vmap[&t1.tgt[e1 as usize]] != t2.tgt[e2 as usize] {
                return false;
            }
        }
        if t1.rel.len() != t2.rel.len() {
            return false;
        }
        t1.rel
            .iter()
            .all(|&(m, p)| t2.rel.contains(&(emap[&m], emap[&p])))
    }
}

/// Search outcome. `aborted` distinguishes a blown node budget from a
/// completed exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsoSearch {
    pub isos: Vec<GraphIso>,
    pub aborted: bool,
}

const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

pub fn find_isomorphisms(
    g1: &RGraph,
    g2: &RGraph,
    limit: usize,
) -> Result<IsoSearch, InvalidGraph> {
    find_isomorphisms_budgeted(g1, g2, limit, DEFAULT_NODE_BUDGET)
}

/// Pair invariant: everything about one ordered vertex pair that an
/// isomorphism must preserve.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
struct PairKey {
    minus: usize,
    plus: usize,
    relations: usize,
    minus_degrees: Vec<usize>,
    plus_degrees: Vec<usize>,
}

struct Side {
    topo: Topology,
    /// Ordered vertex list (by name) for deterministic iteration.
    vorder: Vec<u32>,
    pair_keys: HashMap<(u32, u32), PairKey>,
    profiles: Vec<Vec<((u32, bool), PairKey)>>,
}

fn pair_key(topo: &Topology, q: u32, r: u32) -> PairKey {
    let Some(bucket) = topo.pairs.get(&(q, r)) else {
        return PairKey::default();
    };
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
    let relations = topo
        .rel
        .iter()
        .filter(|&&(m, _)| topo.pair_of(m) == (q, r))
        .count();
    PairKey {
        minus: bucket.minus.len(),
        plus: bucket.plus.len(),
        relations,
        minus_degrees,
        plus_degrees,
    }
}

impl Side {
    fn new(g: &RGraph) -> Result<Self, InvalidGraph> {
        let topo = Topology::new(g)?;
        let n = topo.vnames.len();
        let mut vorder: Vec<u32> = (0..n as u32).collect();
        vorder.sort_by(|&a, &b| topo.vnames[a as usize].cmp(&topo.vnames[b as usize]));
        let mut pair_keys = HashMap::new();
        for &(q, r) in topo.pairs.keys() {
            pair_keys.insert((q, r), pair_key(&topo, q, r));
        }
        // Label-free per-vertex profile: the multiset of pair keys seen from
        // this vertex, with direction flags but no counterpart identity.
        let mut profiles = vec![Vec::new(); n];
        for v in 0..n as u32 {
            let mut items = Vec::new();
            for (&(q, r), key) in &pair_keys {
                if q == v {
                    items.push((
                        (if r == v { 2u32 } else { 0u32 }, true),
                        key.clone(),
                    ));
                }
                if r == v && q != v {
                    items.push(((0u32, false), key.clone()));
                }
            }
            items.sort();
            profiles[v as usize] = items;
        }
        Ok(Side {
            topo,
            vorder,
            pair_keys,
            profiles,
        })
    }

    fn key(&self, q: u32, r: u32) -> PairKey {
        self.pair_keys.get(&(q, r)).cloned().unwrap_or_default()
    }
}

struct Search<'a> {
    s1: &'a Side,
    s2: &'a Side,
    limit: usize,
    budget: u64,
    nodes: u64,
    aborted: bool,
    out: Vec<GraphIso>,
}

pub fn find_isomorphisms_budgeted(
    g1: &RGraph,
    g2: &RGraph,
    limit: usize,
    budget: u64,
) -> Result<IsoSearch, InvalidGraph> {
    let s1 = Side::new(g1)?;
    let s2 = Side::new(g2)?;

    let empty = IsoSearch {
        isos: Vec::new(),
        aborted: false,
    };
    if s1.topo.vnames.len() != s2.topo.vnames.len()
        || s1.topo.eids.len() != s2.topo.eids.len()
        || s1.topo.rel.len() != s2.topo.rel.len()
    {
        return Ok(empty);
    }
    let mut prof1: Vec<_> = s1.profiles.clone();
    let mut prof2: Vec<_> = s2.profiles.clone();
    prof1.sort();
    prof2.sort();
    if prof1 != prof2 {
        return Ok(empty);
    }

    let mut search = Search {
        s1: &s1,
        s2: &s2,
        limit,
        budget,
        nodes: 0,
        aborted: false,
        out: Vec::new(),
    };
    let n = s1.topo.vnames.len();
    let mut vmap: Vec<Option<u32>> = vec![None; n];
    let mut used: Vec<bool> = vec![false; n];
    search.vertices(0, &mut vmap, &mut used);
    Ok(IsoSearch {
        isos: search.out,
        aborted: search.aborted,
    })
}

impl<'a> Search<'a> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
        }
        !self.aborted && self.out.len() < self.limit
    }

    fn vertices(&mut self, i: usize, vmap: &mut Vec<Option<u32>>, used: &mut Vec<bool>) {
        if !self.tick() {
            return;
        }
        let order = &self.s1.vorder;
        if i == order.len() {
            self.edges(vmap);
            return;
        }
        let v = order[i];
        for &w in &self.s2.vorder {
            if used[w as usize] {
                continue;
            }
            if self.s1.profiles[v as usize] != self.s2.profiles[w as usize] {
                continue;
            }
            // Pairwise consistency with everything already assigned,
            // including the self pair.
            let consistent = {
                let mut good = self.s1.key(v, v) == self.s2.key(w, w);
                if good {
                    for j in 0..i {
                        let u = order[j];
                        let uw = vmap[u as usize].unwrap();
                        if self.s1.key(v, u) != self.s2.key(w, uw)
                            || self.s1.key(u, v) != self.s2.key(uw, w)
                        {
                            good = false;
                            break;
                        }
                    }
                }
                good
            };
            if !consistent {
                continue;
            }
            vmap[v as usize] = Some(w);
            used[w as usize] = true;
            self.vertices(i + 1, vmap, used);
            vmap[v as usize] = None;
            used[w as usize] = false;
            if self.aborted || self.out.len() >= self.limit {
                return;
            }
        }
    }

    /// Per-pair edge bijections under a full vertex map, combined across
    /// pairs.
    fn edges(&mut self, vmap: &Vec<Option<u32>>) {
        let t1 = &self.s1.topo;
        let t2 = &self.s2.topo;
        let map = |v: u32| vmap[v as usize].unwrap();

        // Deterministic pair order by source/target names.
        let mut pair_list: Vec<(u32, u32)> = t1.pairs.keys().copied().collect();
        pair_list.sort_by(|&(a, b), &(c, d)| {
            (&t1.vnames[a as usize], &t1.vnames[b as usize])
                .cmp(&(&t1.vnames[c as usize], &t1.vnames[d as usize]))
        });

        let mut per_pair: Vec<Vec<Vec<(u32, u32)>>> = Vec::new();
        for &(q, r) in &pair_list {
            let solutions = self.pair_solutions((q, r), (map(q), map(r)));
            if self.aborted {
                return;
            }
            if solutions.is_empty() {
                return;
            }
            per_pair.push(solutions);
        }

        // Cross product across pairs.
        let mut chosen: Vec<usize> = vec![0; per_pair.len()];
        self.combine(vmap, &per_pair, 0, &mut chosen);
    }

    fn combine(
        &mut self,
        vmap: &Vec<Option<u32>>,
        per_pair: &Vec<Vec<Vec<(u32, u32)>>>,
        i: usize,
        chosen: &mut Vec<usize>,
    ) {
        if !self.tick() {
            return;
        }
        if i == per_pair.len() {
            self.emit(vmap, per_pair, chosen);
            return;
        }
        for k in 0..per_pair[i].len() {
            chosen[i] = k;
            self.combine(vmap, per_pair, i + 1, chosen);
            if self.aborted || self.out.len() >= self.limit {
                return;
            }
        }
    }

    fn emit(
        &mut self,
        vmap: &Vec<Option<u32>>,
        per_pair: &Vec<Vec<Vec<(u32, u32)>>>,
        chosen: &Vec<usize>,
    ) {
        let t1 = &self.s1.topo;
        let t2 = &self.s2.topo;
        let mut vertex_map = BTreeMap::new();
        for (v, w) in vmap.iter().enumerate() {
            vertex_map.insert(
                t1.vnames[v].clone(),
                t2.vnames[w.unwrap() as usize].clone(),
            );
        }
        let mut edge_map = BTreeMap::new();
        for (i, sol) in per_pair.iter().enumerate() {
            for &(e1, e2) in &sol[chosen[i]] {
                edge_map.insert(t1.eids[e1 as usize].clone(), t2.eids[e2 as usize].clone());
            }
        }
        self.out.push(GraphIso {
            vertex_map,
            edge_map,
        });
    }

    /// All relation-preserving edge bijections for one mapped pair.
    fn pair_solutions(&mut self, p1: (u32, u32), p2: (u32, u32)) -> Vec<Vec<(u32, u32)>> {
        let t1 = &self.s1.topo;
        let t2 = &self.s2.topo;
        let b1 = &t1.pairs[&p1];
        let Some(b2) = t2.pairs.get(&p2) else {
            return Vec::new();
        };
        if b1.minus.len() != b2.minus.len() || b1.plus.len() != b2.plus.len() {
            return Vec::new();
        }

        // Deterministic orders by edge id.
        let sorted = |v: &Vec<u32>, ids: &Vec<String>| {
            let mut out = v.clone();
            out.sort_by(|&a, &b| ids[a as usize].cmp(&ids[b as usize]));
            out
        };
        let minus1 = sorted(&b1.minus, &t1.eids);
        let minus2 = sorted(&b2.minus, &t2.eids);
        let plus1 = sorted(&b1.plus, &t1.eids);
        let plus2 = sorted(&b2.plus, &t2.eids);

        let mut solutions = Vec::new();
        let mut mu: Vec<Option<u32>> = vec![None; minus1.len()];
        let mut used2: Vec<bool> = vec![false; minus2.len()];
        self.minus_bijections(
            0,
            &minus1,
            &minus2,
            &plus1,
            &plus2,
            &mut mu,
            &mut used2,
            &mut solutions,
        );
        solutions
    }

    #[allow(clippy::too_many_arguments)]
    fn minus_bijections(
        &mut self,
        i: usize,
        minus1: &[u32],
        minus2: &[u32],
        plus1: &[u32],
        plus2: &[u32],
        mu: &mut Vec<Option<u32>>,
        used2: &mut Vec<bool>,
        solutions: &mut Vec<Vec<(u32, u32)>>,
    ) {
        if !self.tick() {
            return;
        }
        let t1 = &self.s1.topo;
        let t2 = &self.s2.topo;
        if i == minus1.len() {
            // Minus map fixed; plus images must reproduce mapped
            // neighborhoods exactly.
            let mu_of: HashMap<u32, u32> = minus1
                .iter()
                .zip(mu.iter())
                .map(|(&m, w)| (m, w.unwrap()))
                .collect();
            let mut partial: Vec<(u32, u32)> = minus1
                .iter()
                .zip(mu.iter())
                .map(|(&m, w)| (m, w.unwrap()))
                .collect();
            let mut pi: Vec<Option<u32>> = vec![None; plus1.len()];
            let mut pused: Vec<bool> = vec![false; plus2.len()];
            self.plus_bijections(
                0, plus1, plus2, &mu_of, &mut pi, &mut pused, &mut partial, solutions,
            );
            return;
        }
        let m = minus1[i];
        for (j, &m2) in minus2.iter().enumerate() {
            if used2[j] {
                continue;
            }
            if t1.omega_plus[m as usize].len() != t2.omega_plus[m2 as usize].len() {
                continue;
            }
            mu[i] = Some(m2);
            used2[j] = true;
            self.minus_bijections(i + 1, minus1, minus2, plus1, plus2, mu, used2, solutions);
            mu[i] = None;
            used2[j] = false;
            if self.aborted {
                return;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn plus_bijections(
        &mut self,
        i: usize,
        plus1: &[u32],
        plus2: &[u32],
        mu_of: &HashMap<u32, u32>,
        pi: &mut Vec<Option<u32>>,
        pused: &mut Vec<bool>,
        partial: &mut Vec<(u32, u32)>,
        solutions: &mut Vec<Vec<(u32, u32)>>,
    ) {
        if !self.tick() {
            return;
        }
        let t1 = &self.s1.topo;
        let t2 = &self.s2.topo;
        if i == plus1.len() {
            let mut sol = partial.clone();
            sol.extend(plus1.iter().zip(pi.iter()).map(|(&p, w)| (p, w.unwrap())));
            solutions.push(sol);
            return;
        }
        let p = plus1[i];
        let mut want: Vec<u32> = t1.omega_minus[p as usize]
            .iter()
            .map(|m| mu_of[m])
            .collect();
        want.sort_unstable();
        for (j, &p2) in plus2.iter().enumerate() {
            if pused[j] {
                continue;
            }
            if t2.omega_minus[p2 as usize] != want {
                continue;
            }
            pi[i] = Some(p2);
            pused[j] = true;
            self.plus_bijections(i + 1, plus1, plus2, mu_of, pi, pused, partial, solutions);
            pi[i] = None;
            pused[j] = false;
            if self.aborted {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dyck, build_product_dyck_full, Edge, RGraph};

    #[test]
    fn dyck_has_exactly_two_automorphisms() {
        let g = build_dyck(2).unwrap();
        let found = find_isomorphisms(&g, &g, 100).unwrap();
        assert!(!found.aborted);
        assert_eq!(found.isos.len(), 2);
        for iso in &found.isos {
            assert!(iso.verify(&g, &g));
        }
        // Identity plus the simultaneous index swap.
        let swap = found
            .isos
            .iter()
            .find(|i| i.edge_map["a1m"] == "a2m")
            .expect("swap map");
        assert_eq!(swap.edge_map["a1p"], "a2p");
    }

    #[test]
    fn different_sizes_give_none() {
        let d2 = build_dyck(2).unwrap();
        let p2 = build_product_dyck_full(2).unwrap();
        let found = find_isomorphisms(&d2, &p2, 10).unwrap();
        assert!(found.isos.is_empty());
        assert!(!found.aborted);
    }

    #[test]
    fn missing_relation_gives_none() {
        let d2 = build_dyck(2).unwrap();
        let mut rels = d2.relations().to_vec();
        rels.pop();
        let trimmed = RGraph::new(d2.vertices().to_vec(), d2.edges().to_vec(), rels).unwrap();
        let found = find_isomorphisms(&d2, &trimmed, 10).unwrap();
        assert!(found.isos.is_empty());
        assert!(!found.aborted);
    }

    #[test]
    fn relabeled_dyck_is_isomorphic() {
        let d2 = build_dyck(2).unwrap();
        let relabeled = RGraph::new(
            vec!["v".into()],
            d2.edges()
                .iter()
                .map(|e| Edge {
                    id: format!("x_{}", e.id),
                    sign: e.sign,
                    source: "v".into(),
                    target: "v".into(),
                })
                .collect(),
            d2.relations()
                .iter()
                .map(|(m, p)| (format!("x_{m}"), format!("x_{p}")))
                .collect(),
        )
        .unwrap();
        let found = find_isomorphisms(&d2, &relabeled, 5).unwrap();
        assert!(!found.isos.is_empty());
        for iso in &found.isos {
            assert!(iso.verify(&d2, &relabeled));
        }
    }
}
