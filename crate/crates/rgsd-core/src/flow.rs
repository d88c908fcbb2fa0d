//! Shift presentations and symbol expansion.
//!
//! A presentation is a graph together with an ordered list of expansion
//! steps. Each step rewrites one symbol `s` into `s .` for a fresh marker
//! symbol (spelled `._1`, `._2`, ... in step order). Admissibility over an
//! expanded alphabet is decided by parsing the markers back out, step by
//! step, and testing the recovered core on the graph semigroup. A marker at
//! the very start of a window stands for an occurrence of `s` just outside
//! it, so the parser reinstates that `s` before testing the core; without
//! this the test would accept windows no expanded point contains.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{InvalidGraph, RGraph};
use crate::language::{LanguageError, PeriodicOrbit, PhaseFailure, Word};
use crate::semigroup::{Element, Semigroup};

/// Index into a presentation's alphabet. Symbols for graph edges keep the
/// edge's index; marker symbols follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SymKind {
    Edge,
    Marker,
}

/// One expansion step: every occurrence of `sigma` gains a trailing
/// `bullet`, a symbol fresh to the alphabet of the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionStep {
    pub sigma: SymId,
    pub bullet: SymId,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("bullet token {0:?} is already taken")]
    BulletTaken(String),
    #[error("word already contains the bullet {0:?}")]
    BulletInWord(String),
    #[error("symbol {0:?} is not in the pre-step alphabet")]
    SymbolAfterStep(String),
    #[error("word {0:?} is not admissible")]
    Inadmissible(String),
    #[error(transparent)]
    Language(#[from] LanguageError),
    #[error(transparent)]
    Graph(#[from] InvalidGraph),
}

/// De-expansion of a single word under a single step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeexpandOutcome {
    Core(Word),
    Reject,
}

/// A graph shift plus an ordered list of expansion steps.
pub struct ShiftPresentation {
    sg: Semigroup,
    tokens: Vec<String>,
    kinds: Vec<SymKind>,
    tok_ix: HashMap<String, u32>,
    steps: Vec<ExpansionStep>,
    /// Symbol -> rank in token order.
    lex_rank: Vec<u32>,
    /// Symbols sorted by token.
    sorted_syms: Vec<SymId>,
}

impl ShiftPresentation {
    pub fn new(graph: &RGraph) -> Result<Self, InvalidGraph> {
        let sg = Semigroup::new(graph)?;
        let tokens: Vec<String> = (0..sg.edge_count() as u32)
            .map(|e| sg.edge_id(e).to_owned())
            .collect();
        let kinds = vec![SymKind::Edge; tokens.len()];
        let tok_ix = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let mut pres = ShiftPresentation {
            sg,
            tokens,
            kinds,
            tok_ix,
            steps: Vec::new(),
            lex_rank: Vec::new(),
            sorted_syms: Vec::new(),
        };
        pres.rebuild_order();
        Ok(pres)
    }

    fn rebuild_order(&mut self) {
        let n = self.tokens.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| self.tokens[a as usize].cmp(&self.tokens[b as usize]));
        self.lex_rank = vec![0; n];
        for (rank, &s) in order.iter().enumerate() {
            self.lex_rank[s as usize] = rank as u32;
        }
        self.sorted_syms = order.into_iter().map(SymId).collect();
    }

    /// A new presentation with one more step expanding `sigma`.
    pub fn expanded(&self, sigma: &str) -> Result<ShiftPresentation, FlowError> {
        let sig = self
            .tok_ix
            .get(sigma)
            .copied()
            .ok_or_else(|| FlowError::UnknownSymbol(sigma.into()))?;
        let bullet_tok = format!("._{}", self.steps.len() + 1);
        if self.tok_ix.contains_key(&bullet_tok) {
            return Err(FlowError::BulletTaken(bullet_tok));
        }
        let mut tokens = self.tokens.clone();
        let mut kinds = self.kinds.clone();
        let mut tok_ix = self.tok_ix.clone();
        let bullet = tokens.len() as u32;
        tok_ix.insert(bullet_tok.clone(), bullet);
        tokens.push(bullet_tok);
        kinds.push(SymKind::Marker);
        let mut steps = self.steps.clone();
        steps.push(ExpansionStep {
            sigma: SymId(sig),
            bullet: SymId(bullet),
        });
        let mut pres = ShiftPresentation {
            sg: self.sg.clone(),
            tokens,
            kinds,
            tok_ix,
            steps,
            lex_rank: Vec::new(),
            sorted_syms: Vec::new(),
        };
        pres.rebuild_order();
        Ok(pres)
    }

    pub fn steps(&self) -> &[ExpansionStep] {
        &self.steps
    }

    /// The same graph with the step list emptied.
    pub(crate) fn clone_base(&self) -> ShiftPresentation {
        let edge_count = self.sg.edge_count();
        let tokens: Vec<String> = self.tokens[..edge_count].to_vec();
        let kinds = vec![SymKind::Edge; edge_count];
        let tok_ix = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let mut pres = ShiftPresentation {
            sg: self.sg.clone(),
            tokens,
            kinds,
            tok_ix,
            steps: Vec::new(),
            lex_rank: Vec::new(),
            sorted_syms: Vec::new(),
        };
        pres.rebuild_order();
        pres
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.sg
    }

    pub fn alphabet_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn token(&self, s: SymId) -> &str {
        &self.tokens[s.0 as usize]
    }

    pub fn symbol(&self, token: &str) -> Option<SymId> {
        self.tok_ix.get(token).map(|&i| SymId(i))
    }

    /// Alphabet tokens in canonical (sorted) order.
    pub fn alphabet(&self) -> Vec<String> {
        self.sorted_syms
            .iter()
            .map(|&s| self.tokens[s.0 as usize].clone())
            .collect()
    }

    pub(crate) fn sorted_symbols(&self) -> &[SymId] {
        &self.sorted_syms
    }

    pub fn parse_word(&self, s: &str) -> Result<Word, FlowError> {
        let syms: Vec<SymId> = s
            .split_whitespace()
            .map(|t| {
                self.symbol(t)
                    .ok_or_else(|| FlowError::UnknownSymbol(t.into()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Word(syms))
    }

    pub fn render_word(&self, w: &Word) -> String {
        w.0.iter()
            .map(|&s| self.token(s))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn cmp_words(&self, a: &Word, b: &Word) -> std::cmp::Ordering {
        let ra = a.0.iter().map(|&s| self.lex_rank[s.0 as usize]);
        let rb = b.0.iter().map(|&s| self.lex_rank[s.0 as usize]);
        ra.cmp(rb)
    }

    pub(crate) fn sort_words(&self, ws: &mut Vec<Word>) {
        ws.sort_by(|a, b| self.cmp_words(a, b));
        ws.dedup();
    }

    /// Lexicographically least rotation of a word.
    pub(crate) fn least_rotation(&self, w: &Word) -> Word {
        let mut best = w.clone();
        for k in 1..w.len() {
            let rot = w.rotated(k);
            if self.cmp_words(&rot, &best) == std::cmp::Ordering::Less {
                best = rot;
            }
        }
        best
    }

    // -- admissibility ------------------------------------------------------

    /// Marker placement for one step: a bullet sits at the window start or
    /// right after its sigma; a sigma sits at the window end or right before
    /// its bullet.
    fn pattern_ok(w: &[SymId], step: &ExpansionStep) -> bool {
        let n = w.len();
        for i in 0..n {
            if w[i] == step.bullet && i > 0 && w[i - 1] != step.sigma {
                return false;
            }
            if w[i] == step.sigma && i + 1 < n && w[i + 1] != step.bullet {
                return false;
            }
        }
        true
    }

    /// Core admissibility over the full step stack. Empty input is
    /// considered admissible here; public entry points reject it first.
    pub(crate) fn admissible_syms(&self, w: &[SymId]) -> bool {
        if self.steps.is_empty() {
            return self.reduce_edges(w).map_or(true, |el| !el.is_zero());
        }
        let mut cur: Vec<SymId> = w.to_vec();
        for step in self.steps.iter().rev() {
            if cur.is_empty() {
                return true;
            }
            if !Self::pattern_ok(&cur, step) {
                return false;
            }
            let lead = cur[0] == step.bullet;
            cur.retain(|&s| s != step.bullet);
            if lead {
                // The marker's sigma sits just before the window.
                cur.insert(0, step.sigma);
            }
        }
        self.reduce_edges(&cur).map_or(true, |el| !el.is_zero())
    }

    /// Reduces a word of edge symbols; `None` for the empty word.
    fn reduce_edges(&self, w: &[SymId]) -> Option<Element> {
        let (&first, rest) = w.split_first()?;
        debug_assert!(self.kinds[first.0 as usize] == SymKind::Edge);
        let mut el = self.sg.generator_ix(first.0);
        for &s in rest {
            debug_assert!(self.kinds[s.0 as usize] == SymKind::Edge);
            el = self.sg.append_generator(&el, s.0);
            if el.is_zero() {
                break;
            }
        }
        Some(el)
    }

    // -- word-level expansion ----------------------------------------------

    /// Replaces each occurrence of the step's sigma by sigma-then-bullet.
    pub fn expand_word(&self, w: &Word, step: &ExpansionStep) -> Result<Word, FlowError> {
        if w.0.contains(&step.bullet) {
            return Err(FlowError::BulletInWord(
                self.token(step.bullet).to_owned(),
            ));
        }
        for &s in &w.0 {
            if s.0 > step.bullet.0 {
                return Err(FlowError::SymbolAfterStep(self.token(s).to_owned()));
            }
        }
        let mut out = Vec::with_capacity(w.len() + 4);
        for &s in &w.0 {
            out.push(s);
            if s == step.sigma {
                out.push(step.bullet);
            }
        }
        Ok(Word(out))
    }

    /// Pattern-checks a word against one step and strips the step's bullets.
    /// A leading bullet is legal (its sigma lies outside the window) and is
    /// simply dropped from the returned core.
    pub fn deexpand_word(&self, w: &Word, step: &ExpansionStep) -> DeexpandOutcome {
        if !Self::pattern_ok(&w.0, step) {
            return DeexpandOutcome::Reject;
        }
        let core: Vec<SymId> = w.0.iter().copied().filter(|&s| s != step.bullet).collect();
        DeexpandOutcome::Core(Word(core))
    }

    /// The orbit map: expands the period word cyclically and renormalizes.
    pub fn expand_orbit(
        &self,
        orbit: &PeriodicOrbit,
        step: &ExpansionStep,
    ) -> Result<PeriodicOrbit, FlowError> {
        let expanded = self.expand_word(orbit.word(), step)?;
        let normalized = self.least_rotation(&expanded);
        debug_assert!(normalized.is_primitive());
        Ok(PeriodicOrbit::from_normalized(normalized))
    }

    // -- stripped-horizon sets ----------------------------------------------

    /// Right extensions of `anchor` carrying exactly `count` non-bullet
    /// symbols of the given step, trailing bullet variants included.
    pub(crate) fn stripped_followers(
        &self,
        anchor: &[SymId],
        count: usize,
        step: &ExpansionStep,
    ) -> Vec<Word> {
        let mut out = Vec::new();
        let mut buf: Vec<SymId> = anchor.to_vec();
        self.stripped_right_rec(&mut buf, anchor.len(), 0, count, step, &mut out);
        self.sort_words(&mut out);
        out
    }

    fn stripped_right_rec(
        &self,
        buf: &mut Vec<SymId>,
        anchor_len: usize,
        have: usize,
        want: usize,
        step: &ExpansionStep,
        out: &mut Vec<Word>,
    ) {
        for &s in self.sorted_symbols() {
            let gain = usize::from(s != step.bullet);
            if have + gain > want {
                continue;
            }
            buf.push(s);
            if self.admissible_syms(buf) {
                if have + gain == want {
                    out.push(Word(buf[anchor_len..].to_vec()));
                }
                self.stripped_right_rec(buf, anchor_len, have + gain, want, step, out);
            }
            buf.pop();
        }
    }

    /// Left extensions of `anchor` carrying exactly `count` non-bullet
    /// symbols, never starting with the step's bullet.
    pub(crate) fn stripped_predecessors(
        &self,
        anchor: &[SymId],
        count: usize,
        step: &ExpansionStep,
    ) -> Vec<Word> {
        let mut out = Vec::new();
        let mut front: Vec<SymId> = Vec::new(); // reversed prefix
        self.stripped_left_rec(&mut front, anchor, 0, count, step, &mut out);
        self.sort_words(&mut out);
        out
    }

    fn stripped_left_rec(
        &self,
        front: &mut Vec<SymId>,
        anchor: &[SymId],
        have: usize,
        want: usize,
        step: &ExpansionStep,
        out: &mut Vec<Word>,
    ) {
        for &s in self.sorted_symbols() {
            let gain = usize::from(s != step.bullet);
            if have + gain > want {
                continue;
            }
            front.push(s);
            let candidate: Vec<SymId> = front
                .iter()
                .rev()
                .copied()
                .chain(anchor.iter().copied())
                .collect();
            if self.admissible_syms(&candidate) {
                if have + gain == want && s != step.bullet {
                    out.push(Word(candidate[..front.len()].to_vec()));
                }
                self.stripped_left_rec(front, anchor, have + gain, want, step, out);
            }
            front.pop();
        }
    }

    /// Followers at stripped depth `k` compatible with every stripped-depth
    /// `g` predecessor.
    pub(crate) fn omega_plus_stripped(
        &self,
        anchor: &Word,
        k: usize,
        g: usize,
        step: &ExpansionStep,
    ) -> Vec<Word> {
        let followers = self.stripped_followers(&anchor.0, k, step);
        let preds = self.stripped_predecessors(&anchor.0, g, step);
        followers
            .into_iter()
            .filter(|b| {
                preds.iter().all(|u| {
                    let word: Vec<SymId> = u
                        .0
                        .iter()
                        .chain(anchor.0.iter())
                        .chain(b.0.iter())
                        .copied()
                        .collect();
                    self.admissible_syms(&word)
                })
            })
            .collect()
    }

    /// Two-sided contexts at stripped depth `h` on both sides.
    pub(crate) fn context_set_stripped(
        &self,
        anchor: &Word,
        h: usize,
        step: &ExpansionStep,
    ) -> Vec<(Word, Word)> {
        let preds = self.stripped_predecessors(&anchor.0, h, step);
        let fols = self.stripped_followers(&anchor.0, h, step);
        let mut out = Vec::new();
        for u in &preds {
            for v in &fols {
                let word: Vec<SymId> = u
                    .0
                    .iter()
                    .chain(anchor.0.iter())
                    .chain(v.0.iter())
                    .copied()
                    .collect();
                if self.admissible_syms(&word) {
                    out.push((u.clone(), v.clone()));
                }
            }
        }
        out
    }
}

/// Builds a presentation by expanding the listed symbols in order. Bullets
/// are assigned `._1`, `._2`, ... automatically; a sigma may itself be an
/// earlier bullet.
pub fn apply_expansion_sequence(
    graph: &RGraph,
    sigmas: &[String],
) -> Result<ShiftPresentation, FlowError> {
    let mut pres = ShiftPresentation::new(graph)?;
    for s in sigmas {
        pres = pres.expanded(s)?;
    }
    Ok(pres)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepSpec {
    sigma: String,
}

/// Parses an expansion step file: a JSON array of `{"sigma": token}`.
pub fn parse_steps_file(s: &str) -> Result<Vec<String>, serde_json::Error> {
    let specs: Vec<StepSpec> = serde_json::from_str(s)?;
    Ok(specs.into_iter().map(|x| x.sigma).collect())
}

// ---------------------------------------------------------------------------
// Empirical expansion checks
// ---------------------------------------------------------------------------

fn strip_word(w: &Word, bullet: SymId) -> Word {
    Word(w.0.iter().copied().filter(|&s| s != bullet).collect())
}

/// Check 21: the expanded image of a word's two-sided-safe follower set
/// matches the follower set of the expanded word, compared at equal stripped
/// depth.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaImageReport {
    pub sigma: String,
    pub word: String,
    pub follower_horizon: usize,
    pub predecessor_horizon: usize,
    pub stripped_len: usize,
    pub equal: bool,
    pub only_in_image: Vec<String>,
    pub only_in_expanded: Vec<String>,
}

pub fn omega_image_check(
    base: &ShiftPresentation,
    sigma: &str,
    a: &Word,
    k: usize,
    g: usize,
) -> Result<OmegaImageReport, FlowError> {
    let expanded = base.expanded(sigma)?;
    let step = *expanded.steps().last().unwrap();
    if !base.is_admissible(a)? {
        return Err(FlowError::Inadmissible(base.render_word(a)));
    }
    let lhs = base.omega_plus_truncated(a, k, g)?;
    let phi_a = expanded.expand_word(a, &step)?;
    let rhs = expanded.omega_plus_stripped(&phi_a, k, g, &step);

    let lhs_images: Vec<Word> = lhs
        .members
        .iter()
        .map(|b| expanded.expand_word(b, &step).expect("pre-step word"))
        .collect();
    let stripped_len = lhs_images
        .iter()
        .chain(rhs.iter())
        .map(|w| strip_word(w, step.bullet).len())
        .min()
        .unwrap_or(k);
    let cut = |w: &Word| -> Word {
        let mut s = strip_word(w, step.bullet);
        s.0.truncate(stripped_len);
        s
    };
    let left: HashSet<Word> = lhs_images.iter().map(cut).collect();
    let right: HashSet<Word> = rhs.iter().map(cut).collect();
    let mut only_in_image: Vec<String> = left
        .difference(&right)
        .map(|w| expanded.render_word(w))
        .collect();
    let mut only_in_expanded: Vec<String> = right
        .difference(&left)
        .map(|w| expanded.render_word(w))
        .collect();
    only_in_image.sort();
    only_in_expanded.sort();
    Ok(OmegaImageReport {
        sigma: sigma.to_owned(),
        word: base.render_word(a),
        follower_horizon: k,
        predecessor_horizon: g,
        stripped_len,
        equal: only_in_image.is_empty() && only_in_expanded.is_empty(),
        only_in_image,
        only_in_expanded,
    })
}

/// Horizon convention for the expanded side of check 22.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextAlignment {
    /// Contexts of the expanded word with `h` non-bullet symbols per side,
    /// cut at substitution-group boundaries. This makes the expanded
    /// comparison carry exactly the information of the base comparison.
    Grouped,
    /// Contexts of the expanded word with `h + 1` raw symbols per side.
    Physical,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextEqualityReport {
    pub sigma: String,
    pub left: String,
    pub right: String,
    pub horizon: usize,
    pub alignment: ContextAlignment,
    pub base_equal: bool,
    pub expanded_equal: bool,
    pub agree: bool,
    pub base_witness: Option<[String; 2]>,
    pub expanded_witness: Option<[String; 2]>,
}

fn first_diff(
    a: &[(Word, Word)],
    b: &[(Word, Word)],
) -> Option<(Word, Word)> {
    let sa: HashSet<&(Word, Word)> = a.iter().collect();
    let sb: HashSet<&(Word, Word)> = b.iter().collect();
    sa.symmetric_difference(&sb).next().map(|&p| p.clone())
}

pub fn context_equality_check(
    base: &ShiftPresentation,
    sigma: &str,
    left: &Word,
    right: &Word,
    h: usize,
    alignment: ContextAlignment,
) -> Result<ContextEqualityReport, FlowError> {
    let expanded = base.expanded(sigma)?;
    let step = *expanded.steps().last().unwrap();
    for w in [left, right] {
        if !base.is_admissible(w)? {
            return Err(FlowError::Inadmissible(base.render_word(w)));
        }
    }
    let base_left = base.context_set(left, h)?;
    let base_right = base.context_set(right, h)?;
    let base_equal = base_left.members == base_right.members;
    let base_witness = if base_equal {
        None
    } else {
        first_diff(&base_left.members, &base_right.members)
            .map(|(u, v)| [base.render_word(&u), base.render_word(&v)])
    };

    let phi_left = expanded.expand_word(left, &step)?;
    let phi_right = expanded.expand_word(right, &step)?;
    let (exp_left, exp_right) = match alignment {
        ContextAlignment::Grouped => (
            expanded.context_set_stripped(&phi_left, h, &step),
            expanded.context_set_stripped(&phi_right, h, &step),
        ),
        ContextAlignment::Physical => (
            expanded.context_set(&phi_left, h + 1)?.members,
            expanded.context_set(&phi_right, h + 1)?.members,
        ),
    };
    let expanded_equal = exp_left == exp_right;
    let expanded_witness = if expanded_equal {
        None
    } else {
        first_diff(&exp_left, &exp_right)
            .map(|(u, v)| [expanded.render_word(&u), expanded.render_word(&v)])
    };

    Ok(ContextEqualityReport {
        sigma: sigma.to_owned(),
        left: base.render_word(left),
        right: base.render_word(right),
        horizon: h,
        alignment,
        base_equal,
        expanded_equal,
        agree: base_equal == expanded_equal,
        base_witness,
        expanded_witness,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextBatchReport {
    pub sigma: String,
    pub max_len: usize,
    pub horizon: usize,
    pub alignment: ContextAlignment,
    pub words: usize,
    pub checked_pairs: usize,
    pub disagreements: usize,
    pub samples: Vec<[String; 2]>,
}

/// Runs check 22 over every pair of admissible words up to `max_len`,
/// grouping by context class so each word's sets are computed once.
pub fn context_equality_batch(
    base: &ShiftPresentation,
    sigma: &str,
    max_len: usize,
    h: usize,
    alignment: ContextAlignment,
) -> Result<ContextBatchReport, FlowError> {
    let expanded = base.expanded(sigma)?;
    let step = *expanded.steps().last().unwrap();
    let words = base.enumerate_words_upto(max_len);

    let mut base_class: Vec<usize> = Vec::with_capacity(words.len());
    let mut base_keys: HashMap<Vec<(Word, Word)>, usize> = HashMap::new();
    for w in &words {
        let ctx = base.context_set(w, h)?.members;
        let next = base_keys.len();
        base_class.push(*base_keys.entry(ctx).or_insert(next));
    }

    let mut exp_class: Vec<usize> = Vec::with_capacity(words.len());
    let mut exp_keys: HashMap<Vec<(Word, Word)>, usize> = HashMap::new();
    for w in &words {
        let phi = expanded.expand_word(w, &step)?;
        let ctx = match alignment {
            ContextAlignment::Grouped => expanded.context_set_stripped(&phi, h, &step),
            ContextAlignment::Physical => expanded.context_set(&phi, h + 1)?.members,
        };
        let next = exp_keys.len();
        exp_class.push(*exp_keys.entry(ctx).or_insert(next));
    }

    let mut checked = 0usize;
    let mut disagreements = 0usize;
    let mut samples = Vec::new();
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            checked += 1;
            let base_eq = base_class[i] == base_class[j];
            let exp_eq = exp_class[i] == exp_class[j];
            if base_eq != exp_eq {
                disagreements += 1;
                if samples.len() < 16 {
                    samples.push([
                        base.render_word(&words[i]),
                        base.render_word(&words[j]),
                    ]);
                }
            }
        }
    }
    Ok(ContextBatchReport {
        sigma: sigma.to_owned(),
        max_len,
        horizon: h,
        alignment,
        words: words.len(),
        checked_pairs: checked,
        disagreements,
        samples,
    })
}

/// Check 31: an orbit passing the block-window test maps to an orbit
/// passing it with doubled block length.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitWindowReport {
    pub sigma: String,
    pub orbit: String,
    pub image_orbit: String,
    pub block_len: usize,
    pub follower_horizon: usize,
    pub predecessor_horizon: usize,
    pub precondition_pass: bool,
    pub image_pass: bool,
    pub failing_phases: Vec<PhaseFailure>,
}

pub fn orbit_window_check(
    base: &ShiftPresentation,
    sigma: &str,
    orbit: &PeriodicOrbit,
    n: usize,
    k: usize,
    g: usize,
) -> Result<OrbitWindowReport, FlowError> {
    let expanded = base.expanded(sigma)?;
    let step = *expanded.steps().last().unwrap();
    let pre = base.an_window_check(orbit, n, k, g)?;
    let image = base.expand_orbit(orbit, &step)?;
    let image_rep = expanded.an_window_check(&image, 2 * n, k, g)?;
    Ok(OrbitWindowReport {
        sigma: sigma.to_owned(),
        orbit: base.render_word(orbit.word()),
        image_orbit: expanded.render_word(image.word()),
        block_len: n,
        follower_horizon: k,
        predecessor_horizon: g,
        precondition_pass: pre.pass,
        image_pass: image_rep.pass,
        failing_phases: image_rep.failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitBatchReport {
    pub sigma: String,
    pub max_period: usize,
    pub block_len: usize,
    pub follower_horizon: usize,
    pub predecessor_horizon: usize,
    pub checked: usize,
    pub skipped_precondition: usize,
    pub counterexamples: Vec<String>,
    pub inconclusive: Vec<String>,
}

/// Runs check 31 over every periodic orbit up to `max_period`.
pub fn orbit_window_batch(
    base: &ShiftPresentation,
    sigma: &str,
    max_period: usize,
    n: usize,
    k: usize,
    g: usize,
) -> Result<OrbitBatchReport, FlowError> {
    let enumeration = base.enumerate_periodic_orbits(max_period);
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut counterexamples = Vec::new();
    for orbit in &enumeration.orbits {
        let rep = orbit_window_check(base, sigma, orbit, n, k, g)?;
        if !rep.precondition_pass {
            skipped += 1;
            continue;
        }
        checked += 1;
        if !rep.image_pass {
            counterexamples.push(rep.orbit);
        }
    }
    Ok(OrbitBatchReport {
        sigma: sigma.to_owned(),
        max_period,
        block_len: n,
        follower_horizon: k,
        predecessor_horizon: g,
        checked,
        skipped_precondition: skipped,
        counterexamples,
        inconclusive: enumeration
            .inconclusive
            .iter()
            .map(|w| base.render_word(w))
            .collect(),
    })
}
