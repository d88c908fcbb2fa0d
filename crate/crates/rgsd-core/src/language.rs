//! The language of a shift presentation: admissible words, truncated
//! follower / predecessor / context sets, periodic orbits, and the
//! block-window test.
//!
//! The two-sided infinite sets of a shift are replaced throughout by
//! horizon-truncated versions with exact brute-force semantics; every
//! operation states its horizons in its arguments.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{ShiftPresentation, SymId};
use crate::semigroup::Element;

/// A finite word over a presentation's alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<SymId>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn syms(&self) -> &[SymId] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn subword(&self, start: usize, len: usize) -> Word {
        Word(self.0[start..start + len].to_vec())
    }

    pub(crate) fn rotated(&self, k: usize) -> Word {
        let n = self.0.len();
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[k..]);
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    /// True when the word is not a proper power of a shorter word.
    pub fn is_primitive(&self) -> bool {
        let n = self.0.len();
        if n == 0 {
            return false;
        }
        for d in 1..n {
            if n % d != 0 {
                continue;
            }
            if (d..n).all(|i| self.0[i] == self.0[i - d]) {
                return false;
            }
        }
        true
    }

    /// Symbol at position `i` of the periodic two-sided extension.
    fn cyclic(&self, i: i64) -> SymId {
        let n = self.0.len() as i64;
        self.0[i.rem_euclid(n) as usize]
    }

    fn cyclic_window(&self, start: i64, len: usize) -> Word {
        Word((0..len as i64).map(|j| self.cyclic(start + j)).collect())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LanguageError {
    #[error("empty word")]
    EmptyWord,
    #[error("word is not admissible")]
    InadmissibleAnchor,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("word is not a valid orbit representative: {0}")]
    BadOrbit(String),
}

/// A set of words of one fixed length, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonSet {
    pub horizon: usize,
    pub members: Vec<Word>,
}

impl HorizonSet {
    pub fn contains(&self, w: &Word) -> bool {
        self.members.iter().any(|m| m == w)
    }
}

/// Two-sided context pairs of one fixed horizon, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSet {
    pub horizon: usize,
    pub members: Vec<(Word, Word)>,
}

/// Partition of short admissible words by context-set equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextClasses {
    pub max_len: usize,
    pub horizon: usize,
    /// Each class lists its words in canonical order; classes are ordered by
    /// their first word.
    pub classes: Vec<Vec<Word>>,
}

/// Outcome of the admissible-powers test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PeriodicAdmissibility {
    Yes,
    No { zero_power: usize },
    Inconclusive { cap: usize },
}

/// A periodic orbit, represented by the lexicographically least rotation of
/// a primitive period word with admissible powers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicOrbit {
    word: Word,
}

impl PeriodicOrbit {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub(crate) fn from_normalized(word: Word) -> PeriodicOrbit {
        PeriodicOrbit { word }
    }

    /// Normalizes and validates an orbit representative.
    pub fn new(
        pres: &ShiftPresentation,
        word: &Word,
        cap: usize,
    ) -> Result<PeriodicOrbit, LanguageError> {
        if word.is_empty() {
            return Err(LanguageError::EmptyWord);
        }
        if !word.is_primitive() {
            return Err(LanguageError::BadOrbit(
                "period word is a proper power".into(),
            ));
        }
        let normalized = pres.least_rotation(word);
        match pres.is_periodic_admissible(&normalized, cap)? {
            PeriodicAdmissibility::Yes => Ok(PeriodicOrbit { word: normalized }),
            PeriodicAdmissibility::No { zero_power } => Err(LanguageError::BadOrbit(format!(
                "power {zero_power} of the period word is inadmissible"
            ))),
            PeriodicAdmissibility::Inconclusive { cap } => Err(LanguageError::BadOrbit(format!(
                "power test inconclusive at cap {cap}"
            ))),
        }
    }
}

/// Orbit enumeration result; inconclusive power tests are surfaced, never
/// dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitEnumeration {
    pub orbits: Vec<PeriodicOrbit>,
    pub inconclusive: Vec<Word>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSide {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseFailure {
    pub phase: usize,
    pub side: WindowSide,
}

/// Per-phase outcome of the block-window test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnWindowReport {
    pub pass: bool,
    pub failures: Vec<PhaseFailure>,
}

impl ShiftPresentation {
    /// Decides admissibility of a nonempty word over the presentation's
    /// alphabet.
    pub fn is_admissible(&self, w: &Word) -> Result<bool, LanguageError> {
        if w.is_empty() {
            return Err(LanguageError::EmptyWord);
        }
        Ok(self.admissible_syms(&w.0))
    }

    /// All admissible words of exactly the given length, lexicographic.
    pub fn enumerate_words(&self, len: usize) -> Vec<Word> {
        if len == 0 {
            return Vec::new();
        }
        let mut out = self.collect_right(&[], len);
        self.sort_words(&mut out);
        out
    }

    /// All admissible words of lengths `1..=len`, shortest first.
    pub fn enumerate_words_upto(&self, len: usize) -> Vec<Word> {
        let mut out = Vec::new();
        for l in 1..=len {
            out.extend(self.enumerate_words(l));
        }
        out
    }

    /// Right extensions `b` with `|b| = k` and `anchor . b` admissible. An
    /// empty anchor enumerates words outright.
    pub(crate) fn collect_right(&self, anchor: &[SymId], k: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if self.steps().is_empty() {
            let el = self.anchor_element(anchor);
            let mut buf = Vec::with_capacity(k);
            self.right_rec_elem(el, &mut buf, k, &mut out);
        } else {
            let mut buf: Vec<SymId> = anchor.to_vec();
            self.right_rec_test(&mut buf, anchor.len(), k, &mut out);
        }
        self.sort_words(&mut out);
        out
    }

    /// Element of a (possibly empty) anchor over the plain graph alphabet.
    fn anchor_element(&self, anchor: &[SymId]) -> Option<Element> {
        let (&first, rest) = anchor.split_first()?;
        let sg = self.semigroup();
        let mut el = sg.generator_ix(first.0);
        for &s in rest {
            el = sg.append_generator(&el, s.0);
        }
        Some(el)
    }

    fn right_rec_elem(
        &self,
        state: Option<Element>,
        buf: &mut Vec<SymId>,
        k: usize,
        out: &mut Vec<Word>,
    ) {
        let sg = self.semigroup();
        for &s in self.sorted_symbols() {
            let next = match &state {
                None => sg.generator_ix(s.0),
                Some(el) => {
                    if !sg.extends_nonzero(el, s.0) {
                        continue;
                    }
                    sg.append_generator(el, s.0)
                }
            };
            if next.is_zero() {
                continue;
            }
            buf.push(s);
            if buf.len() == k {
                out.push(Word(buf.clone()));
            } else {
                self.right_rec_elem(Some(next), buf, k, out);
            }
            buf.pop();
        }
    }

    fn right_rec_test(
        &self,
        buf: &mut Vec<SymId>,
        anchor_len: usize,
        k: usize,
        out: &mut Vec<Word>,
    ) {
        for &s in self.sorted_symbols() {
            buf.push(s);
            if self.admissible_syms(buf) {
                if buf.len() - anchor_len == k {
                    out.push(Word(buf[anchor_len..].to_vec()));
                } else {
                    self.right_rec_test(buf, anchor_len, k, out);
                }
            }
            buf.pop();
        }
    }

    /// Left extensions `u` with `|u| = g` and `u . anchor` admissible.
    pub(crate) fn collect_left(&self, anchor: &[SymId], g: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if self.steps().is_empty() {
            let el = self.anchor_element(anchor);
            let mut front = Vec::with_capacity(g);
            self.left_rec_elem(el, &mut front, g, &mut out);
        } else {
            let mut front: Vec<SymId> = Vec::new();
            self.left_rec_test(&mut front, anchor, g, &mut out);
        }
        self.sort_words(&mut out);
        out
    }

    fn left_rec_elem(
        &self,
        state: Option<Element>,
        front: &mut Vec<SymId>, // reversed prefix
        g: usize,
        out: &mut Vec<Word>,
    ) {
        let sg = self.semigroup();
        for &s in self.sorted_symbols() {
            let gen = sg.generator_ix(s.0);
            let next = match &state {
                None => gen,
                Some(el) => {
                    let prod = sg.multiply(&gen, el);
                    if prod.is_zero() {
                        continue;
                    }
                    prod
                }
            };
            front.push(s);
            if front.len() == g {
                let mut w: Vec<SymId> = front.clone();
                w.reverse();
                out.push(Word(w));
            } else {
                self.left_rec_elem(Some(next), front, g, out);
            }
            front.pop();
        }
    }

    fn left_rec_test(
        &self,
        front: &mut Vec<SymId>,
        anchor: &[SymId],
        g: usize,
        out: &mut Vec<Word>,
    ) {
        for &s in self.sorted_symbols() {
            front.push(s);
            let candidate: Vec<SymId> = front
                .iter()
                .rev()
                .copied()
                .chain(anchor.iter().copied())
                .collect();
            if self.admissible_syms(&candidate) {
                if front.len() == g {
                    out.push(Word(candidate[..g].to_vec()));
                } else {
                    self.left_rec_test(front, anchor, g, out);
                }
            }
            front.pop();
        }
    }

    fn require_anchor(&self, a: &Word) -> Result<(), LanguageError> {
        if a.is_empty() {
            return Err(LanguageError::EmptyWord);
        }
        if !self.admissible_syms(&a.0) {
            return Err(LanguageError::InadmissibleAnchor);
        }
        Ok(())
    }

    /// Words of length `k` admissible after `a`.
    pub fn follower_set(&self, a: &Word, k: usize) -> Result<HorizonSet, LanguageError> {
        self.require_anchor(a)?;
        if k == 0 {
            return Err(LanguageError::ZeroHorizon);
        }
        Ok(HorizonSet {
            horizon: k,
            members: self.collect_right(&a.0, k),
        })
    }

    /// Words of length `k` admissible before `a`.
    pub fn predecessor_set(&self, a: &Word, k: usize) -> Result<HorizonSet, LanguageError> {
        self.require_anchor(a)?;
        if k == 0 {
            return Err(LanguageError::ZeroHorizon);
        }
        Ok(HorizonSet {
            horizon: k,
            members: self.collect_left(&a.0, k),
        })
    }

    /// All pairs `(u, v)` of horizon `h` with `u . a . v` admissible.
    pub fn context_set(&self, a: &Word, h: usize) -> Result<ContextSet, LanguageError> {
        self.require_anchor(a)?;
        if h == 0 {
            return Err(LanguageError::ZeroHorizon);
        }
        let preds = self.collect_left(&a.0, h);
        let fols = self.collect_right(&a.0, h);
        let mut members = Vec::new();
        if self.steps().is_empty() {
            let sg = self.semigroup();
            let el_a = self.anchor_element(&a.0).expect("nonempty");
            let ua: Vec<Element> = preds
                .iter()
                .map(|u| {
                    let el_u = self.anchor_element(&u.0).expect("nonempty");
                    sg.multiply(&el_u, &el_a)
                })
                .collect();
            let vb: Vec<Element> = fols
                .iter()
                .map(|v| self.anchor_element(&v.0).expect("nonempty"))
                .collect();
            for (u, el_ua) in preds.iter().zip(&ua) {
                for (v, el_v) in fols.iter().zip(&vb) {
                    if !sg.multiply(el_ua, el_v).is_zero() {
                        members.push((u.clone(), v.clone()));
                    }
                }
            }
        } else {
            for u in &preds {
                for v in &fols {
                    let word: Vec<SymId> = u
                        .0
                        .iter()
                        .chain(a.0.iter())
                        .chain(v.0.iter())
                        .copied()
                        .collect();
                    if self.admissible_syms(&word) {
                        members.push((u.clone(), v.clone()));
                    }
                }
            }
        }
        Ok(ContextSet {
            horizon: h,
            members,
        })
    }

    /// Groups all admissible words of length `1..=max_len` by equality of
    /// their context sets at horizon `h`.
    pub fn context_classes(
        &self,
        max_len: usize,
        h: usize,
    ) -> Result<ContextClasses, LanguageError> {
        let words = self.enumerate_words_upto(max_len);
        let mut keys: Vec<(Vec<(Word, Word)>, Word)> = Vec::new();
        for w in words {
            let ctx = self.context_set(&w, h)?.members;
            keys.push((ctx, w));
        }
        let mut classes: Vec<Vec<Word>> = Vec::new();
        let mut index: std::collections::HashMap<Vec<(Word, Word)>, usize> =
            std::collections::HashMap::new();
        for (ctx, w) in keys {
            let next = classes.len();
            let at = *index.entry(ctx).or_insert(next);
            if at == classes.len() {
                classes.push(Vec::new());
            }
            classes[at].push(w);
        }
        Ok(ContextClasses {
            max_len,
            horizon: h,
            classes,
        })
    }

    /// Followers of length `k` compatible with every predecessor of length
    /// `g`.
    pub fn omega_plus_truncated(
        &self,
        a: &Word,
        k: usize,
        g: usize,
    ) -> Result<HorizonSet, LanguageError> {
        let fols = self.follower_set(a, k)?;
        let preds = self.collect_left(&a.0, g);
        let members = self.filter_against(a, &fols.members, &preds, true);
        Ok(HorizonSet {
            horizon: k,
            members,
        })
    }

    /// Predecessors of length `k` compatible with every follower of length
    /// `g`.
    pub fn omega_minus_truncated(
        &self,
        a: &Word,
        k: usize,
        g: usize,
    ) -> Result<HorizonSet, LanguageError> {
        let preds = self.predecessor_set(a, k)?;
        let fols = self.collect_right(&a.0, g);
        let members = self.filter_against(a, &preds.members, &fols, false);
        Ok(HorizonSet {
            horizon: k,
            members,
        })
    }

    /// Keeps candidates compatible with the whole opposite side.
    /// `candidates_right` says which side the candidates extend.
    fn filter_against(
        &self,
        a: &Word,
        candidates: &[Word],
        opposite: &[Word],
        candidates_right: bool,
    ) -> Vec<Word> {
        candidates
            .iter()
            .filter(|c| {
                opposite.iter().all(|o| {
                    let (u, v) = if candidates_right { (o, *c) } else { (*c, o) };
                    let word: Vec<SymId> = u
                        .0
                        .iter()
                        .chain(a.0.iter())
                        .chain(v.0.iter())
                        .copied()
                        .collect();
                    self.admissible_syms(&word)
                })
            })
            .cloned()
            .collect()
    }

    /// Default cap for the admissible-powers test.
    pub fn default_power_cap(word_len: usize) -> usize {
        2 * (word_len + 2)
    }

    /// Tests whether every power of `w` stays admissible. On a plain graph
    /// presentation this folds successive powers and watches the junction
    /// residue; once the walk growth repeats identically on two consecutive
    /// rounds the pattern continues forever. Expanded presentations are
    /// handled by a cyclic marker check followed by the test on the
    /// recovered core orbit.
    pub fn is_periodic_admissible(
        &self,
        w: &Word,
        cap: usize,
    ) -> Result<PeriodicAdmissibility, LanguageError> {
        if w.is_empty() {
            return Err(LanguageError::EmptyWord);
        }
        if !self.steps().is_empty() {
            return self.periodic_admissible_expanded(w, cap);
        }
        let sg = self.semigroup();
        let Some(e1) = self.anchor_element(&w.0) else {
            return Err(LanguageError::EmptyWord);
        };
        if e1.is_zero() {
            return Ok(PeriodicAdmissibility::No { zero_power: 1 });
        }
        let mut history: Vec<Element> = vec![e1.clone()];
        let mut cur = e1.clone();
        for n in 2..=cap {
            cur = sg.multiply(&cur, &e1);
            if cur.is_zero() {
                return Ok(PeriodicAdmissibility::No { zero_power: n });
            }
            history.push(cur.clone());
            if history.len() >= 3 {
                let a = &history[history.len() - 3];
                let b = &history[history.len() - 2];
                let c = &history[history.len() - 1];
                if growth_repeats(a, b, c) {
                    return Ok(PeriodicAdmissibility::Yes);
                }
            }
            if history.len() >= 2 && history[history.len() - 2] == cur {
                return Ok(PeriodicAdmissibility::Yes);
            }
        }
        Ok(PeriodicAdmissibility::Inconclusive { cap })
    }

    fn periodic_admissible_expanded(
        &self,
        w: &Word,
        cap: usize,
    ) -> Result<PeriodicAdmissibility, LanguageError> {
        if !self.admissible_syms(&w.0) {
            return Ok(PeriodicAdmissibility::No { zero_power: 1 });
        }
        // Cyclic marker placement, step by step. A violation shows up in the
        // square of the word at the wrap seam.
        let mut cur: Vec<SymId> = w.0.clone();
        for step in self.steps().iter().rev() {
            if cur.is_empty() {
                // A periodic point of nothing but dropped markers would need
                // adjacent markers somewhere; rejected above.
                return Ok(PeriodicAdmissibility::No { zero_power: 2 });
            }
            let n = cur.len();
            for i in 0..n {
                let next = cur[(i + 1) % n];
                let prev = cur[(i + n - 1) % n];
                if cur[i] == step.bullet && prev != step.sigma {
                    return Ok(PeriodicAdmissibility::No { zero_power: 2 });
                }
                if cur[i] == step.sigma && next != step.bullet {
                    return Ok(PeriodicAdmissibility::No { zero_power: 2 });
                }
            }
            cur.retain(|&s| s != step.bullet);
        }
        if cur.is_empty() {
            return Ok(PeriodicAdmissibility::No { zero_power: 2 });
        }
        // Core orbit over the plain graph.
        let base = self.base_presentation();
        base.is_periodic_admissible(&Word(cur), cap)
    }

    /// The same graph with no expansion steps.
    pub(crate) fn base_presentation(&self) -> ShiftPresentation {
        self.clone_base()
    }

    /// All periodic orbits of period up to `max_period`, deduplicated by
    /// rotation, least primitive representative.
    pub fn enumerate_periodic_orbits(&self, max_period: usize) -> OrbitEnumeration {
        let mut orbits = Vec::new();
        let mut inconclusive = Vec::new();
        for p in 1..=max_period {
            for w in self.enumerate_words(p) {
                if !w.is_primitive() {
                    continue;
                }
                if self.least_rotation(&w) != w {
                    continue;
                }
                match self
                    .is_periodic_admissible(&w, Self::default_power_cap(w.len()))
                    .expect("nonempty word")
                {
                    PeriodicAdmissibility::Yes => {
                        orbits.push(PeriodicOrbit::from_normalized(w));
                    }
                    PeriodicAdmissibility::Inconclusive { .. } => inconclusive.push(w),
                    PeriodicAdmissibility::No { .. } => {}
                }
            }
        }
        OrbitEnumeration {
            orbits,
            inconclusive,
        }
    }

    /// Finite-window necessary test for membership of the orbit in the
    /// block-window set with block length `n`: at every phase, the forward
    /// window of length `k` must be compatible with every length-`g`
    /// predecessor of the preceding `n`-block, and mirrored backwards.
    pub fn an_window_check(
        &self,
        orbit: &PeriodicOrbit,
        n: usize,
        k: usize,
        g: usize,
    ) -> Result<AnWindowReport, LanguageError> {
        if n == 0 || k == 0 || g == 0 {
            return Err(LanguageError::ZeroHorizon);
        }
        let w = orbit.word();
        let p = w.len() as i64;
        let mut failures = Vec::new();
        for phase in 0..p {
            let fwd_block = w.cyclic_window(phase - n as i64, n);
            let fwd_window = w.cyclic_window(phase, k);
            let omega = self.omega_plus_truncated(&fwd_block, k, g)?;
            if !omega.contains(&fwd_window) {
                failures.push(PhaseFailure {
                    phase: phase as usize,
                    side: WindowSide::Forward,
                });
            }
            let bwd_block = w.cyclic_window(phase + 1, n);
            let bwd_window = w.cyclic_window(phase + 1 - k as i64, k);
            let omega = self.omega_minus_truncated(&bwd_block, k, g)?;
            if !omega.contains(&bwd_window) {
                failures.push(PhaseFailure {
                    phase: phase as usize,
                    side: WindowSide::Backward,
                });
            }
        }
        Ok(AnWindowReport {
            pass: failures.is_empty(),
            failures,
        })
    }
}

/// Walk growth between consecutive powers `a = e^(n-2)`, `b = e^(n-1)`,
/// `c = e^n`: the plus walk must grow by the same suffix and the minus walk
/// by the same prefix, with a fixed mid.
fn growth_repeats(a: &Element, b: &Element, c: &Element) -> bool {
    let (Element::Reduced { plus: pa, mid: ma, minus: na },
         Element::Reduced { plus: pb, mid: mb, minus: nb },
         Element::Reduced { plus: pc, mid: mc, minus: nc }) = (a, b, c)
    else {
        return false;
    };
    if ma != mb || mb != mc {
        return false;
    }
    // plus grows at the back
    if pb.len() < pa.len() || pc.len() < pb.len() {
        return false;
    }
    if pb.len() - pa.len() != pc.len() - pb.len() {
        return false;
    }
    if pb[..pa.len()] != pa[..] || pc[..pb.len()] != pb[..] {
        return false;
    }
    if pb[pa.len()..] != pc[pb.len()..] {
        return false;
    }
    // minus grows at the front
    if nb.len() < na.len() || nc.len() < nb.len() {
        return false;
    }
    let d1 = nb.len() - na.len();
    let d2 = nc.len() - nb.len();
    if d1 != d2 {
        return false;
    }
    if nb[d1..] != na[..] || nc[d2..] != nb[..] {
        return false;
    }
    nb[..d1] == nc[..d2]
}
