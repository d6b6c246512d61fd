//! Partial sign mappings on the r-subsets of `[n]`.
//!
//! Elements are labelled `1..=n`. The r-subsets are indexed by their 0-based
//! rank in lexicographic order, so a mapping is a flat array of
//! [`SignState`]s and renders as a word over `{+, -, ?}`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::Family;

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        0
    } else {
        num_integer::binomial(n as u128, k as u128) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn negate(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn from_char(c: char) -> Option<Sign> {
        match c {
            '+' => Some(Sign::Plus),
            '-' | '\u{2212}' => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn is_plus(self) -> bool {
        self == Sign::Plus
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum SignState {
    Plus,
    Minus,
    #[default]
    Unset,
}

impl SignState {
    pub fn sign(self) -> Option<Sign> {
        match self {
            SignState::Plus => Some(Sign::Plus),
            SignState::Minus => Some(Sign::Minus),
            SignState::Unset => None,
        }
    }

    pub fn is_set(self) -> bool {
        self != SignState::Unset
    }

    pub fn as_char(self) -> char {
        match self {
            SignState::Plus => '+',
            SignState::Minus => '-',
            SignState::Unset => '?',
        }
    }

    pub fn from_char(c: char) -> Option<SignState> {
        match c {
            '?' => Some(SignState::Unset),
            c => Sign::from_char(c).map(SignState::from),
        }
    }
}

impl From<Sign> for SignState {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Plus => SignState::Plus,
            Sign::Minus => SignState::Minus,
        }
    }
}

impl From<Option<Sign>> for SignState {
    fn from(s: Option<Sign>) -> Self {
        s.map_or(SignState::Unset, SignState::from)
    }
}

/// A strictly increasing r-tuple of element labels in `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RSubset(Vec<usize>);

impl RSubset {
    pub fn new(elements: Vec<usize>, n: usize, r: usize) -> Result<RSubset> {
        validate_subset(&elements, n, r)?;
        Ok(RSubset(elements))
    }

    /// Builds a subset without range checks against a particular `n`.
    pub fn from_sorted(elements: Vec<usize>) -> Result<RSubset> {
        let max = elements.last().copied().unwrap_or(0);
        validate_subset(&elements, max, elements.len())?;
        Ok(RSubset(elements))
    }

    /// Window of `r` consecutive elements starting at `first`.
    pub fn window(first: usize, r: usize) -> RSubset {
        RSubset((first..first + r).collect())
    }

    pub fn elements(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self, n: usize) -> Result<usize> {
        lex_rank(&self.0, n, self.0.len())
    }

    /// Relabels every element through `map` (1-based positions to labels).
    pub fn embed(&self, map: &[usize]) -> RSubset {
        RSubset(self.0.iter().map(|&e| map[e - 1]).collect())
    }
}

impl fmt::Display for RSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn validate_subset(elements: &[usize], n: usize, r: usize) -> Result<()> {
    let err = |reason| Error::InvalidSubset {
        subset: elements.to_vec(),
        n,
        r,
        reason,
    };
    if elements.len() != r {
        return Err(err("wrong length"));
    }
    if elements.iter().any(|&e| e == 0 || e > n) {
        return Err(err("element out of range"));
    }
    if elements.windows(2).any(|w| w[0] >= w[1]) {
        return Err(err("not strictly increasing"));
    }
    Ok(())
}

/// 0-based lexicographic rank of an r-subset of `[n]`.
pub fn lex_rank(subset: &[usize], n: usize, r: usize) -> Result<usize> {
    validate_subset(subset, n, r)?;
    let mut rank = 0;
    let mut prev = 0;
    for (i, &x) in subset.iter().enumerate() {
        for v in prev + 1..x {
            rank += binomial(n - v, r - i - 1);
        }
        prev = x;
    }
    Ok(rank)
}

/// Inverse of [`lex_rank`].
pub fn lex_unrank(index: usize, n: usize, r: usize) -> Result<RSubset> {
    let count = binomial(n, r);
    if index >= count {
        return Err(Error::IndexOutOfRange { index, count });
    }
    let mut rest = index;
    let mut out = Vec::with_capacity(r);
    let mut v = 1;
    for i in 0..r {
        loop {
            let block = binomial(n - v, r - i - 1);
            if rest < block {
                break;
            }
            rest -= block;
            v += 1;
        }
        out.push(v);
        v += 1;
    }
    Ok(RSubset(out))
}

/// Successor of `combo` (0-based, strictly increasing, values `< n`) in
/// lexicographic order; false when `combo` was the last one.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

const WINDOW_TABLE_LIMIT: usize = 1 << 22;

/// Precomputed indexing for the r-subsets of `[n]`.
///
/// A "window" is an (r+1)-subset; its r-subsets in lexicographic order are
/// obtained by dropping the last element first, then the second to last, and
/// so on.
#[derive(Debug)]
pub struct Domain {
    n: usize,
    r: usize,
    tuple_count: usize,
    window_count: usize,
    // suffix[i][v] = sum_{u = v+1}^{n} C(n - u, r - i - 1)
    suffix: Vec<Vec<usize>>,
    windows: OnceLock<Option<Vec<u32>>>,
    incidence: OnceLock<Vec<Vec<(u32, u8)>>>,
}

fn domain_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<Domain>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Domain>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl Domain {
    pub fn get(n: usize, r: usize) -> Result<Arc<Domain>> {
        check_dimensions(n, r)?;
        let mut cache = domain_cache().lock().unwrap_or_else(|e| e.into_inner());
        Ok(cache
            .entry((n, r))
            .or_insert_with(|| Arc::new(Domain::build(n, r)))
            .clone())
    }

    fn build(n: usize, r: usize) -> Domain {
        let suffix = (0..r)
            .map(|i| {
                let mut row = vec![0usize; n + 1];
                for v in (0..n).rev() {
                    row[v] = row[v + 1] + binomial(n - (v + 1), r - i - 1);
                }
                row
            })
            .collect();
        Domain {
            n,
            r,
            tuple_count: binomial(n, r),
            window_count: binomial(n, r + 1),
            suffix,
            windows: OnceLock::new(),
            incidence: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn tuple_count(&self) -> usize {
        self.tuple_count
    }

    pub fn window_count(&self) -> usize {
        self.window_count
    }

    /// Rank of a validated, 1-based, strictly increasing r-subset.
    #[inline]
    pub fn rank_unchecked(&self, subset: &[usize]) -> usize {
        let mut rank = 0;
        let mut prev = 0;
        for (i, &x) in subset.iter().enumerate() {
            rank += self.suffix[i][prev] - self.suffix[i][x - 1];
            prev = x;
        }
        rank
    }

    pub fn rank(&self, subset: &[usize]) -> Result<usize> {
        validate_subset(subset, self.n, self.r)?;
        Ok(self.rank_unchecked(subset))
    }

    pub fn unrank(&self, index: usize) -> Result<RSubset> {
        lex_unrank(index, self.n, self.r)
    }

    /// Tuple indices of the window with 1-based elements `window`, in
    /// lexicographic order of its r-subsets.
    pub fn window_tuples(&self, window: &[usize], out: &mut Vec<usize>) {
        out.clear();
        let mut scratch = Vec::with_capacity(self.r);
        for skip in (0..=self.r).rev() {
            scratch.clear();
            scratch.extend(window.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &e)| e));
            out.push(self.rank_unchecked(&scratch));
        }
    }

    fn window_table(&self) -> Option<&[u32]> {
        self.windows
            .get_or_init(|| {
                if self.window_count * (self.r + 1) > WINDOW_TABLE_LIMIT {
                    return None;
                }
                let mut table = Vec::with_capacity(self.window_count * (self.r + 1));
                self.generate_windows(|_, tuples| {
                    table.extend(tuples.iter().map(|&t| t as u32));
                });
                Some(table)
            })
            .as_deref()
    }

    fn generate_windows(&self, mut visit: impl FnMut(&[usize], &[usize])) {
        let k = self.r + 1;
        if k > self.n {
            return;
        }
        let mut combo: Vec<usize> = (0..k).collect();
        let mut labels = vec![0usize; k];
        let mut tuples = Vec::with_capacity(k);
        loop {
            for (l, c) in labels.iter_mut().zip(&combo) {
                *l = c + 1;
            }
            self.window_tuples(&labels, &mut tuples);
            visit(&labels, &tuples);
            if !next_combination(&mut combo, self.n) {
                break;
            }
        }
    }

    /// Calls `visit` with the tuple indices of every window, in lexicographic
    /// order of windows.
    pub fn for_each_window(&self, mut visit: impl FnMut(&[usize])) {
        if let Some(table) = self.window_table() {
            let k = self.r + 1;
            let mut buf = vec![0usize; k];
            for chunk in table.chunks_exact(k) {
                for (b, &t) in buf.iter_mut().zip(chunk) {
                    *b = t as usize;
                }
                visit(&buf);
            }
        } else {
            self.generate_windows(|_, tuples| visit(tuples));
        }
    }

    /// Like [`Domain::for_each_window`] but also passes the window elements.
    pub fn for_each_window_with_elements(&self, visit: impl FnMut(&[usize], &[usize])) {
        self.generate_windows(visit);
    }

    /// For each tuple, the windows containing it together with the tuple's
    /// position inside the window word.
    pub fn incidence(&self) -> &[Vec<(u32, u8)>] {
        self.incidence.get_or_init(|| {
            let mut inc = vec![Vec::new(); self.tuple_count];
            let mut w = 0u32;
            self.for_each_window(|tuples| {
                for (pos, &t) in tuples.iter().enumerate() {
                    inc[t].push((w, pos as u8));
                }
                w += 1;
            });
            inc
        })
    }

    /// Window tuple indices by window number (requires the cached table).
    pub fn window(&self, index: usize) -> Option<&[u32]> {
        if index >= self.window_count {
            return None;
        }
        let k = self.r + 1;
        self.window_table().map(|t| &t[index * k..(index + 1) * k])
    }
}

fn check_dimensions(n: usize, r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::InvalidDimensions {
            n,
            r,
            reason: "rank must be at least 2",
        });
    }
    if n < r {
        return Err(Error::InvalidDimensions {
            n,
            r,
            reason: "need n >= r",
        });
    }
    Ok(())
}

/// A word over `{+, -, ?}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<SignState>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|s| s.is_set())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        s.chars()
            .map(|c| {
                SignState::from_char(c)
                    .ok_or_else(|| Error::InvalidWord(format!("unexpected character {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// A partial map from the r-subsets of `[n]` to `{+, -}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialSignMapping {
    n: usize,
    r: usize,
    states: Vec<SignState>,
}

impl PartialSignMapping {
    pub fn empty(n: usize, r: usize) -> Result<Self> {
        check_dimensions(n, r)?;
        Ok(PartialSignMapping {
            n,
            r,
            states: vec![SignState::Unset; binomial(n, r)],
        })
    }

    pub fn filled(n: usize, r: usize, sign: Sign) -> Result<Self> {
        let mut m = Self::empty(n, r)?;
        m.states.fill(sign.into());
        Ok(m)
    }

    pub fn from_states(n: usize, r: usize, states: Vec<SignState>) -> Result<Self> {
        check_dimensions(n, r)?;
        let expected = binomial(n, r);
        if states.len() != expected {
            return Err(Error::InvalidWord(format!(
                "length {} but C({n},{r}) = {expected}",
                states.len()
            )));
        }
        Ok(PartialSignMapping { n, r, states })
    }

    /// Parses a word of length `C(n, r)` over `{+, -, ?}`.
    pub fn parse(text: &str, n: usize, r: usize) -> Result<Self> {
        let word: Word = text.trim().parse()?;
        Self::from_states(n, r, word.0)
    }

    pub fn render(&self) -> String {
        self.states.iter().map(|s| s.as_char()).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn domain(&self) -> Arc<Domain> {
        Domain::get(self.n, self.r).expect("dimensions validated at construction")
    }

    pub fn states(&self) -> &[SignState] {
        &self.states
    }

    #[inline]
    pub fn get(&self, index: usize) -> SignState {
        self.states[index]
    }

    #[inline]
    pub fn set(&mut self, index: usize, state: SignState) {
        self.states[index] = state;
    }

    pub fn get_subset(&self, subset: &[usize]) -> Result<SignState> {
        Ok(self.states[lex_rank(subset, self.n, self.r)?])
    }

    pub fn set_subset(&mut self, subset: &[usize], state: SignState) -> Result<()> {
        let idx = lex_rank(subset, self.n, self.r)?;
        self.states[idx] = state;
        Ok(())
    }

    pub fn set_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_set()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.states.iter().all(|s| s.is_set())
    }

    /// `(index, sign)` for every set entry, in rank order.
    pub fn set_entries(&self) -> impl Iterator<Item = (usize, Sign)> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.sign().map(|s| (i, s)))
    }

    /// The word induced on the element set `subset` (any order, no repeats).
    pub fn induced_word(&self, subset: &[usize]) -> Result<Word> {
        let mut elems = subset.to_vec();
        elems.sort_unstable();
        if elems.windows(2).any(|w| w[0] == w[1]) || elems.iter().any(|&e| e == 0 || e > self.n) {
            return Err(Error::InvalidSubset {
                subset: subset.to_vec(),
                n: self.n,
                r: self.r,
                reason: "induced set must consist of distinct elements of [n]",
            });
        }
        if elems.len() < self.r {
            return Err(Error::InvalidSubset {
                subset: subset.to_vec(),
                n: self.n,
                r: self.r,
                reason: "induced set smaller than the rank",
            });
        }
        let dom = self.domain();
        let mut combo: Vec<usize> = (0..self.r).collect();
        let mut labels = vec![0; self.r];
        let mut word = Vec::with_capacity(binomial(elems.len(), self.r));
        loop {
            for (l, &c) in labels.iter_mut().zip(&combo) {
                *l = elems[c];
            }
            word.push(self.states[dom.rank_unchecked(&labels)]);
            if !next_combination(&mut combo, elems.len()) {
                break;
            }
        }
        Ok(Word(word))
    }

    /// True iff no (r+1)-subset carries a fully set word from `family`.
    pub fn is_avoiding(&self, family: &Family) -> Result<bool> {
        Ok(self.first_violation(family)?.is_none())
    }

    /// Tuple indices of the first window realizing a forbidden pattern.
    pub fn first_violation(&self, family: &Family) -> Result<Option<Vec<usize>>> {
        family.check_rank(self.r)?;
        if family.is_empty() {
            return Ok(None);
        }
        let dom = self.domain();
        let mut found = None;
        let mut done = false;
        dom.for_each_window(|tuples| {
            if done {
                return;
            }
            if let Some(code) = word_code(&self.states, tuples) {
                if family.contains_code(code) {
                    found = Some(tuples.to_vec());
                    done = true;
                }
            }
        });
        Ok(found)
    }

    /// Entry-wise extension order: every set entry of `self` is set
    /// identically in `other`.
    pub fn is_leq(&self, other: &PartialSignMapping) -> Result<bool> {
        self.check_same_shape(other)?;
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .all(|(a, b)| !a.is_set() || a == b))
    }

    pub fn check_same_shape(&self, other: &PartialSignMapping) -> Result<()> {
        if self.n != other.n || self.r != other.r {
            return Err(Error::DimensionMismatch(self.n, self.r, other.n, other.r));
        }
        Ok(())
    }
}

impl fmt::Display for PartialSignMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Encodes a fully set window word as an integer (bit i set = position i is
/// `-`, position 0 most significant). `None` if any position is unset.
#[inline]
pub fn word_code(states: &[SignState], tuples: &[usize]) -> Option<u32> {
    let mut code = 0u32;
    for &t in tuples {
        code <<= 1;
        match states[t] {
            SignState::Plus => {}
            SignState::Minus => code |= 1,
            SignState::Unset => return None,
        }
    }
    Some(code)
}
