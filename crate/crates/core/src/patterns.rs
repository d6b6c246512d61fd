//! Forbidden patterns, families of patterns, and their symmetry classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mapping::Sign;

/// A fully set word of length r+1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern(Vec<Sign>);

impl Pattern {
    pub fn new(signs: Vec<Sign>) -> Pattern {
        Pattern(signs)
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Pattern {
        Pattern(self.0.iter().rev().copied().collect())
    }

    pub fn negated(&self) -> Pattern {
        Pattern(self.0.iter().map(|s| s.negate()).collect())
    }

    /// Same encoding as [`crate::mapping::word_code`].
    pub fn code(&self) -> u32 {
        self.0
            .iter()
            .fold(0, |acc, s| (acc << 1) | u32::from(*s == Sign::Minus))
    }

    pub fn longest_run(&self, sign: Sign) -> usize {
        let mut best = 0;
        let mut cur = 0;
        for &s in &self.0 {
            if s == sign {
                cur += 1;
                best = best.max(cur);
            } else {
                cur = 0;
            }
        }
        best
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pattern> {
        let signs = s
            .trim()
            .chars()
            .map(|c| {
                Sign::from_char(c)
                    .ok_or_else(|| Error::InvalidWord(format!("pattern {s:?} may only contain '+' and '-'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if signs.is_empty() {
            return Err(Error::InvalidWord("empty pattern".into()));
        }
        Ok(Pattern(signs))
    }
}

pub fn reverse_pattern(p: &Pattern) -> Pattern {
    p.reversed()
}

pub fn negate_pattern(p: &Pattern) -> Pattern {
    p.negated()
}

/// A set of forbidden patterns, all of length `rank + 1`.
#[derive(Debug, Clone)]
pub struct Family {
    rank: usize,
    patterns: BTreeSet<Pattern>,
    forbidden: Vec<bool>,
}

impl PartialEq for Family {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.patterns == other.patterns
    }
}

impl Eq for Family {}

impl Hash for Family {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank.hash(state);
        self.patterns.hash(state);
    }
}

impl PartialOrd for Family {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Families compare as their sorted pattern lists.
impl Ord for Family {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank
            .cmp(&other.rank)
            .then_with(|| self.patterns.iter().cmp(other.patterns.iter()))
    }
}

impl Family {
    pub fn new(rank: usize, patterns: impl IntoIterator<Item = Pattern>) -> Result<Family> {
        let patterns: BTreeSet<Pattern> = patterns.into_iter().collect();
        for p in &patterns {
            if p.len() != rank + 1 {
                return Err(Error::PatternLength {
                    rank,
                    expected: rank + 1,
                    found: p.len(),
                });
            }
        }
        let mut forbidden = vec![false; 1 << (rank + 1)];
        for p in &patterns {
            forbidden[p.code() as usize] = true;
        }
        Ok(Family {
            rank,
            patterns,
            forbidden,
        })
    }

    pub fn empty(rank: usize) -> Family {
        Family::new(rank, []).expect("empty family is always valid")
    }

    /// The two alternating patterns of length r+1.
    pub fn alternating(rank: usize) -> Family {
        let a: Vec<Sign> = (0..=rank)
            .map(|i| if i % 2 == 0 { Sign::Plus } else { Sign::Minus })
            .collect();
        let a = Pattern(a);
        let b = a.negated();
        Family::new(rank, [a, b]).expect("alternating patterns have length r+1")
    }

    /// Parses comma-separated pattern words. `""`, `"{}"` and `"empty"`
    /// denote the empty family.
    pub fn parse(text: &str, rank: usize) -> Result<Family> {
        let t = text.trim().trim_start_matches('{').trim_end_matches('}').trim();
        if t.is_empty() || t == "empty" || t == "\u{2205}" {
            return Ok(Family::empty(rank));
        }
        let patterns = t.split(',').map(str::parse).collect::<Result<Vec<Pattern>>>()?;
        Family::new(rank, patterns)
    }

    /// Parses a non-empty family, inferring the rank from pattern length.
    pub fn parse_infer(text: &str) -> Result<Family> {
        let first = text
            .trim()
            .trim_start_matches('{')
            .split(',')
            .next()
            .map(str::trim)
            .unwrap_or("");
        let len = first.chars().filter(|c| Sign::from_char(*c).is_some()).count();
        if len < 3 {
            return Err(Error::InvalidWord(format!(
                "cannot infer rank from {text:?}; give a rank explicitly"
            )));
        }
        Family::parse(text, len - 1)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains(&self, p: &Pattern) -> bool {
        self.patterns.contains(p)
    }

    #[inline]
    pub fn contains_code(&self, code: u32) -> bool {
        self.forbidden[code as usize]
    }

    pub fn check_rank(&self, r: usize) -> Result<()> {
        if self.rank != r {
            return Err(Error::PatternLength {
                rank: r,
                expected: r + 1,
                found: self.rank + 1,
            });
        }
        Ok(())
    }

    pub fn map_patterns(&self, f: impl Fn(&Pattern) -> Pattern) -> Family {
        Family::new(self.rank, self.patterns.iter().map(f)).expect("length-preserving map")
    }

    pub fn reversed(&self) -> Family {
        self.map_patterns(Pattern::reversed)
    }

    pub fn negated(&self) -> Family {
        self.map_patterns(Pattern::negated)
    }

    /// Stable identifier, also used as a directory name.
    pub fn id(&self) -> String {
        if self.is_empty() {
            "empty".to_string()
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.patterns.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SymmetryGroup {
    #[default]
    Reversal,
    ReversalNegation,
}

impl FromStr for SymmetryGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reversal" => Ok(SymmetryGroup::Reversal),
            "reversal-negation" => Ok(SymmetryGroup::ReversalNegation),
            other => Err(Error::InvalidWord(format!("unknown symmetry group {other:?}"))),
        }
    }
}

impl SymmetryGroup {
    pub fn orbit(self, f: &Family) -> BTreeSet<Family> {
        let mut orbit = BTreeSet::new();
        orbit.insert(f.clone());
        orbit.insert(f.reversed());
        if self == SymmetryGroup::ReversalNegation {
            let n = f.negated();
            orbit.insert(n.reversed());
            orbit.insert(n);
        }
        orbit
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingClass {
    pub canonical: Family,
    pub orbit: BTreeSet<Family>,
}

pub fn canonicalize_family(f: &Family, group: SymmetryGroup) -> SettingClass {
    let orbit = group.orbit(f);
    let canonical = orbit.first().expect("orbit contains f").clone();
    SettingClass { canonical, orbit }
}

/// All words of length `len` whose longest run of `+` is at most `bound`,
/// in lexicographic order (`+` before `-`).
pub fn pattern_universe(len: usize, plus_run_bound: usize) -> Vec<Pattern> {
    (0u32..1 << len)
        .map(|code| {
            Pattern(
                (0..len)
                    .map(|i| {
                        if code >> (len - 1 - i) & 1 == 1 {
                            Sign::Minus
                        } else {
                            Sign::Plus
                        }
                    })
                    .collect(),
            )
        })
        .filter(|p| p.longest_run(Sign::Plus) <= plus_run_bound)
        .collect()
}

/// Every subset of the bounded-run universe, up to symmetry, sorted by
/// canonical family.
pub fn enumerate_settings(r: usize, plus_run_bound: usize, group: SymmetryGroup) -> Vec<SettingClass> {
    let universe = pattern_universe(r + 1, plus_run_bound);
    assert!(universe.len() < 32, "universe too large to enumerate subsets");
    let mut classes: BTreeMap<Family, BTreeSet<Family>> = BTreeMap::new();
    for mask in 0u32..(1 << universe.len()) {
        let fam = Family::new(
            r,
            universe
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.clone()),
        )
        .expect("universe patterns have length r+1");
        let class = canonicalize_family(&fam, group);
        classes.entry(class.canonical).or_insert(class.orbit);
    }
    classes
        .into_iter()
        .map(|(canonical, orbit)| SettingClass { canonical, orbit })
        .collect()
}

/// Which sign the combination lemma fills with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LemmaVariant {
    Plus,
    Minus,
}

impl LemmaVariant {
    pub fn fill_sign(self) -> Sign {
        match self {
            LemmaVariant::Plus => Sign::Plus,
            LemmaVariant::Minus => Sign::Minus,
        }
    }
}

/// No pattern contains `r - 1` consecutive copies of the variant's sign.
pub fn combination_lemma_applies(f: &Family, variant: LemmaVariant) -> bool {
    let run = f.rank().saturating_sub(1);
    f.patterns().all(|p| p.longest_run(variant.fill_sign()) < run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    #[test]
    fn reverse_and_negate() {
        assert_eq!(reverse_pattern(&p("+-+-")), p("-+-+"));
        assert_eq!(reverse_pattern(&p("+--+")), p("+--+"));
        assert_eq!(reverse_pattern(&p("+---")), p("---+"));
        assert_eq!(negate_pattern(&p("+-+-")), p("-+-+"));
        assert_eq!(negate_pattern(&p("----")), p("++++"));
        assert_eq!(negate_pattern(&negate_pattern(&p("+--+"))), p("+--+"));
    }

    #[test]
    fn canonical_examples() {
        let c = canonicalize_family(&Family::parse("-+-+", 3).unwrap(), SymmetryGroup::Reversal);
        assert_eq!(c.canonical.to_string(), "+-+-");
        let gs = Family::parse("+-+-,-+-+", 3).unwrap();
        let c = canonicalize_family(&gs, SymmetryGroup::Reversal);
        assert_eq!(c.canonical, gs);
        assert_eq!(c.orbit.len(), 1);
        let a = canonicalize_family(&Family::parse("+---", 3).unwrap(), SymmetryGroup::Reversal);
        let b = canonicalize_family(&Family::parse("---+", 3).unwrap(), SymmetryGroup::Reversal);
        assert_eq!(a.canonical, b.canonical);
    }

    #[test]
    fn family_parse_and_errors() {
        assert!(Family::parse("+-+-,+-+", 3).is_err());
        assert!(Family::parse("+-x-", 3).is_err());
        assert!(Family::parse("{}", 3).unwrap().is_empty());
        assert_eq!(Family::parse("-+-+, +-+-", 3).unwrap().to_string(), "+-+-,-+-+");
        assert_eq!(Family::parse_infer("+-+-+").unwrap().rank(), 4);
        assert_eq!(Family::alternating(4).to_string(), "+-+-+,-+-+-");
    }

    #[test]
    fn universes() {
        let u = pattern_universe(4, 1);
        let words: Vec<String> = u.iter().map(|p| p.to_string()).collect();
        assert_eq!(words, ["+-+-", "+--+", "+---", "-+-+", "-+--", "--+-", "---+", "----"]);
        assert_eq!(pattern_universe(5, 1).len(), 13);
        assert_eq!(pattern_universe(4, 0).len(), 1);
    }

    #[test]
    fn rank3_settings() {
        let classes = enumerate_settings(3, 1, SymmetryGroup::Reversal);
        assert_eq!(classes.len(), 144);
        let total: usize = classes.iter().map(|c| c.orbit.len()).sum();
        assert_eq!(total, 256);
        // reversal-fixed subsets: 3 swapped pairs, 2 palindromes
        assert_eq!((256 + 32) / 2, 144);
    }

    #[test]
    fn lemma_applicability() {
        let gs = Family::parse("+-+-,-+-+", 3).unwrap();
        assert!(combination_lemma_applies(&gs, LemmaVariant::Plus));
        assert!(!combination_lemma_applies(
            &Family::parse("++-+", 3).unwrap(),
            LemmaVariant::Plus
        ));
        assert!(combination_lemma_applies(
            &Family::parse("----", 3).unwrap(),
            LemmaVariant::Plus
        ));
        assert!(!combination_lemma_applies(
            &Family::parse("----", 3).unwrap(),
            LemmaVariant::Minus
        ));
    }
}
