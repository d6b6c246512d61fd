//! The two CNF layers of the gadget search: candidate enumeration over
//! `{+, -, ?}` indicators and completability over one sign variable per tuple.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{binomial, Domain, PartialSignMapping, RSubset, Sign, SignState};
use crate::patterns::Family;
use crate::sat::{Lit, Model, SessionConfig, SolveResult, SolverSession};

/// The Boolean behaviour a gadget must realise.
///
/// Propagators are stored in clause form `[X1 = x1] or [X2 = x2]`. By
/// default `X1` is the window on the first r elements and `X2` the window on
/// the last r; see [`WindowMode`] for the other placements.
/// `PG(X2 a -> X1 b)` is the clause form `x1 = b, x2 = -a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GadgetSpec {
    Propagator {
        x1: Sign,
        x2: Sign,
    },
    /// `[X1 = s1] or [X2 = s2] or [X3 = s3]` on the sliding windows starting
    /// at elements 1, 2 and 3.
    Clause([Sign; 3]),
}

impl GadgetSpec {
    /// `PG(X2 from -> X1 to)`.
    pub fn right_to_left(from: Sign, to: Sign) -> GadgetSpec {
        GadgetSpec::Propagator {
            x1: to,
            x2: from.negate(),
        }
    }

    /// `PG(X1 from -> X2 to)`.
    pub fn left_to_right(from: Sign, to: Sign) -> GadgetSpec {
        GadgetSpec::Propagator {
            x1: from.negate(),
            x2: to,
        }
    }

    pub fn all_propagators() -> Vec<GadgetSpec> {
        let mut out = Vec::new();
        for x1 in Sign::BOTH {
            for x2 in Sign::BOTH {
                out.push(GadgetSpec::Propagator { x1, x2 });
            }
        }
        out
    }

    pub fn all_clauses() -> Vec<GadgetSpec> {
        let mut out = Vec::new();
        for a in Sign::BOTH {
            for b in Sign::BOTH {
                for c in Sign::BOTH {
                    out.push(GadgetSpec::Clause([a, b, c]));
                }
            }
        }
        out
    }

    pub fn is_clause(&self) -> bool {
        matches!(self, GadgetSpec::Clause(_))
    }

    pub fn variable_count(&self) -> usize {
        match self {
            GadgetSpec::Propagator { .. } => 2,
            GadgetSpec::Clause(_) => 3,
        }
    }

    /// The disjunct signs, one per variable.
    pub fn signs(&self) -> Vec<Sign> {
        match *self {
            GadgetSpec::Propagator { x1, x2 } => vec![x1, x2],
            GadgetSpec::Clause(s) => s.to_vec(),
        }
    }

    /// Smallest element count on which the spec makes sense.
    pub fn min_n(&self, r: usize) -> usize {
        match self {
            GadgetSpec::Propagator { .. } => r + 1,
            GadgetSpec::Clause(_) => r + 2,
        }
    }

    /// Default variable windows for a gadget on `n` elements.
    pub fn variables(&self, n: usize, r: usize) -> Result<Vec<RSubset>> {
        self.variables_at(n, r, &self.default_starts(n, r)?)
    }

    /// First elements of the default windows.
    pub fn default_starts(&self, n: usize, r: usize) -> Result<Vec<usize>> {
        if n < self.min_n(r) {
            return Err(Error::InvalidProblem(format!(
                "{self} needs at least {} elements at rank {r}, got {n}",
                self.min_n(r)
            )));
        }
        Ok(match self {
            GadgetSpec::Propagator { .. } => vec![1, n - r + 1],
            GadgetSpec::Clause(_) => vec![1, 2, 3],
        })
    }

    /// Windows starting at `starts`, one per variable, in role order.
    pub fn variables_at(&self, n: usize, r: usize, starts: &[usize]) -> Result<Vec<RSubset>> {
        let ok = starts.len() == self.variable_count()
            && starts.windows(2).all(|w| w[0] < w[1])
            && starts.first().is_some_and(|&a| a >= 1)
            && starts.last().is_some_and(|&b| b + r - 1 <= n);
        if !ok {
            return Err(Error::InvalidProblem(format!(
                "window starts {starts:?} do not fit {self} on {n} elements at rank {r}"
            )));
        }
        Ok(starts.iter().map(|&s| RSubset::window(s, r)).collect())
    }

    /// Window placements to try at one size, default first.
    pub fn placements(&self, n: usize, r: usize, mode: WindowMode) -> Result<Vec<Vec<usize>>> {
        let default = self.default_starts(n, r)?;
        let mut out = vec![default.clone()];
        if mode == WindowMode::Any && !self.is_clause() {
            for a in 1..=n - r + 1 {
                for b in a + 1..=n - r + 1 {
                    if vec![a, b] != default {
                        out.push(vec![a, b]);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn role_names(&self) -> &'static [&'static str] {
        match self {
            GadgetSpec::Propagator { .. } => &["X1", "X2"],
            GadgetSpec::Clause(_) => &["X1", "X2", "X3"],
        }
    }

    /// Truth table indexed by assignment number (see [`assignment`]).
    pub fn psi(&self) -> Vec<bool> {
        let signs = self.signs();
        (0..1usize << signs.len())
            .map(|k| assignment(k, signs.len()).iter().zip(&signs).any(|(a, s)| a == s))
            .collect()
    }

    /// Human-readable implication form, e.g. `PG(X2- -> X1+)`.
    pub fn describe(&self) -> String {
        match *self {
            GadgetSpec::Propagator { x1, x2 } => format!("PG(X2{} -> X1{})", x2.negate(), x1),
            GadgetSpec::Clause([a, b, c]) => format!("CG(X1{a} v X2{b} v X3{c})"),
        }
    }
}

impl fmt::Display for GadgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GadgetSpec::Propagator { x1, x2 } => write!(f, "prop:{x1}{x2}"),
            GadgetSpec::Clause([a, b, c]) => write!(f, "clause:{a}{b}{c}"),
        }
    }
}

impl FromStr for GadgetSpec {
    type Err = Error;

    /// Accepts `prop:<x1><x2>` (clause form), `clause:<s1><s2><s3>`, and the
    /// implication forms `PG(X2a->X1b)` / `PG(X1a->X2b)`.
    fn from_str(s: &str) -> Result<GadgetSpec> {
        let bad = || Error::InvalidProblem(format!("unrecognised gadget spec '{s}'"));
        let signs = |t: &str| -> Result<Vec<Sign>> { t.chars().map(|c| Sign::from_char(c).ok_or_else(bad)).collect() };
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(rest) = t.strip_prefix("prop:") {
            let v = signs(rest)?;
            return match v[..] {
                [x1, x2] => Ok(GadgetSpec::Propagator { x1, x2 }),
                _ => Err(bad()),
            };
        }
        if let Some(rest) = t.strip_prefix("clause:") {
            let v = signs(rest)?;
            return match v[..] {
                [a, b, c] => Ok(GadgetSpec::Clause([a, b, c])),
                _ => Err(bad()),
            };
        }
        let inner = t
            .strip_prefix("PG(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let inner = inner.replace('\u{2192}', "->");
        let (lhs, rhs) = inner.split_once("->").ok_or_else(bad)?;
        let parse_side = |side: &str| -> Result<(char, Sign)> {
            let mut cs = side.chars();
            if cs.next() != Some('X') {
                return Err(bad());
            }
            let idx = cs.next().ok_or_else(bad)?;
            let sign = Sign::from_char(cs.next().ok_or_else(bad)?).ok_or_else(bad)?;
            if cs.next().is_some() {
                return Err(bad());
            }
            Ok((idx, sign))
        };
        match (parse_side(lhs)?, parse_side(rhs)?) {
            (('2', a), ('1', b)) => Ok(GadgetSpec::right_to_left(a, b)),
            (('1', a), ('2', b)) => Ok(GadgetSpec::left_to_right(a, b)),
            _ => Err(bad()),
        }
    }
}

/// Assignment number `k` over `m` variables: variable 0 is the most
/// significant bit and a set bit means `-`, so `k = 0` is all `+` and the
/// numbering is lexicographic with `+` first.
pub fn assignment(k: usize, m: usize) -> Vec<Sign> {
    (0..m)
        .map(|i| {
            if (k >> (m - 1 - i)) & 1 == 1 {
                Sign::Minus
            } else {
                Sign::Plus
            }
        })
        .collect()
}

/// Where propagator windows may sit. `Flush` keeps `X1` on the first r
/// elements and `X2` on the last r. `Any` also allows `X1` and `X2` to start
/// at any `a < b`, leaving the elements outside `X1..X2` private to the
/// gadget. Clause windows always start at 1, 2 and 3.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    Flush,
    #[default]
    Any,
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowMode::Flush => "flush",
            WindowMode::Any => "any",
        })
    }
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<WindowMode> {
        match s {
            "flush" => Ok(WindowMode::Flush),
            "any" => Ok(WindowMode::Any),
            other => Err(Error::InvalidProblem(format!("unknown window mode {other:?}"))),
        }
    }
}

/// A gadget search specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetProblem {
    pub n: usize,
    pub r: usize,
    pub family: Family,
    pub variables: Vec<RSubset>,
    /// Indexed by assignment number.
    pub psi: Vec<bool>,
    variable_index: Vec<usize>,
}

impl GadgetProblem {
    pub fn new(n: usize, r: usize, family: Family, variables: Vec<RSubset>, psi: Vec<bool>) -> Result<Self> {
        let dom = Domain::get(n, r)?;
        family.check_rank(r)?;
        if psi.len() != 1 << variables.len() {
            return Err(Error::InvalidProblem(format!(
                "truth table has {} rows, expected {}",
                psi.len(),
                1usize << variables.len()
            )));
        }
        let mut variable_index = Vec::with_capacity(variables.len());
        for v in &variables {
            if v.len() != r {
                return Err(Error::InvalidProblem(format!(
                    "variable tuple {v} is not an {r}-subset"
                )));
            }
            let idx = dom.rank(v.elements())?;
            if variable_index.contains(&idx) {
                return Err(Error::InvalidProblem(format!("variable tuple {v} repeated")));
            }
            variable_index.push(idx);
        }
        Ok(GadgetProblem {
            n,
            r,
            family,
            variables,
            psi,
            variable_index,
        })
    }

    pub fn from_spec(spec: GadgetSpec, n: usize, family: Family) -> Result<Self> {
        let r = family.rank();
        GadgetProblem::new(n, r, family, spec.variables(n, r)?, spec.psi())
    }

    pub fn from_spec_at(spec: GadgetSpec, n: usize, family: Family, starts: &[usize]) -> Result<Self> {
        let r = family.rank();
        GadgetProblem::new(n, r, family, spec.variables_at(n, r, starts)?, spec.psi())
    }

    pub fn tuple_count(&self) -> usize {
        binomial(self.n, self.r)
    }

    pub fn assignment_count(&self) -> usize {
        self.psi.len()
    }

    /// Tuple indices of the variables, in role order.
    pub fn variable_indices(&self) -> &[usize] {
        &self.variable_index
    }

    pub fn is_variable(&self, index: usize) -> bool {
        self.variable_index.contains(&index)
    }

    /// `sigma_f`: `sigma` with the variable tuples set according to
    /// assignment number `k`.
    pub fn apply(&self, sigma: &PartialSignMapping, k: usize) -> PartialSignMapping {
        let mut out = sigma.clone();
        for (&idx, s) in self.variable_index.iter().zip(assignment(k, self.variables.len())) {
            out.set(idx, s.into());
        }
        out
    }

    pub fn check_candidate(&self, sigma: &PartialSignMapping) -> Result<()> {
        if sigma.n() != self.n || sigma.r() != self.r {
            return Err(Error::DimensionMismatch(sigma.n(), sigma.r(), self.n, self.r));
        }
        for (v, &idx) in self.variables.iter().zip(&self.variable_index) {
            if sigma.get(idx).is_set() {
                return Err(Error::InvalidProblem(format!("variable tuple {v} is set")));
            }
        }
        Ok(())
    }
}

/// Indicator layout of the candidate layer: tuple `d` owns variables
/// `3d + 1` (`+`), `3d + 2` (`-`) and `3d + 3` (`?`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateEncoding {
    pub tuple_count: usize,
}

impl CandidateEncoding {
    pub fn indicator(&self, tuple: usize, state: SignState) -> Lit {
        let offset = match state {
            SignState::Plus => 1,
            SignState::Minus => 2,
            SignState::Unset => 3,
        };
        Lit::pos((3 * tuple + offset) as u32)
    }

    pub fn variable_count(&self) -> usize {
        3 * self.tuple_count
    }

    /// Projection variables (all indicators) for model enumeration.
    pub fn projection(&self) -> Vec<u32> {
        (1..=self.variable_count() as u32).collect()
    }
}

/// Candidate layer: exactly one indicator per tuple, variable tuples forced
/// to `?`, and the candidate itself family-avoiding.
pub fn build_candidate_cnf(
    problem: &GadgetProblem,
    config: SessionConfig,
) -> Result<(SolverSession, CandidateEncoding)> {
    let dom = Domain::get(problem.n, problem.r)?;
    let enc = CandidateEncoding {
        tuple_count: dom.tuple_count(),
    };
    let mut s = SolverSession::new(config);
    s.new_vars(enc.variable_count() as u32);
    let states = [SignState::Plus, SignState::Minus, SignState::Unset];
    for d in 0..enc.tuple_count {
        let lits: Vec<Lit> = states.iter().map(|&st| enc.indicator(d, st)).collect();
        s.add_clause(&lits);
        for i in 0..3 {
            for j in i + 1..3 {
                s.add_clause(&[!lits[i], !lits[j]]);
            }
        }
        // Sparse candidates first.
        s.prefer(enc.indicator(d, SignState::Unset));
    }
    for &v in problem.variable_indices() {
        s.add_clause(&[enc.indicator(v, SignState::Unset)]);
    }
    let patterns: Vec<Vec<Sign>> = problem.family.patterns().map(|p| p.signs().to_vec()).collect();
    dom.for_each_window(|tuples| {
        for p in &patterns {
            let clause: Vec<Lit> = tuples
                .iter()
                .zip(p)
                .map(|(&t, &sign)| !enc.indicator(t, sign.into()))
                .collect();
            s.add_clause(&clause);
        }
    });
    Ok((s, enc))
}

/// Reads a candidate from a model of the candidate layer. A model without
/// exactly one true indicator per tuple means the backend is broken.
pub fn decode_candidate(model: &Model, enc: &CandidateEncoding, n: usize, r: usize) -> Result<PartialSignMapping> {
    let mut states = Vec::with_capacity(enc.tuple_count);
    for d in 0..enc.tuple_count {
        let set: Vec<SignState> = [SignState::Plus, SignState::Minus, SignState::Unset]
            .into_iter()
            .filter(|&st| model.lit(enc.indicator(d, st)))
            .collect();
        match set[..] {
            [st] => states.push(st),
            _ => {
                return Err(Error::MalformedModel(format!(
                    "tuple {d} has {} true indicators",
                    set.len()
                )))
            }
        }
    }
    PartialSignMapping::from_states(n, r, states)
}

/// Unit clauses pinning the candidate layer to exactly `sigma`.
pub fn encode_candidate(sigma: &PartialSignMapping, enc: &CandidateEncoding) -> Vec<Lit> {
    sigma
        .states()
        .iter()
        .enumerate()
        .map(|(d, &st)| enc.indicator(d, st))
        .collect()
}

/// Excludes every candidate extending `sigma_prime`.
pub fn upset_exclusion_clause(sigma_prime: &PartialSignMapping, enc: &CandidateEncoding) -> Vec<Lit> {
    sigma_prime
        .set_entries()
        .map(|(d, s)| !enc.indicator(d, s.into()))
        .collect()
}

/// Excludes every candidate below `sigma_prime` (candidates always leave the
/// variable tuples unset).
pub fn downset_exclusion_clause(
    sigma_prime: &PartialSignMapping,
    enc: &CandidateEncoding,
    variable_tuples: &[usize],
) -> Vec<Lit> {
    sigma_prime
        .states()
        .iter()
        .enumerate()
        .filter_map(|(d, &st)| match st.sign() {
            Some(s) => Some(enc.indicator(d, s.negate().into())),
            None if variable_tuples.contains(&d) => None,
            None => Some(!enc.indicator(d, SignState::Unset)),
        })
        .collect()
}

/// Completability layer: variable `d + 1` is true iff tuple `d` is `+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompletionEncoding {
    pub tuple_count: usize,
}

impl CompletionEncoding {
    pub fn sign_lit(&self, tuple: usize, sign: Sign) -> Lit {
        Lit::new(tuple as u32 + 1, sign == Sign::Plus)
    }

    pub fn decode(&self, model: &Model, n: usize, r: usize) -> Result<PartialSignMapping> {
        let states = (0..self.tuple_count)
            .map(|d| {
                if model.value(d as u32 + 1) {
                    SignState::Plus
                } else {
                    SignState::Minus
                }
            })
            .collect();
        PartialSignMapping::from_states(n, r, states)
    }
}

pub(crate) fn add_avoidance(s: &mut SolverSession, dom: &Domain, family: &Family, enc: &CompletionEncoding) {
    let patterns: Vec<Vec<Sign>> = family.patterns().map(|p| p.signs().to_vec()).collect();
    dom.for_each_window(|tuples| {
        for p in &patterns {
            let clause: Vec<Lit> = tuples
                .iter()
                .zip(p)
                .map(|(&t, &sign)| enc.sign_lit(t, sign.negate()))
                .collect();
            s.add_clause(&clause);
        }
    });
}

/// Fresh completability instance for `sigma_f`.
pub fn build_completion_cnf(
    sigma_f: &PartialSignMapping,
    family: &Family,
    config: SessionConfig,
) -> Result<(SolverSession, CompletionEncoding)> {
    family.check_rank(sigma_f.r())?;
    let dom = sigma_f.domain();
    let enc = CompletionEncoding {
        tuple_count: dom.tuple_count(),
    };
    let mut s = SolverSession::new(config);
    s.new_vars(enc.tuple_count as u32);
    for d in 0..enc.tuple_count {
        s.prefer(enc.sign_lit(d, Sign::Plus));
    }
    for (d, sign) in sigma_f.set_entries() {
        s.add_clause(&[enc.sign_lit(d, sign)]);
    }
    add_avoidance(&mut s, &dom, family, &enc);
    Ok((s, enc))
}

/// One persistent completability instance answering queries for many partial
/// mappings through assumptions.
pub struct CompletionChecker {
    session: SolverSession,
    enc: CompletionEncoding,
    dom: Arc<Domain>,
    calls: u64,
}

impl fmt::Debug for CompletionChecker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompletionChecker")
            .field("n", &self.dom.n())
            .field("r", &self.dom.r())
            .field("calls", &self.calls)
            .finish()
    }
}

impl CompletionChecker {
    pub fn new(n: usize, r: usize, family: &Family, config: SessionConfig) -> Result<Self> {
        let empty = PartialSignMapping::empty(n, r)?;
        let (session, enc) = build_completion_cnf(&empty, family, config)?;
        Ok(CompletionChecker {
            session,
            enc,
            dom: Domain::get(n, r)?,
            calls: 0,
        })
    }

    pub fn set_deadline(&mut self, deadline: Option<std::time::Instant>) {
        self.session.set_deadline(deadline);
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// A family-avoiding completion of `sigma`, or `None`.
    pub fn complete(&mut self, sigma: &PartialSignMapping) -> Result<Option<PartialSignMapping>> {
        if sigma.n() != self.dom.n() || sigma.r() != self.dom.r() {
            return Err(Error::DimensionMismatch(
                sigma.n(),
                sigma.r(),
                self.dom.n(),
                self.dom.r(),
            ));
        }
        self.calls += 1;
        let assumptions: Vec<Lit> = sigma.set_entries().map(|(d, s)| self.enc.sign_lit(d, s)).collect();
        match self.session.solve_with(&assumptions) {
            SolveResult::Sat(m) => Ok(Some(self.enc.decode(&m, self.dom.n(), self.dom.r())?)),
            SolveResult::Unsat => Ok(None),
            SolveResult::TimedOut => Err(Error::Timeout),
        }
    }

    pub fn is_completable(&mut self, sigma: &PartialSignMapping) -> Result<bool> {
        Ok(self.complete(sigma)?.is_some())
    }
}
