//! The gadget-finding loop: enumerate candidates with one solver, test every
//! variable assignment for completability with another, and learn up-set or
//! down-set exclusions from each failure.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encode::{
    build_candidate_cnf, decode_candidate, downset_exclusion_clause, encode_candidate, upset_exclusion_clause,
    CandidateEncoding, CompletionChecker, GadgetProblem, GadgetSpec, WindowMode,
};
use crate::error::{Error, Result};
use crate::mapping::{PartialSignMapping, SignState};
use crate::oracle::{verify_gadget, verify_gadget_with, VerifyReport};
use crate::patterns::Family;
use crate::sat::{encode_exactly_k, Lit, SessionConfig, SolveResult, SolverSession};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchVariant {
    /// Exclude the up-set or down-set of the failing candidate itself.
    Basic,
    /// Shrink to a minimal too-strict, or grow to a maximal too-loose,
    /// witness before excluding.
    #[default]
    Advanced,
}

impl FromStr for SearchVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(SearchVariant::Basic),
            "advanced" => Ok(SearchVariant::Advanced),
            _ => Err(Error::InvalidProblem(format!("unknown variant '{s}'"))),
        }
    }
}

impl fmt::Display for SearchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchVariant::Basic => "basic",
            SearchVariant::Advanced => "advanced",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShrinkMode {
    /// Drop entries one at a time in tuple order while the witness stays too
    /// strict. Gives a set-minimal witness.
    #[default]
    Greedy,
    /// Look for a too-strict subset with one entry fewer via an exactly-k
    /// counter, repeating until none exists.
    Cardinality,
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    pub variant: SearchVariant,
    pub shrink: ShrinkMode,
    pub timeout: Option<Duration>,
    /// Placements tried by [`search_size_ladder`].
    pub windows: WindowMode,
}

impl SearchOptions {
    pub fn new(variant: SearchVariant, timeout: Option<Duration>) -> Self {
        SearchOptions {
            variant,
            shrink: ShrinkMode::Greedy,
            timeout,
            windows: WindowMode::Any,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub candidates: u64,
    pub up_prunings: u64,
    pub down_prunings: u64,
    pub solver_calls: u64,
    pub elapsed_secs: f64,
}

impl SearchStats {
    pub fn prunings(&self) -> u64 {
        self.up_prunings + self.down_prunings
    }

    pub fn elapsed(&self) -> Duration {
        Duration::from_secs_f64(self.elapsed_secs)
    }

    pub fn absorb(&mut self, other: &SearchStats) {
        self.candidates += other.candidates;
        self.up_prunings += other.up_prunings;
        self.down_prunings += other.down_prunings;
        self.solver_calls += other.solver_calls;
        self.elapsed_secs += other.elapsed_secs;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(PartialSignMapping),
    NoGadget,
    Timeout,
}

impl SearchOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SearchOutcome::Found(_) => "found",
            SearchOutcome::NoGadget => "no-gadget",
            SearchOutcome::Timeout => "timeout",
        }
    }

    pub fn gadget(&self) -> Option<&PartialSignMapping> {
        match self {
            SearchOutcome::Found(g) => Some(g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
}

/// One line of the machine-readable statistics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub family: String,
    pub spec: String,
    pub n: usize,
    #[serde(default)]
    pub starts: Vec<usize>,
    pub variant: SearchVariant,
    pub outcome: String,
    #[serde(flatten)]
    pub stats: SearchStats,
}

impl StatsRecord {
    pub fn new(family: &Family, spec: GadgetSpec, rung: &Rung, variant: SearchVariant) -> Self {
        let report = &rung.report;
        StatsRecord {
            family: family.id(),
            spec: spec.to_string(),
            n: rung.n,
            starts: rung.starts.clone(),
            variant,
            outcome: report.outcome.label().to_string(),
            stats: report.stats,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("stats records serialize")
    }
}

enum Check {
    Completable(PartialSignMapping),
    NotCompletable,
}

/// Completability of `sigma` under assignment number `k`.
pub fn check_assignment(
    sigma: &PartialSignMapping,
    k: usize,
    problem: &GadgetProblem,
    checker: &mut CompletionChecker,
) -> Result<bool> {
    problem.check_candidate(sigma)?;
    checker.is_completable(&problem.apply(sigma, k))
}

struct Searcher<'a> {
    problem: &'a GadgetProblem,
    options: &'a SearchOptions,
    checker: CompletionChecker,
    deadline: Option<Instant>,
    stats: SearchStats,
}

impl<'a> Searcher<'a> {
    fn check(&mut self, sigma: &PartialSignMapping, k: usize) -> Result<Check> {
        self.stats.solver_calls += 1;
        Ok(match self.checker.complete(&self.problem.apply(sigma, k))? {
            Some(c) => Check::Completable(c),
            None => Check::NotCompletable,
        })
    }

    fn shrink(&mut self, sigma: &PartialSignMapping, k: usize) -> Result<PartialSignMapping> {
        match self.options.shrink {
            ShrinkMode::Greedy => self.shrink_greedy(sigma, k),
            ShrinkMode::Cardinality => self.shrink_cardinality(sigma, k),
        }
    }

    fn shrink_greedy(&mut self, sigma: &PartialSignMapping, k: usize) -> Result<PartialSignMapping> {
        let mut current = sigma.clone();
        let entries: Vec<usize> = sigma.set_entries().map(|(d, _)| d).collect();
        for d in entries {
            let keep = current.get(d);
            current.set(d, SignState::Unset);
            if let Check::Completable(_) = self.check(&current, k)? {
                current.set(d, keep);
            }
        }
        Ok(current)
    }

    fn shrink_cardinality(&mut self, sigma: &PartialSignMapping, k: usize) -> Result<PartialSignMapping> {
        let mut current = sigma.clone();
        loop {
            let entries: Vec<usize> = current.set_entries().map(|(d, _)| d).collect();
            if entries.is_empty() {
                return Ok(current);
            }
            let mut sel = SolverSession::new(SessionConfig {
                timeout: None,
                deadline: self.deadline,
            });
            let vars: Vec<Lit> = sel.new_vars(entries.len() as u32).map(Lit::pos).collect();
            encode_exactly_k(&mut sel, &vars, entries.len() - 1)?;
            let mut smaller = None;
            loop {
                let model = match sel.solve() {
                    SolveResult::Sat(m) => m,
                    SolveResult::Unsat => break,
                    SolveResult::TimedOut => return Err(Error::Timeout),
                };
                let mut candidate = current.clone();
                for (&d, &v) in entries.iter().zip(&vars) {
                    if !model.lit(v) {
                        candidate.set(d, SignState::Unset);
                    }
                }
                if let Check::NotCompletable = self.check(&candidate, k)? {
                    smaller = Some(candidate);
                    break;
                }
                let block: Vec<Lit> = vars.iter().map(|&v| if model.lit(v) { !v } else { v }).collect();
                sel.add_clause(&block);
            }
            match smaller {
                Some(s) => current = s,
                None => return Ok(current),
            }
        }
    }

    /// The completion restricted to non-variable tuples.
    fn grow(&self, completion: PartialSignMapping) -> PartialSignMapping {
        let mut out = completion;
        for &v in self.problem.variable_indices() {
            out.set(v, SignState::Unset);
        }
        out
    }

    fn run(&mut self) -> Result<SearchOutcome> {
        let config = SessionConfig {
            timeout: None,
            deadline: self.deadline,
        };
        let (mut cand, enc) = build_candidate_cnf(self.problem, config)?;
        loop {
            let sigma = match cand.solve() {
                SolveResult::Sat(m) => decode_candidate(&m, &enc, self.problem.n, self.problem.r)?,
                SolveResult::Unsat => return Ok(SearchOutcome::NoGadget),
                SolveResult::TimedOut => return Err(Error::Timeout),
            };
            self.stats.candidates += 1;
            if self.step(&sigma, &mut cand, &enc)? {
                return Ok(SearchOutcome::Found(sigma));
            }
        }
    }

    /// Tests all assignments; returns whether the candidate is a gadget.
    fn step(&mut self, sigma: &PartialSignMapping, cand: &mut SolverSession, enc: &CandidateEncoding) -> Result<bool> {
        let mut valid = true;
        for k in 0..self.problem.assignment_count() {
            let wanted = self.problem.psi[k];
            match (wanted, self.check(sigma, k)?) {
                (true, Check::NotCompletable) => {
                    let witness = match self.options.variant {
                        SearchVariant::Basic => sigma.clone(),
                        SearchVariant::Advanced => self.shrink(sigma, k)?,
                    };
                    cand.add_clause(&upset_exclusion_clause(&witness, enc));
                    self.stats.up_prunings += 1;
                    valid = false;
                }
                (false, Check::Completable(completion)) => {
                    let witness = match self.options.variant {
                        SearchVariant::Basic => sigma.clone(),
                        SearchVariant::Advanced => self.grow(completion),
                    };
                    cand.add_clause(&downset_exclusion_clause(
                        &witness,
                        enc,
                        self.problem.variable_indices(),
                    ));
                    self.stats.down_prunings += 1;
                    valid = false;
                }
                _ => {}
            }
        }
        Ok(valid)
    }
}

/// Runs the search loop. Found gadgets are re-verified by the brute-force
/// oracle before they are reported.
pub fn find_gadget(problem: &GadgetProblem, options: &SearchOptions) -> Result<SearchReport> {
    let start = Instant::now();
    let deadline = options.timeout.map(|t| start + t);
    let config = SessionConfig {
        timeout: None,
        deadline,
    };
    let mut searcher = Searcher {
        problem,
        options,
        checker: CompletionChecker::new(problem.n, problem.r, &problem.family, config)?,
        deadline,
        stats: SearchStats::default(),
    };
    let outcome = match searcher.run() {
        Ok(o) => o,
        Err(Error::Timeout) => SearchOutcome::Timeout,
        Err(e) => return Err(e),
    };
    if let SearchOutcome::Found(g) = &outcome {
        let report = verify_gadget(g, problem)?;
        if !report.passed() {
            return Err(Error::Verification(format!(
                "search returned {g} which fails the oracle on {} assignments",
                report.failures().count()
            )));
        }
    }
    let mut stats = searcher.stats;
    stats.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(SearchReport { outcome, stats })
}

/// Verification through the SAT completability layer, for sizes where the
/// backtracking oracle is too slow.
pub fn verify_gadget_sat(gadget: &PartialSignMapping, problem: &GadgetProblem) -> Result<VerifyReport> {
    let mut checker = CompletionChecker::new(problem.n, problem.r, &problem.family, SessionConfig::default())?;
    verify_gadget_with(gadget, problem, |s| checker.is_completable(s))
}

/// Every candidate the loop would accept without pruning: enumerate all
/// models of the candidate layer and test each one. Tiny instances only.
pub fn accept_set(problem: &GadgetProblem) -> Result<Vec<PartialSignMapping>> {
    let (mut cand, enc) = build_candidate_cnf(problem, SessionConfig::default())?;
    let mut checker = CompletionChecker::new(problem.n, problem.r, &problem.family, SessionConfig::default())?;
    let mut out = Vec::new();
    loop {
        let sigma = match cand.solve() {
            SolveResult::Sat(m) => decode_candidate(&m, &enc, problem.n, problem.r)?,
            SolveResult::Unsat => break,
            SolveResult::TimedOut => return Err(Error::Timeout),
        };
        let report = verify_gadget_with(&sigma, problem, |s| checker.is_completable(s))?;
        if report.passed() {
            out.push(sigma.clone());
        }
        let block: Vec<Lit> = encode_candidate(&sigma, &enc).into_iter().map(|l| !l).collect();
        cand.add_clause(&block);
    }
    Ok(out)
}

/// One rung of a size ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct Rung {
    pub n: usize,
    /// First elements of the variable windows.
    pub starts: Vec<usize>,
    pub report: SearchReport,
}

/// Tries `n_min..=n_max` in order, every allowed window placement at each
/// size, and stops at the first gadget.
pub fn search_size_ladder(
    family: &Family,
    spec: GadgetSpec,
    n_min: usize,
    n_max: usize,
    options: &SearchOptions,
) -> Result<Vec<Rung>> {
    let r = family.rank();
    let mut rungs = Vec::new();
    for n in n_min.max(spec.min_n(r))..=n_max {
        for starts in spec.placements(n, r, options.windows)? {
            let problem = GadgetProblem::from_spec_at(spec, n, family.clone(), &starts)?;
            let report = find_gadget(&problem, options)?;
            let found = matches!(report.outcome, SearchOutcome::Found(_));
            rungs.push(Rung { n, starts, report });
            if found {
                return Ok(rungs);
            }
        }
    }
    Ok(rungs)
}
