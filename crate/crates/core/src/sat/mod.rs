//! CNF model and an incremental solver session with a pluggable backend.

mod cardinality;
mod cdcl;
mod dimacs;

use std::fmt;
use std::io::Write;
use std::ops::Not;
use std::path::Path;
use std::time::{Duration, Instant};

pub use cardinality::encode_exactly_k;
pub use cdcl::Cdcl;
pub use dimacs::{export_dimacs, parse_dimacs};

use crate::error::{Error, Result};

/// A literal. Internally `2 * (id - 1) + negative`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    /// Positive literal of the 1-based variable `id`.
    pub fn pos(id: u32) -> Lit {
        assert!(id >= 1, "variable ids start at 1");
        Lit((id - 1) << 1)
    }

    pub fn neg(id: u32) -> Lit {
        assert!(id >= 1, "variable ids start at 1");
        Lit(((id - 1) << 1) | 1)
    }

    pub fn new(id: u32, positive: bool) -> Lit {
        if positive {
            Lit::pos(id)
        } else {
            Lit::neg(id)
        }
    }

    pub fn from_dimacs(v: i32) -> Option<Lit> {
        match v {
            0 => None,
            v if v > 0 => Some(Lit::pos(v as u32)),
            v => Some(Lit::neg(v.unsigned_abs())),
        }
    }

    pub fn to_dimacs(self) -> i64 {
        let id = i64::from(self.var());
        if self.is_negative() {
            -id
        } else {
            id
        }
    }

    /// 1-based variable id.
    pub fn var(self) -> u32 {
        (self.0 >> 1) + 1
    }

    pub fn is_negative(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_positive(self) -> bool {
        !self.is_negative()
    }

    pub(crate) fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_code(code: u32) -> Lit {
        Lit(code)
    }

    pub(crate) fn from_index(index: usize, positive: bool) -> Lit {
        Lit(((index as u32) << 1) | u32::from(!positive))
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A plain clause list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub var_count: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Cnf {
        Cnf::default()
    }

    pub fn new_var(&mut self) -> u32 {
        self.var_count += 1;
        self.var_count
    }

    pub fn add_clause(&mut self, clause: impl Into<Vec<Lit>>) {
        let clause = clause.into();
        if let Some(max) = clause.iter().map(|l| l.var()).max() {
            self.var_count = self.var_count.max(max);
        }
        self.clauses.push(clause);
    }

    pub fn is_satisfied_by(&self, model: &Model) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| model.lit(l)))
    }
}

/// Backend answer before session-level verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Sat,
    Unsat,
    Unknown,
}

/// The contract a solver must fulfil to sit behind a [`SolverSession`].
pub trait Backend {
    fn num_vars(&self) -> usize;
    fn ensure_vars(&mut self, count: usize);
    fn add_clause(&mut self, lits: &[Lit]);
    fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Answer;
    fn model_value(&self, lit: Lit) -> bool;
    fn model(&self) -> &[bool];
    fn failed_assumptions(&self) -> &[Lit];
    /// Preferred polarity for branching on the literal's variable.
    fn set_phase(&mut self, lit: Lit);
    fn set_proof_sink(&mut self, sink: Box<dyn Write + Send>);
    fn take_proof_sink(&mut self) -> Option<Box<dyn Write + Send>>;
}

/// A full assignment, indexed by 1-based variable id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn from_values(values: Vec<bool>) -> Model {
        Model { values }
    }

    pub fn value(&self, id: u32) -> bool {
        self.values.get(id as usize - 1).copied().unwrap_or(false)
    }

    pub fn lit(&self, lit: Lit) -> bool {
        self.value(lit.var()) != lit.is_negative()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    TimedOut,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveResult::Sat(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    /// Wall-clock budget per `solve` call.
    pub timeout: Option<Duration>,
    /// Absolute deadline shared by all calls, e.g. a whole search budget.
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub solves: u64,
    pub clauses: u64,
}

/// An incremental CNF. Clauses are only ever added, and every satisfying
/// model is re-checked against the stored clauses before it is returned.
pub struct SolverSession<B: Backend = Cdcl> {
    backend: B,
    clauses: Vec<Lit>,
    clause_ends: Vec<usize>,
    var_count: u32,
    config: SessionConfig,
    stats: SessionStats,
}

impl fmt::Debug for SolverSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverSession")
            .field("vars", &self.var_count)
            .field("clauses", &self.clause_ends.len())
            .finish()
    }
}

impl Default for SolverSession {
    fn default() -> Self {
        SolverSession::new(SessionConfig::default())
    }
}

impl SolverSession {
    pub fn new(config: SessionConfig) -> SolverSession {
        SolverSession::with_backend(Cdcl::new(), config)
    }
}

impl<B: Backend> SolverSession<B> {
    pub fn with_backend(backend: B, config: SessionConfig) -> Self {
        SolverSession {
            backend,
            clauses: Vec::new(),
            clause_ends: Vec::new(),
            var_count: 0,
            config,
            stats: SessionStats::default(),
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.config.deadline = deadline;
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clause_count(&self) -> usize {
        self.clause_ends.len()
    }

    pub fn new_var(&mut self) -> u32 {
        self.var_count += 1;
        self.backend.ensure_vars(self.var_count as usize);
        self.var_count
    }

    pub fn new_vars(&mut self, count: u32) -> std::ops::RangeInclusive<u32> {
        let first = self.var_count + 1;
        self.var_count += count;
        self.backend.ensure_vars(self.var_count as usize);
        first..=self.var_count
    }

    pub fn add_clause(&mut self, clause: &[Lit]) {
        if let Some(max) = clause.iter().map(|l| l.var()).max() {
            if max > self.var_count {
                self.var_count = max;
                self.backend.ensure_vars(max as usize);
            }
        }
        self.clauses.extend_from_slice(clause);
        self.clause_ends.push(self.clauses.len());
        self.stats.clauses += 1;
        self.backend.add_clause(clause);
    }

    pub fn add_cnf(&mut self, cnf: &Cnf) {
        if cnf.var_count > self.var_count {
            self.var_count = cnf.var_count;
            self.backend.ensure_vars(cnf.var_count as usize);
        }
        for c in &cnf.clauses {
            self.add_clause(c);
        }
    }

    /// Branching preference for `lit`'s variable.
    pub fn prefer(&mut self, lit: Lit) {
        self.backend.set_phase(lit);
    }

    /// Iterates over the stored clauses in insertion order.
    pub fn clauses(&self) -> impl Iterator<Item = &[Lit]> + '_ {
        let mut start = 0;
        self.clause_ends.iter().map(move |&end| {
            let c = &self.clauses[start..end];
            start = end;
            c
        })
    }

    pub fn to_cnf(&self) -> Cnf {
        Cnf {
            var_count: self.var_count,
            clauses: self.clauses().map(|c| c.to_vec()).collect(),
        }
    }

    pub fn solve(&mut self) -> SolveResult {
        self.solve_with(&[])
    }

    pub fn solve_with(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        if let Some(max) = assumptions.iter().map(|l| l.var()).max() {
            if max > self.var_count {
                self.var_count = max;
                self.backend.ensure_vars(max as usize);
            }
        }
        let deadline = match (self.config.timeout, self.config.deadline) {
            (Some(t), Some(d)) => Some(d.min(Instant::now() + t)),
            (Some(t), None) => Some(Instant::now() + t),
            (None, d) => d,
        };
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return SolveResult::TimedOut;
        }
        match self.backend.solve(assumptions, deadline) {
            Answer::Unsat => SolveResult::Unsat,
            Answer::Unknown => SolveResult::TimedOut,
            Answer::Sat => {
                let mut values = self.backend.model().to_vec();
                values.resize(self.var_count as usize, false);
                let model = Model::from_values(values);
                self.verify(&model, assumptions);
                SolveResult::Sat(model)
            }
        }
    }

    /// Subset of the assumptions responsible for the last Unsat answer.
    pub fn failed_assumptions(&self) -> &[Lit] {
        self.backend.failed_assumptions()
    }

    fn verify(&self, model: &Model, assumptions: &[Lit]) {
        for (i, c) in self.clauses().enumerate() {
            if !c.iter().any(|&l| model.lit(l)) {
                panic!("solver backend returned a model violating stored clause #{i} {c:?}");
            }
        }
        for &a in assumptions {
            assert!(model.lit(a), "solver backend returned a model violating assumption {a}");
        }
    }

    /// Streams a DRAT proof of subsequent derivations to `path`.
    pub fn emit_proof(&mut self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.backend.set_proof_sink(Box::new(std::io::BufWriter::new(file)));
        Ok(())
    }

    /// Detaches and flushes the proof sink.
    pub fn finish_proof(&mut self) -> Result<()> {
        if let Some(mut sink) = self.backend.take_proof_sink() {
            sink.flush()?;
        }
        Ok(())
    }

    /// Enumerates models projected onto `projection`, adding a blocking clause
    /// over the projection after each one. Stops after `limit` models.
    pub fn enumerate_projected(&mut self, projection: &[u32], limit: usize) -> Result<Vec<Vec<bool>>> {
        let mut out = Vec::new();
        while out.len() < limit {
            match self.solve() {
                SolveResult::Sat(m) => {
                    let values: Vec<bool> = projection.iter().map(|&v| m.value(v)).collect();
                    let block: Vec<Lit> = projection.iter().zip(&values).map(|(&v, &b)| Lit::new(v, !b)).collect();
                    out.push(values);
                    if block.is_empty() {
                        break;
                    }
                    self.add_clause(&block);
                }
                SolveResult::Unsat => break,
                SolveResult::TimedOut => return Err(Error::Timeout),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> SolverSession {
        SolverSession::default()
    }

    #[test]
    fn lit_encoding() {
        let l = Lit::pos(3);
        assert_eq!(l.var(), 3);
        assert!(l.is_positive());
        assert_eq!((!l).to_dimacs(), -3);
        assert_eq!(Lit::from_dimacs(-7), Some(Lit::neg(7)));
        assert_eq!(Lit::from_dimacs(0), None);
    }

    #[test]
    fn empty_session_is_sat() {
        let mut s = session();
        assert_eq!(s.solve(), SolveResult::Sat(Model::default()));
    }

    #[test]
    fn unit_and_contradiction() {
        let mut s = session();
        s.add_clause(&[Lit::pos(1)]);
        match s.solve() {
            SolveResult::Sat(m) => assert!(m.value(1)),
            other => panic!("{other:?}"),
        }
        s.add_clause(&[Lit::neg(1)]);
        assert!(s.solve().is_unsat());
    }

    #[test]
    fn assumptions() {
        let mut s = session();
        s.add_clause(&[Lit::pos(1), Lit::pos(2)]);
        match s.solve_with(&[Lit::neg(1)]) {
            SolveResult::Sat(m) => assert!(m.value(2) && !m.value(1)),
            other => panic!("{other:?}"),
        }
        let mut t = session();
        t.add_clause(&[Lit::pos(1)]);
        assert!(t.solve_with(&[Lit::neg(1)]).is_unsat());
        // The session stays usable after an assumption failure.
        assert!(t.solve().is_sat());
    }

    #[test]
    fn tautology_empty_and_duplicate() {
        let mut s = session();
        s.add_clause(&[Lit::pos(1), Lit::neg(1)]);
        assert!(s.solve().is_sat());
        s.add_clause(&[Lit::pos(2)]);
        s.add_clause(&[Lit::pos(2)]);
        assert!(s.solve().is_sat());
        s.add_clause(&[]);
        assert!(s.solve().is_unsat());
        assert!(s.solve_with(&[Lit::pos(1)]).is_unsat());
    }

    #[test]
    fn failed_assumption_core() {
        let mut s = session();
        s.add_clause(&[Lit::neg(1), Lit::neg(2)]);
        assert!(s.solve_with(&[Lit::pos(3), Lit::pos(1), Lit::pos(2)]).is_unsat());
        let core = s.failed_assumptions().to_vec();
        assert!(!core.contains(&Lit::neg(3)));
        assert!(!core.is_empty());
    }

    #[test]
    fn zero_timeout_reports_timeout() {
        let mut s = SolverSession::new(SessionConfig {
            timeout: None,
            deadline: Some(Instant::now()),
        });
        s.add_clause(&[Lit::pos(1)]);
        assert_eq!(s.solve(), SolveResult::TimedOut);
    }
}
