//! Ground truth that does not touch the SAT layer: backtracking completion,
//! exhaustive gadget verification and the greedy `+` classifier.

use serde::{Deserialize, Serialize};

use crate::encode::{assignment, GadgetProblem};
use crate::error::{Error, Result};
use crate::mapping::{Domain, PartialSignMapping, Sign, SignState};
use crate::patterns::Family;

fn window_violates(states: &[SignState], tuples: &[u32], family: &Family) -> bool {
    let mut code = 0u32;
    for &t in tuples {
        code <<= 1;
        match states[t as usize] {
            SignState::Plus => {}
            SignState::Minus => code |= 1,
            SignState::Unset => return false,
        }
    }
    family.contains_code(code)
}

struct Windows<'a> {
    dom: &'a Domain,
    owned: Vec<u32>,
}

impl<'a> Windows<'a> {
    fn new(dom: &'a Domain) -> Self {
        let owned = if dom.window_count() == 0 || dom.window(0).is_some() {
            Vec::new()
        } else {
            let mut v = Vec::new();
            dom.for_each_window(|t| v.extend(t.iter().map(|&x| x as u32)));
            v
        };
        Windows { dom, owned }
    }

    fn get(&self, w: usize) -> &[u32] {
        match self.dom.window(w) {
            Some(t) => t,
            None => {
                let k = self.dom.r() + 1;
                &self.owned[w * k..(w + 1) * k]
            }
        }
    }
}

/// A family-avoiding full extension of `sigma`, found by backtracking over
/// the unset tuples in lex order with `+` tried first.
pub fn brute_complete(sigma: &PartialSignMapping, family: &Family) -> Result<Option<PartialSignMapping>> {
    family.check_rank(sigma.r())?;
    let dom = sigma.domain();
    let windows = Windows::new(&dom);
    let inc = dom.incidence();
    let mut states = sigma.states().to_vec();
    for w in 0..dom.window_count() {
        if window_violates(&states, windows.get(w), family) {
            return Ok(None);
        }
    }
    let free: Vec<usize> = (0..states.len()).filter(|&d| !states[d].is_set()).collect();
    let consistent = |states: &[SignState], d: usize| {
        inc[d]
            .iter()
            .all(|&(w, _)| !window_violates(states, windows.get(w as usize), family))
    };
    // Iterative DFS: choice[i] is the index of the sign tried at free[i].
    let mut choice = vec![0u8; free.len()];
    let mut i = 0usize;
    while i < free.len() {
        let d = free[i];
        let mut placed = false;
        while choice[i] < 2 {
            let s = if choice[i] == 0 {
                SignState::Plus
            } else {
                SignState::Minus
            };
            choice[i] += 1;
            states[d] = s;
            if consistent(&states, d) {
                placed = true;
                break;
            }
        }
        if placed {
            i += 1;
        } else {
            states[d] = SignState::Unset;
            choice[i] = 0;
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
        }
    }
    Ok(Some(PartialSignMapping::from_states(sigma.n(), sigma.r(), states)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub assignment: Vec<Sign>,
    pub expected: bool,
    pub completable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.expected == r.completable)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| r.expected != r.completable)
    }
}

/// Checks every assignment of the variables against the truth table using a
/// caller-supplied completability test.
pub fn verify_gadget_with(
    gadget: &PartialSignMapping,
    problem: &GadgetProblem,
    mut completable: impl FnMut(&PartialSignMapping) -> Result<bool>,
) -> Result<VerifyReport> {
    problem.check_candidate(gadget)?;
    let m = problem.variables.len();
    let rows = (0..problem.assignment_count())
        .map(|k| {
            let sigma_f = problem.apply(gadget, k);
            Ok(VerifyRow {
                assignment: assignment(k, m),
                expected: problem.psi[k],
                completable: completable(&sigma_f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { rows })
}

pub fn verify_gadget(gadget: &PartialSignMapping, problem: &GadgetProblem) -> Result<VerifyReport> {
    verify_gadget_with(gadget, problem, |s| Ok(brute_complete(s, &problem.family)?.is_some()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Completability {
    Completable,
    Incompletable,
}

/// Forced-sign propagation to a fixpoint, then `+` everywhere else.
///
/// A tuple is forced to `s` when some window has all its other positions set
/// and matching a pattern whose entry at the tuple's position is `-s`.
pub fn greedy_classify(sigma: &PartialSignMapping, family: &Family) -> Result<Completability> {
    Ok(match greedy_complete(sigma, family)? {
        Some(_) => Completability::Completable,
        None => Completability::Incompletable,
    })
}

/// The greedy completion itself, when it is avoiding.
pub fn greedy_complete(sigma: &PartialSignMapping, family: &Family) -> Result<Option<PartialSignMapping>> {
    family.check_rank(sigma.r())?;
    let dom = sigma.domain();
    let windows = Windows::new(&dom);
    let inc = dom.incidence();
    let k = sigma.r() + 1;
    let mut states = sigma.states().to_vec();
    let mut queue: Vec<usize> = (0..dom.window_count()).collect();
    let mut queued = vec![true; dom.window_count()];
    while let Some(w) = queue.pop() {
        queued[w] = false;
        let tuples = windows.get(w);
        let mut unset = None;
        let mut unset_count = 0;
        let mut code = 0u32;
        for (pos, &t) in tuples.iter().enumerate() {
            code <<= 1;
            match states[t as usize] {
                SignState::Plus => {}
                SignState::Minus => code |= 1,
                SignState::Unset => {
                    unset_count += 1;
                    unset = Some((pos, t as usize));
                }
            }
        }
        match unset_count {
            0 => {
                if family.contains_code(code) {
                    return Ok(None);
                }
            }
            1 => {
                let (pos, t) = unset.expect("one unset position");
                let bit = 1u32 << (k - 1 - pos);
                let plus_bad = family.contains_code(code);
                let minus_bad = family.contains_code(code | bit);
                let forced = match (plus_bad, minus_bad) {
                    (true, true) => return Ok(None),
                    (true, false) => SignState::Minus,
                    (false, true) => SignState::Plus,
                    (false, false) => continue,
                };
                states[t] = forced;
                for &(w2, _) in &inc[t] {
                    let w2 = w2 as usize;
                    if !queued[w2] {
                        queued[w2] = true;
                        queue.push(w2);
                    }
                }
            }
            _ => {}
        }
    }
    for s in &mut states {
        if !s.is_set() {
            *s = SignState::Plus;
        }
    }
    let done = PartialSignMapping::from_states(sigma.n(), sigma.r(), states)?;
    Ok(if done.is_avoiding(family)? { Some(done) } else { None })
}

/// Every valid gadget for `problem`, by brute force over `3^free` candidates.
pub fn enumerate_gadgets_exhaustive(problem: &GadgetProblem, budget: u128) -> Result<Vec<PartialSignMapping>> {
    let t = problem.tuple_count();
    let free: Vec<usize> = (0..t).filter(|&d| !problem.is_variable(d)).collect();
    let total = 3u128.checked_pow(free.len() as u32).unwrap_or(u128::MAX);
    if total > budget {
        return Err(Error::BudgetExceeded {
            candidates: total,
            budget,
        });
    }
    let mut out = Vec::new();
    let mut sigma = PartialSignMapping::empty(problem.n, problem.r)?;
    let mut digits = vec![0u8; free.len()];
    loop {
        for (&d, &g) in free.iter().zip(&digits) {
            sigma.set(
                d,
                match g {
                    0 => SignState::Plus,
                    1 => SignState::Minus,
                    _ => SignState::Unset,
                },
            );
        }
        if verify_gadget(&sigma, problem)?.passed() {
            out.push(sigma.clone());
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(out);
            }
            digits[i] += 1;
            if digits[i] < 3 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
