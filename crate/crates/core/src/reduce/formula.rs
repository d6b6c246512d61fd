use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sat::{Cnf, Lit, SolverSession};

/// 3-CNF in which every clause has three literals on distinct variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeSatFormula {
    var_count: u32,
    clauses: Vec<[Lit; 3]>,
}

impl ThreeSatFormula {
    pub fn new(var_count: u32, clauses: Vec<[Lit; 3]>) -> Result<ThreeSatFormula> {
        for (i, c) in clauses.iter().enumerate() {
            if c.iter().any(|l| l.var() > var_count) {
                return Err(Error::InvalidProblem(format!(
                    "clause {} uses a variable above {var_count}",
                    i + 1
                )));
            }
            if c[0].var() == c[1].var() || c[0].var() == c[2].var() || c[1].var() == c[2].var() {
                return Err(Error::InvalidProblem(format!(
                    "clause {} repeats a variable; run preprocess_3sat first",
                    i + 1
                )));
            }
        }
        Ok(ThreeSatFormula { var_count, clauses })
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clauses(&self) -> &[[Lit; 3]] {
        &self.clauses
    }

    pub fn to_cnf(&self) -> Cnf {
        Cnf {
            var_count: self.var_count,
            clauses: self.clauses.iter().map(|c| c.to_vec()).collect(),
        }
    }

    pub fn is_satisfied_by(&self, values: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| values[l.var() as usize - 1] == l.is_positive()))
    }

    /// A satisfying assignment (index `v - 1` holds variable `v`), if any.
    pub fn solve(&self) -> Option<Vec<bool>> {
        let mut s = SolverSession::default();
        s.new_vars(self.var_count);
        for c in &self.clauses {
            s.add_clause(c);
        }
        let model = s.solve().model()?.clone();
        Some((1..=self.var_count).map(|v| model.value(v)).collect())
    }

    /// Uniform random clauses over distinct variables with random signs.
    pub fn random(rng: &mut impl Rng, var_count: u32, clause_count: usize) -> ThreeSatFormula {
        assert!(var_count >= 3, "need three variables per clause");
        let clauses = (0..clause_count)
            .map(|_| {
                let vars = sample(rng, var_count as usize, 3);
                let mut c = [Lit::pos(1); 3];
                for (slot, v) in c.iter_mut().zip(vars.iter()) {
                    *slot = Lit::new(v as u32 + 1, rng.gen_bool(0.5));
                }
                c
            })
            .collect();
        ThreeSatFormula { var_count, clauses }
    }
}

/// Brings a CNF with clauses of at most three literals into the strict form.
/// Duplicate literals are merged, tautologies dropped, and short clauses are
/// padded with fresh variables in every sign combination, so `x v x v y`
/// becomes `(x v y v p)(x v y v -p)`.
pub fn preprocess_3sat(cnf: &Cnf) -> Result<ThreeSatFormula> {
    let mut var_count = cnf.var_count;
    let mut out = Vec::new();
    for (i, clause) in cnf.clauses.iter().enumerate() {
        let mut lits: Vec<Lit> = Vec::with_capacity(3);
        for &l in clause {
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        if lits.iter().any(|&l| lits.contains(&!l)) {
            continue;
        }
        if lits.len() > 3 {
            return Err(Error::InvalidProblem(format!(
                "clause {} has {} distinct literals; only 3-CNF is supported",
                i + 1,
                lits.len()
            )));
        }
        let pad = 3 - lits.len();
        let fresh: Vec<u32> = (0..pad)
            .map(|_| {
                var_count += 1;
                var_count
            })
            .collect();
        for mask in 0u32..1 << pad {
            let mut c = [Lit::pos(1); 3];
            for (slot, &l) in c.iter_mut().zip(&lits) {
                *slot = l;
            }
            for (j, &v) in fresh.iter().enumerate() {
                c[lits.len() + j] = Lit::new(v, mask >> j & 1 == 0);
            }
            out.push(c);
        }
    }
    ThreeSatFormula::new(var_count, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute(f: &Cnf) -> bool {
        (0u32..1 << f.var_count).any(|bits| {
            f.clauses
                .iter()
                .all(|c| c.iter().any(|l| (bits >> (l.var() - 1) & 1 == 1) == l.is_positive()))
        })
    }

    #[test]
    fn repeated_literals_are_split() {
        let mut cnf = Cnf::new();
        cnf.add_clause(vec![Lit::pos(1), Lit::pos(1), Lit::neg(2)]);
        cnf.add_clause(vec![Lit::neg(3), Lit::neg(3), Lit::neg(3)]);
        cnf.add_clause(vec![Lit::pos(1), Lit::neg(1), Lit::pos(2)]);
        let f = preprocess_3sat(&cnf).unwrap();
        assert_eq!(f.clauses().len(), 2 + 4);
        assert_eq!(f.var_count(), 3 + 1 + 2);
    }

    #[test]
    fn preprocessing_preserves_satisfiability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..400 {
            let vars = rng.gen_range(1..=6u32);
            let mut cnf = Cnf::new();
            cnf.var_count = vars;
            for _ in 0..rng.gen_range(0..10) {
                let len = rng.gen_range(1..=3);
                cnf.add_clause(
                    (0..len)
                        .map(|_| Lit::new(rng.gen_range(1..=vars), rng.gen_bool(0.5)))
                        .collect::<Vec<_>>(),
                );
            }
            let f = preprocess_3sat(&cnf).unwrap();
            assert_eq!(brute(&f.to_cnf()), brute(&cnf));
            assert_eq!(f.solve().is_some(), brute(&cnf));
        }
    }

    #[test]
    fn rejects_long_clauses() {
        let mut cnf = Cnf::new();
        cnf.add_clause((1..=4).map(Lit::pos).collect::<Vec<_>>());
        assert!(preprocess_3sat(&cnf).is_err());
    }
}
