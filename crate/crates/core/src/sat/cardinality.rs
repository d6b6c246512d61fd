use super::{Backend, Lit, SolverSession};
use crate::error::{Error, Result};

/// Adds a sequential counter forcing exactly `k` of `vars` to be true.
///
/// Register `s[i][j]` means "at least j+1 of the first i+1 inputs are true".
/// The encoding is exact in both directions, so projections of models onto
/// `vars` are precisely the k-subsets. Size is O(k * |vars|).
pub fn encode_exactly_k<B: Backend>(session: &mut SolverSession<B>, vars: &[Lit], k: usize) -> Result<()> {
    let n = vars.len();
    if k > n {
        return Err(Error::InvalidProblem(format!(
            "cardinality bound {k} exceeds {n} variables"
        )));
    }
    if k == 0 {
        for &x in vars {
            session.add_clause(&[!x]);
        }
        return Ok(());
    }
    if k == n {
        for &x in vars {
            session.add_clause(&[x]);
        }
        return Ok(());
    }
    // Width k+1 so that overflow past k is representable and can be forbidden.
    let width = k + 1;
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &x) in vars.iter().enumerate() {
        let cols = width.min(i + 1);
        let cur: Vec<Lit> = session.new_vars(cols as u32).map(Lit::pos).collect();
        for j in 0..cols {
            // s[i][j] <- s[i-1][j]
            if j < prev.len() {
                session.add_clause(&[!prev[j], cur[j]]);
            }
            // s[i][j] <- x & s[i-1][j-1]   (j = 0: s[i][0] <- x)
            if j == 0 {
                session.add_clause(&[!x, cur[0]]);
            } else if j - 1 < prev.len() {
                session.add_clause(&[!x, !prev[j - 1], cur[j]]);
            }
            // s[i][j] -> s[i-1][j] | (x & s[i-1][j-1])
            let carried = (j < prev.len()).then(|| prev[j]);
            let below = if j == 0 { None } else { prev.get(j - 1).copied() };
            let mut clause = vec![!cur[j]];
            clause.extend(carried);
            clause.push(x);
            session.add_clause(&clause);
            if j > 0 {
                match below {
                    Some(b) => {
                        let mut c = vec![!cur[j]];
                        c.extend(carried);
                        c.push(b);
                        session.add_clause(&c);
                    }
                    None => {
                        let mut c = vec![!cur[j]];
                        c.extend(carried);
                        session.add_clause(&c);
                    }
                }
            }
        }
        prev = cur;
    }
    session.add_clause(&[prev[k - 1]]);
    if prev.len() > k {
        session.add_clause(&[!prev[k]]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::binomial;

    fn count_models(n: usize, k: usize) -> usize {
        let mut s = SolverSession::default();
        let vars: Vec<Lit> = s.new_vars(n as u32).map(Lit::pos).collect();
        encode_exactly_k(&mut s, &vars, k).unwrap();
        let proj: Vec<u32> = vars.iter().map(|l| l.var()).collect();
        let models = s.enumerate_projected(&proj, usize::MAX).unwrap();
        for m in &models {
            assert_eq!(m.iter().filter(|&&b| b).count(), k);
        }
        models.len()
    }

    #[test]
    fn three_choose_one() {
        assert_eq!(count_models(3, 1), 3);
    }

    #[test]
    fn all_counts_up_to_ten() {
        for n in 1..=10 {
            for k in 0..=n {
                assert_eq!(count_models(n, k), binomial(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn out_of_range() {
        let mut s = SolverSession::default();
        let vars: Vec<Lit> = s.new_vars(2).map(Lit::pos).collect();
        assert!(encode_exactly_k(&mut s, &vars, 3).is_err());
    }
}
