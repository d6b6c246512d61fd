use gadgetsmith::gadgets::Library;
use gadgetsmith::reduce::{compile, decide_instance, preprocess_3sat, read_assignment, DecideOptions, Decision};
use gadgetsmith::sat::{Cnf, Lit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Up to 3 clauses of width 1 to 3 over at most 4 variables.
pub fn random_cnf(rng: &mut impl Rng) -> Cnf {
    let vars = rng.gen_range(1..=4u32);
    let mut cnf = Cnf::new();
    for _ in 0..rng.gen_range(1..=3) {
        let width = rng.gen_range(1..=3.min(vars as usize));
        let mut pool: Vec<u32> = (1..=vars).collect();
        let mut clause = Vec::new();
        for _ in 0..width {
            let v = pool.swap_remove(rng.gen_range(0..pool.len()));
            clause.push(Lit::new(v, rng.gen_bool(0.5)));
        }
        cnf.add_clause(clause);
    }
    cnf
}

pub fn brute_sat(cnf: &Cnf, vars: u32) -> bool {
    (0u32..1 << vars).any(|bits| {
        let m = gadgetsmith::sat::Model::from_values((0..vars).map(|i| bits >> i & 1 == 1).collect());
        cnf.is_satisfied_by(&m)
    })
}

/// Compiles and decides `count` random formulas, alternating satisfiable
/// and unsatisfiable ones; returns (sat, unsat) counts.
pub fn end_to_end(lib: &Library, count: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sat, mut unsat) = (0, 0);
    while sat + unsat < count {
        let want = (sat + unsat) % 2 == 0;
        let cnf = loop {
            let c = random_cnf(&mut rng);
            if brute_sat(&c, 4) == want {
                break c;
            }
        };
        let formula = preprocess_3sat(&cnf).unwrap();
        assert_eq!(formula.solve().is_some(), want);
        let compiled = compile(&formula, lib).unwrap();
        assert!(compiled.combination.passed());
        match decide_instance(&compiled.instance, &DecideOptions::default()).unwrap() {
            Decision::Completable(done) => {
                assert!(want, "unsatisfiable formula compiled to a completable instance");
                let assignment = read_assignment(&compiled, &done).unwrap();
                assert!(formula.is_satisfied_by(&assignment));
                sat += 1;
            }
            Decision::NotCompletable => {
                assert!(!want, "satisfiable formula compiled to an incompletable instance");
                unsat += 1;
            }
        }
    }
    (sat, unsat)
}
