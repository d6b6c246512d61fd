//! The reduction from 3-SAT: scenario choice, gadget placement, and the
//! decision procedure for compiled completion instances.

mod formula;
mod layout;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub use formula::{preprocess_3sat, ThreeSatFormula};
pub use layout::{
    check_combination, combine, layout, plan_if_available, scenario_requirements, select_scenario, CombinationReport,
    Placement, ReductionLayout, ScenarioPlan, Side, SCENARIOS,
};

use crate::encode::{add_avoidance, CompletionEncoding};
use crate::error::{Error, Result};
use crate::gadgets::Library;
use crate::mapping::{Domain, PartialSignMapping, Sign, SignState};
use crate::patterns::Family;
use crate::sat::{export_dimacs, Lit, SessionConfig, SolveResult, SolverSession};

/// A partial sign mapping to be completed under a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    family: Family,
    sigma: PartialSignMapping,
}

impl Instance {
    pub fn new(family: Family, sigma: PartialSignMapping) -> Result<Instance> {
        family.check_rank(sigma.r())?;
        Ok(Instance { family, sigma })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn sigma(&self) -> &PartialSignMapping {
        &self.sigma
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    pub fn r(&self) -> usize {
        self.sigma.r()
    }

    /// Keyed text form; see [`parse_instance`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format instance");
        let _ = writeln!(out, "version 1");
        let _ = writeln!(out, "rank {}", self.r());
        let _ = writeln!(out, "n {}", self.n());
        let _ = writeln!(out, "family {}", self.family.id());
        let dom = self.sigma.domain();
        for (d, s) in self.sigma.set_entries() {
            let t = dom.unrank(d).expect("index in range");
            let elems: Vec<String> = t.elements().iter().map(|e| e.to_string()).collect();
            let _ = writeln!(out, "entry {} {s}", elems.join(" "));
        }
        out
    }

    /// Human-readable summary; the full word is shown for small instances.
    pub fn render(&self) -> String {
        let mut out = format!(
            "instance n={} r={} family={{{}}} preset={} of {}\n",
            self.n(),
            self.r(),
            self.family,
            self.sigma.set_count(),
            self.sigma.len()
        );
        if self.sigma.len() <= 400 {
            out.push_str(&self.sigma.render());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Instance> {
        parse_instance(&std::fs::read_to_string(path)?)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut header = (false, None, None, None, None::<String>);
    let mut entries: Vec<(usize, Vec<usize>, Sign)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let key = fields.next().expect("non-empty line");
        let rest: Vec<&str> = fields.collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(line, format!("expected a number, got {s:?}")))
        };
        let one = || match rest.as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::parse(line, format!("'{key}' takes exactly one value"))),
        };
        match key {
            "format" if one()? == "instance" => header.0 = true,
            "format" => return Err(Error::parse(line, "not an instance file")),
            "version" => {
                let v: u32 = one()?.parse().map_err(|_| Error::parse(line, "bad version"))?;
                if v != 1 {
                    return Err(Error::Version { found: v, expected: 1 });
                }
                header.1 = Some(v);
            }
            "rank" => header.2 = Some(num(one()?)?),
            "n" => header.3 = Some(num(one()?)?),
            "family" => header.4 = Some(rest.join(" ")),
            "entry" => {
                let Some((sign, elems)) = rest.split_last() else {
                    return Err(Error::parse(line, "entry needs elements and a sign"));
                };
                let s = match *sign {
                    "+" => Sign::Plus,
                    "-" => Sign::Minus,
                    other => return Err(Error::parse(line, format!("bad sign {other:?}"))),
                };
                entries.push((line, elems.iter().map(|e| num(e)).collect::<Result<_>>()?, s));
            }
            other => return Err(Error::parse(line, format!("unknown key '{other}'"))),
        }
    }
    let missing = |k: &str| Error::parse(0, format!("missing '{k}'"));
    if !header.0 {
        return Err(missing("format instance"));
    }
    header.1.ok_or_else(|| missing("version"))?;
    let r = header.2.ok_or_else(|| missing("rank"))?;
    let n = header.3.ok_or_else(|| missing("n"))?;
    let family = Family::parse(&header.4.ok_or_else(|| missing("family"))?, r)?;
    let mut sigma = PartialSignMapping::empty(n, r)?;
    for (line, t, s) in entries {
        let prev = sigma.get_subset(&t).map_err(|e| Error::parse(line, e.to_string()))?;
        if prev.is_set() {
            return Err(Error::parse(line, format!("tuple {t:?} listed twice")));
        }
        sigma.set_subset(&t, s.into())?;
    }
    Instance::new(family, sigma)
}

/// A compiled reduction together with everything needed to inspect it.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub plan: ScenarioPlan,
    pub formula: ThreeSatFormula,
    pub layout: ReductionLayout,
    pub combination: CombinationReport,
    pub instance: Instance,
}

/// Builds the completion instance for `formula` from the first applicable
/// scenario. Fails with [`Error::NoReduction`] when no scenario applies and
/// with [`Error::Combination`] when the placed gadgets violate the
/// combination lemma's preconditions.
pub fn compile(formula: &ThreeSatFormula, library: &Library) -> Result<Compiled> {
    let plan = select_scenario(library).ok_or_else(|| {
        Error::NoReduction(format!(
            "no scenario is covered by the {} gadget(s) known for {{{}}}",
            library.len(),
            library.family()
        ))
    })?;
    compile_with(formula, library, plan)
}

pub fn compile_with(formula: &ThreeSatFormula, library: &Library, plan: ScenarioPlan) -> Result<Compiled> {
    let layout = layout(formula, library, &plan)?;
    let combination = check_combination(&layout, library.family());
    if !combination.passed() {
        let shown: Vec<&str> = combination.violations.iter().take(3).map(String::as_str).collect();
        return Err(Error::Combination(shown.join("; ")));
    }
    let instance = combine(&layout, library.family())?;
    Ok(Compiled {
        plan,
        formula: formula.clone(),
        layout,
        combination,
        instance,
    })
}

/// Reads the variable assignment off a completion of a compiled instance.
pub fn read_assignment(compiled: &Compiled, completion: &PartialSignMapping) -> Result<Vec<bool>> {
    compiled
        .layout
        .variable_blocks
        .iter()
        .map(|b| Ok(completion.get_subset(b)? == Sign::Plus.into()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Completable(PartialSignMapping),
    NotCompletable,
}

impl Decision {
    pub fn is_completable(&self) -> bool {
        matches!(self, Decision::Completable(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecideMode {
    /// Full encoding for small instances, lazy window clauses otherwise.
    #[default]
    Auto,
    Full,
    Lazy,
}

#[derive(Debug, Clone, Default)]
pub struct DecideOptions {
    pub timeout: Option<Duration>,
    pub mode: DecideMode,
    /// Write a DRAT proof here, and the CNF it refers to next to it with a
    /// `.cnf` extension.
    pub drat: Option<PathBuf>,
}

const FULL_CLAUSE_LIMIT: usize = 400_000;

/// Decides whether the instance has an avoiding completion. A returned
/// completion has been checked against the family.
pub fn decide_instance(instance: &Instance, options: &DecideOptions) -> Result<Decision> {
    let sigma = instance.sigma();
    let family = instance.family();
    let dom = sigma.domain();
    let lazy = match options.mode {
        DecideMode::Full => false,
        DecideMode::Lazy => true,
        DecideMode::Auto => dom.window_count().saturating_mul(family.len()) > FULL_CLAUSE_LIMIT,
    };
    let config = SessionConfig {
        timeout: None,
        deadline: options.timeout.map(|t| Instant::now() + t),
    };
    let enc = CompletionEncoding {
        tuple_count: dom.tuple_count(),
    };
    let mut s = SolverSession::new(config);
    if let Some(path) = &options.drat {
        s.emit_proof(path)?;
    }
    s.new_vars(enc.tuple_count as u32);
    for d in 0..enc.tuple_count {
        s.prefer(enc.sign_lit(d, Sign::Plus));
    }
    for (d, sign) in sigma.set_entries() {
        s.add_clause(&[enc.sign_lit(d, sign)]);
    }
    if !lazy {
        add_avoidance(&mut s, &dom, family, &enc);
    }
    let patterns: Vec<Vec<Sign>> = family.patterns().map(|p| p.signs().to_vec()).collect();
    let mut added = vec![!lazy; dom.window_count()];
    let windows_dom = Domain::get(sigma.n(), sigma.r() + 1)?;
    // When the all-`+` word is allowed, an all-`+` mapping is a valid
    // baseline: windows that are still all `+` need no check.
    let mut previous: Option<Vec<SignState>> =
        (!family.contains_code(0)).then(|| vec![SignState::Plus; dom.tuple_count()]);
    let mut buf = Vec::with_capacity(sigma.r() + 1);
    let decision = loop {
        let model = match s.solve() {
            SolveResult::Sat(m) => m,
            SolveResult::Unsat => break Decision::NotCompletable,
            SolveResult::TimedOut => return Err(Error::Timeout),
        };
        let candidate = enc.decode(&model, sigma.n(), sigma.r())?;
        let states = candidate.states();
        let mut violated: Vec<Vec<usize>> = Vec::new();
        let mut check = |w: usize, tuples: &[usize], added: &mut [bool]| {
            if added[w] {
                return;
            }
            let code = crate::mapping::word_code(states, tuples).expect("complete candidate");
            if family.contains_code(code) {
                added[w] = true;
                violated.push(tuples.to_vec());
            }
        };
        // A window whose tuples kept their values was already checked, so
        // after the first round only windows around changed tuples are
        // looked at again.
        let changed: Option<Vec<usize>> = previous
            .as_ref()
            .map(|p| (0..states.len()).filter(|&d| p[d] != states[d]).collect())
            .filter(|c: &Vec<usize>| c.len() * (sigma.n() - sigma.r()) < dom.window_count());
        match changed {
            Some(changed) if lazy => {
                let mut window = Vec::with_capacity(sigma.r() + 1);
                for d in changed {
                    let t = dom.unrank(d)?;
                    for e in 1..=sigma.n() {
                        if t.elements().contains(&e) {
                            continue;
                        }
                        window.clear();
                        window.extend_from_slice(t.elements());
                        window.push(e);
                        window.sort_unstable();
                        dom.window_tuples(&window, &mut buf);
                        check(windows_dom.rank_unchecked(&window), &buf, &mut added);
                    }
                }
            }
            _ if lazy => {
                let mut w = 0usize;
                dom.for_each_window(|tuples| {
                    check(w, tuples, &mut added);
                    w += 1;
                });
            }
            _ => {}
        }
        if violated.is_empty() {
            if !candidate.is_avoiding(family)? || !sigma.is_leq(&candidate)? {
                return Err(Error::Verification("solver returned an invalid completion".into()));
            }
            break Decision::Completable(candidate);
        }
        for tuples in &violated {
            for p in &patterns {
                let clause: Vec<Lit> = tuples
                    .iter()
                    .zip(p)
                    .map(|(&t, &sg)| enc.sign_lit(t, sg.negate()))
                    .collect();
                s.add_clause(&clause);
            }
        }
        previous = Some(states.to_vec());
    };
    if let Some(path) = &options.drat {
        s.finish_proof()?;
        std::fs::write(path.with_extension("cnf"), export_dimacs(&s.to_cnf()))?;
    }
    Ok(decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::Cnf;

    fn formula(clauses: &[[i32; 3]]) -> ThreeSatFormula {
        let mut cnf = Cnf::new();
        for c in clauses {
            cnf.add_clause(c.iter().map(|&v| Lit::from_dimacs(v).unwrap()).collect::<Vec<_>>());
        }
        preprocess_3sat(&cnf).unwrap()
    }

    #[test]
    fn signotope_sizes() {
        let lib = Library::signotopes();
        let f = formula(&[[1, -2, 3], [-1, 2, 4]]);
        let c = compile(&f, &lib).unwrap();
        assert_eq!(c.plan.id, 1);
        assert_eq!(c.instance.n(), 3 * 4 + 5 * 2);
        assert!(c.combination.passed());
    }

    #[test]
    fn small_formulas_agree_with_sat() {
        let lib = Library::signotopes();
        for (clauses, sat) in [
            (vec![[1, 2, 3]], true),
            (vec![[1, 1, 1], [-1, -1, -1]], false),
            (vec![[1, 2, 2], [-1, 2, 2], [1, -2, -2], [-1, -2, -2]], false),
            (vec![[1, -2, 3], [-1, 2, -3], [2, 3, -1]], true),
        ] {
            let f = formula(&clauses);
            let c = compile(&f, &lib).unwrap();
            let d = decide_instance(&c.instance, &DecideOptions::default()).unwrap();
            assert_eq!(d.is_completable(), sat, "{clauses:?}");
            if let Decision::Completable(done) = d {
                assert!(f.is_satisfied_by(&read_assignment(&c, &done).unwrap()));
            }
        }
    }

    #[test]
    fn lazy_matches_full() {
        let lib = Library::signotopes();
        let f = formula(&[[1, 2, 2], [-1, 2, 2], [1, -2, -2], [-1, -2, -2]]);
        let c = compile(&f, &lib).unwrap();
        for mode in [DecideMode::Full, DecideMode::Lazy] {
            let opts = DecideOptions {
                mode,
                ..Default::default()
            };
            assert!(!decide_instance(&c.instance, &opts).unwrap().is_completable());
        }
    }

    #[test]
    fn empty_library_has_no_reduction() {
        let lib = Library::new(Family::alternating(3));
        assert!(matches!(
            compile(&formula(&[[1, 2, 3]]), &lib),
            Err(Error::NoReduction(_))
        ));
    }

    #[test]
    fn instance_text_round_trip() {
        let c = compile(&formula(&[[1, 2, 3]]), &Library::signotopes()).unwrap();
        let back = parse_instance(&c.instance.to_text()).unwrap();
        assert_eq!(back, c.instance);
        assert!(parse_instance("format instance\nversion 3\n").is_err());
    }
}
