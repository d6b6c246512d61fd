//! Sweeps over settings: gadget ladders per scenario, verdicts, and the
//! greedy-family study.

mod listings;
mod store;

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use listings::{listing_greedy, listing_hard};
pub use store::{render_summary, ResultsStore, StoredVerdict};

use crate::encode::GadgetSpec;
use crate::error::Result;
use crate::gadgets::{Gadget, Library};
use crate::mapping::{PartialSignMapping, SignState};
use crate::oracle::{brute_complete, greedy_classify, Completability};
use crate::parallel::par_map;
use crate::patterns::{enumerate_settings, Family, SymmetryGroup};
use crate::reduce::{compile_with, plan_if_available, preprocess_3sat, SCENARIOS};
use crate::sat::{Cnf, Lit};
use crate::search::{search_size_ladder, SearchOptions, SearchOutcome, SearchStats, StatsRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Hard {
        scenario: u8,
    },
    /// Some gadgets exist but no scenario closes.
    GadgetsOnly,
    NoGadget {
        // Stored verdicts carry their own n_max next to this one.
        #[serde(rename = "searched_to")]
        n_max: usize,
    },
    Timeout,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Hard { .. } => "hard",
            Verdict::GadgetsOnly => "gadgets-only",
            Verdict::NoGadget { .. } => "no-gadget",
            Verdict::Timeout => "timeout",
        }
    }

    pub fn is_hard(&self) -> bool {
        matches!(self, Verdict::Hard { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Hard { scenario } => write!(f, "hard (scenario {scenario})"),
            Verdict::NoGadget { n_max } => write!(f, "no gadget up to n={n_max}"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    /// Smallest size tried; `None` starts each spec at its minimum.
    pub n_min: Option<usize>,
    pub n_max: usize,
    pub search: SearchOptions,
}

impl ClassifyConfig {
    pub fn new(n_max: usize, search: SearchOptions) -> Self {
        ClassifyConfig {
            n_min: None,
            n_max,
            search,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lookup {
    Found,
    Absent,
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct SettingResult {
    pub family: Family,
    pub verdict: Verdict,
    pub library: Library,
    pub records: Vec<StatsRecord>,
    pub stats: SearchStats,
    pub notes: Vec<String>,
}

struct Ladders<'a> {
    family: &'a Family,
    config: &'a ClassifyConfig,
    seen: BTreeMap<GadgetSpec, Lookup>,
    library: Library,
    records: Vec<StatsRecord>,
    stats: SearchStats,
}

impl Ladders<'_> {
    fn lookup(&mut self, spec: GadgetSpec) -> Result<Lookup> {
        if let Some(&l) = self.seen.get(&spec) {
            return Ok(l);
        }
        let n_min = self.config.n_min.unwrap_or(0);
        let rungs = search_size_ladder(self.family, spec, n_min, self.config.n_max, &self.config.search)?;
        let mut result = Lookup::Absent;
        for rung in &rungs {
            self.stats.absorb(&rung.report.stats);
            self.records
                .push(StatsRecord::new(self.family, spec, rung, self.config.search.variant));
            match &rung.report.outcome {
                SearchOutcome::Found(g) => {
                    // Always re-verified by the exhaustive oracle.
                    let g = Gadget::verified_at(spec, self.family.clone(), g.clone(), Vec::new(), &rung.starts)?;
                    self.library.insert(g)?;
                    result = Lookup::Found;
                }
                SearchOutcome::Timeout => {
                    if result != Lookup::Found {
                        result = Lookup::TimedOut;
                    }
                }
                SearchOutcome::NoGadget => {}
            }
        }
        self.seen.insert(spec, result);
        Ok(result)
    }
}

/// One clause over three fresh variables, used as a dry run of the
/// reduction.
fn one_clause() -> crate::reduce::ThreeSatFormula {
    let mut cnf = Cnf::new();
    cnf.add_clause(vec![Lit::pos(1), Lit::pos(2), Lit::pos(3)]);
    preprocess_3sat(&cnf).expect("valid formula")
}

/// Runs the scenario ladders for one setting. Scenarios are tried in order
/// and gadget searches are shared between them.
pub fn classify_setting(family: &Family, config: &ClassifyConfig) -> Result<SettingResult> {
    let mut l = Ladders {
        family,
        config,
        seen: BTreeMap::new(),
        library: Library::new(family.clone()),
        records: Vec::new(),
        stats: SearchStats::default(),
    };
    let mut notes = Vec::new();
    let mut verdict = None;
    let mut blocked_by_timeout = false;
    'scenarios: for id in SCENARIOS {
        let (clause, props, _) = crate::reduce::scenario_requirements(id).expect("known scenario");
        for p in props {
            match l.lookup(p)? {
                Lookup::Found => {}
                Lookup::Absent => continue 'scenarios,
                Lookup::TimedOut => {
                    blocked_by_timeout = true;
                    continue 'scenarios;
                }
            }
        }
        let clauses = match clause {
            Some(s) => vec![GadgetSpec::Clause(s)],
            None => GadgetSpec::all_clauses(),
        };
        let mut have_clause = false;
        for c in clauses {
            match l.lookup(c)? {
                Lookup::Found => {
                    have_clause = true;
                    break;
                }
                Lookup::Absent => {}
                Lookup::TimedOut => blocked_by_timeout = true,
            }
        }
        if !have_clause {
            continue;
        }
        let plan = plan_if_available(id, &l.library).expect("gadgets just found");
        match compile_with(&one_clause(), &l.library, plan) {
            Ok(_) => {
                verdict = Some(Verdict::Hard { scenario: id });
                break;
            }
            Err(e) => notes.push(format!("scenario {id} dry run failed: {e}")),
        }
    }
    let verdict = verdict.unwrap_or(if blocked_by_timeout {
        Verdict::Timeout
    } else if !l.library.is_empty() {
        Verdict::GadgetsOnly
    } else {
        Verdict::NoGadget { n_max: config.n_max }
    });
    Ok(SettingResult {
        family: family.clone(),
        verdict,
        library: l.library,
        records: l.records,
        stats: l.stats,
        notes,
    })
}

/// Classifies every family, reusing stored results when the store has a
/// record made with the same configuration.
pub fn classify_many(
    families: &[Family],
    config: &ClassifyConfig,
    store: Option<&ResultsStore>,
    jobs: usize,
) -> Vec<Result<SettingResult>> {
    par_map(families, jobs, |f| {
        if let Some(store) = store {
            if let Some(done) = store.load_matching(f, config)? {
                return Ok(done);
            }
        }
        let result = classify_setting(f, config)?;
        if let Some(store) = store {
            store.save(&result, config)?;
        }
        Ok(result)
    })
}

/// The 144 canonical rank-3 settings within reach of the combination lemma.
pub fn rank3_settings() -> Vec<Family> {
    enumerate_settings(3, 1, SymmetryGroup::Reversal)
        .into_iter()
        .map(|c| c.canonical)
        .collect()
}

pub fn classify_rank3(
    config: &ClassifyConfig,
    store: Option<&ResultsStore>,
    jobs: usize,
) -> Vec<Result<SettingResult>> {
    classify_many(&rank3_settings(), config, store, jobs)
}

/// The rank-4 benchmark universe: canonical settings over patterns of length
/// 5 without two consecutive `+`.
pub fn rank4_settings() -> Vec<Family> {
    enumerate_settings(4, 1, SymmetryGroup::Reversal)
        .into_iter()
        .map(|c| c.canonical)
        .collect()
}

/// A seeded sample of the rank-4 universe, in universe order.
pub fn rank4_sample(sample_size: usize, seed: u64) -> Vec<Family> {
    let all = rank4_settings();
    let mut idx: Vec<usize> = (0..all.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(sample_size);
    idx.sort_unstable();
    idx.into_iter().map(|i| all[i].clone()).collect()
}

/// Ladders at exactly n = 6, as in the rank-4 sweep.
pub fn classify_rank4_benchmark(
    sample_size: usize,
    seed: u64,
    search: SearchOptions,
    store: Option<&ResultsStore>,
    jobs: usize,
) -> Vec<Result<SettingResult>> {
    let config = ClassifyConfig {
        n_min: Some(6),
        n_max: 6,
        search,
    };
    classify_many(&rank4_sample(sample_size, seed), &config, store, jobs)
}

/// Counts per verdict label, in a fixed order.
pub fn summarize<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = ["hard", "gadgets-only", "no-gadget", "timeout"]
        .into_iter()
        .map(|k| (k, 0))
        .collect();
    for v in verdicts {
        *counts.entry(v.label()).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyRow {
    pub family: String,
    pub exhaustive_cases: u64,
    pub exhaustive_matches: u64,
    pub sampled_cases: u64,
    pub sampled_matches: u64,
    /// A partial mapping where greedy and the oracle disagree.
    pub counterexample: Option<String>,
}

impl GreedyRow {
    pub fn match_rate(&self) -> f64 {
        let total = self.exhaustive_cases + self.sampled_cases;
        if total == 0 {
            1.0
        } else {
            (self.exhaustive_matches + self.sampled_matches) as f64 / total as f64
        }
    }

    pub fn exact(&self) -> bool {
        self.exhaustive_cases == self.exhaustive_matches && self.sampled_cases == self.sampled_matches
    }
}

fn greedy_agrees(sigma: &PartialSignMapping, family: &Family) -> Result<bool> {
    let greedy = greedy_classify(sigma, family)? == Completability::Completable;
    Ok(greedy == brute_complete(sigma, family)?.is_some())
}

/// Mixed-radix enumeration of all `3^t` partial mappings.
pub fn for_each_partial(n: usize, r: usize, mut visit: impl FnMut(&PartialSignMapping) -> Result<()>) -> Result<()> {
    let mut sigma = PartialSignMapping::empty(n, r)?;
    let t = sigma.len();
    let mut digits = vec![0u8; t];
    let state = |g: u8| match g {
        0 => SignState::Unset,
        1 => SignState::Plus,
        _ => SignState::Minus,
    };
    loop {
        visit(&sigma)?;
        let mut i = 0;
        loop {
            if i == t {
                return Ok(());
            }
            digits[i] = (digits[i] + 1) % 3;
            sigma.set(i, state(digits[i]));
            if digits[i] != 0 {
                break;
            }
            i += 1;
        }
    }
}

pub fn random_partial(rng: &mut impl Rng, n: usize, r: usize) -> PartialSignMapping {
    let mut sigma = PartialSignMapping::empty(n, r).expect("valid dimensions");
    for d in 0..sigma.len() {
        sigma.set(
            d,
            match rng.gen_range(0..3) {
                0 => SignState::Unset,
                1 => SignState::Plus,
                _ => SignState::Minus,
            },
        );
    }
    sigma
}

/// Greedy versus exhaustive completion for one family: every partial mapping
/// at n = 5 and `samples` random ones at n = 6.
pub fn greedy_study_family(family: &Family, samples: u64, seed: u64) -> Result<GreedyRow> {
    let r = family.rank();
    let mut row = GreedyRow {
        family: family.id(),
        exhaustive_cases: 0,
        exhaustive_matches: 0,
        sampled_cases: 0,
        sampled_matches: 0,
        counterexample: None,
    };
    for_each_partial(r + 2, r, |s| {
        row.exhaustive_cases += 1;
        if greedy_agrees(s, family)? {
            row.exhaustive_matches += 1;
        } else if row.counterexample.is_none() {
            row.counterexample = Some(s.render());
        }
        Ok(())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let s = random_partial(&mut rng, r + 3, r);
        row.sampled_cases += 1;
        if greedy_agrees(&s, family)? {
            row.sampled_matches += 1;
        } else if row.counterexample.is_none() {
            row.counterexample = Some(s.render());
        }
    }
    Ok(row)
}

pub fn greedy_family_study(samples: u64, seed: u64, jobs: usize) -> Result<Vec<GreedyRow>> {
    let fams = listing_greedy();
    par_map(&fams, jobs, |f| greedy_study_family(f, samples, seed))
        .into_iter()
        .collect()
}
