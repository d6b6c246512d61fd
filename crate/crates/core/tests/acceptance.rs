//! One PASS/FAIL line per acceptance criterion. Set
//! `GADGETSMITH_FULL_SWEEP=SECS` to run the whole rank-3 sweep at n <= 6 for
//! criterion 4, with that timeout per search (`0` for none), instead of the
//! stratified subset.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use cpu_time::ProcessTime;

use gadgetsmith::classify::{
    classify_many, classify_rank3, classify_rank4_benchmark, for_each_partial, greedy_family_study, listing_greedy,
    listing_hard, random_partial, rank3_settings, ClassifyConfig, SettingResult,
};
use gadgetsmith::encode::CompletionChecker;
use gadgetsmith::gadgets::{
    even_rank_clause, even_rank_propagator, gs_clause, gs_composed, gs_negator, gs_propagator, Gadget, Library,
};
use gadgetsmith::oracle::brute_complete;
use gadgetsmith::patterns::{enumerate_settings, pattern_universe, SymmetryGroup};
use gadgetsmith::sat::SessionConfig;
use gadgetsmith::search::{verify_gadget_sat, SearchOptions, SearchVariant};
use gadgetsmith::{Family, Sign};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;

// CPU-time budgets, summed over all threads of the process.
const COUNTS_BUDGET: Duration = Duration::from_secs(1);
const HAND_GADGETS_BUDGET: Duration = Duration::from_secs(10);
const SAT_GADGETS_BUDGET: Duration = Duration::from_secs(60);
const SWEEP5_BUDGET: Duration = Duration::from_secs(30 * 60);
const GREEDY_EXHAUSTIVE_BUDGET: Duration = Duration::from_secs(60 * 60);
const REDUCTION_BUDGET: Duration = Duration::from_secs(10 * 60);

const HARD_AT_FIVE: usize = 31;
const HARD_AT_SIX: usize = 41;
const GREEDY_SAMPLES: u64 = 100_000;
const FORMULAS: usize = 50;
const RANDOM_CASES: usize = 10_000;
const RANK4_SAMPLE: usize = 20;

type Outcome = Result<String, String>;

fn within(start: ProcessTime, budget: Duration, what: &str) -> Result<f64, String> {
    let t = start.elapsed();
    if t > budget {
        return Err(format!(
            "{what} took {:.1} CPU s, budget {}s",
            t.as_secs_f64(),
            budget.as_secs()
        ));
    }
    Ok(t.as_secs_f64())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn settings_counts() -> Outcome {
    let start = ProcessTime::now();
    let rank3 = enumerate_settings(3, 1, SymmetryGroup::Reversal);
    check(rank3.len() == 144, || format!("{} rank-3 settings", rank3.len()))?;
    // Burnside over the reversal group, counted independently of the
    // enumeration.
    let universe = pattern_universe(4, 1);
    let k = universe.len();
    let fixed = (0u32..1 << k)
        .filter(|mask| {
            let set: BTreeSet<_> = (0..k)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| universe[i].clone())
                .collect();
            set.iter().all(|p| set.contains(&p.reversed()))
        })
        .count();
    check((1 << k) + fixed == 2 * 144, || format!("(2^{k} + {fixed}) / 2 != 144"))?;
    let universe4 = pattern_universe(5, 1);
    check(universe4.len() == 13, || format!("{} rank-4 patterns", universe4.len()))?;
    let rank4 = enumerate_settings(4, 1, SymmetryGroup::Reversal);
    check(rank4.len() == 4352, || format!("{} rank-4 settings", rank4.len()))?;
    let t = within(start, COUNTS_BUDGET, "enumeration")?;
    Ok(format!(
        "144 = (256 + {fixed}) / 2, 13 patterns, 4352 rank-4 settings, {t:.2}s"
    ))
}

fn oracle_passes(g: &Gadget) -> Result<(), String> {
    let report = g.verify().map_err(|e| format!("{}: {e}", g.spec()))?;
    check(report.passed(), || {
        format!("{} fails on {} rows", g.spec(), report.failures().count())
    })
}

fn hand_built_gadgets() -> Outcome {
    let start = ProcessTime::now();
    let mut gadgets = vec![gs_clause()];
    for s in [Sign::Plus, Sign::Minus] {
        gadgets.push(gs_propagator(s));
        gadgets.push(gs_negator(s));
        gadgets.push(gs_composed(s, Sign::Plus));
        gadgets.push(gs_composed(s, Sign::Minus));
    }
    gadgets.extend(Library::even_rank(4).map_err(|e| e.to_string())?.iter().cloned());
    for g in &gadgets {
        oracle_passes(g)?;
    }
    let t_oracle = within(start, HAND_GADGETS_BUDGET, "oracle verification")?;
    let start = ProcessTime::now();
    let six = [
        even_rank_propagator(6, Sign::Plus),
        even_rank_propagator(6, Sign::Minus),
        even_rank_clause(6),
    ];
    for g in six {
        let g = g.map_err(|e| e.to_string())?;
        let report = verify_gadget_sat(g.entries(), &g.problem()).map_err(|e| e.to_string())?;
        check(report.passed(), || format!("r=6 {} fails", g.spec()))?;
    }
    let t_sat = within(start, SAT_GADGETS_BUDGET, "r=6 verification")?;
    Ok(format!(
        "{} gadgets by oracle in {t_oracle:.2}s, 3 rank-6 gadgets by SAT in {t_sat:.2}s",
        gadgets.len()
    ))
}

fn advanced() -> SearchOptions {
    SearchOptions::new(SearchVariant::Advanced, None)
}

fn unwrap_all(results: Vec<gadgetsmith::Result<SettingResult>>) -> Result<Vec<SettingResult>, String> {
    results.into_iter().map(|r| r.map_err(|e| e.to_string())).collect()
}

fn hard_set(results: &[SettingResult]) -> BTreeSet<Family> {
    results
        .iter()
        .filter(|r| r.verdict.is_hard())
        .map(|r| r.family.clone())
        .collect()
}

fn search_at_five(results: &[SettingResult], elapsed: Duration) -> Outcome {
    check(elapsed <= SWEEP5_BUDGET, || {
        format!("took {:.0}s", elapsed.as_secs_f64())
    })?;
    let hard = hard_set(results);
    check(hard.len() == HARD_AT_FIVE, || {
        format!("{} hard, expected {HARD_AT_FIVE}", hard.len())
    })?;
    let listing: BTreeSet<Family> = listing_hard().into_iter().collect();
    let stray: Vec<String> = hard.difference(&listing).map(|f| f.id()).collect();
    check(stray.is_empty(), || format!("hard but not listed: {}", stray.join(" ")))?;
    Ok(format!(
        "{HARD_AT_FIVE} of 144 hard, all listed, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn search_at_six(hard_at_five: &BTreeSet<Family>) -> Outcome {
    let listing: BTreeSet<Family> = listing_hard().into_iter().collect();
    let config = ClassifyConfig::new(6, advanced());
    let start = ProcessTime::now();
    if let Ok(secs) = std::env::var("GADGETSMITH_FULL_SWEEP") {
        let secs: u64 = secs
            .parse()
            .map_err(|_| format!("GADGETSMITH_FULL_SWEEP={secs} is not a number"))?;
        let timeout = (secs > 0).then(|| Duration::from_secs(secs));
        let config = ClassifyConfig::new(6, SearchOptions::new(SearchVariant::Advanced, timeout));
        let results = unwrap_all(classify_rank3(&config, None, 0))?;
        let hard = hard_set(&results);
        check(hard == listing, || {
            let extra: Vec<_> = hard.difference(&listing).map(|f| f.id()).collect();
            let missing: Vec<_> = listing.difference(&hard).map(|f| f.id()).collect();
            format!("extra [{}] missing [{}]", extra.join(" "), missing.join(" "))
        })?;
        return Ok(format!(
            "full sweep: exactly the {HARD_AT_SIX} listed, {:.0}s",
            start.elapsed().as_secs_f64()
        ));
    }
    // Stratified fallback: every listed family that n = 5 does not settle.
    let needs_six: Vec<Family> = listing.difference(hard_at_five).cloned().collect();
    check(needs_six.len() == HARD_AT_SIX - HARD_AT_FIVE, || {
        format!("{} families need n=6", needs_six.len())
    })?;
    let results = unwrap_all(classify_many(&needs_six, &config, None, 0))?;
    let soft: Vec<String> = results
        .iter()
        .filter(|r| !r.verdict.is_hard())
        .map(|r| format!("{} {}", r.family.id(), r.verdict))
        .collect();
    check(soft.is_empty(), || format!("not certified: {}", soft.join("; ")))?;
    Ok(format!(
        "stratified: all {} n=6 families hard, {:.0}s (full sweep via GADGETSMITH_FULL_SWEEP)",
        needs_six.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn greedy_study() -> Outcome {
    let families = listing_greedy();
    check(families.len() == 20, || format!("{} greedy families", families.len()))?;
    let start = ProcessTime::now();
    let rows = greedy_family_study(0, 0, 0).map_err(|e| e.to_string())?;
    let t = within(start, GREEDY_EXHAUSTIVE_BUDGET, "exhaustive study")?;
    for row in &rows {
        check(
            row.exhaustive_cases == 59049 && row.exhaustive_matches == row.exhaustive_cases,
            || format!("{} disagrees on {:?}", row.family, row.counterexample),
        )?;
    }
    let start = ProcessTime::now();
    let rows = greedy_family_study(GREEDY_SAMPLES, 7, 0).map_err(|e| e.to_string())?;
    for row in &rows {
        check(
            row.sampled_cases == GREEDY_SAMPLES && row.sampled_matches == row.sampled_cases,
            || format!("{} disagrees at n=6 on {:?}", row.family, row.counterexample),
        )?;
    }
    Ok(format!(
        "20 families exact over 3^10 ({t:.1}s), no counterexample in {GREEDY_SAMPLES} samples each ({:.1}s)",
        start.elapsed().as_secs_f64()
    ))
}

fn searched_library(family: &str, results: &[SettingResult]) -> Result<Library, String> {
    let f = Family::parse(family, 3).map_err(|e| e.to_string())?;
    let r = results
        .iter()
        .find(|r| r.family == f)
        .ok_or(format!("{family} missing"))?;
    check(r.verdict.is_hard(), || format!("{family} is {}", r.verdict))?;
    Ok(r.library.clone())
}

fn reduction(results: &[SettingResult]) -> Outcome {
    let start = ProcessTime::now();
    let mut libraries = vec![("signotopes".to_string(), Library::signotopes())];
    // Listed families whose gadgets leave private elements on either side.
    for id in ["+-+-,----", "+-+-,+--+,--+-", "+-+-,+--+,+---,-+-+,--+-,----"] {
        libraries.push((id.to_string(), searched_library(id, results)?));
    }
    libraries.push(("even rank 4".into(), Library::even_rank(4).map_err(|e| e.to_string())?));
    let mut parts = Vec::new();
    for (i, (name, lib)) in libraries.iter().enumerate() {
        let t = ProcessTime::now();
        let (sat, unsat) = common::end_to_end(lib, FORMULAS, 100 + i as u64);
        parts.push(format!("{name} {sat}+{unsat} in {:.0}s", t.elapsed().as_secs_f64()));
    }
    let t = within(start, REDUCTION_BUDGET, "reductions")?;
    Ok(format!("{FORMULAS} formulas each: {}, {t:.0}s", parts.join(", ")))
}

fn agree(
    checker: &mut CompletionChecker,
    family: &Family,
    sigma: &gadgetsmith::PartialSignMapping,
) -> Result<(), String> {
    let brute = brute_complete(sigma, family).map_err(|e| e.to_string())?;
    let sat = checker.complete(sigma).map_err(|e| e.to_string())?;
    check(brute.is_some() == sat.is_some(), || {
        format!("{family}: disagree on {sigma}")
    })?;
    if let Some(full) = sat {
        check(
            full.is_avoiding(family).unwrap_or(false) && sigma.is_leq(&full).unwrap_or(false),
            || format!("{family}: bad completion of {sigma}"),
        )?;
    }
    Ok(())
}

fn oracle_vs_sat() -> Outcome {
    let start = ProcessTime::now();
    let exhaustive = [Family::alternating(3), Family::parse("+-+-,--+-", 3).unwrap()];
    for family in &exhaustive {
        let mut checker = CompletionChecker::new(5, 3, family, SessionConfig::default()).map_err(|e| e.to_string())?;
        let mut err = None;
        for_each_partial(5, 3, |s| {
            if err.is_none() {
                err = agree(&mut checker, family, s).err();
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
        if let Some(e) = err {
            return Err(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let random: Vec<Family> = rank3_settings().into_iter().skip(1).step_by(14).take(10).collect();
    check(random.len() == 10, || "too few settings".into())?;
    for family in &random {
        let mut checker = CompletionChecker::new(6, 3, family, SessionConfig::default()).map_err(|e| e.to_string())?;
        for _ in 0..RANDOM_CASES {
            agree(&mut checker, family, &random_partial(&mut rng, 6, 3))?;
        }
    }
    Ok(format!(
        "2 families over all 3^10 at n=5, 10 families x {RANDOM_CASES} random at n=6, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn variants(advanced: &[SettingResult], advanced_time: Duration) -> Outcome {
    let config = ClassifyConfig::new(5, SearchOptions::new(SearchVariant::Basic, None));
    let start = ProcessTime::now();
    let basic = unwrap_all(classify_rank3(&config, None, 0))?;
    let basic_time = start.elapsed();
    let labels = |rs: &[SettingResult]| -> BTreeMap<Family, &'static str> {
        rs.iter().map(|r| (r.family.clone(), r.verdict.label())).collect()
    };
    check(labels(&basic) == labels(advanced), || "verdicts differ".into())?;
    let pa: u64 = advanced.iter().map(|r| r.stats.prunings()).sum();
    let pb: u64 = basic.iter().map(|r| r.stats.prunings()).sum();
    check(pa < pb, || format!("advanced {pa} prunings, basic {pb}"))?;
    Ok(format!(
        "prunings advanced {pa} < basic {pb}, same verdicts; {:.1}s vs {:.1}s",
        advanced_time.as_secs_f64(),
        basic_time.as_secs_f64()
    ))
}

fn rank4_sample() -> Outcome {
    let start = ProcessTime::now();
    let results = unwrap_all(classify_rank4_benchmark(RANK4_SAMPLE, 1, advanced(), None, 0))?;
    check(results.len() == RANK4_SAMPLE, || format!("{} settings", results.len()))?;
    let mut hard = 0;
    let mut verified = 0;
    for r in results.iter().filter(|r| r.verdict.is_hard()) {
        hard += 1;
        for g in r.library.iter() {
            oracle_passes(g).map_err(|e| format!("{}: {e}", r.family))?;
            verified += 1;
        }
    }
    Ok(format!(
        "{RANK4_SAMPLE} settings at n=6, {hard} hard, {verified} gadgets oracle-verified, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

struct Runner {
    only: Vec<u32>,
    failures: u32,
}

impl Runner {
    fn wants(&self, id: u32) -> bool {
        self.only.is_empty() || self.only.contains(&id)
    }

    fn run(&mut self, id: u32, name: &str, criterion: impl FnOnce() -> Outcome) {
        if !self.wants(id) {
            return;
        }
        match criterion() {
            Ok(detail) => println!("criterion {id} PASS {name}: {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("criterion {id} FAIL {name}: {detail}");
            }
        }
    }
}

fn main() {
    // Numeric arguments select criteria; flags from the test runner are ignored.
    let only = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut runner = Runner { only, failures: 0 };
    runner.run(1, "setting counts", settings_counts);
    runner.run(2, "hand-built gadgets", hand_built_gadgets);

    if [3, 4, 6, 8].iter().any(|&id| runner.wants(id)) {
        let start = ProcessTime::now();
        let at_five = unwrap_all(classify_rank3(&ClassifyConfig::new(5, advanced()), None, 0));
        let five_time = start.elapsed();
        runner.run(3, "search at n=5", || search_at_five(at_five.as_ref()?, five_time));
        runner.run(4, "search at n<=6", || search_at_six(&hard_set(at_five.as_ref()?)));
        runner.run(6, "end-to-end reduction", || reduction(at_five.as_ref()?));
        runner.run(8, "variant comparison", || variants(at_five.as_ref()?, five_time));
    }
    runner.run(5, "greedy study", greedy_study);
    runner.run(7, "oracle vs SAT", oracle_vs_sat);
    runner.run(9, "rank-4 sample", rank4_sample);
    if runner.failures > 0 {
        println!("{} criterion(s) failed", runner.failures);
        std::process::exit(1);
    }
}
