mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use gadgetsmith::classify::{classify_rank3, classify_rank4_benchmark, ClassifyConfig, ResultsStore, SettingResult};
use gadgetsmith::encode::{GadgetSpec, WindowMode};
use gadgetsmith::gadgets::{load_library, parse_gadget, render_gadget, save_gadget, Gadget, Library};
use gadgetsmith::patterns::{enumerate_settings, SymmetryGroup};
use gadgetsmith::reduce::{compile, decide_instance, preprocess_3sat, DecideMode, DecideOptions, Decision, Instance};
use gadgetsmith::sat::parse_dimacs;
use gadgetsmith::search::{search_size_ladder, SearchOptions, SearchOutcome, SearchVariant};
use gadgetsmith::{Error, Family};

use output::Output;

/// Exit codes shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok = 0,
    Negative = 1,
    Usage = 2,
    Timeout = 3,
    NoReduction = 4,
    Failure = 5,
}

struct Failed(Status, String);

impl From<Error> for Failed {
    fn from(e: Error) -> Failed {
        let status = match &e {
            Error::Timeout => Status::Timeout,
            Error::NoReduction(_) | Error::Combination(_) => Status::NoReduction,
            Error::Verification(_) => Status::Negative,
            Error::Io(_) => Status::Failure,
            _ => Status::Usage,
        };
        Failed(status, e.to_string())
    }
}

type CmdResult = Result<Status, Failed>;

/// Finds, verifies and composes gadgets for completion problems on
/// pattern-avoiding sign mappings.
///
/// Exit codes: 0 success or positive verdict, 1 negative verdict, 2 usage or
/// input error, 3 timeout, 4 no reduction available, 5 I/O failure.
#[derive(Debug, Parser)]
#[command(name = "gadgetsmith", version)]
struct Cli {
    /// Print one `key value` line per result instead of prose.
    #[arg(long, global = true)]
    machine: bool,

    /// Keyed text file with defaults for any long flag (`n-max 6`); flags on
    /// the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forbidden-pattern families.
    #[command(subcommand)]
    Settings(SettingsCmd),
    /// Search for and verify gadgets.
    #[command(subcommand)]
    Gadget(GadgetCmd),
    /// Sweep settings and record verdicts.
    #[command(subcommand)]
    Classify(ClassifyCmd),
    /// Compile a 3-CNF formula into a completion instance.
    Compile(CompileArgs),
    /// Decide whether an instance has an avoiding completion.
    Decide(DecideArgs),
    /// Print an instance as a word over + - ?.
    Render(RenderArgs),
}

#[derive(Debug, Subcommand)]
enum SettingsCmd {
    /// Print canonical families, one per line.
    Enumerate {
        /// Rank r; patterns have length r + 1.
        #[arg(long, default_value_t = 3)]
        rank: usize,
        /// Longest run of `+` allowed in a pattern.
        #[arg(long, default_value_t = 1)]
        plus_run_bound: usize,
        /// Symmetry used to identify settings.
        #[arg(long, default_value = "reversal")]
        group: SymmetryGroup,
        /// Print only the number of settings.
        #[arg(long)]
        count: bool,
    },
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// Comma-separated forbidden words, e.g. `+-+-,-+-+`; `empty` for none.
    #[arg(long)]
    family: String,
    /// Rank, needed only for the empty family.
    #[arg(long)]
    rank: Option<usize>,
}

impl FamilyArgs {
    fn family(&self) -> Result<Family, Failed> {
        Ok(match self.rank {
            Some(r) => Family::parse(&self.family, r)?,
            None => Family::parse_infer(&self.family)?,
        })
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Pruning variant.
    #[arg(long, default_value = "advanced")]
    variant: SearchVariant,
    /// Seconds per gadget search; unlimited when absent.
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    /// Propagator window placements: `flush` or `any`.
    #[arg(long, default_value = "any")]
    windows: WindowMode,
}

impl SearchArgs {
    fn options(&self) -> Result<SearchOptions, Failed> {
        let mut o = SearchOptions::new(self.variant, seconds(self.timeout)?);
        o.windows = self.windows;
        Ok(o)
    }
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, Failed> {
    s.map(|s| Duration::try_from_secs_f64(s).map_err(|_| Failed(Status::Usage, format!("bad timeout {s}"))))
        .transpose()
}

#[derive(Debug, Subcommand)]
enum GadgetCmd {
    /// Search sizes up to `--n-max` for a gadget realising `--spec`.
    Search {
        #[command(flatten)]
        family: FamilyArgs,
        /// `prop:x1x2` or `clause:s1s2s3`, e.g. `prop:++` or `clause:+-+`.
        #[arg(long)]
        spec: GadgetSpec,
        /// Largest element count tried.
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Smallest element count tried.
        #[arg(long)]
        n_min: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the gadget here; printed when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a gadget file against its truth table by exhaustive completion.
    Verify { path: PathBuf },
}

#[derive(Debug, Subcommand)]
enum ClassifyCmd {
    /// All 144 canonical rank-3 settings.
    Rank3 {
        /// Largest gadget size.
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        /// Smallest gadget size; each spec's minimum when absent.
        #[arg(long)]
        n_min: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Results directory; resumes finished settings.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A seeded sample of the rank-4 benchmark settings at n = 6.
    Rank4 {
        /// Number of settings.
        #[arg(long, default_value_t = 20)]
        sample: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        search: SearchArgs,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Results directory; resumes finished settings.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CompileArgs {
    /// DIMACS CNF input with at most three literals per clause.
    #[arg(long)]
    cnf: PathBuf,
    #[command(flatten)]
    family: FamilyArgs,
    /// Directory of `.gadget` files; the built-in library is used when
    /// absent and one exists for the family.
    #[arg(long)]
    gadgets: Option<PathBuf>,
    /// Write the instance here; printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Full,
    Lazy,
}

#[derive(Debug, Args)]
struct DecideArgs {
    path: PathBuf,
    /// Write a DRAT proof here, with the CNF next to it as `.cnf`.
    #[arg(long)]
    drat: Option<PathBuf>,
    /// Seconds before giving up.
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    /// Window constraints up front (`full`), on demand (`lazy`), or by size.
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    /// Write the completion here when one exists.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    path: PathBuf,
}

fn settings(cmd: SettingsCmd, out: &Output) -> CmdResult {
    let SettingsCmd::Enumerate {
        rank,
        plus_run_bound,
        group,
        count,
    } = cmd;
    if !(2..=6).contains(&rank) {
        return Err(Failed(Status::Usage, format!("rank {rank} is outside 2..=6")));
    }
    let classes = enumerate_settings(rank, plus_run_bound, group);
    if !count {
        for c in &classes {
            out.kv("setting", c.canonical.id());
        }
    }
    out.kv("count", classes.len());
    Ok(Status::Ok)
}

fn gadget(cmd: GadgetCmd, out: &Output) -> CmdResult {
    match cmd {
        GadgetCmd::Search {
            family,
            spec,
            n_max,
            n_min,
            search,
            out: path,
        } => {
            let family = family.family()?;
            let options = search.options()?;
            let rungs = search_size_ladder(&family, spec, n_min.unwrap_or(0), n_max, &options)?;
            let mut timed_out = false;
            for rung in &rungs {
                let s = &rung.report.stats;
                out.text(format!(
                    "n={} windows at {:?}: {} ({} candidates, {} prunings, {:.2}s)",
                    rung.n,
                    rung.starts,
                    rung.report.outcome.label(),
                    s.candidates,
                    s.prunings(),
                    s.elapsed_secs
                ));
                match &rung.report.outcome {
                    SearchOutcome::Found(sigma) => {
                        let g = Gadget::verified_at(spec, family.clone(), sigma.clone(), Vec::new(), &rung.starts)?;
                        out.kv("result", "found");
                        out.kv("spec", spec);
                        out.kv("n", g.n());
                        out.kv("size", g.size());
                        match path {
                            Some(p) => {
                                save_gadget(&g, &p)?;
                                out.kv("file", p.display());
                            }
                            None => out.raw(render_gadget(&g)),
                        }
                        return Ok(Status::Ok);
                    }
                    SearchOutcome::Timeout => timed_out = true,
                    SearchOutcome::NoGadget => {}
                }
            }
            if timed_out {
                out.kv("result", "timeout");
                Ok(Status::Timeout)
            } else {
                out.kv("result", format!("no gadget up to n={n_max}"));
                Ok(Status::Negative)
            }
        }
        GadgetCmd::Verify { path } => {
            let text = std::fs::read_to_string(&path).map_err(Error::from)?;
            match parse_gadget(&text) {
                Ok(g) => {
                    out.kv("result", "verified");
                    out.kv("spec", g.spec());
                    out.kv("describe", g.spec().describe());
                    out.kv("n", g.n());
                    out.kv("size", g.size());
                    Ok(Status::Ok)
                }
                Err(Error::Verification(msg)) => {
                    out.kv("result", "failed");
                    out.kv("reason", msg);
                    Ok(Status::Negative)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn report_settings(
    results: Vec<gadgetsmith::Result<SettingResult>>,
    store: Option<&ResultsStore>,
    out: &Output,
) -> CmdResult {
    let mut ok = Vec::new();
    let mut failures = 0;
    for r in results {
        match r {
            Ok(r) => {
                out.kv("setting", format!("{} {}", r.family.id(), r.verdict.label()));
                ok.push(r);
            }
            Err(e) => {
                failures += 1;
                eprintln!("error: {e}");
            }
        }
    }
    let summary = match store {
        Some(s) => s.write_summary(&ok)?,
        None => gadgetsmith::classify::render_summary(&ok),
    };
    let counts = gadgetsmith::classify::summarize(ok.iter().map(|r| &r.verdict));
    for (label, n) in &counts {
        out.kv(label, n);
    }
    out.text(summary.trim_end());
    let prunings: u64 = ok.iter().map(|r| r.stats.prunings()).sum();
    out.kv("prunings", prunings);
    if failures > 0 {
        return Err(Failed(Status::Failure, format!("{failures} setting(s) failed")));
    }
    Ok(Status::Ok)
}

fn classify(cmd: ClassifyCmd, out: &Output) -> CmdResult {
    match cmd {
        ClassifyCmd::Rank3 {
            n_max,
            n_min,
            search,
            jobs,
            out: dir,
        } => {
            if n_max < 4 {
                return Err(Failed(Status::Usage, "--n-max must be at least 4".into()));
            }
            let config = ClassifyConfig {
                n_min,
                n_max,
                search: search.options()?,
            };
            let store = dir.map(ResultsStore::open).transpose()?;
            let results = classify_rank3(&config, store.as_ref(), jobs);
            report_settings(results, store.as_ref(), out)
        }
        ClassifyCmd::Rank4 {
            sample,
            seed,
            search,
            jobs,
            out: dir,
        } => {
            let store = dir.map(ResultsStore::open).transpose()?;
            let results = classify_rank4_benchmark(sample, seed, search.options()?, store.as_ref(), jobs);
            report_settings(results, store.as_ref(), out)
        }
    }
}

fn library_for(family: &Family, dir: Option<&Path>) -> Result<Library, Failed> {
    Ok(match dir {
        Some(d) => load_library(d, family)?,
        None => Library::builtin(family).unwrap_or_else(|| Library::new(family.clone())),
    })
}

fn compile_cmd(args: CompileArgs, out: &Output) -> CmdResult {
    let family = args.family.family()?;
    let text = std::fs::read_to_string(&args.cnf).map_err(Error::from)?;
    let formula = preprocess_3sat(&parse_dimacs(&text)?)?;
    let lib = library_for(&family, args.gadgets.as_deref())?;
    let compiled = compile(&formula, &lib)?;
    out.kv("scenario", compiled.plan.id);
    out.kv("variables", formula.var_count());
    out.kv("clauses", formula.clauses().len());
    out.kv("elements", compiled.instance.n());
    out.kv("preset", compiled.instance.sigma().set_count());
    match &args.out {
        Some(p) => {
            compiled.instance.save(p)?;
            out.kv("file", p.display());
        }
        None => out.raw(compiled.instance.to_text()),
    }
    Ok(Status::Ok)
}

fn decide(args: DecideArgs, out: &Output) -> CmdResult {
    let instance = Instance::load(&args.path)?;
    let options = DecideOptions {
        timeout: seconds(args.timeout)?,
        mode: match args.mode {
            ModeArg::Auto => DecideMode::Auto,
            ModeArg::Full => DecideMode::Full,
            ModeArg::Lazy => DecideMode::Lazy,
        },
        drat: args.drat.clone(),
    };
    let decision = match decide_instance(&instance, &options) {
        Err(Error::Timeout) => {
            out.kv("result", "timeout");
            return Ok(Status::Timeout);
        }
        other => other?,
    };
    if let Some(p) = &args.drat {
        out.kv("drat", p.display());
    }
    match decision {
        Decision::Completable(sigma) => {
            out.kv("result", "completable");
            if let Some(p) = &args.witness {
                Instance::new(instance.family().clone(), sigma)?.save(p)?;
                out.kv("witness", p.display());
            }
            Ok(Status::Ok)
        }
        Decision::NotCompletable => {
            out.kv("result", "not completable");
            Ok(Status::Negative)
        }
    }
}

fn render(args: RenderArgs, out: &Output) -> CmdResult {
    let instance = Instance::load(&args.path)?;
    out.kv("n", instance.n());
    out.kv("rank", instance.r());
    out.kv("family", instance.family().id());
    out.kv("word", instance.sigma().render());
    Ok(Status::Ok)
}

fn run(cli: Cli) -> CmdResult {
    let out = Output::new(cli.machine);
    match cli.command {
        Command::Settings(c) => settings(c, &out),
        Command::Gadget(c) => gadget(c, &out),
        Command::Classify(c) => classify(c, &out),
        Command::Compile(a) => compile_cmd(a, &out),
        Command::Decide(a) => decide(a, &out),
        Command::Render(a) => render(a, &out),
    }
}

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&args) {
        match config::merge(&Cli::command(), args, Path::new(&path)) {
            Ok(merged) => args = merged,
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(Status::Usage as u8);
            }
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage as u8 } else { 0 });
        }
    };
    let status = match run(cli) {
        Ok(s) => s,
        Err(Failed(status, msg)) => {
            eprintln!("error: {msg}");
            status
        }
    };
    ExitCode::from(status as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn verdict_labels_are_single_tokens() {
        use gadgetsmith::classify::Verdict;
        for v in [Verdict::Hard { scenario: 1 }, Verdict::GadgetsOnly, Verdict::Timeout] {
            assert!(!v.label().contains(' '));
        }
    }
}
