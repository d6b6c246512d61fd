use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{summarize, ClassifyConfig, SettingResult, Verdict};
use crate::encode::WindowMode;
use crate::error::{Error, Result};
use crate::gadgets::{load_gadget, save_gadget, Library};
use crate::patterns::Family;
use crate::search::{SearchStats, SearchVariant, StatsRecord};

/// Per-setting verdict file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredVerdict {
    pub family: String,
    pub rank: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub n_min: Option<usize>,
    pub n_max: usize,
    pub variant: SearchVariant,
    pub timeout_secs: Option<f64>,
    #[serde(default)]
    pub windows: WindowMode,
    pub gadgets: Vec<String>,
    pub stats: SearchStats,
    pub notes: Vec<String>,
}

/// Results directory: one subdirectory per setting holding `verdict.json`,
/// `stats.jsonl` and one `.gadget` file per found gadget. The verdict file
/// is written last, so a directory without one is an unfinished setting.
#[derive(Debug, Clone)]
pub struct ResultsStore {
    root: PathBuf,
}

fn gadget_file_name(spec: &str) -> String {
    let safe: String = spec
        .chars()
        .map(|c| match c {
            '+' => 'p',
            '-' => 'm',
            ':' => '_',
            other => other,
        })
        .collect();
    format!("{safe}.gadget")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl ResultsStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<ResultsStore> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(ResultsStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn setting_dir(&self, family: &Family) -> PathBuf {
        self.root.join(format!("r{}_{}", family.rank(), family.id()))
    }

    pub fn save(&self, result: &SettingResult, config: &ClassifyConfig) -> Result<()> {
        let dir = self.setting_dir(&result.family);
        std::fs::create_dir_all(&dir)?;
        let mut gadgets = Vec::new();
        for g in result.library.iter() {
            let spec = g.spec().to_string();
            save_gadget(g, &dir.join(gadget_file_name(&spec)))?;
            gadgets.push(spec);
        }
        let mut log = String::new();
        for rec in &result.records {
            log.push_str(&rec.to_json_line());
            log.push('\n');
        }
        write_atomic(&dir.join("stats.jsonl"), &log)?;
        let stored = StoredVerdict {
            family: result.family.id(),
            rank: result.family.rank(),
            verdict: result.verdict,
            n_min: config.n_min,
            n_max: config.n_max,
            variant: config.search.variant,
            timeout_secs: config.search.timeout.map(|t| t.as_secs_f64()),
            windows: config.search.windows,
            gadgets,
            stats: result.stats,
            notes: result.notes.clone(),
        };
        let json = serde_json::to_string_pretty(&stored).map_err(|e| Error::InvalidProblem(e.to_string()))?;
        write_atomic(&dir.join("verdict.json"), &json)
    }

    pub fn load_verdict(&self, family: &Family) -> Result<Option<StoredVerdict>> {
        let path = self.setting_dir(family).join("verdict.json");
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    /// A stored result made with the same sizes, variant, timeout and window
    /// mode; its
    /// gadgets are re-verified on load.
    pub fn load_matching(&self, family: &Family, config: &ClassifyConfig) -> Result<Option<SettingResult>> {
        let Some(v) = self.load_verdict(family)? else {
            return Ok(None);
        };
        let same = v.n_min == config.n_min
            && v.n_max == config.n_max
            && v.variant == config.search.variant
            && v.timeout_secs == config.search.timeout.map(|t| t.as_secs_f64())
            && v.windows == config.search.windows;
        if !same {
            return Ok(None);
        }
        let dir = self.setting_dir(family);
        let mut library = Library::new(family.clone());
        for spec in &v.gadgets {
            library.insert(load_gadget(&dir.join(gadget_file_name(spec)))?)?;
        }
        let records = std::fs::read_to_string(dir.join("stats.jsonl"))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
            .collect::<Result<Vec<StatsRecord>>>()?;
        Ok(Some(SettingResult {
            family: family.clone(),
            verdict: v.verdict,
            library,
            records,
            stats: v.stats,
            notes: v.notes,
        }))
    }

    /// Writes `summary.txt` (counts per verdict and the hard list) and
    /// `plot.csv` (prunings and time per setting).
    pub fn write_summary(&self, results: &[SettingResult]) -> Result<String> {
        let summary = render_summary(results);
        write_atomic(&self.root.join("summary.txt"), &summary)?;
        let mut csv = String::from("family,verdict,candidates,up_prunings,down_prunings,solver_calls,elapsed_secs\n");
        for r in results {
            let _ = writeln!(
                csv,
                "\"{}\",{},{},{},{},{},{:.3}",
                r.family.id(),
                r.verdict.label(),
                r.stats.candidates,
                r.stats.up_prunings,
                r.stats.down_prunings,
                r.stats.solver_calls,
                r.stats.elapsed_secs
            );
        }
        write_atomic(&self.root.join("plot.csv"), &csv)?;
        Ok(summary)
    }
}

pub fn render_summary(results: &[SettingResult]) -> String {
    let mut out = String::new();
    for (label, count) in summarize(results.iter().map(|r| &r.verdict)) {
        let _ = writeln!(out, "{count} {label}");
    }
    for r in results.iter().filter(|r| r.verdict.is_hard()) {
        let _ = writeln!(out, "hard {} {}", r.family.id(), r.verdict);
    }
    out
}
