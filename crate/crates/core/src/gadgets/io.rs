//! Line-based text format for gadgets. Every line is a key followed by
//! whitespace-separated fields; `#` starts a comment.
//!
//! ```text
//! format gadget
//! version 1
//! spec prop:++
//! rank 3
//! n 5
//! family +-+-,-+-+
//! var X1 1 2 3
//! var X2 3 4 5
//! entry 1 2 4 +
//! component prop:-- 2 3 4 5
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Component, Gadget, Library};
use crate::encode::GadgetSpec;
use crate::error::{Error, Result};
use crate::mapping::{PartialSignMapping, Sign};
use crate::patterns::Family;

const VERSION: u32 = 1;

pub fn render_gadget(g: &Gadget) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format gadget");
    let _ = writeln!(out, "version {VERSION}");
    let _ = writeln!(out, "# {}", g.spec().describe());
    let _ = writeln!(out, "spec {}", g.spec());
    let _ = writeln!(out, "rank {}", g.r());
    let _ = writeln!(out, "n {}", g.n());
    let _ = writeln!(out, "family {}", g.family().id());
    for (role, v) in g.spec().role_names().iter().zip(g.variables()) {
        let _ = writeln!(out, "var {role} {}", join(v.elements()));
    }
    for (t, s) in g.entry_list() {
        let _ = writeln!(out, "entry {} {s}", join(t.elements()));
    }
    for c in g.components() {
        let _ = writeln!(out, "component {} {}", c.spec, join(&c.elements));
    }
    out
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn numbers(fields: &[&str], line: usize) -> Result<Vec<usize>> {
    fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| Error::parse(line, format!("expected a number, got {f:?}")))
        })
        .collect()
}

/// Parses and re-verifies a gadget.
pub fn parse_gadget(text: &str) -> Result<Gadget> {
    let mut seen_format = false;
    let mut version = None;
    let mut spec: Option<GadgetSpec> = None;
    let mut rank = None;
    let mut n = None;
    let mut family_text = None;
    let mut vars: Vec<(usize, String, Vec<usize>)> = Vec::new();
    let mut entries: Vec<(usize, Vec<usize>, Sign)> = Vec::new();
    let mut comps: Vec<(usize, GadgetSpec, Vec<usize>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (key, rest) = (fields[0], &fields[1..]);
        let single = || -> Result<&str> {
            match rest {
                [v] => Ok(v),
                _ => Err(Error::parse(line, format!("'{key}' takes exactly one value"))),
            }
        };
        match key {
            "format" => {
                if single()? != "gadget" {
                    return Err(Error::parse(line, "not a gadget file"));
                }
                seen_format = true;
            }
            "version" => {
                let v: u32 = single()?.parse().map_err(|_| Error::parse(line, "bad version"))?;
                if v != VERSION {
                    return Err(Error::Version {
                        found: v,
                        expected: VERSION,
                    });
                }
                version = Some(v);
            }
            "spec" => {
                spec = Some(
                    single()?
                        .parse()
                        .map_err(|e: Error| Error::parse(line, e.to_string()))?,
                )
            }
            "rank" => rank = Some(numbers(&[single()?], line)?[0]),
            "n" => n = Some(numbers(&[single()?], line)?[0]),
            "family" => family_text = Some(rest.join(" ")),
            "var" => {
                let Some((role, elems)) = rest.split_first() else {
                    return Err(Error::parse(line, "var needs a role and elements"));
                };
                vars.push((line, role.to_string(), numbers(elems, line)?));
            }
            "entry" => {
                let Some((sign, elems)) = rest.split_last() else {
                    return Err(Error::parse(line, "entry needs elements and a sign"));
                };
                let mut chars = sign.chars();
                let s = match (chars.next().and_then(Sign::from_char), chars.next()) {
                    (Some(s), None) => s,
                    _ => return Err(Error::parse(line, format!("bad sign {sign:?}"))),
                };
                entries.push((line, numbers(elems, line)?, s));
            }
            "component" => {
                let Some((sp, elems)) = rest.split_first() else {
                    return Err(Error::parse(line, "component needs a spec and elements"));
                };
                let sp: GadgetSpec = sp.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
                comps.push((line, sp, numbers(elems, line)?));
            }
            other => return Err(Error::parse(line, format!("unknown key '{other}'"))),
        }
    }

    if !seen_format {
        return Err(Error::parse(0, "missing 'format gadget'"));
    }
    if version.is_none() {
        return Err(Error::parse(0, "missing version"));
    }
    let missing = |k: &str| Error::parse(0, format!("missing '{k}'"));
    let spec = spec.ok_or_else(|| missing("spec"))?;
    let r = rank.ok_or_else(|| missing("rank"))?;
    let n = n.ok_or_else(|| missing("n"))?;
    let family = Family::parse(&family_text.ok_or_else(|| missing("family"))?, r)?;

    // Var lines are optional and give the window placement.
    let starts = if vars.is_empty() {
        spec.default_starts(n, r)?
    } else {
        if vars.len() != spec.variable_count() {
            return Err(Error::parse(0, format!("expected {} var lines", spec.variable_count())));
        }
        let mut starts = Vec::new();
        for ((line, role, elems), want_role) in vars.iter().zip(spec.role_names()) {
            let window = elems.len() == r && elems.windows(2).all(|w| w[1] == w[0] + 1);
            if role != want_role || !window {
                return Err(Error::parse(
                    *line,
                    format!("var {role} is not a window for {spec} at rank {r}"),
                ));
            }
            starts.push(elems[0]);
        }
        spec.variables_at(n, r, &starts)
            .map_err(|e| Error::parse(0, e.to_string()))?;
        starts
    };

    let mut sigma = PartialSignMapping::empty(n, r)?;
    for (line, t, s) in entries {
        if sigma
            .get_subset(&t)
            .map_err(|e| Error::parse(line, e.to_string()))?
            .is_set()
        {
            return Err(Error::parse(line, format!("tuple {t:?} listed twice")));
        }
        sigma.set_subset(&t, s.into())?;
    }
    let components = comps
        .into_iter()
        .map(|(_, spec, elements)| Component { spec, elements })
        .collect();
    Gadget::verified_at(spec, family, sigma, components, &starts)
}

pub fn save_gadget(g: &Gadget, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, render_gadget(g))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_gadget(path: &Path) -> Result<Gadget> {
    parse_gadget(&std::fs::read_to_string(path)?)
}

/// Every `.gadget` file directly inside `dir`, each re-verified. Files for
/// another family are an error.
pub fn load_library(dir: &Path, family: &Family) -> Result<Library> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "gadget"));
    paths.sort();
    let mut lib = Library::new(family.clone());
    for p in paths {
        let g = load_gadget(&p)?;
        if g.family() != family {
            return Err(Error::Construction(format!(
                "{} is for {{{}}}, not {{{family}}}",
                p.display(),
                g.family()
            )));
        }
        lib.insert(g)?;
    }
    Ok(lib)
}
