//! Optional keyed-text configuration: one `flag value` pair per line, named
//! like the long flags without the dashes. Flags given on the command line
//! win over the file.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (line, "true"),
        };
        if key.starts_with('-') {
            return Err(format!(
                "line {}: write '{}' without dashes",
                i + 1,
                key.trim_start_matches('-')
            ));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Finds `--config PATH` in `args`.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// The deepest subcommand named in `args`.
fn selected<'a>(root: &'a Command, args: &[OsString]) -> Vec<&'a Command> {
    let mut path = vec![root];
    let mut skip_value = false;
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if skip_value {
            skip_value = false;
            continue;
        }
        let cmd = *path.last().expect("root");
        if let Some(name) = s.strip_prefix("--") {
            if !name.contains('=') {
                skip_value = path
                    .iter()
                    .flat_map(|c| c.get_arguments())
                    .any(|arg| arg.get_long() == Some(name) && arg.get_action().takes_values());
            }
            continue;
        }
        match cmd.find_subcommand(s.as_ref()) {
            Some(sub) => path.push(sub),
            None => break,
        }
    }
    path
}

/// Appends config entries the command line does not already set, keeping
/// only flags the selected subcommand (or its parents) accept.
pub fn merge(root: &Command, args: Vec<OsString>, path: &Path) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let entries = parse_config(&text)?;
    let chain = selected(root, &args);
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" || given.contains(&key) {
            continue;
        }
        let Some(arg) = chain
            .iter()
            .flat_map(|c| c.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            continue;
        };
        if arg.get_action().takes_values() {
            extra.push(format!("--{key}").into());
            extra.push(value.into());
        } else if matches!(value.as_str(), "true" | "yes" | "1") {
            extra.push(format!("--{key}").into());
        }
    }
    // Options after a `--` would be read as positionals.
    let mut args = args;
    let cut = args.iter().position(|a| a == "--").unwrap_or(args.len());
    args.splice(cut..cut, extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_lines() {
        let e = parse_config("# sweep\nn-max 6\nmachine\njobs 4 # all\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("n-max".into(), "6".into()),
                ("machine".into(), "true".into()),
                ("jobs".into(), "4".into())
            ]
        );
        assert!(parse_config("--n-max 6").is_err());
    }
}
