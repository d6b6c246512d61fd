use std::fmt::Write;

use super::{Cnf, Lit};
use crate::error::{Error, Result};

pub fn export_dimacs(cnf: &Cnf) -> String {
    let mut out = format!("p cnf {} {}\n", cnf.var_count, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS CNF. Comment lines and a trailing `%` marker are tolerated;
/// clauses may span lines.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut header: Option<(u32, usize)> = None;
    let mut cnf = Cnf::new();
    let mut current = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if header.is_some() {
                return Err(Error::parse(lineno, "duplicate header"));
            }
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(Error::parse(lineno, "expected 'p cnf <vars> <clauses>'"));
            }
            let vars = parts[1]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad variable count"))?;
            let clauses = parts[2].parse().map_err(|_| Error::parse(lineno, "bad clause count"))?;
            header = Some((vars, clauses));
            continue;
        }
        let Some((vars, _)) = header else {
            return Err(Error::parse(lineno, "clause before header"));
        };
        for tok in line.split_whitespace() {
            let v: i32 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad literal '{tok}'")))?;
            match Lit::from_dimacs(v) {
                None => cnf.clauses.push(std::mem::take(&mut current)),
                Some(l) => {
                    if l.var() > vars {
                        return Err(Error::parse(
                            lineno,
                            format!("literal {v} exceeds declared {vars} variables"),
                        ));
                    }
                    current.push(l);
                }
            }
        }
    }
    let Some((vars, clauses)) = header else {
        return Err(Error::parse(0, "missing header"));
    };
    if !current.is_empty() {
        cnf.clauses.push(current);
    }
    if cnf.clauses.len() != clauses {
        return Err(Error::parse(
            0,
            format!("header declares {clauses} clauses, found {}", cnf.clauses.len()),
        ));
    }
    cnf.var_count = vars;
    Ok(cnf)
}
