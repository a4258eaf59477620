//! DIMACS CNF reading and writing.
//!
//! Accepted: `c` comment lines, one `p cnf <vars> <clauses>` header, clauses
//! as whitespace-separated signed 1-based integers terminated by `0` (a
//! clause may span lines), and an optional SATLIB-style `%` end marker.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CnfInstance, Literal};
use crate::error::{Error, Result};

pub fn parse_dimacs(text: &str) -> Result<CnfInstance> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut clause_lines: Vec<usize> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_start = 0;
    let mut last_line = 0;

    'lines: for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(Error::dimacs(line_no, "second problem line"));
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::dimacs(
                    line_no,
                    format!("malformed header {trimmed:?}, expected \"p cnf <vars> <clauses>\""),
                ));
            }
            let vars = parts[2]
                .parse()
                .map_err(|_| Error::dimacs(line_no, format!("bad variable count {:?}", parts[2])))?;
            let count = parts[3]
                .parse()
                .map_err(|_| Error::dimacs(line_no, format!("bad clause count {:?}", parts[3])))?;
            header = Some((vars, count, line_no));
            continue;
        }
        let Some((vars, _, _)) = header else {
            return Err(Error::dimacs(line_no, "clause data before the problem line"));
        };
        for token in trimmed.split_whitespace() {
            if token.starts_with('%') {
                break 'lines;
            }
            let value: i64 = token
                .parse()
                .map_err(|_| Error::dimacs(line_no, format!("not an integer: {token:?}")))?;
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
                clause_lines.push(current_start);
                continue;
            }
            if current.is_empty() {
                current_start = line_no;
            }
            if value.unsigned_abs() as usize > vars {
                return Err(Error::dimacs(
                    line_no,
                    format!("variable {} out of range 1..={vars}", value.unsigned_abs()),
                ));
            }
            let literal = Literal::from_dimacs(value);
            if current.iter().any(|l| l.variable() == literal.variable()) {
                return Err(Error::dimacs(
                    line_no,
                    format!("variable {} repeated within a clause", value.unsigned_abs()),
                ));
            }
            current.push(literal);
        }
    }

    let Some((vars, count, header_line)) = header else {
        return Err(Error::dimacs(last_line.max(1), "missing problem line"));
    };
    if !current.is_empty() {
        return Err(Error::dimacs(current_start, "clause not terminated by 0"));
    }
    if clauses.len() != count {
        return Err(Error::dimacs(
            header_line,
            format!("header declares {count} clauses, found {}", clauses.len()),
        ));
    }
    CnfInstance::new(vars, clauses).map_err(|e| match e {
        Error::DuplicateClause { clause } => {
            Error::dimacs(clause_lines[clause], "clause duplicates an earlier clause")
        }
        Error::EmptyClause { clause } => Error::dimacs(clause_lines[clause], "empty clause"),
        other => other,
    })
}

pub fn read_dimacs_file(path: impl AsRef<Path>) -> Result<CnfInstance> {
    parse_dimacs(&fs::read_to_string(path)?)
}

pub fn emit_dimacs(instance: &CnfInstance) -> String {
    emit_dimacs_with_comments(instance, &[])
}

/// Like [`emit_dimacs`], with each entry of `comments` written as a leading
/// `c` line.
pub fn emit_dimacs_with_comments(instance: &CnfInstance, comments: &[String]) -> String {
    let mut out = String::new();
    for comment in comments {
        for line in comment.lines() {
            let _ = writeln!(out, "c {line}");
        }
    }
    let _ = writeln!(
        out,
        "p cnf {} {}",
        instance.num_variables(),
        instance.num_clauses()
    );
    for clause in instance.clauses() {
        for lit in clause {
            let _ = write!(out, "{} ", lit.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}
