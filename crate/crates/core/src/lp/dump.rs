//! Plain-text LP dump for cross-checking with external solvers.
//!
//! ```text
//! # cvar-persuasion LP dump v1
//! vars 3
//! max 1 0 2.5
//! eq 1 : 0:1 1:1 2:1
//! ge 0 : 0:1 1:-1
//! ```
//!
//! `max` lists every objective coefficient; each `eq`/`ge` line gives the
//! right-hand side, then sparse `index:coefficient` terms. Lines starting
//! with `#` are comments. Floats are written in shortest round-trip form.

use std::fmt::Write as _;

use super::{LinearRow, LpProblem};
use crate::error::{Error, Result};

const HEADER: &str = "# cvar-persuasion LP dump v1";

pub fn write_dump(p: &LpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "vars {}", p.num_vars);
    out.push_str("max");
    for c in &p.objective {
        let _ = write!(out, " {c:?}");
    }
    out.push('\n');
    for (tag, rows) in [("eq", &p.equalities), ("ge", &p.inequalities)] {
        for row in rows {
            let _ = write!(out, "{tag} {:?} :", row.rhs);
            for &(j, c) in &row.terms {
                let _ = write!(out, " {j}:{c:?}");
            }
            out.push('\n');
        }
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Lp(format!("dump line {line}: {msg}"))
}

fn float(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| bad(line, format!("bad number {s:?}: {e}")))
}

pub fn parse_dump(text: &str) -> Result<LpProblem> {
    let mut p: Option<LpProblem> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (tag, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match tag {
            "vars" => {
                let n = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| bad(line_no, format!("bad variable count: {e}")))?;
                p = Some(LpProblem::new(n));
            }
            "max" => {
                let prob = p
                    .as_mut()
                    .ok_or_else(|| bad(line_no, "`max` before `vars`"))?;
                let obj = rest
                    .split_whitespace()
                    .map(|s| float(line_no, s))
                    .collect::<Result<Vec<_>>>()?;
                if obj.len() != prob.num_vars {
                    return Err(bad(line_no, "objective length differs from `vars`"));
                }
                prob.objective = obj;
            }
            "eq" | "ge" => {
                let prob = p
                    .as_mut()
                    .ok_or_else(|| bad(line_no, "row before `vars`"))?;
                let (rhs, terms) = rest
                    .split_once(':')
                    .ok_or_else(|| bad(line_no, "missing ':' separator"))?;
                let rhs = float(line_no, rhs.trim())?;
                let terms = terms
                    .split_whitespace()
                    .map(|t| {
                        let (j, c) = t
                            .split_once(':')
                            .ok_or_else(|| bad(line_no, format!("bad term {t:?}")))?;
                        let j = j
                            .parse::<usize>()
                            .map_err(|e| bad(line_no, format!("bad index {j:?}: {e}")))?;
                        Ok((j, float(line_no, c)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let row = LinearRow::new(terms, rhs);
                if tag == "eq" {
                    prob.equalities.push(row);
                } else {
                    prob.inequalities.push(row);
                }
            }
            other => return Err(bad(line_no, format!("unknown tag {other:?}"))),
        }
    }
    let p = p.ok_or_else(|| Error::Lp("dump has no `vars` line".into()))?;
    p.validate()?;
    Ok(p)
}
