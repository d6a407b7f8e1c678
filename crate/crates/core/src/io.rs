//! Sparse triple instance files.
//!
//! ```text
//! n m
//! i j v      (m lines, 1-based, i <= j)
//! ```
//!
//! Off-diagonal entries are products `v·x_i·x_j`; diagonal entries are linear
//! terms `v·x_i`. Lines starting with `#` are comments. When the file is read
//! as a maximization problem every coefficient is negated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::{BqpInstance, InstanceMeta, Sense};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected an integer {what}, found '{tok}'")))
}

pub fn parse_instance(text: &str, sense: Sense) -> Result<BqpInstance> {
    parse_named(text, sense, "unnamed")
}

pub fn parse_named(text: &str, sense: Sense, name: &str) -> Result<BqpInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r').trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(hline, "header must be 'n m'"));
    }
    let n = parse_usize(toks[0], hline, "variable count")?;
    let m = parse_usize(toks[1], hline, "entry count")?;
    if n == 0 {
        return Err(parse_err(hline, "variable count must be positive"));
    }

    let flip = if sense == Sense::Max { -1.0 } else { 1.0 };
    let mut q = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut seen = std::collections::HashSet::new();
    let mut count = 0;
    for (line, body) in lines {
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(line, "entry must be 'i j v'"));
        }
        let mut i = parse_usize(toks[0], line, "row index")?;
        let mut j = parse_usize(toks[1], line, "column index")?;
        let v: f64 = toks[2]
            .parse()
            .map_err(|_| parse_err(line, format!("expected a number, found '{}'", toks[2])))?;
        if !v.is_finite() {
            return Err(parse_err(line, "coefficient is not finite"));
        }
        for idx in [i, j] {
            if idx < 1 || idx > n {
                return Err(parse_err(line, format!("index {idx} outside [1, {n}]")));
            }
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        if !seen.insert((i, j)) {
            return Err(parse_err(line, format!("duplicate entry ({i}, {j})")));
        }
        let (i, j) = (i - 1, j - 1);
        if i == j {
            c[i] += flip * v;
        } else {
            q[(i, j)] = flip * v;
            q[(j, i)] = flip * v;
        }
        count += 1;
    }
    if count != m {
        return Err(parse_err(
            hline,
            format!("header announces {m} entries but the file has {count}"),
        ));
    }
    let meta = InstanceMeta {
        name: name.to_string(),
        sense_original: sense,
        density: None,
        seed: None,
    };
    BqpInstance::with_meta(q, c, meta)
}

/// Writes the instance in its original sense, folding the diagonal into the
/// linear terms. Parsing the output with the same sense reproduces the
/// diagonal-normalized instance exactly.
pub fn write_instance(inst: &BqpInstance) -> String {
    let n = inst.n();
    let flip = if inst.meta.sense_original == Sense::Max {
        -1.0
    } else {
        1.0
    };
    let mut entries = Vec::new();
    for i in 0..n {
        let lin = inst.c()[i] + 0.5 * inst.q()[(i, i)];
        if lin != 0.0 {
            entries.push((i, i, flip * lin));
        }
        for j in (i + 1)..n {
            let v = inst.q()[(i, j)];
            if v != 0.0 {
                entries.push((i, j, flip * v));
            }
        }
    }
    let mut out = format!("{} {}\n", n, entries.len());
    for (i, j, v) in entries {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
    }
    out
}

/// Beasley-style files conventionally hold maximization problems.
pub fn default_sense_for(path: &std::path::Path) -> Sense {
    match path.extension().and_then(|e| e.to_str()) {
        Some("sparse") => Sense::Max,
        _ => Sense::Min,
    }
}

pub fn read_instance(path: &std::path::Path, sense: Option<Sense>) -> Result<BqpInstance> {
    let text = std::fs::read_to_string(path)?;
    let sense = sense.unwrap_or_else(|| default_sense_for(path));
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unnamed".into());
    parse_named(&text, sense, &name)
}
