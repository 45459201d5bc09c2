//! Plain-text operator and initial-state files.
//!
//! Operators are written as sparse triplets:
//!
//! ```text
//! ccnet-operator 1
//! dimension 64
//! phi 5.0000000000000003e-2
//! boundary walls
//! seed 7
//! geometry box 2 2 0 0
//! entries 128
//! 0 1 9.9875026039496628e-1 0.0000000000000000e0
//! ...
//! ```
//!
//! `row` and `col` index the region's sites in row-major order (by `n`, then
//! `m`). `geometry` is `<mode> <l1> <l2> <offset m> <offset n>` with mode `box`,
//! `torus` or `strip:<length>`. `boundary` is `full_torus`, `walls`,
//! `complement_walls <inner>` or `decoupled <inner>`, where `<inner>` is a
//! geometry. `seed` is `none` for deterministic operators.
//!
//! Initial states are rows `m n re im`; blank lines and `#` comments are skipped.

use ccnet_core::lattice::{BoxSpec, IndexMap, Mode, Site};
use ccnet_core::operator::{Boundary, NetworkOperator, PhaseAngle};
use ccnet_core::sparse::SparseMatrix;
use ccnet_core::C64;
use std::fmt::Write as _;
use std::str::FromStr;

const MAGIC: &str = "ccnet-operator 1";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ccnet_core::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

fn geometry_text(g: &BoxSpec) -> String {
    let mode = match g.mode {
        Mode::Box => "box".to_string(),
        Mode::Torus => "torus".to_string(),
        Mode::Strip { length } => format!("strip:{length}"),
    };
    format!("{mode} {} {} {} {}", g.l1, g.l2, g.offset.m, g.offset.n)
}

fn parse_geometry(words: &[&str], line: usize) -> Result<BoxSpec, FormatError> {
    let [mode, l1, l2, om, on] = words else {
        return Err(syntax(
            line,
            "geometry needs <mode> <l1> <l2> <offset m> <offset n>",
        ));
    };
    let mode = match *mode {
        "box" => Mode::Box,
        "torus" => Mode::Torus,
        m => match m.strip_prefix("strip:").map(str::parse) {
            Some(Ok(length)) => Mode::Strip { length },
            _ => return Err(syntax(line, format!("unknown mode {m:?}"))),
        },
    };
    let num = |w: &str| {
        w.parse::<i64>()
            .map_err(|e| syntax(line, format!("{w:?}: {e}")))
    };
    let (l1, l2) = (num(l1)?, num(l2)?);
    let (l1, l2) = (
        u32::try_from(l1).map_err(|_| syntax(line, "l1 out of range"))?,
        u32::try_from(l2).map_err(|_| syntax(line, "l2 out of range"))?,
    );
    Ok(BoxSpec::new(l1, l2, Site::new(num(om)?, num(on)?), mode)?)
}

pub fn write_operator(op: &NetworkOperator) -> String {
    let mut out = String::new();
    let boundary = match op.boundary() {
        Boundary::FullTorus => "full_torus".to_string(),
        Boundary::Walls => "walls".to_string(),
        Boundary::ComplementWalls { inner } => {
            format!("complement_walls {}", geometry_text(&inner))
        }
        Boundary::Decoupled { inner } => format!("decoupled {}", geometry_text(&inner)),
    };
    let seed = op.seed().map_or("none".to_string(), |s| s.to_string());
    let m = op.matrix();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "dimension {}", m.dim()).unwrap();
    writeln!(out, "phi {:.16e}", op.phi().radians()).unwrap();
    writeln!(out, "boundary {boundary}").unwrap();
    writeln!(out, "seed {seed}").unwrap();
    writeln!(out, "geometry {}", geometry_text(op.geometry())).unwrap();
    writeln!(out, "entries {}", m.nnz()).unwrap();
    for (r, c, v) in m.triplets() {
        writeln!(out, "{r} {c} {:.16e} {:.16e}", v.re, v.im).unwrap();
    }
    out
}

fn parse_num<T: FromStr>(word: &str, line: usize) -> Result<T, FormatError>
where
    T::Err: std::fmt::Display,
{
    word.parse()
        .map_err(|e| syntax(line, format!("{word:?}: {e}")))
}

pub fn read_operator(text: &str) -> Result<NetworkOperator, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = |key: &str| -> Result<(usize, Vec<&str>), FormatError> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| syntax(0, format!("missing {key:?} line")))?;
        let mut words = l.split_whitespace();
        if words.next() != Some(key) {
            return Err(syntax(n, format!("expected {key:?}")));
        }
        Ok((n, words.collect()))
    };
    let (n, magic) = header("ccnet-operator")?;
    if magic != ["1"] {
        return Err(syntax(n, "unsupported format version"));
    }
    let (n, w) = header("dimension")?;
    let dim: usize = parse_num(w.first().copied().unwrap_or(""), n)?;
    let (n, w) = header("phi")?;
    let phi: f64 = parse_num(w.first().copied().unwrap_or(""), n)?;
    let (bn, bw) = header("boundary")?;
    let (n, w) = header("seed")?;
    let seed = match w.as_slice() {
        ["none"] => None,
        [s] => Some(parse_num::<u64>(s, n)?),
        _ => return Err(syntax(n, "seed needs one value")),
    };
    let (n, w) = header("geometry")?;
    let geometry = parse_geometry(&w, n)?;
    let boundary = match bw.as_slice() {
        ["full_torus"] => Boundary::FullTorus,
        ["walls"] => Boundary::Walls,
        ["complement_walls", rest @ ..] => Boundary::ComplementWalls {
            inner: parse_geometry(rest, bn)?,
        },
        ["decoupled", rest @ ..] => Boundary::Decoupled {
            inner: parse_geometry(rest, bn)?,
        },
        _ => return Err(syntax(bn, "unknown boundary")),
    };
    let (n, w) = header("entries")?;
    let count: usize = parse_num(w.first().copied().unwrap_or(""), n)?;
    let map = match boundary {
        Boundary::ComplementWalls { inner } => IndexMap::with_hole(geometry, inner)?,
        _ => IndexMap::new(geometry),
    };
    let mut triplets = Vec::with_capacity(count);
    for (n, l) in lines.filter(|(_, l)| !l.is_empty()) {
        let w: Vec<&str> = l.split_whitespace().collect();
        let [r, c, re, im] = w.as_slice() else {
            return Err(syntax(n, "entries need <row> <col> <re> <im>"));
        };
        let (r, c): (usize, usize) = (parse_num(r, n)?, parse_num(c, n)?);
        if r >= dim || c >= dim {
            return Err(syntax(n, format!("index out of range for dimension {dim}")));
        }
        triplets.push((r, c, C64::new(parse_num(re, n)?, parse_num(im, n)?)));
    }
    if triplets.len() != count {
        return Err(syntax(
            0,
            format!("header announces {count} entries, found {}", triplets.len()),
        ));
    }
    let matrix = SparseMatrix::from_triplets(dim, triplets);
    Ok(NetworkOperator::from_parts(
        map,
        PhaseAngle::new(phi),
        boundary,
        matrix,
        seed,
    )?)
}

/// Parses `m n re im` rows.
pub fn read_initial_state(text: &str) -> Result<Vec<(Site, C64)>, FormatError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let w: Vec<&str> = l.split_whitespace().collect();
        let [m, y, re, im] = w.as_slice() else {
            return Err(syntax(n, "expected <m> <n> <re> <im>"));
        };
        let amp = C64::new(parse_num(re, n)?, parse_num(im, n)?);
        if !(amp.re.is_finite() && amp.im.is_finite()) {
            return Err(syntax(n, "amplitude must be finite"));
        }
        entries.push((Site::new(parse_num(m, n)?, parse_num(y, n)?), amp));
    }
    if entries.is_empty() {
        return Err(syntax(0, "initial state has no entries"));
    }
    Ok(entries)
}
