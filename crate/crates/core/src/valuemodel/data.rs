//! Labelled sequents and their line-oriented file format.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::syntax::{parse_sequent, Sequent};

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub sequent: Sequent,
    /// Return of a policy rollout from this sequent, in `[0, 1]`.
    pub ret: f64,
    /// Index of the library theorem this example was derived from.
    pub origin: usize,
    pub one_step: bool,
    /// Breadth-first distance from the origin theorem.
    pub depth: usize,
}

pub type Dataset = Vec<Example>;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Decimal text with at least 17 significant digits, which round-trips
/// every `f64` exactly.
pub fn format_return(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// One example per line, tab separated:
/// `sequent  return  origin  one_step  depth`.
pub fn format_example(e: &Example) -> String {
    let mut s = String::new();
    write!(
        s,
        "{}\t{}\t{}\t{}\t{}",
        e.sequent,
        format_return(e.ret),
        e.origin,
        u8::from(e.one_step),
        e.depth
    )
    .expect("writing to a string");
    s
}

pub fn parse_example(line: &str) -> Result<Example, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [seq, ret, origin, one_step, depth] = fields[..] else {
        return Err(format!("expected 5 tab-separated fields, found {}", fields.len()));
    };
    let sequent = parse_sequent(seq).map_err(|e| e.to_string())?;
    let ret: f64 = ret.parse().map_err(|_| format!("bad return `{ret}`"))?;
    if !(0.0..=1.0).contains(&ret) {
        return Err(format!("return {ret} is outside [0, 1]"));
    }
    let origin = origin.parse().map_err(|_| format!("bad origin `{origin}`"))?;
    let one_step = match one_step {
        "0" => false,
        "1" => true,
        _ => return Err(format!("bad one-step flag `{one_step}`")),
    };
    let depth = depth.parse().map_err(|_| format!("bad depth `{depth}`"))?;
    Ok(Example {
        sequent,
        ret,
        origin,
        one_step,
        depth,
    })
}

pub fn write_dataset<W: Write>(mut w: W, data: &[Example]) -> io::Result<()> {
    for e in data {
        writeln!(w, "{}", format_example(e))?;
    }
    w.flush()
}

/// Reads the format of [`write_dataset`]; blank lines and `#` comments are
/// skipped.
pub fn read_dataset<R: BufRead>(r: R) -> Result<Dataset, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim_end_matches(['\r', '\n']);
        if t.trim().is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_example(t).map_err(|message| DatasetError::Malformed { line: i + 1, message })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_round_trip() {
        for v in [0.0, 1.0, 0.95, 0.9025, 0.95f64.powi(37), 1e-300, 0.1 + 0.2] {
            let s = format_return(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert!(!s.contains('e'));
        }
        assert_eq!(format_return(0.9025), "0.90249999999999997");
    }

    #[test]
    fn examples_round_trip() {
        let e = Example {
            sequent: parse_sequent("P1 & P2, P3 |- P2 & P1").unwrap(),
            ret: 0.95f64.powi(4),
            origin: 17,
            one_step: false,
            depth: 2,
        };
        let line = format_example(&e);
        assert_eq!(parse_example(&line).unwrap(), e);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &[e.clone(), e.clone()]).unwrap();
        assert_eq!(read_dataset(&buf[..]).unwrap(), vec![e.clone(), e]);
        assert!(parse_example("P1 |- P1\t2\t0\t1\t0").is_err());
        assert!(read_dataset("P1 |- P1\t0.5\n".as_bytes()).is_err());
    }
}
