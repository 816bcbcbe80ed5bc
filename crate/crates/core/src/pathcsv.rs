//! The path CSV format: one metadata comment line, a header
//! `t,path_0,path_1,...[,truncation_bound]` and one row per grid point.
//!
//! ```text
//! # spec=fbm(H=0.7), beta=0.7, seed=42
//! t,path_0,path_1
//! 0.00000000000000000e0,0.00000000000000000e0,0.00000000000000000e0
//! ```

use crate::error::{Error, Result};
use crate::simulate::{EnsembleMeta, PathEnsemble, TimeGrid};
use std::io::{BufRead, BufReader, Read, Write};

pub const BOUND_COLUMN: &str = "truncation_bound";

/// An ensemble read back from CSV, with the optional truncation-bound column.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCsv {
    pub ensemble: PathEnsemble,
    pub truncation_bound: Option<Vec<f64>>,
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

pub fn meta_line(meta: &EnsembleMeta) -> String {
    format!("# spec={}, beta={}, seed={}", meta.spec, opt(meta.beta), opt(meta.seed))
}

/// Parses `# spec=…, beta=…, seed=…`. The spec field may itself contain commas,
/// so beta and seed are located from the right.
pub fn parse_meta_line(line: &str) -> Result<EnsembleMeta> {
    let bad = || Error::Parse(format!("malformed metadata line: {line}"));
    let body = line.strip_prefix('#').ok_or_else(bad)?.trim();
    let rest = body.strip_prefix("spec=").ok_or_else(bad)?;
    let (rest, seed) = rest.rsplit_once(", seed=").ok_or_else(bad)?;
    let (spec, beta) = rest.rsplit_once(", beta=").ok_or_else(bad)?;
    let beta = match beta.trim() {
        "none" => None,
        b => Some(b.parse::<f64>().map_err(|_| bad())?),
    };
    let seed = match seed.trim() {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|_| bad())?),
    };
    Ok(EnsembleMeta {
        spec: spec.to_string(),
        beta,
        seed,
        method: "csv".into(),
    })
}

pub fn write_paths<W: Write>(out: W, ensemble: &PathEnsemble, bound: Option<&[f64]>) -> Result<()> {
    let grid = ensemble.grid();
    if let Some(b) = bound {
        if b.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "truncation bound has {} values for a grid of {} points",
                b.len(),
                grid.len()
            )));
        }
    }
    let mut out = out;
    writeln!(out, "{}", meta_line(&ensemble.meta))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..ensemble.n_paths()).map(|i| format!("path_{i}")));
    if bound.is_some() {
        header.push(BOUND_COLUMN.into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (k, &t) in grid.points().iter().enumerate() {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt(t));
        row.extend(ensemble.paths().map(|p| fmt(p[k])));
        if let Some(b) = bound {
            row.push(fmt(b[k]));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_paths<R: Read>(input: R) -> Result<PathCsv> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first)?;
    let meta = parse_meta_line(first.trim_end())?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Parse("first column must be 't'".into()));
    }
    let has_bound = header.iter().next_back() == Some(BOUND_COLUMN);
    let n_paths = header.len() - 1 - usize::from(has_bound);
    for (i, name) in header.iter().skip(1).take(n_paths).enumerate() {
        if name != format!("path_{i}") {
            return Err(Error::Parse(format!("unexpected column '{name}', expected path_{i}")));
        }
    }
    let mut times = Vec::new();
    let mut cols = vec![Vec::new(); n_paths];
    let mut bound = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |j: usize| -> Result<f64> {
            let s = rec.get(j).unwrap_or_default();
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: '{s}' is not a number", line + 1)))
        };
        times.push(num(0)?);
        for (i, c) in cols.iter_mut().enumerate() {
            c.push(num(i + 1)?);
        }
        if has_bound {
            bound.push(num(n_paths + 1)?);
        }
    }
    let grid = TimeGrid::from_points(times)?;
    let ensemble = PathEnsemble::from_rows(grid, cols, meta)?;
    Ok(PathCsv {
        ensemble,
        truncation_bound: has_bound.then_some(bound),
    })
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PathEnsemble {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let rows = vec![vec![0.0, 0.1, -1.0 / 3.0, 1e-300, 2.5], vec![0.0, f64::MIN_POSITIVE, 7.0, -0.0, 1.0 / 7.0]];
        let meta = EnsembleMeta {
            spec: "markov(alpha=0.2,beta=0.7,c=1)".into(),
            beta: Some(0.7),
            seed: Some(42),
            method: "csv".into(),
        };
        PathEnsemble::from_rows(g, rows, meta).unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let e = sample();
        let b = vec![0.0, 1.0, 2.0, 3.0, std::f64::consts::PI];
        let mut buf = Vec::new();
        write_paths(&mut buf, &e, Some(&b)).unwrap();
        let back = read_paths(buf.as_slice()).unwrap();
        assert_eq!(back.ensemble, e);
        assert_eq!(back.truncation_bound, Some(b));
    }

    #[test]
    fn shape_and_header() {
        let mut buf = Vec::new();
        write_paths(&mut buf, &sample(), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# spec=markov(alpha=0.2,beta=0.7,c=1), beta=0.7, seed=42");
        assert_eq!(lines[1], "t,path_0,path_1");
        assert_eq!(lines.len(), 2 + 5);
    }

    #[test]
    fn rejects_missing_metadata() {
        assert!(matches!(read_paths("t,path_0\n0,0\n".as_bytes()), Err(Error::Parse(_))));
        assert!(read_paths("# spec=x, beta=none, seed=none\nt,path_0\n0,abc\n".as_bytes()).is_err());
    }
}
