//! Snapshot files and CSV reports.
//!
//! A snapshot is plain text: a `t=<time>` line, a shape line (`nx=<nx> ny=<ny>`
//! or `nr=<nr>`), then one value per line. Doubles are written with 17
//! significant digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{Certificate, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::model::grid::Grid;

/// Formats `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotShape {
    Rect { nx: usize, ny: usize },
    Radial { nr: usize },
}

impl SnapshotShape {
    pub fn of(grid: &Grid) -> Self {
        match grid {
            Grid::Rect(g) => SnapshotShape::Rect { nx: g.nx, ny: g.ny },
            Grid::Radial(g) => SnapshotShape::Radial { nr: g.nr },
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            SnapshotShape::Rect { nx, ny } => nx * ny,
            SnapshotShape::Radial { nr } => nr,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub shape: SnapshotShape,
    pub values: Vec<f64>,
}

pub fn snapshot_to_string(t: f64, shape: SnapshotShape, values: &[f64]) -> String {
    let mut s = String::with_capacity(24 * (values.len() + 2));
    let _ = writeln!(s, "t={}", fmt_f64(t));
    match shape {
        SnapshotShape::Rect { nx, ny } => {
            let _ = writeln!(s, "nx={nx} ny={ny}");
        }
        SnapshotShape::Radial { nr } => {
            let _ = writeln!(s, "nr={nr}");
        }
    }
    for v in values {
        s.push_str(&fmt_f64(*v));
        s.push('\n');
    }
    s
}

pub fn write_snapshot(path: &Path, t: f64, shape: SnapshotShape, values: &[f64]) -> Result<()> {
    if values.len() != shape.len() {
        return Err(Error::InvalidInput(format!(
            "snapshot shape {shape:?} needs {} values, got {}",
            shape.len(),
            values.len()
        )));
    }
    fs::write(path, snapshot_to_string(t, shape, values)).map_err(|e| Error::io(path, e))
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn parse_usize(path: &Path, token: &str, key: &str) -> Result<usize> {
    token
        .strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt(path, format!("expected `{key}=<count>`, found `{token}`")))
}

pub fn parse_snapshot(path: &Path, text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    let t = lines
        .next()
        .and_then(|l| l.trim().strip_prefix("t="))
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|t| t.is_finite())
        .ok_or_else(|| corrupt(path, "missing or malformed `t=` line"))?;
    let header = lines
        .next()
        .ok_or_else(|| corrupt(path, "missing shape line"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let shape = match tokens.as_slice() {
        [a, b] => SnapshotShape::Rect {
            nx: parse_usize(path, a, "nx")?,
            ny: parse_usize(path, b, "ny")?,
        },
        [a] => SnapshotShape::Radial {
            nr: parse_usize(path, a, "nr")?,
        },
        _ => return Err(corrupt(path, format!("malformed shape line `{header}`"))),
    };
    let mut values = Vec::with_capacity(shape.len());
    for (k, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| corrupt(path, format!("value {k} is not a number: `{line}`")))?;
        if !v.is_finite() {
            return Err(corrupt(path, format!("value {k} is not finite")));
        }
        values.push(v);
    }
    if values.len() != shape.len() {
        return Err(corrupt(
            path,
            format!("expected {} values, found {}", shape.len(), values.len()),
        ));
    }
    Ok(Snapshot { t, shape, values })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(path, &text)
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn diagnostics_rows(records: &[DiagnosticsRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.mass),
                fmt_f64(r.entropy),
                fmt_f64(r.linf),
                fmt_f64(r.grad_c_l2),
                fmt_f64(r.min_c),
                fmt_f64(r.max_c),
                fmt_f64(r.local_grad_max),
                fmt_f64(r.local_entropy_max),
                r.elliptic_iterations.to_string(),
                fmt_f64(r.energy_margin),
                fmt_f64(r.lower_margin),
                fmt_f64(r.upper_margin),
            ]
        })
        .collect()
}

/// One header row naming every record field, then one row per record.
pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_rows(path, &DiagnosticsRecord::FIELDS, diagnostics_rows(records))
}

pub const CERTIFICATE_FIELDS: [&str; 5] = ["epsilon", "delta", "worst_q", "worst_t", "worst_value"];

/// `worst_q` is written as `"(x, y)"`, which the CSV writer quotes.
pub fn write_certificate_csv(path: &Path, certificates: &[Certificate]) -> Result<()> {
    let rows = certificates
        .iter()
        .map(|c| {
            vec![
                fmt_f64(c.epsilon),
                fmt_f64(c.delta),
                format!("({}, {})", fmt_f64(c.worst_q[0]), fmt_f64(c.worst_q[1])),
                fmt_f64(c.worst_t),
                fmt_f64(c.worst_value),
            ]
        })
        .collect();
    write_rows(path, &CERTIFICATE_FIELDS, rows)
}

/// Radial bound-chain margins at one record time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRecord {
    pub t: f64,
    /// `min_r M₀ r^d − Q(r)`.
    pub q_margin: f64,
    pub min_c: f64,
    pub c_star: f64,
    /// `max_r c_r − γ M₀ r/σ_d`.
    pub cr_excess: f64,
}

pub const RADIAL_FIELDS: [&str; 5] = ["t", "min_margin_q", "min_c", "c_star", "max_cr_excess"];

pub fn write_radial_csv(path: &Path, records: &[RadialRecord]) -> Result<()> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.q_margin),
                fmt_f64(r.min_c),
                fmt_f64(r.c_star),
                fmt_f64(r.cr_excess),
            ]
        })
        .collect();
    write_rows(path, &RADIAL_FIELDS, rows)
}

/// Reads a CSV written by this module back as header plus string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| csv_error(path, e))?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.txt");
        let values: Vec<f64> = (0..12).map(|k| (k as f64 * 0.1).sin() / 3.0 + 1e-300).collect();
        let shape = SnapshotShape::Rect { nx: 4, ny: 3 };
        write_snapshot(&p, 0.1 + 0.2, shape, &values).unwrap();
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.t, 0.1 + 0.2);
        assert_eq!(s.shape, shape);
        assert_eq!(s.values, values);
    }

    #[test]
    fn radial_header() {
        let text = snapshot_to_string(1.0, SnapshotShape::Radial { nr: 2 }, &[0.5, 0.25]);
        assert!(text.lines().nth(1).unwrap() == "nr=2");
        let s = parse_snapshot(Path::new("x"), &text).unwrap();
        assert_eq!(s.values, vec![0.5, 0.25]);
    }

    #[test]
    fn corrupt_snapshots_name_the_file() {
        let p = Path::new("broken.txt");
        for text in ["", "t=1\n", "t=1\nnx=2 ny=1\n1.0\n", "t=1\nnr=1\nabc\n", "t=x\nnr=1\n1\n"] {
            match parse_snapshot(p, text) {
                Err(Error::Io { path, .. }) => assert_eq!(path, "broken.txt"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn certificate_csv_quotes_the_center() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let cert = Certificate {
            epsilon: 0.1,
            delta: 0.25,
            found: true,
            worst_q: [0.5, 0.75],
            worst_t: 1.0,
            worst_value: 0.004,
        };
        write_certificate_csv(&p, &[cert]).unwrap();
        let raw = fs::read_to_string(&p).unwrap();
        assert!(raw.contains("\"(5.0000000000000000e-1, 7.5000000000000000e-1)\""));
        let (header, rows) = read_csv(&p).unwrap();
        assert_eq!(header, CERTIFICATE_FIELDS);
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.25);
    }
}
