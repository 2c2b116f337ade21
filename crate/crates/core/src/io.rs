//! CSV persistence. Floats are written with 17 significant digits so every
//! value reads back bit-for-bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dist1d::{MonotoneStepFn, TabulatedDistribution};
use crate::experiments::{ConjectureRow, RiskRecord};
use crate::regress::Fit;
use crate::synth::Mode;
use crate::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::format(path, format!("not a number: {field:?}")))
}

fn parse_usize(path: &Path, field: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::format(path, format!("not an integer: {field:?}")))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::format(path, e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_table<I, R>(path: &Path, preamble: &[String], header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = create(path)?;
    for line in preamble {
        writeln!(out, "# {line}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of `path` after checking the header. Lines starting with `#` are
/// skipped.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let got = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::format(
            path,
            format!("expected header {header:?}, found {:?}", got.iter().collect::<Vec<_>>()),
        ));
    }
    r.records()
        .map(|rec| rec.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Observations as read from or written to a dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    pub mode: Mode,
    /// Covariates in file order; `None` in deconvolution mode.
    pub x: Option<Vec<f64>>,
    pub y: Vec<f64>,
}

const DATASET_HEADER: [&str; 4] = ["mode", "index", "x", "y"];

/// Columns `mode,index,x,y`. In shuffled and unlinked files the `x` and `y`
/// columns of a row are not paired units.
pub fn write_dataset(path: &Path, data: &ObservedData) -> Result<()> {
    if let Some(x) = &data.x {
        if x.len() != data.y.len() {
            return Err(Error::SizeMismatch {
                left: x.len(),
                right: data.y.len(),
            });
        }
    }
    let mode = data.mode.as_str();
    write_table(
        path,
        &[],
        &DATASET_HEADER,
        data.y.iter().enumerate().map(|(i, &y)| {
            let x = data.x.as_ref().map(|x| fmt_f64(x[i])).unwrap_or_default();
            [mode.to_string(), i.to_string(), x, fmt_f64(y)]
        }),
    )
}

pub fn read_dataset(path: &Path) -> Result<ObservedData> {
    let rows = read_table(path, &DATASET_HEADER)?;
    let first = rows
        .first()
        .ok_or_else(|| Error::format(path, "no observations"))?;
    let mode: Mode = first[0]
        .parse()
        .map_err(|_| Error::format(path, format!("unknown mode {:?}", &first[0])))?;
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 4 || &row[0] != mode.as_str() || parse_usize(path, &row[1])? != i {
            return Err(Error::format(path, format!("malformed row {}", i + 1)));
        }
        match (mode, row[2].trim().is_empty()) {
            (Mode::Deconv, true) => {}
            (Mode::Deconv, false) => {
                return Err(Error::format(path, "deconv rows must leave x empty"));
            }
            (_, true) => return Err(Error::format(path, format!("missing x in row {}", i + 1))),
            (_, false) => x.push(parse_f64(path, &row[2])?),
        }
        y.push(parse_f64(path, &row[3])?);
    }
    Ok(ObservedData {
        mode,
        x: (mode != Mode::Deconv).then_some(x),
        y,
    })
}

const TABULATED_HEADER: [&str; 2] = ["z", "cdf"];

pub fn write_tabulated(path: &Path, dist: &TabulatedDistribution) -> Result<()> {
    write_table(
        path,
        &[],
        &TABULATED_HEADER,
        dist.points()
            .zip(dist.values())
            .map(|(z, &f)| [fmt_f64(z), fmt_f64(f)]),
    )
}

pub fn read_tabulated(path: &Path) -> Result<TabulatedDistribution> {
    let rows = read_table(path, &TABULATED_HEADER)?;
    let mut z = Vec::with_capacity(rows.len());
    let mut f = Vec::with_capacity(rows.len());
    for row in &rows {
        z.push(parse_f64(path, &row[0])?);
        f.push(parse_f64(path, &row[1])?);
    }
    if z.len() < 2 {
        return Err(Error::format(path, "need at least two grid points"));
    }
    let (lo, hi) = (z[0], z[z.len() - 1]);
    let step = (hi - lo) / (z.len() - 1) as f64;
    if z
        .iter()
        .enumerate()
        .any(|(k, &p)| (p - (lo + k as f64 * step)).abs() > 1e-9 * (1.0 + p.abs()))
    {
        return Err(Error::format(path, "grid is not equispaced"));
    }
    TabulatedDistribution::new(lo, hi, f)
}

const STEP_HEADER: [&str; 2] = ["knot", "value"];

/// Fitted link with `# key=value` metadata lines for `n`, `sigma`, `eta` and
/// whether the moment projection was active.
pub fn write_fit(path: &Path, fit: &Fit) -> Result<()> {
    let meta = [
        format!("n={}", fit.n),
        format!("sigma={}", fmt_f64(fit.sigma)),
        format!("eta={}", fmt_f64(fit.eta)),
        format!("projected={}", fit.projected),
    ];
    write_table(
        path,
        &meta,
        &STEP_HEADER,
        fit.link
            .knots()
            .iter()
            .zip(fit.link.values())
            .map(|(&k, &v)| [fmt_f64(k), fmt_f64(v)]),
    )
}

pub fn read_step_fn(path: &Path) -> Result<MonotoneStepFn> {
    let rows = read_table(path, &STEP_HEADER)?;
    let mut knots = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for row in &rows {
        knots.push(parse_f64(path, &row[0])?);
        values.push(parse_f64(path, &row[1])?);
    }
    MonotoneStepFn::new(knots, values)
}

const CONJECTURE_HEADER: [&str; 4] = ["n", "C", "mean", "stderr"];

pub fn write_conjecture(path: &Path, rows: &[ConjectureRow]) -> Result<()> {
    write_table(
        path,
        &[],
        &CONJECTURE_HEADER,
        rows.iter().map(|r| {
            [
                r.n.to_string(),
                fmt_f64(r.big_c),
                fmt_f64(r.mean),
                fmt_f64(r.stderr),
            ]
        }),
    )
}

pub fn read_conjecture(path: &Path) -> Result<Vec<ConjectureRow>> {
    read_table(path, &CONJECTURE_HEADER)?
        .iter()
        .map(|row| {
            Ok(ConjectureRow {
                n: parse_usize(path, &row[0])?,
                big_c: parse_f64(path, &row[1])?,
                mean: parse_f64(path, &row[2])?,
                stderr: parse_f64(path, &row[3])?,
            })
        })
        .collect()
}

const RISK_HEADER: [&str; 6] = ["problem", "n", "sigma", "seed", "risk_kind", "value"];

/// Risk table; an empty slice gives a header-only file.
pub fn write_records(path: &Path, records: &[RiskRecord]) -> Result<()> {
    write_table(
        path,
        &[],
        &RISK_HEADER,
        records.iter().map(|r| {
            [
                r.problem.to_string(),
                r.n.to_string(),
                fmt_f64(r.sigma),
                r.seed.to_string(),
                r.risk_kind.to_string(),
                fmt_f64(r.value),
            ]
        }),
    )
}

pub fn read_records(path: &Path) -> Result<Vec<RiskRecord>> {
    read_table(path, &RISK_HEADER)?
        .iter()
        .map(|row| {
            Ok(RiskRecord {
                problem: row[0].parse()?,
                n: parse_usize(path, &row[1])?,
                sigma: parse_f64(path, &row[2])?,
                seed: row[3]
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(path, format!("bad seed {:?}", &row[3])))?,
                risk_kind: row[4].parse()?,
                value: parse_f64(path, &row[5])?,
            })
        })
        .collect()
}
