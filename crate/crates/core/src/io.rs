//! Dataset and candidate-pool CSV files.
//!
//! Columns are `x1..x{dx},t1..t{dt},y`. Levels are written as one-based
//! integer indices and a missing level as the literal `NaN`. On input a
//! categorical column may instead hold text labels, which are indexed in
//! order of first appearance. Lines starting with `#` are skipped.

use std::io::{Read, Write};
use std::path::Path;

use crate::bayesopt::CandidatePool;
use crate::data::{MixedDataset, MixedSample};
use crate::error::{Error, Result};
use crate::schema::{CategoricalSchema, CategoricalVariable, InputSpace, Level, NumericVariable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Numeric,
    Categorical,
    Response,
}

fn role_of(name: &str) -> Option<Role> {
    let name = name.trim();
    if name == "y" {
        return Some(Role::Response);
    }
    let (head, tail) = name.split_at(name.len().min(1));
    if tail.is_empty() || !tail.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match head {
        "x" => Some(Role::Numeric),
        "t" => Some(Role::Categorical),
        _ => None,
    }
}

/// Raw table: header plus string cells with their source line numbers.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(Table { header, rows })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_number(cell: &str, line: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("column {column}: expected a finite number, found {cell:?}"),
        })
}

fn is_nan_cell(cell: &str) -> bool {
    cell.eq_ignore_ascii_case("nan")
}

/// One categorical column decoded either as indices or as text labels.
struct LevelColumn {
    name: String,
    values: Vec<Level>,
    labels: Option<Vec<String>>,
    has_nan: bool,
}

fn decode_levels(name: &str, cells: &[(usize, &str)]) -> Result<LevelColumn> {
    let non_nan: Vec<&(usize, &str)> = cells.iter().filter(|(_, c)| !is_nan_cell(c)).collect();
    let numeric = non_nan.iter().filter(|(_, c)| c.parse::<usize>().is_ok()).count();
    let has_nan = non_nan.len() < cells.len();
    if numeric == non_nan.len() {
        let values = cells
            .iter()
            .map(|(_, c)| if is_nan_cell(c) { None } else { c.parse().ok() })
            .collect();
        return Ok(LevelColumn {
            name: name.to_owned(),
            values,
            labels: None,
            has_nan,
        });
    }
    if numeric > 0 {
        let (line, cell) = non_nan
            .iter()
            .find(|(_, c)| c.parse::<usize>().is_ok())
            .expect("counted above");
        return Err(Error::Schema(format!(
            "column {name} mixes text labels and integer indices ({cell:?} on line {line})"
        )));
    }
    let mut labels: Vec<String> = Vec::new();
    let values = cells
        .iter()
        .map(|(_, c)| {
            if is_nan_cell(c) {
                return None;
            }
            Some(match labels.iter().position(|l| l == c) {
                Some(i) => i + 1,
                None => {
                    labels.push((*c).to_owned());
                    labels.len()
                }
            })
        })
        .collect();
    Ok(LevelColumn {
        name: name.to_owned(),
        values,
        labels: Some(labels),
        has_nan,
    })
}

struct Columns {
    numeric: Vec<usize>,
    categorical: Vec<usize>,
    response: Option<usize>,
}

fn classify(header: &[String]) -> Result<Columns> {
    let mut cols = Columns {
        numeric: Vec::new(),
        categorical: Vec::new(),
        response: None,
    };
    for (j, name) in header.iter().enumerate() {
        match role_of(name) {
            Some(Role::Numeric) => cols.numeric.push(j),
            Some(Role::Categorical) => cols.categorical.push(j),
            Some(Role::Response) if cols.response.is_none() => cols.response = Some(j),
            Some(Role::Response) => return Err(Error::Schema("duplicate y column".into())),
            None => {
                return Err(Error::Schema(format!(
                    "unrecognized column {name:?}; expected x1..x{{dx}}, t1..t{{dt}}, y"
                )))
            }
        }
    }
    Ok(cols)
}

/// Reads a dataset and infers its input space: numeric ranges are the
/// observed min and max (a constant column gets a unit-width range around
/// its value) and level counts come from the largest index or the number of
/// distinct labels.
pub fn read_dataset<R: Read>(reader: R) -> Result<MixedDataset> {
    let table = read_table(reader)?;
    let cols = classify(&table.header)?;
    let Some(yj) = cols.response else {
        return Err(Error::Schema("missing y column".into()));
    };
    let mut x_rows = vec![Vec::with_capacity(cols.numeric.len()); table.rows.len()];
    let mut numeric = Vec::new();
    for &j in &cols.numeric {
        let name = &table.header[j];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (k, (line, row)) in table.rows.iter().enumerate() {
            let v = parse_number(&row[j], *line, name)?;
            lo = lo.min(v);
            hi = hi.max(v);
            x_rows[k].push(v);
        }
        if table.rows.is_empty() {
            (lo, hi) = (0.0, 1.0);
        } else if lo == hi {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        numeric.push(NumericVariable::new(name.clone(), lo, hi));
    }
    let mut variables = Vec::new();
    let mut t_rows = vec![Vec::with_capacity(cols.categorical.len()); table.rows.len()];
    for &j in &cols.categorical {
        let cells: Vec<(usize, &str)> = table.rows.iter().map(|(l, r)| (*l, r[j].as_str())).collect();
        let col = decode_levels(&table.header[j], &cells)?;
        let var = match col.labels {
            Some(labels) => CategoricalVariable::new(col.name, labels),
            None => {
                let m = col.values.iter().flatten().copied().max().unwrap_or(0);
                CategoricalVariable::indexed(col.name, m)
            }
        };
        variables.push(if col.has_nan { var.with_nan() } else { var });
        for (k, v) in col.values.into_iter().enumerate() {
            t_rows[k].push(v);
        }
    }
    let schema = CategoricalSchema::new(variables).map_err(|e| Error::Schema(e.to_string()))?;
    let space = InputSpace::new(numeric, schema);
    let mut y = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        y.push(parse_number(&row[yj], *line, "y")?);
    }
    let samples = x_rows.into_iter().zip(t_rows).map(|(x, t)| MixedSample::new(x, t)).collect();
    MixedDataset::new(space, samples, y)
}

/// Reads rows against a declared input space. Columns are taken by
/// position: `dx` numeric, `dt` categorical (integer indices or the
/// space's level labels), then an optional `y`.
pub fn read_samples<R: Read>(reader: R, space: &InputSpace) -> Result<(Vec<MixedSample>, Option<Vec<f64>>)> {
    let table = read_table(reader)?;
    let (dx, dt) = (space.dx(), space.dt());
    let with_y = match table.header.len() {
        n if n == dx + dt + 1 => true,
        n if n == dx + dt => false,
        n => {
            return Err(Error::Schema(format!(
                "expected {} or {} columns for this input space, found {n}",
                dx + dt,
                dx + dt + 1
            )))
        }
    };
    let vars = space.categorical.variables();
    let mut samples = Vec::with_capacity(table.rows.len());
    let mut y = Vec::new();
    for (line, row) in &table.rows {
        let mut x = Vec::with_capacity(dx);
        for j in 0..dx {
            x.push(parse_number(&row[j], *line, &table.header[j])?);
        }
        let mut t = Vec::with_capacity(dt);
        for (k, var) in vars.iter().enumerate() {
            let cell = row[dx + k].as_str();
            t.push(if is_nan_cell(cell) {
                None
            } else if let Ok(i) = cell.parse::<usize>() {
                Some(i)
            } else {
                Some(1 + var.levels.iter().position(|l| l == cell).ok_or_else(|| {
                    Error::Schema(format!("line {line}: unknown level {cell:?} for {}", var.name))
                })?)
            });
        }
        let s = MixedSample::new(x, t);
        s.validate(space).map_err(|e| Error::Parse {
            line: *line,
            message: e.to_string(),
        })?;
        samples.push(s);
        if with_y {
            y.push(parse_number(&row[dx + dt], *line, "y")?);
        }
    }
    Ok((samples, with_y.then_some(y)))
}

/// Dataset with a declared input space; the file must carry `y`.
pub fn read_dataset_with_space<R: Read>(reader: R, space: &InputSpace) -> Result<MixedDataset> {
    let (samples, y) = read_samples(reader, space)?;
    let Some(y) = y else {
        return Err(Error::Schema("missing y column".into()));
    };
    MixedDataset::new(space.clone(), samples, y)
}

pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<MixedDataset> {
    read_dataset(std::fs::File::open(path)?)
}

/// Candidate pool with responses attached and the schema inferred from the
/// file. Repeated designs are kept.
pub fn load_candidate_csv(path: impl AsRef<Path>) -> Result<CandidatePool> {
    pool_from_dataset(load_dataset_csv(path)?)
}

pub fn pool_from_dataset(data: MixedDataset) -> Result<CandidatePool> {
    CandidatePool::new(data.space().clone(), data.samples().to_vec(), Some(data.y().to_vec()))
}

fn header(space: &InputSpace, with_y: bool) -> Vec<String> {
    let mut h: Vec<String> = (1..=space.dx()).map(|i| format!("x{i}")).collect();
    h.extend((1..=space.dt()).map(|i| format!("t{i}")));
    if with_y {
        h.push("y".into());
    }
    h
}

fn sample_record(s: &MixedSample) -> Vec<String> {
    let mut rec: Vec<String> = s.x.iter().map(|v| format!("{v:?}")).collect();
    rec.extend(s.t.iter().map(|t| match t {
        Some(i) => i.to_string(),
        None => "NaN".into(),
    }));
    rec
}

/// Writes `x1..,t1..,y` with full-precision numbers.
pub fn write_dataset<W: Write>(writer: W, data: &MixedDataset) -> Result<()> {
    write_rows(writer, data.space(), data.samples(), Some(data.y()))
}

pub fn write_rows<W: Write>(writer: W, space: &InputSpace, samples: &[MixedSample], y: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(space, y.is_some())).map_err(csv_error)?;
    for (k, s) in samples.iter().enumerate() {
        let mut rec = sample_record(s);
        if let Some(y) = y {
            rec.push(format!("{:?}", y[k]));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
