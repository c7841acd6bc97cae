//! Distributions as CSV rows `dist_id,weight,x_1,...,x_d`.
//!
//! Rows sharing a `dist_id` form one distribution; distributions appear in
//! order of first occurrence. A first row whose numeric fields do not parse
//! is taken as a header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

struct Group {
    id: String,
    coords: Vec<f64>,
    weights: Vec<f64>,
    first_line: usize,
}

fn parse_numbers(rec: &StringRecord) -> std::result::Result<Vec<f64>, String> {
    rec.iter()
        .skip(1)
        .map(|f| f.parse::<f64>().map_err(|_| format!("'{f}' is not a number")))
        .collect()
}

pub fn read_csv_distributions<R: Read>(reader: R) -> Result<Vec<DiscreteDistribution>> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader);
    let mut groups: Vec<Group> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::ParseError {
            line: e.position().map_or(idx + 1, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() < 3 {
            return Err(Error::ParseError {
                line,
                msg: format!("expected dist_id, weight and at least one coordinate, got {} fields", rec.len()),
            });
        }
        let numbers = match parse_numbers(&rec) {
            Ok(v) => v,
            Err(_) if idx == 0 => continue,
            Err(msg) => return Err(Error::ParseError { line, msg }),
        };
        let d = numbers.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::RaggedRows {
                    line,
                    expected,
                    found: d,
                })
            }
            _ => {}
        }
        let id = rec[0].to_string();
        let group = match groups.iter().position(|g| g.id == id) {
            Some(g) => &mut groups[g],
            None => {
                groups.push(Group {
                    id,
                    coords: Vec::new(),
                    weights: Vec::new(),
                    first_line: line,
                });
                groups.last_mut().expect("just pushed")
            }
        };
        group.weights.push(numbers[0]);
        group.coords.extend_from_slice(&numbers[1..]);
    }
    let d = dim.unwrap_or(0);
    groups
        .into_iter()
        .map(|g| {
            let atoms = ndarray::Array2::from_shape_vec((g.weights.len(), d), g.coords).map_err(|e| Error::BadParams(e.to_string()))?;
            DiscreteDistribution::from_arrays(atoms, ndarray::Array1::from(g.weights)).map_err(|e| match e {
                Error::BadWeights(msg) => Error::BadWeights(format!("distribution '{}' (line {}): {msg}", g.id, g.first_line)),
                other => other,
            })
        })
        .collect()
}

pub fn load_csv_distributions(path: impl AsRef<Path>) -> Result<Vec<DiscreteDistribution>> {
    read_csv_distributions(File::open(path)?)
}

/// Writes headerless rows with distribution ids `0..k`. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv_distributions<W: Write>(writer: W, mus: &[DiscreteDistribution]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for (i, mu) in mus.iter().enumerate() {
        for t in 0..mu.len() {
            let mut row = vec![i.to_string(), mu.weight(t).to_string()];
            row.extend(mu.atom(t).iter().map(|x| x.to_string()));
            w.write_record(&row).map_err(|e| Error::Io(e.into()))?;
        }
    }
    w.flush()?;
    Ok(())
}
