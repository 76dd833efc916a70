//! Linear components `f_i(x) = <a_i, x> + b_i` and their CSV format.
//!
//! File layout: the literal header line `d,N`, one line holding the two
//! integers, then `N` lines of `d + 1` floats (`a_i` followed by `b_i`).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::Problem;

pub const LINEAR_CSV_HEADER: &str = "d,N";

#[derive(Debug, Clone, PartialEq)]
pub struct LinearInstance {
    a: Vec<Vector>,
    b: Vec<f64>,
    lip: f64,
}

impl LinearInstance {
    pub fn new(a: Vec<Vector>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Empty("linear instance needs at least one component"));
        }
        if a.len() != b.len() {
            return Err(Error::InvalidParameter(format!(
                "{} slopes but {} offsets",
                a.len(),
                b.len()
            )));
        }
        let d = a[0].len();
        if let Some(bad) = a.iter().find(|ai| ai.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        let lip = a.iter().map(|ai| ai.norm()).fold(0.0, f64::max);
        Ok(Self { a, b, lip })
    }

    pub fn slopes(&self) -> &[Vector] {
        &self.a
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let map = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["d", "N"]).map_err(map)?;
        out.write_record([self.dim().to_string(), self.a.len().to_string()]).map_err(map)?;
        for (ai, bi) in self.a.iter().zip(&self.b) {
            let row: Vec<String> = ai.iter().chain(std::iter::once(bi)).map(|v| format!("{v:e}")).collect();
            out.write_record(&row).map_err(map)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl Problem for LinearInstance {
    fn dim(&self) -> usize {
        self.a[0].len()
    }
    fn num_components(&self) -> usize {
        self.a.len()
    }
    fn value(&self, i: usize, x: &Vector) -> f64 {
        self.a[i].dot(x) + self.b[i]
    }
    fn subgradient(&self, i: usize, _x: &Vector) -> Vector {
        self.a[i].clone()
    }
    fn value_and_subgradient_into(&self, i: usize, x: &Vector, grad: &mut Vector) -> f64 {
        grad.copy_from(&self.a[i]);
        self.value(i, x)
    }
    fn lipschitz(&self) -> f64 {
        self.lip
    }
    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }
}

pub fn load_linear_csv(path: impl AsRef<Path>) -> Result<LinearInstance> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_linear_csv(&text)
}

/// Parses the linear-instance CSV format. Error rows are 1-based file lines.
pub fn parse_linear_csv(text: &str) -> Result<LinearInstance> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let mut next = |row: usize| -> Result<Option<csv::StringRecord>> {
        match records.next() {
            None => Ok(None),
            Some(Ok(r)) => Ok(Some(r)),
            Some(Err(e)) => Err(Error::Parse { row, msg: e.to_string() }),
        }
    };
    let parse_err = |row: usize, msg: String| Error::Parse { row, msg };

    let header = next(1)?.ok_or_else(|| parse_err(1, "missing header `d,N`".into()))?;
    if header.len() != 2 || &header[0] != "d" || &header[1] != "N" {
        return Err(parse_err(1, format!("expected header `{LINEAR_CSV_HEADER}`")));
    }
    let sizes = next(2)?.ok_or_else(|| parse_err(2, "missing dimension row".into()))?;
    if sizes.len() != 2 {
        return Err(parse_err(2, "expected two integers `d,N`".into()));
    }
    let d: usize = sizes[0].parse().map_err(|e| parse_err(2, format!("bad d: {e}")))?;
    let n: usize = sizes[1].parse().map_err(|e| parse_err(2, format!("bad N: {e}")))?;
    if n == 0 {
        return Err(parse_err(2, "N must be positive".into()));
    }
    if d == 0 {
        return Err(parse_err(2, "d must be positive".into()));
    }
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        let row = k + 3;
        let rec = next(row)?.ok_or_else(|| parse_err(row, format!("expected {n} component rows, found {k}")))?;
        if rec.len() != d + 1 {
            return Err(parse_err(row, format!("expected {} fields, found {}", d + 1, rec.len())));
        }
        let vals = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(row, format!("not a finite float: `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        a.push(Vector::from_column_slice(&vals[..d]));
        b.push(vals[d]);
    }
    if let Some(extra) = next(n + 3)? {
        if extra.iter().any(|s| !s.is_empty()) {
            return Err(parse_err(n + 3, format!("more than N = {n} component rows")));
        }
    }
    LinearInstance::new(a, b)
}
