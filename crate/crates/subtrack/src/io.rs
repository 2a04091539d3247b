//! CSV stream formats and their JSON descriptors. Indices are 1-based in
//! files and 0-based in memory; this module is the only place the two meet.
//!
//! - matrix stream: `t,index,value` with a `{"kind":"matrix","P":..}` descriptor
//! - tensor stream: `t,m,n,value` with a `{"kind":"tensor","M":..,"N":..}` descriptor
//! - matrix ground truth: dense rows `t,value_1,...,value_P`
//! - routing matrix: `link,flow,fraction`
//!
//! Records are grouped by ascending `t`; missing time steps become empty
//! observations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use subtrack_core::anomaly::RoutingMatrix;
use subtrack_core::{MaskedSlice, MaskedVector};

use crate::error::{Error, Result};

/// Sidecar descriptor of a stream CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Descriptor {
    Matrix {
        #[serde(rename = "P")]
        p: usize,
    },
    Tensor {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "N")]
        n: usize,
    },
}

/// `stream.csv` → `stream.json`.
pub fn descriptor_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Attach the file name to errors raised while reading it.
pub fn in_file<T>(path: &Path, res: Result<T>) -> Result<T> {
    res.map_err(|e| match e {
        e @ (Error::Io { .. } | Error::InFile { .. }) => e,
        e => Error::InFile { path: path.to_path_buf(), source: Box::new(e) },
    })
}

pub fn read_descriptor(path: &Path) -> Result<Descriptor> {
    in_file(path, serde_json::from_reader(open(path)?).map_err(Error::from))
}

pub fn write_descriptor(path: &Path, d: &Descriptor) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, d)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

struct Record {
    line: u64,
    fields: csv::StringRecord,
}

fn records<R: Read>(reader: R, width: Option<usize>) -> impl Iterator<Item = Result<Record>> {
    let rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).flexible(true).from_reader(reader);
    rdr.into_records().map(move |rec| {
        let fields = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(line, e.to_string())
        })?;
        let line = fields.position().map_or(0, |p| p.line());
        if let Some(w) = width {
            if fields.len() != w {
                return Err(Error::parse(line, format!("expected {w} fields, found {}", fields.len())));
            }
        }
        Ok(Record { line, fields })
    })
}

impl Record {
    fn index(&self, col: usize, name: &str, max: usize) -> Result<usize> {
        let v: usize = self.fields[col]
            .parse()
            .map_err(|_| Error::parse(self.line, format!("{name} `{}` is not a positive integer", &self.fields[col])))?;
        if v == 0 || v > max {
            return Err(Error::parse(self.line, format!("{name} {v} outside [1, {max}]")));
        }
        Ok(v)
    }

    fn time(&self) -> Result<usize> {
        self.index(0, "t", usize::MAX)
    }

    fn value(&self, col: usize) -> Result<f64> {
        let v: f64 = self.fields[col]
            .parse()
            .map_err(|_| Error::parse(self.line, format!("`{}` is not a number", &self.fields[col])))?;
        if !v.is_finite() {
            return Err(Error::parse(self.line, "value is not finite"));
        }
        Ok(v)
    }
}

/// Groups `(t, payload)` records by `t`, rejecting decreasing times and
/// filling gaps with empty groups.
fn group_by_time<T>(items: impl Iterator<Item = Result<(u64, usize, T)>>) -> Result<Vec<Vec<(u64, T)>>> {
    let mut out: Vec<Vec<(u64, T)>> = Vec::new();
    for item in items {
        let (line, t, payload) = item?;
        if t < out.len() {
            return Err(Error::parse(line, format!("t = {t} after t = {}", out.len())));
        }
        out.resize_with(t, Vec::new);
        out[t - 1].push((line, payload));
    }
    Ok(out)
}

/// Reads a `t,index,value` stream over `{1..p}`.
pub fn read_matrix_stream<R: Read>(reader: R, p: usize) -> Result<Vec<MaskedVector>> {
    let rows = records(reader, Some(3)).map(|r| {
        let r = r?;
        Ok((r.line, r.time()?, (r.index(1, "index", p)? - 1, r.value(2)?)))
    });
    group_by_time(rows)?
        .into_iter()
        .enumerate()
        .map(|(k, group)| {
            let mut indices = Vec::with_capacity(group.len());
            let mut values = Vec::with_capacity(group.len());
            for (line, (i, v)) in group {
                if indices.last().is_some_and(|&last| i <= last) {
                    return Err(Error::parse(line, format!("index {} not strictly increasing within t = {}", i + 1, k + 1)));
                }
                indices.push(i);
                values.push(v);
            }
            Ok(MaskedVector::new(k + 1, p, indices, values)?)
        })
        .collect()
}

pub fn write_matrix_stream<W: Write>(mut w: W, stream: &[MaskedVector]) -> Result<()> {
    write_triplets(&mut w, "t,index,value", stream)
}

/// Writes sparse `t,<name>,value` rows with 1-based indices.
pub fn write_triplets<W: Write>(w: &mut W, header: &str, stream: &[MaskedVector]) -> Result<()> {
    writeln!(w, "{header}")?;
    for obs in stream {
        for (i, v) in obs.iter() {
            writeln!(w, "{},{},{}", obs.t(), i + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,m,n,value` stream of `dims` slices.
pub fn read_tensor_stream<R: Read>(reader: R, dims: (usize, usize)) -> Result<Vec<MaskedSlice>> {
    let rows = records(reader, Some(4)).map(|r| {
        let r = r?;
        let m = r.index(1, "m", dims.0)? - 1;
        let n = r.index(2, "n", dims.1)? - 1;
        Ok((r.line, r.time()?, (m, n, r.value(3)?)))
    });
    group_by_time(rows)?
        .into_iter()
        .enumerate()
        .map(|(k, group)| {
            let mut seen = std::collections::HashSet::with_capacity(group.len());
            let mut entries = Vec::with_capacity(group.len());
            for (line, (m, n, v)) in group {
                if !seen.insert((m, n)) {
                    return Err(Error::parse(line, format!("duplicate cell ({}, {}) in t = {}", m + 1, n + 1, k + 1)));
                }
                entries.push((m, n, v));
            }
            Ok(MaskedSlice::new(k + 1, dims, entries)?)
        })
        .collect()
}

pub fn write_tensor_stream<W: Write>(mut w: W, stream: &[MaskedSlice]) -> Result<()> {
    writeln!(w, "t,m,n,value")?;
    for s in stream {
        for &(m, n, v) in s.entries() {
            writeln!(w, "{},{},{},{}", s.t(), m + 1, n + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dense ground-truth rows `t,value_1,...,value_P`; `t` must run 1, 2, ...
pub fn read_matrix_truth<R: Read>(reader: R, p: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for r in records(reader, Some(p + 1)) {
        let r = r?;
        let t = r.time()?;
        if t != out.len() + 1 {
            return Err(Error::parse(r.line, format!("expected t = {}, found {t}", out.len() + 1)));
        }
        out.push((1..=p).map(|c| r.value(c)).collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

pub fn write_matrix_truth<W: Write>(mut w: W, truth: &[Vec<f64>]) -> Result<()> {
    let p = truth.first().map_or(0, Vec::len);
    write!(w, "t")?;
    for i in 1..=p {
        write!(w, ",value_{i}")?;
    }
    writeln!(w)?;
    for (k, row) in truth.iter().enumerate() {
        write!(w, "{}", k + 1)?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Dense tensor ground truth in the `t,m,n,value` layout.
pub fn read_tensor_truth<R: Read>(reader: R, dims: (usize, usize)) -> Result<Vec<DMatrix<f64>>> {
    Ok(read_tensor_stream(reader, dims)?.iter().map(MaskedSlice::to_dense).collect())
}

pub fn write_tensor_truth<W: Write>(w: W, truth: &[DMatrix<f64>]) -> Result<()> {
    let slices = truth
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let entries = (0..x.nrows()).flat_map(|m| (0..x.ncols()).map(move |n| (m, n, x[(m, n)]))).collect();
            MaskedSlice::new(k + 1, x.shape(), entries)
        })
        .collect::<subtrack_core::Result<Vec<_>>>()?;
    write_tensor_stream(w, &slices)
}

/// Reads `link,flow,fraction` rows; the matrix size is the largest index
/// seen in each column.
pub fn read_routing<R: Read>(reader: R) -> Result<RoutingMatrix> {
    let mut triplets = Vec::new();
    let (mut links, mut flows) = (0, 0);
    for r in records(reader, Some(3)) {
        let r = r?;
        let l = r.index(0, "link", usize::MAX)?;
        let f = r.index(1, "flow", usize::MAX)?;
        let v = r.value(2)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::parse(r.line, format!("fraction {v} outside [0, 1]")));
        }
        links = links.max(l);
        flows = flows.max(f);
        triplets.push((l - 1, f - 1, v));
    }
    let mut r = DMatrix::zeros(links, flows);
    for (l, f, v) in triplets {
        r[(l, f)] = v;
    }
    Ok(RoutingMatrix::from_matrix(r)?)
}

/// Writes the nonzero routing fractions.
pub fn write_routing<W: Write>(mut w: W, routing: &RoutingMatrix) -> Result<()> {
    writeln!(w, "link,flow,fraction")?;
    let r = routing.matrix();
    for l in 0..r.nrows() {
        for f in 0..r.ncols() {
            if r[(l, f)] != 0.0 {
                writeln!(w, "{},{},{}", l + 1, f + 1, r[(l, f)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
