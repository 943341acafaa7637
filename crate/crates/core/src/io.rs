//! File formats: measure JSON, sparse triplet CSV, summaries and experiment
//! tables. Everything here is `f64`.
//!
//! Measure JSON:
//!
//! ```json
//! {"dims": [1, 1], "atoms": [[0.0, 1.0], [1.0, 0.0]], "weights": [0.5, 0.5]}
//! ```
//!
//! `dims` lists the block dimensions (a single entry for a measure on one
//! block); every atom has `Σ dims` coordinates; `weights` may be omitted for
//! the uniform measure. Writing and re-reading is bit-exact for finite values.
//!
//! Triplet CSV: a first line `# {json header}`, then `row,col,mass`. Masses
//! and every other real written to CSV use 17 significant digits.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Exponent, MarginalVector, MetricSpec, ProductMeasure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub dims: Vec<usize>,
    pub atoms: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Renders a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn in_file(path: &Path, err: Error) -> Error {
    match err {
        Error::Input { field, message } => Error::Input { field, message: format!("{}: {message}", path.display()) },
        Error::Dimension { expected, found } => Error::Input {
            field: "atoms".into(),
            message: format!("{}: atom dimension {found}, expected {expected}", path.display()),
        },
        other => other,
    }
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

impl MeasureFile {
    pub fn from_measure(m: &DiscreteMeasure<f64>, dims: &[usize]) -> Self {
        MeasureFile {
            dims: dims.to_vec(),
            atoms: m.atoms().map(<[f64]>::to_vec).collect(),
            weights: Some(m.weights().to_vec()),
        }
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure<f64>> {
        let d: usize = self.dims.iter().sum();
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::input("dims", "block dimensions must be positive"));
        }
        if let Some(a) = self.atoms.iter().find(|a| a.len() != d) {
            return Err(Error::input("atoms", format!("atom of dimension {} but dims sum to {d}", a.len())));
        }
        if self.atoms.is_empty() {
            return Err(Error::input("atoms", "no atoms"));
        }
        DiscreteMeasure::new(self.atoms.clone(), self.weights.clone())
    }
}

/// Reads a measure JSON file, returning the measure and its block dimensions.
pub fn load_measure(path: &Path) -> Result<(DiscreteMeasure<f64>, Vec<usize>)> {
    let file: MeasureFile = read_json(path)?;
    let m = file.to_measure().map_err(|e| in_file(path, e))?;
    Ok((m, file.dims))
}

pub fn save_measure(path: &Path, m: &DiscreteMeasure<f64>, dims: &[usize]) -> Result<()> {
    write_json(path, &MeasureFile::from_measure(m, dims))
}

/// Joint measure on the blocks named by the file's `dims`.
pub fn load_product(path: &Path, p: Exponent<f64>) -> Result<ProductMeasure<f64>> {
    let (m, dims) = load_measure(path)?;
    ProductMeasure::new(m, MetricSpec::new(p, dims)?).map_err(|e| in_file(path, e))
}

/// One single-block measure file per marginal.
pub fn load_marginals(paths: &[PathBuf], spec: &MetricSpec<f64>) -> Result<MarginalVector<f64>> {
    if paths.len() != spec.blocks() {
        return Err(Error::input("mu", format!("{} marginal files for {} blocks", paths.len(), spec.blocks())));
    }
    let mut comps = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        let (m, dims) = load_measure(path)?;
        if dims.len() != 1 || dims[0] != spec.block_dims()[i] {
            return Err(Error::Input {
                field: "dims".into(),
                message: format!("{}: expected [{}] for block {}", path.display(), spec.block_dims()[i], i + 1),
            });
        }
        comps.push(m);
    }
    MarginalVector::new(comps, spec)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TripletHeader {
    /// File holding the row measure.
    pub rows: String,
    /// File holding the column measure.
    pub cols: String,
}

/// Writes `# {header}` then `row,col,mass` lines.
pub fn write_triplets(path: &Path, header: &TripletHeader, triplets: &[(usize, usize, f64)]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let head = serde_json::to_string(header).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    writeln!(out, "# {head}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    w.write_record(["row", "col", "mass"]).map_err(csv_err)?;
    for &(i, j, m) in triplets {
        w.write_record([i.to_string(), j.to_string(), fmt_real(m)]).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_triplets(path: &Path) -> Result<(TripletHeader, Vec<(usize, usize, f64)>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first = text.lines().next().unwrap_or_default();
    let header: TripletHeader = match first.strip_prefix("# ") {
        Some(h) => serde_json::from_str(h).map_err(|source| Error::Json { path: path.to_path_buf(), source })?,
        None => return Err(Error::Input { field: "header".into(), message: format!("{}: missing", path.display()) }),
    };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let (i, j, m): (usize, usize, f64) = rec.map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
        out.push((i, j, m));
    }
    Ok((header, out))
}

/// Writes rows of already-formatted cells under `columns`.
pub fn write_table(path: &Path, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}
