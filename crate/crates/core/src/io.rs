//! File formats: model definitions (JSON), panels (CSV plus a JSON
//! sidecar), spectra and connectivity fields (CSV, JSON), fit reports (JSON).
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::connectivity::{ConnectivityField, FieldKind};
use crate::error::{Error, Result};
use crate::estimate::{CriterionValue, FitReport};
use crate::linalg::{CMat, RMat, C64};
use crate::model::VarmaModel;
use crate::simulate::TimeSeriesPanel;
use crate::spectrum::{FrequencyGrid, SpectralMatrix};

// ---------------------------------------------------------------------------
// model files

/// A square matrix given either as rows or as one flat row-major list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixRepr {
    fn to_matrix(&self, n: usize, what: &str) -> Result<RMat> {
        let bad = || Error::InvalidModel(format!("{what} must be a {n}×{n} matrix"));
        match self {
            MatrixRepr::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(bad());
                }
                Ok(RMat::from_fn(n, n, |i, j| rows[i][j]))
            }
            MatrixRepr::Flat(v) => {
                if v.len() != n * n {
                    return Err(bad());
                }
                Ok(RMat::from_row_slice(n, n, v))
            }
        }
    }

    fn from_matrix(m: &RMat) -> Self {
        MatrixRepr::Rows(m.row_iter().map(|r| r.iter().cloned().collect()).collect())
    }
}

/// JSON model definition. Absent `ar` means p = 0; absent `ma` means q = 0 with `B_0 = I`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub n_channels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<Vec<MatrixRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ma: Option<Vec<MatrixRepr>>,
    pub sigma: MatrixRepr,
}

impl ModelFile {
    pub fn to_model(&self) -> Result<VarmaModel> {
        let n = self.n_channels;
        if n == 0 {
            return Err(Error::InvalidModel("n_channels must be positive".into()));
        }
        let ar = match &self.ar {
            Some(blocks) => blocks
                .iter()
                .enumerate()
                .map(|(r, b)| b.to_matrix(n, &format!("ar[{r}]")))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let ma = match &self.ma {
            Some(blocks) if !blocks.is_empty() => blocks
                .iter()
                .enumerate()
                .map(|(s, b)| b.to_matrix(n, &format!("ma[{s}]")))
                .collect::<Result<Vec<_>>>()?,
            _ => vec![RMat::identity(n, n)],
        };
        let sigma = self.sigma.to_matrix(n, "sigma")?;
        VarmaModel::new(ar, ma, sigma)
    }

    pub fn from_model(model: &VarmaModel) -> Self {
        ModelFile {
            n_channels: model.n_channels(),
            ar: Some(model.ar_blocks().iter().map(MatrixRepr::from_matrix).collect()),
            ma: Some(model.ma_blocks().iter().map(MatrixRepr::from_matrix).collect()),
            sigma: MatrixRepr::from_matrix(model.innovations_cov()),
        }
    }
}

pub fn parse_model(json: &str) -> Result<VarmaModel> {
    let file: ModelFile = serde_json::from_str(json)?;
    file.to_model()
}

pub fn read_model(path: &Path) -> Result<VarmaModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn model_to_json(model: &VarmaModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model file serializes")
}

/// SHA-256 of the compact model-file JSON, hex encoded.
pub fn model_hash(model: &VarmaModel) -> String {
    let json = serde_json::to_string(&ModelFile::from_model(model)).expect("model file serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

// ---------------------------------------------------------------------------
// panels

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelMetadata {
    pub seed: u64,
    pub model_hash: String,
    pub burn_in: usize,
    pub n_channels: usize,
    pub n_samples: usize,
}

pub fn write_panel_csv<W: Write>(panel: &TimeSeriesPanel, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let header: Vec<String> =
        std::iter::once("t".to_string()).chain((1..=panel.n_channels()).map(|i| format!("x{i}"))).collect();
    writeln!(w, "{}", header.join(","))?;
    let data = panel.data();
    for t in 0..panel.n_samples() {
        write!(w, "{t}")?;
        for i in 0..panel.n_channels() {
            write!(w, ",{}", data[(i, t)])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `t,x1,...,xN` CSV. Errors name the 1-based file line.
pub fn read_panel_csv<R: Read>(input: R) -> Result<TimeSeriesPanel> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    if headers.len() < 2 || &headers[0] != "t" {
        return Err(Error::Parse { line: 1, message: "header must be `t,x1,...,xN`".into() });
    }
    for (i, h) in headers.iter().skip(1).enumerate() {
        if h != format!("x{}", i + 1) {
            return Err(Error::Parse { line: 1, message: format!("unexpected column name `{h}`") });
        }
    }
    let n = headers.len() - 1;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n + 1 {
            return Err(Error::Parse { line, message: format!("expected {} fields, found {}", n + 1, record.len()) });
        }
        for (i, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("cannot parse `{field}` as a number") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, message: format!("non-finite value `{field}`") });
            }
            columns[i].push(v);
        }
    }
    let len = columns[0].len();
    if len == 0 {
        return Err(Error::Parse { line: 2, message: "panel has no samples".into() });
    }
    TimeSeriesPanel::new(RMat::from_fn(n, len, |i, t| columns[i][t]))
}

pub fn save_panel(panel: &TimeSeriesPanel, meta: Option<&PanelMetadata>, csv_path: &Path) -> Result<()> {
    write_panel_csv(panel, File::create(csv_path)?)?;
    if let Some(meta) = meta {
        std::fs::write(sidecar_path(csv_path), serde_json::to_string_pretty(meta)?)?;
    }
    Ok(())
}

pub fn load_panel(csv_path: &Path) -> Result<TimeSeriesPanel> {
    read_panel_csv(File::open(csv_path)?)
}

/// `panel.csv` → `panel.json`
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

// ---------------------------------------------------------------------------
// spectra and fields

/// `nu,i,j,re,im`, channel indices 1-based, every grid point.
pub fn write_spectrum_csv<W: Write>(spectrum: &SpectralMatrix, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "nu,i,j,re,im")?;
    let n = spectrum.n_channels();
    for (k, m) in spectrum.values.iter().enumerate() {
        let nu = spectrum.grid.nu(k);
        for i in 0..n {
            for j in 0..n {
                writeln!(w, "{nu},{},{},{},{}", i + 1, j + 1, m[(i, j)].re, m[(i, j)].im)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `nu,i,j,re,im,kind,method` rows for each field in turn.
pub fn write_fields_csv<W: Write>(fields: &[&ConnectivityField], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "nu,i,j,re,im,kind,method")?;
    for field in fields {
        let n = field.n_channels();
        for (nu, m) in field.frequencies().iter().zip(&field.values) {
            for i in 0..n {
                for j in 0..n {
                    writeln!(
                        w,
                        "{nu},{},{},{},{},{},{}",
                        i + 1,
                        j + 1,
                        m[(i, j)].re,
                        m[(i, j)].im,
                        field.kind.label(),
                        field.method
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads fields back from the CSV layout of [`write_fields_csv`], one per
/// (kind, method) pair, in order of first appearance.
pub fn read_fields_csv<R: Read>(input: R) -> Result<Vec<ConnectivityField>> {
    struct Acc {
        kind: FieldKind,
        method: String,
        entries: BTreeMap<(u64, usize, usize), C64>,
        freqs: Vec<f64>,
        n: usize,
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut order: Vec<Acc> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse { line, message: format!("bad numeric field {idx}") })
        };
        let nu = parse(0)?;
        let i = parse(1)? as usize;
        let j = parse(2)? as usize;
        let v = C64::new(parse(3)?, parse(4)?);
        let kind = record
            .get(5)
            .and_then(FieldKind::from_label)
            .ok_or_else(|| Error::Parse { line, message: "unknown field kind".into() })?;
        let method = record.get(6).unwrap_or("").to_string();
        let pos = match order.iter().position(|a| a.kind == kind && a.method == method) {
            Some(p) => p,
            None => {
                order.push(Acc { kind, method, entries: BTreeMap::new(), freqs: Vec::new(), n: 0 });
                order.len() - 1
            }
        };
        let acc = &mut order[pos];
        if acc.freqs.last() != Some(&nu) {
            acc.freqs.push(nu);
        }
        acc.n = acc.n.max(i).max(j);
        acc.entries.insert((nu.to_bits(), i - 1, j - 1), v);
    }
    order
        .into_iter()
        .map(|acc| {
            let grid = FrequencyGrid::new(2 * acc.freqs.len())?;
            let values = acc
                .freqs
                .iter()
                .map(|nu| {
                    CMat::from_fn(acc.n, acc.n, |i, j| {
                        acc.entries.get(&(nu.to_bits(), i, j)).cloned().unwrap_or(C64::new(f64::NAN, f64::NAN))
                    })
                })
                .collect();
            Ok(ConnectivityField { grid, values, kind: acc.kind, method: acc.method })
        })
        .collect()
}

#[derive(Serialize)]
struct FieldJson<'a> {
    kind: &'a str,
    method: &'a str,
    n_channels: usize,
    grid_points: usize,
    frequencies: Vec<f64>,
    /// [frequency][i][j]
    re: Vec<Vec<Vec<f64>>>,
    im: Vec<Vec<Vec<f64>>>,
}

pub fn fields_to_json(fields: &[&ConnectivityField]) -> Result<String> {
    let docs: Vec<FieldJson> = fields
        .iter()
        .map(|f| {
            let split = |part: fn(&C64) -> f64| {
                f.values.iter().map(|m| m.row_iter().map(|r| r.iter().map(part).collect()).collect()).collect()
            };
            FieldJson {
                kind: f.kind.label(),
                method: &f.method,
                n_channels: f.n_channels(),
                grid_points: f.grid.n_points(),
                frequencies: f.frequencies(),
                re: split(|v| v.re),
                im: split(|v| v.im),
            }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&docs)?)
}

// ---------------------------------------------------------------------------
// fit reports

#[derive(Serialize)]
struct FitReportJson<'a> {
    model: ModelFile,
    selected_order: (usize, usize),
    criterion: &'a str,
    criterion_values: &'a [CriterionValue],
    residual_cov: MatrixRepr,
    warnings: &'a [String],
}

pub fn fit_report_to_json(report: &FitReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(&FitReportJson {
        model: ModelFile::from_model(&report.model),
        selected_order: report.selected_order,
        criterion: "hannan-quinn",
        criterion_values: &report.criterion_values,
        residual_cov: MatrixRepr::from_matrix(&report.residual_cov),
        warnings: &report.warnings,
    })?)
}
