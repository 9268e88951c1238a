//! Monte Carlo experiments against a known generating model, and analysis of
//! user-supplied panels.
//!
//! Realization `r` is simulated with seed `base_seed + r`. Realizations run on
//! a bounded rayon pool and are aggregated in realization order, so every
//! exported file is independent of the thread count.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::connectivity::{self, ConnectivityField};
use crate::error::{Error, Result};
use crate::estimate::{self, FitReport};
use crate::io;
use crate::model::{RootClass, VarmaModel};
use crate::simulate::{simulate, TimeSeriesPanel, DEFAULT_BURN_IN};
use crate::spectrum::{FrequencyGrid, SpectralFactor};
use crate::welch::{welch_cross_spectrum, WelchConfig};
use crate::wilson::{wilson_factorize, WilsonConfig};

pub const DEFAULT_REALIZATIONS: usize = 100;
pub const DEFAULT_MAX_VMA_ORDER: usize = 100;
/// Real part above which an estimate shows a link the generator lacks.
pub const SPURIOUS_THRESHOLD: f64 = 0.1;
/// Theoretical magnitude below which a link counts as absent.
const ABSENT_LINK: f64 = 1e-9;

/// Model orders `(p, q)`.
pub type Orders = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "VAR")]
    Var,
    #[serde(rename = "VMA")]
    Vma,
    #[serde(rename = "VARMA")]
    Varma,
    #[serde(rename = "WN")]
    Wn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Var, Method::Vma, Method::Varma, Method::Wn];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Var => "VAR",
            Method::Vma => "VMA",
            Method::Varma => "VARMA",
            Method::Wn => "WN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "var" => Ok(Method::Var),
            "vma" => Ok(Method::Vma),
            "varma" => Ok(Method::Varma),
            "wn" | "wilson" => Ok(Method::Wn),
            other => Err(Error::Config(format!("unknown method '{other}' (expected var, vma, varma or wn)"))),
        }
    }
}

/// Parses a comma-separated method list, deduplicated and in canonical order.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut methods: Vec<Method> =
        s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(Error::Config("at least one method must be selected".into()));
    }
    Ok(methods)
}

/// Parses `p,q`.
pub fn parse_orders(s: &str) -> Result<Orders> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("orders must be 'p,q' with non-negative integers, got '{s}'"));
    match parts.as_slice() {
        [p, q] => Ok((p.parse().map_err(|_| bad())?, q.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

/// Estimation settings shared by experiments and panel analysis.
#[derive(Clone, Debug, Serialize)]
pub struct MethodConfig {
    pub methods: Vec<Method>,
    /// `(p, q)` for VARMA; its `q` also fixes the VMA order.
    pub orders: Option<Orders>,
    pub segment_len: usize,
    pub max_var_order: usize,
    pub long_ar_order: usize,
    pub max_vma_order: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            methods: vec![Method::Var, Method::Vma, Method::Wn],
            orders: None,
            segment_len: WelchConfig::DEFAULT_SEGMENT_LEN,
            max_var_order: estimate::DEFAULT_MAX_VAR_ORDER,
            long_ar_order: estimate::DEFAULT_LONG_AR_ORDER,
            max_vma_order: DEFAULT_MAX_VMA_ORDER,
        }
    }
}

impl MethodConfig {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method must be selected".into()));
        }
        WelchConfig::new(self.segment_len)?;
        if self.max_var_order == 0 || self.long_ar_order == 0 || self.max_vma_order == 0 {
            return Err(Error::Config("maximum orders must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.segment_len)
    }

    /// Fixed `(p, q)` per method, `None` where orders are chosen by Hannan-Quinn.
    fn resolve(&self, model: Option<&VarmaModel>) -> Result<Vec<(Method, Option<Orders>)>> {
        self.methods
            .iter()
            .map(|&m| {
                let order = match m {
                    Method::Var | Method::Wn => None,
                    Method::Vma => match (self.orders, model) {
                        (Some((_, q)), _) if q > 0 => Some((0, q)),
                        (_, Some(g)) if g.ar_order() == 0 && g.ma_order() > 0 => Some((0, g.ma_order())),
                        _ => None,
                    },
                    Method::Varma => match (self.orders, model) {
                        (Some((p, q)), _) if p > 0 || q > 0 => Some((p, q)),
                        (Some(_), _) => return Err(Error::Config("VARMA orders must not both be zero".into())),
                        (None, Some(g)) if g.ar_order() > 0 && g.ma_order() > 0 => Some((g.ar_order(), g.ma_order())),
                        _ => {
                            return Err(Error::Config(
                                "VARMA requires --orders p,q (the model has no mixed AR/MA structure to copy)".into(),
                            ))
                        }
                    },
                };
                Ok((m, order))
            })
            .collect()
    }
}

/// Spectral factor and connectivity fields from one method on one panel.
pub struct MethodOutput {
    pub method: Method,
    pub order: Option<Orders>,
    pub factor: SpectralFactor,
    pub tpdc: ConnectivityField,
    pub tdtf: ConnectivityField,
    pub warnings: Vec<String>,
    pub fit: Option<FitReport>,
}

fn fit_method(
    panel: &TimeSeriesPanel,
    method: Method,
    order: Option<Orders>,
    config: &MethodConfig,
    grid: &FrequencyGrid,
) -> Result<MethodOutput> {
    let (factor, fit) = match method {
        Method::Wn => {
            let spectrum = welch_cross_spectrum(panel, &WelchConfig::new(config.segment_len)?)?;
            (wilson_factorize(&spectrum, &WilsonConfig::default())?, None)
        }
        _ => {
            let fit = match (method, order) {
                (Method::Var, _) => estimate::fit_var(panel, config.max_var_order)?,
                (Method::Vma, Some((_, q))) => estimate::fit_vma(panel, q, config.long_ar_order)?,
                (Method::Vma, None) => estimate::select_vma(panel, config.max_vma_order, config.long_ar_order)?,
                (Method::Varma, Some((p, q))) => estimate::fit_varma(panel, p, q, config.long_ar_order)?,
                _ => unreachable!("orders resolved before fitting"),
            };
            (fit.model.transfer_function(grid)?, Some(fit))
        }
    };
    let label = method.label();
    let tpdc = connectivity::total_pdc(&factor)?.with_method(label);
    let tdtf = connectivity::total_dtf(&factor)?.with_method(label);
    Ok(MethodOutput {
        method,
        order: fit.as_ref().map(|f| f.selected_order),
        warnings: fit.as_ref().map(|f| f.warnings.clone()).unwrap_or_default(),
        factor,
        tpdc,
        tdtf,
        fit,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    /// Human-readable source, e.g. `example 1` or a file name.
    pub label: String,
    pub model: VarmaModel,
    pub n_samples: usize,
    pub realizations: usize,
    pub base_seed: u64,
    pub burn_in: usize,
    pub methods: MethodConfig,
    /// Worker threads; 0 uses every core. Does not affect results.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn new(label: impl Into<String>, model: VarmaModel, n_samples: usize) -> Self {
        ExperimentSpec {
            label: label.into(),
            model,
            n_samples,
            realizations: DEFAULT_REALIZATIONS,
            base_seed: 0,
            burn_in: DEFAULT_BURN_IN,
            methods: MethodConfig::default(),
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("at least one realization is required".into()));
        }
        self.methods.validate()?;
        if self.methods.methods.contains(&Method::Wn) && self.n_samples < self.methods.segment_len {
            return Err(Error::Config(format!(
                "{} samples are fewer than one {}-sample Welch segment",
                self.n_samples, self.methods.segment_len
            )));
        }
        if !self.model.is_stable() {
            return Err(Error::UnstableModel { max_magnitude: self.model.ar_root_report().max_magnitude() });
        }
        self.methods.resolve(Some(&self.model))?;
        Ok(())
    }

    /// SHA-256 of the result-determining settings (thread count excluded).
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            model: io::ModelFile,
            n_samples: usize,
            realizations: usize,
            base_seed: u64,
            burn_in: usize,
            methods: &'a MethodConfig,
        }
        let doc = serde_json::to_string(&Hashed {
            model: io::ModelFile::from_model(&self.model),
            n_samples: self.n_samples,
            realizations: self.realizations,
            base_seed: self.base_seed,
            burn_in: self.burn_in,
            methods: &self.methods,
        })
        .expect("plain data serializes");
        hex::encode(Sha256::digest(doc.as_bytes()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.realizations as u64).map(|r| self.base_seed.wrapping_add(r)).collect()
    }
}

/// Aggregate over realizations for one method.
#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_tpdc_mse: Option<f64>,
    pub mean_tdtf_mse: Option<f64>,
    /// `None` where the realization failed.
    pub tpdc_mse: Vec<Option<f64>>,
    pub tdtf_mse: Vec<Option<f64>>,
    /// Orders chosen per realization (parametric methods).
    pub orders: Vec<Option<Orders>>,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    /// Links `(i, j)`, 1-based, absent from the generator but shown by realization 0.
    pub spurious_links: Vec<(usize, usize)>,
    pub realization0_tpdc_mse: Option<f64>,
}

pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub config_hash: String,
    pub theory_tpdc: ConnectivityField,
    pub theory_tdtf: ConnectivityField,
    pub summaries: Vec<MethodSummary>,
    /// Realization-0 estimates, one per method that succeeded on it.
    pub realization0: Vec<MethodOutput>,
    pub nonminimum_phase_generator: bool,
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn spurious_link_detected(&self) -> bool {
        self.summaries.iter().any(|s| !s.spurious_links.is_empty())
    }
}

/// Theoretical tPDC and tDTF of a generator, via its canonical (`B₀ = I`) form.
pub fn theoretical_fields(model: &VarmaModel, grid: &FrequencyGrid) -> Result<(ConnectivityField, ConnectivityField)> {
    let factor = model.canonical().transfer_function(grid)?;
    Ok((
        connectivity::total_pdc(&factor)?.with_method("theory"),
        connectivity::total_dtf(&factor)?.with_method("theory"),
    ))
}

/// Entries absent in `theory` whose real part in `estimate` exceeds [`SPURIOUS_THRESHOLD`].
pub fn spurious_links(estimate: &ConnectivityField, theory: &ConnectivityField) -> Vec<(usize, usize)> {
    let n = theory.n_channels();
    let mut links = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let absent = theory.values.iter().all(|m| m[(i, j)].norm() < ABSENT_LINK);
            let shown = estimate.values.iter().map(|m| m[(i, j)].re).fold(f64::NEG_INFINITY, f64::max);
            if i != j && absent && shown > SPURIOUS_THRESHOLD {
                links.push((i + 1, j + 1));
            }
        }
    }
    links
}

type RealizationOutcome = Vec<Result<MethodOutput>>;

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let grid = spec.methods.grid()?;
    let plan = spec.methods.resolve(Some(&spec.model))?;
    let (theory_tpdc, theory_tdtf) = theoretical_fields(&spec.model, &grid)?;

    let run_one = |seed: u64| -> Result<RealizationOutcome> {
        let panel = simulate(&spec.model, spec.n_samples, seed, spec.burn_in)?;
        Ok(plan.iter().map(|&(m, order)| fit_method(&panel, m, order, &spec.methods, &grid)).collect())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let seeds = spec.seeds();
    let outcomes: Vec<RealizationOutcome> =
        pool.install(|| seeds.par_iter().map(|&s| run_one(s)).collect::<Result<_>>())?;

    // A method that fails everywhere fails the run with its first error.
    for slot in 0..plan.len() {
        if outcomes.iter().all(|o| o[slot].is_err()) {
            let mut first = outcomes.into_iter().next().expect("at least one realization");
            return Err(first.swap_remove(slot).err().expect("checked above"));
        }
    }

    let mut summaries = Vec::new();
    let mut realization0 = Vec::new();
    for (slot, &(method, _)) in plan.iter().enumerate() {
        let mut s = MethodSummary {
            method,
            succeeded: 0,
            failed: 0,
            mean_tpdc_mse: None,
            mean_tdtf_mse: None,
            tpdc_mse: Vec::new(),
            tdtf_mse: Vec::new(),
            orders: Vec::new(),
            errors: Vec::new(),
            warnings: Vec::new(),
            spurious_links: Vec::new(),
            realization0_tpdc_mse: None,
        };
        for (r, outcome) in outcomes.iter().enumerate() {
            match &outcome[slot] {
                Ok(out) => {
                    s.succeeded += 1;
                    s.tpdc_mse.push(Some(connectivity::mse_vs_reference(&out.tpdc, &theory_tpdc)?));
                    s.tdtf_mse.push(Some(connectivity::mse_vs_reference(&out.tdtf, &theory_tdtf)?));
                    s.orders.push(out.order);
                    s.warnings.extend(out.warnings.iter().map(|w| format!("realization {r}: {w}")));
                }
                Err(e) => {
                    s.failed += 1;
                    s.tpdc_mse.push(None);
                    s.tdtf_mse.push(None);
                    s.orders.push(None);
                    s.errors.push(format!("realization {r}: {e}"));
                }
            }
        }
        s.mean_tpdc_mse = mean(&s.tpdc_mse);
        s.mean_tdtf_mse = mean(&s.tdtf_mse);
        s.realization0_tpdc_mse = s.tpdc_mse[0];
        summaries.push(s);
    }
    // Keep realization 0 outputs, aligned with the plan.
    let mut first = outcomes.into_iter().next().expect("at least one realization");
    for (slot, s) in summaries.iter_mut().enumerate() {
        if let Ok(out) = std::mem::replace(&mut first[slot], Err(Error::Config(String::new()))) {
            s.spurious_links = spurious_links(&out.tpdc, &theory_tpdc);
            realization0.push(out);
        }
    }

    Ok(ExperimentResult {
        config_hash: spec.config_hash(),
        nonminimum_phase_generator: spec.model.ma_root_report().classification == RootClass::NonminimumPhase,
        spec: spec.clone(),
        theory_tpdc,
        theory_tdtf,
        summaries,
        realization0,
    })
}

fn mean(values: &[Option<f64>]) -> Option<f64> {
    let ok: Vec<f64> = values.iter().flatten().cloned().collect();
    (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
}

fn sci(v: Option<f64>) -> String {
    v.map_or_else(|| "failed".to_string(), |x| format!("{x:.3e}"))
}

/// Aligned text table: one row for the sample size, one column per method.
pub fn format_table(result: &ExperimentResult) -> String {
    let mut out = format!(
        "{}: mean tPDC MSE over R={} realizations (seeds {}..{})\n",
        result.spec.label,
        result.spec.realizations,
        result.spec.base_seed,
        result.spec.base_seed.wrapping_add(result.spec.realizations as u64 - 1)
    );
    out.push_str(&format!("{:>8}", "n_s"));
    for s in &result.summaries {
        out.push_str(&format!("  {:>10}", s.method.label()));
    }
    out.push('\n');
    out.push_str(&format!("{:>8}", result.spec.n_samples));
    for s in &result.summaries {
        out.push_str(&format!("  {:>10}", sci(s.mean_tpdc_mse)));
    }
    out.push('\n');
    out
}

/// `n_samples,method,realizations,succeeded,mean_tpdc_mse,mean_tdtf_mse`
pub fn format_table_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("n_samples,method,realizations,succeeded,mean_tpdc_mse,mean_tdtf_mse\n");
    let num = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for s in &result.summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            result.spec.n_samples,
            s.method.label(),
            result.spec.realizations,
            s.succeeded,
            num(s.mean_tpdc_mse),
            num(s.mean_tdtf_mse)
        ));
    }
    out
}

#[derive(Serialize)]
struct ExperimentSummaryJson<'a> {
    label: &'a str,
    config_hash: &'a str,
    model: io::ModelFile,
    model_hash: String,
    n_samples: usize,
    realizations: usize,
    seeds: Vec<u64>,
    burn_in: usize,
    settings: &'a MethodConfig,
    grid_points: usize,
    reporting_band: &'static str,
    mse_convention: &'static str,
    nonminimum_phase_generator: bool,
    spurious_link_detected: bool,
    generator_ma_root_magnitudes: Vec<f64>,
    methods: &'a [MethodSummary],
}

pub fn summary_json(result: &ExperimentResult) -> Result<String> {
    let spec = &result.spec;
    Ok(serde_json::to_string_pretty(&ExperimentSummaryJson {
        label: &spec.label,
        config_hash: &result.config_hash,
        model: io::ModelFile::from_model(&spec.model),
        model_hash: io::model_hash(&spec.model),
        n_samples: spec.n_samples,
        realizations: spec.realizations,
        seeds: spec.seeds(),
        burn_in: spec.burn_in,
        settings: &spec.methods,
        grid_points: result.theory_tpdc.grid.n_points(),
        reporting_band: "0 <= nu < 0.5",
        mse_convention: "mean of |estimate - theory|^2 over band points and all N^2 entries",
        nonminimum_phase_generator: result.nonminimum_phase_generator,
        spurious_link_detected: result.spurious_link_detected(),
        generator_ma_root_magnitudes: spec.model.ma_root_report().magnitudes,
        methods: &result.summaries,
    })?)
}

/// Writes `table.txt`, `table.csv`, `tpdc.csv`, `tdtf.csv`, `fields.json` and `summary.json`.
pub fn write_experiment_bundle(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("table.txt"), format_table(result))?;
    fs::write(dir.join("table.csv"), format_table_csv(result))?;
    let mut tpdc = vec![&result.theory_tpdc];
    tpdc.extend(result.realization0.iter().map(|o| &o.tpdc));
    let mut tdtf = vec![&result.theory_tdtf];
    tdtf.extend(result.realization0.iter().map(|o| &o.tdtf));
    write_fields_bundle(&tpdc, &tdtf, dir)?;
    fs::write(dir.join("summary.json"), summary_json(result)?)?;
    Ok(())
}

fn write_fields_bundle(tpdc: &[&ConnectivityField], tdtf: &[&ConnectivityField], dir: &Path) -> Result<()> {
    io::write_fields_csv(tpdc, fs::File::create(dir.join("tpdc.csv"))?)?;
    io::write_fields_csv(tdtf, fs::File::create(dir.join("tdtf.csv"))?)?;
    let all: Vec<&ConnectivityField> = tpdc.iter().chain(tdtf).cloned().collect();
    fs::write(dir.join("fields.json"), io::fields_to_json(&all)?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// panel analysis

pub struct AnalysisResult {
    pub outputs: Vec<MethodOutput>,
    pub n_channels: usize,
    pub n_samples: usize,
}

pub fn analyze_panel(panel: &TimeSeriesPanel, config: &MethodConfig) -> Result<AnalysisResult> {
    config.validate()?;
    if panel.n_channels() < 2 {
        return Err(Error::InvalidPanel(format!("connectivity needs at least 2 channels, got {}", panel.n_channels())));
    }
    if config.methods.contains(&Method::Wn) && panel.n_samples() < config.segment_len {
        return Err(Error::PanelTooShort { n_samples: panel.n_samples(), required: config.segment_len });
    }
    let grid = config.grid()?;
    let outputs = config
        .resolve(None)?
        .into_iter()
        .map(|(m, order)| fit_method(panel, m, order, config, &grid))
        .collect::<Result<_>>()?;
    Ok(AnalysisResult { outputs, n_channels: panel.n_channels(), n_samples: panel.n_samples() })
}

#[derive(Serialize)]
struct AnalysisMethodJson<'a> {
    method: Method,
    order: Option<Orders>,
    wilson_iterations: Option<usize>,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct AnalysisSummaryJson<'a> {
    n_channels: usize,
    n_samples: usize,
    settings: &'a MethodConfig,
    methods: Vec<AnalysisMethodJson<'a>>,
}

/// Writes `tpdc.csv`, `tdtf.csv`, `fields.json` and `summary.json`.
pub fn write_analysis_bundle(result: &AnalysisResult, config: &MethodConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let tpdc: Vec<&ConnectivityField> = result.outputs.iter().map(|o| &o.tpdc).collect();
    let tdtf: Vec<&ConnectivityField> = result.outputs.iter().map(|o| &o.tdtf).collect();
    write_fields_bundle(&tpdc, &tdtf, dir)?;
    let summary = AnalysisSummaryJson {
        n_channels: result.n_channels,
        n_samples: result.n_samples,
        settings: config,
        methods: result
            .outputs
            .iter()
            .map(|o| AnalysisMethodJson {
                method: o.method,
                order: o.order,
                wilson_iterations: o.factor.diagnostics.as_ref().map(|d| d.iterations),
                warnings: &o.warnings,
            })
            .collect(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
