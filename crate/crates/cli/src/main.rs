//! `tpdc`: reproduce the reference examples, run Monte Carlo sweeps on a
//! model file, or analyze a recorded panel.
//!
//! Exit status: 0 success, 2 configuration or input error, 3 numerical
//! failure, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tpdc_core::experiment::{self, ExperimentSpec, Method, MethodConfig};
use tpdc_core::io::{self, PanelMetadata};
use tpdc_core::{catalog, simulate, Error, ErrorClass, VarmaModel};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "tpdc", version, about = "Total PDC / total DTF from minimum-phase spectral factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run of a built-in example model (1, 2 or 4).
    Example {
        id: u32,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Monte Carlo run of a model given as JSON.
    Model {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate connectivity from a recorded panel (CSV, one column per channel).
    Analyze {
        panel: PathBuf,
        #[command(flatten)]
        methods: MethodArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write one simulated realization of an example or model file as CSV.
    Simulate {
        /// Example id or path to a model JSON file.
        source: String,
        #[arg(long, default_value_t = 16384)]
        ns: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "panel.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct MethodArgs {
    /// Comma-separated subset of var,vma,varma,wn.
    #[arg(long)]
    methods: Option<String>,
    /// VARMA orders `p,q`; `q` also fixes the VMA order.
    #[arg(long)]
    orders: Option<String>,
    /// Welch segment length, also the frequency grid size.
    #[arg(long, default_value_t = 256)]
    seg_len: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 16384)]
    ns: usize,
    #[arg(long, default_value_t = experiment::DEFAULT_REALIZATIONS)]
    realizations: usize,
    #[command(flatten)]
    methods: MethodArgs,
    /// Realization r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl MethodArgs {
    fn config(&self, model: Option<&VarmaModel>) -> Result<MethodConfig, Error> {
        let mut config = MethodConfig { segment_len: self.seg_len, ..MethodConfig::default() };
        config.orders = self.orders.as_deref().map(experiment::parse_orders).transpose()?;
        config.methods = match &self.methods {
            Some(list) => experiment::parse_methods(list)?,
            None => {
                let mut m = vec![Method::Var, Method::Vma, Method::Wn];
                let mixed = model.is_some_and(|g| g.ar_order() > 0 && g.ma_order() > 0);
                if mixed || config.orders.is_some() {
                    m.push(Method::Varma);
                    m.sort();
                }
                m
            }
        };
        Ok(config)
    }
}

fn run_model(label: String, model: VarmaModel, args: &RunArgs) -> Result<(), Error> {
    let mut spec = ExperimentSpec::new(label, model, args.ns);
    spec.methods = args.methods.config(Some(&spec.model))?;
    spec.realizations = args.realizations;
    spec.base_seed = args.seed;
    spec.jobs = args.jobs;
    let result = experiment::run_experiment(&spec)?;
    experiment::write_experiment_bundle(&result, &args.out)?;
    print!("{}", experiment::format_table(&result));
    for s in &result.summaries {
        if s.failed > 0 {
            eprintln!("warning: {} failed on {} of {} realizations", s.method, s.failed, spec.realizations);
        }
        for (i, j) in &s.spurious_links {
            println!("{}: spurious link {j} -> {i} (absent from the generator)", s.method);
        }
    }
    if result.nonminimum_phase_generator {
        println!("note: the generator is not minimum phase; estimated factors cannot match it");
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

fn load_source(source: &str) -> Result<(String, VarmaModel), Error> {
    match source.parse::<u32>() {
        Ok(id) => Ok((format!("example {id}"), catalog::by_id(id).map_err(Error::Config)?)),
        Err(_) => Ok((source.to_string(), io::read_model(Path::new(source))?)),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Example { id, run } => {
            let model = catalog::by_id(id).map_err(Error::Config)?;
            run_model(format!("example {id}"), model, &run)
        }
        Command::Model { file, run } => {
            let model = io::read_model(&file)?;
            run_model(file.display().to_string(), model, &run)
        }
        Command::Analyze { panel, methods, out } => {
            let data = io::load_panel(&panel)?;
            let config = methods.config(None)?;
            let result = experiment::analyze_panel(&data, &config)?;
            experiment::write_analysis_bundle(&result, &config, &out)?;
            for o in &result.outputs {
                match o.order {
                    Some((p, q)) => println!("{}: order ({p},{q})", o.method),
                    None => println!("{}: done", o.method),
                }
            }
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Simulate { source, ns, seed, out } => {
            let (_, model) = load_source(&source)?;
            let panel = simulate(&model, ns, seed, tpdc_core::simulate::DEFAULT_BURN_IN)?;
            let meta = PanelMetadata {
                seed,
                model_hash: io::model_hash(&model),
                burn_in: tpdc_core::simulate::DEFAULT_BURN_IN,
                n_channels: panel.n_channels(),
                n_samples: panel.n_samples(),
            };
            io::save_panel(&panel, Some(&meta), &out)?;
            println!("wrote {} samples x {} channels to {}", ns, panel.n_channels(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => EXIT_CONFIG,
                ErrorClass::Numerical => EXIT_NUMERICAL,
                ErrorClass::Io => EXIT_IO,
            })
        }
    }
}
