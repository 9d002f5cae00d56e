use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ftgadget::css::CheckType;
use ftgadget::decoder::DecoderKind;
use ftgadget::experiment::{
    init_threads, preset, run_grid, threshold_estimate, verify_suite, ExperimentConfig, P1Mode, ResultRow, Rounds,
    ThresholdEstimate, WeightMode, PRESETS,
};
use ftgadget::toric_partition::{Family, ToricSchedule};
use ftgadget::{Error, Result};

#[derive(Parser)]
#[command(name = "ftgadget", version, about = "Transversal syndrome-extraction gadgets and toric-code memory simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the gadget used in one extraction round as JSON.
    BuildGadget {
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 1)]
        round: u32,
        /// `z` or `x`.
        #[arg(long, default_value = "z")]
        kind: String,
    },
    /// Run the built-in property checks at lattice size L.
    Verify {
        #[arg(long = "L", default_value_t = 4)]
        l: usize,
    },
    /// Run a grid of memory experiments and write CSV.
    Simulate(GridArgs),
    /// Run a threshold grid, write CSV and print a JSON summary.
    Threshold {
        /// One of the built-in grids; see `--list-presets`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        list_presets: bool,
        /// Bootstrap resamples for the uncertainty.
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        /// Where to write the JSON summary (default stdout).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct GridArgs {
    /// TOML file; command-line options override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "L", value_delimiter = ',')]
    l: Option<Vec<usize>>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// `equal`, `zero` or a number.
    #[arg(long)]
    p1: Option<P1Mode>,
    /// Integer, or `<k>L` for a multiple of the lattice size.
    #[arg(long)]
    rounds: Option<Rounds>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    decoder: Option<DecoderKind>,
    #[arg(long)]
    weights: Option<WeightMode>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path (default stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl GridArgs {
    fn resolve(&self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, base) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                ExperimentConfig::from_toml(&text)?
            }
            (None, Some(cfg)) => cfg,
            (None, None) => ExperimentConfig {
                sizes: Vec::new(),
                mode: None,
                m: None,
                partition: None,
                p: Vec::new(),
                p1: P1Mode::default(),
                rounds: Rounds::default(),
                alpha: 1.0,
                decoder: DecoderKind::default(),
                weights: WeightMode::default(),
                trials: 1000,
                seed: None,
                output: None,
            },
        };
        if let Some(l) = &self.l {
            cfg.sizes = l.clone();
        }
        if let Some(mode) = &self.mode {
            cfg.mode = Some(mode.clone());
            cfg.partition = None;
        }
        if let Some(m) = self.m {
            cfg.m = Some(m);
        }
        if let Some(p) = &self.p {
            cfg.p = p.clone();
        }
        if let Some(p1) = self.p1 {
            cfg.p1 = p1;
        }
        if let Some(r) = self.rounds {
            cfg.rounds = r;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(d) = self.decoder {
            cfg.decoder = d;
        }
        if let Some(w) = self.weights {
            cfg.weights = w;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(o) = &self.output {
            cfg.output = Some(o.clone());
        }
        // The seed must be given on the command line.
        cfg.seed = Some(self.seed.ok_or_else(|| Error::Config("--seed is required".into()))?);
        cfg.validate()?;
        Ok(cfg)
    }
}

const CSV_HEADER: &str = "schema_version,mode,L,m,p,p1,decoder,trials,x_fail,z_fail,rate,ci_lo,ci_hi,seed\n";

/// Writes rows as they finish so an interrupted run keeps what it has.
fn simulate(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout()),
    };
    out.write_all(CSV_HEADER.as_bytes())?;
    out.flush()?;
    run_grid(cfg, |row| {
        out.write_all(row.csv_line().as_bytes())?;
        out.flush()?;
        eprintln!(
            "L={} p={} rate={:.5} [{:.5}, {:.5}] ({:.1}s)",
            row.l, row.p, row.rate, row.ci_lo, row.ci_hi, row.wall_seconds
        );
        Ok(())
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    mode: &'a str,
    m: Option<usize>,
    p1: String,
    decoder: &'a str,
    estimate: &'a ThresholdEstimate,
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildGadget { l, mode, m, round, kind } => {
            let kind = match kind.as_str() {
                "z" | "Z" => CheckType::Z,
                "x" | "X" => CheckType::X,
                other => return Err(Error::Config(format!("kind must be `z` or `x`, got `{other}`"))),
            };
            if round == 0 {
                return Err(Error::Config("rounds start at 1".into()));
            }
            let family = Family::from_parts(&mode, m)?;
            let sched = ToricSchedule::new(l, family).map_err(|e| Error::Config(e.to_string()))?;
            let g = &sched.sector(kind).round(round).gadget;
            emit(&serde_json::to_string_pretty(g)?)?;
        }
        Command::Verify { l } => {
            let outcomes = verify_suite(l)?;
            let mut ok = true;
            for c in &outcomes {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if !ok {
                return Err(Error::Domain("property checks failed".into()));
            }
        }
        Command::Simulate(grid) => {
            init_threads()?;
            simulate(&grid.resolve(None)?)?;
        }
        Command::Threshold {
            preset: name,
            list_presets,
            bootstrap,
            summary,
            grid,
        } => {
            if list_presets {
                for p in PRESETS {
                    println!("{p}");
                }
                return Ok(());
            }
            init_threads()?;
            let base = name.as_deref().map(preset).transpose()?;
            if base.is_none() && grid.config.is_none() {
                return Err(Error::Config("give --preset or --config".into()));
            }
            let cfg = grid.resolve(base)?;
            let rows = simulate(&cfg)?;
            let estimate = threshold_estimate(&rows, bootstrap, cfg.seed()?)?;
            eprintln!("{estimate}");
            let s = Summary {
                mode: cfg.mode.as_deref().unwrap_or("partition"),
                m: cfg.family()?.patch_size(cfg.sizes[0]).into(),
                p1: cfg.p1.to_string(),
                decoder: cfg.decoder.name(),
                estimate: &estimate,
            };
            let json = serde_json::to_string_pretty(&s)?;
            match summary {
                Some(path) => std::fs::write(path, json + "\n")?,
                None => emit(&json)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
