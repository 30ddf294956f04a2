//! Command-line entry point.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use frele_core::diagnostics::step_grid;
use frele_core::loss::TimeLossKind;
use frele_core::models::{Activation, LinearMode};
use frele_core::series::SplitSpec;
use frele_core::theory::{InitLaw, InitSampler};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::pipeline::{self, FftCheck, Outcome};
use crate::report::Manifest;

#[derive(Debug, Parser)]
#[command(
    name = "frele",
    version,
    about = "Frequency-enhanced loss experiments: training, diagnostics, sweeps and self-tests",
    after_help = "Every run writes CSV reports and manifest.json under --out. \
                  Flags override values from --config."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a two-layer network to a sine sum and record per-frequency error
    SynthBias(SynthBiasArgs),
    /// Train a linear forecaster and report test metrics
    Train(TrainArgs),
    /// Train with band tracking; write the bias profile and band report
    Diagnose(DiagnoseArgs),
    /// Train once per delta on a grid
    SweepDelta(SweepDeltaArgs),
    /// Train once per amplitude-pruning retention fraction
    PruneSweep(PruneSweepArgs),
    /// Compare EFR-IFR, EFR and EFR-AN on identical splits and seeds
    Ablate(AblateArgs),
    /// Monte Carlo decay curves of ReLU and tanh networks
    TheoryCurves(TheoryArgs),
    /// Compare the fast transform against the direct DFT
    FftCheck(FftCheckArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags given here take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed [default: 2024 for training, 0 otherwise]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: ./runs/<timestamp>-<seed>/]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Trend/remainder decomposition with a moving average
    Dlinear,
    /// One weight matrix over the look-back window
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeLossArg {
    Mse,
    Mae,
}

#[derive(Debug, Clone, Default, Args)]
#[command(next_help_heading = "Data and training")]
pub struct DataArgs {
    /// ETT-shaped CSV [default: built-in seasonal synthetic series]
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Split: "etth", "ettm" or "TRAIN,VAL,TEST" fractions [default: from the file name, else 0.7,0.1,0.2]
    #[arg(long, value_parser = parse_split)]
    pub split: Option<SplitSpec>,
    /// Look-back length T [default: 96]
    #[arg(long)]
    pub lookback: Option<usize>,
    /// Forecast horizon S [default: 96]
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Step between window origins [default: 1]
    #[arg(long)]
    pub stride: Option<usize>,
    /// Forecaster [default: dlinear]
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Moving-average kernel of dlinear, odd [default: 25]
    #[arg(long)]
    pub kernel: Option<usize>,
    /// One weight set per channel instead of shared weights
    #[arg(long)]
    pub individual: bool,
    /// Maximum epochs [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate [default: 0.005]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Epochs without validation improvement before stopping, 0 disables [default: 3]
    #[arg(long)]
    pub patience: Option<usize>,
}

/// `B` (the bin count) or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eta(pub Option<f64>);

#[derive(Debug, Clone, Default, Args)]
#[command(next_help_heading = "Loss")]
pub struct LossArgs {
    /// Weight of the frequency term, in [0, 1] [default: 0.3]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Frequency width d of the local-maximum window [default: 5]
    #[arg(long = "d", value_name = "D")]
    pub width: Option<usize>,
    /// Dimensional balance eta: a number, or B for the bin count [default: B]
    #[arg(long, value_parser = parse_eta)]
    pub eta: Option<Eta>,
    /// Disable implicit rescaling of spectral peaks
    #[arg(long)]
    pub no_implicit: bool,
    /// Adaptive amplitude normalisation (implies --no-implicit)
    #[arg(long)]
    pub an: bool,
    /// Time-domain term [default: mse]
    #[arg(long, value_enum)]
    pub time_loss: Option<TimeLossArg>,
    /// Drop target bins with amplitude below this threshold [default: off]
    #[arg(long)]
    pub epsilon_xi: Option<f64>,
    /// Keep this fraction of the strongest target bins [default: off]
    #[arg(long)]
    pub retention: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
#[command(next_help_heading = "Parallelism")]
pub struct JobsArgs {
    /// Worker threads for independent runs [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Also train a time-only model and add it to report.csv
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct SweepDeltaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
    /// Delta values: START:STOP:STEP or a comma list [default: 0:1:0.1]
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct PruneSweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
    /// Retention fractions: START:STOP:STEP or a comma list [default: 1,0.9,0.8,0.7,0.6,0.5]
    #[arg(long, value_parser = parse_grid)]
    pub retentions: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
    /// Number of consecutive seeds starting at --seed [default: 1]
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthBiasArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sine amplitudes for angular frequencies 1, 2, 3, ... [default: 1,1,1]
    #[arg(long, value_delimiter = ',')]
    pub coefficients: Option<Vec<f64>>,
    /// Number of samples [default: 512]
    #[arg(long)]
    pub points: Option<usize>,
    /// Hidden width [default: 256]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Activation: relu, tanh or ricker:A [default: relu]
    #[arg(long, value_parser = parse_activation)]
    pub activation: Option<Activation>,
    /// Adam learning rate [default: 0.003]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Full-batch iterations [default: 10000]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Record the trajectory every this many iterations [default: 50]
    #[arg(long)]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    /// Point mass a = b = r = 1
    Unit,
    /// a, b ~ N(0, 1), r ~ |N(0, 1)| + 0.1
    Normal,
    /// As normal with a ~ |N(0, 1)|
    AbsNormal,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initialisation law [default: unit]
    #[arg(long, value_enum)]
    pub law: Option<LawArg>,
    /// Monte Carlo samples [default: 1 for unit, 100000 otherwise]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Input dimension [default: 1]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Smallest frequency norm [default: 0.01]
    #[arg(long)]
    pub lo: Option<f64>,
    /// Largest frequency norm [default: 1000]
    #[arg(long)]
    pub hi: Option<f64>,
    /// Log-spaced points [default: 200]
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FftCheckArgs {
    /// Random inputs to compare
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Largest input length
    #[arg(long, default_value_t = 512)]
    pub max_len: usize,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parsed `--grid` / `--retentions` value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse().map_err(|_| format!("{s:?} is not a number"))
}

pub fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => step_grid(parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?)
            .map(Grid)
            .map_err(|e| e.to_string()),
        [list] => list.split(',').map(parse_f64).collect::<std::result::Result<_, _>>().map(Grid),
        _ => Err("expected START:STOP:STEP or a comma-separated list".into()),
    }
}

fn parse_eta(s: &str) -> std::result::Result<Eta, String> {
    if s.eq_ignore_ascii_case("b") {
        Ok(Eta(None))
    } else {
        parse_f64(s).map(|v| Eta(Some(v)))
    }
}

fn parse_split(s: &str) -> std::result::Result<SplitSpec, String> {
    match s.to_ascii_lowercase().as_str() {
        "etth" => Ok(SplitSpec::ETT_HOURLY),
        "ettm" => Ok(SplitSpec::ETT_MINUTE),
        other => {
            let f: Vec<f64> = other.split(',').map(parse_f64).collect::<std::result::Result<_, _>>()?;
            match f.as_slice() {
                &[train, val, test] => SplitSpec::fractional(train, val, test).map_err(|e| e.to_string()),
                _ => Err("expected etth, ettm or three fractions".into()),
            }
        }
    }
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    let lower = s.to_ascii_lowercase();
    match lower.split_once(':') {
        None if lower == "relu" => Ok(Activation::Relu),
        None if lower == "tanh" => Ok(Activation::Tanh),
        None if lower == "ricker" => Ok(Activation::Ricker { a: 1.0 }),
        Some(("ricker", a)) => Ok(Activation::Ricker { a: parse_f64(a)? }),
        _ => Err("expected relu, tanh or ricker:A".into()),
    }
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.data {
            cfg.data = Some(p.clone());
        }
        if self.split.is_some() {
            cfg.split = self.split;
        }
        set(&mut cfg.lookback, self.lookback);
        set(&mut cfg.horizon, self.horizon);
        set(&mut cfg.stride, self.stride);
        match self.model {
            Some(ModelArg::Linear) => cfg.model.mode = LinearMode::Plain,
            Some(ModelArg::Dlinear) if cfg.model.mode == LinearMode::Plain => {
                cfg.model.mode = LinearMode::DLINEAR
            }
            _ => {}
        }
        if let Some(kernel) = self.kernel {
            cfg.model.mode = LinearMode::Decomposed { kernel };
        }
        if self.individual {
            cfg.model.channel_shared = false;
        }
        set(&mut cfg.train.epochs, self.epochs);
        set(&mut cfg.train.batch_size, self.batch_size);
        set(&mut cfg.train.lr, self.lr);
        set(&mut cfg.train.patience, self.patience);
    }
}

impl LossArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let loss = &mut cfg.loss;
        set(&mut loss.delta, self.delta);
        set(&mut loss.width, self.width);
        if let Some(Eta(eta)) = self.eta {
            loss.eta = eta;
        }
        if self.no_implicit || self.an {
            loss.implicit_enabled = false;
        }
        if self.an {
            loss.an_enabled = true;
        }
        match self.time_loss {
            Some(TimeLossArg::Mse) => loss.time_loss = TimeLossKind::Mse,
            Some(TimeLossArg::Mae) => loss.time_loss = TimeLossKind::Mae,
            None => {}
        }
        if self.epsilon_xi.is_some() {
            loss.epsilon_xi = self.epsilon_xi;
        }
        if self.retention.is_some() {
            loss.retention = self.retention;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn base_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

/// Builds the validated configuration of a subcommand and the seed it uses.
pub fn resolve(command: &Command) -> Result<(RunConfig, u64)> {
    let (cfg, seed) = match command {
        Command::Train(a) => training_config(&a.common, &a.data, &a.loss, |_| {})?,
        Command::Diagnose(a) => training_config(&a.common, &a.data, &a.loss, |c| {
            c.baseline |= a.baseline;
        })?,
        Command::SweepDelta(a) => training_config(&a.common, &a.data, &a.loss, |c| {
            set(&mut c.jobs, a.jobs.jobs);
            if let Some(Grid(g)) = &a.grid {
                c.sweep.grid = g.clone();
            }
        })?,
        Command::PruneSweep(a) => training_config(&a.common, &a.data, &a.loss, |c| {
            set(&mut c.jobs, a.jobs.jobs);
            if let Some(Grid(g)) = &a.retentions {
                c.sweep.retentions = g.clone();
            }
        })?,
        Command::Ablate(a) => training_config(&a.common, &a.data, &a.loss, |c| {
            set(&mut c.jobs, a.jobs.jobs);
            set(&mut c.ablation_seeds, a.seeds);
        })?,
        Command::SynthBias(a) => {
            let mut cfg = base_config(&a.common)?;
            let b = &mut cfg.bias;
            set(&mut b.seed, a.common.seed);
            if let Some(c) = &a.coefficients {
                b.signal.coefficients = c.clone();
                b.signal.angular_frequencies = (1..=c.len()).map(|w| w as f64).collect();
            }
            set(&mut b.signal.n_points, a.points);
            set(&mut b.hidden, a.hidden);
            set(&mut b.activation, a.activation);
            set(&mut b.lr, a.lr);
            set(&mut b.iterations, a.iterations);
            set(&mut b.record_every, a.record_every);
            let seed = b.seed;
            (cfg, seed)
        }
        Command::TheoryCurves(a) => {
            let mut cfg = base_config(&a.common)?;
            let t = &mut cfg.theory;
            if let Some(law) = a.law {
                t.sampler = match law {
                    LawArg::Unit => InitSampler::unit(),
                    LawArg::Normal => InitSampler::default(),
                    LawArg::AbsNormal => InitSampler {
                        law: InitLaw::AbsNormal,
                        ..InitSampler::default()
                    },
                };
            }
            set(&mut t.sampler.samples, a.samples);
            set(&mut t.sampler.seed, a.common.seed);
            set(&mut t.dim, a.dim);
            set(&mut t.lo, a.lo);
            set(&mut t.hi, a.hi);
            set(&mut t.points, a.points);
            let seed = t.sampler.seed;
            (cfg, seed)
        }
        Command::FftCheck(a) => (RunConfig::default(), a.seed),
    };
    cfg.validate()?;
    Ok((cfg, seed))
}

fn training_config(
    common: &CommonArgs,
    data: &DataArgs,
    loss: &LossArgs,
    extra: impl FnOnce(&mut RunConfig),
) -> Result<(RunConfig, u64)> {
    let mut cfg = base_config(common)?;
    data.apply(&mut cfg);
    loss.apply(&mut cfg);
    set(&mut cfg.train.seed, common.seed);
    extra(&mut cfg);
    let seed = cfg.train.seed;
    Ok((cfg, seed))
}

fn default_out(seed: u64) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    Path::new("runs").join(format!("{stamp}-{seed}"))
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::SynthBias(_) => "synth-bias",
        Command::Train(_) => "train",
        Command::Diagnose(_) => "diagnose",
        Command::SweepDelta(_) => "sweep-delta",
        Command::PruneSweep(_) => "prune-sweep",
        Command::Ablate(_) => "ablate",
        Command::TheoryCurves(_) => "theory-curves",
        Command::FftCheck(_) => "fft-check",
    }
}

fn run_fft_check(a: &FftCheckArgs) -> Result<()> {
    let r = pipeline::fft_check(a.trials, a.max_len, a.seed)?;
    println!(
        "fft-check: {} inputs, lengths 1..={}: max bin error {:.3e}, round trip {:.3e}, parseval rel {:.3e} (tolerance {:e})",
        r.trials,
        a.max_len,
        r.max_bin_error,
        r.max_roundtrip_error,
        r.max_parseval_rel,
        FftCheck::TOLERANCE
    );
    if r.passed() {
        Ok(())
    } else {
        Err(LabError::Check("fast transform disagrees with the direct DFT".into()))
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli, argv: Vec<String>) -> Result<()> {
    if let Command::FftCheck(a) = &cli.command {
        return run_fft_check(a);
    }
    let (cfg, seed) = resolve(&cli.command)?;
    let dir = cfg.out.clone().unwrap_or_else(|| default_out(seed));
    std::fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
    let name = command_name(&cli.command);
    let mut manifest = Manifest::new(name, argv, seed, cfg.clone());
    let started = std::time::Instant::now();
    let outcome: Outcome = match &cli.command {
        Command::SynthBias(_) => pipeline::synth_bias(&cfg, &dir)?,
        Command::Train(_) => pipeline::train(&cfg, &dir)?,
        Command::Diagnose(_) => pipeline::diagnose(&cfg, &dir)?,
        Command::SweepDelta(_) => pipeline::sweep_delta(&cfg, &dir)?,
        Command::PruneSweep(_) => pipeline::prune_sweep(&cfg, &dir)?,
        Command::Ablate(_) => pipeline::ablate(&cfg, &dir)?,
        Command::TheoryCurves(_) => pipeline::theory_curves(&cfg, &dir)?,
        Command::FftCheck(_) => unreachable!(),
    };
    manifest.metrics = outcome.metrics;
    manifest.wall_times = outcome.wall_times;
    manifest
        .wall_times
        .insert("command".into(), started.elapsed().as_secs_f64());
    manifest.outputs = outcome.outputs;
    manifest.outputs.push("manifest.json".into());
    manifest.save(&dir.join("manifest.json"))?;
    for (k, v) in &manifest.metrics {
        println!("{k} = {v}");
    }
    println!("{name}: wrote {} files to {}", manifest.outputs.len(), dir.display());
    Ok(())
}

/// Parses `argv` and runs it. Returns the process exit code: 0 on success,
/// 1 on runtime or configuration errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli, argv.into_iter().skip(1).collect()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}
