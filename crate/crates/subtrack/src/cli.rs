//! Command-line surface: one subcommand per run mode, all sharing the same
//! override flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Mode, RunConfig, SynthKind};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "subtrack", version, about = "Online subspace and tensor tracking from incomplete streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a vector stream with the exact alternating least-squares recursion.
    TrackMatrix(Overrides),
    /// Track a vector stream with (accelerated) stochastic gradient steps.
    TrackMatrixSgd(Overrides),
    /// Track a slice stream with the online CP decomposition.
    TrackTensor(Overrides),
    /// Solve the batch nuclear-norm problem and certify its factorization.
    BatchSolve(Overrides),
    /// Estimate sparse flow anomalies from link residuals.
    DetectAnomalies(Overrides),
    /// Write a synthetic stream with its ground truth.
    GenSynth(Overrides),
}

impl Command {
    pub fn split(self) -> (Mode, Overrides) {
        match self {
            Command::TrackMatrix(o) => (Mode::TrackMatrix, o),
            Command::TrackMatrixSgd(o) => (Mode::TrackMatrixSgd, o),
            Command::TrackTensor(o) => (Mode::TrackTensor, o),
            Command::BatchSolve(o) => (Mode::BatchSolve, o),
            Command::DetectAnomalies(o) => (Mode::DetectAnomalies, o),
            Command::GenSynth(o) => (Mode::GenSynth, o),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Nesterov-accelerated gradient steps (track-matrix-sgd).
    #[arg(long)]
    pub accelerated: bool,
    /// Stream CSV; synthetic data is generated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
    /// Ground truth for scoring.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Routing CSV `link,flow,fraction`.
    #[arg(long)]
    pub routing: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub synth_kind: Option<SynthKind>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// True rank of synthetic data.
    #[arg(long)]
    pub true_rank: Option<usize>,
    #[arg(long)]
    pub synth_sigma: Option<f64>,
    #[arg(long)]
    pub synth_pi: Option<f64>,
    #[arg(long)]
    pub change_at: Option<usize>,
    /// Subspace width ρ.
    #[arg(long)]
    pub rho: Option<usize>,
    /// Tensor rank bound R̂.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub pi: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub lambda_o: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
    ($dst:expr, opt $src:expr) => {
        if $src.is_some() {
            $dst = $src;
        }
    };
}

impl Overrides {
    /// Loads the config file (or defaults) and applies the flags on top.
    pub fn resolve(self, mode: Mode) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        c.mode = mode;
        c.synth.kind = match mode {
            Mode::GenSynth => c.synth.kind,
            Mode::TrackTensor => SynthKind::Tensor,
            Mode::DetectAnomalies => SynthKind::Network,
            _ => SynthKind::Matrix,
        };
        set!(c.seed, self.seed);
        set!(c.out_dir, self.out_dir);
        set!(c.checkpoint_every, self.checkpoint_every);
        c.accelerated |= self.accelerated;
        set!(c.input, opt self.input);
        set!(c.descriptor, opt self.descriptor);
        set!(c.truth, opt self.truth);
        set!(c.routing, opt self.routing);
        set!(c.synth.kind, self.synth_kind);
        set!(c.synth.horizon, self.horizon);
        set!(c.synth.dim, self.dim);
        set!(c.synth.rows, self.rows);
        set!(c.synth.cols, self.cols);
        set!(c.synth.rank, self.true_rank);
        set!(c.synth.sigma, self.synth_sigma);
        set!(c.synth.pi, self.synth_pi);
        set!(c.synth.change_at, opt self.change_at);
        set!(c.rho, self.rho);
        set!(c.rank, self.rank);
        set!(c.lambda, opt self.lambda);
        set!(c.sigma, opt self.sigma);
        set!(c.pi, opt self.pi);
        set!(c.theta, self.theta);
        set!(c.eta, self.eta);
        set!(c.mu0, self.mu0);
        set!(c.step, self.step);
        set!(c.tol, self.tol);
        set!(c.max_iter, self.max_iter);
        set!(c.lambda_o, self.lambda_o);
        set!(c.xi, opt self.xi);
        set!(c.burn_in, self.burn_in);
        c.validate()?;
        Ok(c)
    }
}
