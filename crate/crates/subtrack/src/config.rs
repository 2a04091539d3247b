//! Run configuration. Every field has a default, so a JSON file may list
//! only the values it changes; command-line flags override the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subtrack_core::matrix_tracker::RowSolver;
use subtrack_core::sgd_tracker::StepRule;
use subtrack_core::synth::SubspaceChange;

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    TrackMatrix,
    TrackMatrixSgd,
    TrackTensor,
    BatchSolve,
    DetectAnomalies,
    GenSynth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    #[default]
    Matrix,
    Tensor,
    Network,
}

/// Synthetic data used when no input file is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub kind: SynthKind,
    pub horizon: usize,
    /// Ambient dimension `P` of matrix streams.
    pub dim: usize,
    /// Slice dimensions `M × N` of tensor streams.
    pub rows: usize,
    pub cols: usize,
    /// True rank `r` or `R`.
    pub rank: usize,
    pub sigma: f64,
    pub pi: f64,
    pub change_at: Option<usize>,
    pub change: SubspaceChange,
    pub anomaly_prob: f64,
    pub max_anomalous_flows: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            kind: SynthKind::Matrix,
            horizon: 1000,
            dim: 100,
            rows: 50,
            cols: 50,
            rank: 5,
            sigma: 0.03,
            pi: 0.5,
            change_at: None,
            change: SubspaceChange::Redraw,
            anomaly_prob: 0.05,
            max_anomalous_flows: 3,
        }
    }
}

/// Fully resolved run configuration.
///
/// The synthetic generator uses `seed`; random tracker initializations use
/// `seed + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Cost and gradient are evaluated, and outputs flushed, every this many
    /// steps and at the last step.
    pub checkpoint_every: usize,
    pub input: Option<PathBuf>,
    /// Defaults to the input path with a `.json` extension.
    pub descriptor: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub routing: Option<PathBuf>,
    pub synth: SynthSection,
    /// Subspace width `ρ`.
    pub rho: usize,
    /// Tensor rank bound `R̂`.
    pub rank: usize,
    /// Fixed `λ`; the data-driven rule is used when absent.
    pub lambda: Option<f64>,
    /// Noise level for the `λ` rule; falls back to `synth.sigma`.
    pub sigma: Option<f64>,
    /// Sampling probability for the `λ` rule; falls back to `synth.pi`, or
    /// the observed fraction of a file input.
    pub pi: Option<f64>,
    pub theta: f64,
    pub solver: RowSolver,
    pub eta: f64,
    pub mu0: f64,
    pub max_backtracks: usize,
    pub accelerated: bool,
    pub restart_window: Option<usize>,
    pub step_rule: StepRule,
    /// Tensor step size `(μ̄)⁻¹`.
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub lambda_o: f64,
    /// Anomaly threshold `ξ`; defaults to three median absolute residuals.
    pub xi: Option<f64>,
    /// Steps excluded from the detection rates.
    pub burn_in: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::TrackMatrix,
            seed: 0,
            out_dir: PathBuf::from("out"),
            checkpoint_every: 100,
            input: None,
            descriptor: None,
            truth: None,
            routing: None,
            synth: SynthSection::default(),
            rho: 10,
            rank: 10,
            lambda: None,
            sigma: None,
            pi: None,
            theta: 1.0,
            solver: RowSolver::Auto,
            eta: 2.0,
            mu0: 1.0,
            max_backtracks: 100,
            accelerated: false,
            restart_window: None,
            step_rule: StepRule::Backtracking,
            step: 1e-2,
            tol: 1e-9,
            max_iter: 10_000,
            lambda_o: 0.1,
            xi: None,
            burn_in: 0,
        }
    }
}

impl RunConfig {
    /// Parses a config file. A final-state JSON written by a previous run is
    /// accepted too; its embedded `config` is used.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = match value.get("config") {
            Some(c) if value.get("mode").is_none() => c.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(inner)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        io::in_file(path, Self::from_json(&text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn descriptor_path(&self) -> Option<PathBuf> {
        self.descriptor.clone().or_else(|| self.input.as_deref().map(io::descriptor_path))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("tol", self.tol), ("eta - 1", self.eta - 1.0), ("mu0", self.mu0)];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::config(format!("{name} must be positive")));
        }
        if self.checkpoint_every == 0 || self.max_iter == 0 {
            return Err(Error::config("checkpoint_every and max_iter must be positive"));
        }
        if !(self.step >= 0.0) || !(self.lambda_o >= 0.0) || self.lambda.is_some_and(|l| !(l >= 0.0)) {
            return Err(Error::config("step, lambda and lambda_o must be nonnegative"));
        }
        if self.xi.is_some_and(|x| !(x >= 0.0)) {
            return Err(Error::config("xi must be nonnegative"));
        }
        if self.input.is_none() && self.synth.horizon == 0 {
            return Err(Error::config("synthetic horizon must be positive"));
        }
        let wanted = match self.mode {
            Mode::TrackMatrix | Mode::TrackMatrixSgd | Mode::BatchSolve => Some(SynthKind::Matrix),
            Mode::TrackTensor => Some(SynthKind::Tensor),
            Mode::DetectAnomalies => Some(SynthKind::Network),
            Mode::GenSynth => None,
        };
        if let Some(kind) = wanted {
            if self.input.is_none() && self.synth.kind != kind {
                return Err(Error::config(format!(
                    "{:?} without --input needs synth.kind = {:?}",
                    self.mode, kind
                )));
            }
        }
        if self.mode == Mode::DetectAnomalies && self.input.is_some() && self.routing.is_none() {
            return Err(Error::config("detect-anomalies on a residual file needs --routing"));
        }
        if self.mode == Mode::GenSynth && self.input.is_some() {
            return Err(Error::config("gen-synth takes no input"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::from_json(r#"{"mode":"track-tensor","rank":4,"synth":{"kind":"tensor"}}"#).unwrap();
        assert_eq!(cfg.mode, Mode::TrackTensor);
        assert_eq!(cfg.rank, 4);
        assert_eq!(cfg.rho, 10);
        assert_eq!(cfg.synth.horizon, 1000);
        cfg.validate().unwrap();
    }

    #[test]
    fn final_state_wrapper_is_accepted() {
        let cfg = RunConfig { seed: 9, ..RunConfig::default() };
        let wrapped = format!(r#"{{"t":3,"config":{}}}"#, cfg.to_json());
        assert_eq!(RunConfig::from_json(&wrapped).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_invalid_fields() {
        assert!(RunConfig::from_json(r#"{"rhoo":3}"#).is_err());
        let cfg = RunConfig { tol: 0.0, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { mode: Mode::TrackTensor, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { mode: Mode::DetectAnomalies, input: Some("r.csv".into()), ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
