//! Experiment runner: binds generators or file inputs to the trackers,
//! oracles and scorers and writes the run artifacts into `out_dir`.
//!
//! Tracking modes write `metrics.csv` (`t,e_x,cost,grad_norm`, one row per
//! step; cost and gradient norm only at checkpoints) and
//! `final_state.json`, which embeds the resolved config.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde_json::{json, Value};
use subtrack_core::anomaly::{
    default_threshold, gen_network_stream, residual_vector, AnomalyDetector, Network, RateCounter, RoutingMatrix,
    SynthNetworkConfig,
};
use subtrack_core::matrix_tracker::{self, lambda_heuristic, LambdaPolicy, MatrixTracker, MatrixTrackerConfig};
use subtrack_core::metrics::{relative_error_matrix, RunningError};
use subtrack_core::oracle::{
    balanced_factors, certify_global, kkt_check_from_x, nuclear_norm, solve_p1, thin_svd, BatchProblem,
};
use subtrack_core::sgd_tracker::{SgdTracker, SgdTrackerConfig};
use subtrack_core::synth::{gen_matrix_stream, gen_tensor_stream, SynthMatrixConfig, SynthTensorConfig};
use subtrack_core::tensor_tracker::{self, StepPolicy, TensorLambda, TensorTracker, TensorTrackerConfig};
use subtrack_core::{MaskedSlice, MaskedVector};

use crate::config::{Mode, RunConfig, SynthKind};
use crate::error::{Error, Result};
use crate::io::{self, Descriptor};

/// Certificate tolerance for `batch-solve` (relative).
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Runs one configured experiment and returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io { path: cfg.out_dir.clone(), source })?;
    match cfg.mode {
        Mode::TrackMatrix | Mode::TrackMatrixSgd => track_matrix(cfg),
        Mode::TrackTensor => track_tensor(cfg),
        Mode::BatchSolve => batch_solve(cfg),
        Mode::DetectAnomalies => detect_anomalies(cfg),
        Mode::GenSynth => gen_synth(cfg),
    }
}

struct MatrixData {
    stream: Vec<MaskedVector>,
    truth: Option<Vec<Vec<f64>>>,
    dim: usize,
}

struct TensorData {
    stream: Vec<MaskedSlice>,
    truth: Option<Vec<DMatrix<f64>>>,
    dims: (usize, usize),
}

fn matrix_synth(cfg: &RunConfig) -> SynthMatrixConfig {
    let s = &cfg.synth;
    SynthMatrixConfig { change_at: s.change_at, change: s.change, ..SynthMatrixConfig::new(s.dim, s.rank, s.sigma, s.pi, cfg.seed) }
}

fn tensor_synth(cfg: &RunConfig) -> SynthTensorConfig {
    let s = &cfg.synth;
    SynthTensorConfig::new(s.rows, s.cols, s.rank, s.sigma, s.pi, cfg.seed)
}

fn network_synth(cfg: &RunConfig) -> SynthNetworkConfig {
    let s = &cfg.synth;
    SynthNetworkConfig {
        anomaly_prob: s.anomaly_prob,
        max_anomalous_flows: s.max_anomalous_flows,
        ..SynthNetworkConfig::new(s.rank, s.sigma, s.pi, cfg.seed)
    }
}

fn read_input<T>(path: &Path, f: impl FnOnce(File) -> Result<T>) -> Result<T> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    io::in_file(path, f(file))
}

fn load_matrix(cfg: &RunConfig) -> Result<MatrixData> {
    let Some(input) = &cfg.input else {
        let (stream, truth) = gen_matrix_stream(&matrix_synth(cfg), cfg.synth.horizon)?.map(|s| (s.obs, s.truth)).unzip();
        return Ok(MatrixData { stream, truth: Some(truth), dim: cfg.synth.dim });
    };
    let desc_path = cfg.descriptor_path().expect("input present");
    let Descriptor::Matrix { p } = io::read_descriptor(&desc_path)? else {
        return Err(Error::config(format!("{} does not describe a matrix stream", desc_path.display())));
    };
    let stream = read_input(input, |f| io::read_matrix_stream(f, p))?;
    let truth = cfg.truth.as_deref().map(|t| read_input(t, |f| io::read_matrix_truth(f, p))).transpose()?;
    check_truth_len(truth.as_ref().map(Vec::len), stream.len())?;
    Ok(MatrixData { stream, truth, dim: p })
}

fn load_tensor(cfg: &RunConfig) -> Result<TensorData> {
    let Some(input) = &cfg.input else {
        let (stream, truth) = gen_tensor_stream(&tensor_synth(cfg), cfg.synth.horizon)?.map(|s| (s.obs, s.truth)).unzip();
        return Ok(TensorData { stream, truth: Some(truth), dims: (cfg.synth.rows, cfg.synth.cols) });
    };
    let desc_path = cfg.descriptor_path().expect("input present");
    let Descriptor::Tensor { m, n } = io::read_descriptor(&desc_path)? else {
        return Err(Error::config(format!("{} does not describe a tensor stream", desc_path.display())));
    };
    let stream = read_input(input, |f| io::read_tensor_stream(f, (m, n)))?;
    let truth = cfg.truth.as_deref().map(|t| read_input(t, |f| io::read_tensor_truth(f, (m, n)))).transpose()?;
    check_truth_len(truth.as_ref().map(Vec::len), stream.len())?;
    Ok(TensorData { stream, truth, dims: (m, n) })
}

fn check_truth_len(truth: Option<usize>, steps: usize) -> Result<()> {
    match truth {
        Some(n) if n < steps => Err(Error::config(format!("ground truth covers {n} of {steps} steps"))),
        _ => Ok(()),
    }
}

/// `(π, σ)` for the data-driven `λ` rule.
fn lambda_inputs(cfg: &RunConfig, observed_fraction: impl FnOnce() -> f64) -> Result<(f64, f64)> {
    let synthetic = cfg.input.is_none();
    let pi = cfg.pi.unwrap_or_else(|| if synthetic { cfg.synth.pi } else { observed_fraction() });
    let sigma = match (cfg.sigma, synthetic) {
        (Some(s), _) => s,
        (None, true) => cfg.synth.sigma,
        (None, false) => return Err(Error::config("the lambda rule needs --sigma for file input; or pass --lambda")),
    };
    if !(pi > 0.0 && pi <= 1.0) || !(sigma > 0.0) {
        return Err(Error::config("the lambda rule needs pi in (0, 1] and sigma > 0"));
    }
    Ok((pi, sigma))
}

fn matrix_fraction(data: &MatrixData) -> f64 {
    let seen: usize = data.stream.iter().map(MaskedVector::len).sum();
    seen as f64 / (data.dim * data.stream.len().max(1)) as f64
}

fn tensor_fraction(data: &TensorData) -> f64 {
    let seen: usize = data.stream.iter().map(MaskedSlice::len).sum();
    seen as f64 / (data.dims.0 * data.dims.1 * data.stream.len().max(1)) as f64
}

struct Metrics {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Metrics {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let mut w = io::create(&path)?;
        writeln!(w, "{header}")?;
        Ok(Self { path, w })
    }

    fn row(&mut self, t: usize, cols: &[Option<f64>]) -> Result<()> {
        write!(self.w, "{t}")?;
        for c in cols {
            match c {
                Some(v) => write!(self.w, ",{v}")?,
                None => write!(self.w, ",")?,
            }
        }
        writeln!(self.w)?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        Ok(self.w.flush()?)
    }
}

fn is_checkpoint(cfg: &RunConfig, t: usize, horizon: usize) -> bool {
    t.is_multiple_of(cfg.checkpoint_every) || t == horizon
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    let data: Vec<f64> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "data": data })
}

fn write_json(path: PathBuf, value: &Value) -> Result<PathBuf> {
    let mut w = io::create(&path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

enum Tracker {
    Als(Box<MatrixTracker>),
    Sgd(Box<SgdTracker>),
}

impl Tracker {
    fn step(&mut self, obs: &MaskedVector) -> Result<matrix_tracker::StepOutput> {
        Ok(match self {
            Tracker::Als(t) => t.step(obs)?,
            Tracker::Sgd(t) => t.step(obs)?,
        })
    }

    fn subspace(&self) -> DMatrix<f64> {
        match self {
            Tracker::Als(t) => t.subspace(),
            Tracker::Sgd(t) => t.subspace(),
        }
    }

    fn lambda(&self) -> f64 {
        match self {
            Tracker::Als(t) => t.lambda(),
            Tracker::Sgd(t) => t.lambda(),
        }
    }
}

fn track_matrix(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = load_matrix(cfg)?;
    let horizon = data.stream.len();
    let mut tracker = if cfg.mode == Mode::TrackMatrix {
        let lambda = match cfg.lambda {
            Some(v) => LambdaPolicy::fixed(v),
            None => {
                let (pi, sigma) = lambda_inputs(cfg, || matrix_fraction(&data))?;
                LambdaPolicy::Heuristic { pi, sigma }
            }
        };
        let tc = MatrixTrackerConfig::new(data.dim, cfg.rho, cfg.theta, lambda, cfg.seed + 1).with_solver(cfg.solver);
        Tracker::Als(Box::new(MatrixTracker::new(tc)?))
    } else {
        let lambda = match cfg.lambda {
            Some(v) => v,
            None => {
                let (pi, sigma) = lambda_inputs(cfg, || matrix_fraction(&data))?;
                lambda_heuristic(data.dim, horizon as f64, pi, sigma)
            }
        };
        let tc = SgdTrackerConfig {
            eta: cfg.eta,
            mu0: cfg.mu0,
            max_backtracks: cfg.max_backtracks,
            accelerated: cfg.accelerated,
            restart_window: cfg.restart_window,
            step_rule: cfg.step_rule,
            ..SgdTrackerConfig::new(data.dim, cfg.rho, lambda, cfg.seed + 1)
        };
        Tracker::Sgd(Box::new(SgdTracker::new(tc)?))
    };

    let mut metrics = Metrics::create(cfg.out_dir.join("metrics.csv"), "t,e_x,cost,grad_norm")?;
    let mut err = RunningError::new();
    let mut seconds = 0.0;
    for (k, obs) in data.stream.iter().enumerate() {
        let start = Instant::now();
        let out = tracker.step(obs)?;
        seconds += start.elapsed().as_secs_f64();
        let e_x = data.truth.as_ref().map(|truth| err.push(&out.x_hat, &truth[k]));
        let t = k + 1;
        if is_checkpoint(cfg, t, horizon) {
            let (l, lambda, hist) = (tracker.subspace(), tracker.lambda(), &data.stream[..t]);
            let cost = matrix_tracker::average_cost(&l, hist, lambda)?;
            let grad = matrix_tracker::cost_gradient(&l, hist, lambda)?.norm();
            metrics.row(t, &[e_x, Some(cost), Some(grad)])?;
            metrics.flush()?;
        } else {
            metrics.row(t, &[e_x, None, None])?;
        }
    }
    metrics.flush()?;
    let l = tracker.subspace();
    let state = json!({
        "config": cfg,
        "steps": horizon,
        "dim": data.dim,
        "rho": cfg.rho,
        "lambda": tracker.lambda(),
        "e_x": data.truth.as_ref().map(|_| err.value()),
        "seconds_per_step": seconds / horizon.max(1) as f64,
        "subspace": matrix_json(&l),
    });
    Ok(vec![metrics.path, write_json(cfg.out_dir.join("final_state.json"), &state)?])
}

fn tensor_lambda(cfg: &RunConfig, fraction: impl FnOnce() -> f64) -> Result<TensorLambda> {
    Ok(match cfg.lambda {
        Some(value) => TensorLambda::Fixed { value },
        None => {
            let (pi, sigma) = lambda_inputs(cfg, fraction)?;
            TensorLambda::Heuristic { pi, sigma }
        }
    })
}

fn track_tensor(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = load_tensor(cfg)?;
    let horizon = data.stream.len();
    let lambda = tensor_lambda(cfg, || tensor_fraction(&data))?;
    let tc = TensorTrackerConfig {
        step: StepPolicy::Constant { step: cfg.step },
        ..TensorTrackerConfig::new(data.dims.0, data.dims.1, cfg.rank, lambda, cfg.seed + 1)
    };
    let mut tracker = TensorTracker::new(tc)?;
    let mut metrics = Metrics::create(cfg.out_dir.join("metrics.csv"), "t,e_x,cost,grad_norm")?;
    let mut seconds = 0.0;
    let mut last_err = None;
    for (k, slice) in data.stream.iter().enumerate() {
        let start = Instant::now();
        let out = tracker.step(slice)?;
        seconds += start.elapsed().as_secs_f64();
        let e_x = data.truth.as_ref().map(|truth| relative_error_matrix(&out.x_hat, &truth[k]));
        last_err = e_x.or(last_err);
        let t = k + 1;
        if is_checkpoint(cfg, t, horizon) {
            let (a, b) = tracker.factors();
            let hist = &data.stream[..t];
            let cost = tensor_tracker::average_cost(&a, &b, hist, tracker.lambda())?;
            let (ga, gb) = tensor_tracker::cost_gradient(&a, &b, hist, tracker.lambda())?;
            let grad = (ga.norm_squared() + gb.norm_squared()).sqrt();
            metrics.row(t, &[e_x, Some(cost), Some(grad)])?;
            metrics.flush()?;
        } else {
            metrics.row(t, &[e_x, None, None])?;
        }
    }
    metrics.flush()?;
    let (a, b) = tracker.factors();
    let state = json!({
        "config": cfg,
        "steps": horizon,
        "dims": [data.dims.0, data.dims.1],
        "rank": cfg.rank,
        "lambda": tracker.lambda(),
        "e_x": last_err,
        "seconds_per_step": seconds / horizon.max(1) as f64,
        "a": matrix_json(&a),
        "b": matrix_json(&b),
    });
    Ok(vec![metrics.path, write_json(cfg.out_dir.join("final_state.json"), &state)?])
}

fn batch_solve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = load_matrix(cfg)?;
    let horizon = data.stream.len();
    let lambda = match cfg.lambda {
        Some(v) => v,
        None => {
            let (pi, sigma) = lambda_inputs(cfg, || matrix_fraction(&data))?;
            lambda_heuristic(data.dim, horizon as f64, pi, sigma)
        }
    };
    let prob = BatchProblem::from_stream(&data.stream, lambda, cfg.rho)?;
    let start = Instant::now();
    let sol = solve_p1(&prob, cfg.tol, cfg.max_iter)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut trace = Metrics::create(cfg.out_dir.join("trace.csv"), "iteration,objective")?;
    for (k, obj) in sol.trace.iter().enumerate() {
        trace.row(k + 1, &[Some(*obj)])?;
    }
    trace.flush()?;
    let (_, sv, _) = thin_svd(&sol.x);
    let top = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-9 * top).count();
    let (l, q) = balanced_factors(&sol.x, cfg.rho);
    let certificate = certify_global(&l, &q, &prob, CERTIFICATE_TOL);
    let kkt = kkt_check_from_x(&sol.x, &prob);
    let e_x = data.truth.as_ref().map(|truth| {
        let x = DMatrix::from_fn(data.dim, horizon, |p, t| truth[t][p]);
        relative_error_matrix(&sol.x, &x)
    });
    let summary = json!({
        "config": cfg,
        "steps": horizon,
        "dim": data.dim,
        "lambda": lambda,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "nuclear_norm": nuclear_norm(&sol.x),
        "rank": rank,
        "rank_exceeds_rho": rank > cfg.rho,
        "certificate": certificate,
        "kkt": kkt,
        "kkt_max_residual": kkt.max_residual(),
        "e_x": e_x,
        "seconds": seconds,
    });
    Ok(vec![trace.path, write_json(cfg.out_dir.join("batch.json"), &summary)?])
}

/// Link residuals with observed flags plus, when known, the true anomalies.
struct ResidualData {
    routing: RoutingMatrix,
    residuals: Vec<(nalgebra::DVector<f64>, Vec<bool>)>,
    truth: Option<Vec<Vec<f64>>>,
}

fn network_residuals(cfg: &RunConfig) -> Result<ResidualData> {
    let net = Network::backbone();
    let n = net.nodes();
    let lambda = tensor_lambda(cfg, || cfg.synth.pi)?;
    let tc = TensorTrackerConfig {
        step: StepPolicy::Constant { step: cfg.step },
        ..TensorTrackerConfig::new(n, n, cfg.rank, lambda, cfg.seed + 1)
    };
    let mut tracker = TensorTracker::new(tc)?;
    let mut residuals = Vec::new();
    let mut truth = Vec::new();
    for s in gen_network_stream(&net, &network_synth(cfg), cfg.synth.horizon)? {
        let out = tracker.step(&s.obs)?;
        residuals.push(residual_vector(&s.obs, &out.x_hat, net.link_map())?);
        truth.push(s.anomalies);
    }
    Ok(ResidualData { routing: net.routing().clone(), residuals, truth: Some(truth) })
}

fn file_residuals(cfg: &RunConfig, input: &Path) -> Result<ResidualData> {
    let routing_path = cfg.routing.as_deref().expect("validated");
    let routing = read_input(routing_path, io::read_routing)?;
    let stream = read_input(input, |f| io::read_matrix_stream(f, routing.links()))?;
    let residuals = stream.iter().map(|obs| (nalgebra::DVector::from_vec(obs.to_dense()), obs.mask())).collect();
    let truth = match cfg.truth.as_deref() {
        Some(path) => {
            let mut t: Vec<Vec<f64>> = read_input(path, |f| io::read_matrix_stream(f, routing.flows()))?
                .iter()
                .map(MaskedVector::to_dense)
                .collect();
            t.resize(stream.len().max(t.len()), vec![0.0; routing.flows()]);
            Some(t)
        }
        None => None,
    };
    Ok(ResidualData { routing, residuals, truth })
}

fn detect_anomalies(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = match &cfg.input {
        Some(input) => file_residuals(cfg, input)?,
        None => network_residuals(cfg)?,
    };
    let xi = cfg.xi.unwrap_or_else(|| {
        default_threshold(data.residuals.iter().flat_map(|(y, obs)| y.iter().zip(obs).filter(|(_, &o)| o).map(|(v, _)| v)))
    });
    let mut detector = AnomalyDetector::new(data.routing, cfg.lambda_o, xi, cfg.tol, cfg.max_iter)?;
    let path = cfg.out_dir.join("anomalies.csv");
    let mut w = io::create(&path)?;
    writeln!(w, "t,flow,o_hat")?;
    let mut counter = RateCounter::default();
    let mut flagged = 0;
    for (k, (y, observed)) in data.residuals.iter().enumerate() {
        let est = detector.estimate(k + 1, y, observed)?;
        for (f, v) in est.o_hat.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(w, "{},{},{}", k + 1, f + 1, v)?;
        }
        if k >= cfg.burn_in {
            flagged += est.support.len();
            if let Some(truth) = &data.truth {
                counter.push(&truth[k], est.o_hat.as_slice(), xi)?;
            }
        }
        if is_checkpoint(cfg, k + 1, data.residuals.len()) {
            w.flush()?;
        }
    }
    w.flush()?;
    let summary = json!({
        "config": cfg,
        "steps": data.residuals.len(),
        "burn_in": cfg.burn_in,
        "lambda_o": cfg.lambda_o,
        "xi": xi,
        "flagged": flagged,
        "rates": data.truth.as_ref().map(|_| counter.rates()),
        "counts": data.truth.as_ref().map(|_| counter),
    });
    Ok(vec![path, write_json(cfg.out_dir.join("rates.json"), &summary)?])
}

fn gen_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = &cfg.out_dir;
    let mut files = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    let horizon = cfg.synth.horizon;
    match cfg.synth.kind {
        SynthKind::Matrix => {
            let (stream, truth): (Vec<_>, Vec<_>) =
                gen_matrix_stream(&matrix_synth(cfg), horizon)?.map(|s| (s.obs, s.truth)).unzip();
            io::write_matrix_stream(io::create(&out("stream.csv"))?, &stream)?;
            io::write_descriptor(&out("stream.json"), &Descriptor::Matrix { p: cfg.synth.dim })?;
            io::write_matrix_truth(io::create(&out("truth.csv"))?, &truth)?;
        }
        SynthKind::Tensor => {
            let (stream, truth): (Vec<_>, Vec<_>) =
                gen_tensor_stream(&tensor_synth(cfg), horizon)?.map(|s| (s.obs, s.truth)).unzip();
            io::write_tensor_stream(io::create(&out("stream.csv"))?, &stream)?;
            io::write_descriptor(&out("stream.json"), &Descriptor::Tensor { m: cfg.synth.rows, n: cfg.synth.cols })?;
            io::write_tensor_truth(io::create(&out("truth.csv"))?, &truth)?;
        }
        SynthKind::Network => {
            let net = Network::backbone();
            let samples: Vec<_> = gen_network_stream(&net, &network_synth(cfg), horizon)?.collect();
            let n = net.nodes();
            let links: Vec<_> = samples.iter().map(|s| s.obs.clone()).collect();
            io::write_tensor_stream(io::create(&out("stream.csv"))?, &links)?;
            io::write_descriptor(&out("stream.json"), &Descriptor::Tensor { m: n, n })?;
            let nominal: Vec<_> = samples.iter().map(|s| s.nominal.clone()).collect();
            io::write_tensor_truth(io::create(&out("truth.csv"))?, &nominal)?;
            io::write_routing(io::create(&out("routing.csv"))?, net.routing())?;
            let mut w = io::create(&out("link_map.csv"))?;
            writeln!(w, "link,m,n")?;
            for (l, &(i, j)) in net.link_map().iter().enumerate() {
                writeln!(w, "{},{},{}", l + 1, i + 1, j + 1)?;
            }
            w.flush()?;
            let anomalies = samples
                .iter()
                .enumerate()
                .map(|(k, s)| MaskedVector::from_dense(k + 1, &s.anomalies, &s.anomalies.iter().map(|&v| v != 0.0).collect::<Vec<_>>()))
                .collect::<subtrack_core::Result<Vec<_>>>()?;
            io::write_triplets(&mut io::create(&out("anomalies.csv"))?, "t,flow,value", &anomalies)?;
        }
    }
    let config = json!({ "config": cfg });
    files.push(write_json(dir.join("config.json"), &config)?);
    Ok(files)
}
