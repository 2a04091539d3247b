//! Sparse traffic-anomaly estimation from the residual of a low-rank slice
//! fit: `ỹ_t = R o_t + v_t`, solved for sparse `o_t` by the LASSO
//! `min_o ‖ỹ − Ro‖² + λ_o‖o‖₁`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::MaskedSlice;
use crate::error::{config_err, Error, Result};
use crate::synth::{normal, rng_from_seed, StreamRng};

/// Link-by-flow routing fractions `r_{ℓ,f} ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix {
    r: DMatrix<f64>,
    link_labels: Vec<String>,
    flow_labels: Vec<String>,
}

impl RoutingMatrix {
    pub fn new(r: DMatrix<f64>, link_labels: Vec<String>, flow_labels: Vec<String>) -> Result<Self> {
        if link_labels.len() != r.nrows() || flow_labels.len() != r.ncols() {
            return Err(config_err("label counts must match the routing matrix shape"));
        }
        if let Some(v) = r.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(config_err(format!("routing fraction {v} outside [0, 1]")));
        }
        for (col, label) in r.column_iter().zip(&flow_labels) {
            if col.iter().all(|&v| v == 0.0) {
                return Err(config_err(format!("flow {label} traverses no link")));
            }
        }
        Ok(Self { r, link_labels, flow_labels })
    }

    /// Unlabelled routing matrix; labels are the 1-based indices.
    pub fn from_matrix(r: DMatrix<f64>) -> Result<Self> {
        let links = (1..=r.nrows()).map(|i| format!("{i}")).collect();
        let flows = (1..=r.ncols()).map(|i| format!("{i}")).collect();
        Self::new(r, links, flows)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn links(&self) -> usize {
        self.r.nrows()
    }

    pub fn flows(&self) -> usize {
        self.r.ncols()
    }

    pub fn link_labels(&self) -> &[String] {
        &self.link_labels
    }

    pub fn flow_labels(&self) -> &[String] {
        &self.flow_labels
    }

    /// Rows of `R` for the given links.
    pub fn rows(&self, links: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(links.len(), self.flows(), |i, f| self.r[(links[i], f)])
    }
}

/// Result of [`lasso_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub o: DVector<f64>,
    pub objective: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

/// `‖y − Ro‖² + λ_o‖o‖₁`.
pub fn lasso_objective(r: &DMatrix<f64>, y: &DVector<f64>, o: &DVector<f64>, lambda: f64) -> f64 {
    (y - r * o).norm_squared() + lambda * o.lp_norm(1)
}

/// Largest violation of the LASSO optimality conditions:
/// `|2R_f'(y − Ro) − λ sign(o_f)|` on the support and
/// `max(0, |2R_f'(y − Ro)| − λ)` off it.
pub fn lasso_kkt_residual(r: &DMatrix<f64>, y: &DVector<f64>, o: &DVector<f64>, lambda: f64) -> f64 {
    let c = (r.transpose() * (y - r * o)) * 2.0;
    c.iter()
        .zip(o.iter())
        .map(|(&c, &o)| if o != 0.0 { (c - lambda * o.signum()).abs() } else { (c.abs() - lambda).max(0.0) })
        .fold(0.0, f64::max)
}

fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Cyclic coordinate descent from `o = 0`.
pub fn lasso_solve(r: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64, max_iter: usize) -> Result<LassoSolution> {
    lasso_solve_from(r, y, lambda, DVector::zeros(r.ncols()), tol, max_iter)
}

/// Cyclic coordinate descent from a warm start. Each coordinate update is
/// `o_f = S(R_f'(y − Ro + R_f o_f), λ/2) / ‖R_f‖²`; the sweep stops once the
/// largest change is at most `tol` and the KKT residual is at most
/// `10·tol`.
pub fn lasso_solve_from(
    r: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    o0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<LassoSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(config_err("lambda_o must be finite and nonnegative"));
    }
    if !(tol > 0.0) {
        return Err(config_err("tolerance must be positive"));
    }
    if r.nrows() != y.len() || r.ncols() != o0.len() {
        return Err(Error::DimensionMismatch { expected: r.nrows(), found: y.len() });
    }
    let col_sq: Vec<f64> = (0..r.ncols()).map(|f| r.column(f).norm_squared()).collect();
    let mut o = o0;
    for (f, &c) in col_sq.iter().enumerate() {
        if c == 0.0 {
            o[f] = 0.0;
        }
    }
    let mut resid = y - r * &o;
    for sweep in 1..=max_iter {
        let mut max_change: f64 = 0.0;
        for f in 0..r.ncols() {
            if col_sq[f] == 0.0 {
                continue;
            }
            let col = r.column(f);
            let rho = col.dot(&resid) + col_sq[f] * o[f];
            let next = soft_threshold(rho, 0.5 * lambda) / col_sq[f];
            let delta = next - o[f];
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                o[f] = next;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= tol {
            let kkt = lasso_kkt_residual(r, y, &o, lambda);
            if kkt <= 10.0 * tol {
                let objective = lasso_objective(r, y, &o, lambda);
                return Ok(LassoSolution { o, objective, sweeps: sweep, kkt_residual: kkt });
            }
            resid = y - r * &o;
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last_objective: lasso_objective(r, y, &o, lambda) })
}

/// Slice cell `(i, j)` carrying each link.
pub type LinkMap = Vec<(usize, usize)>;

/// Link residuals `ỹ[ℓ] = Y(i,j) − X̂(i,j)` for observed links. Unobserved
/// links take the imputed value, so their residual is zero; they are marked
/// `false` in the returned flags.
pub fn residual_vector(
    slice: &MaskedSlice,
    x_hat: &DMatrix<f64>,
    link_map: &[(usize, usize)],
) -> Result<(DVector<f64>, Vec<bool>)> {
    if x_hat.shape() != slice.dims() {
        return Err(Error::DimensionMismatch { expected: slice.len(), found: x_hat.len() });
    }
    let dense = slice.to_dense();
    let mask = slice.mask();
    let mut y = DVector::zeros(link_map.len());
    let mut observed = vec![false; link_map.len()];
    for (l, &(i, j)) in link_map.iter().enumerate() {
        if i >= dense.nrows() || j >= dense.ncols() {
            return Err(config_err(format!("link {} maps outside the slice", l + 1)));
        }
        if mask[(i, j)] {
            y[l] = dense[(i, j)] - x_hat[(i, j)];
            observed[l] = true;
        }
    }
    Ok((y, observed))
}

/// Anomaly estimate for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyEstimate {
    pub t: usize,
    pub o_hat: DVector<f64>,
    /// Flows with `|ô_f| ≥ ξ`.
    pub support: Vec<usize>,
}

impl AnomalyEstimate {
    pub fn new(t: usize, o_hat: DVector<f64>, xi: f64) -> Self {
        let support = o_hat.iter().enumerate().filter(|(_, v)| v.abs() >= xi).map(|(f, _)| f).collect();
        Self { t, o_hat, support }
    }
}

/// Per-step LASSO over the observed links, warm-started from the previous
/// estimate.
#[derive(Debug, Clone)]
pub struct AnomalyDetector {
    routing: RoutingMatrix,
    lambda_o: f64,
    tol: f64,
    max_iter: usize,
    xi: f64,
    warm: DVector<f64>,
}

impl AnomalyDetector {
    pub fn new(routing: RoutingMatrix, lambda_o: f64, xi: f64, tol: f64, max_iter: usize) -> Result<Self> {
        if !(lambda_o >= 0.0) || !(xi >= 0.0) || !(tol > 0.0) {
            return Err(config_err("need lambda_o >= 0, xi >= 0 and tol > 0"));
        }
        let warm = DVector::zeros(routing.flows());
        Ok(Self { routing, lambda_o, tol, max_iter, xi, warm })
    }

    pub fn routing(&self) -> &RoutingMatrix {
        &self.routing
    }

    /// Estimate `o_t` from link residuals; rows of unobserved links are
    /// dropped from the regression.
    pub fn estimate(&mut self, t: usize, y_res: &DVector<f64>, observed: &[bool]) -> Result<AnomalyEstimate> {
        if y_res.len() != self.routing.links() || observed.len() != y_res.len() {
            return Err(Error::DimensionMismatch { expected: self.routing.links(), found: y_res.len() });
        }
        let rows: Vec<usize> = (0..y_res.len()).filter(|&l| observed[l]).collect();
        let r = self.routing.rows(&rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&l| y_res[l]));
        let sol = lasso_solve_from(&r, &y, self.lambda_o, self.warm.clone(), self.tol, self.max_iter)?;
        self.warm = sol.o.clone();
        Ok(AnomalyEstimate::new(t, sol.o, self.xi))
    }
}

/// Detection and false-alarm rates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionRates {
    pub p_d: f64,
    pub p_fa: f64,
}

/// Running counts behind [`DetectionRates`]. Cells with `|o| ≥ ξ` are
/// anomalous; the rest are nominal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateCounter {
    pub anomalous: usize,
    pub detected: usize,
    pub nominal: usize,
    pub false_alarms: usize,
}

impl RateCounter {
    pub fn push(&mut self, truth: &[f64], estimate: &[f64], xi: f64) -> Result<()> {
        if truth.len() != estimate.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), found: estimate.len() });
        }
        for (&o, &e) in truth.iter().zip(estimate) {
            let flagged = e.abs() >= xi;
            if o.abs() >= xi {
                self.anomalous += 1;
                self.detected += flagged as usize;
            } else {
                self.nominal += 1;
                self.false_alarms += flagged as usize;
            }
        }
        Ok(())
    }

    /// `P_D = 1` when there are no anomalies and `P_FA = 0` when there are no
    /// nominal cells.
    pub fn rates(&self) -> DetectionRates {
        let p_d = if self.anomalous == 0 { 1.0 } else { self.detected as f64 / self.anomalous as f64 };
        let p_fa = if self.nominal == 0 { 0.0 } else { self.false_alarms as f64 / self.nominal as f64 };
        DetectionRates { p_d, p_fa }
    }
}

/// Rates over a whole history of true and estimated anomaly vectors.
pub fn detection_rates(truth: &[Vec<f64>], estimate: &[Vec<f64>], xi: f64) -> Result<DetectionRates> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: estimate.len() });
    }
    let mut c = RateCounter::default();
    for (o, e) in truth.iter().zip(estimate) {
        c.push(o, e, xi)?;
    }
    Ok(c.rates())
}

/// `3 · median |ỹ|` over a window of link residuals.
pub fn default_threshold<'a, I: IntoIterator<Item = &'a f64>>(residuals: I) -> f64 {
    let mut v: Vec<f64> = residuals.into_iter().map(|x| x.abs()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let med = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    3.0 * med
}

/// Node names of the synthetic backbone.
pub const BACKBONE_NODES: [&str; 11] =
    ["ATLA", "CHIN", "DNVR", "HSTN", "IPLS", "KSCY", "LOSA", "NYCM", "SNVA", "STTL", "WASH"];

const BACKBONE_EDGES: [(usize, usize); 15] = [
    (0, 3),
    (0, 4),
    (0, 10),
    (1, 4),
    (1, 5),
    (1, 7),
    (2, 5),
    (2, 8),
    (2, 9),
    (3, 5),
    (3, 6),
    (4, 5),
    (6, 8),
    (7, 10),
    (8, 9),
];

/// Directed network with shortest-path routing of every origin–destination
/// pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: usize,
    link_map: LinkMap,
    routing: RoutingMatrix,
}

impl Network {
    /// Network over `names` with the given undirected edges. Links are the
    /// `n` self-links `(i, i)` followed by both directions of every edge.
    /// Flow `(i, j)` (index `i·n + j`) follows the BFS shortest path, ties
    /// broken by lowest node index; flow `(i, i)` uses self-link `i`.
    pub fn new(names: &[&str], edges: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        let mut link_map: LinkMap = (0..n).map(|i| (i, i)).collect();
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(config_err(format!("invalid edge ({u}, {v})")));
            }
            link_map.push((u, v));
            link_map.push((v, u));
        }
        let link_of = |u: usize, v: usize| link_map.iter().position(|&c| c == (u, v));
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        let mut r = DMatrix::zeros(link_map.len(), n * n);
        for src in 0..n {
            let mut parent = vec![usize::MAX; n];
            parent[src] = src;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if parent[v] == usize::MAX {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            for dst in 0..n {
                let f = src * n + dst;
                if dst == src {
                    r[(src, f)] = 1.0;
                    continue;
                }
                if parent[dst] == usize::MAX {
                    return Err(config_err(format!("{} unreachable from {}", names[dst], names[src])));
                }
                let mut v = dst;
                while v != src {
                    let u = parent[v];
                    r[(link_of(u, v).expect("edge link"), f)] = 1.0;
                    v = u;
                }
            }
        }
        let link_labels = link_map.iter().map(|&(i, j)| format!("{}-{}", names[i], names[j])).collect();
        let flow_labels =
            (0..n * n).map(|f| format!("{}-{}", names[f / n], names[f % n])).collect();
        let routing = RoutingMatrix::new(r, link_labels, flow_labels)?;
        Ok(Self { nodes: n, link_map, routing })
    }

    /// 11-node, 41-link backbone modelled on Internet-2.
    pub fn backbone() -> Self {
        Self::new(&BACKBONE_NODES, &BACKBONE_EDGES).expect("backbone topology is valid")
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn link_map(&self) -> &[(usize, usize)] {
        &self.link_map
    }

    pub fn routing(&self) -> &RoutingMatrix {
        &self.routing
    }
}

/// Synthetic link-count stream with injected flow anomalies.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthNetworkConfig {
    /// Rank of the nominal link-traffic slices.
    pub rank: usize,
    pub sigma: f64,
    /// Probability that a link count is observed.
    pub pi: f64,
    /// Probability that a time step carries anomalies.
    pub anomaly_prob: f64,
    /// Anomalous flows per anomalous step, drawn uniformly in `1..=max`.
    pub max_anomalous_flows: usize,
    /// Anomaly magnitudes are uniform in `[lo, hi]·σ` with a random sign.
    pub magnitude: (f64, f64),
    pub seed: u64,
}

impl SynthNetworkConfig {
    pub fn new(rank: usize, sigma: f64, pi: f64, seed: u64) -> Self {
        Self { rank, sigma, pi, anomaly_prob: 0.05, max_anomalous_flows: 3, magnitude: (10.0, 20.0), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.max_anomalous_flows == 0 {
            return Err(config_err("rank and anomalous-flow count must be positive"));
        }
        if !(self.pi > 0.0 && self.pi <= 1.0) || !(0.0..=1.0).contains(&self.anomaly_prob) {
            return Err(config_err("probabilities must lie in (0, 1]"));
        }
        if !(self.sigma > 0.0) || !(self.magnitude.0 > 0.0 && self.magnitude.1 >= self.magnitude.0) {
            return Err(config_err("need sigma > 0 and 0 < lo <= hi"));
        }
        Ok(())
    }
}

/// One step of the synthetic network stream.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSample {
    /// Observed link counts placed at their slice cells.
    pub obs: MaskedSlice,
    /// Nominal (anomaly- and noise-free) link traffic at the link cells.
    pub nominal: DMatrix<f64>,
    pub anomalies: Vec<f64>,
}

/// Iterator over a synthetic network stream. Nominal slices are
/// `A diag(γ_t) B'` restricted to the link cells with `A`, `B`, `γ_t`
/// i.i.d. `N(0, 1)`.
#[derive(Debug, Clone)]
pub struct NetworkStream {
    cfg: SynthNetworkConfig,
    net: Network,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    rng: StreamRng,
    t: usize,
    horizon: usize,
}

/// Draw order: `A` then `B` row-major; per step `γ_t`, the anomaly
/// indicator, then (if anomalous) the count, the flows and a
/// (magnitude, sign) pair per flow; finally a (noise, Bernoulli) pair per
/// link in link order.
pub fn gen_network_stream(net: &Network, cfg: &SynthNetworkConfig, horizon: usize) -> Result<NetworkStream> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let n = net.nodes();
    let mut draw = |rows: usize| {
        let v: Vec<f64> = (0..rows * cfg.rank).map(|_| normal(&mut rng)).collect();
        DMatrix::from_row_slice(rows, cfg.rank, &v)
    };
    let a = draw(n);
    let b = draw(n);
    Ok(NetworkStream { cfg: cfg.clone(), net: net.clone(), a, b, rng, t: 0, horizon })
}

impl NetworkStream {
    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Ground-truth factors `(A, B)`.
    pub fn factors(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.a, &self.b)
    }
}

impl Iterator for NetworkStream {
    type Item = NetworkSample;

    fn next(&mut self) -> Option<NetworkSample> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let cfg = &self.cfg;
        let rng = &mut self.rng;
        let gamma: Vec<f64> = (0..cfg.rank).map(|_| normal(rng)).collect();
        let full = crate::tensor_tracker::impute(&self.a, &self.b, &gamma);
        let flows = self.net.routing.flows();
        let mut anomalies = vec![0.0; flows];
        if rng.random::<f64>() < cfg.anomaly_prob {
            let k = rng.random_range(1..=cfg.max_anomalous_flows.min(flows));
            let mut idx: Vec<usize> = (0..flows).collect();
            let (chosen, _) = idx.partial_shuffle(rng, k);
            for &f in chosen.iter() {
                let mag = rng.random_range(cfg.magnitude.0..=cfg.magnitude.1) * cfg.sigma;
                anomalies[f] = if rng.random::<bool>() { mag } else { -mag };
            }
        }
        let o = DVector::from_column_slice(&anomalies);
        let link_anom = self.net.routing.matrix() * o;
        let n = self.net.nodes();
        let mut nominal = DMatrix::zeros(n, n);
        let mut entries = Vec::new();
        for (l, &(i, j)) in self.net.link_map.iter().enumerate() {
            nominal[(i, j)] = full[(i, j)];
            let noise = cfg.sigma * normal(rng);
            if rng.random::<f64>() < cfg.pi {
                entries.push((i, j, full[(i, j)] + link_anom[l] + noise));
            }
        }
        let obs = MaskedSlice::new(self.t, (n, n), entries).expect("link cells are unique");
        Some(NetworkSample { obs, nominal, anomalies })
    }
}
