//! Acceptance suite. Runs every criterion, prints one verdict line each and
//! exits nonzero if any fails. Run with `cargo test --release --test acceptance`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use subtrack_core::anomaly::{
    gen_network_stream, lasso_kkt_residual, lasso_objective, lasso_solve, residual_vector, AnomalyDetector, Network,
    RateCounter, SynthNetworkConfig,
};
use subtrack_core::matrix_tracker::{
    self, average_cost, project_coefficients, LambdaPolicy, MatrixTracker, MatrixTrackerConfig, RowSolver,
};
use subtrack_core::oracle::{
    balanced_factors, certify_global, nuclear_norm, solve_p1, solve_p2, BatchProblem,
};
use subtrack_core::sgd_tracker::{grad_f, loss_f, SgdTracker, SgdTrackerConfig};
use subtrack_core::synth::{gen_matrix_stream, gen_tensor_stream, rng_from_seed, SynthMatrixConfig, SynthTensorConfig};
use subtrack_core::tensor_tracker::{self, grad_a, grad_b, loss_f_bar, TensorLambda, TensorTracker, TensorTrackerConfig};
use subtrack_core::{MaskedSlice, MaskedVector};

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn main() {
    let criteria: [fn() -> Verdict; 10] = [
        batch_optimality,
        certificate,
        rls_equivalence,
        gradient_oracles,
        nuclear_norm_characterization,
        tensor_trend,
        stationarity_trend,
        lasso_oracle,
        anomaly_pipeline,
        complexity_scaling,
    ];
    let mut failed = 0;
    let mut verdicts = Vec::new();
    for c in criteria {
        let v = c();
        println!("criterion {:>2} {:<36} {}  {}", v.id, v.name, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
        verdicts.push(v);
    }
    println!();
    for v in &verdicts {
        println!("criterion {:>2}: {}", v.id, if v.pass { "pass" } else { "fail" });
    }
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

const P: usize = 100;
const HORIZON: usize = 5000;

/// One tracked stream and its batch solution.
struct BatchRun {
    sigma2: f64,
    pi: f64,
    l: DMatrix<f64>,
    lambda: f64,
    history: Vec<MaskedVector>,
    prob: BatchProblem,
    x_star: DMatrix<f64>,
    gap: f64,
    seconds: f64,
}

fn batch_run(sigma2: f64, pi: f64) -> BatchRun {
    let start = Instant::now();
    let sigma = sigma2.sqrt();
    let cfg = SynthMatrixConfig::new(P, 5, sigma, pi, 7);
    let history: Vec<_> = gen_matrix_stream(&cfg, HORIZON).unwrap().map(|s| s.obs).collect();
    let tc = MatrixTrackerConfig::new(P, 10, 1.0, LambdaPolicy::Heuristic { pi, sigma }, 11);
    let mut tracker = MatrixTracker::new(tc).unwrap();
    for obs in &history {
        tracker.step(obs).unwrap();
    }
    let (l, lambda) = (tracker.subspace(), tracker.lambda());
    let c_t = average_cost(&l, &history, lambda).unwrap();
    let prob = BatchProblem::from_stream(&history, lambda, 10).unwrap();
    let sol = solve_p1(&prob, 1e-9, 5000).unwrap();
    let c_star = sol.objective / HORIZON as f64;
    let gap = (c_t - c_star).abs() / c_star;
    BatchRun { sigma2, pi, l, lambda, history, prob, x_star: sol.x, gap, seconds: start.elapsed().as_secs_f64() }
}

thread_local! {
    static BATCH: std::cell::RefCell<Vec<BatchRun>> = const { std::cell::RefCell::new(Vec::new()) };
}

fn batch_optimality() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma2 in [1e-3, 1e-2] {
        for pi in [0.25, 0.55] {
            let run = batch_run(sigma2, pi);
            let ok = run.gap <= 0.05 && run.seconds <= 120.0;
            pass &= ok;
            println!("  batch optimality σ²={sigma2:e} π={pi}: relative gap {:.4}, {:.1} s", run.gap, run.seconds);
            parts.push(format!("{:.3}", run.gap));
            BATCH.with(|b| b.borrow_mut().push(run));
        }
    }
    Verdict { id: 1, name: "batch-optimality convergence", pass, detail: format!("gaps [{}], need ≤ 0.05", parts.join(", ")) }
}

fn certificate() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    BATCH.with(|b| {
        for run in b.borrow().iter().filter(|r| r.sigma2 == 1e-3) {
            let mut q = DMatrix::zeros(run.history.len(), run.l.ncols());
            for (j, obs) in run.history.iter().enumerate() {
                q.set_row(j, &project_coefficients(&run.l, obs, run.lambda).unwrap().transpose());
            }
            let cert = certify_global(&run.l, &q, &run.prob, 1e-6);
            let dist = (&run.l * q.transpose() - &run.x_star).norm() / run.x_star.norm();
            println!(
                "  certificate π={}: certified={} σ_max/λ={:.4} stationarity={:.2e} distance={:.4}",
                run.pi, cert.certified, cert.sigma_ratio, cert.stationarity_residual, dist
            );
            pass &= cert.certified && dist <= 0.02;
            parts.push(format!("π={} ratio {:.2} dist {:.3}", run.pi, cert.sigma_ratio, dist));
        }
    });
    Verdict { id: 2, name: "global-optimality certificate", pass, detail: parts.join("; ") }
}

fn rls_equivalence() -> Verdict {
    let cfg = SynthMatrixConfig::new(20, 3, 0.1, 0.5, 21);
    let stream: Vec<_> = gen_matrix_stream(&cfg, 200).unwrap().map(|s| s.obs).collect();
    let base = MatrixTrackerConfig::new(20, 5, 1.0, LambdaPolicy::fixed(1.0), 22);
    let mut direct = MatrixTracker::new(base.clone().with_solver(RowSolver::Direct)).unwrap();
    let mut rls = MatrixTracker::new(base.with_solver(RowSolver::Rls)).unwrap();
    let mut worst: f64 = 0.0;
    for obs in &stream {
        direct.step(obs).unwrap();
        rls.step(obs).unwrap();
        let (a, b) = (direct.subspace(), rls.subspace());
        worst = worst.max((&a - &b).norm() / a.norm().max(f64::MIN_POSITIVE));
    }
    Verdict { id: 3, name: "RLS equivalence", pass: worst <= 1e-8, detail: format!("max relative distance {worst:.2e}, need ≤ 1e-8") }
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn fd_gradient(x: &DMatrix<f64>, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut y = x.clone();
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        y[i] = x[i] + h;
        let up = f(&y);
        y[i] = x[i] - h;
        let down = f(&y);
        y[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

fn gradient_oracles() -> Verdict {
    let mut rng = rng_from_seed(31);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p, r) = (rng.random_range(3..12), rng.random_range(1..5));
        let l = random_matrix(&mut rng, p, r);
        let dense: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mask: Vec<bool> = (0..p).map(|_| rng.random::<f64>() < 0.6).collect();
        let obs = MaskedVector::from_dense(1, &dense, &mask).unwrap();
        let q: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let (lambda, t) = (rng.random_range(0.1..2.0), rng.random_range(1..50));
        let g = grad_f(&l, &obs, &q, lambda, t);
        let fd = fd_gradient(&l, |x| loss_f(x, &obs, &q, lambda, t));
        worst = worst.max((&g - &fd).norm() / fd.norm().max(1e-12));
    }
    let matrix_worst = worst;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, n, r) = (rng.random_range(2..8), rng.random_range(2..8), rng.random_range(1..4));
        let a = random_matrix(&mut rng, m, r);
        let b = random_matrix(&mut rng, n, r);
        let gamma: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y = random_matrix(&mut rng, m, n);
        let mask = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() < 0.6);
        let slice = MaskedSlice::from_dense(1, &y, &mask).unwrap();
        let (lambda, t) = (rng.random_range(0.1..2.0), rng.random_range(1..50));
        let ga = grad_a(&a, &b, &gamma, &slice, lambda, t);
        let fa = fd_gradient(&a, |x| loss_f_bar(x, &b, &gamma, &slice, lambda, t));
        let gb = grad_b(&a, &b, &gamma, &slice, lambda, t);
        let fb = fd_gradient(&b, |x| loss_f_bar(&a, x, &gamma, &slice, lambda, t));
        worst = worst.max((&ga - &fa).norm() / fa.norm().max(1e-12));
        worst = worst.max((&gb - &fb).norm() / fb.norm().max(1e-12));
    }
    let pass = matrix_worst <= 1e-5 && worst <= 1e-5;
    Verdict {
        id: 4,
        name: "gradient oracles",
        pass,
        detail: format!("max relative error matrix {matrix_worst:.2e}, tensor {worst:.2e}, need ≤ 1e-5"),
    }
}

fn nuclear_norm_characterization() -> Verdict {
    let mut rng = rng_from_seed(41);
    let (mut factor_gap, mut p2_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let x = random_matrix(&mut rng, 8, 6);
        let svd = x.clone().svd(true, true);
        let root = DMatrix::from_diagonal(&svd.singular_values.map(f64::sqrt));
        let l = svd.u.as_ref().unwrap() * &root;
        let q = svd.v_t.as_ref().unwrap().transpose() * &root;
        let oracle = svd.singular_values.sum();
        factor_gap = factor_gap.max((0.5 * (l.norm_squared() + q.norm_squared()) - oracle).abs());
        factor_gap = factor_gap.max((nuclear_norm(&x) - oracle).abs());
        let (lb, qb) = balanced_factors(&x, 6);
        factor_gap = factor_gap.max((0.5 * (lb.norm_squared() + qb.norm_squared()) - oracle).abs());

        let mask = DMatrix::from_fn(8, 6, |_, _| rng.random::<f64>() < 0.7);
        let prob = BatchProblem::new(x, mask, 0.5, 6).unwrap();
        let p1 = solve_p1(&prob, 1e-13, 100_000).unwrap();
        let (l0, q0) = balanced_factors(&p1.x, 6);
        let p2 = solve_p2(&prob, l0, q0, 1e-13, 100_000).unwrap();
        p2_gap = p2_gap.max((p2.objective - p1.objective).abs() / p1.objective);
    }
    Verdict {
        id: 5,
        name: "nuclear-norm characterization",
        pass: factor_gap <= 1e-10 && p2_gap <= 1e-6,
        detail: format!("factor gap {factor_gap:.2e} (≤ 1e-10), P2 vs P1 {p2_gap:.2e} (≤ 1e-6)"),
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}

fn tensor_trend() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for pi in [0.25, 0.75] {
        let start = Instant::now();
        let cfg = SynthTensorConfig::new(50, 50, 5, 1e-3, pi, 1);
        let tc = TensorTrackerConfig::new(50, 50, 10, TensorLambda::Heuristic { pi, sigma: 1e-3 }, 101);
        let mut tracker = TensorTracker::new(tc).unwrap();
        let mut errors = Vec::new();
        for s in gen_tensor_stream(&cfg, 5000).unwrap() {
            let out = tracker.step(&s.obs).unwrap();
            errors.push(subtrack_core::metrics::relative_error_matrix(&out.x_hat, &s.truth));
        }
        let seconds = start.elapsed().as_secs_f64();
        let medians: Vec<f64> = errors.chunks(200).map(median).collect();
        let reached = medians.iter().position(|&m| m < 0.05);
        let decreasing = reached.is_some_and(|k| medians[..=k].windows(2).all(|w| w[1] < w[0]));
        let ok = decreasing && seconds <= 120.0;
        pass &= ok;
        let shown: Vec<String> = medians.iter().take(6).map(|m| format!("{m:.4}")).collect();
        println!("  tensor π={pi}: window medians [{} ...], below 0.05 at window {reached:?}, {seconds:.1} s", shown.join(", "));
        parts.push(format!("π={pi} window {:?}", reached.map(|k| k + 1)));
    }
    Verdict { id: 6, name: "tensor imputation trend", pass, detail: parts.join("; ") }
}

fn nonincreasing(g: &[f64]) -> bool {
    g.windows(2).all(|w| w[1] <= 1.1 * w[0])
}

fn stationarity_trend() -> Verdict {
    let checks = [500usize, 1000, 2000, 4000];
    let lambda = 1.0;
    let cfg = SynthMatrixConfig::new(100, 5, 1e-3f64.sqrt(), 0.5, 7);
    let data: Vec<_> = gen_matrix_stream(&cfg, 4000).unwrap().map(|s| s.obs).collect();
    let mut als = MatrixTracker::new(MatrixTrackerConfig::new(100, 10, 1.0, LambdaPolicy::fixed(lambda), 11)).unwrap();
    let mut sgd = SgdTracker::new(SgdTrackerConfig::new(100, 10, lambda, 11)).unwrap();
    let (mut g1, mut g2) = (Vec::new(), Vec::new());
    for (k, obs) in data.iter().enumerate() {
        als.step(obs).unwrap();
        sgd.step(obs).unwrap();
        if checks.contains(&(k + 1)) {
            g1.push(matrix_tracker::cost_gradient(&als.subspace(), &data[..=k], lambda).unwrap().norm());
            g2.push(matrix_tracker::cost_gradient(&sgd.subspace(), &data[..=k], lambda).unwrap().norm());
        }
    }
    let tlambda = 0.1;
    let tcfg = SynthTensorConfig::new(20, 20, 3, 1e-3, 0.5, 7);
    let slices: Vec<_> = gen_tensor_stream(&tcfg, 4000).unwrap().map(|s| s.obs).collect();
    let tc = TensorTrackerConfig::new(20, 20, 5, TensorLambda::Fixed { value: tlambda }, 11);
    let mut tensor = TensorTracker::new(tc).unwrap();
    let mut g3 = Vec::new();
    for (k, s) in slices.iter().enumerate() {
        tensor.step(s).unwrap();
        if checks.contains(&(k + 1)) {
            let (a, b) = tensor.factors();
            let (ga, gb) = tensor_tracker::cost_gradient(&a, &b, &slices[..=k], tlambda).unwrap();
            g3.push((ga.norm_squared() + gb.norm_squared()).sqrt());
        }
    }
    let fmt = |g: &[f64]| g.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" ");
    println!("  ‖∇C_t‖ at {checks:?}: ALS [{}], SGD [{}], tensor [{}]", fmt(&g1), fmt(&g2), fmt(&g3));
    let pass = nonincreasing(&g1) && nonincreasing(&g2) && nonincreasing(&g3);
    Verdict {
        id: 7,
        name: "stationarity trend",
        pass,
        detail: format!("ALS {}, SGD {}, tensor {}", nonincreasing(&g1), nonincreasing(&g2), nonincreasing(&g3)),
    }
}

/// Exhaustive LASSO minimum over every support and sign pattern, solving
/// the stationarity equations `R_S'R_S o_S = R_S'y − (λ/2)s` exactly.
fn lasso_brute_force(r: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> f64 {
    let f = r.ncols();
    let mut best = y.norm_squared();
    let mut pattern = vec![0i8; f];
    loop {
        let mut k = 0;
        while k < f {
            pattern[k] = match pattern[k] {
                0 => 1,
                1 => -1,
                _ => 0,
            };
            if pattern[k] != 0 {
                break;
            }
            k += 1;
        }
        if k == f {
            return best;
        }
        let support: Vec<usize> = (0..f).filter(|&i| pattern[i] != 0).collect();
        let rs = DMatrix::from_fn(r.nrows(), support.len(), |i, j| r[(i, support[j])]);
        let signs = DVector::from_iterator(support.len(), support.iter().map(|&i| pattern[i] as f64));
        let rhs = rs.transpose() * y - signs.clone() * (0.5 * lambda);
        let Some(chol) = (rs.transpose() * &rs).cholesky() else { continue };
        let os = chol.solve(&rhs);
        if os.iter().zip(signs.iter()).all(|(o, s)| o * s > 0.0) {
            let mut o = DVector::zeros(f);
            for (j, &i) in support.iter().enumerate() {
                o[i] = os[j];
            }
            best = best.min((y - r * &o).norm_squared() + lambda * o.lp_norm(1));
        }
    }
}

fn lasso_oracle() -> Verdict {
    let mut rng = rng_from_seed(81);
    let tol = 1e-10;
    let (mut worst_obj, mut worst_kkt): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let f = rng.random_range(1..=8);
        let links = rng.random_range(f..=12);
        let r = DMatrix::from_fn(links, f, |_, _| rng.random::<f64>());
        let y = DVector::from_fn(links, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
        let lambda = rng.random_range(0.1..5.0);
        let sol = lasso_solve(&r, &y, lambda, tol, 1_000_000).unwrap();
        let oracle = lasso_brute_force(&r, &y, lambda);
        worst_obj = worst_obj.max((lasso_objective(&r, &y, &sol.o, lambda) - oracle).abs());
        worst_kkt = worst_kkt.max(lasso_kkt_residual(&r, &y, &sol.o, lambda));
    }
    Verdict {
        id: 8,
        name: "LASSO oracle equivalence",
        pass: worst_obj <= 1e-8 && worst_kkt <= 10.0 * tol,
        detail: format!("objective gap {worst_obj:.2e} (≤ 1e-8), KKT {worst_kkt:.2e} (≤ {:.0e})", 10.0 * tol),
    }
}

fn anomaly_pipeline() -> Verdict {
    let (sigma, horizon, burn_in) = (0.1, 3000, 1000);
    let xi = 5.0 * sigma;
    let grid: Vec<f64> = (0..10).map(|k| 0.5 * sigma * 10f64.powf(k as f64 / 4.5)).collect();
    let net = Network::backbone();
    let mut pass = true;
    let mut parts = Vec::new();
    for pi in [0.75, 1.0] {
        let cfg = SynthNetworkConfig::new(3, sigma, pi, 91);
        let tc = TensorTrackerConfig::new(11, 11, 3, TensorLambda::Heuristic { pi, sigma }, 92);
        let mut tracker = TensorTracker::new(tc).unwrap();
        let mut detectors: Vec<_> =
            grid.iter().map(|&l| AnomalyDetector::new(net.routing().clone(), l, xi, 1e-9, 100_000).unwrap()).collect();
        let mut counters = vec![RateCounter::default(); grid.len()];
        for (k, s) in gen_network_stream(&net, &cfg, horizon).unwrap().enumerate() {
            let out = tracker.step(&s.obs).unwrap();
            let (y, observed) = residual_vector(&s.obs, &out.x_hat, net.link_map()).unwrap();
            for (d, c) in detectors.iter_mut().zip(counters.iter_mut()) {
                let est = d.estimate(k + 1, &y, &observed).unwrap();
                if k >= burn_in {
                    c.push(&s.anomalies, est.o_hat.as_slice(), xi).unwrap();
                }
            }
        }
        let rates: Vec<_> = counters.iter().map(RateCounter::rates).collect();
        for (l, r) in grid.iter().zip(&rates) {
            println!("  anomaly π={pi} λ_o={l:.4}: P_D={:.3} P_FA={:.4}", r.p_d, r.p_fa);
        }
        let ok = rates.iter().any(|r| r.p_d >= 0.9 && r.p_fa <= 0.05);
        let best = rates.iter().filter(|r| r.p_fa <= 0.05).map(|r| r.p_d).fold(0.0, f64::max);
        pass &= ok;
        parts.push(format!("π={pi} best P_D {best:.3} at P_FA ≤ 0.05"));
    }
    Verdict { id: 9, name: "anomaly pipeline", pass, detail: parts.join("; ") }
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn per_step_seconds(tracker: &mut MatrixTracker, data: &[MaskedVector], warmup: usize, reps: usize) -> f64 {
    for obs in &data[..warmup] {
        tracker.step(obs).unwrap();
    }
    let chunk = (data.len() - warmup) / reps;
    (0..reps)
        .map(|r| {
            let start = Instant::now();
            for obs in &data[warmup + r * chunk..warmup + (r + 1) * chunk] {
                tracker.step(obs).unwrap();
            }
            start.elapsed().as_secs_f64() / chunk as f64
        })
        .fold(f64::INFINITY, f64::min)
}

fn complexity_scaling() -> Verdict {
    let rhos = [5usize, 10, 20, 40];
    let cfg = SynthMatrixConfig::new(2000, 5, 0.03, 0.5, 101);
    let data: Vec<_> = gen_matrix_stream(&cfg, 35).unwrap().map(|s| s.obs).collect();
    let times: Vec<f64> = rhos
        .iter()
        .map(|&rho| {
            let tc = MatrixTrackerConfig::new(2000, rho, 0.99, LambdaPolicy::fixed(1.0), 102);
            per_step_seconds(&mut MatrixTracker::new(tc).unwrap(), &data, 5, 3)
        })
        .collect();
    let rho_slope = log_slope(&rhos.map(|r| r as f64), &times);

    let pis = [0.05, 0.1, 0.2, 0.4, 0.8];
    let mut sizes = Vec::new();
    let mut rls_times = Vec::new();
    for &pi in &pis {
        let cfg = SynthMatrixConfig::new(20_000, 5, 0.03, pi, 103);
        let data: Vec<_> = gen_matrix_stream(&cfg, 320).unwrap().map(|s| s.obs).collect();
        let tc = MatrixTrackerConfig::new(20_000, 10, 1.0, LambdaPolicy::fixed(1.0), 104).with_solver(RowSolver::Rls);
        rls_times.push(per_step_seconds(&mut MatrixTracker::new(tc).unwrap(), &data, 20, 3));
        sizes.push(data[20..].iter().map(|o| o.len() as f64).sum::<f64>() / 300.0);
    }
    let omega_slope = log_slope(&sizes, &rls_times);
    let fmt = |v: &[f64]| v.iter().map(|t| format!("{:.2e}", t)).collect::<Vec<_>>().join(" ");
    println!("  θ<1 per-step seconds over ρ={rhos:?}: [{}]", fmt(&times));
    println!("  RLS per-step seconds over |ω|≈[{}]: [{}]", fmt(&sizes), fmt(&rls_times));
    let pass = (2.5..=3.5).contains(&rho_slope) && (0.7..=1.3).contains(&omega_slope);
    Verdict {
        id: 10,
        name: "complexity scaling",
        pass,
        detail: format!("ρ slope {rho_slope:.2} (in [2.5, 3.5]), |ω| slope {omega_slope:.2} (in [0.7, 1.3])"),
    }
}
