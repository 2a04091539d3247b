//! Estimation-error figures of merit.

use nalgebra::DMatrix;

/// `‖x̂ − x‖₂ / ‖x‖₂`; zero when both vectors vanish.
pub fn relative_error(estimate: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    ratio(num, den)
}

/// `‖X̂ − X‖_F / ‖X‖_F`.
pub fn relative_error_matrix(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    ratio((estimate - truth).norm_squared(), truth.norm_squared())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        libm::sqrt(num / den)
    }
}

/// Running average `e_x[t] = (1/t) Σ_i ‖x̂_i − x_i‖ / ‖x_i‖`.
#[derive(Debug, Clone, Default)]
pub struct RunningError {
    sum: f64,
    count: usize,
}

impl RunningError {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one step and return the updated average.
    pub fn push(&mut self, estimate: &[f64], truth: &[f64]) -> f64 {
        self.push_value(relative_error(estimate, truth))
    }

    pub fn push_value(&mut self, err: f64) -> f64 {
        self.sum += err;
        self.count += 1;
        self.value()
    }

    pub fn value(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.sum / self.count as f64 }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}
