//! Covariance Matrix Adaptation Evolution Strategy, maximizing.
//!
//! [`CmaState`] implements the ask/tell protocol with Hansen's standard
//! parameterization; [`Optimizer`] drives it against an objective with an
//! evaluation budget, stagnation stop and per-generation callbacks.

mod checkpoint;
mod optimize;

pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use optimize::{history_csv, optimize, Aborted, HistoryRow, OptimizeResult, Optimizer, StopReason};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-facing strategy settings. Unset learning rates take their standard
/// values for the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaConfig {
    pub sigma0: f64,
    pub lambda: Option<usize>,
    pub c_sigma: Option<f64>,
    pub d_sigma: Option<f64>,
    pub c_c: Option<f64>,
    pub c_1: Option<f64>,
    pub c_mu: Option<f64>,
}

impl Default for CmaConfig {
    fn default() -> Self {
        CmaConfig {
            sigma0: 1.0,
            lambda: None,
            c_sigma: None,
            d_sigma: None,
            c_c: None,
            c_1: None,
            c_mu: None,
        }
    }
}

/// Largest condition number of `C` kept at an eigendecomposition.
pub const MAX_CONDITION: f64 = 1e14;

/// Default population size, `4 + floor(3 ln dim)`.
pub fn default_lambda(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

/// Strategy constants fixed at initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub lambda: usize,
    pub mu: usize,
    /// Positive recombination weights, non-increasing, summing to 1.
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// Expected length of a standard normal vector.
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(dim: usize, config: &CmaConfig) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("CMA-ES dimension must be at least 1".into()));
        }
        let lambda = config.lambda.unwrap_or_else(|| default_lambda(dim));
        if lambda < 2 {
            return Err(Error::Argument(format!("population size must be at least 2, got {lambda}")));
        }
        let n = dim as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = config.c_sigma.unwrap_or((mu_eff + 2.0) / (n + mu_eff + 5.0));
        let d_sigma = config.d_sigma.unwrap_or(
            1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma,
        );
        let c_c = config
            .c_c
            .unwrap_or((4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n));
        let c_1 = config.c_1.unwrap_or(2.0 / ((n + 1.3).powi(2) + mu_eff));
        let c_mu = config.c_mu.unwrap_or(
            (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff)),
        );
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        let rates = [("c_sigma", c_sigma), ("c_c", c_c), ("c_1", c_1), ("c_mu", c_mu)];
        for (name, v) in rates {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::Argument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(d_sigma.is_finite() && d_sigma > 0.0) || c_1 + c_mu > 1.0 {
            return Err(Error::Argument("inconsistent CMA-ES learning rates".into()));
        }
        Ok(CmaParams {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        })
    }
}

/// Population awaiting fitness values.
#[derive(Debug, Clone, PartialEq)]
struct Pending {
    /// Samples in the `N(0, C)` frame, one per column.
    y: DMatrix<f64>,
    x: Vec<Vec<f64>>,
}

/// Full strategy state. Mutated only through [`CmaState::ask`] and
/// [`CmaState::tell`].
#[derive(Debug, Clone)]
pub struct CmaState {
    pub(crate) dim: usize,
    pub(crate) params: CmaParams,
    pub(crate) mean: DVector<f64>,
    pub(crate) sigma: f64,
    pub(crate) c: DMatrix<f64>,
    pub(crate) p_sigma: DVector<f64>,
    pub(crate) p_c: DVector<f64>,
    /// Eigenvectors of `c` as of `eigen_generation`.
    pub(crate) b: DMatrix<f64>,
    /// Square roots of the eigenvalues of `c` as of `eigen_generation`.
    pub(crate) d: DVector<f64>,
    pub(crate) eigen_generation: u64,
    pub(crate) generation: u64,
    pub(crate) evaluations: u64,
    pub(crate) best: Option<(Vec<f64>, f64)>,
    pub(crate) best_generation: u64,
    pub(crate) rng: ChaCha8Rng,
    pending: Option<Pending>,
}

impl PartialEq for CmaState {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.params == other.params
            && self.mean == other.mean
            && self.sigma.to_bits() == other.sigma.to_bits()
            && self.c == other.c
            && self.p_sigma == other.p_sigma
            && self.p_c == other.p_c
            && self.b == other.b
            && self.d == other.d
            && self.eigen_generation == other.eigen_generation
            && self.generation == other.generation
            && self.evaluations == other.evaluations
            && self.best == other.best
            && self.best_generation == other.best_generation
            && self.rng == other.rng
            && self.pending == other.pending
    }
}

impl CmaState {
    /// Mean at the origin, `C = I`.
    pub fn new(dim: usize, config: &CmaConfig, seed: u64) -> Result<Self> {
        if !(config.sigma0.is_finite() && config.sigma0 > 0.0) {
            return Err(Error::Argument(format!("sigma0 must be positive, got {}", config.sigma0)));
        }
        let params = CmaParams::new(dim, config)?;
        Ok(CmaState {
            dim,
            params,
            mean: DVector::zeros(dim),
            sigma: config.sigma0,
            c: DMatrix::identity(dim, dim),
            p_sigma: DVector::zeros(dim),
            p_c: DVector::zeros(dim),
            b: DMatrix::identity(dim, dim),
            d: DVector::from_element(dim, 1.0),
            eigen_generation: 0,
            generation: 0,
            evaluations: 0,
            best: None,
            best_generation: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn lambda(&self) -> usize {
        self.params.lambda
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Best candidate seen by any `tell`.
    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, f)| (x.as_slice(), *f))
    }

    /// Generation in which the best-ever fitness last improved.
    pub fn best_generation(&self) -> u64 {
        self.best_generation
    }

    pub fn is_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Condition number of `C` from the most recent eigendecomposition.
    pub fn condition(&self) -> f64 {
        let max = self.d.max();
        let min = self.d.min();
        (max * max) / (min * min)
    }

    /// Replaces the covariance matrix and refreshes its eigendecomposition.
    pub fn set_covariance(&mut self, c: DMatrix<f64>) -> Result<()> {
        if c.shape() != (self.dim, self.dim) {
            return Err(Error::Argument(format!(
                "covariance must be {0}x{0}, got {1}x{2}",
                self.dim,
                c.nrows(),
                c.ncols()
            )));
        }
        self.c = c;
        self.decompose()
    }

    pub fn set_mean(&mut self, mean: &[f64]) -> Result<()> {
        if mean.len() != self.dim || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("mean must be {} finite values", self.dim)));
        }
        self.mean = DVector::from_column_slice(mean);
        Ok(())
    }

    fn diagnostics(&self) -> String {
        let diag = self.c.diagonal();
        format!(
            "generation {}, sigma {:e}, diag(C) in [{:e}, {:e}]",
            self.generation,
            self.sigma,
            diag.min(),
            diag.max()
        )
    }

    fn decompose(&mut self) -> Result<()> {
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite covariance ({})", self.diagnostics())));
        }
        let mut eig = SymmetricEigen::new(self.c.clone());
        let max = eig.eigenvalues.max();
        if !(max.is_finite() && max > 0.0) {
            return Err(Error::Numerical(format!(
                "covariance has no positive eigenvalue: max {max:e} ({})",
                self.diagnostics()
            )));
        }
        // bound the condition number by lifting the spectrum
        let floor = max / MAX_CONDITION;
        let min = eig.eigenvalues.min();
        if min < floor {
            let lift = floor - min;
            for i in 0..self.dim {
                self.c[(i, i)] += lift;
            }
            eig.eigenvalues.add_scalar_mut(lift);
        }
        self.d = eig.eigenvalues.map(f64::sqrt);
        self.b = eig.eigenvectors;
        self.eigen_generation = self.generation;
        Ok(())
    }

    /// Samples the next population `x_i = m + σ B D z_i`.
    pub fn ask(&mut self) -> Result<Vec<Vec<f64>>> {
        if self.pending.is_some() {
            return Err(Error::Argument("ask called again before tell".into()));
        }
        let p = &self.params;
        let gap = p.lambda as f64 / (p.c_1 + p.c_mu) / self.dim as f64 / 10.0;
        if (self.generation - self.eigen_generation) as f64 > gap {
            self.decompose()?;
        }
        let (n, lambda) = (self.dim, self.params.lambda);
        let z = DMatrix::from_fn(n, lambda, |_, _| StandardNormal.sample(&mut self.rng));
        let y = &self.b * DMatrix::from_diagonal(&self.d) * z;
        let x: Vec<Vec<f64>> = (0..lambda)
            .map(|k| (0..n).map(|i| self.mean[i] + self.sigma * y[(i, k)]).collect())
            .collect();
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite sample ({})", self.diagnostics())));
        }
        self.pending = Some(Pending { y, x: x.clone() });
        Ok(x)
    }

    /// Updates the strategy from the fitnesses of the last [`ask`](Self::ask),
    /// in the same order. Larger is better; ties keep sampling order.
    pub fn tell(&mut self, fitness: &[f64]) -> Result<()> {
        if self.pending.is_none() {
            return Err(Error::Argument("tell called without a pending ask".into()));
        }
        let lambda = self.params.lambda;
        if fitness.len() != lambda {
            return Err(Error::Argument(format!("expected {lambda} fitness values, got {}", fitness.len())));
        }
        if let Some(i) = fitness.iter().position(|f| !f.is_finite()) {
            return Err(Error::Argument(format!("fitness {i} is not finite: {}", fitness[i])));
        }
        let pending = self.pending.take().expect("checked above");

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));

        let top = order[0];
        if self.best.as_ref().is_none_or(|(_, f)| fitness[top] > *f) {
            self.best = Some((pending.x[top].clone(), fitness[top]));
            self.best_generation = self.generation + 1;
        }

        let n = self.dim as f64;
        let p = &self.params;
        let selected: Vec<_> = order[..p.mu].iter().map(|&k| pending.y.column(k)).collect();
        let mut y_w = DVector::zeros(self.dim);
        for (w, y) in p.weights.iter().zip(&selected) {
            y_w.axpy(*w, y, 1.0);
        }
        self.mean.axpy(self.sigma, &y_w, 1.0);

        // C^(-1/2) y_w through the current eigenbasis
        let inv_sqrt = self.b.transpose() * &y_w;
        let inv_sqrt = &self.b * inv_sqrt.component_div(&self.d);
        self.p_sigma *= 1.0 - p.c_sigma;
        self.p_sigma
            .axpy((p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt(), &inv_sqrt, 1.0);

        let norm_ps = self.p_sigma.norm();
        let decay = 1.0 - (1.0 - p.c_sigma).powf(2.0 * (self.generation + 1) as f64);
        let h_sigma = norm_ps / decay.sqrt() < (1.4 + 2.0 / (n + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };

        self.p_c *= 1.0 - p.c_c;
        self.p_c.axpy(h * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt(), &y_w, 1.0);

        let delta = (1.0 - h) * p.c_c * (2.0 - p.c_c);
        let keep = 1.0 + p.c_1 * delta - p.c_1 - p.c_mu;
        let mut c = &self.c * keep;
        c.ger(p.c_1, &self.p_c, &self.p_c, 1.0);
        for (w, y) in p.weights.iter().zip(&selected) {
            c.ger(p.c_mu * w, y, y, 1.0);
        }
        self.c = (&c + c.transpose()) * 0.5;

        self.sigma *= ((p.c_sigma / p.d_sigma) * (norm_ps / p.chi_n - 1.0)).exp();
        self.generation += 1;
        self.evaluations += lambda as u64;
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Numerical(format!("step size degenerated ({})", self.diagnostics())));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite covariance ({})", self.diagnostics())));
        }
        Ok(())
    }

    /// Smallest eigenvalue and largest asymmetry of the current `C`.
    pub fn covariance_health(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.c.clone());
        let asym = (&self.c - self.c.transpose()).amax();
        (eig.eigenvalues.min(), asym)
    }
}
