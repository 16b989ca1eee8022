//! Worker run-time models and cluster descriptions.
//!
//! A worker loaded with `ℓ` rows finishes in random time `T` with
//!
//! * shifted exponential law: `Pr[T ≤ t] = 1 − exp(−(μ/ℓ)(t − aℓ))`,
//! * shifted Weibull law:     `Pr[T ≤ t] = 1 − exp(−((μ/ℓ)(t − aℓ))^α)`,
//!
//! both supported on `t ≥ aℓ`. `a` is the deterministic seconds-per-row shift,
//! `μ` the straggling parameter (rows per second), `α` the Weibull shape;
//! `α = 1` reduces exactly to the exponential case.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::scalar::Real;

/// Stochastic run-time law of one worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuntimeModel<R> {
    ShiftedExponential { shift: R, straggling: R },
    ShiftedWeibull { shift: R, straggling: R, shape: R },
}

impl<R: Real> RuntimeModel<R> {
    /// Shifted exponential with shift `a > 0` (s/row) and straggling
    /// parameter `μ > 0` (rows/s).
    pub fn exponential(shift: R, straggling: R) -> Result<Self> {
        if !(shift > R::zero()) || !shift.is_finite() {
            return Err(Error::invalid(format!("shift must be positive, got {shift}")));
        }
        if !(straggling > R::zero()) || !straggling.is_finite() {
            return Err(Error::invalid(format!(
                "straggling parameter must be positive, got {straggling}"
            )));
        }
        Ok(RuntimeModel::ShiftedExponential { shift, straggling })
    }

    /// Shifted Weibull with shift `a > 0`, straggling parameter `μ > 0` and
    /// shape `α > 0`.
    pub fn weibull(shift: R, straggling: R, shape: R) -> Result<Self> {
        if !(shape > R::zero()) || !shape.is_finite() {
            return Err(Error::invalid(format!("shape must be positive, got {shape}")));
        }
        let base = Self::exponential(shift, straggling)?;
        let (shift, straggling) = (base.shift(), base.straggling());
        Ok(RuntimeModel::ShiftedWeibull { shift, straggling, shape })
    }

    pub fn shift(&self) -> R {
        match *self {
            RuntimeModel::ShiftedExponential { shift, .. } => shift,
            RuntimeModel::ShiftedWeibull { shift, .. } => shift,
        }
    }

    pub fn straggling(&self) -> R {
        match *self {
            RuntimeModel::ShiftedExponential { straggling, .. } => straggling,
            RuntimeModel::ShiftedWeibull { straggling, .. } => straggling,
        }
    }

    /// Weibull shape; `1` for the exponential law.
    pub fn shape(&self) -> R {
        match *self {
            RuntimeModel::ShiftedExponential { .. } => R::one(),
            RuntimeModel::ShiftedWeibull { shape, .. } => shape,
        }
    }

    /// `Pr[T ≤ t]` for a worker loaded with `load ≥ 1` rows.
    pub fn cdf(&self, load: u64, t: R) -> Result<R> {
        let z = self.standardized(load, t)?;
        if z <= R::zero() {
            return Ok(R::zero());
        }
        Ok(R::one() - (-z.powf(self.shape())).exp())
    }

    /// Inverse-CDF sample: `aℓ + (ℓ/μ)(−ln(1−u))^{1/α}` with one uniform draw.
    pub fn sample<G: Rng + ?Sized>(&self, load: u64, rng: &mut G) -> Result<R> {
        let u: f64 = rng.random();
        self.quantile(load, R::of(u))
    }

    /// Inverse CDF at probability `u ∈ [0, 1)`.
    pub fn quantile(&self, load: u64, u: R) -> Result<R> {
        let rows = self.rows(load)?;
        if !(u >= R::zero()) || !(u < R::one()) {
            return Err(Error::invalid(format!("probability must lie in [0, 1), got {u}")));
        }
        let tail = -(R::one() - u).ln();
        let spread = tail.powf(R::one() / self.shape());
        Ok(self.shift() * rows + rows / self.straggling() * spread)
    }

    /// `E[T]`: `aℓ + (ℓ/μ)Γ(1 + 1/α)`; the exponential case has `Γ(2) = 1`.
    pub fn mean(&self, load: u64) -> Result<R> {
        let rows = self.rows(load)?;
        Ok(rows * self.unit_time())
    }

    /// Expected seconds to compute a single inner product, `mean(1)`.
    pub fn unit_time(&self) -> R {
        let stochastic = match *self {
            RuntimeModel::ShiftedExponential { straggling, .. } => straggling.recip(),
            RuntimeModel::ShiftedWeibull { straggling, shape, .. } => {
                gamma(R::one() + shape.recip()) / straggling
            }
        };
        self.shift() + stochastic
    }

    /// `(μ/ℓ)(t − aℓ)`, the standardized exceedance over the shift.
    fn standardized(&self, load: u64, t: R) -> Result<R> {
        let rows = self.rows(load)?;
        if !t.is_finite() {
            return Err(Error::invalid(format!("time must be finite, got {t}")));
        }
        Ok(self.straggling() / rows * (t - self.shift() * rows))
    }

    fn rows(&self, load: u64) -> Result<R> {
        if load == 0 {
            return Err(Error::ZeroLoad);
        }
        Ok(R::of_count(load))
    }
}

/// One worker: an index and its run-time law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerSpec<R> {
    pub id: usize,
    pub model: RuntimeModel<R>,
}

/// An ordered, non-empty collection of workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec<R> {
    workers: Vec<WorkerSpec<R>>,
}

impl<R: Real> ClusterSpec<R> {
    /// Builds a cluster from models, assigning ids `0..n`.
    pub fn new(models: Vec<RuntimeModel<R>>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::invalid("a cluster needs at least one worker"));
        }
        let workers = models
            .into_iter()
            .enumerate()
            .map(|(id, model)| WorkerSpec { id, model })
            .collect();
        Ok(ClusterSpec { workers })
    }

    /// Builds a cluster from `(count, model)` groups, in group order.
    pub fn from_groups(groups: &[(usize, RuntimeModel<R>)]) -> Result<Self> {
        let mut models = Vec::new();
        for &(count, model) in groups {
            models.extend(std::iter::repeat_n(model, count));
        }
        Self::new(models)
    }

    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction enforces n >= 1
    }

    pub fn workers(&self) -> &[WorkerSpec<R>] {
        &self.workers
    }

    pub fn models(&self) -> impl Iterator<Item = &RuntimeModel<R>> {
        self.workers.iter().map(|w| &w.model)
    }

    pub fn model(&self, index: usize) -> &RuntimeModel<R> {
        &self.workers[index].model
    }
}
