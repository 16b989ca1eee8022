//! HCMM and benchmark load allocation.
//!
//! HCMM assigns worker `i` the load `ℓ_i = τ*/λ_i`, where `λ_i` is the
//! per-worker seconds-per-row constant solving the stationarity equation of
//! the expected aggregate return, and `τ* = r/s` with `s = Σ rate_i` the
//! cluster-wide return rate. The benchmarks are Uniform Uncoded (equal loads,
//! wait for everyone), Load-balanced Uncoded (loads proportional to worker
//! speed, wait for everyone) and Uniform Coded (equal coded loads with a
//! Monte Carlo redundancy search).

use crate::error::{Error, Result};
use crate::models::{ClusterSpec, RuntimeModel};
use crate::roots::{bisect, expand_bracket};
use crate::scalar::Real;
use crate::simulator::{simulate_once, StragglerModel};

/// Per-worker allocation constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerRate<R> {
    /// λ: seconds per row; the worker's optimal load at horizon `t` is `t/λ`.
    pub secs_per_row: R,
    /// The worker's contribution to the cluster return rate `s`, in rows/s.
    pub rate: R,
}

/// Load allocation scheme tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Hcmm,
    UniformUncoded,
    LoadBalancedUncoded,
    UniformCoded,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Hcmm => "hcmm",
            Scheme::UniformUncoded => "uniform-uncoded",
            Scheme::LoadBalancedUncoded => "load-balanced-uncoded",
            Scheme::UniformCoded => "uniform-coded",
        }
    }

    /// True for the schemes whose master must wait for every worker.
    pub fn is_uncoded(&self) -> bool {
        matches!(self, Scheme::UniformUncoded | Scheme::LoadBalancedUncoded)
    }
}

/// Integer per-worker loads plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<R> {
    /// Rows assigned to each worker.
    pub loads: Vec<u64>,
    /// Nominal completion time τ* = r/s for HCMM; zero for the other schemes.
    pub nominal_time: R,
    pub scheme: Scheme,
    /// Rows the master needs before it can decode.
    pub rows_required: u64,
}

impl<R: Real> Allocation<R> {
    /// Total assigned rows.
    pub fn total_rows(&self) -> u64 {
        self.loads.iter().sum()
    }

    /// Coding redundancy `Σℓ_i / r`.
    pub fn redundancy(&self) -> R {
        R::of_count(self.total_rows()) / R::of_count(self.rows_required)
    }

    /// Rows the simulation must collect: `r` for coded schemes, everything
    /// for uncoded schemes (the master waits for all workers).
    pub fn rows_to_collect(&self) -> u64 {
        if self.scheme.is_uncoded() {
            self.total_rows()
        } else {
            self.rows_required
        }
    }
}

/// Solves the λ equation for one worker.
///
/// Exponential: `e^{μλ} = e^{aμ}(μλ + 1)`, solved in the stable log form
/// `μλ − aμ − ln(1 + μλ) = 0` on `λ > a`. Weibull:
/// `e^{(μ(λ−a))^α} = 1 + αμ^α λ(λ−a)^{α−1}`, same treatment. Both residuals
/// come out below `1e−9` in relative terms.
pub fn solve_lambda<R: Real>(model: &RuntimeModel<R>) -> Result<WorkerRate<R>> {
    let a = model.shift();
    let mu = model.straggling();
    match *model {
        RuntimeModel::ShiftedExponential { .. } => {
            let f = |lam: R| mu * lam - a * mu - (mu * lam).ln_1p();
            let (lo, hi) = expand_bracket(a, mu.recip(), f)?;
            let lam = bisect(lo, hi, R::of(1e-12), f)?;
            let rate = mu / (R::one() + mu * lam);
            Ok(WorkerRate { secs_per_row: lam, rate })
        }
        RuntimeModel::ShiftedWeibull { shape, .. } => {
            let f = |lam: R| {
                let gap = lam - a;
                let lhs = (mu * gap).powf(shape);
                if !lhs.is_finite() {
                    return lhs; // the left side dominates asymptotically
                }
                lhs - (shape * mu.powf(shape) * lam * gap.powf(shape - R::one())).ln_1p()
            };
            // The root sits strictly above a; the residual is negative
            // immediately above a for every shape, so walk a dyadic grid off a
            // and take the first sign change (the smallest root if there were
            // several).
            let mut lo = a + mu.recip() * R::of(2f64.powi(-40));
            for _ in 0..96 {
                if f(lo) < R::zero() || lo <= a {
                    break;
                }
                lo = a + (lo - a) * R::of(0.5);
            }
            let mut hi = lo;
            let mut bracketed = false;
            for _ in 0..128 {
                hi = a + (hi - a) * R::of(2.0);
                if f(hi) >= R::zero() {
                    bracketed = true;
                    break;
                }
                lo = hi;
            }
            if !bracketed {
                return Err(Error::RootSearch(
                    "no sign change above the shift for the Weibull rate equation".into(),
                ));
            }
            let lam = bisect(lo, hi, R::of(1e-12), f)?;
            let gap = lam - a;
            let numer = shape * mu.powf(shape) * gap.powf(shape - R::one());
            let rate = numer / (R::one() + numer * lam);
            Ok(WorkerRate { secs_per_row: lam, rate })
        }
    }
}

/// Cluster return rate `s = Σ_i rate_i` in rows per second.
pub fn cluster_rate<R: Real>(cluster: &ClusterSpec<R>) -> Result<R> {
    let mut s = R::zero();
    for model in cluster.models() {
        s = s + solve_lambda(model)?.rate;
    }
    Ok(s)
}

/// Fractional HCMM loads `τ*/λ_i` (before ceiling) and τ* itself.
pub fn hcmm_fractional_loads<R: Real>(
    cluster: &ClusterSpec<R>,
    rows: u64,
) -> Result<(Vec<R>, R)> {
    if rows == 0 {
        return Err(Error::invalid("target row count must be at least 1"));
    }
    let rates: Vec<WorkerRate<R>> =
        cluster.models().map(solve_lambda).collect::<Result<_>>()?;
    let s: R = rates.iter().fold(R::zero(), |acc, w| acc + w.rate);
    let tau = R::of_count(rows) / s;
    let loads = rates.iter().map(|w| tau / w.secs_per_row).collect();
    Ok((loads, tau))
}

/// HCMM allocation: `ℓ_i = ceil(τ*/λ_i)` with `τ* = r/s`.
pub fn hcmm_allocate<R: Real>(cluster: &ClusterSpec<R>, rows: u64) -> Result<Allocation<R>> {
    let (fractional, tau) = hcmm_fractional_loads(cluster, rows)?;
    let loads = fractional.iter().map(|l| ceil_rows(*l)).collect();
    Ok(Allocation { loads, nominal_time: tau, scheme: Scheme::Hcmm, rows_required: rows })
}

/// Equal loads `ceil(r/n)`; the master waits for every worker.
pub fn uniform_uncoded<R: Real>(cluster: &ClusterSpec<R>, rows: u64) -> Result<Allocation<R>> {
    if rows == 0 {
        return Err(Error::invalid("target row count must be at least 1"));
    }
    let n = cluster.len() as u64;
    let per_worker = rows.div_ceil(n);
    Ok(Allocation {
        loads: vec![per_worker; cluster.len()],
        nominal_time: R::zero(),
        scheme: Scheme::UniformUncoded,
        rows_required: rows,
    })
}

/// Loads proportional to `1/unit_time`, normalized to sum to `r`, then ceiled;
/// the master waits for every worker.
pub fn load_balanced_uncoded<R: Real>(
    cluster: &ClusterSpec<R>,
    rows: u64,
) -> Result<Allocation<R>> {
    if rows == 0 {
        return Err(Error::invalid("target row count must be at least 1"));
    }
    let weights: Vec<R> = cluster.models().map(|m| m.unit_time().recip()).collect();
    let total: R = weights.iter().fold(R::zero(), |acc, w| acc + *w);
    let loads = weights
        .iter()
        .map(|w| ceil_rows(R::of_count(rows) * *w / total))
        .collect();
    Ok(Allocation {
        loads,
        nominal_time: R::zero(),
        scheme: Scheme::LoadBalancedUncoded,
        rows_required: rows,
    })
}

/// Redundancy grid searched by [`uniform_coded`]: 1.00, 1.05, ..., 4.00.
pub fn uniform_coded_grid() -> impl Iterator<Item = f64> {
    (0..=60).map(|i| 1.0 + 0.05 * i as f64)
}

/// Equal coded loads `ceil(R·r/n)` with the redundancy `R` picked by Monte
/// Carlo: each grid point is evaluated with `sim_budget` trials driven by the
/// same substreams of `seed` (common random numbers), and the mean completion
/// time decides.
pub fn uniform_coded<R: Real>(
    cluster: &ClusterSpec<R>,
    rows: u64,
    sim_budget: usize,
    seed: u64,
) -> Result<Allocation<R>> {
    if rows == 0 {
        return Err(Error::invalid("target row count must be at least 1"));
    }
    if sim_budget == 0 {
        return Err(Error::invalid("simulation budget must be at least 1 trial"));
    }
    let n = cluster.len() as u64;
    let mut best: Option<(R, u64)> = None;
    for redundancy in uniform_coded_grid() {
        let per_worker = ceil_rows(R::of(redundancy) * R::of_count(rows) / R::of_count(n));
        if per_worker * n < rows {
            continue;
        }
        let candidate = Allocation {
            loads: vec![per_worker; cluster.len()],
            nominal_time: R::zero(),
            scheme: Scheme::UniformCoded,
            rows_required: rows,
        };
        let mut total = R::zero();
        for trial in 0..sim_budget {
            let mut rng = crate::rng::substream(seed, trial as u64);
            let outcome = simulate_once(
                cluster,
                &candidate,
                rows,
                &StragglerModel::none(),
                &mut rng,
            )?;
            total = total + outcome.completion;
        }
        let mean = total / R::of(sim_budget as f64);
        if best.is_none_or(|(best_mean, _)| mean < best_mean) {
            best = Some((mean, per_worker));
        }
    }
    let (_, per_worker) = best.expect("grid contains at least R = 1");
    Ok(Allocation {
        loads: vec![per_worker; cluster.len()],
        nominal_time: R::zero(),
        scheme: Scheme::UniformCoded,
        rows_required: rows,
    })
}

fn ceil_rows<R: Real>(x: R) -> u64 {
    let ceiled = x.ceil().as_f64();
    debug_assert!(ceiled >= 0.0);
    ceiled as u64
}
