//! Monte Carlo and closed-form evaluation of completion times.
//!
//! A trial samples every loaded worker's run-time, optionally multiplies the
//! times of Bernoulli-chosen stragglers by a slowdown factor, and reads off
//! the waiting time until the collected rows first reach the decode threshold.
//! Comparisons across schemes reuse the same per-trial substreams (common
//! random numbers), which keeps scheme differences far above the Monte Carlo
//! noise floor.

use rand::Rng;

use crate::allocator::{
    hcmm_allocate, load_balanced_uncoded, uniform_coded, uniform_uncoded, Allocation, Scheme,
};
use crate::error::{Error, Result};
use crate::models::ClusterSpec;
use crate::rng::{derive_seed, substream};
use crate::scalar::Real;

/// Bernoulli straggler injection: each worker independently becomes a
/// straggler with probability `p`, and a straggler's total time is multiplied
/// by `slowdown` (a worker that waits 3x its compute time on top of computing
/// has `slowdown = 4`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StragglerModel<R> {
    probability: f64,
    slowdown: R,
}

impl<R: Real> StragglerModel<R> {
    pub fn new(probability: f64, slowdown: R) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::invalid(format!(
                "straggler probability must lie in [0, 1], got {probability}"
            )));
        }
        if !(slowdown >= R::one()) {
            return Err(Error::invalid(format!(
                "slowdown must be at least 1, got {slowdown}"
            )));
        }
        Ok(StragglerModel { probability, slowdown })
    }

    /// No stragglers at all.
    pub fn none() -> Self {
        StragglerModel { probability: 0.0, slowdown: R::one() }
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn slowdown(&self) -> R {
        self.slowdown
    }

    /// Draws the i.i.d. Bernoulli straggler mask for `count` workers.
    pub fn mask<G: Rng + ?Sized>(&self, count: usize, rng: &mut G) -> Vec<bool> {
        (0..count).map(|_| rng.random::<f64>() < self.probability).collect()
    }
}

/// One simulated job realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome<R> {
    /// Waiting time until the collected rows first reach the threshold.
    pub completion: R,
    /// Per-worker total times; `None` for workers with zero load.
    pub finish_times: Vec<Option<R>>,
    /// Rows at the master when the threshold was crossed (whole results only).
    pub rows_collected: u64,
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<R> {
    pub mean: R,
    pub stderr: R,
    pub trials: usize,
}

/// Per-scheme summary row of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary<R> {
    pub scheme: Scheme,
    pub mean: R,
    pub stderr: R,
    pub redundancy: R,
    pub trials: usize,
    pub total_rows: u64,
    /// Average decode wall time, filled only by explicit benchmarking.
    pub decode_seconds: Option<f64>,
}

/// Cross-scheme comparison computed with common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison<R> {
    pub rows_required: u64,
    pub trials: usize,
    pub seed: u64,
    pub summaries: Vec<SchemeSummary<R>>,
}

impl<R: Real> SchemeComparison<R> {
    pub fn summary(&self, scheme: Scheme) -> Option<&SchemeSummary<R>> {
        self.summaries.iter().find(|s| s.scheme == scheme)
    }

    /// `1 − mean(HCMM)/mean(other)`, the fractional speedup of HCMM.
    pub fn speedup_over(&self, other: Scheme) -> Option<R> {
        let hcmm = self.summary(Scheme::Hcmm)?.mean;
        let base = self.summary(other)?.mean;
        Some(R::one() - hcmm / base)
    }
}

/// Waiting time until the cumulative load of finished workers reaches
/// `rows_needed`.
///
/// Workers are sorted by finish time; the returned value is the finish time at
/// which the running total of their loads first reaches the threshold. Entries
/// whose load is zero are ignored entirely (they contribute no rows and their
/// time is meaningless). Passing `rows_needed = Σ loads` makes this the
/// maximum over loaded workers, which is the uncoded waiting rule.
pub fn completion_time<R: Real>(loads: &[u64], finish_times: &[R], rows_needed: u64) -> Result<R> {
    if loads.len() != finish_times.len() {
        return Err(Error::Dimension(format!(
            "{} loads vs {} finish times",
            loads.len(),
            finish_times.len()
        )));
    }
    let pairs = loads
        .iter()
        .zip(finish_times)
        .filter(|(load, _)| **load > 0)
        .map(|(load, t)| (*load, *t));
    completion_from_pairs(pairs, rows_needed)
}

fn completion_from_pairs<R: Real>(
    pairs: impl Iterator<Item = (u64, R)>,
    rows_needed: u64,
) -> Result<R> {
    let mut pairs: Vec<(u64, R)> = pairs.collect();
    let available: u64 = pairs.iter().map(|(load, _)| load).sum();
    if rows_needed > available {
        return Err(Error::Undecodable { needed: rows_needed, available });
    }
    if rows_needed == 0 {
        return Ok(R::zero());
    }
    pairs.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite finish times"));
    let mut collected = 0u64;
    for (load, time) in pairs {
        collected += load;
        if collected >= rows_needed {
            return Ok(time);
        }
    }
    unreachable!("threshold is reachable by the available-rows check")
}

/// Samples one trial: worker run-times, straggler slowdowns, completion.
///
/// Draw order within the trial is fixed (all loaded workers' times in worker
/// order, then the straggler mask), so two calls with identically seeded
/// generators and the same loads see identical randomness even when the
/// straggler model differs.
pub fn simulate_once<R: Real, G: Rng + ?Sized>(
    cluster: &ClusterSpec<R>,
    allocation: &Allocation<R>,
    rows_needed: u64,
    straggler: &StragglerModel<R>,
    rng: &mut G,
) -> Result<TrialOutcome<R>> {
    if allocation.loads.len() != cluster.len() {
        return Err(Error::Dimension(format!(
            "allocation covers {} workers, cluster has {}",
            allocation.loads.len(),
            cluster.len()
        )));
    }
    let mut finish_times: Vec<Option<R>> = Vec::with_capacity(cluster.len());
    for (worker, load) in cluster.workers().iter().zip(&allocation.loads) {
        if *load == 0 {
            finish_times.push(None);
        } else {
            finish_times.push(Some(worker.model.sample(*load, rng)?));
        }
    }
    let mask = straggler.mask(cluster.len(), rng);
    for (time, flagged) in finish_times.iter_mut().zip(&mask) {
        if let (Some(t), true) = (time.as_mut(), *flagged) {
            *t = *t * straggler.slowdown();
        }
    }
    let completion = completion_from_pairs(
        allocation
            .loads
            .iter()
            .zip(&finish_times)
            .filter_map(|(load, t)| t.map(|t| (*load, t))),
        rows_needed,
    )?;
    let rows_collected = allocation
        .loads
        .iter()
        .zip(&finish_times)
        .filter(|(_, t)| t.is_some_and(|t| t <= completion))
        .map(|(load, _)| *load)
        .sum();
    Ok(TrialOutcome { completion, finish_times, rows_collected })
}

/// Monte Carlo mean and standard error over independent trials.
///
/// Trial `t` draws from stream `t` of `seed`, so results are identical no
/// matter how trials are scheduled.
pub fn estimate_expected_time<R: Real>(
    cluster: &ClusterSpec<R>,
    allocation: &Allocation<R>,
    rows_needed: u64,
    straggler: &StragglerModel<R>,
    trials: usize,
    seed: u64,
) -> Result<Estimate<R>> {
    if trials < 2 {
        return Err(Error::invalid("need at least 2 trials for a standard error"));
    }
    // Welford's running mean/variance.
    let mut mean = R::zero();
    let mut m2 = R::zero();
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let outcome = simulate_once(cluster, allocation, rows_needed, straggler, &mut rng)?;
        let x = outcome.completion;
        let count = R::of((trial + 1) as f64);
        let delta = x - mean;
        mean = mean + delta / count;
        m2 = m2 + delta * (x - mean);
    }
    let n = R::of(trials as f64);
    let variance = m2 / (n - R::one());
    let stderr = (variance.max(R::zero()) / n).sqrt();
    Ok(Estimate { mean, stderr, trials })
}

/// Expected rows at the master by time `t` for (possibly fractional) loads:
/// `Σ ℓ_i (1 − exp(−((μ_i/ℓ_i)(t − a_i ℓ_i))^{α_i}))` over workers whose shift
/// point lies at or before `t`; zero loads contribute nothing.
pub fn expected_aggregate_return<R: Real>(
    cluster: &ClusterSpec<R>,
    loads: &[R],
    t: R,
) -> Result<R> {
    if loads.len() != cluster.len() {
        return Err(Error::Dimension(format!(
            "{} loads vs {} workers",
            loads.len(),
            cluster.len()
        )));
    }
    if !(t >= R::zero()) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let mut total = R::zero();
    for (worker, load) in cluster.workers().iter().zip(loads) {
        let load = *load;
        if load <= R::zero() {
            continue;
        }
        let model = &worker.model;
        let z = model.straggling() / load * (t - model.shift() * load);
        if z <= R::zero() {
            continue;
        }
        total = total + load * (R::one() - (-z.powf(model.shape())).exp());
    }
    Ok(total)
}

/// Monte Carlo estimate of `Pr[X(t) < r]`: the fraction of trials in which
/// the rows collected by time `t` fall short of `r`.
pub fn shortfall_probability<R: Real>(
    cluster: &ClusterSpec<R>,
    loads: &[u64],
    t: R,
    rows_needed: u64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("need at least 1 trial"));
    }
    if loads.len() != cluster.len() {
        return Err(Error::Dimension(format!(
            "{} loads vs {} workers",
            loads.len(),
            cluster.len()
        )));
    }
    let mut short = 0usize;
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let mut collected = 0u64;
        for (worker, load) in cluster.workers().iter().zip(loads) {
            if *load == 0 {
                continue;
            }
            let time = worker.model.sample(*load, &mut rng)?;
            if time <= t {
                collected += *load;
            }
        }
        if collected < rows_needed {
            short += 1;
        }
    }
    Ok(short as f64 / trials as f64)
}

/// Builds all four allocations and simulates them with common random numbers.
///
/// With `lt_overhead = Some(ε)` the coded schemes (HCMM, Uniform Coded) are
/// sized and stopped at `ceil(r(1+ε))` rows, the LT waiting rule; with `None`
/// they use the random-linear-coding rule of exactly `r` rows. Uncoded schemes
/// always wait for every worker. The uniform-coded redundancy search runs on a
/// seed derived from `seed` so it cannot overlap the comparison's own trial
/// streams.
pub fn compare_schemes<R: Real>(
    cluster: &ClusterSpec<R>,
    rows: u64,
    lt_overhead: Option<f64>,
    straggler: &StragglerModel<R>,
    trials: usize,
    seed: u64,
) -> Result<SchemeComparison<R>> {
    if trials < 2 {
        return Err(Error::invalid("need at least 2 trials for a standard error"));
    }
    let coded_target = match lt_overhead {
        Some(eps) if eps < 0.0 => {
            return Err(Error::invalid(format!("LT overhead must be nonnegative, got {eps}")))
        }
        Some(eps) => (rows as f64 * (1.0 + eps)).ceil() as u64,
        None => rows,
    };
    let allocations = vec![
        hcmm_allocate(cluster, coded_target)?,
        uniform_uncoded(cluster, rows)?,
        load_balanced_uncoded(cluster, rows)?,
        uniform_coded(cluster, coded_target, trials, derive_seed(seed, 1))?,
    ];
    let mut summaries = Vec::with_capacity(allocations.len());
    for allocation in &allocations {
        let estimate = estimate_expected_time(
            cluster,
            allocation,
            allocation.rows_to_collect(),
            straggler,
            trials,
            seed,
        )?;
        summaries.push(SchemeSummary {
            scheme: allocation.scheme,
            mean: estimate.mean,
            stderr: estimate.stderr,
            redundancy: allocation.redundancy(),
            trials,
            total_rows: allocation.total_rows(),
            decode_seconds: None,
        });
    }
    Ok(SchemeComparison { rows_required: rows, trials, seed, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::RuntimeModel;
    use proptest::prelude::*;

    fn exp_model(a: f64, mu: f64) -> RuntimeModel<f64> {
        RuntimeModel::exponential(a, mu).unwrap()
    }

    fn uniform_alloc(loads: Vec<u64>, rows: u64, scheme: Scheme) -> Allocation<f64> {
        Allocation { loads, nominal_time: 0.0, scheme, rows_required: rows }
    }

    fn harmonic(n: usize) -> f64 {
        (1..=n).map(|i| 1.0 / i as f64).sum()
    }

    #[test]
    fn completion_examples() {
        assert_eq!(completion_time(&[3, 2], &[5.0, 2.0], 4).unwrap(), 5.0);
        assert_eq!(completion_time(&[3, 2], &[5.0, 2.0], 2).unwrap(), 2.0);
        assert_eq!(completion_time(&[1, 1, 1], &[1.0, 2.0, 3.0], 3).unwrap(), 3.0);
    }

    #[test]
    fn completion_rejects_unreachable_threshold() {
        assert!(matches!(
            completion_time(&[3, 2], &[5.0, 2.0], 6),
            Err(Error::Undecodable { needed: 6, available: 5 })
        ));
    }

    #[test]
    fn completion_ignores_zero_load_workers() {
        // The zero-load worker's "time" must not matter.
        let t = completion_time(&[0, 3], &[f64::INFINITY, 2.0], 3).unwrap();
        assert_eq!(t, 2.0);
    }

    #[test]
    fn straggler_model_validation_and_mask() {
        assert!(StragglerModel::<f64>::new(-0.1, 4.0).is_err());
        assert!(StragglerModel::<f64>::new(0.5, 0.9).is_err());
        let mut rng = crate::rng::substream(5, 0);
        let all = StragglerModel::<f64>::new(1.0, 4.0).unwrap().mask(100, &mut rng);
        assert!(all.iter().all(|&b| b));
        let mut rng = crate::rng::substream(5, 0);
        let none = StragglerModel::<f64>::new(0.0, 4.0).unwrap().mask(100, &mut rng);
        assert!(none.iter().all(|&b| !b));
    }

    #[test]
    fn certain_stragglers_scale_completion_exactly() {
        // With common seeds, p = 1 and slowdown 4 multiplies the p = 0
        // completion by exactly 4; slowdown 1 leaves it untouched.
        let cluster = ClusterSpec::from_groups(&[
            (3, exp_model(1.0, 1.0)),
            (2, exp_model(4.0, 0.5)),
        ])
        .unwrap();
        let alloc = uniform_alloc(vec![20; 5], 60, Scheme::UniformCoded);
        let plain = simulate_once(
            &cluster,
            &alloc,
            60,
            &StragglerModel::none(),
            &mut crate::rng::substream(9, 0),
        )
        .unwrap();
        let slowed = simulate_once(
            &cluster,
            &alloc,
            60,
            &StragglerModel::new(1.0, 4.0).unwrap(),
            &mut crate::rng::substream(9, 0),
        )
        .unwrap();
        assert!((slowed.completion - 4.0 * plain.completion).abs() < 1e-12);
        let unit = simulate_once(
            &cluster,
            &alloc,
            60,
            &StragglerModel::new(0.5, 1.0).unwrap(),
            &mut crate::rng::substream(9, 0),
        )
        .unwrap();
        assert_eq!(unit.completion, plain.completion);
    }

    #[test]
    fn estimator_is_seed_deterministic() {
        let cluster = ClusterSpec::from_groups(&[(4, exp_model(1.0, 1.0))]).unwrap();
        let alloc = uniform_alloc(vec![25; 4], 100, Scheme::UniformUncoded);
        let a = estimate_expected_time(&cluster, &alloc, 100, &StragglerModel::none(), 500, 7)
            .unwrap();
        let b = estimate_expected_time(&cluster, &alloc, 100, &StragglerModel::none(), 500, 7)
            .unwrap();
        assert_eq!(a, b);
        assert!(estimate_expected_time(&cluster, &alloc, 100, &StragglerModel::none(), 1, 7)
            .is_err());
    }

    #[test]
    fn uncoded_mean_matches_two_worker_closed_form() {
        // Two (1,1) workers, 1 row each: E[max] = a + H_2/mu = 1 + 1.5 = 2.5.
        let cluster = ClusterSpec::from_groups(&[(2, exp_model(1.0, 1.0))]).unwrap();
        let alloc = uniform_alloc(vec![1, 1], 2, Scheme::UniformUncoded);
        let est = estimate_expected_time(&cluster, &alloc, 2, &StragglerModel::none(), 20_000, 3)
            .unwrap();
        assert!(
            (est.mean - 2.5).abs() < 3.0 * est.stderr,
            "mean {} stderr {}",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn uncoded_mean_matches_harmonic_closed_form() {
        // n identical workers, r/n rows each: E[max] = a r/n + r H_n/(n mu).
        for &(n, a, mu, r) in &[(5usize, 1.0, 1.0, 100u64), (10, 2.0, 0.5, 400)] {
            let cluster = ClusterSpec::from_groups(&[(n, exp_model(a, mu))]).unwrap();
            let per = r / n as u64;
            let alloc = uniform_alloc(vec![per; n], r, Scheme::UniformUncoded);
            let est =
                estimate_expected_time(&cluster, &alloc, r, &StragglerModel::none(), 8000, 17)
                    .unwrap();
            let expected = a * r as f64 / n as f64 + r as f64 * harmonic(n) / (n as f64 * mu);
            assert!(
                (est.mean - expected).abs() < 3.0 * est.stderr,
                "n={n}: mean {} vs {expected} (stderr {})",
                est.mean,
                est.stderr
            );
        }
    }

    #[test]
    fn aggregate_return_limits() {
        let cluster = ClusterSpec::from_groups(&[
            (2, exp_model(1.0, 1.0)),
            (1, exp_model(2.0, 0.5)),
        ])
        .unwrap();
        let loads = [10.0, 10.0, 5.0];
        // at the largest shift point every term is still zero
        assert_eq!(expected_aggregate_return(&cluster, &loads, 10.0).unwrap(), 0.0);
        // far in the future everything returned
        let all = expected_aggregate_return(&cluster, &loads, 1e9).unwrap();
        assert!((all - 25.0).abs() < 1e-6);
        // zero loads contribute nothing and do not blow up
        let with_zero = expected_aggregate_return(&cluster, &[10.0, 0.0, 5.0], 1e9).unwrap();
        assert!((with_zero - 15.0).abs() < 1e-6);
    }

    #[test]
    fn shortfall_probability_limits() {
        let cluster = ClusterSpec::from_groups(&[(4, exp_model(1.0, 1.0))]).unwrap();
        let loads = [25u64; 4];
        // t below every shift point: nothing returned yet
        assert_eq!(shortfall_probability(&cluster, &loads, 10.0, 100, 200, 5).unwrap(), 1.0);
        assert_eq!(shortfall_probability(&cluster, &loads, 1e9, 100, 200, 5).unwrap(), 0.0);
    }

    #[test]
    fn shortfall_at_padded_deadline_shrinks_with_cluster_size() {
        // Concentration: with HCMM loads and a 20%-padded deadline, the
        // probability of collecting fewer than r rows decays as the cluster
        // grows. Checked at n = 20, 50, 100 with fixed seeds.
        use crate::allocator::hcmm_fractional_loads;
        let mut shortfalls = Vec::new();
        for n in [20usize, 50, 100] {
            let cluster = ClusterSpec::from_groups(&[
                (n / 2, exp_model(1.0, 1.0)),
                (n / 2, exp_model(4.0, 0.5)),
            ])
            .unwrap();
            let r = (100 * n) as u64;
            let (fractional, tau) = hcmm_fractional_loads(&cluster, r).unwrap();
            let loads: Vec<u64> = fractional.iter().map(|l| l.ceil() as u64).collect();
            let p = shortfall_probability(&cluster, &loads, 1.2 * tau, r, 4000, 23).unwrap();
            shortfalls.push(p);
        }
        assert!(
            shortfalls[0] > shortfalls[1] && shortfalls[1] >= shortfalls[2],
            "{shortfalls:?}"
        );
        assert!(shortfalls[2] < 0.05, "{shortfalls:?}");
    }

    #[test]
    fn comparison_is_deterministic_and_uses_common_randomness() {
        let cluster = ClusterSpec::from_groups(&[
            (4, exp_model(1.0, 1.0)),
            (4, exp_model(4.0, 0.5)),
        ])
        .unwrap();
        let none = StragglerModel::none();
        let a = compare_schemes(&cluster, 200, None, &none, 300, 42).unwrap();
        let b = compare_schemes(&cluster, 200, None, &none, 300, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summaries.len(), 4);
        // identical workers: load-balanced degenerates to uniform-uncoded
        let homogeneous = ClusterSpec::from_groups(&[(6, exp_model(1.0, 1.0))]).unwrap();
        let c = compare_schemes(&homogeneous, 120, None, &none, 300, 42).unwrap();
        let uu = c.summary(Scheme::UniformUncoded).unwrap();
        let lb = c.summary(Scheme::LoadBalancedUncoded).unwrap();
        assert_eq!(uu.mean, lb.mean);
    }

    #[test]
    fn lt_mode_targets_the_inflated_row_count() {
        let cluster = ClusterSpec::from_groups(&[(4, exp_model(1.0, 1.0))]).unwrap();
        let cmp =
            compare_schemes(&cluster, 100, Some(0.13), &StragglerModel::none(), 100, 1).unwrap();
        let hcmm = cmp.summary(Scheme::Hcmm).unwrap();
        // HCMM sized for ceil(100 * 1.13) = 113 rows
        assert!(hcmm.total_rows >= 113);
        let uu = cmp.summary(Scheme::UniformUncoded).unwrap();
        assert_eq!(uu.total_rows, 100);
    }

    proptest! {
        // completion_time is permutation invariant, nondecreasing in the
        // threshold, and never increases when loads grow pointwise.
        #[test]
        fn completion_properties(
            pairs in proptest::collection::vec((1u64..30, 0.0f64..100.0), 2..12),
            extra in proptest::collection::vec(0u64..10, 2..12),
            perm_seed in 0u64..1000,
        ) {
            let loads: Vec<u64> = pairs.iter().map(|p| p.0).collect();
            let times: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let total: u64 = loads.iter().sum();
            let r1 = total / 2 + 1;
            let t_mid = completion_time(&loads, &times, r1).unwrap();
            let t_all = completion_time(&loads, &times, total).unwrap();
            prop_assert!(t_mid <= t_all);

            // permutation invariance
            let mut order: Vec<usize> = (0..loads.len()).collect();
            let mut rng = crate::rng::substream(perm_seed, 0);
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let ploads: Vec<u64> = order.iter().map(|&i| loads[i]).collect();
            let ptimes: Vec<f64> = order.iter().map(|&i| times[i]).collect();
            prop_assert_eq!(completion_time(&ploads, &ptimes, r1).unwrap(), t_mid);

            // pointwise larger loads with the same threshold finish no later
            let bigger: Vec<u64> = loads
                .iter()
                .zip(extra.iter().chain(std::iter::repeat(&0)))
                .map(|(l, e)| l + e)
                .collect();
            let t_big = completion_time(&bigger, &times, r1).unwrap();
            prop_assert!(t_big <= t_mid);
        }
    }
}
