//! Cost modeling and budget-constrained machine selection.
//!
//! Machines of class `k` cost `κ μ_k^γ` per second. When every class shares
//! the product `ξ = a_k μ_k`, the expected cost of running HCMM on counts
//! `(n_1, ..., n_K)` collapses to the closed form
//! `κ r x_ξ (Σ n_k μ_k^γ) / (Σ n_k μ_k)` where `x_ξ > 1` solves
//! `e^{x − ξ − 1} = x`; the expected completion time is
//! `r x_ξ / (Σ n_k μ_k)`. The heuristic search starts from the full machine
//! pool and repeatedly removes one machine of the fastest class still in use
//! until the cost fits the budget.

use crate::error::{Error, Result};
use crate::roots::{bisect, expand_bracket};
use crate::scalar::Real;

/// One machine class: run-time parameters plus how many machines exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineClass<R> {
    /// Shift `a_k`, seconds per row.
    pub shift: R,
    /// Straggling parameter `μ_k`, rows per second.
    pub straggling: R,
    /// Machines of this class available, `N_k`.
    pub available: u32,
}

/// Pricing law `c = κ μ^γ` per second of machine use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel<R> {
    /// κ, currency per (rows/s)^γ per second.
    pub coefficient: R,
    /// γ ≥ 1, convexity of price in machine speed.
    pub exponent: R,
}

impl<R: Real> CostModel<R> {
    pub fn new(coefficient: R, exponent: R) -> Result<Self> {
        if !(coefficient > R::zero()) {
            return Err(Error::invalid(format!("kappa must be positive, got {coefficient}")));
        }
        if !(exponent >= R::one()) {
            return Err(Error::invalid(format!("gamma must be at least 1, got {exponent}")));
        }
        Ok(CostModel { coefficient, exponent })
    }
}

/// Cost per second of one machine with straggling parameter `mu`.
pub fn machine_cost_rate<R: Real>(mu: R, cost: &CostModel<R>) -> R {
    cost.coefficient * mu.powf(cost.exponent)
}

/// A machine-selection problem: classes, pricing, target rows and budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetScenario<R> {
    classes: Vec<MachineClass<R>>,
    pub cost: CostModel<R>,
    /// Rows the task must compute.
    pub rows: u64,
    /// Budget `C` in currency units.
    pub budget: R,
    /// The common product `ξ = a_k μ_k`.
    xi: R,
}

const XI_TOLERANCE: f64 = 1e-9;

impl<R: Real> BudgetScenario<R> {
    /// Validates and orders the classes by `μ` ascending (stable for ties).
    ///
    /// All classes must share the product `a_k μ_k` within `1e-9` relative
    /// tolerance; the closed-form cost depends on a single `x_ξ`.
    pub fn new(
        mut classes: Vec<MachineClass<R>>,
        cost: CostModel<R>,
        rows: u64,
        budget: R,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::invalid("need at least one machine class"));
        }
        if rows == 0 {
            return Err(Error::invalid("target row count must be at least 1"));
        }
        if !(budget > R::zero()) {
            return Err(Error::invalid(format!("budget must be positive, got {budget}")));
        }
        for class in &classes {
            if !(class.shift > R::zero()) || !(class.straggling > R::zero()) {
                return Err(Error::invalid(
                    "machine class parameters must be positive".to_string(),
                ));
            }
        }
        classes.sort_by(|a, b| a.straggling.partial_cmp(&b.straggling).expect("finite mu"));
        let xi = classes[0].shift * classes[0].straggling;
        for class in &classes[1..] {
            let product = class.shift * class.straggling;
            let rel = ((product - xi) / xi).abs();
            if rel > R::of(XI_TOLERANCE) {
                return Err(Error::invalid(format!(
                    "classes must share a common shift-straggling product: {xi} vs {product}"
                )));
            }
        }
        Ok(BudgetScenario { classes, cost, rows, budget, xi })
    }

    pub fn classes(&self) -> &[MachineClass<R>] {
        &self.classes
    }

    pub fn xi(&self) -> R {
        self.xi
    }

    /// Full availability vector `(N_1, ..., N_K)`.
    pub fn full_counts(&self) -> Vec<u32> {
        self.classes.iter().map(|c| c.available).collect()
    }
}

/// Root `x > 1` of `e^{x − ξ − 1} = x`, solved in the stable log form
/// `x − 1 − ξ − ln x = 0`. Residual below `1e-10`.
pub fn solve_cost_factor<R: Real>(xi: R) -> Result<R> {
    if !(xi > R::zero()) {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    let f = |x: R| x - R::one() - xi - x.ln();
    let lo = R::one() + R::of(f64::EPSILON);
    let (lo, hi) = expand_bracket(lo, R::one() + xi, f)?;
    bisect(lo, hi, R::of(1e-13) * (R::one() + xi), f)
}

fn validate_counts<R: Real>(counts: &[u32], scenario: &BudgetScenario<R>) -> Result<()> {
    if counts.len() != scenario.classes.len() {
        return Err(Error::Dimension(format!(
            "{} counts vs {} classes",
            counts.len(),
            scenario.classes.len()
        )));
    }
    if counts.iter().all(|&n| n == 0) {
        return Err(Error::invalid("at least one machine must be used"));
    }
    Ok(())
}

/// Closed-form expected cost of running HCMM on `counts` machines per class:
/// `κ r x_ξ (Σ n_k μ_k^γ) / (Σ n_k μ_k)`.
pub fn hcmm_expected_cost<R: Real>(counts: &[u32], scenario: &BudgetScenario<R>) -> Result<R> {
    validate_counts(counts, scenario)?;
    let x = solve_cost_factor(scenario.xi)?;
    let mut priced = R::zero();
    let mut speed = R::zero();
    for (class, &n) in scenario.classes.iter().zip(counts) {
        let n = R::of(n as f64);
        priced = priced + n * class.straggling.powf(scenario.cost.exponent);
        speed = speed + n * class.straggling;
    }
    Ok(scenario.cost.coefficient * R::of_count(scenario.rows) * x * priced / speed)
}

/// Expected HCMM completion time on `counts` machines:
/// `r x_ξ / (Σ n_k μ_k)`.
pub fn expected_time<R: Real>(counts: &[u32], scenario: &BudgetScenario<R>) -> Result<R> {
    validate_counts(counts, scenario)?;
    let x = solve_cost_factor(scenario.xi)?;
    let speed = scenario
        .classes
        .iter()
        .zip(counts)
        .fold(R::zero(), |acc, (class, &n)| acc + R::of(n as f64) * class.straggling);
    Ok(R::of_count(scenario.rows) * x / speed)
}

/// `(C_min, C_max)`: the expected cost using only the slowest machines and
/// only the fastest machines, `κ r x_ξ μ^{γ−1}` at `μ_1` and `μ_K`.
pub fn cost_bounds<R: Real>(scenario: &BudgetScenario<R>) -> Result<(R, R)> {
    let x = solve_cost_factor(scenario.xi)?;
    let base = scenario.cost.coefficient * R::of_count(scenario.rows) * x;
    let gamma_less_one = scenario.cost.exponent - R::one();
    let slowest = scenario.classes.first().expect("non-empty").straggling;
    let fastest = scenario.classes.last().expect("non-empty").straggling;
    Ok((base * slowest.powf(gamma_less_one), base * fastest.powf(gamma_less_one)))
}

/// One evaluated point on the heuristic search path.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep<R> {
    pub counts: Vec<u32>,
    pub cost: R,
}

/// Outcome of the heuristic search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<R> {
    /// First counts whose cost fits the budget; `None` when even the
    /// slowest-only configurations exceed it.
    pub counts: Option<Vec<u32>>,
    pub cost: Option<R>,
    pub expected_time: Option<R>,
    /// Cost evaluations performed, the initial full-pool evaluation included.
    pub iterations: usize,
    pub feasible: bool,
    /// Every evaluated point, in visit order.
    pub path: Vec<SearchStep<R>>,
}

/// Greedy machine-selection search: start from all available machines and,
/// while the expected cost exceeds the budget, drop one machine of the
/// fastest class still in use. Returns the first configuration that fits,
/// or an infeasible result once the pool is exhausted (budget below `C_min`).
pub fn heuristic_search<R: Real>(scenario: &BudgetScenario<R>) -> Result<SearchResult<R>> {
    let mut counts = scenario.full_counts();
    let mut path = Vec::new();
    loop {
        let cost = hcmm_expected_cost(&counts, scenario)?;
        path.push(SearchStep { counts: counts.clone(), cost });
        if cost <= scenario.budget {
            let time = expected_time(&counts, scenario)?;
            return Ok(SearchResult {
                counts: Some(counts),
                cost: Some(cost),
                expected_time: Some(time),
                iterations: path.len(),
                feasible: true,
                path,
            });
        }
        match counts.iter().rposition(|&n| n > 0) {
            Some(fastest_in_use) => {
                counts[fastest_in_use] -= 1;
                if counts.iter().all(|&n| n == 0) {
                    return Ok(SearchResult {
                        counts: None,
                        cost: None,
                        expected_time: None,
                        iterations: path.len(),
                        feasible: false,
                        path,
                    });
                }
            }
            None => unreachable!("loop exits before counts reach all-zero"),
        }
    }
}
