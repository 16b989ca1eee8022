//! Canned scenarios and the TOML config schema.
//!
//! A scenario bundles a cluster description (explicit `(count, a, mu[, alpha])`
//! groups, or parameters drawn from value sets with a recorded seed), the
//! target row count, coding/straggler settings, trial counts, and optionally a
//! budget section that reinterprets the cluster groups as machine classes.
//! The builtin registry carries the six simulation studies (three exponential,
//! three Weibull) and the two budget examples.
//!
//! # Config format
//!
//! ```toml
//! name = "exp-scenario-1"
//! distribution = "exponential"        # or "weibull"
//! rows = 10000
//! trials = 5000
//!
//! [[cluster.groups]]                  # explicit groups...
//! count = 50
//! shift = 1.0
//! straggling = 1.0
//! # shape = 1.2                       # weibull only
//!
//! [cluster.random]                    # ...or random mode (not both)
//! seed = 3
//! count = 100
//! shift_choices = [1.0, 4.0, 12.0]
//! straggling_choices = [0.5, 2.0, 0.25]
//! # shape_choices = [0.9, 1.2, 1.5]   # weibull only
//!
//! [coding]                            # optional; defaults to RLC
//! mode = "lt"                         # or "rlc"
//! tuning = 0.03                       # LT only: c
//! failure_bound = 0.1                 # LT only: delta
//! overhead = 0.13                     # LT only: epsilon
//!
//! [straggler]                         # optional; defaults to none
//! probability = 0.5
//! slowdown = 4.0
//!
//! [budget]                            # optional; groups become classes
//! kappa = 1.0
//! gamma = 2.0
//! budget = 860.0
//! ```

use serde::{Deserialize, Serialize};

use crate::budget::{BudgetScenario, CostModel, MachineClass};
use crate::coding::{robust_soliton, LtCodeSpec};
use crate::error::{Error, Result};
use crate::models::{ClusterSpec, RuntimeModel};
use crate::rng::substream;
use crate::simulator::StragglerModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Exponential,
    Weibull,
}

/// One homogeneous worker group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub count: usize,
    pub shift: f64,
    pub straggling: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
}

/// Random-heterogeneity cluster: each worker draws its parameters uniformly
/// and independently from the value sets, using the recorded seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomClusterConfig {
    pub seed: u64,
    pub count: usize,
    pub shift_choices: Vec<f64>,
    pub straggling_choices: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_choices: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomClusterConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodingMode {
    Rlc,
    Lt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodingConfig {
    pub mode: CodingMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overhead: Option<f64>,
}

impl Default for CodingConfig {
    fn default() -> Self {
        CodingConfig { mode: CodingMode::Rlc, tuning: None, failure_bound: None, overhead: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StragglerConfig {
    pub probability: f64,
    pub slowdown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub kappa: f64,
    pub gamma: f64,
    pub budget: f64,
}

/// A full scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub distribution: Distribution,
    pub rows: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub cluster: ClusterConfig,
    #[serde(default, skip_serializing_if = "is_default_coding")]
    pub coding: CodingConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub straggler: Option<StragglerConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_trials() -> usize {
    5000
}

fn is_default_coding(c: &CodingConfig) -> bool {
    *c == CodingConfig::default()
}

impl ScenarioConfig {
    /// Parses and validates a TOML scenario document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a scenario file.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Validates every field, returning all problems at once with field paths.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.rows == 0 {
            errors.push("rows: must be at least 1".to_string());
        }
        if self.trials == 0 {
            errors.push("trials: must be at least 1".to_string());
        }
        let weibull = self.distribution == Distribution::Weibull;

        let has_groups = !self.cluster.groups.is_empty();
        let has_random = self.cluster.random.is_some();
        if has_groups == has_random {
            errors.push(
                "cluster: exactly one of cluster.groups and cluster.random is required"
                    .to_string(),
            );
        }
        for (i, group) in self.cluster.groups.iter().enumerate() {
            let at = format!("cluster.groups[{i}]");
            if group.count == 0 {
                errors.push(format!("{at}.count: must be at least 1"));
            }
            if !(group.shift > 0.0) {
                errors.push(format!("{at}.shift: must be positive"));
            }
            if !(group.straggling > 0.0) {
                errors.push(format!("{at}.straggling: must be positive"));
            }
            match (weibull, group.shape) {
                (false, Some(_)) => errors.push(format!(
                    "{at}.shape: not allowed on an exponential scenario"
                )),
                (true, None) => errors.push(format!(
                    "{at}.shape: required for a weibull scenario"
                )),
                (true, Some(shape)) if !(shape > 0.0) => {
                    errors.push(format!("{at}.shape: must be positive"))
                }
                _ => {}
            }
        }
        if let Some(random) = &self.cluster.random {
            let at = "cluster.random";
            if random.count == 0 {
                errors.push(format!("{at}.count: must be at least 1"));
            }
            for (field, values) in [
                ("shift_choices", &random.shift_choices),
                ("straggling_choices", &random.straggling_choices),
            ] {
                if values.is_empty() {
                    errors.push(format!("{at}.{field}: must not be empty"));
                }
                if values.iter().any(|v| !(*v > 0.0)) {
                    errors.push(format!("{at}.{field}: entries must be positive"));
                }
            }
            match (weibull, &random.shape_choices) {
                (false, Some(_)) => errors.push(format!(
                    "{at}.shape_choices: not allowed on an exponential scenario"
                )),
                (true, None) => errors.push(format!(
                    "{at}.shape_choices: required for a weibull scenario"
                )),
                (true, Some(values))
                    if (values.is_empty() || values.iter().any(|v| !(*v > 0.0))) => {
                        errors.push(format!("{at}.shape_choices: entries must be positive"));
                    }
                _ => {}
            }
        }
        match self.coding.mode {
            CodingMode::Rlc => {
                for (field, value) in [
                    ("tuning", self.coding.tuning),
                    ("failure_bound", self.coding.failure_bound),
                    ("overhead", self.coding.overhead),
                ] {
                    if value.is_some() {
                        errors.push(format!("coding.{field}: only valid in LT mode"));
                    }
                }
            }
            CodingMode::Lt => {
                match self.coding.tuning {
                    Some(c) if c > 0.0 => {}
                    _ => errors.push("coding.tuning: LT mode needs c > 0".to_string()),
                }
                match self.coding.failure_bound {
                    Some(d) if d > 0.0 && d < 1.0 => {}
                    _ => errors
                        .push("coding.failure_bound: LT mode needs delta in (0, 1)".to_string()),
                }
                match self.coding.overhead {
                    Some(e) if e >= 0.0 => {}
                    _ => errors.push("coding.overhead: LT mode needs epsilon >= 0".to_string()),
                }
            }
        }
        if let Some(straggler) = &self.straggler {
            if !(0.0..=1.0).contains(&straggler.probability) {
                errors.push("straggler.probability: must lie in [0, 1]".to_string());
            }
            if !(straggler.slowdown >= 1.0) {
                errors.push("straggler.slowdown: must be at least 1".to_string());
            }
        }
        if let Some(budget) = &self.budget {
            if !(budget.kappa > 0.0) {
                errors.push("budget.kappa: must be positive".to_string());
            }
            if !(budget.gamma >= 1.0) {
                errors.push("budget.gamma: must be at least 1".to_string());
            }
            if !(budget.budget > 0.0) {
                errors.push("budget.budget: must be positive".to_string());
            }
            if self.cluster.groups.is_empty() {
                errors.push(
                    "budget: requires explicit cluster.groups as machine classes".to_string(),
                );
            }
            if weibull {
                errors.push("budget: only defined for exponential scenarios".to_string());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Materializes the cluster. Random mode draws, for each worker in order,
    /// one uniform index per parameter set (shift, straggling, then shape)
    /// from stream 0 of the recorded seed.
    pub fn resolve_cluster(&self) -> Result<ClusterSpec<f64>> {
        let weibull = self.distribution == Distribution::Weibull;
        let mut models = Vec::new();
        if let Some(random) = &self.cluster.random {
            let mut rng = substream(random.seed, 0);
            for _ in 0..random.count {
                let shift = pick_uniform(&random.shift_choices, &mut rng);
                let straggling = pick_uniform(&random.straggling_choices, &mut rng);
                let model = if weibull {
                    let shapes = random
                        .shape_choices
                        .as_ref()
                        .expect("validated: weibull random mode has shapes");
                    RuntimeModel::weibull(shift, straggling, pick_uniform(shapes, &mut rng))?
                } else {
                    RuntimeModel::exponential(shift, straggling)?
                };
                models.push(model);
            }
        } else {
            for group in &self.cluster.groups {
                let model = if weibull {
                    RuntimeModel::weibull(
                        group.shift,
                        group.straggling,
                        group.shape.expect("validated: weibull groups have shapes"),
                    )?
                } else {
                    RuntimeModel::exponential(group.shift, group.straggling)?
                };
                models.extend(std::iter::repeat_n(model, group.count));
            }
        }
        ClusterSpec::new(models)
    }

    /// Materializes the budget scenario, if the config has a budget section.
    pub fn resolve_budget(&self) -> Result<Option<BudgetScenario<f64>>> {
        let Some(budget) = &self.budget else {
            return Ok(None);
        };
        let classes = self
            .cluster
            .groups
            .iter()
            .map(|g| MachineClass {
                shift: g.shift,
                straggling: g.straggling,
                available: g.count as u32,
            })
            .collect();
        let cost = CostModel::new(budget.kappa, budget.gamma)?;
        Ok(Some(BudgetScenario::new(classes, cost, self.rows, budget.budget)?))
    }

    /// The straggler model; no stragglers when the section is absent.
    pub fn resolve_straggler(&self) -> Result<StragglerModel<f64>> {
        match &self.straggler {
            Some(s) => StragglerModel::new(s.probability, s.slowdown),
            None => Ok(StragglerModel::none()),
        }
    }

    /// LT code spec sized for this scenario's row count, when in LT mode.
    pub fn resolve_lt(&self) -> Result<Option<LtCodeSpec>> {
        match self.coding.mode {
            CodingMode::Rlc => Ok(None),
            CodingMode::Lt => {
                let spec = robust_soliton(
                    self.rows as usize,
                    self.coding.tuning.expect("validated"),
                    self.coding.failure_bound.expect("validated"),
                )?
                .with_overhead(self.coding.overhead.expect("validated"))?;
                Ok(Some(spec))
            }
        }
    }

    pub fn lt_overhead(&self) -> Option<f64> {
        match self.coding.mode {
            CodingMode::Rlc => None,
            CodingMode::Lt => self.coding.overhead,
        }
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 8] = [
    "exp-scenario-1",
    "exp-scenario-2",
    "exp-scenario-3",
    "weibull-scenario-1",
    "weibull-scenario-2",
    "weibull-scenario-3",
    "budget-1",
    "budget-2",
];

/// Returns a builtin scenario by name.
///
/// The six simulation scenarios use 100 workers and 10000 rows; the random
/// ones record their cluster seed. The two budget scenarios use r = 100 with
/// the quadratic cost model.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let config = match name {
        "exp-scenario-1" => simulation_scenario(
            name,
            Distribution::Exponential,
            vec![group(50, 1.0, 1.0, None), group(50, 4.0, 0.5, None)],
        ),
        "exp-scenario-2" => simulation_scenario(
            name,
            Distribution::Exponential,
            vec![
                group(25, 1.0, 0.5, None),
                group(25, 4.0, 2.0, None),
                group(50, 12.0, 0.25, None),
            ],
        ),
        "exp-scenario-3" => random_scenario(name, Distribution::Exponential, None),
        "weibull-scenario-1" => simulation_scenario(
            name,
            Distribution::Weibull,
            vec![group(50, 1.0, 1.0, Some(1.2)), group(50, 4.0, 0.5, Some(0.8))],
        ),
        "weibull-scenario-2" => simulation_scenario(
            name,
            Distribution::Weibull,
            vec![
                group(25, 1.0, 0.5, Some(0.9)),
                group(25, 4.0, 2.0, Some(1.2)),
                group(50, 12.0, 0.25, Some(1.5)),
            ],
        ),
        "weibull-scenario-3" => {
            random_scenario(name, Distribution::Weibull, Some(vec![0.9, 1.2, 1.5]))
        }
        "budget-1" => budget_scenario(
            name,
            vec![group(10, 0.5, 2.0, None), group(10, 0.25, 4.0, None)],
            860.0,
        ),
        "budget-2" => budget_scenario(
            name,
            vec![group(10, 1.0, 1.0, None), group(10, 0.5, 2.0, None), group(10, 0.125, 8.0, None)],
            475.0,
        ),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    config.validate()?;
    Ok(config)
}

fn pick_uniform(values: &[f64], rng: &mut crate::rng::Substream) -> f64 {
    use rand::Rng;
    values[rng.random_range(0..values.len())]
}

fn group(count: usize, shift: f64, straggling: f64, shape: Option<f64>) -> GroupConfig {
    GroupConfig { count, shift, straggling, shape }
}

fn simulation_scenario(
    name: &str,
    distribution: Distribution,
    groups: Vec<GroupConfig>,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        distribution,
        rows: 10_000,
        trials: 5000,
        cluster: ClusterConfig { groups, random: None },
        coding: CodingConfig::default(),
        straggler: None,
        budget: None,
        output: None,
    }
}

/// Cluster seed for the random-heterogeneity builtins; recorded here so the
/// sampled cluster is reproducible.
const RANDOM_CLUSTER_SEED: u64 = 1;

fn random_scenario(
    name: &str,
    distribution: Distribution,
    shape_choices: Option<Vec<f64>>,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        distribution,
        rows: 10_000,
        trials: 5000,
        cluster: ClusterConfig {
            groups: Vec::new(),
            random: Some(RandomClusterConfig {
                seed: RANDOM_CLUSTER_SEED,
                count: 100,
                shift_choices: vec![1.0, 4.0, 12.0],
                straggling_choices: vec![0.5, 2.0, 0.25],
                shape_choices,
            }),
        },
        coding: CodingConfig::default(),
        straggler: None,
        budget: None,
        output: None,
    }
}

fn budget_scenario(name: &str, groups: Vec<GroupConfig>, budget: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        distribution: Distribution::Exponential,
        rows: 100,
        trials: 5000,
        cluster: ClusterConfig { groups, random: None },
        coding: CodingConfig::default(),
        straggler: None,
        budget: Some(BudgetConfig { kappa: 1.0, gamma: 2.0, budget }),
        output: None,
    }
}
