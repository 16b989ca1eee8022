use crate::error::{Error, Result};

/// LT code configuration: the number of source symbols and a degree
/// distribution over `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtCodeSpec {
    source_symbols: usize,
    tuning: f64,
    decode_failure_bound: f64,
    overhead: f64,
    /// `probs[d-1]` is the probability of degree `d`.
    probs: Vec<f64>,
    /// Cumulative distribution for inverse sampling.
    cdf: Vec<f64>,
}

impl LtCodeSpec {
    /// Validated construction from an explicit degree table (`table[d-1]` is
    /// the weight of degree `d`; weights are normalized). This is also the
    /// hook tests use to force degree-1-only or ideal-Soliton-only codes.
    pub fn from_degree_table(source_symbols: usize, table: Vec<f64>) -> Result<Self> {
        if source_symbols == 0 {
            return Err(Error::invalid("need at least one source symbol"));
        }
        if table.is_empty() || table.len() > source_symbols {
            return Err(Error::invalid(format!(
                "degree table length {} must lie in 1..={source_symbols}",
                table.len()
            )));
        }
        if table.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("degree weights must be finite and nonnegative"));
        }
        let total: f64 = table.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("degree weights must not all be zero"));
        }
        let probs: Vec<f64> = table.iter().map(|p| p / total).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(LtCodeSpec {
            source_symbols,
            tuning: 0.0,
            decode_failure_bound: 0.5,
            overhead: 0.0,
            probs,
            cdf,
        })
    }

    /// Ideal Soliton: `ρ(1) = 1/k`, `ρ(d) = 1/(d(d−1))` for `2 ≤ d ≤ k`.
    pub fn ideal_soliton(source_symbols: usize) -> Result<Self> {
        if source_symbols < 2 {
            return Err(Error::invalid("ideal Soliton needs k >= 2"));
        }
        let k = source_symbols as f64;
        let mut table = vec![0.0; source_symbols];
        table[0] = 1.0 / k;
        for d in 2..=source_symbols {
            table[d - 1] = 1.0 / (d as f64 * (d as f64 - 1.0));
        }
        Self::from_degree_table(source_symbols, table)
    }

    pub fn source_symbols(&self) -> usize {
        self.source_symbols
    }

    pub fn tuning(&self) -> f64 {
        self.tuning
    }

    pub fn decode_failure_bound(&self) -> f64 {
        self.decode_failure_bound
    }

    /// Overhead fraction ε: the master targets `ceil(k(1+ε))` coded symbols.
    pub fn overhead(&self) -> f64 {
        self.overhead
    }

    pub fn with_overhead(mut self, overhead: f64) -> Result<Self> {
        if !(overhead >= 0.0) {
            return Err(Error::invalid(format!("overhead must be nonnegative, got {overhead}")));
        }
        self.overhead = overhead;
        Ok(self)
    }

    /// Coded symbols the master waits for, `ceil(k(1+ε))`.
    pub fn target_symbols(&self) -> usize {
        (self.source_symbols as f64 * (1.0 + self.overhead)).ceil() as usize
    }

    pub fn degree_probability(&self, degree: usize) -> f64 {
        if degree == 0 || degree > self.probs.len() {
            0.0
        } else {
            self.probs[degree - 1]
        }
    }

    /// Inverse-CDF degree draw from one uniform in `[0, 1)`.
    pub fn sample_degree(&self, u: f64) -> usize {
        let below = self.cdf.partition_point(|c| *c <= u);
        (below + 1).min(self.cdf.len())
    }
}

/// Robust Soliton distribution with tuning parameter `c` and decode failure
/// bound `δ`: `μ(d) ∝ ρ(d) + τ(d)` where `ρ` is the ideal Soliton and `τ` adds
/// weight `S/(kd)` for `d < k/S` plus a spike `S ln(S/δ)/k` at
/// `d = round(k/S)`, with `S = c ln(k/δ) √k`.
pub fn robust_soliton(source_symbols: usize, c: f64, delta: f64) -> Result<LtCodeSpec> {
    if source_symbols < 2 {
        return Err(Error::invalid("robust Soliton needs k >= 2"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("tuning parameter c must be positive, got {c}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "failure bound delta must lie in (0, 1), got {delta}"
        )));
    }
    let k = source_symbols as f64;
    let s = c * (k / delta).ln() * k.sqrt();
    let spike = (k / s).round() as usize;
    let mut table = vec![0.0; source_symbols];
    table[0] = 1.0 / k;
    for d in 2..=source_symbols {
        table[d - 1] = 1.0 / (d as f64 * (d as f64 - 1.0));
    }
    let cap = (k / s).floor() as usize;
    for d in 1..=cap.min(source_symbols) {
        if d == spike {
            continue;
        }
        table[d - 1] += s / (k * d as f64);
    }
    if (1..=source_symbols).contains(&spike) {
        table[spike - 1] += s * (s / delta).ln() / k;
    }
    let mut spec = LtCodeSpec::from_degree_table(source_symbols, table)?;
    spec.tuning = c;
    spec.decode_failure_bound = delta;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_soliton_telescopes_to_one() {
        let spec = LtCodeSpec::ideal_soliton(100).unwrap();
        let total: f64 = (1..=100).map(|d| spec.degree_probability(d)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // rho(2) = 1/2, rho(3) = 1/6
        assert!((spec.degree_probability(2) - 0.5).abs() < 1e-12);
        assert!((spec.degree_probability(3) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn robust_soliton_is_normalized_with_spike_in_place() {
        // S = 0.03 * ln(1e5) * 100 = 34.5388, spike at round(k/S) = 290.
        let spec = robust_soliton(10_000, 0.03, 0.1).unwrap();
        let total: f64 = (1..=10_000).map(|d| spec.degree_probability(d)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(spec.degree_probability(290) > spec.degree_probability(289));
        assert!(spec.degree_probability(290) > spec.degree_probability(291));
        assert!(spec.degree_probability(291) < 1e-4); // past the spike only rho remains
    }

    #[test]
    fn degree_sampling_matches_cdf() {
        let spec = LtCodeSpec::from_degree_table(4, vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(spec.sample_degree(0.0), 1);
        assert_eq!(spec.sample_degree(0.26), 2);
        assert_eq!(spec.sample_degree(0.9999), 4);
    }

    #[test]
    fn parameter_domain_is_enforced() {
        assert!(robust_soliton(1, 0.03, 0.1).is_err());
        assert!(robust_soliton(100, 0.0, 0.1).is_err());
        assert!(robust_soliton(100, 0.03, 1.0).is_err());
        assert!(LtCodeSpec::from_degree_table(3, vec![0.0, 0.0]).is_err());
        assert!(LtCodeSpec::from_degree_table(3, vec![1.0, -0.5]).is_err());
    }
}
