use std::collections::HashMap;

use rand::Rng;

use super::matrix::DenseMatrix;
use super::soliton::LtCodeSpec;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scalar::Real;

/// One LT-coded symbol: the sorted source rows it sums (coefficients are all
/// one) and its value: a coded row after encoding, or a single coded inner
/// product once a worker has multiplied it with the input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LtSymbol<R> {
    pub neighbors: Vec<u32>,
    pub value: Vec<R>,
}

/// Draws a degree from the spec's table, then a uniform subset of that size
/// without replacement (partial Fisher-Yates over a sparse permutation).
/// Returns the subset sorted ascending.
pub fn sample_symbol_neighbors<G: Rng + ?Sized>(spec: &LtCodeSpec, rng: &mut G) -> Vec<u32> {
    let k = spec.source_symbols();
    let degree = spec.sample_degree(rng.random::<f64>()).min(k);
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut picked = Vec::with_capacity(degree);
    for i in 0..degree {
        let j = rng.random_range(i..k);
        let val_j = *swapped.get(&j).unwrap_or(&j);
        let val_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, val_i);
        picked.push(val_j as u32);
    }
    picked.sort_unstable();
    picked
}

/// Encodes `count` LT symbols from the rows of `a`: each symbol's value is the
/// elementwise sum of its neighbor rows.
pub fn lt_encode<R: Real, G: Rng + ?Sized>(
    a: &DenseMatrix<R>,
    count: usize,
    spec: &LtCodeSpec,
    rng: &mut G,
) -> Result<Vec<LtSymbol<R>>> {
    if count == 0 {
        return Err(Error::invalid("need at least one coded symbol"));
    }
    if spec.source_symbols() != a.rows() {
        return Err(Error::Dimension(format!(
            "code is for {} source symbols, matrix has {} rows",
            spec.source_symbols(),
            a.rows()
        )));
    }
    let mut symbols = Vec::with_capacity(count);
    for _ in 0..count {
        let neighbors = sample_symbol_neighbors(spec, rng);
        let mut value = vec![R::zero(); a.cols()];
        for &nbr in &neighbors {
            for (v, s) in value.iter_mut().zip(a.row(nbr as usize)) {
                *v = *v + *s;
            }
        }
        symbols.push(LtSymbol { neighbors, value });
    }
    Ok(symbols)
}

#[derive(Debug, Clone)]
struct PendingSymbol<R> {
    neighbors: Vec<u32>,
    value: Vec<R>,
}

/// Incremental peeling decoder.
///
/// Feed symbols one at a time with [`PeelDecoder::push`]; each new symbol is
/// first reduced against already-recovered sources, then any resulting
/// degree-1 symbols are resolved and substituted into their neighbors until
/// the process stalls. Decoding is complete once all `k` sources are known.
#[derive(Debug, Clone)]
pub struct PeelDecoder<R> {
    k: usize,
    value_len: Option<usize>,
    recovered: Vec<Option<Vec<R>>>,
    recovered_count: usize,
    symbols: Vec<PendingSymbol<R>>,
    source_to_symbols: Vec<Vec<usize>>,
    ready: Vec<usize>,
    consumed: usize,
}

/// Terminal state of a peeling run.
#[derive(Debug, Clone, PartialEq)]
pub struct PeelOutcome<R> {
    /// Recovered source values, `None` where peeling stalled.
    pub recovered: Vec<Option<Vec<R>>>,
    pub recovered_count: usize,
    pub complete: bool,
    /// Symbols consumed.
    pub consumed: usize,
}

impl<R: Real> PeelDecoder<R> {
    pub fn new(source_count: usize) -> Self {
        PeelDecoder {
            k: source_count,
            value_len: None,
            recovered: vec![None; source_count],
            recovered_count: 0,
            symbols: Vec::new(),
            source_to_symbols: vec![Vec::new(); source_count],
            ready: Vec::new(),
            consumed: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.recovered_count == self.k
    }

    pub fn recovered_count(&self) -> usize {
        self.recovered_count
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Consumes one symbol and peels as far as possible.
    pub fn push(&mut self, symbol: &LtSymbol<R>) -> Result<()> {
        if symbol.neighbors.is_empty() {
            return Err(Error::invalid("LT symbol has an empty neighbor set"));
        }
        match self.value_len {
            None => self.value_len = Some(symbol.value.len()),
            Some(len) if len != symbol.value.len() => {
                return Err(Error::Dimension(format!(
                    "symbol value length {} differs from earlier {len}",
                    symbol.value.len()
                )));
            }
            Some(_) => {}
        }
        let mut last = None;
        for &nbr in &symbol.neighbors {
            if nbr as usize >= self.k {
                return Err(Error::invalid(format!(
                    "neighbor {nbr} out of range for {} sources",
                    self.k
                )));
            }
            if last == Some(nbr) {
                return Err(Error::invalid("LT symbol has duplicate neighbors"));
            }
            last = Some(nbr);
        }
        self.consumed += 1;
        if self.is_complete() {
            return Ok(()); // counted but nothing left to do
        }
        let mut value = symbol.value.clone();
        let mut neighbors = Vec::with_capacity(symbol.neighbors.len());
        for &nbr in &symbol.neighbors {
            match &self.recovered[nbr as usize] {
                Some(known) => subtract(&mut value, known),
                None => neighbors.push(nbr),
            }
        }
        if neighbors.is_empty() {
            return Ok(()); // fully redundant symbol
        }
        let index = self.symbols.len();
        for &nbr in &neighbors {
            self.source_to_symbols[nbr as usize].push(index);
        }
        let degree_one = neighbors.len() == 1;
        self.symbols.push(PendingSymbol { neighbors, value });
        if degree_one {
            self.ready.push(index);
            self.drain();
        }
        Ok(())
    }

    fn drain(&mut self) {
        while let Some(index) = self.ready.pop() {
            if self.symbols[index].neighbors.len() != 1 {
                continue;
            }
            let source = self.symbols[index].neighbors[0] as usize;
            if self.recovered[source].is_some() {
                self.symbols[index].neighbors.clear();
                continue;
            }
            let value = std::mem::take(&mut self.symbols[index].value);
            self.symbols[index].neighbors.clear();
            self.recovered[source] = Some(value);
            self.recovered_count += 1;
            let users = std::mem::take(&mut self.source_to_symbols[source]);
            for user in users {
                if user == index {
                    continue;
                }
                let symbol = &mut self.symbols[user];
                if let Some(pos) = symbol.neighbors.iter().position(|&n| n as usize == source) {
                    symbol.neighbors.swap_remove(pos);
                    let known = self.recovered[source].as_ref().expect("just recovered");
                    subtract(&mut symbol.value, known);
                    if symbol.neighbors.len() == 1 {
                        self.ready.push(user);
                    }
                }
            }
        }
    }

    pub fn finish(self) -> PeelOutcome<R> {
        PeelOutcome {
            complete: self.recovered_count == self.k,
            recovered_count: self.recovered_count,
            consumed: self.consumed,
            recovered: self.recovered,
        }
    }
}

fn subtract<R: Real>(value: &mut [R], known: &[R]) {
    debug_assert_eq!(value.len(), known.len());
    for (v, k) in value.iter_mut().zip(known) {
        *v = *v - *k;
    }
}

/// Runs the peeling decoder over all `symbols`; a stall is a reported outcome,
/// not an error.
pub fn lt_decode_peel<R: Real>(symbols: &[LtSymbol<R>], source_count: usize) -> Result<PeelOutcome<R>> {
    if symbols.is_empty() {
        return Err(Error::invalid("no symbols to decode"));
    }
    let mut decoder = PeelDecoder::new(source_count);
    for symbol in symbols {
        decoder.push(symbol)?;
        if decoder.is_complete() {
            break;
        }
    }
    Ok(decoder.finish())
}

/// Monte Carlo estimate of the symbols needed for a `(1 − δ)` decode
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadEstimate {
    /// Empirical `(1 − δ)` quantile of the symbols-to-complete distribution:
    /// collecting this many symbols decodes with probability at least `1 − δ`
    /// (up to Monte Carlo error).
    pub required: usize,
    /// Mean symbols to complete.
    pub mean: f64,
    /// Per-trial symbol counts, sorted ascending.
    pub counts: Vec<usize>,
}

impl OverheadEstimate {
    /// Fraction of trials that completed within `budget` symbols.
    pub fn success_rate_at(&self, budget: usize) -> f64 {
        let ok = self.counts.partition_point(|&c| c <= budget);
        ok as f64 / self.counts.len() as f64
    }
}

/// Estimates how many coded symbols the master must collect before peeling
/// completes, by structural simulation (values are irrelevant to the peel
/// order). Trial `t` draws from stream `t` of `seed`.
pub fn lt_required_overhead(
    spec: &LtCodeSpec,
    trials: usize,
    seed: u64,
) -> Result<OverheadEstimate> {
    if trials == 0 {
        return Err(Error::invalid("need at least 1 trial"));
    }
    let k = spec.source_symbols();
    let cap = 64 * k + 1024;
    let mut counts = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let mut decoder: PeelDecoder<f64> = PeelDecoder::new(k);
        while !decoder.is_complete() && decoder.consumed() < cap {
            let neighbors = sample_symbol_neighbors(spec, &mut rng);
            decoder.push(&LtSymbol { neighbors, value: Vec::new() })?;
        }
        counts.push(decoder.consumed());
    }
    counts.sort_unstable();
    let mean = counts.iter().sum::<usize>() as f64 / trials as f64;
    let quantile_index =
        ((1.0 - spec.decode_failure_bound()) * trials as f64).ceil() as usize;
    let required = counts[quantile_index.clamp(1, trials) - 1];
    Ok(OverheadEstimate { required, mean, counts })
}
