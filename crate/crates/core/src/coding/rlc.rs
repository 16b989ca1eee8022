use rand::Rng;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One worker's random-linear-coded assignment: the coding matrix `S_i`
/// (`ℓ_i x r`) and the coded block `A_i = S_i A` (`ℓ_i x m`).
#[derive(Debug, Clone, PartialEq)]
pub struct RlcBlock<R> {
    pub worker: usize,
    pub coding: DenseMatrix<R>,
    pub coded: DenseMatrix<R>,
}

/// Encodes `a` into one block per worker with i.i.d. standard normal coding
/// matrices drawn from `rng`. Workers with zero load get no block.
pub fn rlc_encode<R: Real, G: Rng + ?Sized>(
    a: &DenseMatrix<R>,
    loads: &[u64],
    rng: &mut G,
) -> Result<Vec<RlcBlock<R>>> {
    let total: u64 = loads.iter().sum();
    if total < a.rows() as u64 {
        return Err(Error::Undecodable { needed: a.rows() as u64, available: total });
    }
    let mut coding = Vec::with_capacity(loads.len());
    for &load in loads {
        if load == 0 {
            continue;
        }
        coding.push(DenseMatrix::standard_normal(load as usize, a.rows(), rng)?);
    }
    rlc_encode_with_indices(a, loads, coding)
}

/// Encodes with caller-supplied coding matrices, one per positive-load worker
/// in worker order. This is how tests pin `S_i` to the identity or other
/// hand-built matrices.
pub fn rlc_encode_with<R: Real>(
    a: &DenseMatrix<R>,
    loads: &[u64],
    coding: Vec<DenseMatrix<R>>,
) -> Result<Vec<RlcBlock<R>>> {
    rlc_encode_with_indices(a, loads, coding)
}

fn rlc_encode_with_indices<R: Real>(
    a: &DenseMatrix<R>,
    loads: &[u64],
    coding: Vec<DenseMatrix<R>>,
) -> Result<Vec<RlcBlock<R>>> {
    let loaded: Vec<usize> = loads
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > 0)
        .map(|(i, _)| i)
        .collect();
    if coding.len() != loaded.len() {
        return Err(Error::Dimension(format!(
            "{} coding matrices for {} loaded workers",
            coding.len(),
            loaded.len()
        )));
    }
    let mut blocks = Vec::with_capacity(loaded.len());
    for (worker, s) in loaded.into_iter().zip(coding) {
        if s.rows() as u64 != loads[worker] || s.cols() != a.rows() {
            return Err(Error::Dimension(format!(
                "coding matrix for worker {worker} is {}x{}, want {}x{}",
                s.rows(),
                s.cols(),
                loads[worker],
                a.rows()
            )));
        }
        let coded = s.matmul(a)?;
        blocks.push(RlcBlock { worker, coding: s, coded });
    }
    Ok(blocks)
}

const PIVOT_THRESHOLD: f64 = 1e-10;

/// Solves the square system `coding_rows * y = values` by Gaussian elimination
/// with partial pivoting. `coding_rows` is the `r x r` stack of coding rows
/// whose inner products came back first.
pub fn rlc_decode<R: Real>(coding_rows: &DenseMatrix<R>, values: &[R]) -> Result<Vec<R>> {
    if coding_rows.rows() != coding_rows.cols() {
        return Err(Error::Dimension(format!(
            "need a square system, got {}x{}",
            coding_rows.rows(),
            coding_rows.cols()
        )));
    }
    if values.len() != coding_rows.rows() {
        return Err(Error::Dimension(format!(
            "{} values for a {}-row system",
            values.len(),
            coding_rows.rows()
        )));
    }
    solve_dense(coding_rows.clone(), values.to_vec())
}

/// In-place partial-pivoting solver used by [`rlc_decode`] and the emulator.
pub fn solve_dense<R: Real>(a: DenseMatrix<R>, mut b: Vec<R>) -> Result<Vec<R>> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut data = a.into_data();
    let scale = data
        .iter()
        .fold(R::zero(), |acc, v| acc.max(v.abs()))
        .max(R::one());
    for col in 0..n {
        // partial pivot
        let mut pivot_row = col;
        let mut pivot_mag = data[col * n + col].abs();
        for row in col + 1..n {
            let mag = data[row * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag <= R::of(PIVOT_THRESHOLD) * scale {
            return Err(Error::Singular(pivot_mag.as_f64()));
        }
        if pivot_row != col {
            for j in 0..n {
                data.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = data[col * n + col];
        for row in col + 1..n {
            let factor = data[row * n + col] / pivot;
            if factor == R::zero() {
                continue;
            }
            data[row * n + col] = R::zero();
            for j in col + 1..n {
                data[row * n + j] = data[row * n + j] - factor * data[col * n + j];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    // back substitution
    let mut x = vec![R::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for j in col + 1..n {
            acc = acc - data[col * n + j] * x[j];
        }
        x[col] = acc / data[col * n + col];
    }
    Ok(x)
}
