//! Row coding for distributed matrix-vector multiplication.
//!
//! Two code families are provided. Random linear coding assigns worker `i`
//! the block `A_i = S_i A` for a Gaussian coding matrix `S_i`; any `r`
//! returned coded inner products decode by solving an `r x r` dense system.
//! LT coding sums random row subsets drawn from a (robust Soliton) degree
//! distribution; any sufficiently large symbol prefix decodes by peeling
//! degree-1 symbols, in nearly linear time.

mod lt;
mod matrix;
mod rlc;
mod soliton;

pub use lt::{
    lt_decode_peel, lt_encode, lt_required_overhead, sample_symbol_neighbors, LtSymbol,
    OverheadEstimate, PeelDecoder, PeelOutcome,
};
pub use matrix::DenseMatrix;
pub use rlc::{rlc_decode, rlc_encode, rlc_encode_with, solve_dense, RlcBlock};
pub use soliton::{robust_soliton, LtCodeSpec};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    // --- elimination oracle -------------------------------------------------
    //
    // Solves the symbols' 0/1 incidence system by Gaussian elimination over
    // f64. Independent of the peeling path: it decides solvability by rank
    // and recovers values by back substitution.
    fn eliminate(symbols: &[LtSymbol<f64>], k: usize) -> Option<Vec<f64>> {
        let m = symbols.len();
        let mut a = vec![0.0f64; m * k];
        let mut b = vec![0.0f64; m];
        for (row, s) in symbols.iter().enumerate() {
            for &n in &s.neighbors {
                a[row * k + n as usize] = 1.0;
            }
            b[row] = s.value[0];
        }
        let mut pivot_rows = Vec::with_capacity(k);
        let mut used = vec![false; m];
        for col in 0..k {
            let pivot = (0..m).find(|&r| !used[r] && a[r * k + col].abs() > 1e-9)?;
            used[pivot] = true;
            pivot_rows.push(pivot);
            for r in 0..m {
                if r != pivot && a[r * k + col].abs() > 1e-12 {
                    let factor = a[r * k + col] / a[pivot * k + col];
                    for c in col..k {
                        a[r * k + c] -= factor * a[pivot * k + c];
                    }
                    b[r] -= factor * b[pivot];
                }
            }
        }
        let mut x = vec![0.0f64; k];
        for (col, &row) in pivot_rows.iter().enumerate() {
            x[col] = b[row] / a[row * k + col];
        }
        Some(x)
    }

    fn symbol(neighbors: &[u32], value: f64) -> LtSymbol<f64> {
        LtSymbol { neighbors: neighbors.to_vec(), value: vec![value] }
    }

    // --- RLC ----------------------------------------------------------------

    #[test]
    fn identity_coding_returns_the_matrix() {
        let mut rng = substream(1, 0);
        let a = DenseMatrix::<f64>::uniform(4, 3, &mut rng).unwrap();
        let blocks =
            rlc_encode_with(&a, &[4], vec![DenseMatrix::identity(4).unwrap()]).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].coded, a);
    }

    #[test]
    fn two_by_two_hand_built_code_decodes() {
        // rows coded with coefficients (1, 1) and (1, -1)
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let blocks = rlc_encode_with(&a, &[1, 1], vec![
            s.take_rows(&[0]).unwrap(),
            s.take_rows(&[1]).unwrap(),
        ])
        .unwrap();
        let x = vec![1.0, 1.0];
        let z: Vec<f64> = blocks
            .iter()
            .flat_map(|b| b.coded.matvec(&x).unwrap())
            .collect();
        let y = rlc_decode(&s, &z).unwrap();
        let expected = a.matvec(&x).unwrap();
        for (got, want) in y.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_identity_and_scaled_identity() {
        let z = vec![3.0, -1.0, 2.0];
        let eye = DenseMatrix::<f64>::identity(3).unwrap();
        assert_eq!(rlc_decode(&eye, &z).unwrap(), z);
        let twice = DenseMatrix::new(3, 3, eye.data().iter().map(|v| v * 2.0).collect()).unwrap();
        let y = rlc_decode(&twice, &[6.0, -2.0, 4.0]).unwrap();
        for (got, want) in y.iter().zip(&z) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let s = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(rlc_decode(&s, &[1.0, 1.0]), Err(crate::Error::Singular(_))));
    }

    #[test]
    fn random_subsets_of_coded_rows_decode() {
        // Sigma loads = 2r; any r of the coded rows decode A x. Gaussian
        // matrices are full-rank with probability 1, so demand 100/100.
        let r = 24usize;
        let mut rng = substream(3, 0);
        let a = DenseMatrix::<f64>::uniform(r, 5, &mut rng).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let expected = a.matvec(&x).unwrap();
        let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let blocks = rlc_encode(&a, &[r as u64, r as u64], &mut rng).unwrap();
        let all_coding: Vec<&[f64]> = (0..2 * r)
            .map(|i| blocks[i / r].coding.row(i % r))
            .collect();
        let all_values: Vec<f64> = blocks
            .iter()
            .flat_map(|b| b.coded.matvec(&x).unwrap())
            .collect();
        let mut successes = 0;
        for trial in 0..100 {
            let mut pick_rng = substream(100 + trial, 0);
            let mut idx: Vec<usize> = (0..2 * r).collect();
            use rand::seq::SliceRandom;
            idx.shuffle(&mut pick_rng);
            idx.truncate(r);
            let mut data = Vec::with_capacity(r * r);
            let mut z = Vec::with_capacity(r);
            for &i in &idx {
                data.extend_from_slice(all_coding[i]);
                z.push(all_values[i]);
            }
            let sys = DenseMatrix::new(r, r, data).unwrap();
            if let Ok(y) = rlc_decode(&sys, &z) {
                let err = y
                    .iter()
                    .zip(&expected)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if err < 1e-6 * scale {
                    successes += 1;
                }
            }
        }
        assert!(successes >= 99, "only {successes}/100 subsets decoded");
    }

    #[test]
    fn rlc_encode_is_deterministic_and_linear() {
        let mut rng = substream(8, 0);
        let a = DenseMatrix::<f64>::uniform(6, 4, &mut rng).unwrap();
        let b = DenseMatrix::<f64>::uniform(6, 4, &mut rng).unwrap();
        let sum = DenseMatrix::new(
            6,
            4,
            a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect(),
        )
        .unwrap();
        let enc_a = rlc_encode(&a, &[3, 5], &mut substream(9, 1)).unwrap();
        let enc_a2 = rlc_encode(&a, &[3, 5], &mut substream(9, 1)).unwrap();
        assert_eq!(enc_a, enc_a2);
        let enc_b = rlc_encode(&b, &[3, 5], &mut substream(9, 1)).unwrap();
        let enc_sum = rlc_encode(&sum, &[3, 5], &mut substream(9, 1)).unwrap();
        for ((ea, eb), es) in enc_a.iter().zip(&enc_b).zip(&enc_sum) {
            assert_eq!(ea.coding, eb.coding, "same seed, same coding matrices");
            for ((va, vb), vs) in ea
                .coded
                .data()
                .iter()
                .zip(eb.coded.data())
                .zip(es.coded.data())
            {
                assert!((va + vb - vs).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rlc_rejects_insufficient_totals() {
        let mut rng = substream(2, 0);
        let a = DenseMatrix::<f64>::uniform(10, 2, &mut rng).unwrap();
        assert!(rlc_encode(&a, &[4, 5], &mut rng).is_err());
    }

    // --- LT -----------------------------------------------------------------

    #[test]
    fn degree_one_symbols_decode_by_copy() {
        let symbols: Vec<LtSymbol<f64>> =
            (0..5).map(|i| symbol(&[i], i as f64 * 10.0)).collect();
        let outcome = lt_decode_peel(&symbols, 5).unwrap();
        assert!(outcome.complete);
        for (i, v) in outcome.recovered.iter().enumerate() {
            assert_eq!(v.as_ref().unwrap()[0], i as f64 * 10.0);
        }
    }

    #[test]
    fn two_symbol_chain_recovers_both() {
        let symbols = vec![symbol(&[0], 1.0), symbol(&[0, 1], 3.0)];
        let outcome = lt_decode_peel(&symbols, 2).unwrap();
        assert!(outcome.complete);
        assert_eq!(outcome.recovered[0].as_ref().unwrap()[0], 1.0);
        assert_eq!(outcome.recovered[1].as_ref().unwrap()[0], 2.0);
    }

    #[test]
    fn three_symbol_chain_peels_in_sequence() {
        // {0}, {0,1}, {1,2} with y = (1, 2, 3)
        let symbols = vec![symbol(&[0], 1.0), symbol(&[0, 1], 3.0), symbol(&[1, 2], 5.0)];
        let outcome = lt_decode_peel(&symbols, 3).unwrap();
        assert!(outcome.complete);
        let got: Vec<f64> = outcome
            .recovered
            .iter()
            .map(|v| v.as_ref().unwrap()[0])
            .collect();
        assert_eq!(got, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn stall_is_an_outcome_not_an_error() {
        let symbols = vec![symbol(&[0, 1], 3.0)];
        let outcome = lt_decode_peel(&symbols, 2).unwrap();
        assert!(!outcome.complete);
        assert_eq!(outcome.recovered_count, 0);
    }

    #[test]
    fn malformed_symbols_are_rejected() {
        assert!(lt_decode_peel(&[symbol(&[], 0.0)], 2).is_err());
        assert!(lt_decode_peel(&[symbol(&[5], 0.0)], 2).is_err());
        assert!(lt_decode_peel(&[symbol(&[1, 1], 0.0)], 3).is_err());
    }

    #[test]
    fn peeling_agrees_with_elimination_on_random_instances() {
        // 200 random small instances: peeling success implies elimination
        // success, and every recovered value agrees within 1e-9.
        let k = 50usize;
        let spec = robust_soliton(k, 0.1, 0.3).unwrap();
        let mut peeled = 0;
        for instance in 0..200u64 {
            let mut rng = substream(instance, 7);
            let truth: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let count = k + 30;
            let symbols: Vec<LtSymbol<f64>> = (0..count)
                .map(|_| {
                    let neighbors = sample_symbol_neighbors(&spec, &mut rng);
                    let value = neighbors.iter().map(|&n| truth[n as usize]).sum();
                    LtSymbol { neighbors, value: vec![value] }
                })
                .collect();
            let outcome = lt_decode_peel(&symbols, k).unwrap();
            if outcome.complete {
                peeled += 1;
                let consumed = &symbols[..outcome.consumed];
                let solved = eliminate(consumed, k).expect("peel success implies full rank");
                for (i, v) in outcome.recovered.iter().enumerate() {
                    let got = v.as_ref().unwrap()[0];
                    assert!((got - solved[i]).abs() < 1e-9, "instance {instance} source {i}");
                    assert!((got - truth[i]).abs() < 1e-9);
                }
            }
        }
        assert!(peeled > 100, "peeling succeeded only {peeled}/200 times");
    }

    #[test]
    fn medium_code_decodes_often() {
        // k = 100 sources from 160 symbols decode on ~89% of seeds (measured
        // against an independent reference decoder); demand at least 80.
        let k = 100usize;
        let spec = robust_soliton(k, 0.03, 0.1).unwrap();
        let mut rng = substream(12, 0);
        let a = DenseMatrix::<f64>::uniform(k, 3, &mut rng).unwrap();
        let x = vec![0.5, -1.0, 2.0];
        let expected = a.matvec(&x).unwrap();
        let mut ok = 0;
        for seed in 0..100 {
            let mut enc_rng = substream(seed, 1);
            let symbols = lt_encode(&a, 160, &spec, &mut enc_rng).unwrap();
            let products: Vec<LtSymbol<f64>> = symbols
                .iter()
                .map(|s| LtSymbol {
                    neighbors: s.neighbors.clone(),
                    value: vec![s.value.iter().zip(&x).map(|(a, b)| a * b).sum()],
                })
                .collect();
            let outcome = lt_decode_peel(&products, k).unwrap();
            if outcome.complete {
                let err = outcome
                    .recovered
                    .iter()
                    .zip(&expected)
                    .map(|(v, e)| (v.as_ref().unwrap()[0] - e).abs())
                    .fold(0.0f64, f64::max);
                assert!(err < 1e-9);
                ok += 1;
            }
        }
        assert!(ok >= 80, "decoded {ok}/100");
    }

    #[test]
    fn lt_encode_sums_neighbor_rows_and_is_linear() {
        let mut rng = substream(21, 0);
        let a = DenseMatrix::<f64>::uniform(10, 4, &mut rng).unwrap();
        let b = DenseMatrix::<f64>::uniform(10, 4, &mut rng).unwrap();
        let sum =
            DenseMatrix::new(10, 4, a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect())
                .unwrap();
        let spec = robust_soliton(10, 0.1, 0.5).unwrap();
        let ea = lt_encode(&a, 20, &spec, &mut substream(4, 2)).unwrap();
        let eb = lt_encode(&b, 20, &spec, &mut substream(4, 2)).unwrap();
        let es = lt_encode(&sum, 20, &spec, &mut substream(4, 2)).unwrap();
        for ((sa, sb), ss) in ea.iter().zip(&eb).zip(&es) {
            assert_eq!(sa.neighbors, sb.neighbors);
            assert_eq!(sa.neighbors, ss.neighbors);
            for (i, &n) in sa.neighbors.iter().enumerate() {
                let _ = (i, n);
            }
            for ((va, vb), vs) in sa.value.iter().zip(&sb.value).zip(&ss.value) {
                assert!((va + vb - vs).abs() < 1e-9);
            }
            // value really is the sum of neighbor rows
            for col in 0..4 {
                let direct: f64 = sa.neighbors.iter().map(|&n| a.get(n as usize, col)).sum();
                assert!((sa.value[col] - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degree_histogram_matches_the_table() {
        // Total-variation distance below 0.01 over 1e5 draws.
        let spec = robust_soliton(200, 0.05, 0.2).unwrap();
        let draws = 100_000usize;
        let mut rng = substream(31, 0);
        let mut histogram = vec![0usize; 201];
        for _ in 0..draws {
            histogram[sample_symbol_neighbors(&spec, &mut rng).len()] += 1;
        }
        let tv: f64 = (1..=200)
            .map(|d| {
                let empirical = histogram[d] as f64 / draws as f64;
                (empirical - spec.degree_probability(d)).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "total variation {tv}");
    }

    #[test]
    fn neighbor_subsets_are_uniform_without_replacement() {
        let spec = LtCodeSpec::from_degree_table(6, vec![0.0, 0.0, 1.0]).unwrap();
        let mut rng = substream(40, 0);
        let mut seen = vec![0usize; 6];
        for _ in 0..6000 {
            let neighbors = sample_symbol_neighbors(&spec, &mut rng);
            assert_eq!(neighbors.len(), 3);
            assert!(neighbors.windows(2).all(|w| w[0] < w[1]), "sorted, unique");
            for &n in &neighbors {
                seen[n as usize] += 1;
            }
        }
        // each index appears in about half of the draws
        for &count in &seen {
            assert!((count as f64 - 3000.0).abs() < 300.0, "count {count}");
        }
    }

    #[test]
    fn overhead_estimate_for_single_source() {
        let spec = LtCodeSpec::from_degree_table(1, vec![1.0]).unwrap();
        let est = lt_required_overhead(&spec, 50, 3).unwrap();
        assert_eq!(est.required, 1);
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn degree_one_only_table_is_a_coupon_collector() {
        // Mean symbols to complete ~ k H_k.
        let k = 60usize;
        let spec = LtCodeSpec::from_degree_table(k, vec![1.0]).unwrap();
        let trials = 400;
        let est = lt_required_overhead(&spec, trials, 11).unwrap();
        let h_k: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
        let expected = k as f64 * h_k;
        // std of the coupon collector is ~ 1.28 k; allow 3 sigma of the mean
        let tolerance = 3.0 * 1.3 * k as f64 / (trials as f64).sqrt();
        assert!(
            (est.mean - expected).abs() < tolerance,
            "mean {} vs {expected} +- {tolerance}",
            est.mean
        );
        // the default failure bound is 0.5, so `required` estimates the
        // median k(ln k - ln ln 2) = 267.6
        let median = k as f64 * ((k as f64).ln() - std::f64::consts::LN_2.ln());
        assert!(
            (est.required as f64 - median).abs() < 25.0,
            "median estimate {} vs {median}",
            est.required
        );
    }

    #[test]
    fn overhead_success_rate_accessor() {
        let spec = robust_soliton(100, 0.03, 0.1).unwrap();
        let est = lt_required_overhead(&spec, 100, 5).unwrap();
        assert!(est.success_rate_at(est.required) >= 0.9 - 1e-9);
        assert_eq!(est.success_rate_at(0), 0.0);
        assert_eq!(est.success_rate_at(usize::MAX), 1.0);
    }

    proptest! {
        // Peeling never outputs a value that disagrees with the elimination
        // oracle, on arbitrary small symbol sets.
        #[test]
        fn peel_matches_elimination(instance in 0u64..500) {
            let k = 8usize;
            let mut rng = substream(instance, 99);
            let truth: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let count = rng.random_range(1..20);
            let symbols: Vec<LtSymbol<f64>> = (0..count)
                .map(|_| {
                    let degree = rng.random_range(1..=3usize);
                    let mut neighbors = Vec::new();
                    while neighbors.len() < degree {
                        let n = rng.random_range(0..k as u32);
                        if !neighbors.contains(&n) {
                            neighbors.push(n);
                        }
                    }
                    neighbors.sort_unstable();
                    let value = neighbors.iter().map(|&n| truth[n as usize]).sum();
                    LtSymbol { neighbors, value: vec![value] }
                })
                .collect();
            let outcome = lt_decode_peel(&symbols, k).unwrap();
            if outcome.complete {
                let solved = eliminate(&symbols[..outcome.consumed], k);
                prop_assert!(solved.is_some());
            }
            for (i, v) in outcome.recovered.iter().enumerate() {
                if let Some(v) = v {
                    prop_assert!((v[0] - truth[i]).abs() < 1e-9);
                }
            }
        }
    }
}
