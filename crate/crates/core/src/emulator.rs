//! Local master-worker execution of a real coded matrix-vector job.
//!
//! The master encodes `A` per the allocation, hands each worker its coded
//! rows, broadcasts `x`, and collects coded inner products until it can
//! decode; the decoded output is verified against the directly computed `Ax`.
//! Workers do genuine floating-point work (their block times are measured),
//! while the *collection schedule* (which worker's results count as arriving
//! when) is the seeded realization of the cluster's run-time models, the same
//! one the simulator would draw for this seed. Keeping the schedule on the
//! seeded clock makes every decode-relevant field of [`JobMetrics`] identical
//! between the concurrent and virtual-time modes; wall-clock fields are
//! measurements and differ run to run.
//!
//! # Transport protocol
//!
//! One master context and `n` worker contexts exchange two message types over
//! in-process channels:
//!
//! * `Broadcast(x)`, master to worker: the input vector (workers already hold
//!   their coded rows);
//! * `Result { worker, first_symbol, values, compute_seconds }`, worker to
//!   master: the coded inner products for symbol ids
//!   `first_symbol..first_symbol + values.len()`, plus the measured compute
//!   time. A worker sends exactly one `Result` and exits, which doubles as
//!   `Done`.
//!
//! A networked port would replace the channels and nothing else.
//!
//! In the concurrent mode a worker flagged as a straggler sleeps for
//! `(slowdown − 1)` times its measured compute time before sending, mirroring
//! sleep-based delay injection; the virtual-time mode skips the pause and is
//! the mode CI should use.

use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use crate::allocator::Allocation;
use crate::coding::{
    lt_encode, rlc_encode, DenseMatrix, LtCodeSpec, LtSymbol, PeelDecoder, RlcBlock,
};
use crate::error::{Error, Result};
use crate::models::ClusterSpec;
use crate::rng::{substream, Substream};
use crate::simulator::StragglerModel;

/// Where the data matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// Uniform entries on [-1, 1) from the given seed.
    Generated { rows: u64, cols: u64, seed: u64 },
    CsvFile(PathBuf),
    BinFile(PathBuf),
}

/// Code family used for the job.
#[derive(Debug, Clone, PartialEq)]
pub enum JobCoding {
    Rlc,
    Lt(LtCodeSpec),
}

/// How worker contexts execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// One thread per worker; stragglers really pause.
    Concurrent,
    /// Single context, pauses replaced by timestamp arithmetic.
    VirtualTime,
}

/// Everything needed to run one coded job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub matrix: MatrixSource,
    /// Input vector; generated from the master seed when absent.
    pub input: Option<Vec<f64>>,
    pub cluster: ClusterSpec<f64>,
    pub allocation: Allocation<f64>,
    pub coding: JobCoding,
    pub straggler: StragglerModel<f64>,
    pub seed: u64,
    pub mode: ExecMode,
}

/// Measurements from one job.
///
/// `wait_seconds`, `worker_times`, `rows_received`, `max_abs_error` and
/// `success` are decode-relevant and seed-deterministic;
/// `decode_wall_seconds`, `total_wall_seconds` and `worker_compute_wall` are
/// wall-clock measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct JobMetrics {
    /// Waiting time to decodability on the seeded clock.
    pub wait_seconds: f64,
    /// Per-worker total times on the seeded clock; `None` for zero loads.
    pub worker_times: Vec<Option<f64>>,
    /// Coded rows consumed when decoding became possible.
    pub rows_received: u64,
    /// Rows needed for an RLC decode, or the LT symbol target.
    pub decode_threshold: u64,
    /// Infinity-norm error against the directly computed product.
    pub max_abs_error: f64,
    /// Decoded and verified within tolerance.
    pub success: bool,
    /// Wall time spent decoding (for LT, summed over incremental peeling).
    pub decode_wall_seconds: f64,
    /// Wall time from dispatch to verified result.
    pub total_wall_seconds: f64,
    /// Measured per-worker block compute times; `None` for zero loads.
    pub worker_compute_wall: Vec<Option<f64>>,
}

impl JobMetrics {
    /// Equality on the seed-deterministic fields only.
    pub fn deterministic_eq(&self, other: &JobMetrics) -> bool {
        self.wait_seconds == other.wait_seconds
            && self.worker_times == other.worker_times
            && self.rows_received == other.rows_received
            && self.decode_threshold == other.decode_threshold
            && self.max_abs_error == other.max_abs_error
            && self.success == other.success
    }

    pub fn csv_header() -> &'static str {
        "seed,mode,coding,workers,threshold,rows_received,wait_s,decode_wall_s,total_wall_s,max_abs_error,success"
    }

    pub fn csv_row(&self, seed: u64, mode: ExecMode, coding: &JobCoding) -> String {
        format!(
            "{},{},{},{},{},{},{:.9},{:.6},{:.6},{:e},{}",
            seed,
            match mode {
                ExecMode::Concurrent => "concurrent",
                ExecMode::VirtualTime => "virtual",
            },
            match coding {
                JobCoding::Rlc => "rlc",
                JobCoding::Lt(_) => "lt",
            },
            self.worker_times.len(),
            self.decode_threshold,
            self.rows_received,
            self.wait_seconds,
            self.decode_wall_seconds,
            self.total_wall_seconds,
            self.max_abs_error,
            self.success
        )
    }
}

/// Job result: metrics plus the decoded vector when decoding succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub metrics: JobMetrics,
    pub result: Option<Vec<f64>>,
}

/// Relative infinity-norm tolerance for verification.
pub const VERIFY_REL_TOL: f64 = 1e-6;

/// Draws the i.i.d. Bernoulli straggler mask for `worker_count` workers.
pub fn inject_stragglers<G: Rng + ?Sized>(
    worker_count: usize,
    straggler: &StragglerModel<f64>,
    rng: &mut G,
) -> Vec<bool> {
    straggler.mask(worker_count, rng)
}

/// Infinity norm of `result − reference`.
pub fn verify(result: &[f64], reference: &[f64]) -> Result<f64> {
    if result.len() != reference.len() {
        return Err(Error::Dimension(format!(
            "result has {} entries, reference {}",
            result.len(),
            reference.len()
        )));
    }
    Ok(result
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

enum WorkerMessage {
    Broadcast(Arc<Vec<f64>>),
}

struct WorkerResult {
    worker: usize,
    values: Vec<f64>,
    compute_seconds: f64,
}

/// Runs the job end to end. An LT decode that stalls after all workers report
/// is a failure outcome (`success = false`, partial stats), not an error.
pub fn run_job(spec: &JobSpec) -> Result<JobOutcome> {
    let n = spec.cluster.len();
    if spec.allocation.loads.len() != n {
        return Err(Error::Dimension(format!(
            "allocation covers {} workers, cluster has {n}",
            spec.allocation.loads.len()
        )));
    }
    let a = load_matrix(&spec.matrix)?;
    let input: Arc<Vec<f64>> = Arc::new(match &spec.input {
        Some(x) => {
            if x.len() != a.cols() {
                return Err(Error::Dimension(format!(
                    "input vector has {} entries, matrix has {} columns",
                    x.len(),
                    a.cols()
                )));
            }
            x.clone()
        }
        None => {
            let mut rng = substream(spec.seed, STREAM_INPUT);
            (0..a.cols()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        }
    });
    let reference = a.matvec(&input)?;

    // Seeded timeline: same draw order as one simulator trial (all loaded
    // workers' times in worker order, then the straggler mask).
    let mut schedule_rng = substream(spec.seed, STREAM_SCHEDULE);
    let mut worker_times: Vec<Option<f64>> = Vec::with_capacity(n);
    for (worker, load) in spec.cluster.workers().iter().zip(&spec.allocation.loads) {
        worker_times.push(match *load {
            0 => None,
            load => Some(worker.model.sample(load, &mut schedule_rng)?),
        });
    }
    let mask = inject_stragglers(n, &spec.straggler, &mut schedule_rng);
    for (time, flagged) in worker_times.iter_mut().zip(&mask) {
        if let (Some(t), true) = (time.as_mut(), *flagged) {
            *t *= spec.straggler.slowdown();
        }
    }

    // Encode.
    let mut encode_rng = substream(spec.seed, STREAM_ENCODE);
    let encoded = encode(&a, spec, &mut encode_rng)?;

    // Dispatch the coded rows and collect raw results.
    let started = Instant::now();
    let results = match spec.mode {
        ExecMode::Concurrent => {
            run_concurrent(&encoded.worker_rows, &input, &mask, &spec.straggler)
        }
        ExecMode::VirtualTime => run_virtual(&encoded.worker_rows, &input),
    };

    // Consume results on the seeded clock and decode.
    let decoded = consume_and_decode(&encoded, &worker_times, &results)?;

    let mut worker_compute_wall = vec![None; n];
    for r in &results {
        worker_compute_wall[r.worker] = Some(r.compute_seconds);
    }
    let max_abs_error = match &decoded.result {
        Some(result) => verify(result, &reference)?,
        None => f64::INFINITY,
    };
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let success = decoded.result.is_some() && max_abs_error <= VERIFY_REL_TOL * scale;
    let metrics = JobMetrics {
        wait_seconds: decoded.wait_seconds,
        worker_times,
        rows_received: decoded.rows_received,
        decode_threshold: encoded.threshold,
        max_abs_error,
        success,
        decode_wall_seconds: decoded.decode_wall_seconds,
        total_wall_seconds: started.elapsed().as_secs_f64(),
        worker_compute_wall,
    };
    Ok(JobOutcome { metrics, result: decoded.result })
}

const STREAM_SCHEDULE: u64 = 0;
const STREAM_ENCODE: u64 = 1;
const STREAM_MATRIX: u64 = 2;
const STREAM_INPUT: u64 = 3;

fn load_matrix(source: &MatrixSource) -> Result<DenseMatrix<f64>> {
    match source {
        MatrixSource::Generated { rows, cols, seed } => {
            let mut rng = substream(*seed, STREAM_MATRIX);
            DenseMatrix::uniform(*rows as usize, *cols as usize, &mut rng)
        }
        MatrixSource::CsvFile(path) => DenseMatrix::read_csv_file(path),
        MatrixSource::BinFile(path) => DenseMatrix::read_bin_file(path),
    }
}

struct Encoded {
    /// Coded rows shipped to each worker; `None` for zero loads.
    worker_rows: Vec<Option<DenseMatrix<f64>>>,
    /// First global symbol id per worker.
    offsets: Vec<u64>,
    /// RLC: per-worker coding matrices. LT: global neighbor lists.
    bookkeeping: Bookkeeping,
    /// RLC: rows needed. LT: symbol target (peeling may finish earlier).
    threshold: u64,
}

enum Bookkeeping {
    Rlc(Vec<Option<RlcBlock<f64>>>),
    Lt { neighbors: Vec<Vec<u32>>, source_count: usize },
}

fn encode(a: &DenseMatrix<f64>, spec: &JobSpec, rng: &mut Substream) -> Result<Encoded> {
    let loads = &spec.allocation.loads;
    let mut offsets = Vec::with_capacity(loads.len());
    let mut acc = 0u64;
    for load in loads {
        offsets.push(acc);
        acc += load;
    }
    match &spec.coding {
        JobCoding::Rlc => {
            if spec.allocation.rows_required != a.rows() as u64 {
                return Err(Error::Dimension(format!(
                    "allocation decodes at {} rows but the matrix has {}",
                    spec.allocation.rows_required,
                    a.rows()
                )));
            }
            let blocks = rlc_encode(a, loads, rng)?;
            let mut per_worker: Vec<Option<RlcBlock<f64>>> = (0..loads.len()).map(|_| None).collect();
            let mut worker_rows: Vec<Option<DenseMatrix<f64>>> =
                (0..loads.len()).map(|_| None).collect();
            for block in blocks {
                let worker = block.worker;
                worker_rows[worker] = Some(block.coded.clone());
                per_worker[worker] = Some(block);
            }
            Ok(Encoded {
                worker_rows,
                offsets,
                bookkeeping: Bookkeeping::Rlc(per_worker),
                threshold: a.rows() as u64,
            })
        }
        JobCoding::Lt(code) => {
            if code.source_symbols() != a.rows() {
                return Err(Error::Dimension(format!(
                    "LT code is for {} source rows, matrix has {}",
                    code.source_symbols(),
                    a.rows()
                )));
            }
            let total: u64 = loads.iter().sum();
            let symbols = lt_encode(a, total as usize, code, rng)?;
            let mut neighbors = Vec::with_capacity(symbols.len());
            let mut worker_rows: Vec<Option<DenseMatrix<f64>>> =
                (0..loads.len()).map(|_| None).collect();
            let mut cursor = 0usize;
            for (worker, &load) in loads.iter().enumerate() {
                if load == 0 {
                    continue;
                }
                let mut data = Vec::with_capacity(load as usize * a.cols());
                for symbol in &symbols[cursor..cursor + load as usize] {
                    data.extend_from_slice(&symbol.value);
                }
                worker_rows[worker] = Some(DenseMatrix::new(load as usize, a.cols(), data)?);
                cursor += load as usize;
            }
            for symbol in symbols {
                neighbors.push(symbol.neighbors);
            }
            Ok(Encoded {
                worker_rows,
                offsets,
                bookkeeping: Bookkeeping::Lt { neighbors, source_count: a.rows() },
                threshold: code.target_symbols() as u64,
            })
        }
    }
}

fn compute_block(rows: &DenseMatrix<f64>, x: &[f64]) -> (Vec<f64>, f64) {
    let start = Instant::now();
    let values = rows.matvec(x).expect("worker block matches the input length");
    (values, start.elapsed().as_secs_f64())
}

fn run_concurrent(
    worker_rows: &[Option<DenseMatrix<f64>>],
    input: &Arc<Vec<f64>>,
    straggler_mask: &[bool],
    straggler: &StragglerModel<f64>,
) -> Vec<WorkerResult> {
    let (result_tx, result_rx) = mpsc::channel::<WorkerResult>();
    let mut broadcast_txs = Vec::new();
    let mut handles = Vec::new();
    let mut expected = 0usize;
    for (worker, rows) in worker_rows.iter().enumerate() {
        let Some(rows) = rows else { continue };
        expected += 1;
        let rows = rows.clone();
        let slow = straggler_mask[worker];
        let slowdown = straggler.slowdown();
        let tx = result_tx.clone();
        let (bcast_tx, bcast_rx) = mpsc::channel::<WorkerMessage>();
        broadcast_txs.push(bcast_tx);
        handles.push(std::thread::spawn(move || {
            let WorkerMessage::Broadcast(x) = bcast_rx.recv().expect("master broadcasts input");
            let (values, compute_seconds) = compute_block(&rows, &x);
            if slow && slowdown > 1.0 {
                std::thread::sleep(std::time::Duration::from_secs_f64(
                    (slowdown - 1.0) * compute_seconds,
                ));
            }
            let _ = tx.send(WorkerResult { worker, values, compute_seconds });
        }));
    }
    drop(result_tx);
    for tx in &broadcast_txs {
        let _ = tx.send(WorkerMessage::Broadcast(Arc::clone(input)));
    }
    let mut results = Vec::with_capacity(expected);
    for _ in 0..expected {
        results.push(result_rx.recv().expect("worker sends one result"));
    }
    for handle in handles {
        let _ = handle.join();
    }
    results
}

fn run_virtual(
    worker_rows: &[Option<DenseMatrix<f64>>],
    input: &Arc<Vec<f64>>,
) -> Vec<WorkerResult> {
    let mut results = Vec::new();
    for (worker, rows) in worker_rows.iter().enumerate() {
        let Some(rows) = rows else { continue };
        let (values, compute_seconds) = compute_block(rows, input);
        results.push(WorkerResult { worker, values, compute_seconds });
    }
    results
}

struct Decoded {
    result: Option<Vec<f64>>,
    wait_seconds: f64,
    rows_received: u64,
    decode_wall_seconds: f64,
}

/// Walks worker results in seeded-clock order and decodes at the first
/// decodable prefix.
fn consume_and_decode(
    encoded: &Encoded,
    worker_times: &[Option<f64>],
    results: &[WorkerResult],
) -> Result<Decoded> {
    let mut by_worker: Vec<Option<&WorkerResult>> = vec![None; worker_times.len()];
    for r in results {
        by_worker[r.worker] = Some(r);
    }
    let mut order: Vec<usize> = (0..worker_times.len())
        .filter(|&w| worker_times[w].is_some())
        .collect();
    order.sort_by(|&a, &b| {
        worker_times[a]
            .partial_cmp(&worker_times[b])
            .expect("finite times")
            .then(a.cmp(&b))
    });

    match &encoded.bookkeeping {
        Bookkeeping::Rlc(blocks) => {
            let needed = encoded.threshold as usize;
            let mut coding_rows: Vec<f64> = Vec::with_capacity(needed * needed);
            let mut values: Vec<f64> = Vec::with_capacity(needed);
            let mut received = 0u64;
            let mut wait = f64::NAN;
            for &worker in &order {
                let result = by_worker[worker].expect("loaded worker reported");
                let block = blocks[worker].as_ref().expect("loaded worker has a block");
                let take = (needed - values.len()).min(result.values.len());
                for i in 0..take {
                    coding_rows.extend_from_slice(block.coding.row(i));
                }
                values.extend_from_slice(&result.values[..take]);
                received += result.values.len() as u64;
                if values.len() == needed {
                    wait = worker_times[worker].expect("ordered worker has a time");
                    break;
                }
            }
            if values.len() < needed {
                return Ok(Decoded {
                    result: None,
                    wait_seconds: f64::NAN,
                    rows_received: received,
                    decode_wall_seconds: 0.0,
                });
            }
            let system = DenseMatrix::new(needed, needed, coding_rows)?;
            let started = Instant::now();
            let solution = crate::coding::solve_dense(system, values)?;
            Ok(Decoded {
                result: Some(solution),
                wait_seconds: wait,
                rows_received: received,
                decode_wall_seconds: started.elapsed().as_secs_f64(),
            })
        }
        Bookkeeping::Lt { neighbors, source_count } => {
            let mut decoder: PeelDecoder<f64> = PeelDecoder::new(*source_count);
            let mut decode_wall = 0.0f64;
            let mut wait = f64::NAN;
            let mut complete = false;
            'workers: for &worker in &order {
                let result = by_worker[worker].expect("loaded worker reported");
                let offset = encoded.offsets[worker] as usize;
                for (i, value) in result.values.iter().enumerate() {
                    let symbol = LtSymbol {
                        neighbors: neighbors[offset + i].clone(),
                        value: vec![*value],
                    };
                    let started = Instant::now();
                    decoder.push(&symbol)?;
                    decode_wall += started.elapsed().as_secs_f64();
                    if decoder.is_complete() {
                        wait = worker_times[worker].expect("ordered worker has a time");
                        complete = true;
                        break 'workers;
                    }
                }
            }
            let consumed = decoder.consumed() as u64;
            let outcome = decoder.finish();
            if !complete {
                return Ok(Decoded {
                    result: None,
                    wait_seconds: f64::NAN,
                    rows_received: consumed,
                    decode_wall_seconds: decode_wall,
                });
            }
            let result = outcome
                .recovered
                .into_iter()
                .map(|v| v.expect("complete decode has every source")[0])
                .collect();
            Ok(Decoded {
                result: Some(result),
                wait_seconds: wait,
                rows_received: consumed,
                decode_wall_seconds: decode_wall,
            })
        }
    }
}
