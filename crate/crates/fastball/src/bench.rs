//! Running-time harness for the trade kernels: worst-case two-top-node
//! graphs, a fixed trade count, replicated wall-clock timings, CSV output.
//!
//! Only ratios and orderings between the algorithms are meaningful; absolute
//! times are machine-bound.

use std::io::{self, Write};
use std::time::Instant;

use rand::SeedableRng;
use thiserror::Error;

use crate::graph::BipartiteGraph;
use crate::sampler::{derive_stream_seed, randomize_in_place, SampleRng};
use crate::trade::{Algorithm, Trader};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Two top nodes, each adjacent to a unique half of the bottom nodes: the
/// intersection is empty, so every trade redistributes all `m` bottom nodes.
pub fn make_worst_case_graph(bottom_count: usize) -> Result<BipartiteGraph, BenchError> {
    if bottom_count < 2 || !bottom_count.is_multiple_of(2) {
        return Err(BenchError::InvalidParameter(format!(
            "worst-case graph needs an even bottom count of at least 2, got {bottom_count}"
        )));
    }
    let half = (bottom_count / 2) as u32;
    let adj = vec![
        (0..half).collect::<Vec<u32>>(),
        (half..bottom_count as u32).collect(),
    ];
    Ok(BipartiteGraph::from_adjacency(adj, bottom_count).expect("construction is valid"))
}

/// Timings of one (algorithm, m) cell.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub algorithm: Algorithm,
    pub bottom_count: usize,
    pub trades: u64,
    pub times_ns: Vec<u64>,
}

impl BenchResult {
    pub fn replications(&self) -> usize {
        self.times_ns.len()
    }

    pub fn mean_ns(&self) -> f64 {
        self.times_ns.iter().sum::<u64>() as f64 / self.times_ns.len() as f64
    }

    /// Sample standard deviation of the replication times.
    pub fn stddev_ns(&self) -> f64 {
        let n = self.times_ns.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_ns();
        let ss: f64 = self
            .times_ns
            .iter()
            .map(|&t| {
                let d = t as f64 - mean;
                d * d
            })
            .sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

/// Pin the calling thread to one logical core to cut scheduler noise out of
/// the timings. Best effort: unsupported platforms run unpinned.
fn pin_to_one_core() {
    #[cfg(target_os = "linux")]
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(0, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
}

/// Time `trades` trades on a fresh worst-case graph, `replications` times.
/// One warm-up replication runs first and is discarded. Each replication gets
/// a fixed RNG stream derived from (`seed`, replication index), shared across
/// algorithms so only the kernel differs. Only the trade loop is timed,
/// single-threaded and pinned to one core where the platform allows.
pub fn run_bench(
    algorithm: Algorithm,
    bottom_count: usize,
    trades: u64,
    replications: usize,
    seed: u64,
) -> Result<BenchResult, BenchError> {
    if replications == 0 {
        return Err(BenchError::InvalidParameter(
            "need at least one replication".into(),
        ));
    }
    pin_to_one_core();
    let mut times_ns = Vec::with_capacity(replications);
    let mut trader = Trader::new(algorithm);
    for rep in 0..=replications {
        let mut graph = make_worst_case_graph(bottom_count)?;
        let mut rng = SampleRng::seed_from_u64(derive_stream_seed(seed, rep as u64));

        let start = Instant::now();
        randomize_in_place(&mut graph, trades, &mut trader, &mut rng)
            .expect("worst-case graph has two top nodes");
        let elapsed = start.elapsed().as_nanos() as u64;

        // Spot-check outside the timed region: the evolved graph must still
        // satisfy the trade invariants.
        let degrees = graph.degrees();
        assert!(
            degrees.top == vec![bottom_count / 2; 2] && degrees.bottom == vec![1; bottom_count],
            "timed trades corrupted the degree sequences"
        );

        if rep > 0 {
            times_ns.push(elapsed);
        }
    }
    Ok(BenchResult {
        algorithm,
        bottom_count,
        trades,
        times_ns,
    })
}

/// Run both algorithms across the given bottom-node counts and stream the
/// raw replication times as CSV (`algorithm,m,rep,nanos`).
pub fn bench_sweep<W: Write>(
    m_values: &[usize],
    trades: u64,
    replications: usize,
    seed: u64,
    mut csv: W,
) -> Result<Vec<BenchResult>, BenchError> {
    writeln!(csv, "algorithm,m,rep,nanos")?;
    let mut results = Vec::with_capacity(2 * m_values.len());
    for &m in m_values {
        for algorithm in [Algorithm::Fastball, Algorithm::Curveball] {
            let result = run_bench(algorithm, m, trades, replications, seed)?;
            for (rep, nanos) in result.times_ns.iter().enumerate() {
                writeln!(csv, "{},{},{},{}", algorithm, m, rep, nanos)?;
            }
            results.push(result);
        }
    }
    Ok(results)
}
