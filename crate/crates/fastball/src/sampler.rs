//! The Markov chain over the space of degree-matched bipartite graphs:
//! repeated trades on random top-node pairs, and streaming of samples.
//!
//! Every sample gets its own RNG stream derived from `(seed, sample index)`,
//! so sampling is reproducible no matter how samples are scheduled across
//! threads.

use std::fmt;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use thiserror::Error;

use crate::graph::BipartiteGraph;
use crate::trade::{Algorithm, Trader};

/// The deterministic, portable RNG used by every randomized code path. PCG
/// keeps the shuffle cost from drowning the kernels it drives.
pub type SampleRng = Pcg64Mcg;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SamplerError {
    #[error("trading needs at least two top nodes, graph has {0}")]
    TooFewTopNodes(usize),
}

/// Error from a sample stream: either the sampler itself failed or the
/// consumer refused a sample (which aborts the remaining samples).
#[derive(Debug)]
pub enum StreamError<E> {
    Sampler(SamplerError),
    Consumer(E),
}

impl<E> From<SamplerError> for StreamError<E> {
    fn from(e: SamplerError) -> Self {
        StreamError::Sampler(e)
    }
}

impl<E: fmt::Display> fmt::Display for StreamError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::Sampler(e) => write!(f, "{e}"),
            StreamError::Consumer(e) => write!(f, "consumer error: {e}"),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> std::error::Error for StreamError<E> {}

/// Number of trades that mixes the chain in practice: five per top node.
pub fn default_trades(top_count: usize) -> u64 {
    5 * top_count as u64
}

/// How one sampling run behaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Trades per sample; `None` means [`default_trades`] of the graph.
    pub trades_per_sample: Option<u64>,
    /// Restart the chain from the observed graph for every sample (default),
    /// or keep walking one chain and emit it every `trades_per_sample` trades.
    pub chain: bool,
}

impl SamplerConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            algorithm: Algorithm::Fastball,
            seed,
            trades_per_sample: None,
            chain: false,
        }
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_trades(mut self, trades: Option<u64>) -> Self {
        self.trades_per_sample = trades;
        self
    }

    pub fn resolved_trades(&self, top_count: usize) -> u64 {
        self.trades_per_sample
            .unwrap_or_else(|| default_trades(top_count))
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the RNG stream for one sample index. Splitmix-style mixing keeps
/// streams decorrelated and independent of scheduling.
pub fn derive_stream_seed(master_seed: u64, stream: u64) -> u64 {
    splitmix64(master_seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform unordered pair of distinct top nodes.
fn random_pair<R: Rng + ?Sized>(top_count: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.gen_range(0..top_count);
    let mut j = rng.gen_range(0..top_count - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Run `trades` trades on the graph in place, reusing the trader's buffers.
pub fn randomize_in_place<R: Rng + ?Sized>(
    graph: &mut BipartiteGraph,
    trades: u64,
    trader: &mut Trader,
    rng: &mut R,
) -> Result<(), SamplerError> {
    if trades == 0 {
        return Ok(());
    }
    let n = graph.top_count();
    if n < 2 {
        return Err(SamplerError::TooFewTopNodes(n));
    }
    for _ in 0..trades {
        let (i, j) = random_pair(n, rng);
        trader.trade_pair(graph, i, j, rng);
    }
    #[cfg(debug_assertions)]
    graph.debug_check_invariants();
    Ok(())
}

/// Copy the graph and run `trades` trades on the copy.
pub fn randomize(
    graph: &BipartiteGraph,
    trades: u64,
    config: &SamplerConfig,
) -> Result<BipartiteGraph, SamplerError> {
    let mut out = graph.clone();
    let mut trader = Trader::new(config.algorithm);
    let mut rng = SampleRng::seed_from_u64(config.seed);
    randomize_in_place(&mut out, trades, &mut trader, &mut rng)?;
    Ok(out)
}

/// What a finished stream did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSummary {
    pub samples: u64,
    pub trades_per_sample: u64,
}

/// Draw `count` samples and hand each to `consumer` in index order; samples
/// are never all held in memory. In restart mode (the default) every sample
/// is an independent chain from the observed graph under its own derived RNG
/// stream; in chain mode one chain keeps walking and is emitted every
/// `trades_per_sample` trades.
///
/// A consumer error aborts the remaining samples.
pub fn sample_stream<F, E>(
    graph: &BipartiteGraph,
    count: u64,
    config: &SamplerConfig,
    mut consumer: F,
) -> Result<StreamSummary, StreamError<E>>
where
    F: FnMut(u64, &BipartiteGraph) -> Result<(), E>,
{
    let trades = config.resolved_trades(graph.top_count());
    let mut trader = Trader::new(config.algorithm);
    let mut current = graph.clone();

    if config.chain {
        let mut rng = SampleRng::seed_from_u64(derive_stream_seed(config.seed, 0));
        for index in 0..count {
            randomize_in_place(&mut current, trades, &mut trader, &mut rng)?;
            consumer(index, &current).map_err(StreamError::Consumer)?;
        }
    } else {
        for index in 0..count {
            current.clone_from(graph);
            let mut rng = SampleRng::seed_from_u64(derive_stream_seed(config.seed, index));
            randomize_in_place(&mut current, trades, &mut trader, &mut rng)?;
            consumer(index, &current).map_err(StreamError::Consumer)?;
        }
    }
    Ok(StreamSummary {
        samples: count,
        trades_per_sample: trades,
    })
}

/// Restart-mode iteration over an explicit range of sample indices, for
/// callers that partition the index space across threads. The produced
/// samples are identical to the ones [`sample_stream`] hands out for the
/// same indices.
pub fn for_each_sample<F>(
    graph: &BipartiteGraph,
    indices: Range<u64>,
    config: &SamplerConfig,
    mut visit: F,
) -> Result<(), SamplerError>
where
    F: FnMut(u64, &BipartiteGraph),
{
    let trades = config.resolved_trades(graph.top_count());
    let mut trader = Trader::new(config.algorithm);
    let mut current = graph.clone();
    for index in indices {
        current.clone_from(graph);
        let mut rng = SampleRng::seed_from_u64(derive_stream_seed(config.seed, index));
        randomize_in_place(&mut current, trades, &mut trader, &mut rng)?;
        visit(index, &current);
    }
    Ok(())
}
