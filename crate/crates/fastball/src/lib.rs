//! Uniform sampling of bipartite graphs with fixed degree sequences.
//!
//! The sampler walks the space of degree-matched graphs with trades between
//! random top-node pairs, using either the classic curveball kernel or the
//! fastball kernel, which assembles its outputs in sorted order and avoids
//! curveball's per-trade sorts. On top of the sampler sit a fixed degree
//! sequence model (FDSM) backbone extractor for bipartite projections, an
//! exhaustive-enumeration oracle with an empirical uniformity battery, and a
//! benchmark harness comparing the two kernels.

pub mod bench;
pub mod enumerate;
pub mod fdsm;
pub mod graph;
pub mod io;
pub mod sampler;
pub mod stats;
pub mod trade;
pub mod verify;

pub use graph::{BipartiteGraph, CanonicalKey, DegreeSequences, GraphError};
pub use sampler::{default_trades, SampleRng, SamplerConfig};
pub use trade::{Algorithm, TradeOutcome, Trader, VictoryVector};
