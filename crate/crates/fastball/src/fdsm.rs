//! Fixed degree sequence model backbone extraction: bipartite projection,
//! Monte Carlo null edge-weight tallies, two-tailed significance, and the
//! signed backbone.
//!
//! The null distribution of an edge's projected weight is approximated by
//! sampling degree-matched bipartite graphs and counting, per top-node pair,
//! how many samples meet or exceed (and how many fall at or below) the
//! observed weight. Ties count in both tails.

use std::fs;
use std::io::{self, BufRead, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::BipartiteGraph;
use crate::io::LabeledGraph;
use crate::sampler::{for_each_sample, sample_stream, SamplerConfig, SamplerError, StreamError};
use crate::stats::inverse_normal_cdf;
use crate::trade::intersection_size;

#[derive(Debug, Error)]
pub enum FdsmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample graph does not match the observed dimensions and top degrees")]
    DegreeMismatch,
    #[error("cannot combine counts for {0} and {1} top nodes")]
    MergeMismatch(usize, usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SquareMatrix<T> {
    n: usize,
    cells: Vec<T>,
}

impl<T: Copy + Default> SquareMatrix<T> {
    fn new(n: usize) -> Self {
        Self {
            n,
            cells: vec![T::default(); n * n],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        self.cells[i * self.n + j]
    }

    #[inline]
    fn set_sym(&mut self, i: usize, j: usize, value: T) {
        self.cells[i * self.n + j] = value;
        self.cells[j * self.n + i] = value;
    }
}

/// Symmetric co-occurrence weight matrix over top nodes: entry (i, j) is the
/// number of bottom nodes adjacent to both i and j; the diagonal carries the
/// top degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    weights: SquareMatrix<u32>,
}

impl Projection {
    pub fn top_count(&self) -> usize {
        self.weights.n
    }

    pub fn weight(&self, i: usize, j: usize) -> u32 {
        self.weights.get(i, j)
    }
}

/// Bipartite projection by sorted-merge intersection per top-node pair.
pub fn project(graph: &BipartiteGraph) -> Projection {
    let n = graph.top_count();
    let mut weights = SquareMatrix::new(n);
    for i in 0..n {
        weights.set_sym(i, i, graph.neighbors(i).len() as u32);
        for j in i + 1..n {
            let w = intersection_size(graph.neighbors(i), graph.neighbors(j)) as u32;
            weights.set_sym(i, j, w);
        }
    }
    Projection { weights }
}

/// Per-pair tallies of sampled projection weights that tie or beat the
/// observed weight in either direction. Ties increment both tails, so
/// `ge + le >= samples_seen` everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullCounts {
    samples_seen: u64,
    ge: SquareMatrix<u64>,
    le: SquareMatrix<u64>,
}

impl NullCounts {
    pub fn new(top_count: usize) -> Self {
        Self {
            samples_seen: 0,
            ge: SquareMatrix::new(top_count),
            le: SquareMatrix::new(top_count),
        }
    }

    pub fn top_count(&self) -> usize {
        self.ge.n
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    pub fn ge(&self, i: usize, j: usize) -> u64 {
        self.ge.get(i, j)
    }

    pub fn le(&self, i: usize, j: usize) -> u64 {
        self.le.get(i, j)
    }

    /// Monte Carlo estimate of P(null weight >= observed). With `smooth`,
    /// the add-one variant (ge + 1) / (samples + 1).
    pub fn p_upper(&self, i: usize, j: usize, smooth: bool) -> f64 {
        if smooth {
            (self.ge.get(i, j) + 1) as f64 / (self.samples_seen + 1) as f64
        } else {
            self.ge.get(i, j) as f64 / self.samples_seen as f64
        }
    }

    /// Monte Carlo estimate of P(null weight <= observed).
    pub fn p_lower(&self, i: usize, j: usize, smooth: bool) -> f64 {
        if smooth {
            (self.le.get(i, j) + 1) as f64 / (self.samples_seen + 1) as f64
        } else {
            self.le.get(i, j) as f64 / self.samples_seen as f64
        }
    }

    /// Elementwise sum; merging is associative and commutative, so worker
    /// threads can tally privately and combine in any order.
    pub fn merge(&mut self, other: &NullCounts) -> Result<(), FdsmError> {
        if self.top_count() != other.top_count() {
            return Err(FdsmError::MergeMismatch(
                self.top_count(),
                other.top_count(),
            ));
        }
        self.samples_seen += other.samples_seen;
        for (a, b) in self.ge.cells.iter_mut().zip(&other.ge.cells) {
            *a += b;
        }
        for (a, b) in self.le.cells.iter_mut().zip(&other.le.cells) {
            *a += b;
        }
        Ok(())
    }
}

/// Tally one sample without validation; hot path of the extractor.
fn accumulate_pairwise(observed: &Projection, sample: &BipartiteGraph, counts: &mut NullCounts) {
    let n = observed.top_count();
    for i in 0..n {
        // The diagonal is the top degree, always a tie.
        let d = counts.ge.get(i, i) + 1;
        counts.ge.set_sym(i, i, d);
        let d = counts.le.get(i, i) + 1;
        counts.le.set_sym(i, i, d);
        for j in i + 1..n {
            let w = intersection_size(sample.neighbors(i), sample.neighbors(j)) as u32;
            let obs = observed.weight(i, j);
            if w >= obs {
                let c = counts.ge.get(i, j) + 1;
                counts.ge.set_sym(i, j, c);
            }
            if w <= obs {
                let c = counts.le.get(i, j) + 1;
                counts.le.set_sym(i, j, c);
            }
        }
    }
    counts.samples_seen += 1;
}

/// Compare one sampled graph against the observed projection and update the
/// tallies. The sample must have the observed dimensions and top degrees
/// (the projection carries them on its diagonal).
pub fn accumulate_null(
    observed: &Projection,
    sample: &BipartiteGraph,
    counts: &mut NullCounts,
) -> Result<(), FdsmError> {
    let n = observed.top_count();
    if sample.top_count() != n || counts.top_count() != n {
        return Err(FdsmError::DegreeMismatch);
    }
    for i in 0..n {
        if sample.neighbors(i).len() as u32 != observed.weight(i, i) {
            return Err(FdsmError::DegreeMismatch);
        }
    }
    accumulate_pairwise(observed, sample, counts);
    Ok(())
}

/// Monte Carlo samples needed to test an edge's null-model p-value against
/// `alpha` at the given power.
///
/// This is the normal-approximation sample size for a one-sided comparison of
/// two proportions with unpooled variances,
/// `n = ((z_{1-alpha} + z_{power})^2 (p1 q1 + p2 q2)) / (p1 - p2)^2`,
/// powered to resolve a 5% relative departure of the p-value from the
/// threshold: p1 = alpha and p2 = 1.05 alpha (flipped to 0.95 alpha for the
/// rare alphas where 1.05 alpha is not a probability). The constants are this
/// crate's convention; the literature fixes no single choice.
pub fn required_samples(alpha: f64, power: f64) -> Result<u64, FdsmError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FdsmError::InvalidParameter(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if !(power > 0.0 && power < 1.0) {
        return Err(FdsmError::InvalidParameter(format!(
            "power must be in (0, 1), got {power}"
        )));
    }
    let p1 = alpha;
    let p2 = if 1.05 * alpha < 1.0 {
        1.05 * alpha
    } else {
        0.95 * alpha
    };
    let z_alpha = inverse_normal_cdf(1.0 - alpha);
    let z_power = inverse_normal_cdf(power);
    let variance = p1 * (1.0 - p1) + p2 * (1.0 - p2);
    let diff = p1 - p2;
    let n = (z_alpha + z_power).powi(2) * variance / (diff * diff);
    Ok(n.ceil() as u64)
}

/// Signed adjacency over top nodes: +1 where the observed weight is
/// significantly larger than the null, -1 where significantly smaller,
/// 0 elsewhere (including the whole diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    signs: SquareMatrix<i8>,
    alpha: f64,
    samples: u64,
    smooth: bool,
}

impl Backbone {
    /// Apply the per-tail decision rule: sign +1 iff p_upper < alpha/2,
    /// -1 iff p_lower < alpha/2.
    pub fn from_counts(counts: &NullCounts, alpha: f64, smooth: bool) -> Result<Self, FdsmError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(FdsmError::InvalidParameter(format!(
                "alpha must be in (0, 1), got {alpha}"
            )));
        }
        if counts.samples_seen == 0 {
            return Err(FdsmError::InvalidParameter(
                "cannot sign a backbone from zero samples".into(),
            ));
        }
        let n = counts.top_count();
        let mut signs = SquareMatrix::new(n);
        for i in 0..n {
            for j in i + 1..n {
                let sign = if counts.p_upper(i, j, smooth) < alpha / 2.0 {
                    1
                } else if counts.p_lower(i, j, smooth) < alpha / 2.0 {
                    -1
                } else {
                    0
                };
                signs.set_sym(i, j, sign);
            }
        }
        Ok(Self {
            signs,
            alpha,
            samples: counts.samples_seen,
            smooth,
        })
    }

    pub fn top_count(&self) -> usize {
        self.signs.n
    }

    pub fn sign(&self, i: usize, j: usize) -> i8 {
        self.signs.get(i, j)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn smooth(&self) -> bool {
        self.smooth
    }

    /// Significant pairs (i < j) with their signs.
    pub fn significant_edges(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        let n = self.signs.n;
        (0..n).flat_map(move |i| {
            (i + 1..n).filter_map(move |j| {
                let s = self.signs.get(i, j);
                (s != 0).then_some((i, j, s))
            })
        })
    }
}

/// Checkpointing of long accumulation runs.
#[derive(Debug, Clone)]
pub struct CheckpointConfig {
    pub path: PathBuf,
    /// Write the counts every this many samples.
    pub interval: u64,
}

pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 10_000;

/// How a backbone extraction runs.
#[derive(Debug, Clone)]
pub struct BackboneConfig {
    pub alpha: f64,
    pub samples: u64,
    pub smooth: bool,
    pub threads: usize,
    pub checkpoint: Option<CheckpointConfig>,
}

impl BackboneConfig {
    pub fn new(alpha: f64, samples: u64) -> Self {
        Self {
            alpha,
            samples,
            smooth: false,
            threads: 1,
            checkpoint: None,
        }
    }
}

/// A finished extraction: the signed backbone plus the tallies it was signed
/// from, so every decision can be re-checked.
#[derive(Debug, Clone)]
pub struct BackboneRun {
    pub backbone: Backbone,
    pub counts: NullCounts,
}

/// Fingerprint of a graph's full adjacency structure, stored in checkpoints
/// so a resumed run cannot silently continue against a different graph.
pub fn graph_fingerprint(graph: &BipartiteGraph) -> u64 {
    fn mix(h: u64, v: u64) -> u64 {
        let mut z = (h ^ v).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut h = mix(graph.top_count() as u64, graph.bottom_count() as u64);
    for i in 0..graph.top_count() {
        h = mix(h, graph.neighbors(i).len() as u64);
        for &v in graph.neighbors(i) {
            h = mix(h, v as u64);
        }
    }
    h
}

/// Full FDSM pipeline: stream `config.samples` degree-matched samples,
/// tally them against the observed projection, and sign the backbone.
/// Deterministic for a given sampler seed, independent of `threads`.
pub fn extract_backbone(
    graph: &BipartiteGraph,
    sampler: &SamplerConfig,
    config: &BackboneConfig,
) -> Result<BackboneRun, FdsmError> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(FdsmError::InvalidParameter(format!(
            "alpha must be in (0, 1), got {}",
            config.alpha
        )));
    }
    if config.samples == 0 {
        return Err(FdsmError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    if sampler.chain && config.checkpoint.is_some() {
        return Err(FdsmError::Checkpoint(
            "checkpointing requires restart-mode sampling (chain state is not persisted)".into(),
        ));
    }

    let n = graph.top_count();
    let observed = project(graph);
    let fingerprint = graph_fingerprint(graph);
    let mut counts = NullCounts::new(n);
    let mut next_index = 0u64;

    if let Some(cp) = &config.checkpoint {
        if cp.path.exists() {
            let (loaded, fp) = read_checkpoint_file(&cp.path)?;
            if fp != fingerprint {
                return Err(FdsmError::Checkpoint(format!(
                    "{} was written for a different observed graph",
                    cp.path.display()
                )));
            }
            if loaded.samples_seen() > config.samples {
                return Err(FdsmError::Checkpoint(format!(
                    "{} already holds {} samples, run asked for {}",
                    cp.path.display(),
                    loaded.samples_seen(),
                    config.samples
                )));
            }
            next_index = loaded.samples_seen();
            counts = loaded;
        }
    }

    if sampler.chain {
        let remaining = config.samples - next_index;
        let outcome = sample_stream(graph, remaining, sampler, |_, sample| {
            accumulate_pairwise(&observed, sample, &mut counts);
            Ok::<(), std::convert::Infallible>(())
        });
        match outcome {
            Ok(_) => {}
            Err(StreamError::Sampler(e)) => return Err(e.into()),
            Err(StreamError::Consumer(e)) => match e {},
        }
    } else {
        let block = config
            .checkpoint
            .as_ref()
            .map_or(config.samples, |cp| cp.interval.max(1));
        while next_index < config.samples {
            let block_end = (next_index + block).min(config.samples);
            run_block(
                graph,
                &observed,
                sampler,
                config.threads.max(1),
                next_index..block_end,
                &mut counts,
            )?;
            next_index = block_end;
            if let Some(cp) = &config.checkpoint {
                write_checkpoint_file(&cp.path, &counts, fingerprint)?;
            }
        }
    }

    let backbone = Backbone::from_counts(&counts, config.alpha, config.smooth)?;
    Ok(BackboneRun { backbone, counts })
}

/// Accumulate one contiguous block of sample indices, fanning out across
/// worker threads that each own a private tally.
fn run_block(
    graph: &BipartiteGraph,
    observed: &Projection,
    sampler: &SamplerConfig,
    threads: usize,
    range: Range<u64>,
    counts: &mut NullCounts,
) -> Result<(), FdsmError> {
    let len = range.end - range.start;
    if threads <= 1 || len < 2 {
        for_each_sample(graph, range, sampler, |_, sample| {
            accumulate_pairwise(observed, sample, counts);
        })?;
        return Ok(());
    }

    let chunk = len.div_ceil(threads as u64);
    let n = observed.top_count();
    let worker_counts: Vec<Result<NullCounts, SamplerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads as u64)
            .filter_map(|t| {
                let start = range.start + t * chunk;
                if start >= range.end {
                    return None;
                }
                let end = (start + chunk).min(range.end);
                Some(scope.spawn(move || {
                    let mut local = NullCounts::new(n);
                    for_each_sample(graph, start..end, sampler, |_, sample| {
                        accumulate_pairwise(observed, sample, &mut local);
                    })?;
                    Ok(local)
                }))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("accumulation worker panicked"))
            .collect()
    });
    for local in worker_counts {
        counts.merge(&local?)?;
    }
    Ok(())
}

/// Synthetic polarized fixture: two blocks of `tops_per_block` top nodes,
/// each block drawing every top node's `degree` neighbors from its own
/// private pool of `pool_size` bottom nodes.
pub fn two_block_fixture(
    tops_per_block: usize,
    pool_size: usize,
    degree: usize,
    seed: u64,
) -> BipartiteGraph {
    assert!(degree <= pool_size, "block pool must cover the degree");
    use rand::SeedableRng;
    let mut rng = crate::sampler::SampleRng::seed_from_u64(seed);
    let mut adj = Vec::with_capacity(2 * tops_per_block);
    for block in 0..2u32 {
        let base = block * pool_size as u32;
        for _ in 0..tops_per_block {
            let mut picks: Vec<u32> = rand::seq::index::sample(&mut rng, pool_size, degree)
                .iter()
                .map(|offset| base + offset as u32)
                .collect();
            picks.sort_unstable();
            adj.push(picks);
        }
    }
    BipartiteGraph::from_adjacency(adj, 2 * pool_size)
        .expect("fixture lists are sorted and in range")
}

const CHECKPOINT_MAGIC: &str = "fastball-null-counts v1";

/// Serialize the tallies with a magic header and the observed-graph
/// fingerprint. Plain text, stable within this major version.
pub fn write_checkpoint<W: Write>(
    mut writer: W,
    counts: &NullCounts,
    fingerprint: u64,
) -> io::Result<()> {
    writeln!(writer, "{CHECKPOINT_MAGIC}")?;
    writeln!(writer, "n {}", counts.top_count())?;
    writeln!(writer, "samples {}", counts.samples_seen)?;
    writeln!(writer, "fingerprint {fingerprint:016x}")?;
    for matrix in [&counts.ge, &counts.le] {
        for i in 0..counts.top_count() {
            let row: Vec<String> = (0..counts.top_count())
                .map(|j| matrix.get(i, j).to_string())
                .collect();
            writeln!(writer, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

/// Inverse of [`write_checkpoint`].
pub fn read_checkpoint<R: BufRead>(reader: R) -> Result<(NullCounts, u64), FdsmError> {
    let bad = |msg: &str| FdsmError::Checkpoint(msg.to_string());
    let mut lines = reader.lines();
    let mut next = move || -> Result<String, FdsmError> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(FdsmError::Io)
    };

    if next()? != CHECKPOINT_MAGIC {
        return Err(bad("not a fastball null-counts checkpoint (bad magic)"));
    }
    let field = |line: String, key: &str| -> Result<String, FdsmError> {
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| FdsmError::Checkpoint(format!("expected `{key} ...` line")))
    };
    let n: usize = field(next()?, "n")?
        .parse()
        .map_err(|_| bad("unreadable n"))?;
    let samples: u64 = field(next()?, "samples")?
        .parse()
        .map_err(|_| bad("unreadable samples"))?;
    let fingerprint = u64::from_str_radix(&field(next()?, "fingerprint")?, 16)
        .map_err(|_| bad("unreadable fingerprint"))?;

    let mut counts = NullCounts::new(n);
    counts.samples_seen = samples;
    for section in 0..2 {
        for i in 0..n {
            let line = next()?;
            let mut row = Vec::with_capacity(n);
            for token in line.split_whitespace() {
                row.push(token.parse::<u64>().map_err(|_| bad("unreadable count"))?);
            }
            if row.len() != n {
                return Err(bad("count row has the wrong number of entries"));
            }
            let matrix = if section == 0 {
                &mut counts.ge
            } else {
                &mut counts.le
            };
            for (j, v) in row.into_iter().enumerate() {
                matrix.cells[i * n + j] = v;
            }
        }
    }
    Ok((counts, fingerprint))
}

/// Write a checkpoint atomically (temp file + rename).
pub fn write_checkpoint_file(
    path: &Path,
    counts: &NullCounts,
    fingerprint: u64,
) -> Result<(), FdsmError> {
    let tmp = path.with_extension("tmp");
    let mut file = io::BufWriter::new(fs::File::create(&tmp)?);
    write_checkpoint(&mut file, counts, fingerprint)?;
    file.flush()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint_file(path: &Path) -> Result<(NullCounts, u64), FdsmError> {
    read_checkpoint(io::BufReader::new(fs::File::open(path)?))
}

/// Write the significant edges as `top_1 top_2 sign p_upper p_lower` lines.
pub fn write_backbone_edges<W: Write>(
    mut writer: W,
    backbone: &Backbone,
    counts: &NullCounts,
    labels: &LabeledGraph,
) -> io::Result<()> {
    let smooth = backbone.smooth();
    for (i, j, sign) in backbone.significant_edges() {
        writeln!(
            writer,
            "{} {} {:+} {} {}",
            labels.top_label(i),
            labels.top_label(j),
            sign,
            counts.p_upper(i, j, smooth),
            counts.p_lower(i, j, smooth),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_space;
    use crate::trade::Algorithm;

    fn demo_graph() -> BipartiteGraph {
        BipartiteGraph::from_edge_list(
            &[(0, 0), (0, 2), (0, 4), (0, 5), (1, 1), (1, 3), (1, 5)],
            2,
            6,
        )
        .unwrap()
    }

    #[test]
    fn projection_of_demo_graph() {
        let p = project(&demo_graph());
        assert_eq!(p.weight(0, 1), 1); // bottom node 5 is the only shared neighbor
        assert_eq!(p.weight(1, 0), 1);
        assert_eq!(p.weight(0, 0), 4);
        assert_eq!(p.weight(1, 1), 3);
    }

    #[test]
    fn projection_extremes() {
        let same = BipartiteGraph::from_adjacency(vec![vec![0, 1, 2], vec![0, 1, 2]], 3).unwrap();
        assert_eq!(project(&same).weight(0, 1), 3);
        let disjoint = BipartiteGraph::from_adjacency(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert_eq!(project(&disjoint).weight(0, 1), 0);
    }

    #[test]
    fn projection_is_permutation_equivariant() {
        let g =
            BipartiteGraph::from_adjacency(vec![vec![0, 1, 4], vec![1, 2], vec![0, 2, 3, 4]], 5)
                .unwrap();
        let p = project(&g);
        // Relabel tops by the cycle 0 -> 1 -> 2 -> 0.
        let perm = [1usize, 2, 0];
        let relabeled = BipartiteGraph::from_adjacency(
            {
                let mut adj = vec![Vec::new(); 3];
                for (i, &to) in perm.iter().enumerate() {
                    adj[to] = g.neighbors(i).to_vec();
                }
                adj
            },
            5,
        )
        .unwrap();
        let q = project(&relabeled);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.weight(i, j), q.weight(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn required_samples_matches_frozen_oracle() {
        // 168383 computed with an independent implementation of the same
        // closed form; 164710 is the reference count quoted for this setting
        // in the backbone literature, whose exact constants are unpublished.
        let n = required_samples(0.05, 0.95).unwrap();
        assert_eq!(n, 168_383);
        let reference = 164_710.0;
        assert!((n as f64 - reference).abs() <= 0.03 * reference);
    }

    #[test]
    fn required_samples_is_monotone() {
        let lo_power = required_samples(0.05, 0.9).unwrap();
        let hi_power = required_samples(0.05, 0.95).unwrap();
        assert!(hi_power > lo_power);
        let lo_alpha = required_samples(0.01, 0.95).unwrap();
        assert!(lo_alpha > hi_power);
    }

    #[test]
    fn required_samples_rejects_bad_parameters() {
        assert!(matches!(
            required_samples(0.0, 0.95),
            Err(FdsmError::InvalidParameter(_))
        ));
        assert!(matches!(
            required_samples(1.0, 0.95),
            Err(FdsmError::InvalidParameter(_))
        ));
        assert!(matches!(
            required_samples(0.05, 0.0),
            Err(FdsmError::InvalidParameter(_))
        ));
        assert!(matches!(
            required_samples(0.05, 1.0),
            Err(FdsmError::InvalidParameter(_))
        ));
    }

    #[test]
    fn accumulating_the_observed_graph_ties_both_tails() {
        let g = demo_graph();
        let obs = project(&g);
        let mut counts = NullCounts::new(2);
        accumulate_null(&obs, &g, &mut counts).unwrap();
        assert_eq!(counts.samples_seen(), 1);
        assert_eq!(counts.ge(0, 1), 1);
        assert_eq!(counts.le(0, 1), 1);
    }

    #[test]
    fn strictly_heavier_sample_bumps_only_ge() {
        let g = demo_graph(); // weight(0,1) = 1
        let obs = project(&g);
        // Same top degrees (4, 3), heavier overlap: shares 0 and 1.
        let heavy =
            BipartiteGraph::from_adjacency(vec![vec![0, 1, 2, 3], vec![0, 1, 4]], 6).unwrap();
        let mut counts = NullCounts::new(2);
        accumulate_null(&obs, &heavy, &mut counts).unwrap();
        assert_eq!(counts.ge(0, 1), 1);
        assert_eq!(counts.le(0, 1), 0);
    }

    #[test]
    fn accumulate_rejects_degree_mismatch() {
        let obs = project(&demo_graph());
        let wrong = BipartiteGraph::from_adjacency(vec![vec![0, 1], vec![2, 3, 4]], 6).unwrap();
        let mut counts = NullCounts::new(2);
        assert!(matches!(
            accumulate_null(&obs, &wrong, &mut counts),
            Err(FdsmError::DegreeMismatch)
        ));
    }

    #[test]
    fn exhaustive_accumulation_reproduces_exact_tail_counts() {
        let seq = crate::graph::DegreeSequences::new(vec![2, 2, 2], vec![2, 2, 2]);
        let space = enumerate_space(&seq).unwrap();
        assert_eq!(space.len(), 6);
        let observed_graph = space[0].clone();
        let obs = project(&observed_graph);

        let mut counts = NullCounts::new(3);
        for g in &space {
            accumulate_null(&obs, g, &mut counts).unwrap();
        }
        // Direct tail counts over the same space, written independently.
        for i in 0..3 {
            for j in i + 1..3 {
                let wo = obs.weight(i, j);
                let exact_ge = space
                    .iter()
                    .filter(|g| intersection_size(g.neighbors(i), g.neighbors(j)) as u32 >= wo)
                    .count() as u64;
                let exact_le = space
                    .iter()
                    .filter(|g| intersection_size(g.neighbors(i), g.neighbors(j)) as u32 <= wo)
                    .count() as u64;
                assert_eq!(counts.ge(i, j), exact_ge);
                assert_eq!(counts.le(i, j), exact_le);
                assert!(counts.ge(i, j) + counts.le(i, j) >= counts.samples_seen());
            }
        }
    }

    #[test]
    fn backbone_signs_follow_the_threshold_rule() {
        let mut counts = NullCounts::new(2);
        counts.samples_seen = 1000;
        counts.ge.set_sym(0, 1, 10); // p_upper = 0.01 < 0.025
        counts.le.set_sym(0, 1, 995);
        let b = Backbone::from_counts(&counts, 0.05, false).unwrap();
        assert_eq!(b.sign(0, 1), 1);
        assert_eq!(b.sign(0, 0), 0);

        counts.ge.set_sym(0, 1, 995);
        counts.le.set_sym(0, 1, 10);
        let b = Backbone::from_counts(&counts, 0.05, false).unwrap();
        assert_eq!(b.sign(0, 1), -1);

        counts.ge.set_sym(0, 1, 500);
        counts.le.set_sym(0, 1, 600);
        let b = Backbone::from_counts(&counts, 0.05, false).unwrap();
        assert_eq!(b.sign(0, 1), 0);
        assert_eq!(b.significant_edges().count(), 0);
    }

    #[test]
    fn degenerate_alpha_is_rejected() {
        let counts = NullCounts::new(2);
        assert!(matches!(
            Backbone::from_counts(&counts, 0.0, false),
            Err(FdsmError::InvalidParameter(_))
        ));
        let g = demo_graph();
        let cfg = BackboneConfig::new(0.0, 10);
        assert!(matches!(
            extract_backbone(&g, &SamplerConfig::new(0), &cfg),
            Err(FdsmError::InvalidParameter(_))
        ));
    }

    #[test]
    fn complete_bipartite_graph_signs_nothing() {
        // The space is a singleton: every sampled weight ties the observed.
        let complete =
            BipartiteGraph::from_adjacency(vec![vec![0, 1, 2], vec![0, 1, 2]], 3).unwrap();
        let run = extract_backbone(
            &complete,
            &SamplerConfig::new(5),
            &BackboneConfig::new(0.05, 50),
        )
        .unwrap();
        assert_eq!(run.backbone.sign(0, 1), 0);
        assert_eq!(run.counts.ge(0, 1), 50);
        assert_eq!(run.counts.le(0, 1), 50);
    }

    #[test]
    fn extraction_is_independent_of_thread_count() {
        let g = two_block_fixture(3, 5, 3, 12);
        let sampler = SamplerConfig::new(77).with_algorithm(Algorithm::Curveball);
        let mut single = BackboneConfig::new(0.05, 200);
        single.threads = 1;
        let mut multi = BackboneConfig::new(0.05, 200);
        multi.threads = 4;
        let a = extract_backbone(&g, &sampler, &single).unwrap();
        let b = extract_backbone(&g, &sampler, &multi).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.backbone, b.backbone);
    }

    #[test]
    fn fixture_has_the_advertised_shape() {
        let g = two_block_fixture(10, 50, 30, 3);
        assert_eq!(g.top_count(), 20);
        assert_eq!(g.bottom_count(), 100);
        let d = g.degrees();
        assert!(d.top.iter().all(|&t| t == 30));
        for i in 0..10 {
            assert!(g.neighbors(i).iter().all(|&v| v < 50));
        }
        for i in 10..20 {
            assert!(g.neighbors(i).iter().all(|&v| (50..100).contains(&v)));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = demo_graph();
        let obs = project(&g);
        let mut counts = NullCounts::new(2);
        for _ in 0..3 {
            accumulate_null(&obs, &g, &mut counts).unwrap();
        }
        let fp = graph_fingerprint(&g);
        let mut buffer = Vec::new();
        write_checkpoint(&mut buffer, &counts, fp).unwrap();
        let (reread, fp2) = read_checkpoint(buffer.as_slice()).unwrap();
        assert_eq!(reread, counts);
        assert_eq!(fp2, fp);
    }

    #[test]
    fn checkpoint_rejects_foreign_files() {
        assert!(matches!(
            read_checkpoint("not a checkpoint\n".as_bytes()),
            Err(FdsmError::Checkpoint(_))
        ));
    }

    #[test]
    fn fingerprints_separate_structures() {
        let a = demo_graph();
        let mut adj: Vec<Vec<u32>> = a.adjacency().to_vec();
        adj[1] = vec![1, 2, 3];
        let b = BipartiteGraph::from_adjacency(adj, 6).unwrap();
        assert_ne!(graph_fingerprint(&a), graph_fingerprint(&b));
        assert_eq!(graph_fingerprint(&a), graph_fingerprint(&demo_graph()));
    }
}
