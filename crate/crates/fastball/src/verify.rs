//! Empirical uniformity battery: enumerate a small degree-sequence space,
//! sample it, and chi-square test the sample frequencies against the uniform
//! law. This is the testable stand-in for the uniformity proof the trade
//! algorithms inherit.

use std::collections::HashMap;

use thiserror::Error;

use crate::enumerate::enumerate_space;
use crate::graph::{BipartiteGraph, DegreeSequences, GraphError};
use crate::sampler::{sample_stream, SamplerConfig, SamplerError, StreamError};
use crate::stats::chi_square_uniform_gof;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("degree sequences {top:?} / {bottom:?} admit no graph")]
    EmptySpace { top: Vec<usize>, bottom: Vec<usize> },
    #[error("sample {index} left the enumerated space; the chain is broken")]
    SampleOutsideSpace { index: u64 },
}

/// Outcome of one uniformity test.
#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub sequences: DegreeSequences,
    pub space_size: usize,
    pub samples: u64,
    pub trades_per_sample: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub significance: f64,
    pub pass: bool,
}

/// Enumerate the space of `sequences`, draw `samples` chains from its first
/// graph, and test the outcome frequencies against uniform at the given
/// significance. Fails (`pass = false`) when the goodness-of-fit p-value
/// drops below `significance`.
pub fn uniformity_test(
    sequences: &DegreeSequences,
    samples: u64,
    significance: f64,
    config: &SamplerConfig,
) -> Result<UniformityReport, VerifyError> {
    let space = enumerate_space(sequences)?;
    if space.is_empty() {
        return Err(VerifyError::EmptySpace {
            top: sequences.top.clone(),
            bottom: sequences.bottom.clone(),
        });
    }

    let positions: HashMap<_, _> = space
        .iter()
        .enumerate()
        .map(|(idx, g)| (g.canonical_key(), idx))
        .collect();
    let start: &BipartiteGraph = &space[0];
    let mut counts = vec![0u64; space.len()];

    let outcome = sample_stream(start, samples, config, |index, sample| {
        match positions.get(&sample.canonical_key()) {
            Some(&idx) => {
                counts[idx] += 1;
                Ok(())
            }
            None => Err(VerifyError::SampleOutsideSpace { index }),
        }
    });
    let trades_per_sample = match outcome {
        Ok(summary) => summary.trades_per_sample,
        Err(StreamError::Sampler(e)) => return Err(e.into()),
        Err(StreamError::Consumer(e)) => return Err(e),
    };

    let (statistic, p_value) = if space.len() == 1 {
        // A singleton space is trivially uniform.
        (0.0, 1.0)
    } else {
        let gof = chi_square_uniform_gof(&counts);
        (gof.statistic, gof.p_value)
    };
    Ok(UniformityReport {
        sequences: sequences.clone(),
        space_size: space.len(),
        samples,
        trades_per_sample,
        statistic,
        p_value,
        significance,
        pass: p_value >= significance,
    })
}

/// The default battery: spaces of 2, 6, 10, and 34 graphs, all inside the
/// enumeration guard. The third is the demo graph's degree-sequence space.
pub fn default_battery() -> Vec<DegreeSequences> {
    vec![
        DegreeSequences::new(vec![1, 1], vec![1, 1]),
        DegreeSequences::new(vec![2, 2, 2], vec![2, 2, 2]),
        DegreeSequences::new(vec![4, 3], vec![1, 1, 1, 1, 1, 2]),
        DegreeSequences::new(vec![2, 2, 1, 1], vec![2, 2, 1, 1]),
    ]
}
