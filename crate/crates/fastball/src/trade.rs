//! The two trade primitives that drive the Markov chain: curveball and
//! fastball.
//!
//! Both redistribute the symmetric difference of two sorted neighbor lists
//! while keeping the shared part. Curveball shuffles the symmetric difference
//! itself and re-sorts the outputs; fastball shuffles only a victory vector of
//! side markers and assembles both outputs in sorted order during a single
//! simultaneous pass, so no sort is ever needed.
//!
//! Each kernel exists in two forms: a deterministic core taking the shuffled
//! object explicitly (testable against exhaustive enumeration) and an
//! RNG-driven wrapper.

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::graph::BipartiteGraph;

/// Which trading algorithm a sampler or benchmark runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Fastball,
    Curveball,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fastball => "fastball",
            Algorithm::Curveball => "curveball",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fastball" => Ok(Algorithm::Fastball),
            "curveball" => Ok(Algorithm::Curveball),
            other => Err(format!(
                "unknown algorithm `{other}` (expected fastball or curveball)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TradeError {
    #[error(
        "victory vector has {got_i} i-slots / {got_j} j-slots, inputs need {want_i} / {want_j}"
    )]
    VictoryVectorMismatch {
        got_i: usize,
        got_j: usize,
        want_i: usize,
        want_j: usize,
    },
    #[error("shuffled pool is not a permutation of the symmetric difference")]
    SymmetricDifferenceMismatch,
}

/// Marker for which trading node wins the current element of the symmetric
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Side {
    I = 0,
    J = 1,
}

/// The shuffled sequence of side markers driving one fastball trade: one slot
/// per element of the symmetric difference, with as many `I` markers as node
/// i keeps and as many `J` markers as node j keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VictoryVector {
    slots: Vec<Side>,
    i_count: usize,
    j_count: usize,
}

impl VictoryVector {
    /// Unshuffled vector of `i_count` I-markers followed by `j_count`
    /// J-markers.
    pub fn new(i_count: usize, j_count: usize) -> Self {
        let mut slots = Vec::with_capacity(i_count + j_count);
        slots.resize(i_count, Side::I);
        slots.resize(i_count + j_count, Side::J);
        Self {
            slots,
            i_count,
            j_count,
        }
    }

    /// Fisher-Yates shuffled vector.
    pub fn shuffled<R: Rng + ?Sized>(i_count: usize, j_count: usize, rng: &mut R) -> Self {
        let mut v = Self::new(i_count, j_count);
        fisher_yates_shuffle(&mut v.slots, rng);
        v
    }

    /// Wrap an explicit slot sequence (for enumeration and replay).
    pub fn from_slots(slots: Vec<Side>) -> Self {
        let i_count = slots.iter().filter(|s| **s == Side::I).count();
        let j_count = slots.len() - i_count;
        Self {
            slots,
            i_count,
            j_count,
        }
    }

    pub fn slots(&self) -> &[Side] {
        &self.slots
    }

    pub fn i_count(&self) -> usize {
        self.i_count
    }

    pub fn j_count(&self) -> usize {
        self.j_count
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// The two new neighbor lists produced by one trade, both strictly
/// increasing, with degrees and the merged element multiset preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeOutcome<T> {
    pub new_i: Vec<T>,
    pub new_j: Vec<T>,
}

fn debug_check_sorted<T: Ord>(list: &[T], what: &str) {
    debug_assert!(
        list.windows(2).all(|w| w[0] < w[1]),
        "unsorted input: {what} must be strictly increasing"
    );
}

/// Extend a scratch buffer to at least `len` addressable slots; never
/// shrinks, so steady-state trades pay nothing here.
fn grow(buf: &mut Vec<u32>, len: usize) {
    if buf.len() < len {
        buf.resize(len, 0);
    }
}

/// Unbiased Fisher-Yates shuffle. Bounded draws come from Lemire's widening
/// multiplication with rejection: exact uniformity, one RNG draw per element
/// and no division on the common path. Trades shuffle on every step, so this
/// runs constantly.
fn fisher_yates_shuffle<T, R: Rng + ?Sized>(slice: &mut [T], rng: &mut R) {
    for i in (1..slice.len()).rev() {
        let bound = i as u64 + 1;
        let mut wide = u128::from(rng.next_u64()) * u128::from(bound);
        let mut low = wide as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                wide = u128::from(rng.next_u64()) * u128::from(bound);
                low = wide as u64;
            }
        }
        slice.swap(i, (wide >> 64) as usize);
    }
}

/// Size of the intersection of two strictly sorted lists, via a single merge
/// pass. Linear in `ni.len() + nj.len()`.
///
/// The cursor advances are computed arithmetically rather than branched on;
/// merge comparisons on shuffled data are unpredictable, and this pass runs
/// on every trade.
pub fn intersection_size<T: Ord>(ni: &[T], nj: &[T]) -> usize {
    debug_check_sorted(ni, "Ni");
    debug_check_sorted(nj, "Nj");
    let mut shared = 0;
    let mut a = 0;
    let mut b = 0;
    while a < ni.len() && b < nj.len() {
        let le = ni[a] <= nj[b];
        let ge = ni[a] >= nj[b];
        shared += (le & ge) as usize;
        a += le as usize;
        b += ge as usize;
    }
    shared
}

/// The simultaneous pass shared by the validated core and the in-place
/// trader. Equal elements go to both outputs; each element found on exactly
/// one side goes to the output named by the next victory-vector slot. Both
/// outputs are appended in increasing order, so they emerge sorted.
///
/// The winner's list is picked by indexing, not branching; the slots are a
/// shuffled coin sequence, so a branch here would mispredict half the time.
fn fastball_pass<T: Ord + Copy>(
    ni: &[T],
    nj: &[T],
    slots: &[Side],
    out_i: &mut Vec<T>,
    out_j: &mut Vec<T>,
) {
    let outs: [&mut Vec<T>; 2] = [out_i, out_j];
    let mut a = 0;
    let mut b = 0;
    let mut c = 0;
    while a < ni.len() && b < nj.len() {
        match ni[a].cmp(&nj[b]) {
            Ordering::Equal => {
                outs[0].push(ni[a]);
                outs[1].push(nj[b]);
                a += 1;
                b += 1;
            }
            Ordering::Less => {
                outs[slots[c] as usize].push(ni[a]);
                a += 1;
                c += 1;
            }
            Ordering::Greater => {
                outs[slots[c] as usize].push(nj[b]);
                b += 1;
                c += 1;
            }
        }
    }
    // At most one of the two tails is non-empty; its elements are all larger
    // than anything appended so far and fill the remaining slots in order.
    while a < ni.len() {
        outs[slots[c] as usize].push(ni[a]);
        a += 1;
        c += 1;
    }
    while b < nj.len() {
        outs[slots[c] as usize].push(nj[b]);
        b += 1;
        c += 1;
    }
}

/// Deterministic fastball trade: the victory vector is supplied by the
/// caller. Outputs are assembled in sorted order; no sort is performed.
pub fn fastball_trade_core<T: Ord + Copy>(
    ni: &[T],
    nj: &[T],
    victory: &VictoryVector,
) -> Result<TradeOutcome<T>, TradeError> {
    debug_check_sorted(ni, "Ni");
    debug_check_sorted(nj, "Nj");
    let shared = intersection_size(ni, nj);
    let want_i = ni.len() - shared;
    let want_j = nj.len() - shared;
    if victory.i_count != want_i || victory.j_count != want_j {
        return Err(TradeError::VictoryVectorMismatch {
            got_i: victory.i_count,
            got_j: victory.j_count,
            want_i,
            want_j,
        });
    }
    let mut out_i = Vec::with_capacity(ni.len());
    let mut out_j = Vec::with_capacity(nj.len());
    fastball_pass(ni, nj, victory.slots(), &mut out_i, &mut out_j);
    Ok(TradeOutcome {
        new_i: out_i,
        new_j: out_j,
    })
}

/// RNG-driven fastball trade: builds the victory vector, shuffles it, and
/// runs the simultaneous pass.
pub fn fastball_trade<T: Ord + Copy, R: Rng + ?Sized>(
    ni: &[T],
    nj: &[T],
    rng: &mut R,
) -> TradeOutcome<T> {
    debug_check_sorted(ni, "Ni");
    debug_check_sorted(nj, "Nj");
    let shared = intersection_size(ni, nj);
    let victory = VictoryVector::shuffled(ni.len() - shared, nj.len() - shared, rng);
    let mut out_i = Vec::with_capacity(ni.len());
    let mut out_j = Vec::with_capacity(nj.len());
    fastball_pass(ni, nj, victory.slots(), &mut out_i, &mut out_j);
    TradeOutcome {
        new_i: out_i,
        new_j: out_j,
    }
}

/// Merge pass extracting the intersection and the symmetric difference of two
/// strictly sorted lists.
fn split_shared_unique<T: Ord + Copy>(
    ni: &[T],
    nj: &[T],
    shared: &mut Vec<T>,
    unique: &mut Vec<T>,
) {
    let mut a = 0;
    let mut b = 0;
    while a < ni.len() && b < nj.len() {
        match ni[a].cmp(&nj[b]) {
            Ordering::Equal => {
                shared.push(ni[a]);
                a += 1;
                b += 1;
            }
            Ordering::Less => {
                unique.push(ni[a]);
                a += 1;
            }
            Ordering::Greater => {
                unique.push(nj[b]);
                b += 1;
            }
        }
    }
    unique.extend_from_slice(&ni[a..]);
    unique.extend_from_slice(&nj[b..]);
}

/// Deterministic curveball trade: the caller supplies the already-shuffled
/// symmetric difference. Node i keeps the intersection plus the first
/// `|Ni| - |I|` pool elements, node j the intersection plus the rest; both
/// outputs are then sorted.
pub fn curveball_trade_core<T: Ord + Copy>(
    ni: &[T],
    nj: &[T],
    shuffled_pool: &[T],
) -> Result<TradeOutcome<T>, TradeError> {
    debug_check_sorted(ni, "Ni");
    debug_check_sorted(nj, "Nj");
    let mut shared = Vec::new();
    let mut unique = Vec::new();
    split_shared_unique(ni, nj, &mut shared, &mut unique);
    let mut check: Vec<T> = shuffled_pool.to_vec();
    check.sort_unstable();
    if check != unique {
        return Err(TradeError::SymmetricDifferenceMismatch);
    }

    let keep_i = ni.len() - shared.len();
    let mut new_i = shared.clone();
    new_i.extend_from_slice(&shuffled_pool[..keep_i]);
    new_i.sort_unstable();
    let mut new_j = shared;
    new_j.extend_from_slice(&shuffled_pool[keep_i..]);
    new_j.sort_unstable();
    Ok(TradeOutcome { new_i, new_j })
}

/// RNG-driven curveball trade, following the original algorithm step by step:
/// gather intersection and symmetric difference, shuffle the difference,
/// split it, sort both outputs.
pub fn curveball_trade<T: Ord + Copy, R: Rng + ?Sized>(
    ni: &[T],
    nj: &[T],
    rng: &mut R,
) -> TradeOutcome<T> {
    debug_check_sorted(ni, "Ni");
    debug_check_sorted(nj, "Nj");
    let mut shared = Vec::new();
    let mut unique = Vec::new();
    split_shared_unique(ni, nj, &mut shared, &mut unique);
    fisher_yates_shuffle(&mut unique, rng);

    let keep_i = ni.len() - shared.len();
    let mut new_i = shared.clone();
    new_i.extend_from_slice(&unique[..keep_i]);
    new_i.sort_unstable();
    let mut new_j = shared;
    new_j.extend_from_slice(&unique[keep_i..]);
    new_j.sort_unstable();
    TradeOutcome { new_i, new_j }
}

/// Reusable trade executor. Owns all scratch buffers so that a long chain of
/// trades performs no per-trade allocation; the FDSM workload runs the kernel
/// on the order of 10^8 times.
#[derive(Debug, Clone)]
pub struct Trader {
    algorithm: Algorithm,
    victory: Vec<Side>,
    shared: Vec<u32>,
    unique: Vec<u32>,
    out_i: Vec<u32>,
    out_j: Vec<u32>,
}

impl Trader {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            victory: Vec::new(),
            shared: Vec::new(),
            unique: Vec::new(),
            out_i: Vec::new(),
            out_j: Vec::new(),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// Trade between two neighbor lists, replacing them with the outcome.
    pub fn trade_in_place<R: Rng + ?Sized>(
        &mut self,
        ni: &mut Vec<u32>,
        nj: &mut Vec<u32>,
        rng: &mut R,
    ) {
        match self.algorithm {
            Algorithm::Fastball => self.fastball_in_place(ni, nj, rng),
            Algorithm::Curveball => self.curveball_in_place(ni, nj, rng),
        }
    }

    /// Same merge as [`fastball_pass`], tuned for the hot loop: every round
    /// stores its candidate element into both output buffers and advances
    /// only the winners' cursors, so nothing here branches on data. The
    /// buffers carry one pad slot to absorb the dead store, and the victory
    /// buffer carries one pad marker because the slot cursor is read before
    /// the round is known to be a match.
    fn fastball_in_place<R: Rng + ?Sized>(
        &mut self,
        ni: &mut Vec<u32>,
        nj: &mut Vec<u32>,
        rng: &mut R,
    ) {
        debug_check_sorted(ni, "Ni");
        debug_check_sorted(nj, "Nj");
        let shared = intersection_size(ni, nj);
        self.victory.clear();
        self.victory.resize(ni.len() - shared, Side::I);
        self.victory
            .resize(ni.len() + nj.len() - 2 * shared, Side::J);
        fisher_yates_shuffle(&mut self.victory, rng);
        self.victory.push(Side::I); // pad, never consumed

        grow(&mut self.out_i, ni.len() + 1);
        grow(&mut self.out_j, nj.len() + 1);
        let slots = &self.victory[..];
        let out_i = &mut self.out_i[..];
        let out_j = &mut self.out_j[..];
        let (mut a, mut b, mut c) = (0usize, 0usize, 0usize);
        let (mut li, mut lj) = (0usize, 0usize);
        while a < ni.len() && b < nj.len() {
            let x = ni[a];
            let y = nj[b];
            let le = x <= y;
            let ge = x >= y;
            let eq = le & ge;
            let v = if le { x } else { y };
            let side = slots[c] as usize;
            out_i[li] = v;
            li += (eq | (side == 0)) as usize;
            out_j[lj] = v;
            lj += (eq | (side == 1)) as usize;
            a += le as usize;
            b += ge as usize;
            c += !eq as usize;
        }
        while a < ni.len() {
            let side = slots[c] as usize;
            let v = ni[a];
            out_i[li] = v;
            li += (side == 0) as usize;
            out_j[lj] = v;
            lj += (side == 1) as usize;
            a += 1;
            c += 1;
        }
        while b < nj.len() {
            let side = slots[c] as usize;
            let v = nj[b];
            out_i[li] = v;
            li += (side == 0) as usize;
            out_j[lj] = v;
            lj += (side == 1) as usize;
            b += 1;
            c += 1;
        }
        debug_assert_eq!(li, ni.len());
        debug_assert_eq!(lj, nj.len());
        self.out_i.truncate(li);
        self.out_j.truncate(lj);
        std::mem::swap(ni, &mut self.out_i);
        std::mem::swap(nj, &mut self.out_j);
    }

    /// Curveball with the same buffered, branch-free gather; the split and
    /// the final sorts follow the original algorithm.
    fn curveball_in_place<R: Rng + ?Sized>(
        &mut self,
        ni: &mut Vec<u32>,
        nj: &mut Vec<u32>,
        rng: &mut R,
    ) {
        debug_check_sorted(ni, "Ni");
        debug_check_sorted(nj, "Nj");
        let cap = ni.len() + nj.len() + 1;
        grow(&mut self.shared, cap);
        grow(&mut self.unique, cap);
        let shared = &mut self.shared[..];
        let unique = &mut self.unique[..];
        let (mut a, mut b) = (0usize, 0usize);
        let (mut ls, mut lu) = (0usize, 0usize);
        while a < ni.len() && b < nj.len() {
            let x = ni[a];
            let y = nj[b];
            let le = x <= y;
            let ge = x >= y;
            let eq = le & ge;
            let v = if le { x } else { y };
            shared[ls] = v;
            ls += eq as usize;
            unique[lu] = v;
            lu += !eq as usize;
            a += le as usize;
            b += ge as usize;
        }
        unique[lu..lu + ni.len() - a].copy_from_slice(&ni[a..]);
        lu += ni.len() - a;
        unique[lu..lu + nj.len() - b].copy_from_slice(&nj[b..]);
        lu += nj.len() - b;

        fisher_yates_shuffle(&mut unique[..lu], rng);

        let keep_i = ni.len() - ls;
        self.out_i.clear();
        self.out_i.extend_from_slice(&self.shared[..ls]);
        self.out_i.extend_from_slice(&self.unique[..keep_i]);
        self.out_i.sort_unstable();
        self.out_j.clear();
        self.out_j.extend_from_slice(&self.shared[..ls]);
        self.out_j.extend_from_slice(&self.unique[keep_i..lu]);
        self.out_j.sort_unstable();
        std::mem::swap(ni, &mut self.out_i);
        std::mem::swap(nj, &mut self.out_j);
    }

    /// Trade between top nodes `i` and `j` of a graph.
    pub fn trade_pair<R: Rng + ?Sized>(
        &mut self,
        graph: &mut BipartiteGraph,
        i: usize,
        j: usize,
        rng: &mut R,
    ) {
        let (ni, nj) = graph.lists_pair_mut(i, j);
        self.trade_in_place(ni, nj, rng);
    }
}
