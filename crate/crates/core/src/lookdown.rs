//! The lookdown graph on `n` levels and the flow of partitions it induces.
//!
//! A reproduction event at time `t` with level set `I` makes `min(I)` the
//! parent: every level of `I` takes its type, and the remaining levels keep
//! their relative order while being pushed up; whatever lands above `n` is
//! lost. In partition terms the event is `1_I` and the flow over `(s, t]` is
//! the left fold `Coag(1_{I_q}, Coag(1_{I_{q-1}}, …))`.

use std::io::{BufRead, Write};

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flemingviot::MeasureState;
use crate::measure::{LambdaMeasure, MeasureError, MeasureSpec};
use crate::partition::{coag, encode_single_block, Partition, PartitionError};
use crate::rates::MergerSampler;
use crate::rng::{self, purpose, SimRng};

#[derive(Debug, Error)]
pub enum LookdownError {
    #[error("need at least two levels, got n = {0}")]
    TooSmall(usize),
    #[error("time {t} outside the graph window [{s0}, {s1}]")]
    OutOfWindow { t: f64, s0: f64, s1: f64 },
    #[error("start {s} is after end {t}")]
    Reversed { s: f64, t: f64 },
    #[error("invalid event #{index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
    #[error("initial types must be distinct; {0} appears twice")]
    DuplicateType(f64),
    #[error("expected {expected} initial types, got {got}")]
    TypeCount { expected: usize, got: usize },
    #[error("not a single-event transition: {0}")]
    Reconstruction(ReconstructionFailure),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("graph file: {0}")]
    Io(#[from] std::io::Error),
    #[error("graph file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReconstructionFailure {
    SizeMismatch(usize, usize),
    NotCoarsening,
    NoMerge,
    MultipleMerges(usize),
}

impl std::fmt::Display for ReconstructionFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReconstructionFailure::SizeMismatch(a, b) => write!(f, "ground sets differ ({a} vs {b})"),
            ReconstructionFailure::NotCoarsening => f.write_str("blocks of `after` are not nested in blocks of `before`"),
            ReconstructionFailure::NoMerge => f.write_str("the partitions are equal"),
            ReconstructionFailure::MultipleMerges(k) => write!(f, "{k} groups of blocks merged"),
        }
    }
}

/// One line of a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionEvent {
    #[serde(rename = "t")]
    pub time: f64,
    pub levels: Vec<usize>,
}

/// Borrowed view of an event stored in a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRef<'a> {
    pub time: f64,
    pub levels: &'a [u32],
}

impl EventRef<'_> {
    pub fn parent(&self) -> usize {
        self.levels[0] as usize
    }

    pub fn levels_usize(&self) -> Vec<usize> {
        self.levels.iter().map(|&l| l as usize).collect()
    }
}

/// Reproduction events on `[n]` over a window, stored flat: the level sets
/// of event `k` are `levels[offsets[k]..offsets[k+1]]`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LookdownGraph {
    n: usize,
    window: (f64, f64),
    times: Vec<f64>,
    offsets: Vec<u32>,
    levels: Vec<u32>,
    seed: Option<u64>,
    measure: Option<MeasureSpec>,
}

impl LookdownGraph {
    pub fn empty(n: usize, window: (f64, f64)) -> Result<Self, LookdownError> {
        if n < 2 {
            return Err(LookdownError::TooSmall(n));
        }
        if !(window.0 <= window.1) {
            return Err(LookdownError::Reversed { s: window.0, t: window.1 });
        }
        Ok(LookdownGraph {
            n,
            window,
            times: Vec::new(),
            offsets: vec![0],
            levels: Vec::new(),
            seed: None,
            measure: None,
        })
    }

    /// Builds a graph from explicit events, validating ordering and levels.
    pub fn from_events(n: usize, window: (f64, f64), events: &[ReproductionEvent]) -> Result<Self, LookdownError> {
        let mut g = Self::empty(n, window)?;
        for (index, e) in events.iter().enumerate() {
            let invalid = |reason: String| LookdownError::InvalidEvent { index, reason };
            if !(e.time > window.0 && e.time <= window.1) {
                return Err(invalid(format!("time {} outside ({}, {}]", e.time, window.0, window.1)));
            }
            if let Some(&last) = g.times.last() {
                if e.time <= last {
                    return Err(invalid(format!("time {} not after previous event {}", e.time, last)));
                }
            }
            let mut levels = e.levels.clone();
            levels.sort_unstable();
            levels.dedup();
            if levels.len() != e.levels.len() {
                return Err(invalid("repeated level".into()));
            }
            if levels.len() < 2 {
                return Err(invalid("fewer than two levels".into()));
            }
            if levels[0] == 0 || *levels.last().unwrap() > n {
                return Err(invalid(format!("levels must lie in [1, {n}]")));
            }
            g.push(e.time, levels.iter().map(|&l| l as u32));
        }
        Ok(g)
    }

    fn push<I: IntoIterator<Item = u32>>(&mut self, time: f64, levels: I) {
        self.times.push(time);
        self.levels.extend(levels);
        self.offsets.push(self.levels.len() as u32);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn measure(&self) -> Option<&MeasureSpec> {
        self.measure.as_ref()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn event(&self, k: usize) -> EventRef<'_> {
        let (a, b) = (self.offsets[k] as usize, self.offsets[k + 1] as usize);
        EventRef {
            time: self.times[k],
            levels: &self.levels[a..b],
        }
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = EventRef<'_>> + '_ {
        (0..self.len()).map(move |k| self.event(k))
    }

    /// Index range of the events with `s < time ≤ t`.
    pub fn event_range(&self, s: f64, t: f64) -> Result<std::ops::Range<usize>, LookdownError> {
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(LookdownError::Reversed { s, t });
        }
        let a = self.times.partition_point(|&x| x <= s);
        let b = self.times.partition_point(|&x| x <= t);
        Ok(a..b)
    }

    fn check_time(&self, t: f64) -> Result<(), LookdownError> {
        if !(t >= self.window.0 && t <= self.window.1) {
            return Err(LookdownError::OutOfWindow { t, s0: self.window.0, s1: self.window.1 });
        }
        Ok(())
    }

    /// Appends events on `(window.1, new_end]` drawn from `sampler`.
    pub fn extend(&mut self, new_end: f64, sampler: &MergerSampler, rng: &mut SimRng) {
        if new_end <= self.window.1 {
            return;
        }
        let n = self.n;
        let rate = sampler.total_rate(n);
        let mut scratch: Vec<u32> = (1..=n as u32).collect();
        let mut t = self.window.1;
        if rate > 0.0 {
            loop {
                let dt: f64 = Exp1.sample(rng);
                let next = t + dt / rate;
                if next > new_end {
                    break;
                }
                t = next;
                if self.times.last() == Some(&t) {
                    warn!("equal event times at {t}; shifting the later event by one ulp");
                    t = t.next_up();
                }
                let p = sampler.sample_size(n, rng);
                for i in 0..p {
                    let j = rng.random_range(i..n);
                    scratch.swap(i, j);
                }
                let start = self.levels.len();
                self.levels.extend_from_slice(&scratch[..p]);
                self.levels[start..].sort_unstable();
                self.times.push(t);
                self.offsets.push(self.levels.len() as u32);
            }
        }
        self.window.1 = new_end;
    }

    // ----- JSONL ----------------------------------------------------------

    /// Writes one `{"t": …, "levels": […]}` line per event.
    pub fn write_events<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in self.events() {
            let line = ReproductionEvent {
                time: e.time,
                levels: e.levels_usize(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads event lines, skipping a leading `{"meta": …}` line if present.
    pub fn read_events<R: BufRead>(r: R, n: usize, window: (f64, f64)) -> Result<Self, LookdownError> {
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || (i == 0 && line.starts_with("{\"meta\"")) {
                continue;
            }
            let e: ReproductionEvent = serde_json::from_str(&line).map_err(|e| LookdownError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            events.push(e);
        }
        Self::from_events(n, window, &events)
    }
}

/// `dt ⊗ (μ_K + μ_Λ)` restricted to `[n]`: events at rate `R(n)`, each a
/// uniform `p`-subset with `p ∝ C(n,p) λ_{n,p}`.
pub fn sample_graph(m: &LambdaMeasure, n: usize, window: (f64, f64), seed: u64) -> Result<LookdownGraph, LookdownError> {
    if n < 2 {
        return Err(LookdownError::TooSmall(n));
    }
    let sampler = MergerSampler::new(m, n)?;
    if sampler.total_rate(n) == 0.0 {
        warn!("total event rate is zero; the graph is empty");
    }
    let mut rng = rng::stream(seed, purpose::LOOKDOWN, 0);
    let mut g = sample_graph_with(&sampler, n, window, &mut rng)?;
    g.seed = Some(seed);
    g.measure = Some(m.spec());
    Ok(g)
}

/// Same as [`sample_graph`] with a caller-owned sampler and stream.
pub fn sample_graph_with(sampler: &MergerSampler, n: usize, window: (f64, f64), rng: &mut SimRng) -> Result<LookdownGraph, LookdownError> {
    let mut g = LookdownGraph::empty(n, (window.0, window.0))?;
    g.extend(window.1, sampler, rng);
    g.window = window;
    Ok(g)
}

pub(crate) fn set_provenance(g: &mut LookdownGraph, seed: u64, spec: MeasureSpec) {
    g.seed = Some(seed);
    g.measure = Some(spec);
}

/// Pushup: levels in `I` copy the type at `min(I)`; any other level `i`
/// takes the old type at `i - (|I ∩ [i]| - 1) ∨ 0`.
pub fn apply_event<T: Copy>(types: &[T], levels: &[usize]) -> Vec<T> {
    let n = types.len();
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    let parent = types[sorted[0] - 1];
    let mut out = Vec::with_capacity(n);
    let mut below = 0; // |I ∩ [i]|
    for i in 1..=n {
        let in_i = sorted.get(below) == Some(&i);
        if in_i {
            below += 1;
            out.push(parent);
        } else {
            let shift = below.saturating_sub(1);
            out.push(types[i - shift - 1]);
        }
    }
    out
}

/// `Π̂_{s,t}` restricted to `[n]`, by folding `Coag(1_I, ·)` over the events
/// in `(s, t]`.
pub fn flow_partition(g: &LookdownGraph, s: f64, t: f64) -> Result<Partition, LookdownError> {
    let range = g.event_range(s, t)?;
    let mut acc = Partition::singletons(g.n);
    for k in range {
        let one_i = encode_single_block(&g.event(k).levels_usize(), g.n)?;
        acc = coag(&one_i, &acc)?;
    }
    Ok(acc)
}

/// Types at time `t` starting from `initial` at the window start.
pub fn evolve<T: Copy>(g: &LookdownGraph, initial: &[T], t: f64) -> Result<Vec<T>, LookdownError> {
    if initial.len() != g.n {
        return Err(LookdownError::TypeCount { expected: g.n, got: initial.len() });
    }
    let range = g.event_range(g.window.0, t)?;
    let mut state = initial.to_vec();
    for k in range {
        state = apply_event(&state, &g.event(k).levels_usize());
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowestLevel {
    Level(usize),
    /// Every descendant of the type has been pushed above `n`.
    Absorbed,
}

/// Lowest level at time `t` carrying the type of level `i` at the window start.
pub fn lowest_level(g: &LookdownGraph, i: usize, t: f64) -> Result<LowestLevel, LookdownError> {
    if i == 0 || i > g.n {
        return Err(LookdownError::InvalidEvent {
            index: i,
            reason: format!("level must lie in [1, {}]", g.n),
        });
    }
    let pi = flow_partition(g, g.window.0, t)?;
    Ok(match pi.block(i) {
        Some(b) => LowestLevel::Level(b[0]),
        None => LowestLevel::Absorbed,
    })
}

fn check_types(types: &[f64], n: usize) -> Result<(), LookdownError> {
    if types.len() != n {
        return Err(LookdownError::TypeCount { expected: n, got: types.len() });
    }
    let mut sorted = types.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(LookdownError::DuplicateType(w[0]));
    }
    Ok(())
}

/// Atoms from non-singleton blocks of `Π̂_{s,t}`, dust from singletons.
pub fn empirical_measure(g: &LookdownGraph, types: &[f64], s: f64, t: f64) -> Result<MeasureState, LookdownError> {
    check_types(types, g.n)?;
    let pi = flow_partition(g, s, t)?;
    Ok(MeasureState::from_partition(&pi, types))
}

/// Recovers `I` from `before = Coag(after, 1_I)`, with `I` indexing the
/// blocks of `after`.
pub fn reconstruct_event(before: &Partition, after: &Partition) -> Result<Vec<usize>, LookdownError> {
    use ReconstructionFailure::*;
    let fail = LookdownError::Reconstruction;
    if before.n() != after.n() {
        return Err(fail(SizeMismatch(before.n(), after.n())));
    }
    let outer = before.labels();
    let mut group = Vec::with_capacity(after.block_count());
    for block in after.blocks() {
        let l = outer[block[0] - 1];
        if block.iter().any(|&e| outer[e - 1] != l) {
            return Err(fail(NotCoarsening));
        }
        group.push(l);
    }
    let induced = Partition::from_labels(&group)?;
    match induced.non_singleton_count() {
        0 => Err(fail(NoMerge)),
        1 => {
            let i = crate::partition::decode_single_block(&induced)?;
            debug_assert_eq!(&coag(after, &encode_single_block(&i, after.block_count())?)?, before);
            Ok(i)
        }
        k => Err(fail(MultipleMerges(k))),
    }
}

/// In-place particle system keyed by ancestral level (`0..n`), with per-type
/// copy counts. Alive types always form the prefix `0..alive`, because the
/// lowest levels of the initial types stay ordered.
#[derive(Debug, Clone)]
pub struct TypeTracker {
    types: Vec<u32>,
    counts: Vec<u32>,
    alive: usize,
    singletons: usize,
    ever_parent: Vec<bool>,
}

impl TypeTracker {
    pub fn new(n: usize) -> Self {
        TypeTracker {
            types: (0..n as u32).collect(),
            counts: vec![1; n],
            alive: n,
            singletons: n,
            ever_parent: vec![false; n],
        }
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    /// Ancestral level (0-based) of each current level.
    pub fn types(&self) -> &[u32] {
        &self.types
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn alive(&self) -> usize {
        self.alive
    }

    pub fn singletons(&self) -> usize {
        self.singletons
    }

    pub fn ever_parent(&self, ty: usize) -> bool {
        self.ever_parent[ty]
    }

    fn adjust(&mut self, ty: u32, up: bool) {
        let c = &mut self.counts[ty as usize];
        if *c == 1 {
            self.singletons -= 1;
        }
        if up {
            *c += 1;
        } else {
            *c -= 1;
        }
        if *c == 1 {
            self.singletons += 1;
        }
    }

    /// Applies an event with sorted 1-based `levels`; returns how many types
    /// went extinct (they are the top ones of the alive prefix).
    pub fn apply(&mut self, levels: &[u32]) -> usize {
        let n = self.types.len();
        let p = levels.len();
        let lo = levels[0] as usize;
        let parent = self.types[lo - 1];
        self.ever_parent[parent as usize] = true;
        for k in n + 1 - p..n {
            let ty = self.types[k];
            self.adjust(ty, false);
        }
        for _ in 1..p {
            self.adjust(parent, true);
        }
        // backward in-place merge: children at levels[1..], survivors shifted
        let mut read = n - p; // 0-based index of the highest surviving old particle
        let mut child = p - 1;
        let mut w = n;
        while w > lo {
            if child >= 1 && levels[child] as usize == w {
                self.types[w - 1] = parent;
                child -= 1;
            } else {
                self.types[w - 1] = self.types[read];
                read = read.wrapping_sub(1);
            }
            w -= 1;
        }
        let before = self.alive;
        while self.alive > 0 && self.counts[self.alive - 1] == 0 {
            self.alive -= 1;
        }
        before - self.alive
    }
}
