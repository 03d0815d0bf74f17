//! Λ Fleming-Viot paths read off the lookdown particle system, Eves, and the
//! regime-specific diagnostics.
//!
//! At finite `n` the state is built from the partition of levels by
//! ancestral type: non-singleton blocks become atoms at their initial type
//! with mass `|block|/n`, singletons are counted as dust.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lookdown::{self, LookdownError, LookdownGraph, TypeTracker};
use crate::measure::{LambdaMeasure, MeasureError, MeasureSpec, Regime, RegimeClass, TriState};
use crate::partition::{coag, encode_single_block, Partition};
use crate::rates::MergerSampler;
use crate::rng::{self, purpose, SimRng};

/// Default threshold for the persistent-case ratio criterion.
pub const DEFAULT_THETA: f64 = 0.99;
/// Window growth cap for the adaptive horizon.
pub const MAX_DOUBLINGS: u32 = 24;

#[derive(Debug, Error)]
pub enum FvError {
    #[error(transparent)]
    Lookdown(#[from] LookdownError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("regime of the measure is undecided")]
    RegimeUndecided,
    #[error("operation needs regime {expected}, but the measure is {got}")]
    RegimeMismatch { expected: &'static str, got: Regime },
}

/// One time-slice `Σ a_i δ_{x_i} + dust·dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureState {
    pub atoms: Vec<(f64, f64)>,
    pub dust: f64,
}

impl MeasureState {
    /// Block `i` of `pi` carries the initial type of level `i`.
    pub fn from_partition(pi: &Partition, types: &[f64]) -> Self {
        let n = pi.n() as f64;
        let mut atoms = Vec::new();
        let mut singles = 0usize;
        for (i, b) in pi.blocks().iter().enumerate() {
            if b.len() > 1 {
                atoms.push((types[i], b.len() as f64 / n));
            } else {
                singles += 1;
            }
        }
        MeasureState { atoms, dust: singles as f64 / n }
    }

    pub fn from_tracker(tr: &TypeTracker, types: &[f64]) -> Self {
        let n = tr.n() as f64;
        let mut atoms = Vec::new();
        let mut singles = 0usize;
        for (ty, &c) in tr.counts()[..tr.alive()].iter().enumerate() {
            if c > 1 {
                atoms.push((types[ty], c as f64 / n));
            } else {
                singles += 1;
            }
        }
        MeasureState { atoms, dust: singles as f64 / n }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.dust
    }

    /// Mass of the atom at `x` (0 if `x` is not an atom).
    pub fn atom_mass(&self, x: f64) -> f64 {
        self.atoms.iter().find(|a| a.0 == x).map_or(0.0, |a| a.1)
    }
}

/// Simultaneous loss of several types at one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieEvent {
    pub time: f64,
    /// Initial levels (1-based) of the types lost together.
    pub types: Vec<usize>,
}

/// Per-type extinction data collected while simulating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRecord {
    pub n: usize,
    /// `extinction_times[i]` for the type of initial level `i + 1`; `None`
    /// while the type is alive at the end of the simulation.
    pub extinction_times: Vec<Option<f64>>,
    pub ties: Vec<TieEvent>,
    pub fixation_time: Option<f64>,
    pub horizon: f64,
}

impl ExtinctionRecord {
    fn new(n: usize, start: f64) -> Self {
        ExtinctionRecord {
            n,
            extinction_times: vec![None; n],
            ties: Vec::new(),
            fixation_time: None,
            horizon: start,
        }
    }

    /// Records that the types of levels `alive_after+1 ..= alive_before` died.
    fn record(&mut self, t: f64, alive_before: usize, alive_after: usize) {
        for ty in alive_after..alive_before {
            self.extinction_times[ty] = Some(t);
        }
        if alive_before - alive_after >= 2 {
            self.ties.push(TieEvent {
                time: t,
                types: (alive_after + 1..=alive_before).collect(),
            });
        }
        if alive_after == 1 {
            self.fixation_time = Some(t);
        }
    }

    /// Largest `k` with `∞ = t_1 > t_2 > … > t_k > t_{k+1}` certified; 1 if
    /// the run did not reach fixation.
    pub fn resolved_upto(&self) -> usize {
        if self.fixation_time.is_none() {
            return 1;
        }
        let t = &self.extinction_times;
        let mut k = 1;
        while k < self.n && (k + 1 == self.n || t[k] != t[k + 1]) {
            k += 1;
        }
        k
    }

    /// Whether some event removed at least two of the first `k` types.
    pub fn has_tie_within(&self, k: usize) -> bool {
        self.ties.iter().any(|tie| tie.types.iter().filter(|&&ty| ty <= k).count() >= 2)
    }
}

/// A simulated Λ Fleming-Viot path at level `n`.
#[derive(Debug, Clone)]
pub struct FvRun {
    pub measure: Option<MeasureSpec>,
    pub class: Option<RegimeClass>,
    pub n: usize,
    pub graph: LookdownGraph,
    pub initial_types: Vec<f64>,
    pub seed: u64,
    pub extinctions: ExtinctionRecord,
}

impl FvRun {
    pub fn window(&self) -> (f64, f64) {
        self.graph.window()
    }

    pub fn regime(&self) -> Option<Regime> {
        self.class.map(|c| c.regime)
    }

    /// `(time, state)` at the window start and after every event, replayed
    /// from the graph.
    pub fn path(&self) -> impl Iterator<Item = (f64, MeasureState)> + '_ {
        let mut tr = TypeTracker::new(self.n);
        let start = std::iter::once((self.window().0, MeasureState::from_tracker(&tr, &self.initial_types)));
        let rest = self.graph.events().map(move |e| {
            tr.apply(e.levels);
            (e.time, MeasureState::from_tracker(&tr, &self.initial_types))
        });
        start.chain(rest)
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<MeasureState, FvError> {
        let range = self.graph.event_range(self.window().0, t)?;
        let mut tr = TypeTracker::new(self.n);
        for k in range {
            tr.apply(self.graph.event(k).levels);
        }
        Ok(MeasureState::from_tracker(&tr, &self.initial_types))
    }
}

/// How long to simulate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FvHorizon {
    Window(f64, f64),
    /// Start with `[0, initial]` and double until one type is left, or
    /// until `max` is reached.
    UntilFixation { initial: f64, max: f64 },
}

/// i.i.d. uniform types from the seeded type stream.
pub fn default_types(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, purpose::TYPES, 0);
    let mut types: Vec<f64> = Vec::with_capacity(n);
    while types.len() < n {
        let x: f64 = rng.random();
        if !types.contains(&x) {
            types.push(x);
        }
    }
    types
}

pub fn simulate_fv(
    m: &LambdaMeasure,
    n: usize,
    horizon: FvHorizon,
    seed: u64,
    initial_types: Option<Vec<f64>>,
) -> Result<FvRun, FvError> {
    let sampler = MergerSampler::new(m, n)?;
    let class = m.classify().ok();
    let mut rng = rng::stream(seed, purpose::LOOKDOWN, 0);
    let mut run = simulate_fv_with(&sampler, n, horizon, &mut rng, initial_types.unwrap_or_else(|| default_types(n, seed)))?;
    run.measure = Some(m.spec());
    run.class = class;
    run.seed = seed;
    lookdown::set_provenance(&mut run.graph, seed, m.spec());
    Ok(run)
}

/// Replicate-friendly core of [`simulate_fv`]; `measure`, `class` and `seed`
/// are left for the caller to fill in.
pub fn simulate_fv_with(
    sampler: &MergerSampler,
    n: usize,
    horizon: FvHorizon,
    rng: &mut SimRng,
    initial_types: Vec<f64>,
) -> Result<FvRun, FvError> {
    if initial_types.len() != n {
        return Err(LookdownError::TypeCount { expected: n, got: initial_types.len() }.into());
    }
    let mut sorted = initial_types.clone();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(LookdownError::DuplicateType(w[0]).into());
    }
    let (start, first_end, max_end) = match horizon {
        FvHorizon::Window(a, b) => (a, b, b),
        FvHorizon::UntilFixation { initial, max } => (0.0, initial, max),
    };
    let mut graph = LookdownGraph::empty(n, (start, start))?;
    let mut tr = TypeTracker::new(n);
    let mut ext = ExtinctionRecord::new(n, start);
    let mut end = first_end.min(max_end);
    let mut done = 0;
    for _ in 0..=MAX_DOUBLINGS {
        graph.extend(end, sampler, rng);
        for k in done..graph.len() {
            let e = graph.event(k);
            let before = tr.alive();
            tr.apply(e.levels);
            if tr.alive() < before {
                ext.record(e.time, before, tr.alive());
            }
        }
        done = graph.len();
        ext.horizon = end;
        if tr.alive() == 1 || end >= max_end {
            break;
        }
        end = (start + 2.0 * (end - start)).min(max_end);
    }
    Ok(FvRun {
        measure: None,
        class: None,
        n,
        graph,
        initial_types,
        seed: 0,
        extinctions: ext,
    })
}

/// Rebuilds a run from a stored graph; the measure and class are taken from
/// the graph's provenance when present.
pub fn replay_fv(graph: LookdownGraph, initial_types: Vec<f64>) -> Result<FvRun, FvError> {
    let n = graph.n();
    if initial_types.len() != n {
        return Err(LookdownError::TypeCount { expected: n, got: initial_types.len() }.into());
    }
    let mut tr = TypeTracker::new(n);
    let mut ext = ExtinctionRecord::new(n, graph.window().0);
    for e in graph.events() {
        let before = tr.alive();
        tr.apply(e.levels);
        if tr.alive() < before {
            ext.record(e.time, before, tr.alive());
        }
    }
    ext.horizon = graph.window().1;
    let measure = graph.measure().cloned();
    let class = match &measure {
        Some(spec) => spec.build().ok().and_then(|m| m.classify().ok()),
        None => None,
    };
    Ok(FvRun {
        measure,
        class,
        n,
        seed: graph.seed().unwrap_or(0),
        graph,
        initial_types,
        extinctions: ext,
    })
}

// ----- Eves ------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeCase {
    Persistent,
    Extinction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEve {
    pub rank: usize,
    pub location: f64,
    /// Initial level carrying this type.
    pub level: usize,
    /// Extinction case: extinction time (`None` = survives). Persistent
    /// case: the ratio `ρ_T({e_i}) / ρ_T([0,1] \ {e_1..e_{i-1}})`.
    pub evidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEvidence {
    pub horizon: f64,
    pub resolved_upto: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveReport {
    pub regime_case: RegimeCase,
    pub ordered_eves: Vec<RankedEve>,
    pub resolved_upto: usize,
    pub ties: Vec<TieEvent>,
    pub horizon: f64,
    pub theta: f64,
    /// Persistent case: certified rank count at each horizon of the doubling.
    pub horizons: Vec<HorizonEvidence>,
}

pub fn extract_eves(run: &FvRun, theta: f64) -> Result<EveReport, FvError> {
    let regime = run.regime().ok_or(FvError::RegimeUndecided)?;
    if regime == Regime::Cdi {
        Ok(extinction_eves(run, theta))
    } else {
        Ok(persistent_eves(run, theta))
    }
}

fn extinction_eves(run: &FvRun, theta: f64) -> EveReport {
    let ext = &run.extinctions;
    let ordered_eves = (0..run.n)
        .map(|i| RankedEve {
            rank: i + 1,
            location: run.initial_types[i],
            level: i + 1,
            evidence: ext.extinction_times[i],
        })
        .collect();
    EveReport {
        regime_case: RegimeCase::Extinction,
        ordered_eves,
        resolved_upto: ext.resolved_upto(),
        ties: ext.ties.clone(),
        horizon: ext.horizon,
        theta,
        horizons: Vec::new(),
    }
}

/// Greedy ranks at one state: rank 1 is the level-1 type, later ranks take
/// the heaviest remaining atom. Returns the ranked list and the number of
/// leading ranks whose ratio clears `theta` while the residual mass is
/// still carried by at least `min_residual` of the population.
fn rank_state(state: &MeasureState, run: &FvRun, theta: f64, min_residual: f64) -> (Vec<RankedEve>, usize) {
    let level_of = |x: f64| run.initial_types.iter().position(|&y| y == x).map_or(0, |i| i + 1);
    let mut atoms = state.atoms.clone();
    let e1 = run.initial_types[0];
    let m1 = state.atom_mass(e1);
    atoms.retain(|a| a.0 != e1);
    atoms.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut ranked = vec![RankedEve {
        rank: 1,
        location: e1,
        level: 1,
        evidence: Some(m1),
    }];
    let mut resolved = 1;
    let mut certified = true;
    let mut residual = 1.0 - m1;
    for (k, &(x, mass)) in atoms.iter().enumerate() {
        let ratio = if residual > 0.0 { (mass / residual).min(1.0) } else { 0.0 };
        if certified && residual >= min_residual && ratio >= theta {
            resolved = k + 2;
        } else {
            certified = false;
        }
        ranked.push(RankedEve {
            rank: k + 2,
            location: x,
            level: level_of(x),
            evidence: Some(ratio),
        });
        residual -= mass;
    }
    (ranked, resolved)
}

fn persistent_eves(run: &FvRun, theta: f64) -> EveReport {
    let (s0, s1) = run.window();
    // Residual mass must be carried by at least this many particles for a
    // ratio to count as evidence rather than a finite-n artefact.
    let min_residual = 20.0 / run.n as f64;
    let last = run.extinctions.fixation_time.map_or(s1, |tf| {
        // latest event strictly before fixation
        let k = run.graph.times().partition_point(|&x| x < tf);
        if k == 0 {
            s0
        } else {
            run.graph.times()[k - 1]
        }
    });
    let mut horizons = Vec::new();
    let len = last - s0;
    let mut h = if len > 0.0 { len / 2f64.powi(8) } else { 0.0 };
    loop {
        horizons.push(s0 + h);
        if h >= len {
            break;
        }
        h = (2.0 * h).min(len);
    }
    let mut tr = TypeTracker::new(run.n);
    let mut k = 0;
    let mut evidence = Vec::new();
    let mut final_rank = (Vec::new(), 1);
    for &hz in &horizons {
        while k < run.graph.len() && run.graph.times()[k] <= hz {
            tr.apply(run.graph.event(k).levels);
            k += 1;
        }
        let state = MeasureState::from_tracker(&tr, &run.initial_types);
        final_rank = rank_state(&state, run, theta, min_residual);
        evidence.push(HorizonEvidence {
            horizon: hz,
            resolved_upto: final_rank.1,
        });
        let n = evidence.len();
        if n >= 3 && evidence[n - 3..].iter().all(|e| e.resolved_upto == final_rank.1) && final_rank.1 > 1 {
            break;
        }
    }
    let horizon = evidence.last().map_or(s0, |e| e.horizon);
    EveReport {
        regime_case: RegimeCase::Persistent,
        ordered_eves: final_rank.0,
        resolved_upto: final_rank.1,
        ties: Vec::new(),
        horizon,
        theta,
        horizons: evidence,
    }
}

pub fn detect_simultaneous_extinction(run: &FvRun) -> Result<Vec<TieEvent>, FvError> {
    match run.regime() {
        None => Err(FvError::RegimeUndecided),
        Some(Regime::Cdi) => Ok(run.extinctions.ties.clone()),
        Some(got) => Err(FvError::RegimeMismatch { expected: "CDI", got }),
    }
}

// ----- regime diagnostics ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    /// `X_t = 1 - ρ_t({e})` only jumps up finitely often.
    PositiveJumps {
        last_positive_jump: Option<f64>,
        /// `(T, number of positive jumps of X after T)`
        after: Vec<(f64, usize)>,
    },
    /// Types that never acted as a parent during the window.
    NeverParent { never_parent_types: usize, never_parent_alive: usize, dust_at_end: f64 },
}

pub fn regime_diagnostics(run: &FvRun, grid: &[f64]) -> Result<Diagnostics, FvError> {
    let class = run.class.ok_or(FvError::RegimeUndecided)?;
    match class.regime {
        Regime::Discrete => {
            let e1 = run.initial_types[0];
            let mut jumps = Vec::new();
            let mut prev = 1.0 - run.path().next().unwrap().1.atom_mass(e1);
            for (t, s) in run.path().skip(1) {
                let x = 1.0 - s.atom_mass(e1);
                if x > prev {
                    jumps.push(t);
                }
                prev = x;
            }
            Ok(Diagnostics::PositiveJumps {
                last_positive_jump: jumps.last().copied(),
                after: grid.iter().map(|&t| (t, jumps.iter().filter(|&&j| j > t).count())).collect(),
            })
        }
        Regime::IntensiveWDust if class.u_log_u_finite == TriState::True => {
            let mut tr = TypeTracker::new(run.n);
            for e in run.graph.events() {
                tr.apply(e.levels);
            }
            let never = (0..run.n).filter(|&ty| !tr.ever_parent(ty)).count();
            let never_alive = (0..tr.alive()).filter(|&ty| !tr.ever_parent(ty)).count();
            Ok(Diagnostics::NeverParent {
                never_parent_types: never,
                never_parent_alive: never_alive,
                dust_at_end: tr.singletons() as f64 / run.n as f64,
            })
        }
        got => Err(FvError::RegimeMismatch {
            expected: "DISCRETE or INTENSIVE_W_DUST with finite u log u",
            got,
        }),
    }
}

/// Rebuilds the path from the flow of partitions and the Eves (the initial
/// types), folding `Coag(1_I, ·)` event by event.
pub fn rebuild_path(run: &FvRun) -> Result<Vec<(f64, MeasureState)>, FvError> {
    let mut acc = Partition::singletons(run.n);
    let mut out = vec![(run.window().0, MeasureState::from_partition(&acc, &run.initial_types))];
    for e in run.graph.events() {
        let one = encode_single_block(&e.levels_usize(), run.n).map_err(LookdownError::from)?;
        acc = coag(&one, &acc).map_err(LookdownError::from)?;
        out.push((e.time, MeasureState::from_partition(&acc, &run.initial_types)));
    }
    Ok(out)
}

// ----- fast extinction chain -----------------------------------------------------

/// Draws a uniform `k`-subset of `lo..=hi` into `out` (unsorted).
fn sample_subset<R: Rng + ?Sized>(lo: usize, hi: usize, k: usize, rng: &mut R, out: &mut Vec<usize>) {
    out.clear();
    let span = hi + 1 - lo;
    if k == 0 {
        return;
    }
    if k * 4 > span || k > 64 {
        let mut all: Vec<usize> = (lo..=hi).collect();
        for i in 0..k {
            let j = rng.random_range(i..span);
            all.swap(i, j);
        }
        out.extend_from_slice(&all[..k]);
    } else {
        // Floyd's algorithm
        for j in span - k..span {
            let r = rng.random_range(0..=j);
            let v = lo + r;
            if out.contains(&v) {
                out.push(lo + j);
            } else {
                out.push(v);
            }
        }
    }
}

/// Extinction times of the initial types at level `n`, simulated through the
/// lowest levels `Y(1) < … < Y(K) ≤ n` alone. Only events with two or more
/// marks in `[Y(K)]` move these levels; they arrive at rate `R(Y(K))` and
/// their marks above `Y(K)` are drawn from the conditional law. Same law as
/// reading the extinctions off a full graph, at a fraction of the cost.
pub fn simulate_extinctions(sampler: &MergerSampler, n: usize, max_time: f64, rng: &mut SimRng) -> ExtinctionRecord {
    assert!(n >= 2 && n <= sampler.n_max());
    let mut ext = ExtinctionRecord::new(n, 0.0);
    let mut y: Vec<usize> = (1..=n).collect();
    let mut t = 0.0;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut children = Vec::new();
    while y.len() > 1 {
        let m = *y.last().unwrap();
        let rate = sampler.total_rate(m);
        if rate <= 0.0 {
            break;
        }
        let dt: f64 = Exp1.sample(rng);
        if t + dt / rate > max_time {
            t = max_time;
            break;
        }
        t += dt / rate;
        let (q, comp) = sampler.sample(m, rng);
        let j = sampler.sample_extension(comp, m, q, n, rng);
        sample_subset(1, m, q, rng, &mut lower);
        sample_subset(m + 1, n, j, rng, &mut upper);
        children.clear();
        children.extend_from_slice(&lower);
        children.extend_from_slice(&upper);
        children.sort_unstable();
        let parent = children.remove(0);
        let mut c = 0;
        let mut shift = 0;
        for v in y.iter_mut().filter(|v| **v > parent) {
            let mut pos = *v + shift;
            while c < children.len() && children[c] <= pos {
                shift += 1;
                pos += 1;
                c += 1;
            }
            *v = pos;
        }
        let before = y.len();
        while y.len() > 1 && *y.last().unwrap() > n {
            y.pop();
        }
        if y.len() < before {
            ext.record(t, before, y.len());
        }
    }
    ext.horizon = if y.len() == 1 { t } else { max_time.max(t) };
    ext
}

/// Replicates of [`simulate_extinctions`] from one root seed.
pub fn extinction_sample(m: &LambdaMeasure, n: usize, runs: usize, max_time: f64, seed: u64) -> Result<Vec<ExtinctionRecord>, FvError> {
    let sampler = MergerSampler::new(m, n)?;
    Ok(rng::replicate(runs, seed, purpose::EXTINCTION, |_, rng| simulate_extinctions(&sampler, n, max_time, rng)))
}
