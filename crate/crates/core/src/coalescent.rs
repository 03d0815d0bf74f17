//! Jump-chain simulation of the Λ-coalescent restricted to `[n]`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::measure::{LambdaMeasure, MeasureError};
use crate::partition::Partition;
use crate::rates::MergerSampler;
use crate::rng::{self, purpose, SimRng};

/// Hard cap on the number of jumps of a single path.
pub const MAX_STEPS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoalescentError {
    #[error("need at least two initial blocks, got n = {0}")]
    TooSmall(usize),
    #[error("path exceeded {MAX_STEPS} steps without reaching the horizon")]
    StepOverflow,
    #[error("time {t} lies beyond the simulated horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// How far to simulate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    At(f64),
    Absorption,
}

impl Horizon {
    fn limit(self) -> f64 {
        match self {
            Horizon::At(t) => t,
            Horizon::Absorption => f64::INFINITY,
        }
    }
}

/// A sampled path `t ↦ Π_t^{[n]}`, stored at its jump times.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentPath {
    pub n: usize,
    /// `(jump_time, partition)`, starting with `(0, O_[n])`.
    pub steps: Vec<(f64, Partition)>,
    /// Time up to which the path is known: the horizon, or the absorption time.
    pub horizon: f64,
    /// True when the rates vanished before one block remained.
    pub stalled: bool,
    pub seed: u64,
}

impl CoalescentPath {
    /// Absorption time, if the path reached a single block.
    pub fn tmrca(&self) -> Option<f64> {
        self.steps.last().filter(|s| s.1.block_count() == 1 && self.n > 1).map(|s| s.0)
    }

    pub fn partition_at(&self, t: f64) -> Result<&Partition, CoalescentError> {
        let k = step_index(&self.steps, |s| s.0, t, self.horizon, self.absorbed())?;
        Ok(&self.steps[k].1)
    }

    fn absorbed(&self) -> bool {
        self.steps.last().is_some_and(|s| s.1.block_count() == 1)
    }
}

/// Block counts only; the cheap representation for large `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCountPath {
    pub n: usize,
    pub times: Vec<f64>,
    pub counts: Vec<usize>,
    pub horizon: f64,
    pub stalled: bool,
}

/// Anything with a right-continuous block-count step function.
pub trait BlockCounts {
    fn count_at(&self, t: f64) -> Result<usize, CoalescentError>;
}

impl BlockCounts for CoalescentPath {
    fn count_at(&self, t: f64) -> Result<usize, CoalescentError> {
        Ok(self.partition_at(t)?.block_count())
    }
}

impl BlockCounts for BlockCountPath {
    fn count_at(&self, t: f64) -> Result<usize, CoalescentError> {
        let absorbed = self.counts.last() == Some(&1);
        let k = step_index(&self.times, |&x| x, t, self.horizon, absorbed)?;
        Ok(self.counts[k])
    }
}

fn step_index<T, F: Fn(&T) -> f64>(steps: &[T], time: F, t: f64, horizon: f64, absorbed: bool) -> Result<usize, CoalescentError> {
    if !(t >= 0.0) || (t > horizon && !absorbed) {
        return Err(CoalescentError::BeyondHorizon { t, horizon });
    }
    Ok(steps.partition_point(|s| time(s) <= t) - 1)
}

/// Evaluates `#Π_t` on a grid.
pub fn block_count_curve<P: BlockCounts>(path: &P, grid: &[f64]) -> Result<Vec<usize>, CoalescentError> {
    grid.iter().map(|&t| path.count_at(t)).collect()
}

pub fn simulate_coalescent(m: &LambdaMeasure, n: usize, horizon: Horizon, seed: u64) -> Result<CoalescentPath, CoalescentError> {
    if n < 2 {
        return Err(CoalescentError::TooSmall(n));
    }
    let sampler = MergerSampler::new(m, n)?;
    let mut rng = rng::stream(seed, purpose::COALESCENT, 0);
    let mut path = simulate_with(&sampler, n, horizon, &mut rng)?;
    path.seed = seed;
    Ok(path)
}

/// Core of [`simulate_coalescent`] for callers that reuse one sampler across
/// many replicates.
pub fn simulate_with(sampler: &MergerSampler, n: usize, horizon: Horizon, rng: &mut SimRng) -> Result<CoalescentPath, CoalescentError> {
    if n < 2 {
        return Err(CoalescentError::TooSmall(n));
    }
    let limit = horizon.limit();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut current = Partition::singletons(n);
    let mut steps = vec![(0.0, current.clone())];
    let mut t = 0.0;
    let mut step_count = 0u64;
    loop {
        let b = current.block_count();
        if b == 1 {
            return Ok(CoalescentPath { n, horizon: t, steps, stalled: false, seed: 0 });
        }
        let rate = sampler.total_rate(b);
        if rate <= 0.0 {
            return Ok(CoalescentPath { n, horizon: limit, steps, stalled: true, seed: 0 });
        }
        let dt: f64 = Exp1.sample(rng);
        t += dt / rate;
        if t > limit {
            return Ok(CoalescentPath { n, horizon: limit, steps, stalled: false, seed: 0 });
        }
        step_count += 1;
        if step_count > MAX_STEPS {
            return Err(CoalescentError::StepOverflow);
        }
        let p = sampler.sample_size(b, rng);
        // partial Fisher-Yates over block indices
        order.clear();
        order.extend(0..b);
        for i in 0..p {
            let j = rng.random_range(i..b);
            order.swap(i, j);
        }
        let target = *order[..p].iter().min().unwrap();
        let mut merged = vec![false; b];
        for &k in &order[..p] {
            merged[k] = true;
        }
        for (e, block) in current.blocks().iter().enumerate() {
            if merged[e] {
                for &x in block {
                    labels[x - 1] = target;
                }
            } else {
                for &x in block {
                    labels[x - 1] = e;
                }
            }
        }
        current = Partition::from_labels(&labels).expect("labels form a partition");
        steps.push((t, current.clone()));
    }
}

/// Count-only chain: same law for `#Π_t`, but `O(1)` memory per jump.
pub fn simulate_block_counts(sampler: &MergerSampler, n: usize, horizon: Horizon, rng: &mut SimRng) -> Result<BlockCountPath, CoalescentError> {
    if n < 2 {
        return Err(CoalescentError::TooSmall(n));
    }
    let limit = horizon.limit();
    let mut times = vec![0.0];
    let mut counts = vec![n];
    let mut b = n;
    let mut t = 0.0;
    let mut step_count = 0u64;
    while b > 1 {
        let rate = sampler.total_rate(b);
        if rate <= 0.0 {
            return Ok(BlockCountPath { n, times, counts, horizon: limit, stalled: true });
        }
        let dt: f64 = Exp1.sample(rng);
        t += dt / rate;
        if t > limit {
            return Ok(BlockCountPath { n, times, counts, horizon: limit, stalled: false });
        }
        step_count += 1;
        if step_count > MAX_STEPS {
            return Err(CoalescentError::StepOverflow);
        }
        b -= sampler.sample_size(b, rng) - 1;
        times.push(t);
        counts.push(b);
    }
    Ok(BlockCountPath { n, times, counts, horizon: t, stalled: false })
}

/// `replicates` independent TMRCAs from one root seed.
pub fn tmrca_sample(m: &LambdaMeasure, n: usize, replicates: usize, seed: u64) -> Result<Vec<f64>, CoalescentError> {
    if n < 2 {
        return Err(CoalescentError::TooSmall(n));
    }
    let sampler = MergerSampler::new(m, n)?;
    let out = rng::replicate(replicates, seed, purpose::COALESCENT, |_, rng| {
        simulate_block_counts(&sampler, n, Horizon::Absorption, rng).map(|p| if p.stalled { f64::INFINITY } else { p.horizon })
    });
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_sd(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn path_invariants() {
        let m = LambdaMeasure::beta(1.2).unwrap();
        for seed in 0..20 {
            let p = simulate_coalescent(&m, 12, Horizon::Absorption, seed).unwrap();
            assert_eq!(p.steps[0], (0.0, Partition::singletons(12)));
            for w in p.steps.windows(2) {
                assert!(w[1].0 > w[0].0);
                assert!(w[1].1.block_count() < w[0].1.block_count());
                // coarsening: every block of the earlier partition sits inside one later block
                for block in w[0].1.blocks() {
                    let owner = w[1].1.block_of(block[0]);
                    assert!(block.iter().all(|&x| w[1].1.block_of(x) == owner));
                }
            }
            assert_eq!(p.steps.last().unwrap().1.block_count(), 1);
            assert_eq!(p.tmrca(), Some(p.horizon));
        }
    }

    #[test]
    fn kingman_pair_mean() {
        let m = LambdaMeasure::dirac0(1.0).unwrap();
        let xs = tmrca_sample(&m, 2, 100_000, 1).unwrap();
        let (mean, se) = mean_sd(&xs);
        assert!((mean - 1.0).abs() < 0.01 && (mean - 1.0).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn lebesgue_first_holding_time() {
        let m = LambdaMeasure::lebesgue();
        let sampler = MergerSampler::new(&m, 3).unwrap();
        let xs = rng::replicate(50_000, 2, purpose::COALESCENT, |_, rng| {
            simulate_block_counts(&sampler, 3, Horizon::Absorption, rng).unwrap().times[1]
        });
        let (mean, _) = mean_sd(&xs);
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn curve_semantics() {
        let m = LambdaMeasure::dirac0(1.0).unwrap();
        let p = simulate_coalescent(&m, 6, Horizon::Absorption, 9).unwrap();
        let tm = p.tmrca().unwrap();
        let c = block_count_curve(&p, &[0.0, tm, tm + 5.0]).unwrap();
        assert_eq!(c, vec![6, 1, 1]);
        let t1 = p.steps[1].0;
        assert_eq!(block_count_curve(&p, &[t1]).unwrap(), vec![p.steps[1].1.block_count()]);
        let short = simulate_coalescent(&m, 6, Horizon::At(0.01), 9).unwrap();
        assert!(matches!(short.count_at(0.5), Err(CoalescentError::BeyondHorizon { .. })));
    }

    #[test]
    fn zero_measure_stalls() {
        let m = LambdaMeasure::dirac0(0.0).unwrap();
        let p = simulate_coalescent(&m, 4, Horizon::At(3.0), 0).unwrap();
        assert!(p.stalled);
        assert_eq!(p.count_at(3.0).unwrap(), 4);
    }

    #[test]
    fn rejects_tiny_n() {
        let m = LambdaMeasure::dirac0(1.0).unwrap();
        assert!(matches!(simulate_coalescent(&m, 1, Horizon::Absorption, 0), Err(CoalescentError::TooSmall(1))));
    }

    #[test]
    fn full_and_count_chains_agree_in_law() {
        let m = LambdaMeasure::beta(1.5).unwrap();
        let sampler = MergerSampler::new(&m, 8).unwrap();
        let reps = 40_000;
        let full = rng::replicate(reps, 4, purpose::COALESCENT, |_, rng| {
            simulate_with(&sampler, 8, Horizon::At(0.4), rng).unwrap().count_at(0.4).unwrap()
        });
        let light = rng::replicate(reps, 5, purpose::COALESCENT, |_, rng| {
            simulate_block_counts(&sampler, 8, Horizon::At(0.4), rng).unwrap().count_at(0.4).unwrap()
        });
        let mut tv = 0.0;
        for k in 1..=8 {
            let a = full.iter().filter(|&&c| c == k).count() as f64 / reps as f64;
            let b = light.iter().filter(|&&c| c == k).count() as f64 / reps as f64;
            tv += 0.5 * (a - b).abs();
        }
        assert!(tv < 0.02, "tv {tv}");
    }
}
