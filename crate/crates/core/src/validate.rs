//! Statistical and exact checks that bind the simulators to the theory, each
//! producing a machine-readable [`TestReport`].

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::bridge::{partition_from_bridge, simulate_bridge_flow_with, BridgeError, JumpSampler};
use crate::coalescent::{simulate_block_counts, simulate_with, BlockCounts, CoalescentError, Horizon};
use crate::flemingviot::{extract_eves, simulate_fv_with, FvError, FvHorizon, DEFAULT_THETA};
use crate::lookdown::{flow_partition, sample_graph_with, LookdownError, LookdownGraph, ReproductionEvent};
use crate::measure::{LambdaMeasure, MeasureError, MeasureSpec, Regime};
use crate::partition::Partition;
use crate::rates::MergerSampler;
use crate::rng::{self, purpose, SimRng};

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Coalescent(#[from] CoalescentError),
    #[error(transparent)]
    Lookdown(#[from] LookdownError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Fv(#[from] FvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub id: String,
    pub parameters: Value,
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub sample_sizes: BTreeMap<String, usize>,
    pub seeds: Vec<u64>,
    /// Per-cell numbers behind the statistic.
    pub details: Value,
}

/// Decision thresholds; all of them are copied into the reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub tv: f64,
    pub se_multiple: f64,
    /// Largest tolerated relative standard error of an expected intensity.
    pub max_rel_se: f64,
    pub ks_p: f64,
    pub rank_corr_p: f64,
    pub speed_band: (f64, f64),
    /// Speed points with `G(n) > truncation_shift · t` are UNDECIDED: a
    /// coalescent started from `n` blocks runs about `G(n)` behind.
    pub truncation_shift: f64,
    pub min_runs: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tv: 0.02,
            se_multiple: 3.0,
            max_rel_se: 0.05,
            ks_p: 0.001,
            rank_corr_p: 0.01,
            speed_band: (0.85, 1.15),
            truncation_shift: 0.05,
            min_runs: 100,
        }
    }
}

fn sizes(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

// ----- statistics ------------------------------------------------------------------

/// Total variation distance between two empirical laws given as counts.
pub fn tv_distance<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> f64 {
    let na: usize = a.values().sum();
    let nb: usize = b.values().sum();
    if na == 0 || nb == 0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| {
            let pa = *a.get(k).unwrap_or(&0) as f64 / na as f64;
            let pb = *b.get(k).unwrap_or(&0) as f64 / nb as f64;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

/// Typical size of the TV estimate when both samples share one law:
/// `½ Σ_k E|N(0, σ_k²)|` with the pooled cell frequencies.
pub fn tv_noise<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> f64 {
    let na: usize = a.values().sum();
    let nb: usize = b.values().sum();
    if na == 0 || nb == 0 {
        return 1.0;
    }
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let pooled = (na + nb) as f64;
    let scale = 1.0 / na as f64 + 1.0 / nb as f64;
    0.5 * (2.0 / std::f64::consts::PI).sqrt()
        * keys
            .into_iter()
            .map(|k| {
                let p = (*a.get(k).unwrap_or(&0) + *b.get(k).unwrap_or(&0)) as f64 / pooled;
                (p * (1.0 - p) * scale).sqrt()
            })
            .sum::<f64>()
}

/// PASS below the threshold, FAIL clearly above it; UNDECIDED when the
/// sampling noise is too large to tell.
fn tv_verdict(tv: f64, noise: f64, threshold: f64) -> Verdict {
    if tv - 2.0 * noise >= threshold {
        Verdict::Fail
    } else if noise > threshold / 2.0 {
        Verdict::Undecided
    } else if tv < threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// One-sample Kolmogorov-Smirnov test against uniform `[0,1]`: `(D, p)`,
/// with the asymptotic Kolmogorov distribution and Stephens' correction.
pub fn ks_uniform(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / nf - x).max(x - i as f64 / nf))
        .fold(0.0, f64::max);
    let lam = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    (d, kolmogorov_q(lam))
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lam: f64) -> f64 {
    if lam < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lam * lam).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation and its two-sided p-value (t approximation).
pub fn spearman(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return (0.0, 1.0);
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (rx[i] - mean, ry[i] - mean);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 1.0);
    }
    let rho = sxy / (sxx * syy).sqrt();
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho).max(1e-300)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (rho, (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

// ----- tests ---------------------------------------------------------------------

/// Per-size merger intensities of the lookdown construction restricted to
/// `n` levels against `C(n,p) λ_{n,p}`, over unit-length windows.
pub fn rate_match_test(m: &LambdaMeasure, n: usize, replicates: usize, seed: u64, th: &Thresholds) -> Result<TestReport, ValidateError> {
    if !(2..=6).contains(&n) {
        return Err(ValidateError::Domain(format!("rate_match_test needs 2 ≤ n ≤ 6, got {n}")));
    }
    let sampler = MergerSampler::new(m, n)?;
    let window = 1.0;
    let counts: Vec<Vec<usize>> = rng::replicate(replicates, seed, purpose::VALIDATE, |_, rng| {
        let g = sample_graph_with(&sampler, n, (0.0, window), rng).expect("valid window");
        let mut c = vec![0usize; n + 1];
        for e in g.events() {
            c[e.levels.len()] += 1;
        }
        c
    });
    let exposure = replicates as f64 * window;
    let mut worst_z: f64 = 0.0;
    let mut worst_rel_se: f64 = 0.0;
    let mut cells = Vec::new();
    for p in 2..=n {
        let count: usize = counts.iter().map(|c| c[p]).sum();
        let expected = sampler.merger_weight(n, p);
        let observed = count as f64 / exposure;
        let z = if expected > 0.0 {
            let se = (expected / exposure).sqrt();
            worst_rel_se = worst_rel_se.max(se / expected);
            (observed - expected) / se
        } else if count > 0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst_z = worst_z.max(z.abs());
        let subsets = binomial(n, p) as f64;
        cells.push(json!({
            "p": p, "count": count, "intensity": observed, "expected": expected, "z": z,
            "per_subset": observed / subsets, "expected_per_subset": expected / subsets,
        }));
    }
    let verdict = if worst_rel_se > th.max_rel_se {
        Verdict::Undecided
    } else if worst_z <= th.se_multiple {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(TestReport {
        id: "rate_match".into(),
        parameters: json!({"measure": m.spec(), "n": n, "window": window, "max_rel_se": th.max_rel_se}),
        statistic: worst_z.min(f64::MAX),
        threshold: th.se_multiple,
        verdict,
        sample_sizes: sizes(&[("replicates", replicates)]),
        seeds: vec![seed],
        details: json!({"cells": cells, "max_rel_se": worst_rel_se}),
    })
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Block counts at time `t` from the exact bridge flow (`ε = 0`) against the
/// jump chain. `t_chain` differs from `t` only in the negative control.
pub fn duality_test(
    m: &LambdaMeasure,
    n: usize,
    t: f64,
    t_chain: Option<f64>,
    samples: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<TestReport, ValidateError> {
    let regime = m.classify()?.regime;
    if regime != Regime::Discrete {
        return Err(ValidateError::Domain(format!("duality_test needs a DISCRETE measure, got {regime}")));
    }
    if !(t >= 0.0) {
        return Err(ValidateError::Domain(format!("time must be nonnegative, got {t}")));
    }
    let t_chain = t_chain.unwrap_or(t);
    let js = JumpSampler::new(m, 0.0)?;
    let sampler = MergerSampler::new(m, n)?;
    let (seed_b, seed_c) = (rng::derive_seed(seed, 1), rng::derive_seed(seed, 2));
    let bridge_side: Vec<usize> = rng::replicate(samples, seed_b, purpose::BRIDGE, |_, rng| {
        let flow = simulate_bridge_flow_with(&js, (-t, 0.0), rng);
        let f = flow.bridge(-t, 0.0).expect("inside window");
        let v: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        partition_from_bridge(&f, &v).block_count()
    });
    let chain_side: Vec<usize> = rng::replicate(samples, seed_c, purpose::COALESCENT, |_, rng| {
        let path = simulate_block_counts(&sampler, n, Horizon::At(t_chain), rng).expect("n ≥ 2");
        path.count_at(t_chain).expect("inside horizon")
    });
    let (a, b) = (histogram(&bridge_side), histogram(&chain_side));
    let tv = tv_distance(&a, &b);
    let noise = tv_noise(&a, &b);
    Ok(TestReport {
        id: "duality".into(),
        parameters: json!({"measure": m.spec(), "n": n, "t": t, "t_chain": t_chain}),
        statistic: tv,
        threshold: th.tv,
        verdict: tv_verdict(tv, noise, th.tv),
        sample_sizes: sizes(&[("bridge", samples), ("chain", samples)]),
        seeds: vec![seed_b, seed_c],
        details: json!({"noise": noise, "bridge": sorted_hist(&a), "chain": sorted_hist(&b)}),
    })
}

fn histogram<K: Ord + Clone>(xs: &[K]) -> BTreeMap<K, usize> {
    let mut h = BTreeMap::new();
    for x in xs {
        *h.entry(x.clone()).or_insert(0) += 1;
    }
    h
}

fn sorted_hist<K: ToString>(h: &BTreeMap<K, usize>) -> Vec<(String, usize)> {
    h.iter().map(|(k, &c)| (k.to_string(), c)).collect()
}

/// `E #Π_t / v(t)` against the band, per grid point. Points where
/// `v(t) > n/2`, where the start from `n` blocks shifts time noticeably, or
/// where every replicate has absorbed are UNDECIDED. The ratio against
/// `v(t + G(n))` is reported alongside.
pub fn speed_test(m: &LambdaMeasure, n: usize, t_grid: &[f64], replicates: usize, seed: u64, th: &Thresholds) -> Result<TestReport, ValidateError> {
    let regime = m.classify()?.regime;
    if regime != Regime::Cdi {
        return Err(ValidateError::Domain(format!("speed_test needs a CDI measure, got {regime}")));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(ValidateError::Domain("t_grid must be non-empty and positive".into()));
    }
    let sampler = MergerSampler::new(m, n)?;
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let curves: Vec<Vec<usize>> = rng::replicate(replicates, seed, purpose::VALIDATE, |_, rng| {
        let path = simulate_block_counts(&sampler, n, Horizon::At(t_max), rng).expect("n ≥ 2");
        t_grid.iter().map(|&t| path.count_at(t).expect("inside horizon")).collect()
    });
    let (lo, hi) = th.speed_band;
    let shift = m.inverse_psi_tail(n as f64)?;
    let mut points = Vec::new();
    let mut verdicts = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, &t) in t_grid.iter().enumerate() {
        let v = m.cdi_speed(t)?;
        let mean = curves.iter().map(|c| c[k] as f64).sum::<f64>() / replicates.max(1) as f64;
        let ratio = mean / v;
        let shifted = mean / m.cdi_speed(t + shift)?;
        let verdict = if v > n as f64 / 2.0 || shift > th.truncation_shift * t || mean <= 1.0 || replicates == 0 {
            Verdict::Undecided
        } else if (lo..=hi).contains(&ratio) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        if verdict != Verdict::Undecided {
            worst = worst.max((ratio - 1.0).abs());
        }
        verdicts.push(verdict);
        points.push(json!({"t": t, "v": v, "mean_blocks": mean, "ratio": ratio, "shifted_ratio": shifted, "verdict": verdict}));
    }
    Ok(TestReport {
        id: "speed".into(),
        parameters: json!({"measure": m.spec(), "n": n, "t_grid": t_grid, "band": [lo, hi], "truncation_shift": th.truncation_shift, "g_n": shift}),
        statistic: worst,
        threshold: (1.0 - lo).min(hi - 1.0),
        verdict: combine(&verdicts),
        sample_sizes: sizes(&[("replicates", replicates)]),
        seeds: vec![seed],
        details: json!({"points": points}),
    })
}

/// FAIL dominates, then PASS; all-UNDECIDED stays UNDECIDED.
pub fn combine(vs: &[Verdict]) -> Verdict {
    if vs.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if vs.contains(&Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Undecided
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSource {
    Coalescent,
    Lookdown,
    /// Negative control: the lookdown construction with every merger moved
    /// onto the lowest levels.
    LevelBiased,
}

/// Fixed permutation used by [`exchangeability_test`]: `i ↦ i+1`, `n ↦ 1`.
fn cyclic(n: usize) -> Vec<usize> {
    (1..=n).map(|i| i % n + 1).collect()
}

/// TV between the law of `Π_t` on `[n]` and its image under a fixed
/// permutation.
pub fn exchangeability_test(
    source: PartitionSource,
    m: &LambdaMeasure,
    n: usize,
    t: f64,
    samples: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<TestReport, ValidateError> {
    if !(2..=12).contains(&n) || !(t > 0.0) {
        return Err(ValidateError::Domain(format!("exchangeability_test needs 2 ≤ n ≤ 12 and t > 0, got n={n}, t={t}")));
    }
    let sampler = MergerSampler::new(m, n)?;
    let draw = |rng: &mut SimRng| -> Partition {
        match source {
            PartitionSource::Coalescent => {
                let path = simulate_with(&sampler, n, Horizon::At(t), rng).expect("n ≥ 2");
                path.partition_at(t).expect("inside horizon").clone()
            }
            PartitionSource::Lookdown => {
                let g = sample_graph_with(&sampler, n, (0.0, t), rng).expect("valid window");
                flow_partition(&g, 0.0, t).expect("inside window")
            }
            PartitionSource::LevelBiased => {
                let g = sample_graph_with(&sampler, n, (0.0, t), rng).expect("valid window");
                let events: Vec<ReproductionEvent> = g
                    .events()
                    .map(|e| ReproductionEvent { time: e.time, levels: (1..=e.levels.len()).collect() })
                    .collect();
                let biased = LookdownGraph::from_events(n, (0.0, t), &events).expect("valid events");
                flow_partition(&biased, 0.0, t).expect("inside window")
            }
        }
    };
    let parts: Vec<String> = rng::replicate(samples, seed, purpose::VALIDATE, |_, rng| draw(rng).to_string());
    let perm = cyclic(n);
    let permuted: Vec<String> = parts
        .iter()
        .map(|s| s.parse::<Partition>().expect("round trip").permute(&perm).to_string())
        .collect();
    let (a, b) = (histogram(&parts), histogram(&permuted));
    let tv = tv_distance(&a, &b);
    let noise = tv_noise(&a, &b);
    Ok(TestReport {
        id: "exchangeability".into(),
        parameters: json!({"source": source, "measure": m.spec(), "n": n, "t": t, "permutation": perm}),
        statistic: tv,
        threshold: th.tv,
        verdict: tv_verdict(tv, noise, th.tv),
        sample_sizes: sizes(&[("samples", samples)]),
        seeds: vec![seed],
        details: json!({"noise": noise, "shapes": sorted_hist(&a)}),
    })
}

/// KS uniformity of the rank-1 Eve (and rank-2 where resolved) and rank
/// correlation between the rank-1 location and the fixation time.
pub fn eve_uniformity_test(m: &LambdaMeasure, n: usize, runs: usize, seed: u64, th: &Thresholds) -> Result<TestReport, ValidateError> {
    let class = m.classify()?;
    let sampler = MergerSampler::new(m, n)?;
    let horizon = FvHorizon::UntilFixation { initial: 1.0, max: 1e4 };
    let results: Vec<Result<(f64, Option<f64>, Option<f64>), FvError>> = rng::replicate(runs, seed, purpose::VALIDATE, |_, rng| {
        let types: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mut run = simulate_fv_with(&sampler, n, horizon, rng, types)?;
        run.class = Some(class);
        let report = extract_eves(&run, DEFAULT_THETA)?;
        let first = report.ordered_eves[0].location;
        let second = (report.resolved_upto >= 2).then(|| report.ordered_eves[1].location);
        Ok((first, second, run.extinctions.fixation_time))
    });
    let results: Vec<_> = results.into_iter().collect::<Result<_, _>>()?;
    let firsts: Vec<f64> = results.iter().map(|r| r.0).collect();
    let seconds: Vec<f64> = results.iter().filter_map(|r| r.1).collect();
    let (xs, fix): (Vec<f64>, Vec<f64>) = results.iter().filter_map(|r| r.2.map(|f| (r.0, f))).unzip();

    let (d1, p1) = ks_uniform(&firsts);
    let rank2 = (seconds.len() >= th.min_runs).then(|| ks_uniform(&seconds));
    let (rho, p_rho) = spearman(&xs, &fix);
    let verdict = if runs < th.min_runs || xs.len() < th.min_runs {
        Verdict::Undecided
    } else if p1 > th.ks_p && rank2.is_none_or(|r| r.1 > th.ks_p) && p_rho > th.rank_corr_p {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(TestReport {
        id: "eve_uniformity".into(),
        parameters: json!({"measure": m.spec(), "n": n, "theta": DEFAULT_THETA, "rank_corr_p": th.rank_corr_p}),
        statistic: p1,
        threshold: th.ks_p,
        verdict,
        sample_sizes: sizes(&[("runs", runs), ("rank2_resolved", seconds.len()), ("fixed", xs.len())]),
        seeds: vec![seed],
        details: json!({
            "ks_rank1": {"d": d1, "p": p1},
            "ks_rank2": rank2.map(|(d, p)| json!({"d": d, "p": p})),
            "spearman": {"rho": rho, "p": p_rho},
        }),
    })
}

// ----- suites ----------------------------------------------------------------------

/// One entry of a validation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestSpec {
    RateMatch {
        measure: MeasureSpec,
        n: usize,
        replicates: usize,
    },
    Duality {
        measure: MeasureSpec,
        n: usize,
        t: f64,
        #[serde(default)]
        t_chain: Option<f64>,
        samples: usize,
    },
    Speed {
        measure: MeasureSpec,
        n: usize,
        t_grid: Vec<f64>,
        replicates: usize,
    },
    Exchangeability {
        source: PartitionSource,
        measure: MeasureSpec,
        #[serde(default = "four")]
        n: usize,
        t: f64,
        samples: usize,
    },
    EveUniformity {
        measure: MeasureSpec,
        n: usize,
        runs: usize,
    },
}

fn four() -> usize {
    4
}

impl TestSpec {
    /// Overrides the replicate/sample/run count.
    pub fn with_replicates(mut self, r: usize) -> Self {
        match &mut self {
            TestSpec::RateMatch { replicates, .. } | TestSpec::Speed { replicates, .. } => *replicates = r,
            TestSpec::Duality { samples, .. } | TestSpec::Exchangeability { samples, .. } => *samples = r,
            TestSpec::EveUniformity { runs, .. } => *runs = r,
        }
        self
    }

    pub fn run(&self, seed: u64, th: &Thresholds) -> Result<TestReport, ValidateError> {
        match self {
            TestSpec::RateMatch { measure, n, replicates } => rate_match_test(&measure.build()?, *n, *replicates, seed, th),
            TestSpec::Duality { measure, n, t, t_chain, samples } => duality_test(&measure.build()?, *n, *t, *t_chain, *samples, seed, th),
            TestSpec::Speed { measure, n, t_grid, replicates } => speed_test(&measure.build()?, *n, t_grid, *replicates, seed, th),
            TestSpec::Exchangeability { source, measure, n, t, samples } => {
                exchangeability_test(*source, &measure.build()?, *n, *t, *samples, seed, th)
            }
            TestSpec::EveUniformity { measure, n, runs } => eve_uniformity_test(&measure.build()?, *n, *runs, seed, th),
        }
    }
}

/// The suite run by default: every test on Kingman's coalescent, at sizes
/// that finish in well under a minute.
pub fn default_suite() -> Vec<TestSpec> {
    let kingman = MeasureSpec::Dirac0 { mass: 1.0 };
    vec![
        TestSpec::RateMatch { measure: kingman.clone(), n: 3, replicates: 2000 },
        TestSpec::Exchangeability { source: PartitionSource::Coalescent, measure: kingman.clone(), n: 4, t: 0.5, samples: 50_000 },
        TestSpec::Exchangeability { source: PartitionSource::Lookdown, measure: kingman.clone(), n: 4, t: 0.5, samples: 50_000 },
        TestSpec::Speed { measure: kingman.clone(), n: 2000, t_grid: vec![0.01, 0.05, 0.1], replicates: 50 },
        TestSpec::EveUniformity { measure: kingman, n: 50, runs: 500 },
    ]
}

/// Harness self-tests, each designed to FAIL.
pub fn negative_controls() -> Vec<TestSpec> {
    let kingman = MeasureSpec::Dirac0 { mass: 1.0 };
    vec![
        TestSpec::Duality { measure: MeasureSpec::Dirac { x: 0.5, mass: 1.0 }, n: 5, t: 1.0, t_chain: Some(2.0), samples: 20_000 },
        TestSpec::Exchangeability { source: PartitionSource::LevelBiased, measure: kingman, n: 4, t: 0.5, samples: 20_000 },
    ]
}

/// Runs every test with a derived seed; reports are ordered by id, which is
/// prefixed with the entry's position.
pub fn run_suite(specs: &[TestSpec], seed: u64, th: &Thresholds) -> Result<Vec<TestReport>, ValidateError> {
    let mut reports = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = s.run(rng::derive_seed(seed, i as u64), th)?;
            r.id = format!("{:02}-{}", i, r.id);
            Ok(r)
        })
        .collect::<Result<Vec<_>, ValidateError>>()?;
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(reports)
}
