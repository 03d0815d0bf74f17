//! Kallenberg bridges `F(x) = Σ a_i 1{U_i ≤ x} + d·x`, their composition and
//! inverse, the partitions they induce, and discrete-event flows of bridges.
//!
//! Jump locations are produced once (at event sampling, or as an inverse of
//! the right-hand bridge during composition) and then only copied, so two
//! points fall in the same jump exactly when their inverses are bitwise
//! equal.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Density, IntegralValue, LambdaMeasure, MeasureError};
use crate::partition::Partition;
use crate::quadrature::{integrate_breakpoints, Tolerance};
use crate::rng::{self, purpose, SimRng};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("invalid bridge: {0}")]
    Invalid(String),
    #[error("the Kingman component Λ({{0}}) = {0} has no elementary-bridge representation")]
    KingmanComponent(f64),
    #[error("truncation ε = 0 needs a finite ν, but ∫ν is infinite for this measure")]
    InfiniteRate,
    #[error("truncation must lie in [0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("time {t} outside the flow window [{s0}, {s1}]")]
    OutOfWindow { t: f64, s0: f64, s1: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("event file: {0}")]
    Io(#[from] std::io::Error),
    #[error("event file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Jumps sorted by location, with sizes in `(0, 1]`, and the linear drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    jumps: Vec<(f64, f64)>,
    drift: f64,
}

impl Bridge {
    pub fn identity() -> Self {
        Bridge { jumps: Vec::new(), drift: 1.0 }
    }

    /// A bridge with the given jumps; the drift is `1 - Σ sizes`.
    pub fn new(mut jumps: Vec<(f64, f64)>) -> Result<Self, BridgeError> {
        for &(u, a) in &jumps {
            if !(0.0..=1.0).contains(&u) {
                return Err(BridgeError::Invalid(format!("jump location {u} outside [0, 1]")));
            }
            if !(a > 0.0 && a <= 1.0) {
                return Err(BridgeError::Invalid(format!("jump size {a} outside (0, 1]")));
            }
        }
        jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
        if jumps.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(BridgeError::Invalid("two jumps at one location".into()));
        }
        let total: f64 = jumps.iter().map(|j| j.1).sum();
        if total > 1.0 + 1e-12 {
            return Err(BridgeError::Invalid(format!("jump sizes sum to {total} > 1")));
        }
        Ok(Bridge { jumps, drift: (1.0 - total).max(0.0) })
    }

    /// One jump of size `u` at `loc`, drift `1 - u`.
    pub fn elementary(u: f64, loc: f64) -> Result<Self, BridgeError> {
        Self::new(vec![(loc, u)])
    }

    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Right-continuous evaluation, with `F(1) = 1`.
    pub fn eval(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        if x < 0.0 {
            return 0.0;
        }
        let k = self.jumps.partition_point(|j| j.0 <= x);
        self.jumps[..k].iter().map(|j| j.1).sum::<f64>() + self.drift * x
    }

    /// Left limit `F(x-)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = self.jumps.partition_point(|j| j.0 < x);
        self.jumps[..k].iter().map(|j| j.1).sum::<f64>() + self.drift * x.min(1.0)
    }

    /// `(S_i, L_i, R_i)`: jump mass strictly before jump `i`, and the values
    /// `F(U_i-)`, `F(U_i)`.
    fn intervals(&self) -> Vec<(f64, f64, f64)> {
        let mut s = 0.0;
        self.jumps
            .iter()
            .map(|&(u, a)| {
                let l = s + self.drift * u;
                let out = (s, l, l + a);
                s += a;
                out
            })
            .collect()
    }

    /// `F⁻¹(v) = inf{x : F(x) > v}`. Values inside a jump interval
    /// `[F(U-), F(U))` map to `U`. For `v ≥ 1` the result is 1 when there is
    /// drift and the last jump location otherwise.
    pub fn inverse(&self, v: f64) -> f64 {
        let last = self.jumps.last().map_or(1.0, |j| j.0);
        if v >= 1.0 {
            return if self.drift > 0.0 { 1.0 } else { last };
        }
        let mut s = 0.0;
        let mut prev_u = 0.0;
        for &(u, a) in &self.jumps {
            let l = s + self.drift * u;
            let r = l + a;
            if r > v {
                if l <= v {
                    return u;
                }
                return ((v - s) / self.drift).clamp(prev_u, u);
            }
            s += a;
            prev_u = u;
        }
        if self.drift > 0.0 {
            ((v - s) / self.drift).clamp(prev_u, 1.0)
        } else {
            last
        }
    }

    /// `inf{x : F(x) ≥ w}`: where a jump of an outer bridge at `w` shows up
    /// in a composition.
    fn preimage_ge(&self, w: f64, iv: &[(f64, f64, f64)]) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let i = iv.partition_point(|x| x.2 < w);
        if i < iv.len() && w >= iv[i].1 {
            return self.jumps[i].0;
        }
        let (s, lo) = if i == 0 { (0.0, 0.0) } else { (iv[i - 1].0 + self.jumps[i - 1].1, self.jumps[i - 1].0) };
        let hi = if i < iv.len() { self.jumps[i].0 } else { 1.0 };
        if self.drift > 0.0 {
            ((w - s) / self.drift).clamp(lo, hi)
        } else {
            hi
        }
    }
}

/// `F2 ∘ F1` in jump/drift form. Each jump of `F1` keeps its location and
/// absorbs the part of `F2` over its interval; jumps of `F2` over the drift
/// range of `F1` move to their preimage.
pub fn compose(f2: &Bridge, f1: &Bridge) -> Bridge {
    let iv = f1.intervals();
    let mut sizes: Vec<f64> = iv.iter().map(|&(_, l, r)| f2.drift * (r - l)).collect();
    let mut extra: Vec<(f64, f64)> = Vec::new();
    for &(w, b) in &f2.jumps {
        let x = f1.preimage_ge(w, &iv);
        match f1.jumps.binary_search_by(|j| j.0.total_cmp(&x)) {
            Ok(i) => sizes[i] += b,
            Err(_) => extra.push((x, b)),
        }
    }
    let mut jumps: Vec<(f64, f64)> = f1.jumps.iter().zip(&sizes).map(|(j, &a)| (j.0, a)).collect();
    jumps.extend(extra);
    jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(jumps.len());
    for (u, a) in jumps {
        match merged.last_mut() {
            Some(last) if last.0 == u => last.1 += a,
            _ => merged.push((u, a)),
        }
    }
    merged.retain(|j| j.1 > 0.0);
    for j in &mut merged {
        j.1 = j.1.min(1.0);
    }
    Bridge {
        jumps: merged,
        drift: f1.drift * f2.drift,
    }
}

/// `i ~ j ⇔ F⁻¹(V_i) = F⁻¹(V_j)`, compared bitwise.
pub fn partition_from_bridge(f: &Bridge, v: &[f64]) -> Partition {
    let labels: Vec<u64> = v.iter().map(|&x| f.inverse(x).to_bits()).collect();
    Partition::from_labels(&labels).expect("non-empty sample")
}

/// Partition of the sample and, per block, the ancestor `F⁻¹(e_min)`.
pub fn eves_pullback(f: &Bridge, eves: &[f64]) -> (Partition, Vec<f64>) {
    let pi = partition_from_bridge(f, eves);
    let anc = pi.blocks().iter().map(|b| f.inverse(eves[b[0] - 1])).collect();
    (pi, anc)
}

// ----- flows --------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeEvent {
    pub t: f64,
    pub u: f64,
    #[serde(rename = "U")]
    pub loc: f64,
}

/// Time-ordered elementary bridges over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeFlowEvents {
    pub window: (f64, f64),
    pub epsilon: f64,
    /// `∫_0^ε u ν(du)`: jump mass per unit time left out by the truncation.
    pub dropped_mass: IntegralValue,
    pub events: Vec<BridgeEvent>,
}

impl BridgeFlowEvents {
    /// `F_{s,t}`: composition of the events in `(s, t]`, latest outermost.
    pub fn bridge(&self, s: f64, t: f64) -> Result<Bridge, BridgeError> {
        for x in [s, t] {
            if !(x >= self.window.0 && x <= self.window.1) {
                return Err(BridgeError::OutOfWindow { t: x, s0: self.window.0, s1: self.window.1 });
            }
        }
        let mut acc = Bridge::identity();
        for e in self.events.iter().filter(|e| e.t > s && e.t <= t) {
            acc = compose(&Bridge::elementary(e.u, e.loc)?, &acc);
        }
        Ok(acc)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R, window: (f64, f64), epsilon: f64) -> Result<Self, BridgeError> {
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || (i == 0 && line.starts_with("{\"meta\"")) {
                continue;
            }
            let e: BridgeEvent = serde_json::from_str(&line).map_err(|e| BridgeError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            events.push(e);
        }
        Ok(BridgeFlowEvents {
            window,
            epsilon,
            dropped_mass: IntegralValue::NotEvaluated,
            events,
        })
    }
}

/// Sampler for the jump sizes `u ~ ν|_{[ε,1)} / ν([ε,1))`.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    epsilon: f64,
    rate: f64,
    atoms: Vec<(f64, f64)>,
    atom_rate: f64,
    /// Cells `(lo, hi, cumulative ν mass, log-scale)` of the density part.
    cells: Vec<(f64, f64, f64, bool)>,
    dropped: IntegralValue,
}

impl JumpSampler {
    pub fn new(m: &LambdaMeasure, epsilon: f64) -> Result<Self, BridgeError> {
        if m.kingman_mass() > 0.0 {
            return Err(BridgeError::KingmanComponent(m.kingman_mass()));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(BridgeError::BadEpsilon(epsilon));
        }
        let atoms: Vec<(f64, f64)> = m.atoms().iter().filter(|a| a.0 >= epsilon).map(|&(x, c)| (x, c / (x * x))).collect();
        let atom_rate: f64 = atoms.iter().map(|a| a.1).sum();
        let dropped_atoms: f64 = m.atoms().iter().filter(|a| a.0 < epsilon).map(|&(x, c)| c / x).sum();
        let mut cells = Vec::new();
        let mut dropped = IntegralValue::Finite(dropped_atoms);
        if let Some(d) = m.density() {
            let lo = if epsilon > 0.0 {
                epsilon
            } else {
                // ε = 0 needs ∫ν < ∞, and then ν((0, 1e-30)) is negligible
                match m.classify()?.integral_report.nu_mass {
                    IntegralValue::Finite(_) => 1e-30,
                    _ => return Err(BridgeError::InfiniteRate),
                }
            };
            cells = density_cells(d, lo)?;
            if epsilon > 0.0 {
                let tol = Tolerance { rel: 1e-9, ..Tolerance::default() };
                let mut pts = vec![0.0];
                let mut x = epsilon;
                while x > 1e-12 {
                    pts.push(x);
                    x *= 0.25;
                }
                pts.push(epsilon);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                dropped = match integrate_breakpoints(|u| if u > 0.0 { d.eval(u) / u } else { 0.0 }, &pts, tol) {
                    Ok(v) if v.is_finite() => dropped.plus(v),
                    _ => IntegralValue::Divergent,
                };
            }
        }
        let density_rate = cells.last().map_or(0.0, |c| c.2);
        Ok(JumpSampler {
            epsilon,
            rate: atom_rate + density_rate,
            atoms,
            atom_rate,
            cells,
            dropped,
        })
    }

    /// `ν([ε, 1))`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dropped_mass(&self) -> IntegralValue {
        self.dropped
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut target = rng.random::<f64>() * self.rate;
        if target < self.atom_rate {
            for &(x, r) in &self.atoms {
                if target < r {
                    return x;
                }
                target -= r;
            }
            return self.atoms.last().unwrap().0;
        }
        target -= self.atom_rate;
        let k = self.cells.partition_point(|c| c.2 <= target).min(self.cells.len() - 1);
        let (lo, hi, _, log_scale) = self.cells[k];
        let v: f64 = rng.random();
        if log_scale {
            lo * (hi / lo).powf(v)
        } else {
            // log-uniform in the distance to 1
            let (a, b) = (1.0 - hi, 1.0 - lo);
            1.0 - a.max(1e-300) * (b / a.max(1e-300)).powf(v)
        }
    }
}

/// Inverse-CDF table for `ν` on `[lo, 1)`: geometric cells in `u` below 1/2
/// and in `1 - u` above, sampled log-uniformly within a cell.
fn density_cells(d: &Density, lo: f64) -> Result<Vec<(f64, f64, f64, bool)>, BridgeError> {
    const PER_OCTAVE: usize = 16;
    let mut edges_lo = vec![lo.min(0.5)];
    while *edges_lo.last().unwrap() < 0.5 {
        let next = (edges_lo.last().unwrap() * 2f64.powf(1.0 / PER_OCTAVE as f64)).min(0.5);
        edges_lo.push(next);
    }
    let mut edges_hi = vec![0.5];
    let mut gap = 0.5;
    while gap > 1e-12 {
        gap /= 2f64.powf(1.0 / PER_OCTAVE as f64);
        edges_hi.push(1.0 - gap);
    }
    edges_hi.push(1.0);
    let mut cells = Vec::new();
    let mut cum = 0.0f64;
    let nu = |u: f64| if u > 0.0 { d.eval(u) / (u * u) } else { 0.0 };
    for (w, log_scale) in [(edges_lo, true), (edges_hi, false)] {
        for pair in w.windows(2) {
            if pair[1] <= pair[0] {
                continue;
            }
            let tol = Tolerance { abs: 1e-13 * cum.max(1.0), rel: 1e-10, ..Tolerance::default() };
            cum += integrate_breakpoints(nu, pair, tol).map_err(MeasureError::from)?;
            cells.push((pair[0], pair[1], cum, log_scale));
        }
    }
    Ok(cells)
}

/// Poisson events with rate `ν([ε,1))`, sizes from `ν` restricted to
/// `[ε, 1)`, locations uniform.
pub fn simulate_bridge_flow(m: &LambdaMeasure, window: (f64, f64), epsilon: f64, seed: u64) -> Result<BridgeFlowEvents, BridgeError> {
    let js = JumpSampler::new(m, epsilon)?;
    let mut rng = rng::stream(seed, purpose::BRIDGE, 0);
    Ok(simulate_bridge_flow_with(&js, window, &mut rng))
}

pub fn simulate_bridge_flow_with(js: &JumpSampler, window: (f64, f64), rng: &mut SimRng) -> BridgeFlowEvents {
    let mut events = Vec::new();
    let mut t = window.0;
    if js.rate > 0.0 {
        loop {
            let dt: f64 = Exp1.sample(rng);
            t += dt / js.rate;
            if t > window.1 {
                break;
            }
            let u = js.sample(rng);
            let loc: f64 = rng.random();
            events.push(BridgeEvent { t, u, loc });
        }
    }
    BridgeFlowEvents {
        window,
        epsilon: js.epsilon,
        dropped_mass: js.dropped,
        events,
    }
}
