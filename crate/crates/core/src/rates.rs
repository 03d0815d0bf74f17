//! Tables of total merger rates `R(b) = Σ_p C(b,p) λ_{b,p}` and exact
//! samplers for the merger size `p`.
//!
//! `Λ` is split into components (Kingman part, each atom, the density).
//! Per component the weights `w_p = C(b,p) λ_{b,p}` satisfy a simple ratio
//! recursion in `p`, so rates are accumulated in a fixed order and the
//! sampler walks the same sum.

use rand::Rng;
use rand_distr::{Beta as BetaDist, Binomial, Distribution};
use statrs::function::beta::ln_beta;
use statrs::function::factorial::ln_binomial;

use crate::measure::{Density, LambdaMeasure, MeasureError};
use crate::quadrature::{integrate_breakpoints, Tolerance};

/// Largest `n` accepted for piecewise-linear densities, whose rate rows are
/// stored in full.
pub const TABLE_N_MAX: usize = 2000;

#[derive(Debug, Clone)]
enum Component {
    Kingman(f64),
    Atom { x: f64, c: f64 },
    Beta { a: f64, b: f64, mass: f64 },
    /// `rows[b][p]` = `C(b,p) λ_{b,p}`.
    Table { rows: Vec<Vec<f64>> },
}

impl Component {
    fn total(&self, b: usize) -> f64 {
        if b < 2 {
            return 0.0;
        }
        match self {
            Component::Kingman(c) => c * choose2(b),
            Component::Atom { x, c } => c / (x * x) * binomial_at_least_two(b, *x),
            Component::Beta { .. } => {
                let mut sum = 0.0;
                self.walk(b, |w| {
                    sum += w;
                    false
                });
                sum
            }
            Component::Table { rows } => rows[b].iter().sum(),
        }
    }

    /// Visits `w_2, w_3, …, w_b` in order until `visit` returns true;
    /// returns the last `p` visited.
    fn walk<F: FnMut(f64) -> bool>(&self, b: usize, mut visit: F) -> usize {
        match self {
            Component::Kingman(c) => {
                visit(c * choose2(b));
                2
            }
            Component::Atom { x, c } => {
                let r = x / (1.0 - x);
                let mut w = c * choose2(b) * (1.0 - x).powi(b as i32 - 2);
                for p in 2..=b {
                    if visit(w) {
                        return p;
                    }
                    w *= (b - p) as f64 / (p + 1) as f64 * r;
                }
                b
            }
            Component::Beta { a, b: bb, mass } => {
                let bf = b as f64;
                let mut w = mass * choose2(b) * (ln_beta(*a, bb + bf - 2.0) - ln_beta(*a, *bb)).exp();
                for p in 2..=b {
                    if visit(w) {
                        return p;
                    }
                    let pf = p as f64;
                    w *= (bf - pf) / (pf + 1.0) * (a + pf - 2.0) / (bb + bf - pf - 1.0);
                }
                b
            }
            Component::Table { rows } => {
                for p in 2..=b {
                    if visit(rows[b][p]) {
                        return p;
                    }
                }
                b
            }
        }
    }
}

fn choose2(b: usize) -> f64 {
    let b = b as f64;
    0.5 * b * (b - 1.0)
}

/// `P(Binomial(b, x) ≥ 2)` without cancellation for small `b·x`.
fn binomial_at_least_two(b: usize, x: f64) -> f64 {
    let bf = b as f64;
    if bf * x < 0.1 {
        let r = x / (1.0 - x);
        let mut w = choose2(b) * x * x * (1.0 - x).powi(b as i32 - 2);
        let mut sum = 0.0;
        for p in 2..=b {
            sum += w;
            w *= (b - p) as f64 / (p + 1) as f64 * r;
            if w < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        let l = (-x).ln_1p();
        1.0 - (bf * l).exp() - bf * x * ((bf - 1.0) * l).exp()
    }
}

/// Merger-size sampler for block counts `b ≤ n_max`.
#[derive(Debug, Clone)]
pub struct MergerSampler {
    n_max: usize,
    comps: Vec<Component>,
    /// `comp_rates[k][b]`
    comp_rates: Vec<Vec<f64>>,
    totals: Vec<f64>,
}

impl MergerSampler {
    pub fn new(m: &LambdaMeasure, n_max: usize) -> Result<Self, MeasureError> {
        let mut comps = Vec::new();
        if m.kingman_mass() > 0.0 {
            comps.push(Component::Kingman(m.kingman_mass()));
        }
        for &(x, c) in m.atoms() {
            if c > 0.0 {
                comps.push(Component::Atom { x, c });
            }
        }
        match m.density() {
            Some(Density::Beta { a, b, mass }) if *mass > 0.0 => {
                comps.push(Component::Beta { a: *a, b: *b, mass: *mass })
            }
            Some(d @ Density::Table { .. }) => {
                if n_max > TABLE_N_MAX {
                    return Err(MeasureError::Invalid(format!(
                        "tabulated densities support at most {TABLE_N_MAX} blocks, got {n_max}"
                    )));
                }
                comps.push(Component::Table { rows: table_rows(d, n_max.max(2))? });
            }
            _ => {}
        }
        let comp_rates: Vec<Vec<f64>> = comps
            .iter()
            .map(|c| (0..=n_max).map(|b| c.total(b)).collect())
            .collect();
        let totals = (0..=n_max).map(|b| comp_rates.iter().map(|r| r[b]).sum()).collect();
        Ok(MergerSampler { n_max, comps, comp_rates, totals })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `R(b)`, the total rate at which some merger happens among `b` blocks.
    pub fn total_rate(&self, b: usize) -> f64 {
        self.totals[b]
    }

    /// `C(b,p) λ_{b,p}` summed over components.
    pub fn merger_weight(&self, b: usize, p: usize) -> f64 {
        let mut total = 0.0;
        for c in &self.comps {
            let mut q = 1;
            c.walk(b, |w| {
                q += 1;
                if q == p {
                    total += w;
                    true
                } else {
                    false
                }
            });
        }
        total
    }

    /// Draws `p` with probability `C(b,p) λ_{b,p} / R(b)`. Also returns the
    /// component index, needed by [`sample_extension`](Self::sample_extension).
    pub fn sample<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> (usize, usize) {
        debug_assert!(b >= 2 && b <= self.n_max);
        let mut target = rng.random::<f64>() * self.totals[b];
        let mut k = self.comps.len() - 1;
        for (i, r) in self.comp_rates.iter().enumerate() {
            if target < r[b] {
                k = i;
                break;
            }
            target -= r[b];
        }
        let p = match &self.comps[k] {
            Component::Atom { x, .. } if binomial_at_least_two(b, *x) > 0.3 => {
                let bin = Binomial::new(b as u64, *x).expect("valid binomial");
                loop {
                    let p = bin.sample(rng) as usize;
                    if p >= 2 {
                        break p;
                    }
                }
            }
            comp => {
                let total = self.comp_rates[k][b];
                let mut target = rng.random::<f64>() * total;
                comp.walk(b, |w| {
                    if target < w {
                        true
                    } else {
                        target -= w;
                        false
                    }
                })
            }
        };
        (p, k)
    }

    pub fn sample_size<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> usize {
        self.sample(b, rng).0
    }

    /// Given that component `comp` marked `q` of the lowest `m` levels, draws
    /// how many of the `n - m` levels above are marked by the same event.
    pub fn sample_extension<R: Rng + ?Sized>(&self, comp: usize, m: usize, q: usize, n: usize, rng: &mut R) -> usize {
        let extra = n - m;
        if extra == 0 {
            return 0;
        }
        match &self.comps[comp] {
            Component::Kingman(_) => 0,
            Component::Atom { x, .. } => Binomial::new(extra as u64, *x).expect("valid binomial").sample(rng) as usize,
            Component::Beta { a, b, .. } => {
                let post = BetaDist::new(a + q as f64 - 2.0, b + (m - q) as f64).expect("valid beta posterior");
                let u: f64 = post.sample(rng);
                Binomial::new(extra as u64, u.clamp(0.0, 1.0)).expect("valid binomial").sample(rng) as usize
            }
            Component::Table { rows } => {
                // P(j) = C(n-m, j) λ_{n,q+j} / λ_{m,q}
                let ln_lambda = |b: usize, p: usize| rows[b][p].ln() - ln_binomial(b as u64, p as u64);
                let base = ln_lambda(m, q);
                let mut target = rng.random::<f64>();
                for j in 0..extra {
                    let pj = (ln_binomial(extra as u64, j as u64) + ln_lambda(n, q + j) - base).exp();
                    if target < pj {
                        return j;
                    }
                    target -= pj;
                }
                extra
            }
        }
    }
}

/// `rows[b][p] = C(b,p) λ_{b,p}` for `2 ≤ p ≤ b ≤ n`: the top row by
/// quadrature of the binomial kernel, the rest by the consistency recursion
/// `w_{b,p} = (b+1-p)/(b+1) w_{b+1,p} + (p+1)/(b+1) w_{b+1,p+1}`.
fn table_rows(d: &Density, n: usize) -> Result<Vec<Vec<f64>>, MeasureError> {
    let nodes = match d {
        Density::Table { xs, .. } => xs.clone(),
        _ => unreachable!(),
    };
    let nf = n as f64;
    let mut top = vec![0.0; n + 1];
    for (p, slot) in top.iter_mut().enumerate().skip(2) {
        let pf = p as f64;
        let lc = ln_binomial(n as u64, p as u64);
        let kernel = |u: f64| {
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let ln_pmf = lc + (pf - 2.0) * u.ln() + (nf - pf) * (-u).ln_1p();
            d.eval(u) * ln_pmf.exp()
        };
        let mode = (pf - 2.0) / (nf - 2.0).max(1.0);
        let sd = (mode.max(1.0 / nf) * (1.0 - mode).max(1.0 / nf) / nf).sqrt();
        let mut pts = nodes.clone();
        for k in [-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let x = mode + k * sd;
            if x > 0.0 && x < 1.0 {
                pts.push(x);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        *slot = integrate_breakpoints(kernel, &pts, Tolerance { rel: 1e-10, abs: 1e-300, ..Tolerance::default() })?;
    }
    let mut rows = vec![Vec::new(); n + 1];
    rows[n] = top;
    for b in (2..n).rev() {
        let bf = (b + 1) as f64;
        let next = &rows[b + 1];
        let row: Vec<f64> = (0..=b)
            .map(|p| {
                if p < 2 {
                    0.0
                } else {
                    (bf - p as f64) / bf * next[p] + (p + 1) as f64 / bf * next[p + 1]
                }
            })
            .collect();
        rows[b] = row;
    }
    Ok(rows)
}
