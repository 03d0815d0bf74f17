//! Finite measures `Λ` on `[0, 1)`, the derived quantities `ν(du) = u⁻²Λ(du)`,
//! `Ψ`, the merger rates `λ_{m,p}`, the four-regime classification and the
//! speed `v(t)` of coming down from infinity.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::digamma;
use thiserror::Error;

use crate::quadrature::{integrate, integrate_breakpoints, integrate_left_singular, QuadratureError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid measure parameter: {0}")]
    Invalid(String),
    #[error("merger size p = {p} outside [2, {m}]")]
    RateOutOfRange { m: usize, p: usize },
    #[error(transparent)]
    Numerical(#[from] QuadratureError),
    #[error("regime undecided: {0}")]
    Undecided(String),
    #[error("measure is not in regime CDI (regime {0})")]
    NotCdi(Regime),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
}

/// Family tag recorded on every measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dirac0,
    Dirac,
    Beta,
    Lebesgue,
    Custom,
}

/// Absolutely continuous part of `Λ` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// `mass · u^{a-1}(1-u)^{b-1} / B(a, b)`.
    Beta { a: f64, b: f64, mass: f64 },
    /// Piecewise-linear interpolation of `(x, y)` nodes spanning `[0, 1]`.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl Density {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Density::Beta { a, b, mass } => {
                if u <= 0.0 || u >= 1.0 {
                    return 0.0;
                }
                mass * ((a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - ln_beta(*a, *b)).exp()
            }
            Density::Table { xs, ys } => {
                if u < 0.0 || u > 1.0 {
                    return 0.0;
                }
                let k = xs.partition_point(|&x| x <= u);
                if k == 0 {
                    return ys[0];
                }
                if k >= xs.len() {
                    return *ys.last().unwrap();
                }
                let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
                y0 + (y1 - y0) * (u - x0) / (x1 - x0)
            }
        }
    }

    fn total_mass(&self) -> f64 {
        match self {
            Density::Beta { mass, .. } => *mass,
            Density::Table { xs, ys } => xs
                .windows(2)
                .zip(ys.windows(2))
                .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
                .sum(),
        }
    }

    /// Density at `1 - s`, accurate for small `s`.
    fn eval_from_one(&self, s: f64) -> f64 {
        match self {
            Density::Beta { a, b, mass } if s > 0.0 && s < 1.0 => {
                mass * ((a - 1.0) * (-s).ln_1p() + (b - 1.0) * s.ln() - ln_beta(*a, *b)).exp()
            }
            _ => self.eval(1.0 - s),
        }
    }

    /// Exponents `e` of `x^e` at 0 and `(1-x)^e` at 1 when negative, else 0.
    fn endpoint_exponents(&self) -> (f64, f64) {
        match self {
            Density::Beta { a, b, .. } => ((a - 1.0).min(0.0), (b - 1.0).min(0.0)),
            Density::Table { .. } => (0.0, 0.0),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Density::Beta { .. } => vec![0.0, 0.5, 1.0],
            Density::Table { xs, .. } => xs.clone(),
        }
    }
}

/// A finite measure `Λ = kingman·δ₀ + Σ mass·δ_x + density` with `Λ({1}) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMeasure {
    kingman: f64,
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
    family: Family,
    alpha: Option<f64>,
}

fn check_mass(name: &str, c: f64) -> Result<(), MeasureError> {
    if !c.is_finite() || c < 0.0 {
        return Err(MeasureError::Invalid(format!("{name} must be finite and non-negative, got {c}")));
    }
    Ok(())
}

impl LambdaMeasure {
    /// `c·δ₀`, the Kingman measure.
    pub fn dirac0(c: f64) -> Result<Self, MeasureError> {
        check_mass("mass", c)?;
        Ok(LambdaMeasure {
            kingman: c,
            atoms: Vec::new(),
            density: None,
            family: Family::Dirac0,
            alpha: None,
        })
    }

    /// `c·δ_x` with `x ∈ (0, 1)`.
    pub fn dirac(x: f64, c: f64) -> Result<Self, MeasureError> {
        if !(x > 0.0 && x < 1.0) {
            return Err(MeasureError::Invalid(format!("atom location must lie in (0, 1), got {x}")));
        }
        check_mass("mass", c)?;
        Ok(LambdaMeasure {
            kingman: 0.0,
            atoms: vec![(x, c)],
            density: None,
            family: Family::Dirac,
            alpha: None,
        })
    }

    /// `Λ(du) = du`, the Bolthausen-Sznitman measure.
    pub fn lebesgue() -> Self {
        LambdaMeasure {
            kingman: 0.0,
            atoms: Vec::new(),
            density: Some(Density::Beta { a: 1.0, b: 1.0, mass: 1.0 }),
            family: Family::Lebesgue,
            alpha: Some(1.0),
        }
    }

    /// The Beta(2 - α, α) probability measure, `α ∈ (0, 2)`.
    pub fn beta(alpha: f64) -> Result<Self, MeasureError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(MeasureError::Invalid(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        Ok(LambdaMeasure {
            kingman: 0.0,
            atoms: Vec::new(),
            density: Some(Density::Beta { a: 2.0 - alpha, b: alpha, mass: 1.0 }),
            family: Family::Beta,
            alpha: Some(alpha),
        })
    }

    /// General Beta(a, b) density scaled to total mass `mass`.
    pub fn beta_ab(a: f64, b: f64, mass: f64) -> Result<Self, MeasureError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(MeasureError::Invalid(format!("Beta({a}, {b}) density is not integrable")));
        }
        check_mass("mass", mass)?;
        Ok(LambdaMeasure {
            kingman: 0.0,
            atoms: Vec::new(),
            density: Some(Density::Beta { a, b, mass }),
            family: Family::Beta,
            alpha: None,
        })
    }

    /// Piecewise-linear density through `(x, y)` nodes; the first node must
    /// be at 0 and the last at 1.
    pub fn density_table(nodes: &[(f64, f64)]) -> Result<Self, MeasureError> {
        Self::custom(0.0, Vec::new(), Some(nodes))
    }

    /// Arbitrary combination of a Kingman atom, interior atoms and a
    /// piecewise-linear density. Classified numerically.
    pub fn custom(kingman: f64, atoms: Vec<(f64, f64)>, table: Option<&[(f64, f64)]>) -> Result<Self, MeasureError> {
        check_mass("kingman mass", kingman)?;
        for &(x, c) in &atoms {
            if !(x > 0.0 && x < 1.0) {
                return Err(MeasureError::Invalid(format!("atom location must lie in (0, 1), got {x}")));
            }
            check_mass("atom mass", c)?;
        }
        let density = match table {
            None => None,
            Some(nodes) => {
                if nodes.len() < 2 {
                    return Err(MeasureError::Invalid("density table needs at least two nodes".into()));
                }
                let xs: Vec<f64> = nodes.iter().map(|n| n.0).collect();
                let ys: Vec<f64> = nodes.iter().map(|n| n.1).collect();
                if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
                    return Err(MeasureError::Invalid("density table must span [0, 1]".into()));
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(MeasureError::Invalid("density table nodes must be strictly increasing".into()));
                }
                if ys.iter().any(|y| !y.is_finite() || *y < 0.0) {
                    return Err(MeasureError::Invalid("density values must be finite and non-negative".into()));
                }
                Some(Density::Table { xs, ys })
            }
        };
        Ok(LambdaMeasure {
            kingman,
            atoms,
            density,
            family: Family::Custom,
            alpha: None,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// The α parameter of the Beta(2 - α, α) family (1 for Lebesgue).
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn kingman_mass(&self) -> f64 {
        self.kingman
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.kingman + self.atoms.iter().map(|a| a.1).sum::<f64>() + self.density.as_ref().map_or(0.0, |d| d.total_mass())
    }

    /// Density of `ν` at `u ∈ (0, 1)` (absolutely continuous part only).
    pub fn nu_density(&self, u: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.eval(u) / (u * u))
    }

    pub fn spec(&self) -> MeasureSpec {
        match self.family {
            Family::Dirac0 => MeasureSpec::Dirac0 { mass: self.kingman },
            Family::Dirac => MeasureSpec::Dirac { x: self.atoms[0].0, mass: self.atoms[0].1 },
            Family::Lebesgue => MeasureSpec::Lebesgue,
            Family::Beta => match (self.alpha, &self.density) {
                (Some(alpha), _) => MeasureSpec::Beta { alpha },
                (None, Some(Density::Beta { a, b, mass })) => MeasureSpec::BetaAb { a: *a, b: *b, mass: *mass },
                _ => unreachable!("beta family always carries a beta density"),
            },
            Family::Custom => MeasureSpec::Custom {
                kingman_mass: self.kingman,
                atoms: self.atoms.clone(),
                density_table: match &self.density {
                    Some(Density::Table { xs, ys }) => xs.iter().copied().zip(ys.iter().copied()).collect(),
                    _ => Vec::new(),
                },
            },
        }
    }

    // ----- merger rates -------------------------------------------------

    /// `λ_{m,p} = ∫ u^p (1-u)^{m-p} ν(du)`, with closed forms for atoms and
    /// Beta densities and quadrature for tables.
    pub fn lambda_rate(&self, m: usize, p: usize) -> Result<f64, MeasureError> {
        self.lambda_rate_impl(m, p, false)
    }

    /// Same as [`lambda_rate`](Self::lambda_rate) but integrates every
    /// density numerically. Used as an independent check of the closed forms.
    pub fn lambda_rate_quadrature(&self, m: usize, p: usize) -> Result<f64, MeasureError> {
        self.lambda_rate_impl(m, p, true)
    }

    fn lambda_rate_impl(&self, m: usize, p: usize, force_quadrature: bool) -> Result<f64, MeasureError> {
        if p < 2 || p > m {
            return Err(MeasureError::RateOutOfRange { m, p });
        }
        let mut rate = if p == 2 { self.kingman } else { 0.0 };
        for &(x, c) in &self.atoms {
            rate += c * x.powi((p - 2) as i32) * (1.0 - x).powi((m - p) as i32);
        }
        if let Some(d) = &self.density {
            rate += match d {
                Density::Beta { a, b, mass } if !force_quadrature => {
                    mass * (ln_beta(a + (p - 2) as f64, b + (m - p) as f64) - ln_beta(*a, *b)).exp()
                }
                _ => {
                    let (pi, qi) = ((p - 2) as i32, (m - p) as i32);
                    integrate_breakpoints(
                        |u| d.eval(u) * u.powi(pi) * (1.0 - u).powi(qi),
                        &d.breakpoints(),
                        Tolerance { rel: 1e-12, ..Tolerance::default() },
                    )?
                }
            };
        }
        Ok(rate)
    }

    // ----- Ψ -----------------------------------------------------------

    /// `Ψ(u) = (Λ({0})/2)u² + ∫ (e^{-xu} - 1 + xu) ν(dx)`.
    pub fn psi(&self, u: f64) -> Result<f64, MeasureError> {
        if !(u >= 0.0) {
            return Err(MeasureError::Invalid(format!("psi argument must be non-negative, got {u}")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        let mut value = 0.5 * self.kingman * u * u;
        for &(x, c) in &self.atoms {
            value += c * psi_kernel(x * u) / (x * x);
        }
        if let Some(d) = &self.density {
            value += density_psi(d, u)?;
        }
        Ok(value)
    }

    /// `G(v) = ∫_v^∞ du / Ψ(u)`; finite for every `v > 0` exactly in regime CDI.
    pub fn inverse_psi_tail(&self, v: f64) -> Result<f64, MeasureError> {
        if !(v > 0.0) {
            return Err(MeasureError::Invalid(format!("lower limit must be positive, got {v}")));
        }
        // u = v·e^s turns the tail into an integral over s ∈ [0, ∞).
        let integrand = |s: f64| -> f64 {
            let u = v * s.exp();
            match self.psi(u) {
                Ok(p) if p > 0.0 => u / p,
                _ => f64::NAN,
            }
        };
        let tol = Tolerance { rel: 1e-10, ..Tolerance::default() };
        let chunk = 4.0;
        let mut total = 0.0;
        let mut s = 0.0;
        while s < 80.0 {
            let piece = integrate(integrand, s, s + chunk, tol)?;
            total += piece;
            s += chunk;
            if piece < 1e-13 * total {
                break;
            }
        }
        // Regularly varying tail: ∫_U^∞ du/Ψ ≈ U / ((α̂ - 1) Ψ(U)).
        let u_end = v * s.exp();
        let (p1, p2) = (self.psi(u_end)?, self.psi(2.0 * u_end)?);
        let alpha_hat = (p2 / p1).log2();
        if !(alpha_hat > 1.0) {
            return Err(MeasureError::Undecided(format!(
                "tail of 1/psi does not decay fast enough at u = {u_end:e} (local index {alpha_hat})"
            )));
        }
        total += u_end / ((alpha_hat - 1.0) * p1);
        if !total.is_finite() {
            return Err(MeasureError::Undecided("non-finite 1/psi tail integral".into()));
        }
        Ok(total)
    }

    // ----- classification ------------------------------------------------

    /// Places `Λ` in one of the four regimes.
    pub fn classify(&self) -> Result<RegimeClass, MeasureError> {
        let analytic = !matches!(self.family, Family::Custom);
        let nu = self.nu_mass_test(analytic)?;
        let u_nu = self.u_nu_test(analytic)?;
        let (regime, cdi_value) = if nu.is_finite() {
            (Regime::Discrete, IntegralValue::Divergent)
        } else if u_nu.is_finite() {
            (Regime::IntensiveWDust, IntegralValue::Divergent)
        } else {
            let cdi = self.cdi_test(analytic)?;
            if cdi {
                (Regime::Cdi, IntegralValue::Finite(self.inverse_psi_tail(1.0)?))
            } else {
                (Regime::IntensiveInf, IntegralValue::Divergent)
            }
        };
        let (u_log_u_finite, u_log_u) = if regime == Regime::IntensiveWDust {
            let v = self.u_log_u_test(analytic)?;
            (TriState::from(v.is_finite()), v)
        } else {
            (TriState::NotApplicable, IntegralValue::NotEvaluated)
        };
        Ok(RegimeClass {
            regime,
            u_log_u_finite,
            integral_report: IntegralReport {
                nu_mass: nu,
                u_nu_mass: u_nu,
                inverse_psi_tail: cdi_value,
                u_log_u,
            },
        })
    }

    /// `∫ ν(du)`.
    fn nu_mass_test(&self, analytic: bool) -> Result<IntegralValue, MeasureError> {
        if self.kingman > 0.0 {
            return Ok(IntegralValue::Divergent);
        }
        let atoms: f64 = self.atoms.iter().map(|&(x, c)| c / (x * x)).sum();
        let dens = match &self.density {
            None => IntegralValue::Finite(0.0),
            Some(Density::Beta { a, b, mass }) if analytic => {
                if *a > 2.0 {
                    IntegralValue::Finite(mass * (ln_beta(a - 2.0, *b) - ln_beta(*a, *b)).exp())
                } else {
                    IntegralValue::Divergent
                }
            }
            Some(d) => shell_test(|u| d.eval(u) / (u * u), d)?,
        };
        Ok(dens.plus(atoms))
    }

    /// `∫ u ν(du)`.
    fn u_nu_test(&self, analytic: bool) -> Result<IntegralValue, MeasureError> {
        if self.kingman > 0.0 {
            return Ok(IntegralValue::Divergent);
        }
        let atoms: f64 = self.atoms.iter().map(|&(x, c)| c / x).sum();
        let dens = match &self.density {
            None => IntegralValue::Finite(0.0),
            Some(Density::Beta { a, b, mass }) if analytic => {
                if *a > 1.0 {
                    IntegralValue::Finite(mass * (ln_beta(a - 1.0, *b) - ln_beta(*a, *b)).exp())
                } else {
                    IntegralValue::Divergent
                }
            }
            Some(d) => shell_test(|u| d.eval(u) / u, d)?,
        };
        Ok(dens.plus(atoms))
    }

    /// `-∫ u log u ν(du)`.
    fn u_log_u_test(&self, analytic: bool) -> Result<IntegralValue, MeasureError> {
        let atoms: f64 = self.atoms.iter().map(|&(x, c)| -c * x.ln() / x).sum();
        let dens = match &self.density {
            None => IntegralValue::Finite(0.0),
            Some(Density::Beta { a, b, mass }) if analytic => {
                if *a > 1.0 {
                    // E[-log X] for X ~ Beta(a - 1, b)
                    let scale = mass * (ln_beta(a - 1.0, *b) - ln_beta(*a, *b)).exp();
                    IntegralValue::Finite(scale * (digamma(a - 1.0 + b) - digamma(a - 1.0)))
                } else {
                    IntegralValue::Divergent
                }
            }
            Some(d) => shell_test(|u| -d.eval(u) * u.ln() / u, d)?,
        };
        Ok(dens.plus(atoms))
    }

    /// Whether `∫^∞ du/Ψ(u) < ∞`, assuming `∫ u ν = ∞`.
    fn cdi_test(&self, analytic: bool) -> Result<bool, MeasureError> {
        if self.kingman > 0.0 {
            return Ok(true);
        }
        match &self.density {
            Some(Density::Beta { a, .. }) if analytic => Ok(*a < 1.0),
            _ => self.cdi_growth_test(),
        }
    }

    /// Compares the growth of Ψ on `u = 2^k` against `u·(log u)^β`: index
    /// clearly above one means CDI, a log exponent at most one means not.
    fn cdi_growth_test(&self) -> Result<bool, MeasureError> {
        let ks: Vec<i32> = (50..=80).collect();
        let psis = ks
            .iter()
            .map(|&k| self.psi(2f64.powi(k)))
            .collect::<Result<Vec<_>, _>>()?;
        let index: Vec<f64> = psis.windows(2).map(|w| (w[1] / w[0]).log2()).collect();
        let deep = &index[index.len() - 20..];
        if deep.iter().all(|&e| e >= 1.1) {
            return Ok(true);
        }
        let log_exp: Vec<f64> = ks
            .windows(2)
            .zip(psis.windows(2))
            .map(|(k, p)| {
                let l0 = p[0] / 2f64.powi(k[0]);
                let l1 = p[1] / 2f64.powi(k[1]);
                (l1 / l0).ln() / (k[1] as f64 / k[0] as f64).ln()
            })
            .collect();
        let deep = &log_exp[log_exp.len() - 20..];
        if deep.iter().all(|&b| b <= 1.05) {
            Ok(false)
        } else if deep.iter().all(|&b| b >= 1.5) {
            Ok(true)
        } else {
            Err(MeasureError::Undecided(format!(
                "growth of psi is borderline: log exponents {:.3}..{:.3}",
                deep.iter().cloned().fold(f64::INFINITY, f64::min),
                deep.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            )))
        }
    }

    // ----- speed of coming down from infinity -----------------------------

    /// `v(t)`, the unique solution of `∫_{v(t)}^∞ du/Ψ(u) = t`.
    pub fn cdi_speed(&self, t: f64) -> Result<f64, MeasureError> {
        if !(t > 0.0) {
            return Err(MeasureError::NonPositiveTime(t));
        }
        let class = self.classify()?;
        if class.regime != Regime::Cdi {
            return Err(MeasureError::NotCdi(class.regime));
        }
        self.solve_speed(t)
    }

    /// Root-finding part of [`cdi_speed`](Self::cdi_speed), skipping the
    /// regime check. `G` is decreasing, so bracket in `log v` and refine
    /// with Illinois false position on `(log v, log G)`.
    pub(crate) fn solve_speed(&self, t: f64) -> Result<f64, MeasureError> {
        // f(log v) = log G(v) - log t is decreasing with f' = -v / (Ψ(v) G(v)),
        // and nearly linear for regularly varying Ψ: Newton inside a bracket.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut x = 0.0f64;
        for _ in 0..200 {
            let v = x.exp();
            let g = self.inverse_psi_tail(v)?;
            let fx = g.ln() - t.ln();
            if fx.abs() < 1e-13 {
                return Ok(v);
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = -v / (self.psi(v)? * g);
            let mut next = x - fx / slope;
            next = next.clamp(x - 8.0, x + 8.0);
            if !(next > lo && next < hi) {
                next = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { next.clamp(lo.max(x - 8.0), hi.min(x + 8.0)) };
            }
            if (next - x).abs() < 1e-14 * (1.0 + x.abs()) {
                return Ok(next.exp());
            }
            x = next;
        }
        Err(MeasureError::Undecided(format!("speed equation G(v) = {t} did not converge")))
    }
}

/// `e^{-y} - 1 + y`, accurate for small `y`.
pub(crate) fn psi_kernel(y: f64) -> f64 {
    if y < 1e-2 {
        let y2 = y * y;
        y2 * (0.5 - y / 6.0 + y2 / 24.0 - y2 * y / 120.0 + y2 * y2 / 720.0 - y2 * y2 * y / 5040.0)
    } else {
        (-y).exp_m1() + y
    }
}

fn density_psi(d: &Density, u: f64) -> Result<f64, QuadratureError> {
    // Breakpoints follow the kernel's transition scale 1/u.
    let mut pts = vec![0.0];
    for j in -8..=12 {
        let x = 2f64.powi(j) / u;
        if x > 0.0 && x < 1.0 {
            pts.push(x);
        }
    }
    pts.extend(d.breakpoints().into_iter().filter(|&x| x > 0.0 && x < 1.0));
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let f = |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        d.eval(x) * psi_kernel(x * u) / (x * x)
    };
    let tol = Tolerance { rel: 1e-10, ..Tolerance::default() };
    let (e0, e1) = d.endpoint_exponents();
    let last = pts.len() - 2;
    // the tail pieces carry most of the mass; do them first to set the floor
    let mut total = 0.0f64;
    for (k, w) in pts.windows(2).enumerate().rev() {
        let piece_tol = Tolerance { abs: tol.abs.max(1e-3 * tol.rel * total.abs()), ..tol };
        total += if k == 0 && e0 < 0.0 {
            integrate_left_singular(f, w[0], w[1], e0, piece_tol)?
        } else if k == last && e1 < 0.0 {
            // in the distance s = 1 - x, which doubles cannot resolve near x = 1
            let g = |s: f64| d.eval_from_one(s) * psi_kernel((1.0 - s) * u) / ((1.0 - s) * (1.0 - s));
            integrate_left_singular(g, 0.0, 1.0 - w[0], e1, piece_tol)?
        } else {
            integrate(f, w[0], w[1], piece_tol)?
        };
    }
    Ok(total)
}

/// Dyadic-shell ratio test for `∫_0^1 g(u) du` with a possible singularity
/// at 0. Shells `[2^{-k-1}, 2^{-k}]` for `k` up to 80; the last 20 shell
/// ratios decide.
fn shell_test<G: Fn(f64) -> f64>(g: G, d: &Density) -> Result<IntegralValue, MeasureError> {
    const SHELLS: i32 = 80;
    const WINDOW: usize = 20;
    let tol = Tolerance { rel: 1e-10, ..Tolerance::default() };
    let mut pts: Vec<f64> = d.breakpoints().into_iter().filter(|&x| x >= 0.5).collect();
    pts.insert(0, 0.5);
    pts.dedup();
    let outer = integrate_breakpoints(&g, &pts, tol)?;
    let mut shells = Vec::with_capacity(SHELLS as usize);
    for k in 1..=SHELLS {
        let (a, b) = (2f64.powi(-k - 1), 2f64.powi(-k));
        let mut inner: Vec<f64> = d.breakpoints().into_iter().filter(|&x| x > a && x < b).collect();
        inner.insert(0, a);
        inner.push(b);
        shells.push(integrate_breakpoints(&g, &inner, tol)?);
    }
    let deep = &shells[shells.len() - WINDOW - 1..];
    let sum: f64 = outer + shells.iter().sum::<f64>();
    if deep.iter().all(|&s| s == 0.0) {
        return Ok(IntegralValue::Finite(sum));
    }
    if deep.iter().any(|&s| s <= 0.0) {
        return Err(MeasureError::Undecided("shell integrals change sign or vanish intermittently".into()));
    }
    let ratios: Vec<f64> = deep.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&r| r >= 1.0 - 1e-9) {
        Ok(IntegralValue::Divergent)
    } else if ratios.iter().all(|&r| r <= 0.98) {
        let r = *ratios.last().unwrap();
        let tail = deep.last().unwrap() * r / (1.0 - r);
        Ok(IntegralValue::Finite(sum + tail))
    } else {
        Err(MeasureError::Undecided(format!(
            "shell ratios between {:.6} and {:.6} after {SHELLS} shells",
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        )))
    }
}

/// The four long-time regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Discrete,
    IntensiveWDust,
    IntensiveInf,
    Cdi,
}

impl Regime {
    /// Regimes with dust at positive times.
    pub fn has_dust(self) -> bool {
        matches!(self, Regime::Discrete | Regime::IntensiveWDust)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Discrete => "DISCRETE",
            Regime::IntensiveWDust => "INTENSIVE_W_DUST",
            Regime::IntensiveInf => "INTENSIVE_INF",
            Regime::Cdi => "CDI",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    True,
    False,
    NotApplicable,
}

impl From<bool> for TriState {
    fn from(b: bool) -> Self {
        if b {
            TriState::True
        } else {
            TriState::False
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralValue {
    Finite(f64),
    Divergent,
    NotEvaluated,
}

impl IntegralValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, IntegralValue::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            IntegralValue::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub(crate) fn plus(self, x: f64) -> Self {
        match self {
            IntegralValue::Finite(v) => IntegralValue::Finite(v + x),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    /// `∫ ν(du)`
    pub nu_mass: IntegralValue,
    /// `∫ u ν(du)`
    pub u_nu_mass: IntegralValue,
    /// `∫_1^∞ du / Ψ(u)`
    pub inverse_psi_tail: IntegralValue,
    /// `-∫ u log u ν(du)`
    pub u_log_u: IntegralValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClass {
    pub regime: Regime,
    pub u_log_u_finite: TriState,
    pub integral_report: IntegralReport,
}

/// Run-config form of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureSpec {
    Dirac0 {
        mass: f64,
    },
    Dirac {
        x: f64,
        mass: f64,
    },
    Lebesgue,
    Beta {
        alpha: f64,
    },
    #[serde(rename = "beta_ab")]
    BetaAb {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    Custom {
        #[serde(default)]
        kingman_mass: f64,
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
        #[serde(default)]
        density_table: Vec<(f64, f64)>,
    },
}

fn one() -> f64 {
    1.0
}

impl MeasureSpec {
    pub fn build(&self) -> Result<LambdaMeasure, MeasureError> {
        match self {
            MeasureSpec::Dirac0 { mass } => LambdaMeasure::dirac0(*mass),
            MeasureSpec::Dirac { x, mass } => LambdaMeasure::dirac(*x, *mass),
            MeasureSpec::Lebesgue => Ok(LambdaMeasure::lebesgue()),
            MeasureSpec::Beta { alpha } => LambdaMeasure::beta(*alpha),
            MeasureSpec::BetaAb { a, b, mass } => LambdaMeasure::beta_ab(*a, *b, *mass),
            MeasureSpec::Custom {
                kingman_mass,
                atoms,
                density_table,
            } => {
                let table = if density_table.is_empty() { None } else { Some(density_table.as_slice()) };
                LambdaMeasure::custom(*kingman_mass, atoms.clone(), table)
            }
        }
    }
}
