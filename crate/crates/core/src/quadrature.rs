//! Adaptive Gauss-Kronrod (10/21 point) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_956_859_021,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Relative tolerance used throughout the measure computations.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("quadrature on [{a}, {b}] did not converge: estimate {estimate:e}, error {error:e} after {intervals} subintervals")]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
    pub estimate: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 0.0,
            rel: REL_TOL,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).abs())
}

/// Integrates `f` over `[a, b]` by adaptive bisection of the subinterval with
/// the largest error estimate. Integrable endpoint singularities are fine as
/// long as `f` is finite at the interior Kronrod nodes.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut intervals = 1;
    loop {
        if !total.is_finite() {
            return Err(QuadratureError {
                a,
                b,
                estimate: total,
                error: total_err,
                intervals,
            });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if intervals >= tol.max_intervals {
            return Err(QuadratureError {
                a,
                b,
                estimate: total,
                error: total_err,
                intervals,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in binary64
            heap.push(Piece { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        intervals += 1;
        if intervals % 64 == 0 {
            // re-sum to keep rounding drift out of the running totals
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// Integrates over consecutive breakpoints, summing the pieces. Each piece
/// gets the same relative tolerance; the absolute floor is scaled by the
/// running magnitude so that tiny pieces do not stall.
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<f64, QuadratureError> {
    let mut total = 0.0f64;
    for w in points.windows(2) {
        let floor = tol.abs.max(1e-3 * tol.rel * total.abs());
        total += integrate(&f, w[0], w[1], Tolerance { abs: floor, ..tol })?;
    }
    Ok(total)
}

/// `∫_a^b f` for `f(x) ~ (x-a)^e` near `a`, `e > -1`. The substitution
/// `x = a + (b-a) w^q` with `q = 1/(1+e)` leaves a bounded integrand.
pub fn integrate_left_singular<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, e: f64, tol: Tolerance) -> Result<f64, QuadratureError> {
    let q = 1.0 / (1.0 + e);
    let h = b - a;
    integrate(|w: f64| f(a + h * w.powf(q)) * q * h * w.powf(q - 1.0), 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let v = integrate(|x| x.powi(19), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - 0.05).abs() < 1e-15);
        let v = integrate_left_singular(|x| x.powf(-0.95), 0.0, 1.0, -0.95, Tolerance { rel: 1e-12, ..Tolerance::default() }).unwrap();
        assert!((v - 20.0).abs() < 1e-10);
        let v = integrate(|x| x.powi(19), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - 0.05).abs() < 1e-15);
    }

    #[test]
    fn sqrt_singularity() {
        let v = integrate(|x| x.powf(-0.5), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - 2.0).abs() < 2e-9);
    }

    #[test]
    fn oscillatory_and_exponential() {
        let v = integrate(|x| (-x).exp(), 0.0, 30.0, Tolerance::default()).unwrap();
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-12);
        // zero-valued integral: only an absolute tolerance can be met
        let tol = Tolerance { abs: 1e-13, ..Default::default() };
        let v = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, tol).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn non_integrable_reports_error() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, Tolerance { max_intervals: 200, ..Default::default() });
        assert!(r.is_err());
    }

    #[test]
    fn breakpoints_sum() {
        let v = integrate_breakpoints(|x| x, &[0.0, 0.25, 0.5, 1.0], Tolerance::default()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }
}
