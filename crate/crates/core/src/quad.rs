//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15) with
//! explicit breakpoints, and adaptive composite Gauss–Legendre.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const XGL8: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WGL8: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Default subdivision cap.
pub const MAX_INTERVALS: usize = 1_000_000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

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

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// subdivision given by `points` (the integrand's kinks), until the summed
/// Kronrod–Gauss error estimate is at most `abs_tol`.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    abs_tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(&f, w[0], w[1]);
            heap.push(Piece {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    loop {
        let total_error: f64 = heap.iter().map(|p| p.error).sum();
        if total_error <= abs_tol {
            break;
        }
        if heap.len() >= max_intervals {
            return Err(Error::NonConvergence(heap.len()));
        }
        let worst = heap.pop().expect("nonempty when error is positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; accept its estimate.
            heap.push(Piece {
                error: 0.0,
                ..worst
            });
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            heap.push(Piece { a, b, value, error });
        }
    }
    // Sum in position order so the result does not depend on heap layout.
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(pieces.iter().map(|p| p.value).sum())
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    integrate_with_breakpoints(f, &[a, b], abs_tol, MAX_INTERVALS)
}

fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for j in 0..4 {
        s += WGL8[j] * (f(c - h * XGL8[j]) + f(c + h * XGL8[j]));
    }
    s * h
}

/// Adaptive composite 8-point Gauss–Legendre: an interval is accepted when its
/// rule agrees with the sum over its two halves to within the local share of
/// `abs_tol`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl8(f, a, m);
        let right = gl8(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= tol {
            return left + right;
        }
        rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if b == a {
        return 0.0;
    }
    rec(&f, a, b, gl8(&f, a, b), abs_tol, 40)
}
