//! Radial Blichfeldt gauges and the density upper bounds they certify.
//!
//! A gauge `f` is stored as a piecewise polynomial in the radius. Its integral
//! `J(f)` over `R^k` turns the pointwise inequality `Σ f(|x − cᵢ|) ≤ 1` into the
//! density bound `Vol(C) / J`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::quad;
use crate::{Error, Result};

/// Absolute tolerance for the radial quadrature.
pub const QUAD_ABS_TOL: f64 = 1e-12;
/// Side of the box in which random center configurations are drawn.
pub const SWEEP_BOX_SIDE: f64 = 8.0;

/// Volume of the unit ball in `R^k` via `V_k = 2π/k · V_{k−2}`.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// Surface area of the unit sphere `S^{k−1} ⊂ R^k`.
pub fn unit_sphere_area(k: usize) -> f64 {
    k as f64 * unit_ball_volume(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GaugeRecord {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

/// A radial function given by polynomial pieces (ascending coefficients in
/// `r`) on `[r_k, r_{k+1}]`, and zero beyond the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaugeRecord", into = "GaugeRecord")]
pub struct RadialGauge {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<GaugeRecord> for RadialGauge {
    type Error = Error;

    fn try_from(r: GaugeRecord) -> Result<Self> {
        RadialGauge::new(r.breakpoints, r.pieces)
    }
}

impl From<RadialGauge> for GaugeRecord {
    fn from(g: RadialGauge) -> Self {
        GaugeRecord {
            breakpoints: g.breakpoints,
            pieces: g.pieces,
        }
    }
}

fn horner(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * r + a)
}

impl RadialGauge {
    /// Checks the breakpoint structure and continuity across breakpoints.
    /// Value-range and monotonicity are checked separately by
    /// [`RadialGauge::check_invariants`], so deliberately invalid gauges can
    /// still be fed to the validity sweep.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "gauge breakpoints must start at 0 and have at least two entries".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "gauge breakpoints must be strictly increasing".into(),
            ));
        }
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                pieces.len()
            )));
        }
        for k in 1..pieces.len() {
            let r = breakpoints[k];
            let jump = horner(&pieces[k - 1], r) - horner(&pieces[k], r);
            if jump.abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "gauge is discontinuous at r = {r} (jump {jump:e})"
                )));
            }
        }
        Ok(RadialGauge {
            breakpoints,
            pieces,
        })
    }

    /// `f₀(r) = (2 − r²)/2` on `[0, √2]`.
    pub fn blichfeldt() -> Self {
        RadialGauge {
            breakpoints: vec![0.0, 2f64.sqrt()],
            pieces: vec![vec![1.0, 0.0, -0.5]],
        }
    }

    /// `f₁`: 1 up to `2 − √2`, then `(2 − r)²/2` up to 1, then `(2 − r²)/2` up to `√2`.
    pub fn modified_blichfeldt() -> Self {
        let s2 = 2f64.sqrt();
        RadialGauge {
            breakpoints: vec![0.0, 2.0 - s2, 1.0, s2],
            pieces: vec![vec![1.0], vec![2.0, -2.0, 0.5], vec![1.0, 0.0, -0.5]],
        }
    }

    pub fn zero() -> Self {
        RadialGauge {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![vec![0.0]],
        }
    }

    /// Indicator of the unit ball (a gauge for the ball itself).
    pub fn unit_indicator() -> Self {
        RadialGauge {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![vec![1.0]],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn support(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    /// `λ·f`.
    pub fn scaled(&self, factor: f64) -> Self {
        RadialGauge {
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.iter().map(|c| c * factor).collect())
                .collect(),
        }
    }

    /// `r ↦ f(r/λ)`.
    pub fn dilated(&self, lambda: f64) -> Self {
        RadialGauge {
            breakpoints: self.breakpoints.iter().map(|b| b * lambda).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| {
                    p.iter()
                        .enumerate()
                        .map(|(i, c)| c / lambda.powi(i as i32))
                        .collect()
                })
                .collect(),
        }
    }

    /// Value at `r ≥ 0` without argument checking.
    pub fn value(&self, r: f64) -> f64 {
        let support = self.support();
        if r > support {
            return 0.0;
        }
        let k = self
            .breakpoints
            .partition_point(|&b| b <= r)
            .clamp(1, self.pieces.len())
            - 1;
        horner(&self.pieces[k], r)
    }

    /// Values in `[0, 1]`, nonincreasing (both by sampling).
    pub fn check_invariants(&self) -> Result<()> {
        let support = self.support();
        let samples = 4096;
        let mut prev = f64::INFINITY;
        for i in 0..=samples {
            let r = support * i as f64 / samples as f64;
            let v = self.value(r);
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "gauge value {v} at r = {r} outside [0, 1]"
                )));
            }
            if v > prev + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "gauge increases at r = {r}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `f(r)` for `r ≥ 0`.
pub fn eval_gauge(g: &RadialGauge, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative radius {r}")));
    }
    Ok(g.value(r))
}

/// `J(g) = ∫_{R^k} g(|x|) dx` from the polynomial antiderivatives.
pub fn radial_integral_closed(g: &RadialGauge, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    let mut total = 0.0;
    for (piece, w) in g.pieces.iter().zip(g.breakpoints.windows(2)) {
        let (a, b) = (w[0], w[1]);
        for (i, &c) in piece.iter().enumerate() {
            let p = (i + k) as i32;
            total += c * (b.powi(p) - a.powi(p)) / p as f64;
        }
    }
    Ok(unit_sphere_area(k) * total)
}

/// The same integral by adaptive Gauss–Kronrod, split at the breakpoints.
pub fn radial_integral_quadrature(g: &RadialGauge, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    let area = unit_sphere_area(k);
    let pow = (k - 1) as i32;
    quad::integrate_with_breakpoints(
        |r| area * g.value(r) * r.powi(pow),
        &g.breakpoints,
        QUAD_ABS_TOL,
        quad::MAX_INTERVALS,
    )
}

/// Blichfeldt's bound `Vol(C) / J(g)`.
pub fn blichfeldt_bound(body_volume: f64, j: f64) -> Result<f64> {
    if !(body_volume > 0.0) || !(j > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "volume ({body_volume}) and gauge integral ({j}) must be positive"
        )));
    }
    Ok(body_volume / j)
}

/// `(n + 2) / 2^{(n+2)/2}`, the limit bound for sphere packings in `R^n`.
pub fn sphere_packing_bound(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    let e = (n + 2) as f64;
    Ok(e / 2f64.powf(e / 2.0))
}

/// `(1 + (2√2 − 2)/t)^n`: finite-cube correction to the sphere bound.
pub fn finite_cube_density_factor(t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cube edge must be positive, got {t}"
        )));
    }
    Ok((1.0 + (2.0 * 2f64.sqrt() - 2.0) / t).powi(n as i32))
}

/// `A₂ = J(f₁)/π = (29 − 16√2)/6`.
pub fn a2_constant() -> f64 {
    (29.0 - 16.0 * 2f64.sqrt()) / 6.0
}

/// `1/A₂ = 6/(29 − 16√2)`: the gauge bound for infinite polycylinders.
pub fn polycylinder_bound() -> f64 {
    6.0 / (29.0 - 16.0 * 2f64.sqrt())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `C(t) = D^{n+2} + t·Iⁿ`, the unit outer parallel body of a centered
/// `n`-cube of edge `t` lying in the first `n` coordinates of `R^{n+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapsuleBody {
    pub cube_edge: f64,
    pub core_dim: usize,
}

impl CapsuleBody {
    pub fn new(cube_edge: f64, core_dim: usize) -> Result<Self> {
        if !(cube_edge >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cube edge must be ≥ 0, got {cube_edge}"
            )));
        }
        Ok(CapsuleBody {
            cube_edge,
            core_dim,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.core_dim + 2
    }

    pub fn inradius(&self) -> f64 {
        1.0
    }

    /// Steiner volume `Σ_j C(n,j) t^{n−j} Vol(B^{j+2})`.
    pub fn volume(&self) -> f64 {
        let n = self.core_dim;
        (0..=n)
            .map(|j| binomial(n, j) * self.cube_edge.powi((n - j) as i32) * unit_ball_volume(j + 2))
            .sum()
    }

    /// Distance from `x` to the cube `C(t)₋₁`.
    pub fn cube_distance(&self, x: &[f64]) -> f64 {
        let h = 0.5 * self.cube_edge;
        let n = self.core_dim;
        let mut s = 0.0;
        for (i, &c) in x.iter().enumerate() {
            let e = if i < n { (c.abs() - h).max(0.0) } else { c };
            s += e * e;
        }
        s.sqrt()
    }

    /// Distance from `x` to the inner parallel body `C(t)₋ϱ = (1 − ϱ)D + t·Iⁿ`.
    pub fn inner_body_distance(&self, x: &[f64], rho: f64) -> f64 {
        (self.cube_distance(x) - (1.0 - rho)).max(0.0)
    }
}

/// `g(x) = f(d(x, C₋ϱ)/ϱ)` for the capsule body.
pub fn ftk_gauge_value(f: &RadialGauge, body: &CapsuleBody, rho: f64, x: &[f64]) -> Result<f64> {
    if !(rho > 0.0 && rho <= body.inradius()) {
        return Err(Error::InvalidParameter(format!(
            "ϱ must lie in (0, {}], got {rho}",
            body.inradius()
        )));
    }
    if x.len() != body.ambient_dim() {
        return Err(Error::DimensionMismatch(body.ambient_dim(), x.len()));
    }
    Ok(f.value(body.inner_body_distance(x, rho) / rho))
}

/// `∫ g_t` for `g_t(x) = f(d(x, C(t)₋₁))`, via the Steiner-type decomposition
/// `Σ_j C(n,j) t^{n−j} J_{j+2}(f)`.
pub fn capsule_gauge_integral(f: &RadialGauge, body: &CapsuleBody) -> Result<f64> {
    let n = body.core_dim;
    let mut total = 0.0;
    for j in 0..=n {
        total += binomial(n, j)
            * body.cube_edge.powi((n - j) as i32)
            * radial_integral_closed(f, j + 2)?;
    }
    Ok(total)
}

/// The same integral by nested quadrature of [`ftk_gauge_value`] over the
/// cross-section slab: for each count `j` of coordinates outside the cube,
/// integrate over the excess distance `s` and the cross-section radius `ρ`.
pub fn capsule_gauge_integral_quadrature(f: &RadialGauge, body: &CapsuleBody) -> Result<f64> {
    let n = body.core_dim;
    let m = body.ambient_dim();
    let t = body.cube_edge;
    let support = f.support();
    let point = |j: usize, s: f64, rho: f64| -> Vec<f64> {
        let mut x = vec![0.0; m];
        for xi in x.iter_mut().take(j) {
            *xi = 0.5 * t + s / (j as f64).sqrt();
        }
        x[n] = rho;
        x
    };
    let cross_section = |j: usize, s: f64| -> Result<f64> {
        if s >= support {
            return Ok(0.0);
        }
        let top = (support * support - s * s).sqrt();
        let mut knots = vec![0.0];
        for &b in &f.breakpoints[1..] {
            if b > s && b < support {
                knots.push((b * b - s * s).sqrt());
            }
        }
        knots.push(top);
        quad::integrate_with_breakpoints(
            |r| {
                2.0 * std::f64::consts::PI
                    * r
                    * ftk_gauge_value(f, body, 1.0, &point(j, s, r)).unwrap_or(0.0)
            },
            &knots,
            1e-13,
            quad::MAX_INTERVALS,
        )
    };
    let mut total = t.powi(n as i32) * cross_section(0, 0.0)?;
    for j in 1..=n {
        let err = std::cell::RefCell::new(None);
        let radial = quad::integrate_with_breakpoints(
            |s| match cross_section(j, s) {
                Ok(v) => unit_sphere_area(j) * s.powi(j as i32 - 1) * v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            &f.breakpoints,
            1e-11,
            quad::MAX_INTERVALS,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        total += binomial(n, j) * t.powi((n - j) as i32) * radial?;
    }
    Ok(total)
}

/// `∫ g_t / (π tⁿ)`, which tends to `A₂` as `t → ∞`.
pub fn capsule_gauge_ratio(f: &RadialGauge, body: &CapsuleBody) -> Result<f64> {
    let denom = std::f64::consts::PI * body.cube_edge.powi(body.core_dim as i32);
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter("cube edge must be positive".into()));
    }
    Ok(capsule_gauge_integral_quadrature(f, body)? / denom)
}

/// Centers `cᵢ` of a family of translated unit balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryConfig {
    pub centers: Vec<Vec<f64>>,
}

impl IsometryConfig {
    /// Smallest pairwise center distance (`∞` for fewer than two centers).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                best = best.min(dist(a, b));
            }
        }
        best
    }

    pub fn is_admissible(&self) -> bool {
        self.min_separation() >= 2.0
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `σ(x) = Σᵢ f(|x − cᵢ|)`.
pub fn gauge_sum(f: &RadialGauge, config: &IsometryConfig, x: &[f64]) -> f64 {
    config.centers.iter().map(|c| f.value(dist(x, c))).sum()
}

/// Outcome of [`validity_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeSweep {
    pub max_sigma: f64,
    pub worst_trial: u64,
    pub trials: u64,
    pub evaluations: u64,
}

/// Circumcenter of `pts` inside their affine hull, if nondegenerate.
fn circumcenter(pts: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let p0 = DVector::from_column_slice(pts[0]);
    let edges: Vec<DVector<f64>> = pts[1..]
        .iter()
        .map(|p| DVector::from_column_slice(p) - &p0)
        .collect();
    let s = edges.len();
    let gram = DMatrix::from_fn(s, s, |i, j| edges[i].dot(&edges[j]));
    let rhs = DVector::from_fn(s, |i, _| 0.5 * edges[i].norm_squared());
    let lambda = gram.lu().solve(&rhs)?;
    let mut c = p0;
    for (e, l) in edges.iter().zip(lambda.iter()) {
        c += e * *l;
    }
    c.iter()
        .all(|v| v.is_finite())
        .then(|| c.iter().copied().collect())
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// A random admissible configuration in `[−4, 4]^k`. Odd trials grow the
/// configuration by tangency (new centers at distance 2 from an existing one)
/// to probe the extremal cases; even trials sample uniformly.
pub fn random_admissible_config(
    rng: &mut ChaCha8Rng,
    k: usize,
    max_centers: usize,
    tangent: bool,
) -> IsometryConfig {
    let half = 0.5 * SWEEP_BOX_SIDE;
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut attempts = 0;
    while centers.len() < max_centers && attempts < 200 * max_centers.max(1) {
        attempts += 1;
        let cand: Vec<f64> = if tangent && !centers.is_empty() {
            let base = &centers[rng.random_range(0..centers.len())];
            let u = random_unit(rng, k);
            base.iter().zip(&u).map(|(b, d)| b + 2.0 * d).collect()
        } else {
            (0..k).map(|_| rng.random_range(-half..half)).collect()
        };
        if centers.iter().all(|c| dist(c, &cand) >= 2.0) {
            centers.push(cand);
        }
    }
    IsometryConfig { centers }
}

fn trial_max_sigma(
    f: &RadialGauge,
    config: &IsometryConfig,
    rng: &mut ChaCha8Rng,
    k: usize,
) -> (f64, u64) {
    let mut points: Vec<Vec<f64>> = config.centers.clone();
    let c = &config.centers;
    let reach = 2.0 * f.support() + 1e-9;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            if dist(&c[i], &c[j]) > reach {
                continue;
            }
            points.push(c[i].iter().zip(&c[j]).map(|(a, b)| 0.5 * (a + b)).collect());
            for l in j + 1..c.len() {
                if dist(&c[i], &c[l]) > reach || dist(&c[j], &c[l]) > reach {
                    continue;
                }
                points.extend(circumcenter(&[&c[i], &c[j], &c[l]]));
                points.push(
                    (0..k)
                        .map(|d| (c[i][d] + c[j][d] + c[l][d]) / 3.0)
                        .collect(),
                );
                for q in l + 1..c.len() {
                    if k >= 3 && [i, j, l].iter().all(|&a| dist(&c[a], &c[q]) <= reach) {
                        points.extend(circumcenter(&[&c[i], &c[j], &c[l], &c[q]]));
                    }
                }
            }
        }
    }
    let per_axis = match k {
        2 => 12,
        3 => 7,
        _ => 5,
    };
    let half = 0.5 * SWEEP_BOX_SIDE;
    let total = per_axis_pow(per_axis, k);
    for idx in 0..total {
        let mut rem = idx;
        points.push(
            (0..k)
                .map(|_| {
                    let s = rem % per_axis;
                    rem /= per_axis;
                    -half + SWEEP_BOX_SIDE * (s as f64 + 0.5) / per_axis as f64
                })
                .collect(),
        );
    }
    for _ in 0..32 {
        points.push((0..k).map(|_| rng.random_range(-half..half)).collect());
    }
    let max = points
        .iter()
        .map(|x| gauge_sum(f, config, x))
        .fold(f64::NEG_INFINITY, f64::max);
    (max, points.len() as u64)
}

fn per_axis_pow(base: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, _| acc * base)
}

/// Empirical check of the gauge inequality: maximum of `σ` over random
/// admissible configurations in dimensions 2–4, evaluated on a grid, at the
/// centers, at pair midpoints (tangency points) and at circumcenters of
/// triples and quadruples.
pub fn validity_sweep(
    f: &RadialGauge,
    trials: u64,
    centers_per_trial: usize,
    seed: u64,
) -> GaugeSweep {
    validity_sweep_with(f, trials, centers_per_trial, seed, Execution::default())
}

pub fn validity_sweep_with(
    f: &RadialGauge,
    trials: u64,
    centers_per_trial: usize,
    seed: u64,
    exec: Execution,
) -> GaugeSweep {
    let results = exec.map(trials, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let k = 2 + (trial % 3) as usize;
        let config = random_admissible_config(&mut rng, k, centers_per_trial, trial % 2 == 1);
        trial_max_sigma(f, &config, &mut rng, k)
    });
    let mut out = GaugeSweep {
        max_sigma: f64::NEG_INFINITY,
        worst_trial: 0,
        trials,
        evaluations: 0,
    };
    for (i, (m, evals)) in results.into_iter().enumerate() {
        out.evaluations += evals;
        if m > out.max_sigma {
            out.max_sigma = m;
            out.worst_trial = i as u64;
        }
    }
    out
}
