//! Dirichlet slices: the Dirichlet cell of a cylinder cut by the 2-plane
//! orthogonal to its core at a point `x`.
//!
//! Every neighbor is reduced to a pair of lines in a 3-dimensional leaf (the
//! central axis becomes the `z`-axis, `x` the origin, the slice plane `z = 0`).
//! In the plane the half-region `{no further from the central axis}` is
//! `G(P) ≥ 0` for the concave quadratic
//! `G(P) = dist(P, other)² − |P|² = −(s·P)² + L·P + F`, where `s` is the
//! in-plane part of the other axis direction. Its zero set is a parabola, a
//! line (parallel axes) or a pair of parallel lines.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::affine::{flat_distance, orthogonal_plane, shared_directions, Flat, Subspace};
use crate::exec::Execution;
use crate::packing::PolycylinderPacking;
use crate::poly;
use crate::quad::gauss_legendre;
use crate::{Error, Result};

/// Circumradius `2/√3` of the regular hexagon circumscribed about the unit circle.
pub fn vertex_bound() -> f64 {
    2.0 / 3f64.sqrt()
}

/// `2·arccos(√3 − 1)` in degrees.
pub fn chord_angle_bound() -> f64 {
    2.0 * (3f64.sqrt() - 1.0).acos().to_degrees()
}

/// Area `√12` of the regular hexagon circumscribed about the unit circle.
pub fn hexagon_area() -> f64 {
    12f64.sqrt()
}

pub const DEFAULT_CLIP_RADIUS: f64 = 8.0;
/// Tolerance of the vertex, convexity and residual checks.
pub const CHECK_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-9;
const ENVELOPE_SAMPLES: usize = 2048;
const ENVELOPE_MARGIN: f64 = 1.05;

type P2 = [f64; 2];

fn norm2(p: P2) -> f64 {
    p[0].hypot(p[1])
}

/// Two cylinder axes in a 3-dimensional leaf: the central axis is the
/// `z`-axis through the origin, the other axis is `q + t·u` with `q ⊥ u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafPair {
    pub source: (usize, usize),
    pub q: [f64; 3],
    pub u: [f64; 3],
}

impl LeafPair {
    /// Canonical form of the axis through `q` with direction `u`: `q` becomes
    /// the foot of the origin and `u` is a unit vector whose last nonzero
    /// coordinate is positive.
    pub fn new(source: (usize, usize), q: Vector3<f64>, u: Vector3<f64>) -> Result<Self> {
        let norm = u.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("axis direction vanishes".into()));
        }
        let mut u = u / norm;
        let pivot = (0..3).rev().find(|&k| u[k].abs() > 1e-12).unwrap_or(2);
        if u[pivot] < 0.0 {
            u = -u;
        }
        let q = q - u * q.dot(&u);
        if q.x.hypot(q.y) == 0.0 {
            return Err(Error::NotDisjoint(q.norm()));
        }
        Ok(LeafPair {
            source,
            q: [q.x, q.y, q.z],
            u: [u.x, u.y, u.z],
        })
    }

    pub fn central_distance(&self, p: P2) -> f64 {
        norm2(p)
    }

    /// Distance from the slice-plane point `p` to the other axis.
    pub fn other_distance(&self, p: P2) -> f64 {
        let d = Vector3::new(p[0] - self.q[0], p[1] - self.q[1], -self.q[2]);
        let u = Vector3::from(self.u);
        (d - u * d.dot(&u)).norm()
    }

    /// Distance between the two axes.
    pub fn axis_distance(&self) -> f64 {
        let (q, u) = (Vector3::from(self.q), Vector3::from(self.u));
        let w = Vector3::z().cross(&u);
        if w.norm() <= 1e-12 {
            q.x.hypot(q.y)
        } else {
            q.dot(&w).abs() / w.norm()
        }
    }
}

/// Orthonormal frame `(e1, e2)` of the plane through `x` orthogonal to `a_i`.
fn slice_frame(a_i: &Flat, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let plane = orthogonal_plane(a_i, x)?;
    let b = plane.directions().basis();
    Ok((b.column(0).into_owned(), b.column(1).into_owned()))
}

/// Reduce the cores `a_i ∋ x` and `a_j` to two lines in the leaf through `x`
/// orthogonal to their shared directions. Slice-plane coordinates use the
/// canonical frame of the plane orthogonal to `a_i`, so every neighbor of
/// `a_i` is reduced in the same coordinates.
pub fn reduce_to_leaf(
    a_i: &Flat,
    a_j: &Flat,
    x: &DVector<f64>,
    source: (usize, usize),
) -> Result<LeafPair> {
    let (e1, e2) = slice_frame(a_i, x)?;
    if a_j.ambient_dim() != x.len() {
        return Err(Error::DimensionMismatch(x.len(), a_j.ambient_dim()));
    }
    if a_i.dim() == 0 {
        // Disks in the plane: view them as vertical cylinders in R³.
        let d = a_j.basepoint() - x;
        return LeafPair::new(
            source,
            Vector3::new(e1.dot(&d), e2.dot(&d), 0.0),
            Vector3::z(),
        );
    }
    let w = shared_directions(a_i, a_j, x)?;
    let e3 = a_i
        .directions()
        .complement_within(&w)
        .basis()
        .column(0)
        .into_owned();
    let u_amb = a_j
        .directions()
        .complement_within(&w)
        .basis()
        .column(0)
        .into_owned();
    let foot = a_j.foot(x);
    let y0 = &foot - w.project(&(&foot - x));
    let d = y0 - x;
    let coords = |v: &DVector<f64>| Vector3::new(e1.dot(v), e2.dot(v), e3.dot(v));
    LeafPair::new(source, coords(&d), coords(&u_amb))
}

/// [`reduce_to_leaf`] for representative cores `i` and `j` of a packing.
pub fn reduce_pair(
    packing: &PolycylinderPacking,
    i: usize,
    j: usize,
    x: &DVector<f64>,
) -> Result<LeafPair> {
    let count = packing.cores().len();
    let a_i = packing
        .cores()
        .get(i)
        .ok_or(Error::BadIndex { index: i, count })?;
    let a_j = packing
        .cores()
        .get(j)
        .ok_or(Error::BadIndex { index: j, count })?;
    reduce_to_leaf(a_i, a_j, x, (i, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BisectorKind {
    Parabola,
    Line,
    /// Two parallel lines: the parabola degenerates when the in-plane parts
    /// of `u` and `q` are parallel.
    LinePair,
}

/// Polynomial parametrization `p0 + τ·t1 + τ²·t2` of one bisector branch.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Branch {
    p0: P2,
    t1: P2,
    t2: P2,
}

impl Branch {
    fn at(&self, t: f64) -> P2 {
        [
            self.p0[0] + t * (self.t1[0] + t * self.t2[0]),
            self.p0[1] + t * (self.t1[1] + t * self.t2[1]),
        ]
    }

    fn x(&self) -> [f64; 3] {
        [self.p0[0], self.t1[0], self.t2[0]]
    }

    fn y(&self) -> [f64; 3] {
        [self.p0[1], self.t1[1], self.t2[1]]
    }
}

/// The points of the slice plane equidistant from both axes of a
/// [`LeafPair`]: `A·X² + B·XY + C·Y² + D·X + E·Y + F = 0`, with the central
/// side `≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConicBisector {
    pub pair: LeafPair,
    /// Lattice coefficients of the neighbor translate.
    pub shift: Vec<i64>,
    pub coefficients: [f64; 6],
    pub kind: BisectorKind,
}

pub fn bisector_conic(pair: &LeafPair) -> Result<ConicBisector> {
    let [ux, uy, _] = pair.u;
    let q = pair.q;
    let c = q[0] * ux + q[1] * uy + q[2] * pair.u[2];
    let coefficients = [
        -ux * ux,
        -2.0 * ux * uy,
        -uy * uy,
        2.0 * c * ux - 2.0 * q[0],
        2.0 * c * uy - 2.0 * q[1],
        q[0] * q[0] + q[1] * q[1] + q[2] * q[2] - c * c,
    ];
    if !(coefficients[5] > 0.0) {
        return Err(Error::NotDisjoint(coefficients[5].max(0.0).sqrt()));
    }
    let s = ux.hypot(uy);
    let l = [coefficients[3], coefficients[4]];
    let kind = if s <= 1e-12 {
        BisectorKind::Line
    } else {
        let n = [-uy / s, ux / s];
        if (l[0] * n[0] + l[1] * n[1]).abs() <= 1e-12 * norm2(l).max(s * s) {
            BisectorKind::LinePair
        } else {
            BisectorKind::Parabola
        }
    };
    if kind == BisectorKind::Line && norm2(l) == 0.0 {
        return Err(Error::NotDisjoint(0.0));
    }
    Ok(ConicBisector {
        pair: pair.clone(),
        shift: Vec::new(),
        coefficients,
        kind,
    })
}

impl ConicBisector {
    /// `G(p)`: nonnegative exactly on the central side.
    pub fn value(&self, p: P2) -> f64 {
        let [a, b, c, d, e, f] = self.coefficients;
        let (x, y) = (p[0], p[1]);
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }

    /// Numerical rank of the quadratic part `[[A, B/2], [B/2, C]]`.
    pub fn quadratic_rank(&self) -> usize {
        let [a, b, c, ..] = self.coefficients;
        let mean = 0.5 * (a + c);
        let radius = (0.5 * (a - c)).hypot(0.5 * b);
        let big = mean.abs() + radius;
        if big <= 1e-12 {
            return 0;
        }
        let small = (mean.abs() - radius).abs();
        if small <= 1e-9 * big {
            1
        } else {
            2
        }
    }

    /// Magnitude of the terms of `G(p)`, for relative residual tests.
    fn value_scale(&self, p: P2) -> f64 {
        let [a, b, c, d, e, f] = self.coefficients;
        let (x, y) = (p[0].abs(), p[1].abs());
        a.abs() * x * x + b.abs() * x * y + c.abs() * y * y + d.abs() * x + e.abs() * y + f.abs()
    }

    fn in_plane_direction(&self) -> P2 {
        [self.pair.u[0], self.pair.u[1]]
    }

    fn linear_part(&self) -> P2 {
        [self.coefficients[3], self.coefficients[4]]
    }

    /// Distance from the slice point to the boundary along direction `θ`
    /// (`∞` when the ray never leaves the half-region).
    pub fn radial(&self, theta: f64) -> f64 {
        let e = [theta.cos(), theta.sin()];
        let s = self.in_plane_direction();
        let l = self.linear_part();
        let f = self.coefficients[5];
        let se = s[0] * e[0] + s[1] * e[1];
        let a = se * se;
        let b = l[0] * e[0] + l[1] * e[1];
        let disc = (b * b + 4.0 * a * f).sqrt();
        if b <= 0.0 {
            2.0 * f / (disc - b)
        } else if a > 0.0 {
            (b + disc) / (2.0 * a)
        } else {
            f64::INFINITY
        }
    }

    fn branches(&self) -> Vec<Branch> {
        let s = self.in_plane_direction();
        let l = self.linear_part();
        let f = self.coefficients[5];
        match self.kind {
            BisectorKind::Line => {
                let ln = norm2(l);
                vec![Branch {
                    p0: [-f * l[0] / (ln * ln), -f * l[1] / (ln * ln)],
                    t1: [-l[1] / ln, l[0] / ln],
                    t2: [0.0, 0.0],
                }]
            }
            BisectorKind::Parabola | BisectorKind::LinePair => {
                let sn = norm2(s);
                let sh = [s[0] / sn, s[1] / sn];
                let nh = [-sh[1], sh[0]];
                let ls = l[0] * sh[0] + l[1] * sh[1];
                let lnn = l[0] * nh[0] + l[1] * nh[1];
                let s2 = sn * sn;
                if self.kind == BisectorKind::Parabola {
                    // G = −|s|²α² + (L·ŝ)α + (L·n̂)β + F, solved for β.
                    vec![Branch {
                        p0: [-f / lnn * nh[0], -f / lnn * nh[1]],
                        t1: [sh[0] - ls / lnn * nh[0], sh[1] - ls / lnn * nh[1]],
                        t2: [s2 / lnn * nh[0], s2 / lnn * nh[1]],
                    }]
                } else {
                    let disc = (ls * ls + 4.0 * s2 * f).sqrt();
                    [(ls - disc) / (2.0 * s2), (ls + disc) / (2.0 * s2)]
                        .into_iter()
                        .map(|alpha| Branch {
                            p0: [alpha * sh[0], alpha * sh[1]],
                            t1: nh,
                            t2: [0.0, 0.0],
                        })
                        .collect()
                }
            }
        }
    }

    /// `G` along a branch, as a polynomial in the branch parameter.
    fn along(&self, br: &Branch) -> Vec<f64> {
        let [a, b, c, d, e, f] = self.coefficients;
        let (x, y) = (br.x(), br.y());
        let mut out = poly::scale(&poly::mul(&x, &x), a);
        out = poly::add(&out, &poly::scale(&poly::mul(&x, &y), b));
        out = poly::add(&out, &poly::scale(&poly::mul(&y, &y), c));
        out = poly::add(&out, &poly::scale(&x, d));
        out = poly::add(&out, &poly::scale(&y, e));
        poly::add(&out, &[f])
    }

    /// Normalized coefficient vector, for deduplication.
    fn normalized(&self) -> [f64; 6] {
        let n = self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.coefficients.map(|c| c / n)
    }

    /// Points where the bisector crosses the circle of radius `r` about the origin.
    pub fn circle_points(&self, r: f64) -> Vec<P2> {
        let mut out: Vec<P2> = Vec::new();
        for br in self.branches() {
            let (x, y) = (br.x(), br.y());
            let p = poly::add(
                &poly::add(&poly::mul(&x, &x), &poly::mul(&y, &y)),
                &[-r * r],
            );
            let span = 2.0 * r + 1.0;
            for t in poly::real_roots_in(&p, -span, span) {
                push_unique(&mut out, br.at(t));
            }
        }
        out
    }
}

fn push_unique(points: &mut Vec<P2>, p: P2) -> bool {
    let scale = 1.0 + norm2(p);
    if points
        .iter()
        .any(|q| norm2([q[0] - p[0], q[1] - p[1]]) <= DEDUP_TOL * scale)
    {
        return false;
    }
    points.push(p);
    true
}

/// Whether `p` is no further from the central axis than from the other one
/// (ties belong to both half-regions).
pub fn half_region_contains(b: &ConicBisector, p: P2) -> bool {
    b.pair.central_distance(p) <= b.pair.other_distance(p)
}

/// Largest angle `∠yxz` in degrees over pairs of bisector points `y`, `z` on
/// the circle of radius `2/√3`; `None` with fewer than two such points.
pub fn chord_angle(b: &ConicBisector) -> Option<f64> {
    let pts = b.circle_points(vertex_bound());
    let mut best: Option<f64> = None;
    for (k, y) in pts.iter().enumerate() {
        for z in &pts[k + 1..] {
            let cross = y[0] * z[1] - y[1] * z[0];
            let dot = y[0] * z[0] + y[1] * z[1];
            let angle = cross.abs().atan2(dot).to_degrees();
            best = Some(best.map_or(angle, |a: f64| a.max(angle)));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "index")]
pub enum ArcOwner {
    Bisector(usize),
    Clip,
}

/// Boundary arc between polar angles `start < end` (radians, `end − start ≤ 2π`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceArc {
    pub owner: ArcOwner,
    pub start: f64,
    pub end: f64,
}

/// A Dirichlet slice in plane coordinates centered at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletSlice {
    pub core: usize,
    pub point: Vec<f64>,
    /// Ambient coordinates of the plane's orthonormal frame.
    pub frame: [Vec<f64>; 2],
    pub clip_radius: f64,
    /// Constraints surviving pruning; arcs refer to them by index.
    pub bisectors: Vec<ConicBisector>,
    pub arcs: Vec<SliceArc>,
    pub vertices: Vec<P2>,
    pub bounded: bool,
}

impl DirichletSlice {
    /// Boundary distance along direction `θ`.
    pub fn radial(&self, theta: f64) -> f64 {
        radial_min(&self.bisectors, self.clip_radius, theta)
    }

    /// Membership in the clipped slice, by axis distances.
    pub fn contains(&self, p: P2) -> bool {
        norm2(p) <= self.clip_radius && self.bisectors.iter().all(|b| half_region_contains(b, p))
    }

    /// Ambient point of the plane coordinates `p`.
    pub fn ambient(&self, p: P2) -> DVector<f64> {
        DVector::from_fn(self.point.len(), |k, _| {
            self.point[k] + p[0] * self.frame[0][k] + p[1] * self.frame[1][k]
        })
    }

    /// Boundary point at polar angle `θ`.
    pub fn boundary_point(&self, theta: f64) -> P2 {
        let r = self.radial(theta);
        [r * theta.cos(), r * theta.sin()]
    }
}

fn radial_min(bisectors: &[ConicBisector], clip: f64, theta: f64) -> f64 {
    bisectors
        .iter()
        .map(|b| b.radial(theta))
        .fold(clip, f64::min)
}

fn owner_at(bisectors: &[ConicBisector], clip: f64, theta: f64) -> (ArcOwner, f64) {
    let mut best = (ArcOwner::Clip, clip);
    for (k, b) in bisectors.iter().enumerate() {
        let r = b.radial(theta);
        if r < best.1 {
            best = (ArcOwner::Bisector(k), r);
        }
    }
    best
}

fn feasible(bisectors: &[ConicBisector], clip: f64, p: P2) -> bool {
    let r = norm2(p);
    r <= clip * (1.0 + CHECK_TOL)
        && bisectors
            .iter()
            .all(|b| b.value(p) >= -CHECK_TOL * b.value_scale(p).max(1.0))
}

fn angle_of(p: P2) -> f64 {
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Intersect the half-regions with the clip disk and assemble the boundary.
fn assemble(
    bisectors: Vec<ConicBisector>,
    clip: f64,
) -> Result<(Vec<ConicBisector>, Vec<SliceArc>, Vec<P2>)> {
    let span = clip + 1.0;
    let mut candidates: Vec<P2> = Vec::new();
    for (k, b) in bisectors.iter().enumerate() {
        for br in b.branches() {
            let (x, y) = (br.x(), br.y());
            let circle = poly::add(
                &[clip * clip],
                &poly::scale(&poly::add(&poly::mul(&x, &x), &poly::mul(&y, &y)), -1.0),
            );
            let mut others: Vec<Vec<f64>> = vec![circle];
            for (l, other) in bisectors.iter().enumerate() {
                if l != k {
                    others.push(other.along(&br));
                }
            }
            for p in &others {
                for t in poly::real_roots_in(p, -span, span) {
                    let pt = br.at(t);
                    if feasible(&bisectors, clip, pt) {
                        push_unique(&mut candidates, pt);
                    }
                }
            }
        }
    }
    let mut angles: Vec<f64> = candidates.iter().map(|&p| angle_of(p)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);

    let mut arcs: Vec<SliceArc> = Vec::new();
    if angles.is_empty() {
        let (owner, _) = owner_at(&bisectors, clip, 0.0);
        arcs.push(SliceArc {
            owner,
            start: 0.0,
            end: TAU,
        });
    } else {
        let n = angles.len();
        for k in 0..n {
            let start = angles[k];
            let end = if k + 1 < n {
                angles[k + 1]
            } else {
                angles[0] + TAU
            };
            let (owner, _) = owner_at(&bisectors, clip, 0.5 * (start + end));
            match arcs.last_mut() {
                Some(last) if last.owner == owner => last.end = end,
                _ => arcs.push(SliceArc { owner, start, end }),
            }
        }
        if arcs.len() > 1 && arcs[0].owner == arcs[arcs.len() - 1].owner {
            let last = arcs.pop().expect("nonempty");
            arcs[0].start = last.start - TAU;
            if arcs[0].start < 0.0 {
                arcs[0].start += TAU;
                arcs[0].end += TAU;
            }
        }
        if arcs.len() == 1 {
            arcs[0].start = 0.0;
            arcs[0].end = TAU;
        }
    }
    // Every arc must be owned throughout by the same constraint; a change of
    // owner inside an arc means a vertex was missed.
    for arc in &arcs {
        for k in 1..16 {
            let t = arc.start + (arc.end - arc.start) * k as f64 / 16.0;
            let (owner, r) = owner_at(&bisectors, clip, t);
            if owner != arc.owner {
                let own = match arc.owner {
                    ArcOwner::Clip => clip,
                    ArcOwner::Bisector(j) => bisectors[j].radial(t),
                };
                if own - r > 1e-9 * (1.0 + r) {
                    return Err(Error::SliceAssembly(format!(
                        "boundary owner changes inside an arc at angle {t}"
                    )));
                }
            }
            let p = [r * t.cos(), r * t.sin()];
            if !feasible(&bisectors, clip, p) {
                return Err(Error::SliceAssembly(format!(
                    "arc point at angle {t} violates a constraint"
                )));
            }
        }
    }
    let vertices = if arcs.len() > 1 {
        arcs.iter()
            .map(|a| {
                let r = radial_min(&bisectors, clip, a.start);
                [r * a.start.cos(), r * a.start.sin()]
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((bisectors, arcs, vertices))
}

/// The Dirichlet slice of representative core `i` at `x ∈ a_i`, clipped to
/// the disk of radius `clip_radius`.
pub fn build_slice(
    packing: &PolycylinderPacking,
    i: usize,
    x: &DVector<f64>,
    clip_radius: f64,
) -> Result<DirichletSlice> {
    let count = packing.cores().len();
    let a_i = packing
        .cores()
        .get(i)
        .ok_or(Error::BadIndex { index: i, count })?;
    if !(clip_radius >= vertex_bound()) || !clip_radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "clip radius must be at least 2/√3, got {clip_radius}"
        )));
    }
    let (e1, e2) = slice_frame(a_i, x)?;
    let own = a_i.canonical_basepoint();
    let mut bisectors: Vec<ConicBisector> = Vec::new();
    let mut seen: Vec<[f64; 6]> = Vec::new();
    for placed in packing.cores_near(x, 2.0 * clip_radius + 1.0)? {
        if placed.index == i && (placed.flat.canonical_basepoint() - &own).norm() <= 1e-9 {
            continue;
        }
        let d = flat_distance(a_i, &placed.flat)?;
        if d < 2.0 - CHECK_TOL {
            return Err(Error::InvalidPacking(format!(
                "core {i} and a translate of core {} are at distance {d}",
                placed.index
            )));
        }
        let pair = reduce_to_leaf(a_i, &placed.flat, x, (i, placed.index))?;
        let mut b = bisector_conic(&pair)?;
        b.shift = placed.shift;
        let key = b.normalized();
        if seen.iter().any(|s| {
            s.iter()
                .zip(&key)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt()
                < DEDUP_TOL
        }) {
            continue;
        }
        seen.push(key);
        bisectors.push(b);
    }

    // A neighbor at distance d from x only matters inside the disk of radius
    // d/2, so bisectors far beyond the sampled envelope are dropped first.
    let envelope = (0..ENVELOPE_SAMPLES)
        .map(|k| {
            radial_min(
                &bisectors,
                clip_radius,
                TAU * k as f64 / ENVELOPE_SAMPLES as f64,
            )
        })
        .fold(0.0, f64::max);
    let reach = ENVELOPE_MARGIN * envelope + 1e-9;
    let pruned: Vec<ConicBisector> = bisectors
        .iter()
        .filter(|b| b.coefficients[5].sqrt() <= 2.0 * reach)
        .cloned()
        .collect();
    let (kept, arcs, vertices) = if pruned.len() < bisectors.len() {
        let (kept, arcs, vertices) = assemble(pruned, clip_radius)?;
        let far = vertices.iter().any(|&v| norm2(v) > reach)
            || arcs
                .iter()
                .any(|a| radial_min(&kept, clip_radius, 0.5 * (a.start + a.end)) > reach);
        if far {
            assemble(bisectors, clip_radius)?
        } else {
            (kept, arcs, vertices)
        }
    } else {
        assemble(bisectors, clip_radius)?
    };
    let bounded = arcs.iter().all(|a| a.owner != ArcOwner::Clip);
    Ok(DirichletSlice {
        core: i,
        point: x.iter().copied().collect(),
        frame: [e1.iter().copied().collect(), e2.iter().copied().collect()],
        clip_radius,
        bisectors: kept,
        arcs,
        vertices,
        bounded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceArea {
    pub area: f64,
    /// True when the slice was clipped, so the true slice is larger.
    pub lower_bound: bool,
}

/// Area as `½∮ r(θ)² dθ`, integrated arc by arc.
pub fn slice_area(s: &DirichletSlice) -> SliceArea {
    let mut area = 0.0;
    for arc in &s.arcs {
        area += match arc.owner {
            ArcOwner::Clip => 0.5 * s.clip_radius * s.clip_radius * (arc.end - arc.start),
            ArcOwner::Bisector(_) => {
                0.5 * gauss_legendre(|t| s.radial(t).powi(2), arc.start, arc.end, 1e-13)
            }
        };
    }
    SliceArea {
        area,
        lower_bound: !s.bounded,
    }
}

/// Smallest vertex distance from `x` (`∞` for a slice without vertices).
pub fn verify_vertex_bound(s: &DirichletSlice) -> f64 {
    s.vertices
        .iter()
        .map(|&v| norm2(v))
        .fold(f64::INFINITY, f64::min)
}

/// Largest chord angle over the bisectors of a slice.
pub fn max_chord_angle(s: &DirichletSlice) -> Option<f64> {
    s.bisectors
        .iter()
        .filter_map(chord_angle)
        .fold(None, |acc, a| Some(acc.map_or(a, |b: f64| b.max(a))))
}

/// Deterministic SVG drawing: 100 px per unit, origin centered, `y` up.
pub fn slice_svg(s: &DirichletSlice) -> String {
    let extent = s
        .arcs
        .iter()
        .flat_map(|a| (0..=32).map(move |k| a.start + (a.end - a.start) * k as f64 / 32.0))
        .map(|t| s.radial(t))
        .fold(vertex_bound(), f64::max)
        + 0.5;
    let half = (extent * 100.0).ceil();
    let px = |p: P2| (100.0 * p[0], -100.0 * p[1]);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"{o} {o} {w} {w}\">",
        w = 2.0 * half,
        o = -half
    );
    let _ = writeln!(out, "<g id=\"unit-circle\" fill=\"none\" stroke=\"#888\"><circle cx=\"0\" cy=\"0\" r=\"100\"/></g>");
    let _ = writeln!(
        out,
        "<g id=\"vertex-circle\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 4\"><circle cx=\"0\" cy=\"0\" r=\"{:.3}\"/></g>",
        100.0 * vertex_bound()
    );
    let hex: Vec<String> = (0..6)
        .map(|k| {
            let t = PI / 6.0 + PI / 3.0 * k as f64;
            let (x, y) = px([vertex_bound() * t.cos(), vertex_bound() * t.sin()]);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        "<g id=\"hexagon\" fill=\"none\" stroke=\"#4a4\"><polygon points=\"{}\"/></g>",
        hex.join(" ")
    );
    let _ = writeln!(
        out,
        "<g id=\"arcs\" fill=\"none\" stroke=\"#000\" stroke-width=\"2\">"
    );
    for arc in &s.arcs {
        let steps = 64;
        let mut d = String::new();
        for k in 0..=steps {
            let t = arc.start + (arc.end - arc.start) * k as f64 / steps as f64;
            let (x, y) = px(s.boundary_point(t));
            let _ = write!(d, "{}{x:.3},{y:.3}", if k == 0 { "M" } else { " L" });
        }
        let class = match arc.owner {
            ArcOwner::Clip => "clip".to_string(),
            ArcOwner::Bisector(k) => format!("bisector-{k}"),
        };
        let _ = writeln!(out, "<path class=\"{class}\" d=\"{d}\"/>");
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "<g id=\"vertices\" fill=\"#c00\">");
    for &v in &s.vertices {
        let (x, y) = px(v);
        let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\"/>");
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

/// A finite configuration for the lemma sweep; core 0 is central and `point`
/// lies on it.
#[derive(Debug, Clone)]
pub struct SliceConfiguration {
    pub packing: PolycylinderPacking,
    pub point: DVector<f64>,
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..m {
        if r[(k, k)] < 0.0 {
            let col = -q.column(k);
            q.set_column(k, &col);
        }
    }
    q
}

fn pairwise_valid(cores: &[Flat], cand: &Flat) -> bool {
    cores
        .iter()
        .all(|c| flat_distance(c, cand).is_ok_and(|d| d >= 2.0))
}

/// Distance `2 + 1.5·U²`, concentrated near tangency.
fn near_distance(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    2.0 + 1.5 * u * u
}

/// Lines in R³ around the `z`-axis, times a common `R^{n−1}`.
/// With `tight`, six nearly parallel neighbors sit close to the tangent
/// hexagonal arrangement, which is the extremal case for all three lemmas.
fn product_configuration(rng: &mut ChaCha8Rng, n: usize, tight: bool) -> Vec<Flat> {
    let m = n + 2;
    let embed3 = |v: Vector3<f64>| {
        let mut out = DVector::zeros(m);
        out.rows_mut(0, 3).copy_from(&v);
        out
    };
    let common: Vec<DVector<f64>> = (3..m)
        .map(|k| {
            let mut e = DVector::zeros(m);
            e[k] = 1.0;
            e
        })
        .collect();
    let core = |p: Vector3<f64>, u: Vector3<f64>| {
        let mut dirs = vec![embed3(u)];
        dirs.extend(common.iter().cloned());
        Flat::new(embed3(p), &dirs).expect("independent directions")
    };
    let mut cores = vec![core(Vector3::zeros(), Vector3::z())];
    let k = if tight { 6 } else { rng.random_range(3..=6) };
    let (jitter, tilt) = if tight { (0.03, 0.12) } else { (0.4, 0.3) };
    for j in 0..k {
        for _ in 0..100 {
            let phi = TAU * j as f64 / k as f64 + rng.random_range(-jitter..jitter);
            let d = if tight {
                2.0 + 0.08 * rng.random::<f64>()
            } else {
                near_distance(rng)
            };
            let u = if tight || rng.random_bool(0.4) {
                Vector3::new(
                    rng.random_range(-tilt..tilt),
                    rng.random_range(-tilt..tilt),
                    1.0,
                )
                .normalize()
            } else {
                let v = random_unit(rng, 3);
                Vector3::new(v[0], v[1], v[2])
            };
            // Put the closest point of the line at distance d in direction φ.
            let radial = Vector3::new(phi.cos(), phi.sin(), 0.0);
            let u_perp = (u - radial * u.dot(&radial)).normalize();
            let z = rng.random_range(-1.0..1.0);
            let cand = core(
                radial * d + Vector3::z() * z - u_perp * (z * u_perp.z),
                u_perp,
            );
            if pairwise_valid(&cores, &cand) {
                cores.push(cand);
                break;
            }
        }
    }
    cores
}

/// Cores whose directions are hyperplanes of a common `(n+1)`-space `V`,
/// stacked at heights along `V⊥`.
fn layered_configuration(rng: &mut ChaCha8Rng, n: usize) -> Vec<Flat> {
    let m = n + 2;
    let w = {
        let mut e = DVector::zeros(m);
        e[m - 1] = 1.0;
        e
    };
    let core = |nu: &DVector<f64>, t: f64, h: f64| {
        let dirs = Subspace::from_vectors(m, &[nu.clone(), w.clone()])
            .expect("independent")
            .complement();
        Flat::from_subspace(nu * t + &w * h, dirs).expect("dimensions agree")
    };
    let e1 = {
        let mut e = DVector::zeros(m);
        e[0] = 1.0;
        e
    };
    let mut cores = vec![core(&e1, 0.0, 0.0)];
    let k = rng.random_range(2..=5);
    for _ in 0..k {
        for _ in 0..100 {
            let cand = if rng.random_bool(0.4) {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                core(&e1, sign * near_distance(rng), rng.random_range(-1.5..1.5))
            } else {
                let v = random_unit(rng, n + 1);
                let nu = DVector::from_fn(m, |r, _| if r <= n { v[r] } else { 0.0 });
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                core(&nu, rng.random_range(-3.0..3.0), sign * near_distance(rng))
            };
            if pairwise_valid(&cores, &cand) {
                cores.push(cand);
                break;
            }
        }
    }
    cores
}

/// Random finite configuration for trial `trial` of `seed`: ambient dimension
/// `n + 2` with `n = 1 + trial mod 3`, cycling through the product, layered
/// and near-hexagonal families, then moved by a random rigid motion.
pub fn random_slice_configuration(seed: u64, trial: u64) -> SliceConfiguration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let n = 1 + (trial % 3) as usize;
    let m = n + 2;
    let cores = match (trial / 3) % 3 {
        0 => product_configuration(&mut rng, n, false),
        1 => layered_configuration(&mut rng, n),
        _ => product_configuration(&mut rng, n, true),
    };
    let along =
        cores[0].directions().basis() * DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let point = cores[0].basepoint() + along;
    let rot = random_rotation(&mut rng, m);
    let shift = DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
    let moved: Vec<Flat> = cores
        .iter()
        .map(|c| c.transform(&rot, &shift).expect("orthogonal"))
        .collect();
    SliceConfiguration {
        packing: PolycylinderPacking::new(m, moved, Vec::new()).expect("cores have codimension 2"),
        point: &rot * point + shift,
    }
}

/// Extremes of the slice lemmas over random configurations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSweep {
    pub trials: u64,
    pub bounded: u64,
    /// Smallest area over bounded slices.
    pub min_area: f64,
    pub min_vertex_radius: f64,
    pub max_chord_angle: f64,
    pub area_violations: u64,
    pub vertex_violations: u64,
    pub angle_violations: u64,
    /// Bisectors whose quadratic form has rank 2.
    pub rank_violations: u64,
    /// Trials whose slice could not be assembled.
    pub failures: u64,
}

impl LemmaSweep {
    pub fn passed(&self) -> bool {
        self.area_violations == 0
            && self.vertex_violations == 0
            && self.angle_violations == 0
            && self.rank_violations == 0
            && self.failures == 0
    }
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    area: Option<f64>,
    vertex_radius: f64,
    chord_angle: Option<f64>,
    full_rank: u64,
    failed: bool,
}

fn lemma_trial(seed: u64, trial: u64) -> TrialOutcome {
    let cfg = random_slice_configuration(seed, trial);
    match build_slice(&cfg.packing, 0, &cfg.point, DEFAULT_CLIP_RADIUS) {
        Ok(s) => {
            let area = slice_area(&s);
            TrialOutcome {
                area: (!area.lower_bound).then_some(area.area),
                vertex_radius: verify_vertex_bound(&s),
                chord_angle: max_chord_angle(&s),
                full_rank: s
                    .bisectors
                    .iter()
                    .filter(|b| b.quadratic_rank() > 1)
                    .count() as u64,
                failed: false,
            }
        }
        Err(_) => TrialOutcome {
            area: None,
            vertex_radius: f64::INFINITY,
            chord_angle: None,
            full_rank: 0,
            failed: true,
        },
    }
}

pub fn lemma_sweep(trials: u64, seed: u64) -> LemmaSweep {
    lemma_sweep_with(trials, seed, Execution::default())
}

/// Build the slice of [`random_slice_configuration`] for each trial and check
/// that every bisector's quadratic form has rank at most 1, area `≥ √12 − 1e-6` (bounded slices), vertex radius `≥ 2/√3 − 1e-9` and
/// chord angle `≤ 2·arccos(√3 − 1) + 1e-6`.
pub fn lemma_sweep_with(trials: u64, seed: u64, exec: Execution) -> LemmaSweep {
    let outcomes = exec.map(trials, |t| lemma_trial(seed, t));
    let mut out = LemmaSweep {
        trials,
        bounded: 0,
        min_area: f64::INFINITY,
        min_vertex_radius: f64::INFINITY,
        max_chord_angle: 0.0,
        area_violations: 0,
        vertex_violations: 0,
        angle_violations: 0,
        rank_violations: 0,
        failures: 0,
    };
    for o in outcomes {
        if o.failed {
            out.failures += 1;
            continue;
        }
        if let Some(a) = o.area {
            out.bounded += 1;
            out.min_area = out.min_area.min(a);
            if a < hexagon_area() - 1e-6 {
                out.area_violations += 1;
            }
        }
        out.rank_violations += o.full_rank;
        out.min_vertex_radius = out.min_vertex_radius.min(o.vertex_radius);
        if o.vertex_radius < vertex_bound() - CHECK_TOL {
            out.vertex_violations += 1;
        }
        if let Some(a) = o.chord_angle {
            out.max_chord_angle = out.max_chord_angle.max(a);
            if a > chord_angle_bound() + 1e-6 {
                out.angle_violations += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn line(p: [f64; 3], u: [f64; 3]) -> Flat {
        Flat::from_slices(&p, &[u.to_vec()]).unwrap()
    }

    fn finite(cores: Vec<Flat>) -> PolycylinderPacking {
        let m = cores[0].ambient_dim();
        PolycylinderPacking::new(m, cores, vec![]).unwrap()
    }

    fn z_axis() -> Flat {
        line([0.0; 3], [0.0, 0.0, 1.0])
    }

    #[test]
    fn canonical_leaf_examples() {
        let x = v(&[0.0, 0.0, 0.0]);
        let p = reduce_to_leaf(
            &z_axis(),
            &line([2.0, 0.0, 5.0], [0.0, 0.0, -1.0]),
            &x,
            (0, 1),
        )
        .unwrap();
        assert_eq!(p.u, [0.0, 0.0, 1.0]);
        assert_eq!(p.q, [2.0, 0.0, 0.0]);
        let p = reduce_to_leaf(
            &z_axis(),
            &line([3.0, 7.0, 1.5], [0.0, 1.0, 0.0]),
            &x,
            (0, 1),
        )
        .unwrap();
        assert_eq!(p.u, [0.0, 1.0, 0.0]);
        assert_eq!(p.q, [3.0, 0.0, 1.5]);
    }

    #[test]
    fn leaf_distances_match_ambient_in_r5() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let cfg = random_slice_configuration(11, 3 * trial + 2);
            let a_i = &cfg.packing.cores()[0];
            let (e1, e2) = slice_frame(a_i, &cfg.point).unwrap();
            for (j, a_j) in cfg.packing.cores().iter().enumerate().skip(1) {
                let pair = reduce_to_leaf(a_i, a_j, &cfg.point, (0, j)).unwrap();
                for _ in 0..100 {
                    let p = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                    let amb = &cfg.point + &e1 * p[0] + &e2 * p[1];
                    assert!((pair.other_distance(p) - a_j.point_distance(&amb)).abs() < 1e-10);
                    assert!((pair.central_distance(p) - a_i.point_distance(&amb)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bisector_examples() {
        let w = 3.0;
        let parallel = bisector_conic(
            &LeafPair::new((0, 1), Vector3::new(w, 0.0, 0.0), Vector3::z()).unwrap(),
        )
        .unwrap();
        assert_eq!(parallel.kind, BisectorKind::Line);
        let c = parallel.coefficients;
        assert_eq!(c[..3], [0.0, 0.0, 0.0]);
        assert!((-c[5] / c[3] - w / 2.0).abs() < 1e-15 && c[4] == 0.0);

        let h = 0.7;
        let skew =
            bisector_conic(&LeafPair::new((0, 1), Vector3::new(w, 0.0, h), Vector3::y()).unwrap())
                .unwrap();
        assert_eq!(skew.kind, BisectorKind::Parabola);
        assert_eq!(
            skew.coefficients,
            [0.0, 0.0, -1.0, -2.0 * w, 0.0, w * w + h * h]
        );

        let tangent = bisector_conic(
            &LeafPair::new((0, 1), Vector3::new(2.0, 0.0, 0.0), Vector3::y()).unwrap(),
        )
        .unwrap();
        assert_eq!(tangent.value([1.0, 0.0]), 0.0);

        assert_eq!(parallel.quadratic_rank(), 0);
        assert_eq!(skew.quadratic_rank(), 1);
        let mut full = skew.clone();
        full.coefficients[0] = -0.5;
        assert_eq!(full.quadratic_rank(), 2);
    }

    #[test]
    fn bisector_points_are_equidistant() {
        for trial in 0..60 {
            let cfg = random_slice_configuration(5, trial);
            let s = build_slice(&cfg.packing, 0, &cfg.point, DEFAULT_CLIP_RADIUS).unwrap();
            for b in &s.bisectors {
                assert!(b.coefficients[..3].iter().all(|c| c.is_finite()));
                let [a, bb, c, ..] = b.coefficients;
                assert!((bb * bb - 4.0 * a * c).abs() <= 1e-9 * (a * a + bb * bb + c * c).max(1.0));
                assert!(b.quadratic_rank() <= 1);
                for br in b.branches() {
                    for t in [-2.0, -0.5, 0.0, 0.3, 1.7] {
                        let p = br.at(t);
                        let (di, dj) = (b.pair.central_distance(p), b.pair.other_distance(p));
                        assert!((di - dj).abs() <= 1e-10 * (1.0 + di), "{di} vs {dj}");
                    }
                }
                for p in b.circle_points(vertex_bound()) {
                    assert!((b.pair.central_distance(p) - b.pair.other_distance(p)).abs() < 1e-10);
                }
            }
            for &p in &s.vertices {
                assert!(s
                    .bisectors
                    .iter()
                    .all(|b| b.value(p) >= -1e-9 * b.value_scale(p)));
            }
        }
    }

    #[test]
    fn degenerate_line_pair_bisector() {
        // In-plane parts of u and q parallel: G depends on one coordinate only.
        let u = Vector3::new(1.0, 0.0, 1.0);
        let pair = LeafPair::new((0, 1), Vector3::new(3.0, 0.0, -3.0), u).unwrap();
        let b = bisector_conic(&pair).unwrap();
        assert_eq!(b.kind, BisectorKind::LinePair);
        let brs = b.branches();
        assert_eq!(brs.len(), 2);
        for br in brs {
            for t in [-3.0, 0.0, 2.0] {
                let p = br.at(t);
                assert!((pair.central_distance(p) - pair.other_distance(p)).abs() < 1e-12);
            }
        }
        assert!(half_region_contains(&b, [0.0, 0.0]));
    }

    #[test]
    fn half_region_examples() {
        let pair = LeafPair::new((0, 1), Vector3::new(2.0, 0.0, 0.0), Vector3::y()).unwrap();
        let b = bisector_conic(&pair).unwrap();
        assert!(half_region_contains(&b, [0.0, 0.0]));
        assert!(half_region_contains(&b, [1.0, 0.0]));
        assert!(!half_region_contains(&b, [3.0, 0.0]));
    }

    #[test]
    fn half_regions_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = random_slice_configuration(2, 4);
        let s = build_slice(&cfg.packing, 0, &cfg.point, DEFAULT_CLIP_RADIUS).unwrap();
        for b in &s.bisectors {
            let mut inside = Vec::new();
            while inside.len() < 200 {
                let p = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
                if half_region_contains(b, p) {
                    inside.push(p);
                }
            }
            for k in 0..10_000 {
                let (p, q) = (inside[k % 200], inside[(k * 7 + 13) % 200]);
                assert!(b.value([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]) >= -1e-12);
            }
        }
    }

    #[test]
    fn hexagonal_slice_is_the_circumscribed_hexagon() {
        for n in 0..=2 {
            let hex = PolycylinderPacking::hexagonal(n);
            let mut x = DVector::zeros(n + 2);
            for k in 2..n + 2 {
                x[k] = 0.37 * k as f64;
            }
            let s = build_slice(&hex, 0, &x, DEFAULT_CLIP_RADIUS).unwrap();
            assert!(s.bounded);
            assert_eq!(s.vertices.len(), 6);
            assert_eq!(s.arcs.len(), 6);
            assert!(s
                .vertices
                .iter()
                .all(|&p| (norm2(p) - vertex_bound()).abs() < 1e-9));
            let area = slice_area(&s);
            assert!(!area.lower_bound);
            assert!((area.area - hexagon_area()).abs() < 1e-9, "{}", area.area);
            assert!((verify_vertex_bound(&s) - vertex_bound()).abs() < 1e-9);
            assert!((max_chord_angle(&s).unwrap() - 60.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hexagonal_membership_matches_slice() {
        let hex = PolycylinderPacking::hexagonal(1);
        let x = v(&[0.0, 0.0, 0.4]);
        let s = build_slice(&hex, 0, &x, DEFAULT_CLIP_RADIUS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let p = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let amb = s.ambient(p);
            let boundary = (norm2(p) - s.radial(angle_of(p))).abs() < 1e-9;
            if !boundary {
                assert_eq!(
                    s.contains(p),
                    hex.dirichlet_cell_membership(0, &amb).unwrap()
                );
            }
        }
    }

    #[test]
    fn isolated_cylinder_gives_clip_disk() {
        let s = build_slice(&finite(vec![z_axis()]), 0, &v(&[0.0, 0.0, 1.0]), 4.0).unwrap();
        assert!(!s.bounded);
        assert!(s.vertices.is_empty());
        assert_eq!(verify_vertex_bound(&s), f64::INFINITY);
        let a = slice_area(&s);
        assert!(a.lower_bound);
        assert!((a.area - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn three_tangent_cylinders_meet_the_vertex_bound() {
        let r3 = 3f64.sqrt();
        let cores = vec![
            line([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
            line([2.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
            line([1.0, r3, 0.0], [0.0, 0.0, 1.0]),
        ];
        let s = build_slice(&finite(cores), 0, &v(&[0.0, 0.0, 0.0]), DEFAULT_CLIP_RADIUS).unwrap();
        assert!(!s.bounded);
        assert!((verify_vertex_bound(&s) - vertex_bound()).abs() < 1e-12);
        let voronoi = [1.0, 1.0 / r3];
        assert!(s
            .vertices
            .iter()
            .any(|p| norm2([p[0] - voronoi[0], p[1] - voronoi[1]]) < 1e-12));
    }

    #[test]
    fn chord_angle_examples() {
        let perpendicular = bisector_conic(
            &LeafPair::new((0, 1), Vector3::new(2.0, 0.0, 0.0), Vector3::y()).unwrap(),
        )
        .unwrap();
        let a = chord_angle(&perpendicular).unwrap();
        assert!((a - chord_angle_bound()).abs() < 1e-9, "{a}");
        assert!((chord_angle_bound() - 85.882_805_7).abs() < 1e-6);
        let parallel = bisector_conic(
            &LeafPair::new((0, 1), Vector3::new(2.0, 0.0, 0.0), Vector3::z()).unwrap(),
        )
        .unwrap();
        assert!((chord_angle(&parallel).unwrap() - 60.0).abs() < 1e-9);
        let far = bisector_conic(
            &LeafPair::new((0, 1), Vector3::new(4.0, 0.0, 0.0), Vector3::z()).unwrap(),
        )
        .unwrap();
        assert_eq!(chord_angle(&far), None);
    }

    #[test]
    fn coincident_neighbors_are_deduplicated() {
        // The same line listed twice is one constraint.
        let n = line([2.5, 0.0, 0.0], [0.0, 0.0, 1.0]);
        let p = PolycylinderPacking::new(3, vec![z_axis(), n.clone(), n], vec![]).unwrap();
        let s = build_slice(&p, 0, &v(&[0.0; 3]), 4.0).unwrap();
        assert_eq!(s.bisectors.len(), 1);
    }

    #[test]
    fn overlapping_neighbor_is_rejected() {
        let p = finite(vec![z_axis(), line([1.5, 0.0, 0.0], [0.0, 1.0, 0.0])]);
        assert!(matches!(
            build_slice(&p, 0, &v(&[0.0; 3]), 8.0),
            Err(Error::InvalidPacking(_))
        ));
        let ok = finite(vec![z_axis(), line([2.0, 0.0, 0.0], [0.0, 1.0, 0.0])]);
        assert!(matches!(
            build_slice(&ok, 0, &v(&[1.0, 0.0, 0.0]), 8.0),
            Err(Error::PointNotOnFlat(_))
        ));
    }

    #[test]
    fn slices_contain_the_unit_disk_and_are_convex() {
        for trial in 0..60 {
            let cfg = random_slice_configuration(21, trial);
            let s = build_slice(&cfg.packing, 0, &cfg.point, DEFAULT_CLIP_RADIUS).unwrap();
            let pts: Vec<P2> = (0..360)
                .map(|k| s.boundary_point(TAU * k as f64 / 360.0))
                .collect();
            assert!(pts.iter().all(|&p| norm2(p) >= 1.0 - 1e-12));
            for k in 0..360 {
                let (a, b, c) = (pts[k], pts[(k + 1) % 360], pts[(k + 2) % 360]);
                let turn = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                assert!(turn >= -1e-9, "trial {trial}: turn {turn}");
            }
        }
    }

    #[test]
    fn area_matches_polygon_refinement() {
        for trial in 0..24 {
            let cfg = random_slice_configuration(13, trial);
            let s = build_slice(&cfg.packing, 0, &cfg.point, DEFAULT_CLIP_RADIUS).unwrap();
            let n = 200_000;
            let shoelace: f64 = (0..n)
                .map(|k| {
                    let p = s.boundary_point(TAU * k as f64 / n as f64);
                    let q = s.boundary_point(TAU * (k + 1) as f64 / n as f64);
                    0.5 * (p[0] * q[1] - p[1] * q[0])
                })
                .sum();
            let a = slice_area(&s).area;
            assert!(
                (a - shoelace).abs() < 1e-6 * a,
                "trial {trial}: {a} vs {shoelace}"
            );
        }
    }

    #[test]
    fn sweep_is_deterministic_across_strategies() {
        let a = lemma_sweep_with(24, 3, Execution::Sequential);
        let b = lemma_sweep_with(24, 3, Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.failures, 0);
    }

    #[test]
    fn svg_has_distinct_groups() {
        let s = build_slice(&PolycylinderPacking::hexagonal(0), 0, &v(&[0.0, 0.0]), 8.0).unwrap();
        let svg = slice_svg(&s);
        for id in [
            "unit-circle",
            "vertex-circle",
            "hexagon",
            "arcs",
            "vertices",
        ] {
            assert!(svg.contains(&format!("id=\"{id}\"")));
        }
        assert_eq!(svg, slice_svg(&s));
        assert_eq!(svg.matches("<path").count(), 6);
    }
}
