//! Affine flats in `R^m`: tangent cones at infinity, parallel dimension,
//! flat-to-flat distance, and the foliation leaves used to reduce a pair of
//! polycylinders to a pair of cylinders in `R³`.
//!
//! Flats are immutable values with an orthonormal direction basis. Incoming
//! direction sets are always re-orthonormalized; a rank-deficient set is an
//! error rather than something repaired silently.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::linalg::Svd;
use crate::{Error, Result};

/// Relative singular-value cutoff for numerical rank.
pub const RANK_RTOL: f64 = 1e-9;
/// Orthonormality tolerance for stored bases.
pub const ORTHO_TOL: f64 = 1e-12;
/// Distance below which a point counts as lying on a flat (relative to `1 + |x|`).
pub const ON_FLAT_TOL: f64 = 1e-9;
/// Flats closer than this are treated as intersecting.
pub const DISJOINT_TOL: f64 = 1e-9;

/// Orthonormalizes `vectors` by modified Gram–Schmidt with one round of
/// reorthogonalization. Fails when the set is rank-deficient. A set that is
/// already orthonormal to rounding is returned unchanged, so saved bases
/// reload bit for bit.
fn orthonormalize(m: usize, vectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    if let Some(kept) = already_orthonormal(m, vectors) {
        return Ok(kept);
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.len() != m {
            return Err(Error::DimensionMismatch(m, v.len()));
        }
        let norm0 = v.norm();
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let norm = w.norm();
        if !(norm0 > 0.0) || norm <= 1e-10 * norm0 {
            return Err(Error::RankDeficient {
                expected: vectors.len(),
                found: basis.len(),
            });
        }
        basis.push(w / norm);
    }
    Ok(if basis.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&basis)
    })
}

fn already_orthonormal(m: usize, vectors: &[DVector<f64>]) -> Option<DMatrix<f64>> {
    if vectors.is_empty() || vectors.iter().any(|v| v.len() != m) {
        return None;
    }
    let tol = 8.0 * f64::EPSILON;
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i..] {
            let target = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
            if (a.dot(b) - target).abs() > tol {
                return None;
            }
        }
    }
    Some(DMatrix::from_columns(vectors))
}

/// Canonical orthonormal basis (of dimension `dim`) for the range of the
/// orthogonal projector `p`: repeatedly take the coordinate axis with the
/// largest remaining projection (lowest index on ties) and deflate.
fn canonical_from_projector(p: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let m = p.nrows();
    let mut rem = p.clone();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut best = 0;
        for k in 1..m {
            if rem[(k, k)] > rem[(best, best)] + 1e-12 {
                best = k;
            }
        }
        let norm = rem[(best, best)].max(0.0).sqrt();
        let c: DVector<f64> = rem.column(best) / norm;
        rem -= &c * c.transpose();
        cols.push(c);
    }
    // One cleanup pass; the deflated columns are already orthonormal to ~1e-15.
    orthonormalize(m, &cols).unwrap_or_else(|_| DMatrix::from_columns(&cols))
}

/// A linear subspace of `R^m` with an orthonormal basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn from_vectors(ambient_dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        if vectors.len() > ambient_dim {
            return Err(Error::RankDeficient {
                expected: vectors.len(),
                found: ambient_dim,
            });
        }
        Ok(Subspace {
            basis: orthonormalize(ambient_dim, vectors)?,
        })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Span of the given coordinate axes (0-based).
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let vs: Vec<DVector<f64>> = axes
            .iter()
            .map(|&a| {
                let mut v = DVector::zeros(ambient_dim);
                if a < ambient_dim {
                    v[a] = 1.0;
                }
                v
            })
            .collect();
        Self::from_vectors(ambient_dim, &vs)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis vectors as the columns of an `m × d` matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Component of `v` orthogonal to the subspace.
    pub fn reject(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.project(v)
    }

    pub fn contains_vector(&self, v: &DVector<f64>, tol: f64) -> bool {
        self.reject(v).norm() <= tol * (1.0 + v.norm())
    }

    /// Same subspace, canonical basis (independent of the stored rotation).
    pub fn canonical(&self) -> Subspace {
        Subspace {
            basis: canonical_from_projector(&self.projector(), self.dim()),
        }
    }

    /// Canonical basis of the orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let m = self.ambient_dim();
        let p = DMatrix::identity(m, m) - self.projector();
        Subspace {
            basis: canonical_from_projector(&p, m - self.dim()),
        }
    }

    /// Canonical basis of `self ∩ sub⊥`, for `sub ⊂ self`.
    pub fn complement_within(&self, sub: &Subspace) -> Subspace {
        let p = self.projector() - sub.projector();
        Subspace {
            basis: canonical_from_projector(&p, self.dim().saturating_sub(sub.dim())),
        }
    }

    /// Canonical basis of the intersection, from the null space of the stacked
    /// complement projectors.
    pub fn intersection(&self, other: &Subspace) -> Result<Subspace> {
        let m = self.ambient_dim();
        if other.ambient_dim() != m {
            return Err(Error::DimensionMismatch(m, other.ambient_dim()));
        }
        let (rank, svd) = stacked_complement_rank(self, other);
        let dim = m - rank;
        if dim == 0 {
            return Ok(Subspace::zero(m));
        }
        let cutoff = RANK_RTOL * svd.max();
        let null: Vec<DVector<f64>> = (0..svd.s.len())
            .filter(|&i| svd.s[i] <= cutoff)
            .map(|i| svd.v.column(i).into_owned())
            .collect();
        let p = null
            .iter()
            .fold(DMatrix::zeros(m, m), |acc, v| acc + v * v.transpose());
        Ok(Subspace {
            basis: canonical_from_projector(&p, dim),
        })
    }

    /// First `k` basis vectors.
    pub fn truncate(&self, k: usize) -> Subspace {
        Subspace {
            basis: self.basis.columns(0, k.min(self.dim())).into_owned(),
        }
    }
}

fn stacked_complement_rank(f: &Subspace, g: &Subspace) -> (usize, Svd) {
    let m = f.ambient_dim();
    let id = DMatrix::<f64>::identity(m, m);
    let mut stacked = DMatrix::zeros(2 * m, m);
    stacked.rows_mut(0, m).copy_from(&(&id - f.projector()));
    stacked.rows_mut(m, m).copy_from(&(&id - g.projector()));
    let svd = Svd::new(&stacked);
    let rank = svd.rank(RANK_RTOL);
    (rank, svd)
}

/// An affine `d`-flat: `basepoint + span(directions)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flat {
    basepoint: DVector<f64>,
    directions: Subspace,
}

impl Flat {
    pub fn new(basepoint: DVector<f64>, directions: &[DVector<f64>]) -> Result<Self> {
        let m = basepoint.len();
        Ok(Flat {
            directions: Subspace::from_vectors(m, directions)?,
            basepoint,
        })
    }

    pub fn from_slices(basepoint: &[f64], directions: &[Vec<f64>]) -> Result<Self> {
        let dirs: Vec<DVector<f64>> = directions
            .iter()
            .map(|d| DVector::from_column_slice(d))
            .collect();
        Self::new(DVector::from_column_slice(basepoint), &dirs)
    }

    pub fn from_subspace(basepoint: DVector<f64>, directions: Subspace) -> Result<Self> {
        if basepoint.len() != directions.ambient_dim() {
            return Err(Error::DimensionMismatch(
                basepoint.len(),
                directions.ambient_dim(),
            ));
        }
        Ok(Flat {
            basepoint,
            directions,
        })
    }

    /// A single point as a 0-flat.
    pub fn point(p: DVector<f64>) -> Self {
        let m = p.len();
        Flat {
            basepoint: p,
            directions: Subspace::zero(m),
        }
    }

    pub fn basepoint(&self) -> &DVector<f64> {
        &self.basepoint
    }

    pub fn directions(&self) -> &Subspace {
        &self.directions
    }

    pub fn ambient_dim(&self) -> usize {
        self.basepoint.len()
    }

    pub fn dim(&self) -> usize {
        self.directions.dim()
    }

    pub fn translate(&self, v: &DVector<f64>) -> Flat {
        Flat {
            basepoint: &self.basepoint + v,
            directions: self.directions.clone(),
        }
    }

    /// Orthogonal projection of `p` onto the flat.
    pub fn foot(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.basepoint + self.directions.project(&(p - &self.basepoint))
    }

    pub fn point_distance(&self, p: &DVector<f64>) -> f64 {
        self.directions.reject(&(p - &self.basepoint)).norm()
    }

    pub fn contains_point(&self, p: &DVector<f64>) -> bool {
        self.point_distance(p) <= ON_FLAT_TOL * (1.0 + p.norm())
    }

    /// The point of the flat nearest the origin; identical for every
    /// representation of the same flat.
    pub fn canonical_basepoint(&self) -> DVector<f64> {
        self.directions.reject(&self.basepoint)
    }

    /// Applies `p ↦ rotation·p + shift`.
    pub fn transform(&self, rotation: &DMatrix<f64>, shift: &DVector<f64>) -> Result<Flat> {
        let dirs: Vec<DVector<f64>> = self
            .directions
            .vectors()
            .iter()
            .map(|d| rotation * d)
            .collect();
        Flat::new(rotation * &self.basepoint + shift, &dirs)
    }
}

/// Serialized form of a flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatRecord {
    pub basepoint: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl From<&Flat> for FlatRecord {
    fn from(f: &Flat) -> Self {
        FlatRecord {
            basepoint: f.basepoint.iter().copied().collect(),
            directions: f
                .directions
                .basis
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
        }
    }
}

impl TryFrom<&FlatRecord> for Flat {
    type Error = Error;

    fn try_from(r: &FlatRecord) -> Result<Flat> {
        Flat::from_slices(&r.basepoint, &r.directions)
    }
}

fn same_ambient(f: &Flat, g: &Flat) -> Result<usize> {
    if f.ambient_dim() != g.ambient_dim() {
        return Err(Error::DimensionMismatch(f.ambient_dim(), g.ambient_dim()));
    }
    Ok(f.ambient_dim())
}

/// Direction space of `f`: its tangent cone at infinity.
pub fn tangent_cone(f: &Flat) -> Subspace {
    f.directions.clone()
}

/// `dim(F_∞ ∩ G_∞)`, computed as `m − rank` of the stacked complement system.
pub fn parallel_dimension(f: &Flat, g: &Flat) -> Result<usize> {
    let m = same_ambient(f, g)?;
    let (rank, _) = stacked_complement_rank(&f.directions, &g.directions);
    Ok(m - rank)
}

/// Minimum Euclidean distance between two flats (0 when they intersect).
pub fn flat_distance(f: &Flat, g: &Flat) -> Result<f64> {
    let m = same_ambient(f, g)?;
    let diff = &f.basepoint - &g.basepoint;
    let k = f.dim() + g.dim();
    if k == 0 {
        return Ok(diff.norm());
    }
    let mut joint = DMatrix::zeros(m, k);
    joint
        .columns_mut(0, f.dim())
        .copy_from(f.directions.basis());
    joint
        .columns_mut(f.dim(), g.dim())
        .copy_from(g.directions.basis());
    let svd = Svd::new(&joint);
    let mut residual = diff.clone();
    for i in 0..svd.rank(RANK_RTOL) {
        let col = svd.u.column(i);
        let c = col.dot(&residual);
        residual.axpy(-c, &col, 1.0);
    }
    Ok(residual.norm())
}

fn check_core_pair(a_i: &Flat, a_j: &Flat, x: &DVector<f64>) -> Result<usize> {
    let m = same_ambient(a_i, a_j)?;
    if x.len() != m {
        return Err(Error::DimensionMismatch(m, x.len()));
    }
    let n = a_i.dim();
    if a_j.dim() != n || n >= m {
        return Err(Error::InvalidParameter(format!(
            "expected two proper flats of equal dimension, got dims {} and {} in R^{m}",
            n,
            a_j.dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "common subflats need cores of dimension at least 1".into(),
        ));
    }
    let off = a_i.point_distance(x);
    if off > ON_FLAT_TOL * (1.0 + x.norm()) {
        return Err(Error::PointNotOnFlat(off));
    }
    let d = flat_distance(a_i, a_j)?;
    if d <= DISJOINT_TOL {
        return Err(Error::NotDisjoint(d));
    }
    Ok(n)
}

/// The shared `(n−1)`-dimensional direction space used for the pairwise
/// foliation of two disjoint cores. When the cores are fully parallel the
/// first `n−1` canonical intersection vectors are taken.
pub fn shared_directions(a_i: &Flat, a_j: &Flat, x: &DVector<f64>) -> Result<Subspace> {
    let n = check_core_pair(a_i, a_j, x)?;
    let shared = a_i.directions.intersection(&a_j.directions)?;
    if shared.dim() + 1 < n {
        return Err(Error::ParallelDimensionTooSmall {
            found: shared.dim(),
            required: n - 1,
        });
    }
    Ok(shared.truncate(n - 1))
}

/// Parallel `(n−1)`-subflats `b_i ⊂ a_i` through `x` and `b_j ⊂ a_j` through
/// the foot of `x` on `a_j`.
pub fn common_parallel_subflats(a_i: &Flat, a_j: &Flat, x: &DVector<f64>) -> Result<(Flat, Flat)> {
    let w = shared_directions(a_i, a_j, x)?;
    let b_i = Flat::from_subspace(x.clone(), w.clone())?;
    let b_j = Flat::from_subspace(a_j.foot(x), w)?;
    Ok((b_i, b_j))
}

/// The leaf through `x` orthogonal to the shared directions of `a_i` and
/// `a_j`; a 3-flat when the cores have codimension 2.
pub fn leaf_at(x: &DVector<f64>, a_i: &Flat, a_j: &Flat) -> Result<Flat> {
    let w = shared_directions(a_i, a_j, x)?;
    Flat::from_subspace(x.clone(), w.complement())
}

/// The 2-flat through `x` orthogonal to a codimension-2 core `a_i`.
pub fn orthogonal_plane(a_i: &Flat, x: &DVector<f64>) -> Result<Flat> {
    let m = a_i.ambient_dim();
    if x.len() != m {
        return Err(Error::DimensionMismatch(m, x.len()));
    }
    if a_i.dim() + 2 != m {
        return Err(Error::InvalidParameter(format!(
            "core must have codimension 2, got a {}-flat in R^{m}",
            a_i.dim()
        )));
    }
    let off = a_i.point_distance(x);
    if off > ON_FLAT_TOL * (1.0 + x.norm()) {
        return Err(Error::PointNotOnFlat(off));
    }
    Flat::from_subspace(x.clone(), a_i.directions.complement())
}

/// Largest residual `|v − P v|` over the basis of `inner`, measured against
/// `outer`: zero when `inner ⊂ outer`.
pub fn containment_residual(inner: &Subspace, outer: &Subspace) -> f64 {
    inner
        .vectors()
        .iter()
        .map(|v| outer.reject(v).norm())
        .fold(0.0, f64::max)
}

/// Outcome of [`transversality_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalitySweep {
    pub trials: u64,
    /// Sampled pairs that were rejected because the flats meet.
    pub intersecting: u64,
    /// Trials with no disjoint pair within the attempt budget.
    pub exhausted: u64,
    /// Smallest `parallel_dimension − (n − k)` over disjoint pairs; the claim is `≥ 1`.
    pub min_excess: i64,
    /// Smallest `parallel_dimension − (n − 1)` over codimension-2 pairs; the claim is `≥ 0`.
    pub min_codim2_excess: i64,
    /// Codimension-2 pairs with parallel dimension exactly `n − 1`.
    pub codim2_equalities: u64,
    pub violations: u64,
}

impl TransversalitySweep {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.exhausted == 0
    }
}

const TRANSVERSALITY_ATTEMPTS: usize = 10_000;

/// Dimensions `(n, k)` of trial `t`: even trials are codimension 2 with
/// `n = 1..6`, odd trials cycle through `k ≤ 3`, `k ≤ n ≤ 6`.
fn transversality_dims(t: u64) -> (usize, usize) {
    let r = (t / 2) as usize;
    if t.is_multiple_of(2) {
        (1 + r % 6, 2)
    } else {
        let k = 1 + r % 3;
        (k + (r / 3) % (7 - k), k)
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random pairs of `n`-flats in `R^{n+k}` sharing a uniformly chosen number of
/// random directions, kept only when [`flat_distance`] finds them disjoint.
/// Nothing in the sampler forces the parallel dimension above `n − k`;
/// pairs with too few shared directions simply meet and are discarded.
pub fn transversality_sweep(trials: u64, seed: u64) -> TransversalitySweep {
    transversality_sweep_with(trials, seed, Execution::default())
}

pub fn transversality_sweep_with(trials: u64, seed: u64, exec: Execution) -> TransversalitySweep {
    let outcomes = exec.map(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t);
        let (n, k) = transversality_dims(t);
        let m = n + k;
        let mut rejected = 0u64;
        for _ in 0..TRANSVERSALITY_ATTEMPTS {
            let p = rng.random_range(0..=n);
            let shared: Vec<DVector<f64>> = (0..p).map(|_| gaussian_vector(&mut rng, m)).collect();
            let mut di = shared.clone();
            let mut dj = shared;
            di.extend((p..n).map(|_| gaussian_vector(&mut rng, m)));
            dj.extend((p..n).map(|_| gaussian_vector(&mut rng, m)));
            let f = Flat::new(gaussian_vector(&mut rng, m) * 3.0, &di);
            let g = Flat::new(gaussian_vector(&mut rng, m) * 3.0, &dj);
            let (Ok(f), Ok(g)) = (f, g) else {
                rejected += 1;
                continue;
            };
            let disjoint = flat_distance(&f, &g).is_ok_and(|d| d > 1e-6);
            if !disjoint {
                rejected += 1;
                continue;
            }
            let pd = parallel_dimension(&f, &g).expect("same ambient dimension") as i64;
            return (rejected, Some((n, k, pd)));
        }
        (rejected, None)
    });
    let mut out = TransversalitySweep {
        trials,
        intersecting: 0,
        exhausted: 0,
        min_excess: i64::MAX,
        min_codim2_excess: i64::MAX,
        codim2_equalities: 0,
        violations: 0,
    };
    for (rejected, found) in outcomes {
        out.intersecting += rejected;
        let Some((n, k, pd)) = found else {
            out.exhausted += 1;
            continue;
        };
        let excess = pd - (n as i64 - k as i64);
        out.min_excess = out.min_excess.min(excess);
        if excess < 1 {
            out.violations += 1;
        }
        if k == 2 {
            let e2 = pd - (n as i64 - 1);
            out.min_codim2_excess = out.min_codim2_excess.min(e2);
            if e2 == 0 {
                out.codim2_equalities += 1;
            }
        }
    }
    out
}
