//! Polycylinder packings: cores (codimension-2 flats) of unit-radius
//! cylinders, optionally repeated by a lattice of translations.
//!
//! Periodic packings are stored as representative cores plus lattice vectors;
//! finite packings simply list every core. Window queries expand the lattice
//! by enumerating translations in a ball, so translations are expected to be
//! orthogonal to the cores or to run along them (as in the hexagonal product
//! packing and layered packings); oblique lattices may lose translates at the
//! edge of a window.

use std::collections::{BTreeSet, HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::affine::{flat_distance, Flat, FlatRecord, Subspace, RANK_RTOL};
use crate::exec::Execution;
use crate::linalg::Svd;
use crate::{Error, Result};

/// Core pairs closer than `2 − VALIDATION_TOL` overlap.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Upper limit on lattice translations enumerated for one query.
pub const ENUMERATION_GUARD: usize = 5_000_000;
/// Samples drawn per RNG stream in [`density_estimate`].
pub const SAMPLE_BATCH: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct PolycylinderPacking {
    ambient_dim: usize,
    cores: Vec<Flat>,
    lattice: Vec<DVector<f64>>,
}

/// JSON packing file: `{ambient_dim, cores: [{basepoint, directions}], lattice?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingFile {
    pub ambient_dim: usize,
    pub cores: Vec<FlatRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<Vec<f64>>>,
}

/// A core placed in space: representative index plus lattice coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedCore {
    pub index: usize,
    pub shift: Vec<i64>,
    pub flat: Flat,
}

impl PolycylinderPacking {
    pub fn new(ambient_dim: usize, cores: Vec<Flat>, lattice: Vec<DVector<f64>>) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::InvalidParameter(
                "ambient dimension must be at least 2".into(),
            ));
        }
        for c in &cores {
            if c.ambient_dim() != ambient_dim {
                return Err(Error::DimensionMismatch(ambient_dim, c.ambient_dim()));
            }
            if c.dim() + 2 != ambient_dim {
                return Err(Error::InvalidParameter(format!(
                    "core has dimension {}, expected {}",
                    c.dim(),
                    ambient_dim - 2
                )));
            }
        }
        if lattice.len() > ambient_dim {
            return Err(Error::InvalidParameter(format!(
                "{} lattice vectors in R^{ambient_dim}",
                lattice.len()
            )));
        }
        for v in &lattice {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch(ambient_dim, v.len()));
            }
        }
        if !lattice.is_empty() {
            let svd = Svd::new(&DMatrix::from_columns(&lattice));
            if svd.rank(RANK_RTOL) < lattice.len() {
                return Err(Error::InvalidParameter(
                    "lattice vectors are linearly dependent".into(),
                ));
            }
        }
        Ok(PolycylinderPacking {
            ambient_dim,
            cores,
            lattice,
        })
    }

    /// Hexagonal disk packing times `Rⁿ`: cores `{(2a + b, b√3)} × Rⁿ`.
    pub fn hexagonal(n: usize) -> Self {
        Self::planar_lattice(n, [2.0, 0.0], [1.0, 3f64.sqrt()])
    }

    /// Square-lattice disk packing `2Z²` times `Rⁿ`.
    pub fn square(n: usize) -> Self {
        Self::planar_lattice(n, [2.0, 0.0], [0.0, 2.0])
    }

    fn planar_lattice(n: usize, u: [f64; 2], v: [f64; 2]) -> Self {
        let m = n + 2;
        let axes: Vec<usize> = (2..m).collect();
        let dirs = Subspace::coordinate(m, &axes).expect("coordinate axes are independent");
        let core = Flat::from_subspace(DVector::zeros(m), dirs).expect("dimensions agree");
        let embed = |w: [f64; 2]| {
            let mut x = DVector::zeros(m);
            x[0] = w[0];
            x[1] = w[1];
            x
        };
        PolycylinderPacking {
            ambient_dim: m,
            cores: vec![core],
            lattice: vec![embed(u), embed(v)],
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn core_dim(&self) -> usize {
        self.ambient_dim - 2
    }

    pub fn cores(&self) -> &[Flat] {
        &self.cores
    }

    pub fn lattice(&self) -> &[DVector<f64>] {
        &self.lattice
    }

    pub fn is_periodic(&self) -> bool {
        !self.lattice.is_empty()
    }

    /// Image under `p ↦ rotation·p + shift`.
    pub fn transform(&self, rotation: &DMatrix<f64>, shift: &DVector<f64>) -> Result<Self> {
        let cores = self
            .cores
            .iter()
            .map(|c| c.transform(rotation, shift))
            .collect::<Result<Vec<_>>>()?;
        let lattice = self.lattice.iter().map(|v| rotation * v).collect();
        Self::new(self.ambient_dim, cores, lattice)
    }

    pub fn to_file(&self) -> PackingFile {
        PackingFile {
            ambient_dim: self.ambient_dim,
            cores: self.cores.iter().map(FlatRecord::from).collect(),
            lattice: self.is_periodic().then(|| {
                self.lattice
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect()
            }),
        }
    }

    pub fn from_file(file: &PackingFile) -> Result<Self> {
        let cores = file
            .cores
            .iter()
            .map(Flat::try_from)
            .collect::<Result<Vec<_>>>()?;
        let lattice = file
            .lattice
            .iter()
            .flatten()
            .map(|v| DVector::from_column_slice(v))
            .collect();
        Self::new(file.ambient_dim, cores, lattice)
    }

    /// Integer coefficient vectors of lattice translations within `radius` of
    /// `target`, in a fixed lexicographic order.
    fn lattice_translations(
        &self,
        target: &DVector<f64>,
        radius: f64,
    ) -> Result<Vec<(Vec<i64>, DVector<f64>)>> {
        let k = self.lattice.len();
        if k == 0 {
            return Ok(vec![(Vec::new(), DVector::zeros(self.ambient_dim))]);
        }
        let basis = DMatrix::from_columns(&self.lattice);
        let gram = basis.transpose() * &basis;
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular lattice".into()))?;
        let center = &gram_inv * (basis.transpose() * target);
        let mut lo = Vec::with_capacity(k);
        let mut hi = Vec::with_capacity(k);
        let mut count: f64 = 1.0;
        for i in 0..k {
            let half = radius * gram_inv[(i, i)].max(0.0).sqrt();
            let a = (center[i] - half).floor() as i64;
            let b = (center[i] + half).ceil() as i64;
            count *= (b - a + 1) as f64;
            lo.push(a);
            hi.push(b);
        }
        if count > ENUMERATION_GUARD as f64 {
            return Err(Error::EnumerationGuard(ENUMERATION_GUARD));
        }
        let mut out = Vec::new();
        let mut coeffs = lo.clone();
        loop {
            let t = coeffs
                .iter()
                .zip(&self.lattice)
                .fold(DVector::zeros(self.ambient_dim), |acc, (&c, v)| {
                    acc + v * c as f64
                });
            if (&t - target).norm() <= radius {
                out.push((coeffs.clone(), t));
            }
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if coeffs[i] < hi[i] {
                    coeffs[i] += 1;
                    for (c, &l) in coeffs.iter_mut().zip(&lo).skip(i + 1) {
                        *c = l;
                    }
                    break;
                }
            }
        }
    }

    /// All placed cores whose axis lies within `r + 1` of `center`, i.e. every
    /// cylinder meeting the ball of radius `r` about `center`. Translates that
    /// coincide as flats are reported once.
    pub fn cores_near(&self, center: &DVector<f64>, r: f64) -> Result<Vec<PlacedCore>> {
        if center.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, center.len()));
        }
        let reach = r + 1.0;
        let slack = self.lattice.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut seen: HashSet<(usize, Vec<i64>)> = HashSet::new();
        let mut out = Vec::new();
        for (index, core) in self.cores.iter().enumerate() {
            let a0 = core.canonical_basepoint();
            let target = core.directions().reject(&(center - &a0));
            for (shift, t) in self.lattice_translations(&target, reach + slack)? {
                let flat = core.translate(&t);
                if flat.point_distance(center) > reach {
                    continue;
                }
                let key: Vec<i64> = flat
                    .canonical_basepoint()
                    .iter()
                    .map(|c| (c * 1e8).round() as i64)
                    .collect();
                if seen.insert((index, key)) {
                    out.push(PlacedCore { index, shift, flat });
                }
            }
        }
        Ok(out)
    }

    /// Cores meeting the ball `r·B^m` about the origin.
    pub fn cores_in_ball(&self, r: f64) -> Result<Vec<PlacedCore>> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window radius must be positive, got {r}"
            )));
        }
        self.cores_near(&DVector::zeros(self.ambient_dim), r)
    }

    /// Pairs of cores (with lattice translates inside the validation window)
    /// closer than `2 − 1e-9`. Empty means the cylinders have disjoint
    /// interiors.
    pub fn validate(&self) -> Result<ValidationReport> {
        let slack = self.lattice.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let spread = self
            .cores
            .iter()
            .map(|c| c.canonical_basepoint().norm())
            .fold(0.0, f64::max);
        let window = 2.0 + 2.0 * slack + 2.0 * spread;
        let mut found: BTreeSet<(usize, usize, Vec<i64>)> = BTreeSet::new();
        let mut violations = Vec::new();
        for (i, core) in self.cores.iter().enumerate() {
            let own = core.canonical_basepoint();
            for placed in self.cores_near(&own, window)? {
                if placed.index == i && (placed.flat.canonical_basepoint() - &own).norm() <= 1e-9 {
                    continue;
                }
                let d = flat_distance(core, &placed.flat)?;
                if d >= 2.0 - VALIDATION_TOL {
                    continue;
                }
                let (a, b, mut shift) = if i <= placed.index {
                    (i, placed.index, placed.shift.clone())
                } else {
                    (placed.index, i, placed.shift.iter().map(|c| -c).collect())
                };
                if a == b && shift < shift.iter().map(|c| -c).collect::<Vec<_>>() {
                    shift = shift.iter().map(|c| -c).collect();
                }
                if found.insert((a, b, shift.clone())) {
                    violations.push(Violation {
                        core_a: a,
                        core_b: b,
                        shift,
                        distance: d,
                    });
                }
            }
        }
        Ok(ValidationReport { violations })
    }

    /// Distance from `point` to the nearest cylinder surface (negative inside).
    pub fn distance_to_packing(&self, point: &DVector<f64>) -> Result<f64> {
        if self.cores.is_empty() {
            return Ok(f64::INFINITY);
        }
        if !self.is_periodic() {
            let mut best = f64::INFINITY;
            for c in &self.cores {
                if c.ambient_dim() != point.len() {
                    return Err(Error::DimensionMismatch(c.ambient_dim(), point.len()));
                }
                best = best.min(c.point_distance(point));
            }
            return Ok(best - 1.0);
        }
        let mut r = 4.0;
        loop {
            let near = self.cores_near(point, r)?;
            if let Some(d) = near
                .iter()
                .map(|c| c.flat.point_distance(point))
                .min_by(f64::total_cmp)
            {
                return Ok(d - 1.0);
            }
            r *= 2.0;
        }
    }

    /// Whether `point` is no further from cylinder `i` (the representative core
    /// with zero shift) than from any other cylinder.
    pub fn dirichlet_cell_membership(&self, i: usize, point: &DVector<f64>) -> Result<bool> {
        let core = self.cores.get(i).ok_or(Error::BadIndex {
            index: i,
            count: self.cores.len(),
        })?;
        let d_axis = core.point_distance(point);
        let own = (d_axis - 1.0).max(0.0);
        if own == 0.0 {
            return Ok(true);
        }
        let own_base = core.canonical_basepoint();
        for placed in self.cores_near(point, d_axis)? {
            if placed.index == i && (placed.flat.canonical_basepoint() - &own_base).norm() <= 1e-9 {
                continue;
            }
            let other = (placed.flat.point_distance(point) - 1.0).max(0.0);
            if other < own {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub core_a: usize,
    pub core_b: usize,
    /// Lattice coefficients of the translate of `core_b`.
    pub shift: Vec<i64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct ParallelClass {
    /// Rows: orthonormal basis of the 2-dimensional complement.
    complement: DMatrix<f64>,
    points: Vec<[f64; 2]>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

const CELL: f64 = 2.0;

fn cell_of(p: [f64; 2]) -> (i64, i64) {
    ((p[0] / CELL).floor() as i64, (p[1] / CELL).floor() as i64)
}

/// Nearest-axis queries over a finite set of cores. Cores with equal
/// direction spaces project to points in their common 2-dimensional
/// complement, which are bucketed in a uniform grid.
pub struct CoreIndex {
    classes: Vec<(DMatrix<f64>, ParallelClass)>,
}

impl CoreIndex {
    pub fn new(cores: &[Flat]) -> Self {
        let mut classes: Vec<(DMatrix<f64>, ParallelClass)> = Vec::new();
        for core in cores {
            let proj = core.directions().projector();
            let slot = classes.iter().position(|(p, _)| (p - &proj).amax() < 1e-9);
            let k = match slot {
                Some(k) => k,
                None => {
                    let comp = core.directions().complement();
                    classes.push((
                        proj,
                        ParallelClass {
                            complement: comp.basis().transpose(),
                            points: Vec::new(),
                            grid: HashMap::new(),
                        },
                    ));
                    classes.len() - 1
                }
            };
            let class = &mut classes[k].1;
            let q = &class.complement * core.canonical_basepoint();
            let p = [q[0], q[1]];
            class
                .grid
                .entry(cell_of(p))
                .or_default()
                .push(class.points.len());
            class.points.push(p);
        }
        CoreIndex { classes }
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    fn project(class: &ParallelClass, x: &[f64]) -> [f64; 2] {
        let c = &class.complement;
        let mut out = [0.0; 2];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..x.len()).map(|j| c[(r, j)] * x[j]).sum();
        }
        out
    }

    /// Whether some axis lies within distance 1 of `x`.
    pub fn covered(&self, x: &[f64]) -> bool {
        self.classes.iter().any(|(_, class)| {
            let p = Self::project(class, x);
            let (cx, cy) = cell_of(p);
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    class.grid.get(&(cx + dx, cy + dy)).is_some_and(|ids| {
                        ids.iter().any(|&i| {
                            let q = class.points[i];
                            let (ex, ey) = (p[0] - q[0], p[1] - q[1]);
                            ex * ex + ey * ey <= 1.0
                        })
                    })
                })
            })
        })
    }

    /// Distance from `x` to the nearest axis (`∞` when empty).
    pub fn nearest_axis_distance(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (_, class) in &self.classes {
            let p = Self::project(class, x);
            let (cx, cy) = cell_of(p);
            let max_ring = class
                .grid
                .keys()
                .map(|&(a, b)| (a - cx).abs().max((b - cy).abs()))
                .max()
                .unwrap_or(0);
            for ring in 0..=max_ring {
                if best <= (ring as f64 - 1.0).max(0.0) * CELL {
                    break;
                }
                for dx in -ring..=ring {
                    for dy in -ring..=ring {
                        if dx.abs().max(dy.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = class.grid.get(&(cx + dx, cy + dy)) {
                            for &i in ids {
                                let q = class.points[i];
                                best = best.min((p[0] - q[0]).hypot(p[1] - q[1]));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Fraction of the ball `r·B^m` covered by the packing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub window_radius: f64,
    pub seed: u64,
}

/// Uniform point in `r·B^m`: Gaussian direction, radius `r·U^{1/m}`.
fn sample_ball(rng: &mut ChaCha8Rng, m: usize, r: f64, out: &mut [f64]) {
    loop {
        let mut n2 = 0.0;
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o = g;
            n2 += g * g;
        }
        if n2 > 1e-300 {
            let u: f64 = rng.random();
            let scale = r * u.powf(1.0 / m as f64) / n2.sqrt();
            for o in out.iter_mut() {
                *o *= scale;
            }
            return;
        }
    }
}

pub fn density_estimate(
    p: &PolycylinderPacking,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    density_estimate_with(p, r, samples, seed, Execution::default())
}

/// Monte-Carlo estimate of `Vol(𝒞 ∩ rB)/Vol(rB)`. Sample `k` comes from RNG
/// stream `k / SAMPLE_BATCH` of `seed`, so the estimate does not depend on the
/// execution strategy or thread count. No boundary correction is applied.
pub fn density_estimate_with(
    p: &PolycylinderPacking,
    r: f64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<DensityEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    let placed = p.cores_in_ball(r)?;
    let flats: Vec<Flat> = placed.into_iter().map(|c| c.flat).collect();
    let index = CoreIndex::new(&flats);
    let m = p.ambient_dim();
    let batches = samples.div_ceil(SAMPLE_BATCH);
    let hits: u64 = exec
        .map(batches, |b| {
            if index.is_empty() {
                return 0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = SAMPLE_BATCH.min(samples - b * SAMPLE_BATCH);
            let mut x = vec![0.0; m];
            let mut count = 0;
            for _ in 0..n {
                sample_ball(&mut rng, m, r, &mut x);
                if index.covered(&x) {
                    count += 1;
                }
            }
            count
        })
        .into_iter()
        .sum();
    let value = hits as f64 / samples as f64;
    Ok(DensityEstimate {
        value,
        standard_error: (value * (1.0 - value) / samples as f64).sqrt(),
        samples,
        window_radius: r,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn parallel_pair(d: f64) -> PolycylinderPacking {
        let a = Flat::from_slices(&[0.0, 0.0, 0.0], &[vec![0.0, 0.0, 1.0]]).unwrap();
        let b = Flat::from_slices(&[d, 0.0, 0.0], &[vec![0.0, 0.0, 1.0]]).unwrap();
        PolycylinderPacking::new(3, vec![a, b], vec![]).unwrap()
    }

    #[test]
    fn hexagonal_is_valid_with_touching_neighbors() {
        for n in 0..=2 {
            let hex = PolycylinderPacking::hexagonal(n);
            assert!(hex.validate().unwrap().is_valid());
            let near = hex.cores_near(&DVector::zeros(n + 2), 1.5).unwrap();
            let min = near
                .iter()
                .filter(|c| c.shift.iter().any(|&s| s != 0))
                .map(|c| c.flat.point_distance(&DVector::zeros(n + 2)))
                .fold(f64::INFINITY, f64::min);
            assert!((min - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn overlapping_pair_is_reported_once() {
        let report = parallel_pair(1.9).validate().unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!((report.violations[0].distance - 1.9).abs() < 1e-14);
        assert!(parallel_pair(2.0).validate().unwrap().is_valid());
        let single =
            PolycylinderPacking::new(3, vec![parallel_pair(2.0).cores()[0].clone()], vec![])
                .unwrap();
        assert!(single.validate().unwrap().is_valid());
    }

    #[test]
    fn dense_lattice_is_invalid() {
        let p = PolycylinderPacking::new(
            2,
            vec![Flat::point(v(&[0.0, 0.0]))],
            vec![v(&[1.5, 0.0]), v(&[0.0, 3.0])],
        )
        .unwrap();
        let report = p.validate().unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].shift, vec![1, 0]);
    }

    #[test]
    fn malformed_packings_are_rejected() {
        let line = Flat::from_slices(&[0.0; 4], &[vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        assert!(PolycylinderPacking::new(4, vec![line], vec![]).is_err());
        assert!(PolycylinderPacking::new(2, vec![], vec![v(&[2.0, 0.0]), v(&[4.0, 0.0])]).is_err());
    }

    #[test]
    fn cores_in_ball_counts_match_brute_force() {
        let hex = PolycylinderPacking::hexagonal(0);
        for r in [0.5, 2.5, 4.0, 7.3] {
            // Oracle: lattice points (2a + b, b√3) with |·| ≤ r + 1.
            let mut count = 0;
            for a in -20i64..=20 {
                for b in -20i64..=20 {
                    let x = 2.0 * a as f64 + b as f64;
                    let y = b as f64 * 3f64.sqrt();
                    if x.hypot(y) <= r + 1.0 {
                        count += 1;
                    }
                }
            }
            assert_eq!(hex.cores_in_ball(r).unwrap().len(), count, "r = {r}");
        }
        assert_eq!(hex.cores_in_ball(2.5).unwrap().len(), 13);
        let single =
            PolycylinderPacking::new(2, vec![Flat::point(v(&[0.0, 0.0]))], vec![]).unwrap();
        assert_eq!(single.cores_in_ball(10.0).unwrap().len(), 1);
        let off = PolycylinderPacking::new(2, vec![Flat::point(v(&[5.0, 0.0]))], vec![]).unwrap();
        assert!(off.cores_in_ball(1.0).unwrap().is_empty());
    }

    #[test]
    fn translates_along_a_core_are_deduplicated() {
        // Lines along x at z = 0, lattice (2,0,0), (0,2,0), (0,0,4).
        let core = Flat::from_slices(&[0.0; 3], &[vec![1.0, 0.0, 0.0]]).unwrap();
        let p = PolycylinderPacking::new(
            3,
            vec![core],
            vec![
                v(&[2.0, 0.0, 0.0]),
                v(&[0.0, 2.0, 0.0]),
                v(&[0.0, 0.0, 4.0]),
            ],
        )
        .unwrap();
        let near = p.cores_near(&v(&[31.0, 0.0, 0.0]), 1.5).unwrap();
        // Axes at (y, z) in {(0,0), (±2,0)}.
        assert_eq!(near.len(), 3);
        assert!(p.validate().unwrap().is_valid());
    }

    #[test]
    fn distance_to_packing_examples() {
        let pair = parallel_pair(2.0);
        assert!((pair.distance_to_packing(&v(&[0.0, 0.0, 5.0])).unwrap() + 1.0).abs() < 1e-15);
        assert!(
            pair.distance_to_packing(&v(&[-1.0, 0.0, 0.0]))
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(
            pair.distance_to_packing(&v(&[1.0, 0.0, 3.0]))
                .unwrap()
                .abs()
                < 1e-15
        );
        let hex = PolycylinderPacking::hexagonal(1);
        let hole = v(&[1.0, 1.0 / 3f64.sqrt(), 7.0]);
        let d = hex.distance_to_packing(&hole).unwrap();
        assert!((d - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn core_index_agrees_with_brute_force() {
        let hex = PolycylinderPacking::hexagonal(2);
        let flats: Vec<Flat> = hex
            .cores_in_ball(12.0)
            .unwrap()
            .into_iter()
            .map(|c| c.flat)
            .collect();
        let index = CoreIndex::new(&flats);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-8.0..8.0)).collect();
            let xv = DVector::from_column_slice(&x);
            let brute = flats
                .iter()
                .map(|f| f.point_distance(&xv))
                .fold(f64::INFINITY, f64::min);
            assert!((index.nearest_axis_distance(&x) - brute).abs() < 1e-12);
            assert_eq!(index.covered(&x), brute <= 1.0);
        }
    }

    #[test]
    fn dirichlet_membership_examples() {
        let hex = PolycylinderPacking::hexagonal(1);
        assert!(hex
            .dirichlet_cell_membership(0, &v(&[0.3, -0.5, 2.0]))
            .unwrap());
        assert!(hex
            .dirichlet_cell_membership(0, &v(&[0.99, 0.0, -4.0]))
            .unwrap());
        assert!(!hex
            .dirichlet_cell_membership(0, &v(&[2.0, 0.0, 0.0]))
            .unwrap());
        assert!(!hex
            .dirichlet_cell_membership(0, &v(&[1.1, 0.0, 0.0]))
            .unwrap());
        assert!(hex
            .dirichlet_cell_membership(0, &v(&[1.0, 0.0, 0.0]))
            .unwrap());
        assert!(matches!(
            hex.dirichlet_cell_membership(3, &v(&[0.0; 3])),
            Err(Error::BadIndex { .. })
        ));
    }

    #[test]
    fn dirichlet_cells_cover_every_point() {
        // Finite packing: every representative is a cell; some cell claims each point.
        let cores = vec![
            Flat::from_slices(&[0.0; 3], &[vec![0.0, 0.0, 1.0]]).unwrap(),
            Flat::from_slices(&[2.5, 0.0, -2.0], &[vec![0.0, 1.0, 0.0]]).unwrap(),
            Flat::from_slices(&[0.0, 3.0, 0.5], &[vec![1.0, 0.0, 0.3]]).unwrap(),
            Flat::from_slices(&[-2.2, -1.0, 0.0], &[vec![0.0, 0.0, 1.0]]).unwrap(),
        ];
        let p = PolycylinderPacking::new(3, cores, vec![]).unwrap();
        assert!(p.validate().unwrap().is_valid());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-6.0..6.0));
            let claims: Vec<usize> = (0..4)
                .filter(|&i| p.dirichlet_cell_membership(i, &x).unwrap())
                .collect();
            assert!(!claims.is_empty());
            if claims.len() > 1 {
                let d: Vec<f64> = claims
                    .iter()
                    .map(|&i| (p.cores()[i].point_distance(&x) - 1.0).max(0.0))
                    .collect();
                assert!(d.iter().all(|&di| (di - d[0]).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn density_of_empty_packing_is_zero() {
        let p = PolycylinderPacking::new(3, vec![], vec![]).unwrap();
        let e = density_estimate(&p, 5.0, 1000, 0).unwrap();
        assert_eq!((e.value, e.standard_error), (0.0, 0.0));
    }

    #[test]
    fn density_estimates_are_reproducible_across_strategies() {
        let hex = PolycylinderPacking::hexagonal(1);
        let a = density_estimate_with(&hex, 10.0, 50_000, 7, Execution::Sequential).unwrap();
        let b = density_estimate_with(&hex, 10.0, 50_000, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = density_estimate_with(&hex, 10.0, 50_000, 8, Execution::Parallel).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn hexagonal_density_window_error() {
        let target = PI / 12f64.sqrt();
        for r in [10.0, 25.0] {
            let e = density_estimate(&PolycylinderPacking::hexagonal(0), r, 200_000, 1).unwrap();
            assert!(
                (e.value - target).abs() <= 1.0 / r + 3.0 * e.standard_error,
                "r={r}: {}",
                e.value
            );
        }
    }

    #[test]
    fn rigid_motion_preserves_validity_and_distances() {
        let hex = PolycylinderPacking::hexagonal(1);
        let (c, s) = (0.4f64.cos(), 0.4f64.sin());
        let rot = DMatrix::from_row_slice(3, 3, &[c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c]);
        let shift = v(&[0.3, -1.2, 2.0]);
        let moved = hex.transform(&rot, &shift).unwrap();
        assert!(moved.validate().unwrap().is_valid());
        let x = v(&[0.7, 0.2, -3.0]);
        let d0 = hex.distance_to_packing(&x).unwrap();
        let d1 = moved.distance_to_packing(&(&rot * &x + &shift)).unwrap();
        assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn packing_file_round_trip_is_bit_exact() {
        let hex = PolycylinderPacking::hexagonal(2);
        let file = hex.to_file();
        let text = serde_json::to_string(&file).unwrap();
        let back: PackingFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(
            back.lattice.as_ref().unwrap()[1][1].to_bits(),
            3f64.sqrt().to_bits()
        );
        assert_eq!(PolycylinderPacking::from_file(&back).unwrap(), hex);
    }
}
