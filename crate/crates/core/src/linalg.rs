//! One-sided Jacobi SVD for the small dense matrices used by the affine layer.
//!
//! nalgebra's bidiagonal SVD returns wrong factors for some structured
//! matrices with repeated singular values (see the regression test), which
//! broke rigid-motion invariance of flat distances. Jacobi is slower but
//! accurate to high relative precision and the matrices here are tiny.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 80;

pub(crate) struct Svd {
    /// Left singular vectors, `rows x min(rows, cols)`.
    pub u: DMatrix<f64>,
    /// Descending.
    pub s: DVector<f64>,
    /// Right singular vectors, `cols x min(rows, cols)`.
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Svd {
        if a.nrows() < a.ncols() {
            let t = Svd::new(&a.transpose());
            return Svd {
                u: t.v,
                s: t.s,
                v: t.u,
            };
        }
        let (rows, n) = a.shape();
        let mut w = a.clone();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = w.column(p).norm_squared();
                    let beta = w.column(q).norm_squared();
                    let gamma = w.column(p).dot(&w.column(q));
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
        let mut u = DMatrix::zeros(rows, n);
        let mut vs = DMatrix::zeros(n, n);
        let mut s = DVector::zeros(n);
        for (k, &j) in order.iter().enumerate() {
            s[k] = norms[j];
            vs.set_column(k, &v.column(j));
            if norms[j] > 0.0 {
                u.set_column(k, &(w.column(j) / norms[j]));
            }
        }
        Svd { u, s, v: vs }
    }

    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.s.max();
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rtol * smax).count()
    }

    pub fn max(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}
