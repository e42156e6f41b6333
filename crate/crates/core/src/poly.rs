//! Dense real polynomials of small degree (coefficients in ascending order)
//! and bracketed real-root isolation on a closed interval.

pub(crate) fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub(crate) fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[i] += c;
    }
    out
}

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|c| c * s).collect()
}

/// Magnitude scale of the terms of `p` at `x`, used for relative zero tests.
fn term_scale(p: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    let mut pow = 1.0;
    let mut s = 0.0;
    for &c in p {
        s += c.abs() * pow;
        pow *= ax;
    }
    s
}

fn bisect(p: &[f64], mut a: f64, mut b: f64) -> f64 {
    let mut fa = eval(p, a);
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return if fa.abs() <= eval(p, b).abs() { a } else { b };
        }
        let fm = eval(p, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}

/// All real roots of `p` in `[lo, hi]`, ascending. Roots of even multiplicity
/// are reported when the polynomial vanishes at a critical point to within a
/// relative tolerance of `1e-12`.
pub(crate) fn real_roots_in(p: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut coeffs = p.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    let mut roots = Vec::new();
    match coeffs.len() {
        0 | 1 => return roots,
        2 => {
            let r = -coeffs[0] / coeffs[1];
            if r >= lo && r <= hi {
                roots.push(r);
            }
            return roots;
        }
        _ => {}
    }
    let crit = real_roots_in(&derivative(&coeffs), lo, hi);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(lo);
    knots.extend(crit.iter().copied().filter(|&c| c > lo && c < hi));
    knots.push(hi);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(&coeffs, a), eval(&coeffs, b));
        if fa == 0.0 {
            roots.push(a);
        } else if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(&coeffs, a, b));
        }
    }
    if eval(&coeffs, hi) == 0.0 {
        roots.push(hi);
    }
    for &c in &crit {
        if c >= lo && c <= hi && eval(&coeffs, c).abs() <= 1e-12 * term_scale(&coeffs, c) {
            roots.push(c);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_with_known_roots() {
        // (x+2)(x-0.5)(x-1)(x-3)
        let p = mul(
            &mul(&[2.0, 1.0], &[-0.5, 1.0]),
            &mul(&[-1.0, 1.0], &[-3.0, 1.0]),
        );
        let r = real_roots_in(&p, -10.0, 10.0);
        let expect = [-2.0, 0.5, 1.0, 3.0];
        assert_eq!(r.len(), 4);
        for (a, b) in r.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        assert_eq!(real_roots_in(&p, 0.0, 2.0).len(), 2);
    }

    #[test]
    fn double_root_is_reported() {
        let p = mul(&[-1.0, 1.0], &[-1.0, 1.0]);
        let r = real_roots_in(&p, -5.0, 5.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rootless_and_degenerate() {
        assert!(real_roots_in(&[1.0, 0.0, 1.0], -3.0, 3.0).is_empty());
        assert!(real_roots_in(&[0.0, 0.0], -3.0, 3.0).is_empty());
        assert!(real_roots_in(&[4.0], -3.0, 3.0).is_empty());
    }
}
