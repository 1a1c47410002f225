//! Real-coefficient polynomials and a simultaneous (Aberth) root finder.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Complex;

/// Relative coefficient pruning threshold.
pub const DROP_TOL: f64 = 1e-12;

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Drops trailing coefficients at or below `DROP_TOL * max|c|`.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= DROP_TOL * max) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Sum of absolute coefficients; bounds `|p(z)|` on the closed unit disk.
    pub fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn eval(&self, z: Complex) -> Complex {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial { coeffs: vec![0.0] };
        }
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        }
    }

    /// Coefficient reversal `z^deg p(1/z)`.
    pub fn reversed(&self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().rev().copied().collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        Polynomial::new(convolve(&self.coeffs, &other.coeffs))
    }

    /// Synthetic division by `(z - root)`; returns the quotient and remainder.
    pub fn deflate(&self, root: f64) -> (Polynomial, f64) {
        let n = self.coeffs.len();
        if n == 1 {
            return (Polynomial { coeffs: vec![0.0] }, self.coeffs[0]);
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = 0.0;
        for i in (1..n).rev() {
            carry = self.coeffs[i] + carry * root;
            q[i - 1] = carry;
        }
        let rem = self.coeffs[0] + carry * root;
        (Polynomial { coeffs: q }, rem)
    }
}

pub(crate) fn convolve(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

const MAX_ITER: usize = 2000;

/// All complex roots of `p`, with multiplicity.
///
/// Aberth iteration from a perturbed circle, then Newton polishing. Roots with
/// negligible imaginary part are snapped to the real axis and polished there;
/// the remaining roots are paired into exact conjugates.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex>> {
    let deg = p.degree();
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p.leading();
    let monic: Vec<Complex> = p.coeffs().iter().map(|&c| Complex::new(c / lead, 0.0)).collect();
    let dmonic: Vec<Complex> = monic.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    let horner = |cs: &[Complex], z: Complex| cs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, c| acc * z + c);

    if deg == 1 {
        return Ok(vec![Complex::new(-p.coeffs()[0] / p.coeffs()[1], 0.0)]);
    }

    // Initial radius from the geometric mean of root moduli, clamped by the
    // Cauchy bound so tiny constants do not collapse the circle.
    let c0 = monic[0].norm();
    let cauchy = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = if c0 > 0.0 {
        c0.powf(1.0 / deg as f64).min(cauchy)
    } else {
        0.5
    };
    let mut z: Vec<Complex> = (0..deg)
        .map(|k| Complex::from_polar(radius, 2.0 * PI * k as f64 / deg as f64 + 0.4))
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let pz = horner(&monic, z[i]);
            if pz == Complex::new(0.0, 0.0) {
                continue;
            }
            let ratio = pz / horner(&dmonic, z[i]);
            let repulsion: Complex = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step <= 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged
        && z.iter()
            .any(|r| horner(&monic, *r).norm() > 1e-6 * (1.0 + r.norm()).powi(deg as i32))
    {
        return Err(Error::ConvergenceFailure {
            what: "Aberth root finder",
            iterations: MAX_ITER,
        });
    }

    for r in z.iter_mut() {
        *r = newton_polish(&monic, &dmonic, *r);
    }
    enforce_conjugate_symmetry(&mut z);
    for r in z.iter_mut().filter(|r| r.im == 0.0) {
        r.re = newton_polish_real(p, r.re);
    }

    let scale = p.norm1();
    for r in &z {
        let bound = 1e-8 * scale * r.norm().max(1.0).powi(deg as i32);
        if p.eval(*r).norm() > bound {
            return Err(Error::ConvergenceFailure {
                what: "root polishing",
                iterations: MAX_ITER,
            });
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(z)
}

fn newton_polish(p: &[Complex], dp: &[Complex], mut z: Complex) -> Complex {
    let horner = |cs: &[Complex], z: Complex| cs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, c| acc * z + c);
    let mut best = horner(p, z).norm();
    for _ in 0..8 {
        let d = horner(dp, z);
        if d == Complex::new(0.0, 0.0) {
            break;
        }
        let next = z - horner(p, z) / d;
        let val = horner(p, next).norm();
        if val.is_nan() || val >= best {
            break;
        }
        best = val;
        z = next;
    }
    z
}

fn newton_polish_real(p: &Polynomial, mut x: f64) -> f64 {
    let dp = p.derivative();
    let mut best = p.eval_real(x).abs();
    for _ in 0..8 {
        let d = dp.eval_real(x);
        if d == 0.0 {
            break;
        }
        let next = x - p.eval_real(x) / d;
        let val = p.eval_real(next).abs();
        if val.is_nan() || val >= best {
            break;
        }
        best = val;
        x = next;
    }
    x
}

fn enforce_conjugate_symmetry(z: &mut [Complex]) {
    for r in z.iter_mut() {
        if r.im.abs() <= 1e-9 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    let mut upper: Vec<usize> = (0..z.len()).filter(|&i| z[i].im > 0.0).collect();
    let mut lower: Vec<usize> = (0..z.len()).filter(|&i| z[i].im < 0.0).collect();
    if upper.len() != lower.len() {
        return;
    }
    upper.sort_by(|&i, &j| z[i].re.total_cmp(&z[j].re));
    lower.sort_by(|&i, &j| z[i].re.total_cmp(&z[j].re));
    while let Some(i) = upper.pop() {
        let (pos, _) = lower
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, (z[j] - z[i].conj()).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        let j = lower.swap_remove(pos);
        let avg = (z[i] + z[j].conj()) * 0.5;
        z[i] = avg;
        z[j] = avg.conj();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex, b: Complex, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = Polynomial::new(vec![1.0, 2.0, 1e-14, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(Polynomial::new(vec![]).degree(), 0);
    }

    #[test]
    fn reversal_and_deflation() {
        let p = Polynomial::new(vec![1.0, -2.0]);
        assert_eq!(p.reversed().coeffs(), &[-2.0, 1.0]);
        // z^3 + z - 2 = (z - 1)(z^2 + z + 2)
        let (q, rem) = Polynomial::new(vec![-2.0, 1.0, 0.0, 1.0]).deflate(1.0);
        assert_eq!(q.coeffs(), &[2.0, 1.0, 1.0]);
        assert_eq!(rem, 0.0);
    }

    #[test]
    fn roots_of_z2_minus_1() {
        let r = poly_roots(&Polynomial::new(vec![-1.0, 0.0, 1.0])).unwrap();
        assert!(close(r[0], Complex::new(-1.0, 0.0), 1e-14));
        assert!(close(r[1], Complex::new(1.0, 0.0), 1e-14));
    }

    #[test]
    fn roots_of_1_minus_3z2() {
        let r = poly_roots(&Polynomial::new(vec![1.0, 0.0, -3.0])).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!(close(r[0], Complex::new(-s, 0.0), 1e-14));
        assert!(close(r[1], Complex::new(s, 0.0), 1e-14));
    }

    #[test]
    fn roots_of_cubic_with_complex_pair() {
        // Expansion of (z - 1)(z^2 + z + 2) = z^3 + z - 2.
        assert_eq!(convolve(&[-1.0, 1.0], &[2.0, 1.0, 1.0]), vec![-2.0, 1.0, 0.0, 1.0]);
        let r = poly_roots(&Polynomial::new(vec![-2.0, 1.0, 0.0, 1.0])).unwrap();
        let h = 7f64.sqrt() / 2.0;
        assert!(close(r[0], Complex::new(-0.5, -h), 1e-13));
        assert!(close(r[1], Complex::new(-0.5, h), 1e-13));
        assert!(close(r[2], Complex::new(1.0, 0.0), 1e-14));
        assert_eq!(r[0], r[1].conj());
    }

    #[test]
    fn constant_and_linear() {
        assert!(poly_roots(&Polynomial::new(vec![3.0])).unwrap().is_empty());
        let r = poly_roots(&Polynomial::new(vec![1.0, -2.0])).unwrap();
        assert_eq!(r, vec![Complex::new(0.5, 0.0)]);
    }

    #[test]
    fn double_root() {
        // (z - 2)^2 (z + 0.5)
        let p = Polynomial::new(convolve(&convolve(&[-2.0, 1.0], &[-2.0, 1.0]), &[0.5, 1.0]));
        let r = poly_roots(&p).unwrap();
        assert_eq!(r.len(), 3);
        assert!(close(r[0], Complex::new(-0.5, 0.0), 1e-12));
        assert!(close(r[1], Complex::new(2.0, 0.0), 1e-6));
        assert!(close(r[2], Complex::new(2.0, 0.0), 1e-6));
    }

    proptest! {
        #[test]
        fn roots_reconstruct_polynomial(roots in prop::collection::vec((-3.0f64..3.0, 0.0f64..2.0), 1..7)) {
            // Build from well-separated real roots and conjugate pairs.
            let mut coeffs = vec![1.0];
            for &(re, im) in &roots {
                if im < 0.5 {
                    coeffs = convolve(&coeffs, &[-re, 1.0]);
                } else {
                    coeffs = convolve(&coeffs, &[re * re + im * im, -2.0 * re, 1.0]);
                }
            }
            let p = Polynomial::new(coeffs);
            let found = poly_roots(&p).unwrap();
            prop_assert_eq!(found.len(), p.degree());
            for r in &found {
                let bound = 1e-8 * p.norm1() * r.norm().max(1.0).powi(p.degree() as i32);
                prop_assert!(p.eval(*r).norm() <= bound);
            }
            let reversed = poly_roots(&p.reversed());
            if let Ok(rev) = reversed {
                // Reversal maps roots to reciprocals when p(0) != 0.
                if p.coeffs()[0].abs() > 1e-6 {
                    for r in &found {
                        let inv = r.inv();
                        prop_assert!(rev.iter().any(|s| (s - inv).norm() < 1e-5 * (1.0 + inv.norm())));
                    }
                }
            }
        }
    }
}
