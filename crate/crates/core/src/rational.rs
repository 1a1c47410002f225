//! Exact reduced rational forms of `Q(z)` and `R(z)`, and the winding number
//! of `R` by zero/pole counting.
//!
//! Over the coupled distinct eigenvalues `lambda` of `D` with weights
//! `w = |P_lambda b|^2`,
//!
//! ```text
//! Q(z) = J(z) / prod (z^2 - lambda z + 1)
//! J(z) = (1 - a z) prod (z^2 - lambda z + 1) - z^2 sum w prod' (z^2 - lambda' z + 1)
//! R(z) = -z^s rev(J)(z) / J(z),   s = 2 m_bar - deg J
//! ```
//!
//! Uncoupled eigenvalues contribute the same quadratic to numerator and
//! denominator and are left out.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphSpec, SpectralData};
use crate::poly::{convolve, poly_roots, Polynomial};
use crate::Complex;

/// Roots of `J` and `rev(J)` this close to `+1` or `-1` are treated as a
/// cancelling half-bound pair.
pub const ROOT_MATCH_TOL: f64 = 1e-7;

/// Unpaired roots this close to the unit circle make the winding ambiguous.
pub const BOUNDARY_MARGIN_TOL: f64 = 1e-6;

/// Relative threshold on `|J(+-1)|` for a half-bound state.
pub const HALF_BOUND_TOL: f64 = 1e-8;

/// Same threshold `reduce_degenerate` uses for `a = 0` and `|b| = 1`.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QRational {
    /// `J(z)`, trimmed to its true degree.
    pub numerator: Polynomial,
    /// Coupled eigenvalues, each standing for the factor `z^2 - lambda z + 1`.
    pub denominator_factors: Vec<f64>,
    /// Weights `|P_lambda b|^2` matching `denominator_factors`.
    pub weights: Vec<f64>,
    pub m_bar_coupled: usize,
    pub a: f64,
}

/// `(1 - a z) prod q_l - z^2 sum w_l prod_{l' != l} q_l'` with all
/// `2 m_bar + 2` coefficient slots kept, zero or not.
fn numerator_coefficients(a: f64, lambdas: &[f64], weights: &[f64]) -> Vec<f64> {
    let quad = |l: f64| [1.0, -l, 1.0];
    let mut full = vec![1.0, -a];
    for &l in lambdas {
        full = convolve(&full, &quad(l));
    }
    for (i, &w) in weights.iter().enumerate() {
        let mut term = vec![0.0, 0.0, w];
        for (j, &l) in lambdas.iter().enumerate() {
            if j != i {
                term = convolve(&term, &quad(l));
            }
        }
        for (k, t) in term.iter().enumerate() {
            full[k] -= t;
        }
    }
    full
}

fn coupled_parts(sd: &SpectralData) -> (Vec<f64>, Vec<f64>) {
    sd.coupled().map(|l| (l.lambda, l.weight)).unzip()
}

/// Builds the reduced numerator `J` over coupled lines only.
///
/// Fails with [`Error::PreconditionViolated`] on the excluded case `a = 0`,
/// `|b| = 1`, and with [`Error::DegreeMismatch`] when the leading coefficient
/// does not survive pruning.
pub fn build_q_rational(spec: &GraphSpec, sd: &SpectralData) -> Result<QRational> {
    if spec.is_degenerate(DEGENERACY_TOL) {
        return Err(Error::PreconditionViolated);
    }
    let (lambdas, weights) = coupled_parts(sd);
    let m_bar = lambdas.len();
    let a = spec.a();
    let numerator = Polynomial::new(numerator_coefficients(a, &lambdas, &weights));
    let expected = 2 * m_bar + usize::from(a != 0.0);
    if numerator.degree() != expected {
        return Err(Error::DegreeMismatch {
            expected,
            actual: numerator.degree(),
        });
    }
    Ok(QRational {
        numerator,
        denominator_factors: lambdas,
        weights,
        m_bar_coupled: m_bar,
        a,
    })
}

impl QRational {
    pub fn has_self_loop(&self) -> bool {
        self.a != 0.0
    }

    pub fn denominator(&self) -> Polynomial {
        let mut den = vec![1.0];
        for &l in &self.denominator_factors {
            den = convolve(&den, &[1.0, -l, 1.0]);
        }
        Polynomial::new(den)
    }

    /// `Q(z)` from the pole sum, independent of the polynomial coefficients.
    pub fn eval_direct(&self, z: Complex) -> Complex {
        if z == Complex::new(0.0, 0.0) {
            return Complex::new(1.0, 0.0);
        }
        let s = z + z.inv();
        let c: Complex = self
            .denominator_factors
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| w / (s - l))
            .sum();
        1.0 - z * (self.a + c)
    }

    /// `Q(z) = J(z) / den(z)` from the coefficients.
    pub fn eval(&self, z: Complex) -> Complex {
        self.numerator.eval(z) / self.denominator().eval(z)
    }

    /// `dQ/dx` at a real point, by the quotient rule on `J / den`.
    pub fn derivative_at(&self, x: f64) -> f64 {
        let den = self.denominator();
        let (j, dj) = (self.numerator.eval_real(x), self.numerator.derivative().eval_real(x));
        let (q, dq) = (den.eval_real(x), den.derivative().eval_real(x));
        (dj * q - j * dq) / (q * q)
    }

    /// Poles of `C` inside the open unit disk on the real axis: `mu` with
    /// `mu + 1/mu = lambda` for coupled `|lambda| > 2`.
    pub fn real_poles_inside(&self) -> Vec<f64> {
        self.denominator_factors
            .iter()
            .filter(|l| l.abs() > 2.0)
            .map(|&l| {
                let outer = l / 2.0 + l.signum() * ((l / 2.0).powi(2) - 1.0).sqrt();
                1.0 / outer
            })
            .collect()
    }
}

/// `R(z) = -z^s num(z) / den(z)` with `num = rev(J)`, `den = J`.
#[derive(Debug, Clone, PartialEq)]
pub struct RRational {
    pub num: Polynomial,
    pub den: Polynomial,
    pub monomial_exponent: i32,
}

/// Reverses `J` and checks the result against `-Q(1/z)/Q(z)` at 20 fixed
/// pseudo-random points in the annulus `0.5 < |z| < 2`.
pub fn build_r_rational(q: &QRational) -> Result<RRational> {
    let r = RRational {
        num: q.numerator.reversed(),
        den: q.numerator.clone(),
        monomial_exponent: 2 * q.m_bar_coupled as i32 - q.numerator.degree() as i32,
    };
    let form = ReflectionForm::from(r.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 20 && attempts < 1000 {
        attempts += 1;
        let z = Complex::from_polar(rng.random_range(0.5..2.0), rng.random_range(-PI..PI));
        let (qz, qinv) = (q.eval_direct(z), q.eval_direct(z.inv()));
        if qz.norm() < 1e-3 || !qz.is_finite() || !qinv.is_finite() {
            continue;
        }
        let direct = -qinv / qz;
        let Ok(rational) = form.eval(z) else { continue };
        let diff = (rational - direct).norm();
        if diff > 1e-8 * direct.norm().max(1.0) {
            return Err(Error::ConsistencyFailure {
                re: z.re,
                im: z.im,
                diff,
            });
        }
        checked += 1;
    }
    Ok(r)
}

/// Evaluable form of `R(z) = -z^s num(z) / den(z)`, optionally with the
/// common `(z -+ 1)` factors of half-bound points divided out.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionForm {
    pub num: Polynomial,
    pub den: Polynomial,
    pub exponent: i32,
}

impl From<RRational> for ReflectionForm {
    fn from(r: RRational) -> Self {
        ReflectionForm {
            num: r.num,
            den: r.den,
            exponent: r.monomial_exponent,
        }
    }
}

impl ReflectionForm {
    pub fn from_q(q: &QRational) -> Self {
        ReflectionForm {
            num: q.numerator.reversed(),
            den: q.numerator.clone(),
            exponent: 2 * q.m_bar_coupled as i32 - q.numerator.degree() as i32,
        }
    }

    /// Builds the form without the non-degeneracy precondition, reversing `J`
    /// at its nominal degree `2 m_bar + 1` so a vanishing leading coefficient
    /// is carried as a zero of `num` at the origin.
    pub fn from_spectral(spec: &GraphSpec, sd: &SpectralData) -> Self {
        let (lambdas, weights) = coupled_parts(sd);
        let coeffs = numerator_coefficients(spec.a(), &lambdas, &weights);
        let mut rev = coeffs.clone();
        rev.reverse();
        // nominal degree 2 m_bar + 1 against 2 m_bar from the denominator
        ReflectionForm {
            num: Polynomial::new(rev),
            den: Polynomial::new(coeffs),
            exponent: -1,
        }
    }

    /// Divides out `(z - 1)` and `(z + 1)` from numerator and denominator
    /// wherever both vanish there.
    pub fn reduced(&self) -> Self {
        let mut out = self.clone();
        for root in [1.0, -1.0] {
            loop {
                let z = Complex::new(root, 0.0);
                let den_small = out.den.eval(z).norm() <= HALF_BOUND_TOL * out.den.norm1();
                let num_small = out.num.eval(z).norm() <= HALF_BOUND_TOL * out.num.norm1();
                if !(den_small && num_small) || out.den.degree() == 0 || out.num.degree() == 0 {
                    break;
                }
                out.num = Polynomial::new(out.num.deflate(root).0.coeffs().to_vec());
                out.den = Polynomial::new(out.den.deflate(root).0.coeffs().to_vec());
            }
        }
        out
    }

    pub fn eval(&self, z: Complex) -> Result<Complex> {
        if z == Complex::new(0.0, 0.0) {
            return Err(Error::ZeroArgument);
        }
        let den = self.den.eval(z);
        if den.norm() <= 1e-14 * self.den.norm1() * z.norm().max(1.0).powi(self.den.degree() as i32) {
            return Err(Error::AtTruePole { re: z.re, im: z.im });
        }
        Ok(-z.powi(self.exponent) * self.num.eval(z) / den)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindingResult {
    pub winding: i64,
    pub zeros_inside: usize,
    pub poles_inside: usize,
    pub min_boundary_margin: f64,
    /// Cancelled half-bound root pairs at `+1` and `-1`.
    pub half_bound_pairs: [bool; 2],
}

/// Removes one root within `ROOT_MATCH_TOL` of `target` from both lists if
/// each has one.
fn take_pair(j: &mut Vec<Complex>, rev: &mut Vec<Complex>, target: f64) -> bool {
    let t = Complex::new(target, 0.0);
    let find = |v: &Vec<Complex>| {
        v.iter()
            .enumerate()
            .map(|(i, r)| (i, (r - t).norm()))
            .filter(|(_, d)| *d <= ROOT_MATCH_TOL)
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
    };
    match (find(j), find(rev)) {
        (Some(a), Some(b)) => {
            j.remove(a);
            rev.remove(b);
            true
        }
        _ => false,
    }
}

/// Winding number of `R` around the unit circle as zeros minus poles inside.
///
/// Zeros are the roots of `rev(J)`, poles the roots of `J` plus a simple pole
/// at the origin when `a != 0`. Half-bound roots at `+-1` appear in both and
/// cancel.
pub fn winding_by_argument_principle(q: &QRational) -> Result<WindingResult> {
    let mut j_roots = poly_roots(&q.numerator)?;
    let mut rev_roots = poly_roots(&q.numerator.reversed())?;
    let half_bound_pairs = [
        take_pair(&mut j_roots, &mut rev_roots, 1.0),
        take_pair(&mut j_roots, &mut rev_roots, -1.0),
    ];

    let mut margin = f64::INFINITY;
    for r in j_roots.iter().chain(&rev_roots) {
        let d = (1.0 - r.norm()).abs();
        if d <= BOUNDARY_MARGIN_TOL {
            return Err(Error::BoundaryAmbiguity {
                re: r.re,
                im: r.im,
                margin: d,
            });
        }
        margin = margin.min(d);
    }
    let zeros_inside = rev_roots.iter().filter(|r| r.norm() < 1.0).count();
    let poles_inside = j_roots.iter().filter(|r| r.norm() < 1.0).count() + usize::from(q.has_self_loop());
    Ok(WindingResult {
        winding: zeros_inside as i64 - poles_inside as i64,
        zeros_inside,
        poles_inside,
        min_boundary_margin: margin,
        half_bound_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{eval_r, spectral_decompose};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn setup(a: f64, b: &[f64], d: &[Vec<f64>]) -> (GraphSpec, SpectralData, QRational) {
        let spec = GraphSpec::from_real(a, b, d).unwrap();
        let sd = spectral_decompose(&spec).unwrap();
        let q = build_q_rational(&spec, &sd).unwrap();
        (spec, sd, q)
    }

    fn assert_coeffs(p: &Polynomial, want: &[f64]) {
        assert_eq!(p.coeffs().len(), want.len(), "{:?}", p.coeffs());
        for (x, y) in p.coeffs().iter().zip(want) {
            assert!((x - y).abs() < 1e-12, "{:?} vs {want:?}", p.coeffs());
        }
    }

    #[test]
    fn bare_attachment_vertex() {
        let (_, _, q) = setup(2.0, &[], &[]);
        assert_coeffs(&q.numerator, &[1.0, -2.0]);
        assert!(q.denominator_factors.is_empty());
    }

    #[test]
    fn single_internal_vertex() {
        // (1)(z^2 + 1) - 4 z^2 = 1 - 3 z^2
        let (spec, sd, q) = setup(0.0, &[2.0], &[vec![0.0]]);
        assert_coeffs(&q.numerator, &[1.0, 0.0, -3.0]);
        assert_eq!(q.denominator_factors, vec![0.0]);
        assert_eq!(q.numerator.degree(), 2);
        for z in [c(0.3, 0.1), c(-1.2, 0.4), c(0.0, 0.5), c(2.0, -1.0), c(0.7, 0.0)] {
            let direct = crate::graph::eval_q(&spec, &sd, z).unwrap();
            assert!((q.eval(z) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_eigenvalue_cancels() {
        let (_, sd, q) = setup(0.0, &[2.0, 0.0], &[vec![0.0, 0.0], vec![0.0, 5.0]]);
        assert_coeffs(&q.numerator, &[1.0, 0.0, -3.0]);
        assert_eq!(q.denominator_factors, vec![0.0]);
        assert_eq!(q.numerator.degree(), 2 * 2 - 2 * sd.n_confined());
    }

    #[test]
    fn degenerate_instance_rejected() {
        let spec = GraphSpec::from_real(0.0, &[1.0], &[vec![0.0]]).unwrap();
        let sd = spectral_decompose(&spec).unwrap();
        assert_eq!(build_q_rational(&spec, &sd), Err(Error::PreconditionViolated));
    }

    #[test]
    fn reflection_bare_vertex() {
        let (spec, sd, q) = setup(2.0, &[], &[]);
        let r = build_r_rational(&q).unwrap();
        assert_coeffs(&r.num, &[-2.0, 1.0]);
        assert_coeffs(&r.den, &[1.0, -2.0]);
        assert_eq!(r.monomial_exponent, -1);
        let form = ReflectionForm::from(r);
        for z in [c(0.3, 0.2), c(-1.5, 0.1), c(0.1, -3.0)] {
            let want = -(z - 2.0) / (z * (1.0 - 2.0 * z));
            assert!((form.eval(z).unwrap() - want).norm() < 1e-12);
            assert!((eval_r(&spec, &sd, z).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn reflection_a_one_is_inverse_z() {
        let (_, _, q) = setup(1.0, &[], &[]);
        let form = ReflectionForm::from(build_r_rational(&q).unwrap());
        for z in [c(0.3, 0.2), c(-1.5, 0.1), c(0.1, -3.0)] {
            assert!((form.eval(z).unwrap() - z.inv()).norm() < 1e-12);
        }
    }

    #[test]
    fn reflection_single_internal_vertex() {
        let (_, _, q) = setup(0.0, &[2.0], &[vec![0.0]]);
        let r = build_r_rational(&q).unwrap();
        assert_eq!(r.monomial_exponent, 0);
        assert_coeffs(&r.num, &[-3.0, 0.0, 1.0]);
        let form = ReflectionForm::from(r);
        for z in [c(0.3, 0.2), c(-1.5, 0.1), c(0.5, 0.0)] {
            let want = -(z * z - 3.0) / (1.0 - 3.0 * z * z);
            assert!((form.eval(z).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_form_matches_reduced_form() {
        let (spec, sd, q) = setup(0.0, &[2.0, 0.5], &[vec![0.3, 1.0], vec![1.0, -0.6]]);
        let a = ReflectionForm::from_q(&q);
        let b = ReflectionForm::from_spectral(&spec, &sd);
        for z in [c(0.3, 0.2), c(-1.5, 0.1), c(0.5, 0.9)] {
            assert!((a.eval(z).unwrap() - b.eval(z).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn winding_bare_vertex() {
        let (_, _, q) = setup(2.0, &[], &[]);
        let w = winding_by_argument_principle(&q).unwrap();
        assert_eq!((w.zeros_inside, w.poles_inside, w.winding), (0, 2, -2));
    }

    #[test]
    fn winding_half_bound_instance() {
        let (_, _, q) = setup(0.5, &[1.0], &[vec![0.0]]);
        // J = 1 - z/2 - z^3/2 = -(z - 1)(z^2 + z + 2)/2
        assert_coeffs(&q.numerator, &[1.0, -0.5, 0.0, -0.5]);
        let w = winding_by_argument_principle(&q).unwrap();
        assert_eq!((w.zeros_inside, w.poles_inside, w.winding), (2, 1, 1));
        assert_eq!(w.half_bound_pairs, [true, false]);
    }

    #[test]
    fn winding_trivial() {
        let (_, _, q) = setup(0.0, &[], &[]);
        assert_eq!(winding_by_argument_principle(&q).unwrap().winding, 0);
    }

    #[test]
    fn reduced_form_removes_half_bound_factor() {
        let (_, _, q) = setup(0.5, &[1.0], &[vec![0.0]]);
        let form = ReflectionForm::from_q(&q).reduced();
        assert_eq!(form.den.degree(), 2);
        // R(z) = (2z^2 + z + 1) / (z (z^2 + z + 2))
        for z in [c(1.0, 0.0), c(-1.0, 0.0), c(0.4, 0.3)] {
            let want = (2.0 * z * z + z + 1.0) / (z * (z * z + z + 2.0));
            assert!((form.eval(z).unwrap() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn numerator_has_no_shared_root_with_denominator() {
        let (_, _, q) = setup(0.3, &[1.0, 0.7], &[vec![0.5, 1.5], vec![1.5, 3.0]]);
        for &l in &q.denominator_factors {
            let disc = Complex::new(l * l / 4.0 - 1.0, 0.0).sqrt();
            for mu in [l / 2.0 + disc, l / 2.0 - disc] {
                assert!(q.numerator.eval(mu).norm() > 1e-6);
            }
        }
    }
}
