//! Bound-state enumeration, amplitude reconstruction and eigen-residual checks.

use serde::Serialize;

use crate::eigen;
use crate::error::{Error, Result};
use crate::graph::{eval_q, eval_r, GraphSpec, SpectralData, POLE_TOL};
use crate::poly::{poly_roots, Polynomial};
use crate::rational::{QRational, BOUNDARY_MARGIN_TOL, HALF_BOUND_TOL, ROOT_MATCH_TOL};
use crate::Complex;

/// Default tail length for residual checks.
pub const DEFAULT_TAIL: usize = 50;

/// Largest imaginary part accepted for a root inside the unit disk.
const REAL_ROOT_TOL: f64 = 1e-8;

/// Root-based and bisection-based evanescent roots must agree to this.
const CENSUS_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvanescentState {
    pub sign: i8,
    pub kappa: f64,
    pub z: f64,
    pub energy: f64,
    pub psi: Vec<Complex>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HalfBoundFlags {
    pub at_plus_one: bool,
    pub at_minus_one: bool,
    pub n_h: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfinedState {
    pub lambda: f64,
    pub psi: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateCensus {
    pub m: usize,
    pub n_b: usize,
    pub n_h: usize,
    pub n_c: usize,
    pub evanescent: Vec<EvanescentState>,
    pub half_bound: HalfBoundFlags,
    pub confined: Vec<ConfinedState>,
}

/// Evanescent bound states: roots of `Q` in `(-1, 0) u (0, 1)`.
///
/// The roots of `J` are cross-checked against a sign-change bisection of
/// `Q(x)` evaluated from the pole sum on each real subinterval between poles
/// of `C`; the two censuses must agree.
pub fn find_evanescent(spec: &GraphSpec, sd: &SpectralData, q: &QRational) -> Result<Vec<EvanescentState>> {
    let mut roots = Vec::new();
    for r in poly_roots(&q.numerator)? {
        if (r - 1.0).norm() <= ROOT_MATCH_TOL || (r + 1.0).norm() <= ROOT_MATCH_TOL {
            continue;
        }
        let modulus = r.norm();
        if (1.0 - modulus).abs() <= BOUNDARY_MARGIN_TOL {
            return Err(Error::BoundaryAmbiguity {
                re: r.re,
                im: r.im,
                margin: (1.0 - modulus).abs(),
            });
        }
        if modulus < 1.0 {
            roots.push(r);
        }
    }
    if roots.iter().any(|r| r.im.abs() > REAL_ROOT_TOL) {
        return Err(Error::OracleDisagreement {
            roots: roots.iter().map(|r| r.re).collect(),
            bisection: bisect_roots(spec, sd, q),
        });
    }
    let mut xs: Vec<f64> = roots.iter().map(|r| polish_real(&q.numerator, r.re)).collect();
    xs.sort_by(f64::total_cmp);

    let bisection = bisect_roots(spec, sd, q);
    let agree = xs.len() == bisection.len()
        && xs
            .iter()
            .zip(&bisection)
            .all(|(x, y)| (x - y).abs() <= CENSUS_MATCH_TOL * x.abs().max(1e-3));
    if !agree {
        return Err(Error::OracleDisagreement { roots: xs, bisection });
    }

    xs.into_iter()
        .map(|z| {
            let sign: i8 = if z > 0.0 { 1 } else { -1 };
            let kappa = -z.abs().ln();
            Ok(EvanescentState {
                sign,
                kappa,
                z,
                energy: z + 1.0 / z,
                psi: bound_amplitudes(spec, sd, sign, kappa)?,
            })
        })
        .collect()
}

fn polish_real(p: &Polynomial, mut x: f64) -> f64 {
    let dp = p.derivative();
    for _ in 0..6 {
        let d = dp.eval_real(x);
        if d == 0.0 {
            break;
        }
        let next = x - p.eval_real(x) / d;
        if p.eval_real(next).abs() >= p.eval_real(x).abs() {
            break;
        }
        x = next;
    }
    x
}

/// Roots of `Q` on `(-1, 0) u (0, 1)` by bisection between consecutive
/// singular points, using only pointwise evaluation of `Q`.
///
/// `Q` is strictly decreasing through every root in `(0, 1]` and strictly
/// increasing through every root in `[-1, 0)`, so each pole-free subinterval
/// holds at most one root and a sign change detects it.
fn bisect_roots(spec: &GraphSpec, sd: &SpectralData, q: &QRational) -> Vec<f64> {
    let flags = detect_half_bound(spec, sd);
    let poles = q.real_poles_inside();
    let edge_poles: Vec<f64> = q
        .denominator_factors
        .iter()
        .filter(|l| (l.abs() - 2.0).abs() <= 1e-12)
        .map(|l| l.signum())
        .collect();

    let q_at = |x: f64| eval_q(spec, sd, Complex::new(x, 0.0)).map(|v| v.re);

    // One-sided sign of Q approaching an endpoint from inside (dir = +1 from
    // the right, -1 from the left).
    let end_sign = |x: f64, dir: f64| -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        if let Some(&p) = poles.iter().find(|&&p| p == x) {
            // Q ~ -p^2 w / ((x - mu_out)(x - p)) near the pole.
            let outer = 1.0 / p;
            return -((p - outer) * dir).signum();
        }
        if edge_poles.contains(&x) {
            return -1.0;
        }
        let half_bound = (x == 1.0 && flags.at_plus_one) || (x == -1.0 && flags.at_minus_one);
        if half_bound {
            return 1.0;
        }
        q_at(x).map(f64::signum).unwrap_or(0.0)
    };

    let mut found = Vec::new();
    for (lo, hi) in [(-1.0, 0.0), (0.0, 1.0)] {
        let mut cuts: Vec<f64> = poles.iter().copied().filter(|&p| p > lo && p < hi).collect();
        cuts.sort_by(f64::total_cmp);
        let mut points = vec![lo];
        points.extend(cuts);
        points.push(hi);
        for w in points.windows(2) {
            let (mut l, mut r) = (w[0], w[1]);
            let (sl, sr) = (end_sign(l, 1.0), end_sign(r, -1.0));
            if sl == 0.0 || sr == 0.0 || sl == sr {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                if mid <= l || mid >= r {
                    break;
                }
                match q_at(mid) {
                    Ok(0.0) => {
                        l = mid;
                        r = mid;
                        break;
                    }
                    Ok(v) if v.signum() == sl => l = mid,
                    Ok(_) => r = mid,
                    Err(_) => break,
                }
            }
            found.push(0.5 * (l + r));
        }
    }
    found.sort_by(f64::total_cmp);
    found
}

/// Half-bound states at `z = +1` and `z = -1`, read off the reduced
/// numerator so that poles of `C` at `+-1` cannot mask them.
pub fn detect_half_bound(spec: &GraphSpec, sd: &SpectralData) -> HalfBoundFlags {
    let form = crate::rational::ReflectionForm::from_spectral(spec, sd);
    let j = &form.den;
    let tol = HALF_BOUND_TOL * j.norm1();
    let at_plus_one = j.eval_real(1.0).abs() <= tol;
    let at_minus_one = j.eval_real(-1.0).abs() <= tol;
    HalfBoundFlags {
        at_plus_one,
        at_minus_one,
        n_h: usize::from(at_plus_one) + usize::from(at_minus_one),
    }
}

/// Orthonormal confined states `D psi = lambda psi`, `b^H psi = 0`.
pub fn count_confined(sd: &SpectralData, b: &[Complex]) -> Vec<ConfinedState> {
    let mut out = Vec::new();
    for line in &sd.lines {
        if line.confined_dim == 0 {
            continue;
        }
        let members = &sd.eigenbasis[line.members.clone()];
        if !line.coupled {
            out.extend(members.iter().map(|p| ConfinedState {
                lambda: line.lambda,
                psi: p.vector.clone(),
            }));
            continue;
        }
        // Unit vector along P_lambda b.
        let mut u = vec![Complex::new(0.0, 0.0); b.len()];
        for p in members {
            let c = eigen::dot(&p.vector, b);
            for (ui, vi) in u.iter_mut().zip(&p.vector) {
                *ui += vi * c;
            }
        }
        let un = eigen::norm(&u);
        u.iter_mut().for_each(|x| *x /= un);

        // Gram-Schmidt the eigenvectors least aligned with u first.
        let mut order: Vec<&eigen::Eigenpair> = members.iter().collect();
        order.sort_by(|x, y| {
            eigen::dot(&u, &x.vector)
                .norm()
                .total_cmp(&eigen::dot(&u, &y.vector).norm())
        });
        let mut basis = vec![u];
        for p in order {
            if basis.len() == line.confined_dim + 1 {
                break;
            }
            let mut v = p.vector.clone();
            for _ in 0..2 {
                for e in &basis {
                    let c = eigen::dot(e, &v);
                    for (vi, ei) in v.iter_mut().zip(e) {
                        *vi -= ei * c;
                    }
                }
            }
            let n = eigen::norm(&v);
            if n > 1e-6 {
                v.iter_mut().for_each(|x| *x /= n);
                basis.push(v);
            }
        }
        out.extend(basis.into_iter().skip(1).map(|psi| ConfinedState {
            lambda: line.lambda,
            psi,
        }));
    }
    out
}

/// Internal amplitudes `e^{-kappa} (2 cosh kappa -+ D)^{-1} b` of the state
/// with tail `(sign e^{-kappa})^x`.
///
/// The solve runs over coupled eigenspaces only; uncoupled components are
/// zero, so an energy colliding with an uncoupled eigenvalue is harmless.
pub fn bound_amplitudes(spec: &GraphSpec, sd: &SpectralData, sign: i8, kappa: f64) -> Result<Vec<Complex>> {
    let s = f64::from(sign);
    let z = s * (-kappa).exp();
    let energy = z + 1.0 / z;
    // (E - D)^{-1} b scaled by the attachment amplitude z
    let x = sd.coupled_resolvent(spec.b(), Complex::new(energy, 0.0))?;
    Ok(x.into_iter().map(|v| v * z).collect())
}

/// Reflection coefficient and internal amplitudes of the scattering state
/// with tail `e^{-ikx} + R e^{ikx}`.
pub fn scattering_amplitudes(spec: &GraphSpec, sd: &SpectralData, k: f64) -> Result<(Complex, Vec<Complex>)> {
    let turns = k / std::f64::consts::PI;
    if (turns - turns.round()).abs() <= 1e-12 {
        return Err(Error::DegenerateMomentum { k });
    }
    let energy = 2.0 * k.cos();
    for line in sd.coupled() {
        if (energy - line.lambda).abs() <= POLE_TOL {
            return Err(Error::AtPole {
                lambda: line.lambda,
                tol: POLE_TOL,
            });
        }
    }
    let z = Complex::from_polar(1.0, k);
    let r = eval_r(spec, sd, z)?;
    let attach = z.conj() + r * z;
    let x = sd.coupled_resolvent(spec.b(), Complex::new(energy, 0.0))?;
    Ok((r, x.into_iter().map(|v| v * attach).collect()))
}

/// Amplitudes of a candidate eigenstate: `tail[x - 1]` on path vertex `x`
/// (vertex 1 is the attachment vertex) and the internal vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledState {
    pub tail: Vec<Complex>,
    pub internal: Vec<Complex>,
}

impl AssembledState {
    pub fn scattering(r: Complex, k: f64, psi: Vec<Complex>, len: usize) -> Self {
        let tail = (1..=len)
            .map(|x| Complex::from_polar(1.0, -k * x as f64) + r * Complex::from_polar(1.0, k * x as f64))
            .collect();
        AssembledState { tail, internal: psi }
    }

    pub fn evanescent(state: &EvanescentState, len: usize) -> Self {
        let tail = (1..=len).map(|x| Complex::new(state.z.powi(x as i32), 0.0)).collect();
        AssembledState {
            tail,
            internal: state.psi.clone(),
        }
    }

    pub fn confined(state: &ConfinedState, len: usize) -> Self {
        AssembledState {
            tail: vec![Complex::new(0.0, 0.0); len],
            internal: state.psi.clone(),
        }
    }
}

/// Largest `|(H s - E s)[v]|` over every vertex except the outermost tail
/// vertex, with `H` the instance plus a unit-weight tail of `state.tail.len()`
/// vertices.
pub fn eigen_residual(spec: &GraphSpec, state: &AssembledState, energy: f64) -> f64 {
    let tail = &state.tail;
    let psi = &state.internal;
    let len = tail.len();
    assert!(len >= 3, "tail must have at least 3 vertices");
    let mut worst = 0.0f64;

    let b_dot_psi: Complex = spec.b().iter().zip(psi).map(|(b, p)| b.conj() * p).sum();
    let r0 = tail[0] * spec.a() + b_dot_psi + tail[1] - tail[0] * energy;
    worst = worst.max(r0.norm());

    let dpsi = spec.d().mul_vec(psi);
    for i in 0..psi.len() {
        let r = spec.b()[i] * tail[0] + dpsi[i] - psi[i] * energy;
        worst = worst.max(r.norm());
    }
    for x in 1..len - 1 {
        let r = tail[x - 1] + tail[x + 1] - tail[x] * energy;
        worst = worst.max(r.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::spectral_decompose;
    use crate::rational::build_q_rational;

    fn setup(a: f64, b: &[f64], d: &[Vec<f64>]) -> (GraphSpec, SpectralData, QRational) {
        let spec = GraphSpec::from_real(a, b, d).unwrap();
        let sd = spectral_decompose(&spec).unwrap();
        let q = build_q_rational(&spec, &sd).unwrap();
        (spec, sd, q)
    }

    #[test]
    fn evanescent_bare_vertex() {
        let (spec, sd, q) = setup(2.0, &[], &[]);
        let states = find_evanescent(&spec, &sd, &q).unwrap();
        assert_eq!(states.len(), 1);
        let s = &states[0];
        assert_eq!(s.sign, 1);
        assert!((s.z - 0.5).abs() < 1e-15);
        assert!((s.kappa - 2f64.ln()).abs() < 1e-15);
        assert!((s.energy - 2.5).abs() < 1e-15);
        assert!(s.psi.is_empty());
    }

    #[test]
    fn evanescent_pair() {
        let (spec, sd, q) = setup(0.0, &[2.0], &[vec![0.0]]);
        let states = find_evanescent(&spec, &sd, &q).unwrap();
        assert_eq!(states.len(), 2);
        let r3 = 3f64.sqrt();
        assert_eq!((states[0].sign, states[1].sign), (-1, 1));
        for s in &states {
            assert!((s.kappa - 0.5 * 3f64.ln()).abs() < 1e-12);
            assert!((s.energy.abs() - 4.0 / r3).abs() < 1e-12);
            assert!((s.z.abs() - 1.0 / r3).abs() < 1e-12);
            let st = AssembledState::evanescent(s, DEFAULT_TAIL);
            assert!(eigen_residual(&spec, &st, s.energy) <= 1e-10);
        }
    }

    #[test]
    fn evanescent_none_when_root_outside() {
        let (spec, sd, q) = setup(0.5, &[], &[]);
        assert!(find_evanescent(&spec, &sd, &q).unwrap().is_empty());
    }

    #[test]
    fn half_bound_flags() {
        let (spec, sd, _) = setup(1.0, &[], &[]);
        assert_eq!(
            detect_half_bound(&spec, &sd),
            HalfBoundFlags {
                at_plus_one: true,
                at_minus_one: false,
                n_h: 1
            }
        );
        let (spec, sd, _) = setup(0.5, &[1.0], &[vec![0.0]]);
        let f = detect_half_bound(&spec, &sd);
        assert!(f.at_plus_one && !f.at_minus_one);
        let (spec, sd, _) = setup(-0.5, &[1.0], &[vec![0.0]]);
        let f = detect_half_bound(&spec, &sd);
        assert!(!f.at_plus_one && f.at_minus_one);
        assert_eq!(f.n_h, 1);
    }

    #[test]
    fn confined_uncoupled_eigenvector() {
        let (spec, sd, _) = setup(0.0, &[2.0, 0.0], &[vec![0.0, 0.0], vec![0.0, 5.0]]);
        let c = count_confined(&sd, spec.b());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].lambda, 5.0);
        assert!((c[0].psi[1].norm() - 1.0).abs() < 1e-14);
        assert!(c[0].psi[0].norm() < 1e-14);
    }

    #[test]
    fn confined_inside_degenerate_eigenspace() {
        let (spec, sd, _) = setup(0.0, &[2.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let c = count_confined(&sd, spec.b());
        assert_eq!(c.len(), 1);
        assert!((c[0].lambda - 1.0).abs() < 1e-14);
        assert!(c[0].psi[0].norm() < 1e-12);
        assert!((c[0].psi[1].norm() - 1.0).abs() < 1e-12);
        for len in [3, 10, 50] {
            let st = AssembledState::confined(&c[0], len);
            assert!(eigen_residual(&spec, &st, c[0].lambda) <= 1e-12);
        }
    }

    #[test]
    fn confined_none_for_simple_coupled_spectrum() {
        let (spec, sd, _) = setup(0.1, &[1.0, 1.0], &[vec![0.0, 1.0], vec![1.0, 3.0]]);
        assert!(count_confined(&sd, spec.b()).is_empty());
    }

    #[test]
    fn bound_amplitudes_single_vertex() {
        let (spec, sd, _) = setup(2.0, &[], &[]);
        assert!(bound_amplitudes(&spec, &sd, 1, 2f64.ln()).unwrap().is_empty());

        let (spec, sd, _) = setup(0.0, &[2.0], &[vec![0.0]]);
        let kappa = 0.5 * 3f64.ln();
        let plus = bound_amplitudes(&spec, &sd, 1, kappa).unwrap();
        assert!((plus[0] - Complex::new(0.5, 0.0)).norm() < 1e-14);
        // The internal equation b z + D psi = E psi gives psi = z b / E, and
        // z and E flip sign together, so the amplitude stays +1/2.
        let minus = bound_amplitudes(&spec, &sd, -1, kappa).unwrap();
        assert!((minus[0] - Complex::new(0.5, 0.0)).norm() < 1e-14);
        let z = -(-kappa).exp();
        let state = EvanescentState {
            sign: -1,
            kappa,
            z,
            energy: z + 1.0 / z,
            psi: minus,
        };
        assert!(eigen_residual(&spec, &AssembledState::evanescent(&state, 50), state.energy) < 1e-12);
    }

    #[test]
    fn scattering_bare_vertex() {
        let (spec, sd, _) = setup(0.0, &[], &[]);
        for k in [0.3, 1.0, -2.0] {
            let (r, psi) = scattering_amplitudes(&spec, &sd, k).unwrap();
            assert!((r + 1.0).norm() < 1e-15);
            assert!(psi.is_empty());
        }
        let (spec, sd, _) = setup(2.0, &[], &[]);
        let (r, _) = scattering_amplitudes(&spec, &sd, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((r - Complex::new(0.6, -0.8)).norm() < 1e-14);
    }

    #[test]
    fn scattering_at_pole_of_resolvent() {
        let (spec, sd, _) = setup(0.0, &[2.0], &[vec![0.0]]);
        let k = std::f64::consts::FRAC_PI_2;
        assert!(matches!(
            scattering_amplitudes(&spec, &sd, k),
            Err(Error::AtPole { .. })
        ));
        // R itself is regular there: R(i) = 1.
        let r = eval_r(&spec, &sd, Complex::new(0.0, 1.0)).unwrap();
        assert!((r - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(
            scattering_amplitudes(&spec, &sd, 0.0),
            Err(Error::DegenerateMomentum { .. })
        ));
        assert!(matches!(
            scattering_amplitudes(&spec, &sd, std::f64::consts::PI),
            Err(Error::DegenerateMomentum { .. })
        ));
    }

    #[test]
    fn scattering_state_residual() {
        let (spec, sd, _) = setup(0.3, &[1.0, -0.5], &[vec![0.2, 1.0], vec![1.0, -1.4]]);
        for k in [0.2, 1.1, 2.5, -0.7] {
            let (r, psi) = scattering_amplitudes(&spec, &sd, k).unwrap();
            let st = AssembledState::scattering(r, k, psi, 50);
            assert!(eigen_residual(&spec, &st, 2.0 * k.cos()) <= 1e-10);
        }
    }

    #[test]
    fn residual_detects_perturbation() {
        let (spec, sd, _) = setup(0.3, &[1.0, -0.5], &[vec![0.2, 1.0], vec![1.0, -1.4]]);
        let k = 0.9;
        let (r, mut psi) = scattering_amplitudes(&spec, &sd, k).unwrap();
        psi[0] += 0.01;
        let st = AssembledState::scattering(r, k, psi, 50);
        assert!(eigen_residual(&spec, &st, 2.0 * k.cos()) > 1e-4);
    }
}
