//! Winding number of `R(e^{ik})` by adaptive phase tracking over `k`.
//!
//! Independent of zero/pole counting: `R` is sampled on a uniform momentum
//! grid, any step whose principal phase increment reaches `pi/2` is bisected,
//! and the increments are summed around the circle.
//!
//! A full turn completed between two samples shows up as a near-zero
//! increment, so a step is also bisected unless a Taylor bound certifies that
//! neither the numerator nor the denominator of `R` can turn by `pi/8` inside
//! it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::{QRational, ReflectionForm};
use crate::Complex;

pub const MAX_DEPTH: u32 = 24;
const REFINE_THRESHOLD: f64 = PI / 2.0;
const INTEGER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSample {
    pub k: f64,
    /// Unwrapped phase of `R(e^{ik})`.
    pub phase: f64,
    pub r: Complex,
    /// Whether `k` is a point of the initial uniform grid.
    pub on_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTrace {
    /// Samples with `k` in `[-pi, pi)`, in increasing `k`.
    pub samples: Vec<PhaseSample>,
    pub total_change: f64,
    pub winding: i64,
}

/// Tracks the phase of `R` once around the unit circle starting at `k = -pi`.
pub fn winding_by_phase_tracking(q: &QRational, n_initial: usize) -> Result<(i64, PhaseTrace)> {
    track(&ReflectionForm::from_q(q).reduced(), n_initial)
}

/// Phase tracking on any evaluable reflection form.
pub fn track(form: &ReflectionForm, n_initial: usize) -> Result<(i64, PhaseTrace)> {
    if n_initial < 16 {
        return Err(Error::InvalidArgument(format!(
            "n_initial must be at least 16, got {n_initial}"
        )));
    }
    let guard = AliasGuard::new(form);
    let eval = |k: f64| form.eval(Complex::from_polar(1.0, k));
    let grid: Vec<f64> = (0..n_initial)
        .map(|j| -PI + 2.0 * PI * j as f64 / n_initial as f64)
        .collect();
    let values = grid.iter().map(|&k| eval(k)).collect::<Result<Vec<_>>>()?;

    let mut samples = vec![PhaseSample {
        k: grid[0],
        phase: values[0].arg(),
        r: values[0],
        on_grid: true,
    }];
    let mut phase = values[0].arg();
    for j in 0..n_initial {
        let (k0, r0) = (grid[j], values[j]);
        // The closing step returns to k = -pi, reusing its value exactly.
        let (k1, r1, closing) = if j + 1 < n_initial {
            (grid[j + 1], values[j + 1], false)
        } else {
            (PI, values[0], true)
        };
        refine(&eval, &guard, k0, r0, k1, r1, 0, &mut phase, &mut samples)?;
        if closing {
            samples.pop();
        } else if let Some(last) = samples.last_mut() {
            last.on_grid = true;
        }
    }

    let total_change = phase - values[0].arg();
    let turns = total_change / (2.0 * PI);
    let winding = turns.round();
    if (turns - winding).abs() > INTEGER_TOL {
        return Err(Error::NonIntegerWinding { turns });
    }
    Ok((
        winding as i64,
        PhaseTrace {
            samples,
            total_change,
            winding: winding as i64,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    eval: &F,
    guard: &AliasGuard,
    k0: f64,
    r0: Complex,
    k1: f64,
    r1: Complex,
    depth: u32,
    phase: &mut f64,
    samples: &mut Vec<PhaseSample>,
) -> Result<()>
where
    F: Fn(f64) -> Result<Complex>,
{
    let step = (r1 / r0).arg();
    if step.abs() < REFINE_THRESHOLD && guard.certifies(k0, k1 - k0) {
        *phase += step;
        samples.push(PhaseSample {
            k: k1,
            phase: *phase,
            r: r1,
            on_grid: false,
        });
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::RefinementExhausted {
            depth,
            k: 0.5 * (k0 + k1),
        });
    }
    let km = 0.5 * (k0 + k1);
    let rm = eval(km)?;
    refine(eval, guard, k0, r0, km, rm, depth + 1, phase, samples)?;
    refine(eval, guard, km, rm, k1, r1, depth + 1, phase, samples)
}

/// Bounds the phase change of `p(e^{ik})` over `[k0, k0 + h]`.
///
/// `|p(k) - p(k0)| <= |p'(k0)| h + M2 h^2 / 2` with `M2 = sum j^2 |c_j|`
/// bounding the second `k`-derivative; if that stays below
/// `|p(k0)| sin(pi/8)` the phase of `p` moves by less than `pi/8`.
struct AliasGuard {
    parts: Vec<(Polynomial, Polynomial, f64)>,
    exponent: f64,
}

impl AliasGuard {
    fn new(form: &ReflectionForm) -> Self {
        let part = |p: &Polynomial| {
            let m2 = p
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, c)| (j * j) as f64 * c.abs())
                .sum();
            (p.clone(), p.derivative(), m2)
        };
        AliasGuard {
            parts: vec![part(&form.num), part(&form.den)],
            exponent: f64::from(form.exponent),
        }
    }

    fn certifies(&self, k0: f64, h: f64) -> bool {
        let z = Complex::from_polar(1.0, k0);
        let budget = (PI / 8.0).sin();
        // The monomial z^s turns by |s| h.
        self.exponent.abs() * h < PI / 8.0
            && self.parts.iter().all(|(p, dp, m2)| {
                let dk = (Complex::i() * z * dp.eval(z)).norm();
                dk * h + 0.5 * m2 * h * h < p.eval(z).norm() * budget
            })
    }
}
