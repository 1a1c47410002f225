//! Validated scattering instances, their spectral data and pointwise
//! evaluators for `C(z)`, `Q(z)` and `R(z)`.
//!
//! The instance is the block adjacency matrix `[[a, b^H], [b, D]]` of an
//! `(m+1)`-vertex graph whose first vertex carries the semi-infinite path.

use std::ops::Range;

use crate::eigen::{self, CMatrix, Eigenpair};
use crate::error::{Error, Result};
use crate::rational::ReflectionForm;
use crate::Complex;

/// Distance of `z + 1/z` from a coupled eigenvalue below which the pointwise
/// evaluators refuse to answer.
pub const POLE_TOL: f64 = 1e-12;

/// Both `|Q(z)|` and `|Q(1/z)|` below this switch [`eval_r`] to the reduced
/// rational form.
pub const EVAL_TOL: f64 = 1e-9;

pub fn hermiticity_tol(max_abs_entry: f64) -> f64 {
    1e-9 * (1.0 + max_abs_entry)
}

pub fn cluster_tol(spectral_radius: f64) -> f64 {
    1e-8 * (1.0 + spectral_radius)
}

pub fn coupling_tol(b_norm: f64) -> f64 {
    1e-9 * (1.0 + b_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    a: f64,
    b: Vec<Complex>,
    d: CMatrix,
}

impl GraphSpec {
    /// Splits and validates a full `(m+1) x (m+1)` adjacency matrix.
    pub fn validate(raw: &CMatrix) -> Result<Self> {
        let n = raw.n();
        if n == 0 {
            return Err(Error::Empty);
        }
        for i in 0..n {
            for j in 0..n {
                let z = raw[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
            }
        }
        let tol = hermiticity_tol(raw.max_abs());
        let a = raw[(0, 0)];
        if a.im.abs() > tol {
            return Err(Error::NonRealSelfLoop { im: a.im });
        }
        let (asymmetry, i, j) = raw.hermitian_defect();
        if asymmetry > tol {
            return Err(Error::NonHermitian { i, j, asymmetry, tol });
        }
        let m = n - 1;
        let b = (1..n).map(|i| raw[(i, 0)]).collect();
        let mut d = CMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                d[(i, j)] = raw[(i + 1, j + 1)];
            }
        }
        Ok(GraphSpec { a: a.re, b, d })
    }

    /// Assembles `[[a, b^H], [b, D]]` and validates it.
    pub fn from_parts(a: f64, b: Vec<Complex>, d: CMatrix) -> Result<Self> {
        let m = b.len();
        if d.n() != m {
            return Err(Error::InvalidArgument(format!(
                "b has {m} entries but D is {0}x{0}",
                d.n()
            )));
        }
        Self::validate(&assemble(a, &b, &d))
    }

    /// Real-weight convenience constructor.
    pub fn from_real(a: f64, b: &[f64], d: &[Vec<f64>]) -> Result<Self> {
        let b = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
        let rows: Vec<Vec<Complex>> = d
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(x, 0.0)).collect())
            .collect();
        Self::from_parts(a, b, CMatrix::from_rows(&rows)?)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> &[Complex] {
        &self.b
    }

    pub fn d(&self) -> &CMatrix {
        &self.d
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn b_norm(&self) -> f64 {
        eigen::norm(&self.b)
    }

    /// Full adjacency matrix of the finite graph.
    pub fn adjacency(&self) -> CMatrix {
        assemble(self.a, &self.b, &self.d)
    }

    /// The excluded case `a = 0`, `|b| = 1`, judged at `tol`.
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.a.abs() <= tol && (self.b_norm() - 1.0).abs() <= tol
    }
}

fn assemble(a: f64, b: &[Complex], d: &CMatrix) -> CMatrix {
    let m = b.len();
    let mut raw = CMatrix::zeros(m + 1);
    raw[(0, 0)] = Complex::new(a, 0.0);
    for i in 0..m {
        raw[(i + 1, 0)] = b[i];
        raw[(0, i + 1)] = b[i].conj();
        for j in 0..m {
            raw[(i + 1, j + 1)] = d[(i, j)];
        }
    }
    raw
}

/// One distinct eigenvalue of `D` after clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLine {
    pub lambda: f64,
    pub multiplicity: usize,
    /// `|P_lambda b|^2`
    pub weight: f64,
    pub coupled: bool,
    pub confined_dim: usize,
    /// Indices of this line's eigenvectors in [`SpectralData::eigenbasis`].
    pub members: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub lines: Vec<SpectralLine>,
    pub m_bar: usize,
    pub eigenbasis: Vec<Eigenpair>,
    pub b_norm: f64,
}

impl SpectralData {
    pub fn coupled(&self) -> impl Iterator<Item = &SpectralLine> {
        self.lines.iter().filter(|l| l.coupled)
    }

    pub fn n_confined(&self) -> usize {
        self.lines.iter().map(|l| l.confined_dim).sum()
    }

    /// `(E - D)^{-1} b` restricted to the coupled eigenspaces.
    pub fn coupled_resolvent(&self, b: &[Complex], energy: Complex) -> Result<Vec<Complex>> {
        let mut out = vec![Complex::new(0.0, 0.0); b.len()];
        for line in self.coupled() {
            let gap = energy - line.lambda;
            if gap.norm() <= POLE_TOL {
                return Err(Error::SingularSolve { energy: energy.re });
            }
            for pair in &self.eigenbasis[line.members.clone()] {
                let coef = eigen::dot(&pair.vector, b) / gap;
                for (o, v) in out.iter_mut().zip(&pair.vector) {
                    *o += v * coef;
                }
            }
        }
        Ok(out)
    }
}

/// Clusters the eigenvalues of `D` and measures how strongly each eigenspace
/// couples to the attachment vertex.
pub fn spectral_decompose(spec: &GraphSpec) -> Result<SpectralData> {
    let pairs = eigen::hermitian_eigensystem(spec.d())?;
    let radius = pairs.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    let ctol = cluster_tol(radius);
    let b_norm = spec.b_norm();
    let btol = coupling_tol(b_norm);

    let mut lines = Vec::new();
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].value - pairs[end - 1].value <= ctol {
            end += 1;
        }
        let members = start..end;
        let multiplicity = end - start;
        let lambda = pairs[members.clone()].iter().map(|p| p.value).sum::<f64>() / multiplicity as f64;
        let weight: f64 = pairs[members.clone()]
            .iter()
            .map(|p| eigen::dot(&p.vector, spec.b()).norm_sqr())
            .sum();
        let coupled = weight.sqrt() > btol;
        lines.push(SpectralLine {
            lambda,
            multiplicity,
            weight,
            coupled,
            confined_dim: if coupled { multiplicity - 1 } else { multiplicity },
            members,
        });
        start = end;
    }
    Ok(SpectralData {
        m_bar: lines.len(),
        lines,
        eigenbasis: pairs,
        b_norm,
    })
}

/// `C(z) = sum over coupled lines of weight / (z + 1/z - lambda)`.
pub fn eval_c(sd: &SpectralData, z: Complex) -> Result<Complex> {
    if z == Complex::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    let s = z + z.inv();
    let mut acc = Complex::new(0.0, 0.0);
    for line in sd.coupled() {
        let gap = s - line.lambda;
        if gap.norm() <= POLE_TOL {
            return Err(Error::AtPole {
                lambda: line.lambda,
                tol: POLE_TOL,
            });
        }
        acc += line.weight / gap;
    }
    Ok(acc)
}

/// `Q(z) = 1 - z (a + C(z))`, with `Q(0) = 1`.
pub fn eval_q(spec: &GraphSpec, sd: &SpectralData, z: Complex) -> Result<Complex> {
    if z == Complex::new(0.0, 0.0) {
        return Ok(Complex::new(1.0, 0.0));
    }
    Ok(1.0 - z * (spec.a() + eval_c(sd, z)?))
}

/// `R(z) = -Q(1/z) / Q(z)`.
///
/// Falls back to the reduced rational form when the direct quotient is
/// undefined: at poles of `C`, and at the removable `0/0` of a half-bound
/// point.
pub fn eval_r(spec: &GraphSpec, sd: &SpectralData, z: Complex) -> Result<Complex> {
    if z == Complex::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    let direct = eval_q(spec, sd, z.inv()).and_then(|num| Ok((num, eval_q(spec, sd, z)?)));
    match direct {
        Ok((num, den)) if den.norm() > EVAL_TOL => Ok(-num / den),
        Ok((num, _)) if num.norm() > EVAL_TOL => Err(Error::AtTruePole { re: z.re, im: z.im }),
        _ => ReflectionForm::from_spectral(spec, sd).reduced().eval(z),
    }
}
