//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian input.

use crate::error::{Error, Result};
use crate::Complex;

/// Square dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(CMatrix { n, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, 0.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<Complex>> {
        self.data
            .chunks(self.n.max(1))
            .take(self.n)
            .map(<[Complex]>::to_vec)
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|M[i][j] - conj(M[j][i])|` and the pair where it occurs.
    pub fn hermitian_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect()
    }

    /// `U^H M U` for a square `U` given by columns.
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        assert_eq!(u.n, self.n);
        let n = self.n;
        let mut mu = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                mu[(i, j)] = (0..n).map(|k| self[(i, k)] * u[(k, j)]).sum();
            }
        }
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| u[(k, i)].conj() * mu[(k, j)]).sum();
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<Complex>,
}

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Pairs come back sorted by ascending eigenvalue. Each eigenvector is unit
/// norm with its first component of modulus above `1e-8` made real positive.
pub fn hermitian_eigensystem(m: &CMatrix) -> Result<Vec<Eigenpair>> {
    let n = m.n();
    let mut a = m.clone();
    // Symmetrize so rounding in the input cannot leak into the rotations.
    for i in 0..n {
        a[(i, i)] = Complex::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);

    let scale: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= 1e-30 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            what: "Jacobi eigensolver",
            iterations: MAX_SWEEPS,
        });
    }

    let mut pairs: Vec<Eigenpair> = (0..n)
        .map(|j| {
            let mut vector: Vec<Complex> = (0..n).map(|i| v[(i, j)]).collect();
            fix_phase(&mut vector);
            Eigenpair {
                value: a[(j, j)].re,
                vector,
            }
        })
        .collect();
    pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(pairs)
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let g_abs = g.norm();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if g_abs == 0.0 || g_abs <= 1e-18 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex::new(0.0, 0.0);
        a[(q, p)] = Complex::new(0.0, 0.0);
        return;
    }
    let phase = g / g_abs;
    let theta = (aqq - app) / (2.0 * g_abs);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.n();

    // A <- A J, V <- V J with J = [[c, s e], [-s conj(e), c]] on (p, q).
    for r in 0..n {
        let (arp, arq) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = arp * c - phase.conj() * arq * s;
        a[(r, q)] = phase * arp * s + arq * c;
        let (vrp, vrq) = (v[(r, p)], v[(r, q)]);
        v[(r, p)] = vrp * c - phase.conj() * vrq * s;
        v[(r, q)] = phase * vrp * s + vrq * c;
    }
    // A <- J^H A
    for col in 0..n {
        let (apc, aqc) = (a[(p, col)], a[(q, col)]);
        a[(p, col)] = apc * c - phase * aqc * s;
        a[(q, col)] = phase.conj() * apc * s + aqc * c;
    }
    a[(p, q)] = Complex::new(0.0, 0.0);
    a[(q, p)] = Complex::new(0.0, 0.0);
    a[(p, p)] = Complex::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex::new(a[(q, q)].re, 0.0);
}

fn fix_phase(v: &mut [Complex]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let lead = v.iter().copied().find(|z| z.norm() > 1e-8 * norm);
    let rot = match lead {
        Some(z) => z.conj() / (z.norm() * norm),
        None => Complex::new(1.0 / norm, 0.0),
    };
    for z in v.iter_mut() {
        *z *= rot;
    }
}

pub fn dot(u: &[Complex], v: &[Complex]) -> Complex {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = c(rng.random_range(-3.0..3.0), 0.0);
            for j in i + 1..n {
                let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn diagonal_input() {
        let pairs = hermitian_eigensystem(&CMatrix::from_real_diagonal(&[5.0, 0.0])).unwrap();
        assert_eq!(pairs[0].value, 0.0);
        assert_eq!(pairs[1].value, 5.0);
        assert_eq!(pairs[0].vector, vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(pairs[1].vector, vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn swap_matrix() {
        let m = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let pairs = hermitian_eigensystem(&m).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pairs[0].value + 1.0).abs() < 1e-14);
        assert!((pairs[1].value - 1.0).abs() < 1e-14);
        assert!((pairs[0].vector[0] - c(r, 0.0)).norm() < 1e-14);
        assert!((pairs[0].vector[1] - c(-r, 0.0)).norm() < 1e-14);
        assert!((pairs[1].vector[0] - c(r, 0.0)).norm() < 1e-14);
        assert!((pairs[1].vector[1] - c(r, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn complex_two_by_two() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(1.0, 0.0)]]).unwrap();
        let pairs = hermitian_eigensystem(&m).unwrap();
        assert!(pairs[0].value.abs() < 1e-14);
        assert!((pairs[1].value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_and_scalar() {
        assert!(hermitian_eigensystem(&CMatrix::zeros(0)).unwrap().is_empty());
        let p = hermitian_eigensystem(&CMatrix::from_real_diagonal(&[-2.5])).unwrap();
        assert_eq!(p[0].value, -2.5);
        assert_eq!(p[0].vector, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 0..20 {
            let n = 6;
            let m = random_hermitian(n, seed);
            let pairs = hermitian_eigensystem(&m).unwrap();
            let scale = 1.0 + m.max_abs() * n as f64;
            for p in &pairs {
                let mv = m.mul_vec(&p.vector);
                let res: f64 = mv
                    .iter()
                    .zip(&p.vector)
                    .map(|(a, b)| (a - b * p.value).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-10 * scale, "residual {res}");
            }
            for (i, p) in pairs.iter().enumerate() {
                for (j, q) in pairs.iter().enumerate() {
                    let d = dot(&p.vector, &q.vector);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d - c(want, 0.0)).norm() < 1e-10);
                }
            }
            // M = sum lambda v v^H
            for i in 0..n {
                for j in 0..n {
                    let s: Complex = pairs.iter().map(|p| p.vector[i] * p.vector[j].conj() * p.value).sum();
                    assert!((s - m[(i, j)]).norm() < 1e-10);
                }
            }
            assert!(pairs.windows(2).all(|w| w[0].value <= w[1].value));
        }
    }
}
