//! Levinson identity `w = 2(m - n_b - n_c) - n_h`: degenerate reduction,
//! census, verification, fuzz instances and the truncated-lattice oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{self, CMatrix};
use crate::error::{Error, Result};
use crate::graph::{eval_c, spectral_decompose, GraphSpec, SpectralData};
use crate::rational::{build_q_rational, build_r_rational, winding_by_argument_principle, QRational, DEGENERACY_TOL};
use crate::spectra::{count_confined, detect_half_bound, find_evanescent, BoundStateCensus};
use crate::winding::winding_by_phase_tracking;
use crate::Complex;

/// Initial phase-tracking grid used by [`verify`].
pub const DEFAULT_GRID: usize = 256;

/// Peels the attachment vertex into the tail while `a = 0` and `|b| = 1`.
pub fn reduce_degenerate(spec: &GraphSpec) -> GraphSpec {
    reduce_degenerate_counted(spec).0
}

/// As [`reduce_degenerate`], also returning the number of peeled vertices.
///
/// Each peel changes basis on the internal vertices so that `b` becomes the
/// first coordinate vector, then treats that vertex as the new attachment
/// vertex: `a' = D'[0][0]`, `b' = D'[1..][0]`, `D'' = D'[1..][1..]`.
pub fn reduce_degenerate_counted(spec: &GraphSpec) -> (GraphSpec, usize) {
    let mut current = spec.clone();
    let mut peels = 0;
    while current.m() >= 1 && current.is_degenerate(DEGENERACY_TOL) {
        let q = basis_with_first_column(current.b());
        let rotated = current.d().conjugate_by(&q);
        let m = current.m();
        let a = rotated[(0, 0)].re;
        let b: Vec<Complex> = (1..m).map(|i| rotated[(i, 0)]).collect();
        let mut d = CMatrix::zeros(m - 1);
        for i in 1..m {
            for j in 1..m {
                d[(i - 1, j - 1)] = rotated[(i, j)];
            }
        }
        current = GraphSpec::from_parts(a, b, d).expect("unitary conjugation preserves Hermiticity");
        peels += 1;
    }
    (current, peels)
}

/// Unitary `Q` whose first column is `v / |v|`, as a phase-fixed Householder
/// reflection.
fn basis_with_first_column(v: &[Complex]) -> CMatrix {
    let n = v.len();
    let norm = eigen::norm(v);
    let u: Vec<Complex> = v.iter().map(|x| x / norm).collect();
    let phase = if u[0].norm() > 0.0 {
        u[0] / u[0].norm()
    } else {
        Complex::new(1.0, 0.0)
    };
    // P u = phase e1 for w = u - phase e1, so Q = P diag(phase, 1, ..., 1).
    let mut w = u.clone();
    w[0] -= phase;
    let wn2: f64 = w.iter().map(|x| x.norm_sqr()).sum();
    let mut p = CMatrix::identity(n);
    if wn2 > 1e-30 {
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] -= w[i] * w[j].conj() * (2.0 / wn2);
            }
        }
    }
    for i in 0..n {
        p[(i, 0)] *= phase;
    }
    p
}

/// Full bound-state census of a non-degenerate instance.
pub fn classify(spec: &GraphSpec) -> Result<BoundStateCensus> {
    let sd = spectral_decompose(spec)?;
    let q = build_q_rational(spec, &sd)?;
    census_from_parts(spec, &sd, &q)
}

fn census_from_parts(spec: &GraphSpec, sd: &SpectralData, q: &QRational) -> Result<BoundStateCensus> {
    let evanescent = find_evanescent(spec, sd, q)?;
    let half_bound = detect_half_bound(spec, sd);
    let confined = count_confined(sd, spec.b());
    Ok(BoundStateCensus {
        m: spec.m(),
        n_b: evanescent.len(),
        n_h: half_bound.n_h,
        n_c: confined.len(),
        evanescent,
        half_bound,
        confined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CensusCounts {
    pub m: usize,
    pub n_b: usize,
    pub n_h: usize,
    pub n_c: usize,
}

impl From<&BoundStateCensus> for CensusCounts {
    fn from(c: &BoundStateCensus) -> Self {
        CensusCounts {
            m: c.m,
            n_b: c.n_b,
            n_h: c.n_h,
            n_c: c.n_c,
        }
    }
}

impl CensusCounts {
    /// `2(m - n_b - n_c - n_h / 2)`
    pub fn rhs(&self) -> i64 {
        2 * (self.m as i64 - self.n_b as i64 - self.n_c as i64) - self.n_h as i64
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub n_initial: usize,
    /// Replaces the computed counts before the identity is checked; exercises
    /// the violation path.
    pub census_override: Option<CensusCounts>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_initial: DEFAULT_GRID,
            census_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub original_m: usize,
    pub reduced: bool,
    pub peels: usize,
    pub counts: Option<CensusCounts>,
    pub census: Option<BoundStateCensus>,
    pub w_phase: Option<i64>,
    pub w_roots: Option<i64>,
    pub rhs: Option<i64>,
    pub holds: bool,
    /// Some step reported a numerically ambiguous instance.
    pub ambiguous: bool,
    pub diagnostics: Vec<String>,
}

pub fn verify(spec: &GraphSpec) -> VerificationReport {
    verify_with(spec, &VerifyOptions::default())
}

/// Checks the identity on `spec`, reducing it first if it is degenerate.
/// Failures land in `diagnostics`; nothing is rounded.
pub fn verify_with(spec: &GraphSpec, opts: &VerifyOptions) -> VerificationReport {
    let (reduced_spec, peels) = reduce_degenerate_counted(spec);
    let mut report = VerificationReport {
        original_m: spec.m(),
        reduced: peels > 0,
        peels,
        counts: None,
        census: None,
        w_phase: None,
        w_roots: None,
        rhs: None,
        holds: false,
        ambiguous: false,
        diagnostics: Vec::new(),
    };
    let note = |report: &mut VerificationReport, what: &str, e: Error| {
        report.ambiguous |= e.is_ambiguity();
        report.diagnostics.push(format!("{what}: {e}"));
    };

    let sd = match spectral_decompose(&reduced_spec) {
        Ok(sd) => sd,
        Err(e) => {
            note(&mut report, "spectral decomposition", e);
            return report;
        }
    };
    let q = match build_q_rational(&reduced_spec, &sd) {
        Ok(q) => q,
        Err(e) => {
            note(&mut report, "rational form", e);
            return report;
        }
    };
    if let Err(e) = build_r_rational(&q) {
        note(&mut report, "reflection form", e);
    }

    match census_from_parts(&reduced_spec, &sd, &q) {
        Ok(c) => {
            report.counts = Some(CensusCounts::from(&c));
            report.census = Some(c);
        }
        Err(e) => note(&mut report, "census", e),
    }
    if let Some(over) = opts.census_override {
        report.diagnostics.push("census counts overridden".into());
        report.counts = Some(over);
    }

    match winding_by_argument_principle(&q) {
        Ok(w) => {
            report.w_roots = Some(w.winding);
            let inside = w.poles_inside - usize::from(q.has_self_loop());
            if let Some(c) = &report.census {
                if inside != c.n_b {
                    report.diagnostics.push(format!(
                        "{inside} roots of J inside the disk but {} evanescent states",
                        c.n_b
                    ));
                }
            }
        }
        Err(e) => note(&mut report, "argument principle", e),
    }
    match winding_by_phase_tracking(&q, opts.n_initial) {
        Ok((w, _)) => report.w_phase = Some(w),
        Err(e) => note(&mut report, "phase tracking", e),
    }

    report.rhs = report.counts.map(|c| c.rhs());
    report.holds = match (report.w_phase, report.w_roots, report.rhs) {
        (Some(p), Some(r), Some(rhs)) => p == r && r == rhs,
        _ => false,
    };
    if !report.holds && report.diagnostics.is_empty() {
        report.diagnostics.push(format!(
            "identity violated: w_phase = {:?}, w_roots = {:?}, rhs = {:?}",
            report.w_phase, report.w_roots, report.rhs
        ));
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOptions {
    pub force_half_bound: bool,
    pub force_confined: bool,
    pub weight_scale: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions {
            force_half_bound: false,
            force_confined: false,
            weight_scale: 1.0,
        }
    }
}

/// Forced half-bound draws need every eigenvalue of `D` this far from `+2`.
pub const HALF_BOUND_EDGE_GAP: f64 = 0.05;

fn draw(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let backbone = rng.random_range(-3i32..=3) as f64;
    scale * (backbone + 1e-2 * rng.random_range(-1.0..1.0))
}

/// Deterministic random instance with `m` internal vertices.
///
/// Weights sit on the integer grid `{-3..3}` plus `1e-2` uniform jitter,
/// times `weight_scale`; off-diagonal weights are complex.
pub fn random_instance(seed: u64, m: usize, opts: &InstanceOptions) -> GraphSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(spec) = try_instance(&mut rng, m, opts) {
            return spec;
        }
    }
}

fn try_instance(rng: &mut ChaCha8Rng, m: usize, opts: &InstanceOptions) -> Option<GraphSpec> {
    let s = opts.weight_scale;
    let mut a = draw(rng, s);
    let mut b: Vec<Complex> = (0..m).map(|_| Complex::new(draw(rng, s), draw(rng, s))).collect();
    let mut d = CMatrix::zeros(m);
    for i in 0..m {
        d[(i, i)] = Complex::new(draw(rng, s), 0.0);
        for j in i + 1..m {
            let z = Complex::new(draw(rng, s), draw(rng, s));
            d[(i, j)] = z;
            d[(j, i)] = z.conj();
        }
    }

    if opts.force_confined && m > 0 {
        let pairs = eigen::hermitian_eigensystem(&d).ok()?;
        let v = &pairs[rng.random_range(0..m)].vector;
        let c = eigen::dot(v, &b);
        for (bi, vi) in b.iter_mut().zip(v) {
            *bi -= vi * c;
        }
    }
    if opts.force_half_bound {
        let spec = GraphSpec::from_parts(0.0, b.clone(), d.clone()).ok()?;
        let sd = spectral_decompose(&spec).ok()?;
        // C(1) is near-singular when D has an eigenvalue close to the band
        // edge, which pushes a second root of J onto z = 1.
        if sd.lines.iter().any(|l| (l.lambda - 2.0).abs() < HALF_BOUND_EDGE_GAP) {
            return None;
        }
        // Q(1) = 1 - (a + C(1)) = 0
        let c1 = eval_c(&sd, Complex::new(1.0, 0.0)).ok()?;
        a = 1.0 - c1.re;
    }
    let spec = GraphSpec::from_parts(a, b, d).ok()?;
    if spec.is_degenerate(DEGENERACY_TOL) {
        return None;
    }
    Some(spec)
}

/// Spectrum of the instance with its tail cut after `tail_len` further
/// vertices, ascending.
pub fn truncated_oracle(spec: &GraphSpec, tail_len: usize) -> Result<Vec<f64>> {
    if tail_len < 10 {
        return Err(Error::InvalidArgument(format!(
            "tail length must be at least 10, got {tail_len}"
        )));
    }
    let m = spec.m();
    let n = m + 1 + tail_len;
    let mut h = CMatrix::zeros(n);
    let adj = spec.adjacency();
    for i in 0..=m {
        for j in 0..=m {
            h[(i, j)] = adj[(i, j)];
        }
    }
    // attachment vertex (index 0) -> first tail vertex (index m + 1) -> ...
    let one = Complex::new(1.0, 0.0);
    let mut prev = 0;
    for t in 0..tail_len {
        let cur = m + 1 + t;
        h[(prev, cur)] = one;
        h[(cur, prev)] = one;
        prev = cur;
    }
    Ok(eigen::hermitian_eigensystem(&h)?.into_iter().map(|p| p.value).collect())
}

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub count: usize,
    pub seed: u64,
    pub max_m: usize,
    pub options: InstanceOptions,
    pub n_initial: usize,
}

impl FuzzConfig {
    pub fn new(count: usize, seed: u64, max_m: usize) -> Self {
        FuzzConfig {
            count,
            seed,
            max_m,
            options: InstanceOptions::default(),
            n_initial: DEFAULT_GRID,
        }
    }

    /// Seed and internal vertex count of instance `index`; `m` ranges over
    /// `1..=max_m` (just `0` when `max_m = 0`).
    pub fn instance_params(&self, index: usize) -> (u64, usize) {
        let seed = splitmix64(self.seed ^ splitmix64(index as u64));
        let m = if self.max_m == 0 {
            0
        } else {
            1 + (splitmix64(seed) % self.max_m as u64) as usize
        };
        (seed, m)
    }

    pub fn instance(&self, index: usize) -> GraphSpec {
        let (seed, m) = self.instance_params(index);
        random_instance(seed, m, &self.options)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzSummary {
    pub total: usize,
    pub held: usize,
    pub violated: usize,
    pub flagged: usize,
    /// Index and diagnostics of every instance that did not hold.
    pub failures: Vec<(usize, Vec<String>)>,
}

/// Verifies `config.count` generated instances in parallel. Results are
/// collected in index order, so the summary depends only on the config.
pub fn fuzz(config: &FuzzConfig) -> (FuzzSummary, Vec<VerificationReport>) {
    let opts = VerifyOptions {
        n_initial: config.n_initial,
        census_override: None,
    };
    let reports: Vec<VerificationReport> = (0..config.count)
        .into_par_iter()
        .map(|i| verify_with(&config.instance(i), &opts))
        .collect();
    let mut summary = FuzzSummary {
        total: reports.len(),
        held: 0,
        violated: 0,
        flagged: 0,
        failures: Vec::new(),
    };
    for (i, r) in reports.iter().enumerate() {
        if r.holds {
            summary.held += 1;
        } else {
            if r.ambiguous {
                summary.flagged += 1;
            } else {
                summary.violated += 1;
            }
            summary.failures.push((i, r.diagnostics.clone()));
        }
    }
    (summary, reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(a: f64, b: &[f64], d: &[Vec<f64>]) -> GraphSpec {
        GraphSpec::from_real(a, b, d).unwrap()
    }

    fn counts(c: &BoundStateCensus) -> (usize, usize, usize, usize) {
        (c.m, c.n_b, c.n_h, c.n_c)
    }

    #[test]
    fn reduce_single_vertex_to_bare_path() {
        let (r, peels) = reduce_degenerate_counted(&real(0.0, &[1.0], &[vec![0.0]]));
        assert_eq!(peels, 1);
        assert_eq!((r.m(), r.a()), (0, 0.0));
    }

    #[test]
    fn reduce_leaves_regular_instance() {
        let s = real(0.5, &[1.0], &[vec![0.0]]);
        assert_eq!(reduce_degenerate(&s), s);
    }

    #[test]
    fn reduce_two_vertex_example() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = real(0.0, &[h, h], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (r, peels) = reduce_degenerate_counted(&s);
        assert_eq!(peels, 1);
        assert_eq!(r.m(), 1);
        assert!((r.a() - 1.0).abs() < 1e-14);
        assert!(r.b()[0].norm() < 1e-14);
        assert!((r.d()[(0, 0)] - Complex::new(-1.0, 0.0)).norm() < 1e-14);
        assert!(verify(&s).holds);
    }

    #[test]
    fn reduce_complex_coupling() {
        let b = vec![Complex::new(0.0, 0.6), Complex::new(-0.8, 0.0)];
        let d = CMatrix::from_rows(&[
            vec![Complex::new(1.0, 0.0), Complex::new(0.5, 0.5)],
            vec![Complex::new(0.5, -0.5), Complex::new(-2.0, 0.0)],
        ])
        .unwrap();
        let s = GraphSpec::from_parts(0.0, b.clone(), d.clone()).unwrap();
        let (r, peels) = reduce_degenerate_counted(&s);
        assert_eq!(peels, 1);
        // The new self-loop is the Rayleigh quotient b^H D b.
        let want = eigen::dot(&b, &d.mul_vec(&b)).re;
        assert!((r.a() - want).abs() < 1e-12);
        assert!(r.d().hermitian_defect().0 < 1e-14);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(counts(&classify(&real(2.0, &[], &[])).unwrap()), (0, 1, 0, 0));
        let c = classify(&real(0.0, &[2.0, 0.0], &[vec![0.0, 0.0], vec![0.0, 5.0]])).unwrap();
        assert_eq!(counts(&c), (2, 2, 0, 1));
        let c = classify(&real(0.5, &[1.0], &[vec![0.0]])).unwrap();
        assert_eq!(counts(&c), (1, 0, 1, 0));
    }

    #[test]
    fn verify_examples() {
        for (spec, w) in [
            (real(2.0, &[], &[]), -2),
            (real(0.5, &[1.0], &[vec![0.0]]), 1),
            (real(0.0, &[2.0, 0.0], &[vec![0.0, 0.0], vec![0.0, 5.0]]), -2),
        ] {
            let r = verify(&spec);
            assert!(r.holds, "{:?}", r.diagnostics);
            assert_eq!((r.w_phase, r.w_roots, r.rhs), (Some(w), Some(w), Some(w)));
            assert!(!r.reduced);
        }
    }

    #[test]
    fn census_override_reports_violation() {
        let spec = real(2.0, &[], &[]);
        let opts = VerifyOptions {
            census_override: Some(CensusCounts {
                m: 0,
                n_b: 0,
                n_h: 0,
                n_c: 0,
            }),
            ..Default::default()
        };
        let r = verify_with(&spec, &opts);
        assert!(!r.holds);
        assert!(!r.ambiguous);
        assert_eq!(r.rhs, Some(0));
    }

    #[test]
    fn random_instance_properties() {
        let s = random_instance(3, 0, &InstanceOptions::default());
        assert_eq!(s.m(), 0);
        let opts = InstanceOptions::default();
        assert_eq!(random_instance(11, 5, &opts), random_instance(11, 5, &opts));
        assert_ne!(random_instance(11, 5, &opts), random_instance(12, 5, &opts));
        let s = random_instance(11, 5, &opts);
        assert!(s.d().hermitian_defect().0 == 0.0);
    }

    #[test]
    fn forced_half_bound_on_canonical_family() {
        // With b = (1), D = (0) the forced self-loop is 1 - C(1) = 1/2.
        let spec = real(0.0, &[1.0], &[vec![0.0]]);
        let sd = spectral_decompose(&spec).unwrap();
        let c1 = eval_c(&sd, Complex::new(1.0, 0.0)).unwrap();
        assert!((1.0 - c1.re - 0.5).abs() < 1e-15);

        let opts = InstanceOptions {
            force_half_bound: true,
            ..Default::default()
        };
        for seed in 0..10 {
            let s = random_instance(seed, 3, &opts);
            assert!(detect_half_bound(&s, &spectral_decompose(&s).unwrap()).at_plus_one);
        }
    }

    #[test]
    fn forced_confined() {
        let opts = InstanceOptions {
            force_confined: true,
            ..Default::default()
        };
        for seed in 0..10 {
            let s = random_instance(seed, 4, &opts);
            assert!(spectral_decompose(&s).unwrap().n_confined() >= 1);
        }
    }

    #[test]
    fn oracle_examples() {
        let near = |ev: &[f64], x: f64, tol: f64| ev.iter().any(|e| (e - x).abs() <= tol);
        let ev = truncated_oracle(&real(2.0, &[], &[]), 40).unwrap();
        assert!(near(&ev, 2.5, 1e-9));
        let ev = truncated_oracle(&real(0.0, &[2.0], &[vec![0.0]]), 50).unwrap();
        let e = 4.0 / 3f64.sqrt();
        assert!(near(&ev, e, 1e-6) && near(&ev, -e, 1e-6));
        let ev = truncated_oracle(&real(0.0, &[2.0, 0.0], &[vec![0.0, 0.0], vec![0.0, 5.0]]), 30).unwrap();
        assert!(near(&ev, 5.0, 1e-9));
        assert!(truncated_oracle(&real(2.0, &[], &[]), 5).is_err());
    }

    #[test]
    fn fuzz_is_deterministic() {
        let cfg = FuzzConfig::new(20, 7, 4);
        let (a, ra) = fuzz(&cfg);
        let (b, rb) = fuzz(&cfg);
        assert_eq!(ra, rb);
        assert_eq!(a.held, b.held);
        assert_eq!(a.held, 20, "{:?}", a.failures);
    }
}
