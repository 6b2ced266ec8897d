//! Per-level numerical certificates for the well-posedness hypotheses.
//!
//! The linear hypotheses are exact discrete quantities. With `B` the form
//! matrix (test x trial) and `M_X`, `M_Y` the trial and test Gram matrices:
//!
//! * inf-sup constant: `sqrt(lambda_min)` of `B^T M_Y^-1 B x = s^2 M_X x`
//! * non-degeneracy margin: `sqrt(lambda_min)` of `B M_X^-1 B^T y = s^2 M_Y y`
//! * boundedness constant: `sqrt(lambda_max)` of the first pencil
//!
//! The nonlinear hypotheses (monotone, coercive, hemicontinuous) quantify over
//! infinite-dimensional spaces and are only sampled here with a declared seed.
//! Their outcome is evidence, never proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, eig_sym_generalized, pencil_extremes, DenseMatrix, LinalgError, TriBand};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Threshold for the sampled monotonicity check.
pub const MONOTONE_TOL: f64 = -1e-12;
/// Hemicontinuity: deviation at the smallest `t` relative to the largest.
pub const HEMI_RELATIVE: f64 = 1e-6;
pub const HEMI_ABSOLUTE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

/// One hypothesis with the number that decided it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub hypothesis: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn at_least(hypothesis: &str, value: f64, threshold: f64) -> Verdict {
        Verdict {
            hypothesis: hypothesis.to_string(),
            value,
            relation: Relation::AtLeast,
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn at_most(hypothesis: &str, value: f64, threshold: f64) -> Verdict {
        Verdict {
            hypothesis: hypothesis.to_string(),
            value,
            relation: Relation::AtMost,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityRow {
    pub direction: usize,
    pub scale: f64,
    pub norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub level: usize,
    pub trial_dim: usize,
    pub test_dim: usize,
    pub infsup_c: f64,
    pub nondegeneracy_margin: f64,
    pub boundedness_m: f64,
    pub monotonicity_min: Option<f64>,
    pub coercivity_table: Vec<CoercivityRow>,
    pub coercivity_estimate_slack: Option<f64>,
    pub hemicontinuity_dev: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl Certificate {
    pub fn new(level: usize, trial_dim: usize, test_dim: usize, constants: PencilConstants, infsup_min: f64) -> Self {
        let verdicts = vec![
            Verdict::at_least("inf_sup", constants.infsup_c, infsup_min),
            Verdict::at_least("non_degeneracy", constants.nondegeneracy_margin, infsup_min),
            Verdict::at_least("boundedness", constants.boundedness_m, constants.infsup_c),
        ];
        Certificate {
            level,
            trial_dim,
            test_dim,
            infsup_c: constants.infsup_c,
            nondegeneracy_margin: constants.nondegeneracy_margin,
            boundedness_m: constants.boundedness_m,
            monotonicity_min: None,
            coercivity_table: Vec::new(),
            coercivity_estimate_slack: None,
            hemicontinuity_dev: None,
            verdicts,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, hypothesis: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.hypothesis == hypothesis)
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn attach_monotonicity(&mut self, min: f64) {
        self.monotonicity_min = Some(min);
        self.push(Verdict::at_least("monotone", min, MONOTONE_TOL));
    }

    pub fn attach_coercivity(&mut self, report: CoercivityReport) {
        self.push(Verdict::at_least(
            "coercive_growth",
            if report.eventually_increasing {
                report.min_final_ratio
            } else {
                f64::NEG_INFINITY
            },
            report.target_ratio,
        ));
        if let Some(slack) = report.estimate_slack {
            self.coercivity_estimate_slack = Some(slack);
            self.push(Verdict::at_least("coercivity_estimate", slack, 0.0));
        }
        self.coercivity_table = report.table;
    }

    pub fn attach_hemicontinuity(&mut self, report: &HemicontinuityReport) {
        self.hemicontinuity_dev = Some(report.deviation_smallest);
        let bound = (HEMI_RELATIVE * report.deviation_largest).max(HEMI_ABSOLUTE);
        self.push(Verdict::at_most("hemicontinuous", report.deviation_smallest, bound));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PencilConstants {
    pub infsup_c: f64,
    pub nondegeneracy_margin: f64,
    pub boundedness_m: f64,
}

fn check_dims(b: &DenseMatrix, mx: &DenseMatrix, my: &DenseMatrix) -> Result<(), CertifyError> {
    if mx.rows() != b.cols() || my.rows() != b.rows() || !mx.is_square() || !my.is_square() {
        return Err(CertifyError::Dimension(format!(
            "B {}x{}, M_X {}x{}, M_Y {}x{}",
            b.rows(),
            b.cols(),
            mx.rows(),
            mx.cols(),
            my.rows(),
            my.cols()
        )));
    }
    Ok(())
}

/// `S^T G^-1 S` for dense `S`, symmetrised.
fn congruence_inverse(s: &DenseMatrix, g: &DenseMatrix) -> Result<DenseMatrix, CertifyError> {
    let n = s.cols();
    let mut sol = DenseMatrix::zeros(s.rows(), n);
    for j in 0..n {
        let col: Vec<f64> = (0..s.rows()).map(|i| s[(i, j)]).collect();
        let x = linalg::cholesky_solve(g, &col)?;
        for i in 0..s.rows() {
            sol[(i, j)] = x[i];
        }
    }
    let mut out = s.transpose().matmul(&sol);
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

fn trial_pencil(b: &DenseMatrix, mx: &DenseMatrix, my: &DenseMatrix) -> Result<Vec<f64>, CertifyError> {
    check_dims(b, mx, my)?;
    let normal = congruence_inverse(b, my)?;
    Ok(eig_sym_generalized(&normal, mx)?.values)
}

fn root(lambda: f64) -> f64 {
    lambda.max(0.0).sqrt()
}

/// Discrete inf-sup constant: min over trial `x` of sup over test `y` of
/// `|y^T B x| / (||x||_X ||y||_Y)`.
pub fn infsup_constant(b: &DenseMatrix, mx: &DenseMatrix, my: &DenseMatrix) -> Result<f64, CertifyError> {
    let values = trial_pencil(b, mx, my)?;
    Ok(root(values[0]))
}

/// Min over test `y` of sup over trial `x`; zero iff some test direction
/// annihilates every trial function.
pub fn nondegeneracy_margin(b: &DenseMatrix, mx: &DenseMatrix, my: &DenseMatrix) -> Result<f64, CertifyError> {
    check_dims(b, mx, my)?;
    let bt = b.transpose();
    let normal = congruence_inverse(&bt, mx)?;
    Ok(root(eig_sym_generalized(&normal, my)?.values[0]))
}

/// Discrete operator norm of the form.
pub fn boundedness_constant(b: &DenseMatrix, mx: &DenseMatrix, my: &DenseMatrix) -> Result<f64, CertifyError> {
    let values = trial_pencil(b, mx, my)?;
    Ok(root(*values.last().unwrap()))
}

pub fn pencil_constants(b: &DenseMatrix, mx: &DenseMatrix, my: &DenseMatrix) -> Result<PencilConstants, CertifyError> {
    let values = trial_pencil(b, mx, my)?;
    Ok(PencilConstants {
        infsup_c: root(values[0]),
        nondegeneracy_margin: nondegeneracy_margin(b, mx, my)?,
        boundedness_m: root(*values.last().unwrap()),
    })
}

/// Constants from a tridiagonal normal pencil `(B^T M_Y^-1 B, M_X)` of a
/// square form. For square `B` the non-degeneracy pencil has the same
/// spectrum (substitute `y = B^-T M_X x`), so the margin equals the inf-sup
/// constant.
pub fn square_constants_from_normal(normal: &TriBand, mx: &TriBand) -> Result<PencilConstants, CertifyError> {
    let (lo, hi) = pencil_extremes(normal, mx)?;
    Ok(PencilConstants {
        infsup_c: root(lo),
        nondegeneracy_margin: root(lo),
        boundedness_m: root(hi),
    })
}

/// Petrov-Galerkin constants for a square band form with diagonal test Gram.
pub fn band_constants(b: &TriBand, mx: &TriBand, my: &TriBand) -> Result<PencilConstants, CertifyError> {
    if !b.is_square() || mx.rows() != b.cols() || my.rows() != b.rows() {
        return Err(CertifyError::Dimension("band path needs a square form".into()));
    }
    let off_diag = (0..my.rows()).any(|i| (i > 0 && my.get(i, i - 1) != 0.0) || my.get(i, i + 1) != 0.0);
    if off_diag {
        return Err(CertifyError::Dimension("band path needs a diagonal test Gram".into()));
    }
    let normal = b.normal_product(my.diagonal())?;
    square_constants_from_normal(&normal, mx)
}

/// Constants of a symmetric form on `X x X` with `M_Y = M_X`: the pencil
/// eigenvalues of `(K, M_X)` are the generalized singular values themselves.
pub fn symmetric_constants(k: &TriBand, mx: &TriBand) -> Result<PencilConstants, CertifyError> {
    let (lo, hi) = pencil_extremes(k, mx)?;
    let c = lo.abs().min(hi.abs());
    let c = if lo < 0.0 && hi > 0.0 { 0.0 } else { c };
    Ok(PencilConstants {
        infsup_c: c,
        nondegeneracy_margin: c,
        boundedness_m: lo.abs().max(hi.abs()),
    })
}

/// Seeded sampling plan shared by the nonlinear checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub samples: usize,
    pub seed: u64,
    pub amplitude: f64,
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, amplitude: f64) -> Vec<f64> {
    (0..dim).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect()
}

/// Smallest sampled `(T(u) - T(v)) . (u - v)`; deterministic for a given seed.
pub fn check_monotone<F>(apply_t: F, dim: usize, plan: &SamplingPlan) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut worst = f64::INFINITY;
    for _ in 0..plan.samples {
        let u = random_vector(&mut rng, dim, plan.amplitude);
        let v = random_vector(&mut rng, dim, plan.amplitude);
        let tu = apply_t(&u);
        let tv = apply_t(&v);
        let pairing: f64 = tu
            .iter()
            .zip(&tv)
            .zip(u.iter().zip(&v))
            .map(|((a, b), (x, y))| (a - b) * (x - y))
            .sum();
        worst = worst.min(pairing);
    }
    worst
}

/// Lower bound `A(u,u) >= c1 ||u||^2 - h ||u||` to test on every sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityEstimate {
    pub c1: f64,
    pub h_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub table: Vec<CoercivityRow>,
    pub target_ratio: f64,
    pub eventually_increasing: bool,
    pub min_final_ratio: f64,
    pub estimate_slack: Option<f64>,
    pub pass: bool,
}

/// Walks each direction `d` along the ray `s d` and tabulates
/// `(||s d||, A(s d, s d) / ||s d||)`.
///
/// A ray counts as eventually increasing when the ratio strictly increases
/// over the last half of the scale sequence. The verdict passes when every
/// ray is eventually increasing, every final ratio reaches `target_ratio`,
/// and (if given) the estimate holds at every sample up to `1e-12` relative
/// rounding slack.
pub fn check_coercivity<A, N>(
    apply_a_diag: A,
    norm: N,
    directions: &[Vec<f64>],
    scales: &[f64],
    target_ratio: f64,
    estimate: Option<CoercivityEstimate>,
) -> CoercivityReport
where
    A: Fn(&[f64]) -> f64,
    N: Fn(&[f64]) -> f64,
{
    let mut table = Vec::new();
    let mut increasing = true;
    let mut min_final = f64::INFINITY;
    let mut slack = f64::INFINITY;
    let tail = scales.len().div_ceil(2).max(1);
    for (k, d) in directions.iter().enumerate() {
        let mut ratios = Vec::with_capacity(scales.len());
        for &s in scales {
            let x: Vec<f64> = d.iter().map(|v| v * s).collect();
            let nx = norm(&x);
            let axx = apply_a_diag(&x);
            let ratio = axx / nx;
            if let Some(e) = estimate {
                let lower = e.c1 * nx * nx - e.h_norm * nx;
                let scale = axx.abs().max(lower.abs()).max(f64::MIN_POSITIVE);
                slack = slack.min((axx - lower) / scale + 1e-12);
            }
            table.push(CoercivityRow {
                direction: k,
                scale: s,
                norm: nx,
                ratio,
            });
            ratios.push(ratio);
        }
        let start = ratios.len().saturating_sub(tail + 1);
        if !ratios[start..].windows(2).all(|w| w[1] > w[0]) {
            increasing = false;
        }
        if let Some(last) = ratios.last() {
            min_final = min_final.min(*last);
        }
    }
    let estimate_slack = estimate.map(|_| slack);
    let pass = increasing && min_final >= target_ratio && estimate_slack.is_none_or(|s| s >= 0.0);
    CoercivityReport {
        table,
        target_ratio,
        eventually_increasing: increasing,
        min_final_ratio: min_final,
        estimate_slack,
        pass,
    }
}

/// Geometric ray `1, r, r^2, ..., s_max` with `points` entries.
pub fn geometric_scales(s_max: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![s_max];
    }
    let r = s_max.powf(1.0 / (points - 1) as f64);
    (0..points)
        .map(|i| if i + 1 == points { s_max } else { r.powi(i as i32) })
        .collect()
}

pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_vector(&mut rng, dim, 1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HemicontinuityReport {
    pub t_values: Vec<f64>,
    pub deviations: Vec<f64>,
    pub deviation_largest: f64,
    pub deviation_smallest: f64,
    pub pass: bool,
}

/// Largest `|<T(x + t y) - T(x), w>|` over the probe vectors `w`, for each
/// `t` of a strictly decreasing positive sequence.
pub fn hemicontinuity_probe<F>(
    apply_t: F,
    x: &[f64],
    y: &[f64],
    t_values: &[f64],
    probes: &[Vec<f64>],
) -> HemicontinuityReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert!(!t_values.is_empty());
    assert!(
        t_values.windows(2).all(|w| w[1] < w[0]) && t_values.iter().all(|&t| t > 0.0),
        "t sequence must be positive and strictly decreasing"
    );
    let tx = apply_t(x);
    let deviations: Vec<f64> = t_values
        .iter()
        .map(|&t| {
            let shifted: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + t * b).collect();
            let diff: Vec<f64> = apply_t(&shifted).iter().zip(&tx).map(|(a, b)| a - b).collect();
            probes.iter().map(|w| linalg::dot(&diff, w).abs()).fold(0.0, f64::max)
        })
        .collect();
    let deviation_largest = deviations[0];
    let deviation_smallest = *deviations.last().unwrap();
    let pass = deviation_smallest <= (HEMI_RELATIVE * deviation_largest).max(HEMI_ABSOLUTE);
    HemicontinuityReport {
        t_values: t_values.to_vec(),
        deviations,
        deviation_largest,
        deviation_smallest,
        pass,
    }
}

/// `1, 1e-1, ..., 1e-8`.
pub fn default_t_sequence() -> Vec<f64> {
    (0..9).map(|k| 10f64.powi(-k)).collect()
}
