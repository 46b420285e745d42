//! Numerical self-checks runnable from the command line.
//!
//! Each check compares two independent routes to the same quantity on
//! seeded random problems and reports the worst deviation seen.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::evaluation::{metrics, ConfusionMatrix};
use crate::linalg::{
    center_columns, column_mean, covariance_unbiased, dot, eigh_symmetric, pca_gram_trick,
    whitening_matrix, Matrix, TruncationPolicy,
};
use crate::similarity::whitened_cosine;
use crate::Result;

pub const GRAM_EIGENVALUE_TOL: f64 = 1e-8;
pub const GRAM_EIGENVECTOR_TOL: f64 = 1e-6;
pub const WHITENING_TOL: f64 = 1e-6;
pub const INVERSE_FORM_TOL: f64 = 1e-6;
/// Minimum relative eigenvalue gap for an eigenvector to count as
/// well-determined.
pub const MIN_RELATIVE_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Scales the Gram-route eigenvalues by `1 + 1e-6` so the equivalence
    /// check must fail. Used to verify that failures are reported.
    pub perturb_eigenvalues: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<28} trials={:<4} worst={:.3e} tol={:.0e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.trials,
            self.worst,
            self.tolerance
        )
    }
}

fn outcome(name: &'static str, trials: usize, worst: f64, tolerance: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        trials,
        worst,
        tolerance,
        passed: worst.is_finite() && worst <= tolerance,
    }
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::new(rows, cols, data).expect("gaussian samples are finite")
}

pub fn random_centered(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let x = random_matrix(rng, rows, cols);
    let mu = column_mean(&x).expect("non-empty");
    center_columns(&x, &mu).expect("matching dimensions")
}

/// Worst relative eigenvalue error and worst eigenvector deviation between
/// the Gram route and the materialized covariance.
pub fn gram_vs_direct(x_centered: &Matrix, perturb: bool) -> Result<(f64, f64)> {
    let policy = TruncationPolicy::default();
    let mut gram = pca_gram_trick(x_centered, &policy)?;
    if perturb {
        gram.values.iter_mut().for_each(|v| *v *= 1.0 + 1e-6);
    }
    let direct = eigh_symmetric(&covariance_unbiased(x_centered)?)?;
    let lambda_max = direct.values[0];
    let threshold = policy.threshold(lambda_max);
    let direct_rank = direct.values.iter().filter(|&&v| v > threshold).count();
    if direct_rank != gram.len() {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let mut worst_value: f64 = 0.0;
    let mut worst_vector: f64 = 0.0;
    for i in 0..gram.len() {
        let (a, b) = (gram.values[i], direct.values[i]);
        worst_value = worst_value.max((a - b).abs() / b.abs());
        let gap_before = if i == 0 { f64::INFINITY } else { direct.values[i - 1] - b };
        let gap_after = direct.values.get(i + 1).map_or(f64::INFINITY, |&n| b - n);
        if gap_before.min(gap_after) < MIN_RELATIVE_GAP * lambda_max {
            continue;
        }
        let (u, v) = (gram.vector(i), direct.vector(i));
        let sign = if dot(u, v) < 0.0 { -1.0 } else { 1.0 };
        let dev = u
            .iter()
            .zip(v)
            .fold(0.0_f64, |m, (a, b)| m.max((a - sign * b).abs()));
        worst_vector = worst_vector.max(dev);
    }
    Ok((worst_value, worst_vector))
}

/// `max |W^t Sigma W - I|` for the whitening built from `x_centered`.
pub fn whitening_identity_error(x_centered: &Matrix) -> Result<f64> {
    let policy = TruncationPolicy::default();
    let w = whitening_matrix(&pca_gram_trick(x_centered, &policy)?, &policy)?;
    // W^t X X^t W / (c - 1) without forming Sigma
    let wx = w.matrix().transpose().matmul(x_centered)?;
    let mut prod = wx.matmul(&wx.transpose())?;
    prod.scale(1.0 / (x_centered.cols() - 1) as f64);
    let k = prod.rows();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod.get(i, j) - target).abs());
        }
    }
    Ok(worst)
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a.get(i, j)).collect();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, m[i][n + j]);
        }
    }
    Some(inv)
}

/// Difference between the projected form and `u^t Sigma^{-1} v / (|W^t u| |W^t v|)`.
pub fn inverse_form_error(x: &Matrix, u: &[f64], v: &[f64]) -> Result<f64> {
    let policy = TruncationPolicy::default();
    let mu = column_mean(x)?;
    let xc = center_columns(x, &mu)?;
    let sigma = covariance_unbiased(&xc)?;
    let w = whitening_matrix(&pca_gram_trick(&xc, &policy)?, &policy)?;
    let projected = whitened_cosine(u, v, &w)?;
    let Some(inv) = invert(&sigma) else {
        return Ok(f64::INFINITY);
    };
    let num = dot(u, &inv.mul_vec(v)?);
    let nu = crate::linalg::norm(&w.project(u)?);
    let nv = crate::linalg::norm(&w.project(v)?);
    Ok((projected - num / (nu * nv)).abs())
}

pub fn run(opts: &SelftestOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();

    let trials = 100;
    let (mut wv, mut wvec) = (0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let d = rng.gen_range(2..=64);
        let c = rng.gen_range(2..=16);
        let x = random_centered(&mut rng, d, c);
        let (a, b) = gram_vs_direct(&x, opts.perturb_eigenvalues)?;
        wv = wv.max(a);
        wvec = wvec.max(b);
    }
    out.push(outcome("gram eigenvalues vs direct", trials, wv, GRAM_EIGENVALUE_TOL));
    out.push(outcome("gram eigenvectors vs direct", trials, wvec, GRAM_EIGENVECTOR_TOL));

    let trials = 20;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let d = rng.gen_range(3..=64);
        let c = rng.gen_range(3..=24);
        let x = random_centered(&mut rng, d, c);
        worst = worst.max(whitening_identity_error(&x)?);
    }
    out.push(outcome("whitening identity", trials, worst, WHITENING_TOL));

    let trials = 20;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let d = rng.gen_range(2..=20);
        let c = d + rng.gen_range(2..=20);
        let x = random_matrix(&mut rng, d, c);
        let u = random_matrix(&mut rng, d, 1);
        let v = random_matrix(&mut rng, d, 1);
        worst = worst.max(inverse_form_error(&x, u.as_slice(), v.as_slice())?);
    }
    out.push(outcome("projected vs inverse form", trials, worst, INVERSE_FORM_TOL));

    let r = metrics(&ConfusionMatrix::new(48, 150, 0, 2), "table")?;
    let expected = [0.99, 0.96, 1.00, 0.98];
    let got = [
        r.accuracy,
        r.recall.unwrap_or(f64::NAN),
        r.precision.unwrap_or(f64::NAN),
        r.f1.unwrap_or(f64::NAN),
    ];
    let worst = got
        .iter()
        .zip(expected)
        .fold(0.0_f64, |m, (g, e)| m.max(((g * 100.0).round() / 100.0 - e).abs()));
    out.push(outcome("metric arithmetic", 1, worst, 1e-12));
    Ok(out)
}
