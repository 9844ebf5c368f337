//! Dense factored Toeplitz covariance matrices.

use crate::error::{invalid, Error, Result};
use crate::kernels::{eval_cov, toeplitz_cov_seq, KernelSpec};

/// Relative diagonal jitter used when the plain factorization fails.
pub const JITTER: f64 = 1e-10;

/// An `n × n` symmetric Toeplitz covariance matrix with its Cholesky factor.
///
/// All contact with `Σ⁻¹` goes through triangular solves; the inverse is never
/// formed.
#[derive(Debug, Clone)]
pub struct CovOperator {
    n: usize,
    first_row: Vec<f64>,
    /// Row-major lower-triangular factor, `n * n` entries.
    chol: Vec<f64>,
    log_det: f64,
    jitter: Option<f64>,
}

/// First `m` autocovariances of `spec`, keeping the spec's own grid spacing.
/// On a fixed domain of size `n` the lag between samples `r` and `s` is
/// `(r - s)/n` regardless of `m`.
pub fn autocov_row(spec: &KernelSpec, m: usize) -> Result<Vec<f64>> {
    if spec.domain.is_fixed() {
        let h = spec.domain.spacing();
        (0..m).map(|k| eval_cov(spec, k as f64 * h)).collect()
    } else {
        toeplitz_cov_seq(spec, m)
    }
}

/// Builds `Σ_n` for the spec's own sample count.
pub fn build_cov(spec: &KernelSpec) -> Result<CovOperator> {
    spec.validate()?;
    let n = spec.n();
    if n < 2 {
        return Err(invalid(format!("covariance needs n >= 2, got {n}")));
    }
    CovOperator::from_autocov(autocov_row(spec, n)?)
}

fn cholesky(n: usize, first_row: &[f64], jitter: f64) -> std::result::Result<Vec<f64>, usize> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = first_row[i - j];
            if i == j {
                sum += jitter;
            }
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            sum -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err(i);
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

impl CovOperator {
    /// Factors the symmetric Toeplitz matrix whose first row is `first_row`.
    pub fn from_autocov(first_row: Vec<f64>) -> Result<Self> {
        let n = first_row.len();
        if n == 0 {
            return Err(Error::EmptyInput("autocovariance row"));
        }
        if first_row.iter().any(|v| !v.is_finite()) {
            return Err(invalid("autocovariances must be finite"));
        }
        let (chol, jitter) = match cholesky(n, &first_row, 0.0) {
            Ok(l) => (l, None),
            Err(_) => {
                let eps = JITTER * first_row[0].abs();
                let l =
                    cholesky(n, &first_row, eps).map_err(|pivot| Error::Conditioning { pivot })?;
                (l, Some(eps))
            }
        };
        let log_det = 2.0 * (0..n).map(|i| chol[i * n + i].ln()).sum::<f64>();
        Ok(CovOperator {
            n,
            first_row,
            chol,
            log_det,
            jitter,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Diagonal jitter that had to be added for the factorization to succeed.
    pub fn jitter(&self) -> Option<f64> {
        self.jitter
    }

    /// Entry `(i, j)` of the lower factor `L`.
    pub fn chol_entry(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.chol[i * self.n + j]
        }
    }

    /// Dense `Σ_n` (row-major), mostly for diagnostics and tests.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.first_row[i.abs_diff(j)];
            }
        }
        out
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        self.check_len(b)?;
        self.forward_from(b, 0);
        Ok(())
    }

    /// Forward substitution assuming `b[..start]` is already zero.
    pub(crate) fn forward_from(&self, b: &mut [f64], start: usize) {
        let n = self.n;
        for i in start..n {
            let row = &self.chol[i * n..i * n + i];
            let s: f64 = row[start..]
                .iter()
                .zip(&b[start..i])
                .map(|(l, y)| l * y)
                .sum();
            b[i] = (b[i] - s) / self.chol[i * n + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_solve_in_place(&self, y: &mut [f64]) -> Result<()> {
        self.check_len(y)?;
        let n = self.n;
        for i in (0..n).rev() {
            let yi = y[i] / self.chol[i * n + i];
            y[i] = yi;
            // column i of Lᵀ above the diagonal is row i of L
            let row = &self.chol[i * n..i * n + i];
            for (yj, l) in y[..i].iter_mut().zip(row) {
                *yj -= l * yi;
            }
        }
        Ok(())
    }

    /// `Σ_n⁻¹ rhs` through two triangular solves.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(rhs)?;
        let mut y = rhs.to_vec();
        self.forward_solve_in_place(&mut y)?;
        self.backward_solve_in_place(&mut y)?;
        Ok(y)
    }

    /// `vᵀ Σ_n⁻¹ v = ‖L⁻¹ v‖²`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        let mut y = v.to_vec();
        self.forward_solve_in_place(&mut y)?;
        Ok(y.iter().map(|x| x * x).sum())
    }

    /// `L z`: maps a standard normal draw to a draw from `N(0, Σ_n)`.
    pub fn sample_chol(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        let n = self.n;
        Ok((0..n)
            .map(|i| {
                self.chol[i * n..i * n + i + 1]
                    .iter()
                    .zip(z)
                    .map(|(l, z)| l * z)
                    .sum()
            })
            .collect())
    }

    /// `Σ_n v`.
    pub fn mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let n = self.n;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.first_row[i.abs_diff(j)] * v[j]).sum())
            .collect())
    }

    /// Normalized bilinear form `1_Sᵀ A 1_{S'} / √(|S||S'|)` with `A = Σ_n`
    /// or `A = Σ_n⁻¹`. Index sets are 0-based.
    pub fn tau(&self, use_inverse: bool, s: &[usize], s_prime: &[usize]) -> Result<f64> {
        if s.is_empty() || s_prime.is_empty() {
            return Err(Error::EmptyInput("tau index set"));
        }
        if let Some(&bad) = s.iter().chain(s_prime).find(|&&i| i >= self.n) {
            return Err(invalid(format!(
                "index {bad} out of range for n = {}",
                self.n
            )));
        }
        let indicator = |set: &[usize]| {
            let mut v = vec![0.0; self.n];
            for &i in set {
                v[i] = 1.0;
            }
            v
        };
        let (a, b) = (indicator(s), indicator(s_prime));
        let form = if use_inverse {
            let mut la = a;
            let mut lb = b;
            self.forward_solve_in_place(&mut la)?;
            self.forward_solve_in_place(&mut lb)?;
            la.iter().zip(&lb).map(|(x, y)| x * y).sum::<f64>()
        } else {
            let sb = self.mul(&b)?;
            a.iter().zip(&sb).map(|(x, y)| x * y).sum::<f64>()
        };
        Ok(form / ((s.len() * s_prime.len()) as f64).sqrt())
    }
}
