use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Eigen-decomposition `S = Q Λ Qᵗ` of a real symmetric matrix.
///
/// Eigenvalues are sorted in descending order; column `k` of
/// `eigenvectors` belongs to `eigenvalues[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `Q diag(values) Qᵗ` for replacement eigenvalues.
    pub fn recompose_with(&self, values: &[f64]) -> Matrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for (k, &lam) in values.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = lam * q[(i, k)];
                if qi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += qi * q[(j, k)];
                }
            }
        }
        out.symmetrized()
    }

    pub fn recompose(&self) -> Matrix {
        self.recompose_with(&self.eigenvalues)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let q = &self.eigenvectors;
        (0..q.rows()).map(|i| q[(i, k)]).collect()
    }
}

pub(crate) fn check_symmetric(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", s.rows(), s.cols())));
    }
    let tol = 1e-12 * s.max_abs().max(1.0);
    let asym = s.asymmetry();
    if !(asym <= tol) {
        return Err(Error::Domain(format!("matrix is not symmetric (max |S - Sᵗ| = {asym:.3e})")));
    }
    Ok(())
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver.
///
/// Each sweep visits every off-diagonal pair `(p, q)` and applies the plane
/// rotation that zeroes `a_pq`. During the first three sweeps rotations are
/// skipped for entries below `0.2·off/N²`, which avoids spending work on
/// entries that later rotations will refill anyway.
pub fn eigh(s: &Matrix) -> Result<EigenDecomposition> {
    check_symmetric(s)?;
    if !s.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let n = s.rows();
    let mut a = s.symmetrized();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius();

    for sweep in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_sq(&a).sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                // after a few sweeps, drop entries that cannot change the diagonal
                if sweep > 3 {
                    let g = 100.0 * apq.abs();
                    if a[(p, p)].abs() + g == a[(p, p)].abs() && a[(q, q)].abs() + g == a[(q, q)].abs() {
                        a[(p, q)] = 0.0;
                        a[(q, p)] = 0.0;
                        continue;
                    }
                }
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

fn off_diagonal_sq(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc
}

/// `A ← Gᵗ A G`, `V ← V G` for the rotation that annihilates `a_pq`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
