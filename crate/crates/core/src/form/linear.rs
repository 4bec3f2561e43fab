use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Form, MultiIndexTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Orthogonal `n×n` matrix, checked to `‖ρρᵗ − I‖_max ≤ 1e-12`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    matrix: Matrix,
}

impl OrthogonalMatrix {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain("orthogonal matrix must be square".into()));
        }
        let defect = orthogonality_defect(&matrix);
        if !(defect <= Self::TOLERANCE) {
            return Err(Error::Domain(format!("matrix is not orthogonal (‖ρρᵗ − I‖_max = {defect:.3e})")));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n) }
    }

    /// Haar-distributed sample: QR of a Gaussian matrix with the signs of
    /// `diag(R)` folded into `Q`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let mut cols: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                .collect();
            if let Some(()) = gram_schmidt(&mut cols) {
                let mut m = Matrix::zeros(n, n);
                for (j, col) in cols.iter().enumerate() {
                    for i in 0..n {
                        m[(i, j)] = col[i];
                    }
                }
                if let Ok(q) = Self::new(m) {
                    return q;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }
}

fn orthogonality_defect(m: &Matrix) -> f64 {
    let prod = m.matmul(&m.transpose()).expect("square");
    prod.sub(&Matrix::identity(m.rows())).expect("same shape").max_abs()
}

/// Modified Gram-Schmidt, applied twice, with the sign convention `R_jj > 0`
/// already implied by normalizing each projected column.
fn gram_schmidt(cols: &mut [Vec<f64>]) -> Option<()> {
    for j in 0..cols.len() {
        for _pass in 0..2 {
            for k in 0..j {
                let (head, tail) = cols.split_at_mut(j);
                let proj: f64 = head[k].iter().zip(&tail[0]).map(|(a, b)| a * b).sum();
                for (t, h) in tail[0].iter_mut().zip(&head[k]) {
                    *t -= proj * h;
                }
            }
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        cols[j].iter_mut().for_each(|v| *v /= norm);
    }
    Some(())
}

/// Coefficients of `x ↦ f(Mx)`.
///
/// Each rescaled monomial `x^α` becomes `Π_i (M_i·x)^{α_i}`; the products are
/// expanded depth-first over `α` so that shared prefixes are multiplied out
/// once, and accumulated in the monomial basis before rescaling.
pub fn compose_linear(f: &Form, m: &Matrix) -> Result<Form> {
    let n = f.n();
    if m.rows() != n || m.cols() != n {
        return Err(Error::Shape(format!(
            "substitution matrix is {}x{}, form has n={n}",
            m.rows(),
            m.cols()
        )));
    }
    let d = f.degree();
    let expander = Expander::new(n, d)?;
    let mut acc = vec![0.0; f.len()];
    let mut alpha = vec![0u32; n];
    let start = vec![1.0];
    expander.descend(f, m, 0, d, &start, &mut alpha, &mut acc);
    let table = f.table();
    let coeffs = acc.iter().zip(table.sqrt_multinomials()).map(|(c, s)| c / s).collect();
    Form::with_table(Arc::clone(table), coeffs)
}

struct Expander {
    n: usize,
    d: usize,
    tables: Vec<MultiIndexTable>,
    /// `successors[k][idx * n + i]` = position of `β + e_i` in the degree `k+1` table.
    successors: Vec<Vec<usize>>,
}

impl Expander {
    fn new(n: usize, d: usize) -> Result<Self> {
        let tables: Vec<MultiIndexTable> =
            (0..=d).map(|k| MultiIndexTable::new(n, k)).collect::<Result<_>>()?;
        let mut successors = Vec::with_capacity(d);
        let mut bumped = vec![0u32; n];
        for k in 0..d {
            let mut succ = Vec::with_capacity(tables[k].len() * n);
            for beta in tables[k].iter() {
                for i in 0..n {
                    bumped.copy_from_slice(beta);
                    bumped[i] += 1;
                    succ.push(tables[k + 1].position(&bumped).expect("degree k+1 exponent"));
                }
            }
            successors.push(succ);
        }
        Ok(Self { n, d, tables, successors })
    }

    /// Multiplies a degree-`k` polynomial (monomial basis) by the linear form `row`.
    fn times_linear(&self, poly: &[f64], k: usize, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.tables[k + 1].len()];
        let succ = &self.successors[k];
        for (idx, &c) in poly.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (i, &l) in row.iter().enumerate() {
                if l != 0.0 {
                    out[succ[idx * self.n + i]] += c * l;
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        f: &Form,
        m: &Matrix,
        var: usize,
        remaining: usize,
        prefix: &[f64],
        alpha: &mut [u32],
        acc: &mut [f64],
    ) {
        let degree = self.d - remaining;
        let row = m.row(var);
        if var + 1 == self.n {
            alpha[var] = remaining as u32;
            let pos = f.table().position(alpha).expect("complete exponent");
            let c = f.coeffs()[pos];
            if c != 0.0 {
                let c = c * f.table().sqrt_multinomial(pos);
                let mut poly = prefix.to_vec();
                for k in degree..self.d {
                    poly = self.times_linear(&poly, k, row);
                }
                for (a, p) in acc.iter_mut().zip(&poly) {
                    *a += c * p;
                }
            }
            return;
        }
        let mut poly = prefix.to_vec();
        for a in 0..=remaining {
            if a > 0 {
                poly = self.times_linear(&poly, degree + a - 1, row);
            }
            alpha[var] = a as u32;
            self.descend(f, m, var + 1, remaining - a, &poly, alpha, acc);
        }
        alpha[var] = 0;
    }
}

/// `ρ*f(x) = f(ρ⁻¹x)`.
pub fn apply_orthogonal(f: &Form, rho: &OrthogonalMatrix) -> Result<Form> {
    compose_linear(f, &rho.matrix().transpose())
}

/// `∂f/∂x_i` in the rescaled basis of degree `d − 1`:
/// coefficient of `β` is `sqrt(d·α_i) f_α` with `α = β + e_i`.
pub fn differentiate(f: &Form, i: usize) -> Result<Form> {
    let d = f.degree();
    if d == 0 {
        return Err(Error::Domain("cannot differentiate a degree-0 form".into()));
    }
    if i >= f.n() {
        return Err(Error::Shape(format!("variable index {i} out of range for n={}", f.n())));
    }
    let mut out = Form::zero(f.n(), d - 1)?;
    let lower = Arc::clone(out.table());
    let mut alpha = vec![0u32; f.n()];
    for (idx, beta) in lower.iter().enumerate() {
        alpha.copy_from_slice(beta);
        alpha[i] += 1;
        let pos = f.table().position(&alpha).expect("raised exponent");
        out.coeffs[idx] = ((d as f64) * alpha[i] as f64).sqrt() * f.coeffs()[pos];
    }
    Ok(out)
}

/// All first partials `[∂f/∂x_1, …, ∂f/∂x_n]`.
pub fn gradient_forms(f: &Form) -> Result<Vec<Form>> {
    (0..f.n()).map(|i| differentiate(f, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{ball_form, power_form, rescaled_from_monomial};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_form(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Form {
        let len = MultiIndexTable::new(n, d).unwrap().len();
        let coeffs = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Form::new(n, d, coeffs).unwrap()
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..n * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Matrix::from_row_major(n, n, data).unwrap()
    }

    #[test]
    fn identity_substitution_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_form(3, 4, &mut rng);
        let g = compose_linear(&f, &Matrix::identity(3)).unwrap();
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn swap_examples() {
        let f = rescaled_from_monomial(2, 2, &[1.0, 0.0, 0.0]).unwrap();
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = compose_linear(&f, &swap).unwrap();
        assert_eq!(g.to_monomial(), vec![0.0, 0.0, 1.0]);
        assert!(compose_linear(&f, &Matrix::identity(3)).is_err());
    }

    #[test]
    fn composition_matches_pointwise_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, d) in [(1, 3), (2, 4), (3, 3), (4, 2)] {
            let f = random_form(n, d, &mut rng);
            let m = random_matrix(n, &mut rng);
            let g = compose_linear(&f, &m).unwrap();
            for _ in 0..5 {
                let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let mx = m.matvec(&x);
                let want = f.evaluate(&mx).unwrap();
                assert_relative_eq!(g.evaluate(&x).unwrap(), want, max_relative = 1e-10, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn action_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, d) in [(2, 4), (3, 3), (3, 4)] {
            let f = random_form(n, d, &mut rng);
            let a = random_matrix(n, &mut rng);
            let b = random_matrix(n, &mut rng);
            let lhs = compose_linear(&compose_linear(&f, &a).unwrap(), &b).unwrap();
            let rhs = compose_linear(&f, &a.matmul(&b).unwrap()).unwrap();
            let scale = lhs.coeffs().iter().fold(1.0f64, |m, c| m.max(c.abs()));
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10 * scale);
        }
    }

    #[test]
    fn ball_form_is_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, d) in [(2, 4), (3, 4), (3, 6), (4, 2)] {
            let b = ball_form(n, d).unwrap();
            let rho = OrthogonalMatrix::random(n, &mut rng);
            let g = apply_orthogonal(&b, &rho).unwrap();
            assert!(g.max_abs_diff(&b).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn orthogonal_action_preserves_bombieri_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let d = rng.random_range(1..=5);
            let f = random_form(n, d, &mut rng);
            let rho = OrthogonalMatrix::random(n, &mut rng);
            let g = apply_orthogonal(&f, &rho).unwrap();
            assert!((g.bombieri_norm() - f.bombieri_norm()).abs() <= 1e-10 * f.bombieri_norm());
        }
        let f = random_form(3, 3, &mut rng);
        assert_eq!(apply_orthogonal(&f, &OrthogonalMatrix::identity(3)).unwrap(), f);
    }

    #[test]
    fn rejects_non_orthogonal() {
        let m = Matrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(OrthogonalMatrix::new(m), Err(Error::Domain(_))));
        let m = Matrix::zeros(2, 3);
        assert!(OrthogonalMatrix::new(m).is_err());
    }

    #[test]
    fn evaluation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (n, d) in [(2, 4), (3, 3), (4, 2), (3, 6)] {
            let g = random_form(n, d, &mut rng);
            let mut y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let len = crate::linalg::norm2(&y);
            y.iter_mut().for_each(|v| *v /= len);
            let lhs = power_form(&y, d).unwrap().bombieri_product(&g).unwrap();
            let rhs = g.evaluate(&y).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_examples() {
        let f = rescaled_from_monomial(2, 2, &[1.0, 0.0, 0.0]).unwrap();
        let df = differentiate(&f, 0).unwrap();
        assert_eq!(df.degree(), 1);
        assert_relative_eq!(df.to_monomial()[0], 2.0, max_relative = 1e-15);
        assert_eq!(df.to_monomial()[1], 0.0);

        let b = ball_form(2, 4).unwrap();
        let db = differentiate(&b, 0).unwrap();
        assert_relative_eq!(db.evaluate(&[1.0, 1.0]).unwrap(), 8.0, max_relative = 1e-14);

        assert!(matches!(differentiate(&Form::zero(2, 0).unwrap(), 0), Err(Error::Domain(_))));
        assert!(differentiate(&b, 2).is_err());
    }

    #[test]
    fn euler_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_form(3, 4, &mut rng);
        let grads = gradient_forms(&f).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let lhs: f64 = grads.iter().zip(&x).map(|(g, xi)| xi * g.evaluate(&x).unwrap()).sum();
            let rhs = 4.0 * f.evaluate(&x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_form(3, 5, &mut rng);
        let x: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        let fx = f.evaluate(&x).unwrap();
        for t in [-10.0, -2.5, 0.1, 3.0, 10.0] {
            let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
            let want = t.powi(5) * fx;
            assert_relative_eq!(f.evaluate(&tx).unwrap(), want, max_relative = 1e-10);
        }
    }
}
