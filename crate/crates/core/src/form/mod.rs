//! Dense homogeneous forms stored in the rescaled monomial basis.
//!
//! A form `f` of degree `d` in `n` variables is kept as the coefficient vector
//! `f_α` of `f(x) = Σ f_α sqrt(d!/α!) x^α`, so the Bombieri product is the
//! plain dot product of coefficient vectors. The ordinary monomial basis only
//! appears at I/O boundaries.

mod linear;
mod multi_index;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

pub use linear::{apply_orthogonal, compose_linear, differentiate, gradient_forms, OrthogonalMatrix};
pub use multi_index::{dimension, multi_index_table, MultiIndexTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    table: Arc<MultiIndexTable>,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(n: usize, d: usize) -> Result<Self> {
        let table = Arc::new(MultiIndexTable::new(n, d)?);
        let coeffs = vec![0.0; table.len()];
        Ok(Self { table, coeffs })
    }

    /// Builds a form from rescaled-basis coefficients.
    pub fn new(n: usize, d: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_table(Arc::new(MultiIndexTable::new(n, d)?), coeffs)
    }

    pub fn with_table(table: Arc<MultiIndexTable>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != table.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients for n={}, d={}, got {}",
                table.len(),
                table.n(),
                table.degree(),
                coeffs.len()
            )));
        }
        Ok(Self { table, coeffs })
    }

    /// `f(x) = Σ c_α x^α` → rescaled coefficients `c_α / sqrt(d!/α!)`.
    pub fn from_monomial(n: usize, d: usize, monomial: &[f64]) -> Result<Self> {
        let table = Arc::new(MultiIndexTable::new(n, d)?);
        if monomial.len() != table.len() {
            return Err(Error::Shape(format!(
                "expected {} monomial coefficients, got {}",
                table.len(),
                monomial.len()
            )));
        }
        let coeffs = monomial
            .iter()
            .zip(table.sqrt_multinomials())
            .map(|(c, s)| c / s)
            .collect();
        Ok(Self { table, coeffs })
    }

    /// Coefficients in the ordinary monomial basis `x^α`.
    pub fn to_monomial(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .zip(self.table.sqrt_multinomials())
            .map(|(f, s)| f * s)
            .collect()
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn degree(&self) -> usize {
        self.table.degree()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn table(&self) -> &Arc<MultiIndexTable> {
        &self.table
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Rescaled coefficient of `x^α`; zero when `α` is not of this shape.
    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.table.position(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn same_shape(&self, other: &Form) -> Result<()> {
        if self.n() != other.n() || self.degree() != other.degree() {
            return Err(Error::Shape(format!(
                "form (n={}, d={}) vs (n={}, d={})",
                self.n(),
                self.degree(),
                other.n(),
                other.degree()
            )));
        }
        Ok(())
    }

    /// Same shape, new coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_table(Arc::clone(&self.table), coeffs)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { table: Arc::clone(&self.table), coeffs: self.coeffs.iter().map(|c| c * t).collect() }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: f64, other: &Form) -> Result<Self> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + t * b).collect();
        Ok(Self { table: Arc::clone(&self.table), coeffs })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::Shape(format!("point has {} coordinates, form has n={}", x.len(), self.n())));
        }
        let mut scratch = Vec::new();
        Ok(self.eval_with(x, &mut scratch))
    }

    /// Evaluation without shape checks, reusing `scratch` for the power table.
    pub fn eval_with(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let n = self.n();
        let d = self.degree();
        fill_powers(x, d, scratch);
        let stride = d + 1;
        let mut total = 0.0;
        for (idx, alpha) in self.table.iter().enumerate() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            let mut term = c * self.table.sqrt_multinomial(idx);
            for i in 0..n {
                term *= scratch[i * stride + alpha[i] as usize];
            }
            total += term;
        }
        total
    }

    pub fn bombieri_product(&self, other: &Form) -> Result<f64> {
        self.same_shape(other)?;
        Ok(dot(&self.coeffs, &other.coeffs))
    }

    pub fn bombieri_norm(&self) -> f64 {
        dot(&self.coeffs, &self.coeffs).sqrt()
    }

    /// ℓ1 norm of the coefficients in the monomial basis `x^α`.
    pub fn monomial_l1_norm(&self) -> f64 {
        self.to_monomial().iter().map(|c| c.abs()).sum()
    }

    /// For `d = 2`, the symmetric matrix `A` with `f(x) = xᵗ A x`.
    pub fn quadratic_matrix(&self) -> Option<Matrix> {
        if self.degree() != 2 {
            return None;
        }
        let n = self.n();
        let mono = self.to_monomial();
        let mut a = Matrix::zeros(n, n);
        for (idx, alpha) in self.table.iter().enumerate() {
            let nz: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0).collect();
            match nz.as_slice() {
                [i] => a[(*i, *i)] = mono[idx],
                [i, j] => {
                    a[(*i, *j)] = 0.5 * mono[idx];
                    a[(*j, *i)] = 0.5 * mono[idx];
                }
                _ => unreachable!("degree-2 exponent"),
            }
        }
        Some(a)
    }

    pub fn from_quadratic_matrix(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape("quadratic form needs a square matrix".into()));
        }
        let n = a.rows();
        let table = Arc::new(MultiIndexTable::new(n, 2)?);
        let mono: Vec<f64> = table
            .iter()
            .map(|alpha| {
                let nz: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0).collect();
                match nz.as_slice() {
                    [i] => a[(*i, *i)],
                    [i, j] => a[(*i, *j)] + a[(*j, *i)],
                    _ => unreachable!("degree-2 exponent"),
                }
            })
            .collect();
        Self::from_monomial(n, 2, &mono)
    }

    pub fn max_abs_diff(&self, other: &Form) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// `scratch[i * (d+1) + k] = x_i^k`.
pub(crate) fn fill_powers(x: &[f64], d: usize, scratch: &mut Vec<f64>) {
    let stride = d + 1;
    scratch.clear();
    scratch.resize(x.len() * stride, 1.0);
    for (i, &xi) in x.iter().enumerate() {
        for k in 1..=d {
            scratch[i * stride + k] = scratch[i * stride + k - 1] * xi;
        }
    }
}

pub fn rescaled_from_monomial(n: usize, d: usize, monomial: &[f64]) -> Result<Form> {
    Form::from_monomial(n, d, monomial)
}

pub fn monomial_from_rescaled(f: &Form) -> Vec<f64> {
    f.to_monomial()
}

fn require_even(d: usize) -> Result<()> {
    if d % 2 != 0 {
        return Err(Error::Domain(format!("degree {d} is odd; an even degree is required")));
    }
    Ok(())
}

/// `b_{d,n}(x) = |x|^d = (x₁² + ⋯ + x_n²)^{d/2}`.
pub fn ball_form(n: usize, d: usize) -> Result<Form> {
    require_even(d)?;
    let half = MultiIndexTable::new(n, d / 2)?;
    let mut f = Form::zero(n, d)?;
    let table = Arc::clone(&f.table);
    let mut doubled = vec![0u32; n];
    for (idx, beta) in half.iter().enumerate() {
        for (dst, &b) in doubled.iter_mut().zip(beta) {
            *dst = 2 * b;
        }
        let pos = table.position(&doubled).expect("doubled exponent has degree d");
        let c = half.sqrt_multinomial(idx).powi(2);
        f.coeffs[pos] = c / table.sqrt_multinomial(pos);
    }
    Ok(f)
}

/// `x₁^d + ⋯ + x_n^d`.
pub fn powers_form(n: usize, d: usize) -> Result<Form> {
    let mut f = Form::zero(n, d)?;
    let mut alpha = vec![0u32; n];
    for i in 0..n {
        alpha.iter_mut().for_each(|a| *a = 0);
        alpha[i] = d as u32;
        let pos = f.table.position(&alpha).expect("pure power");
        f.coeffs[pos] = 1.0;
    }
    Ok(f)
}

/// `‖b_{d,n}‖_B² = Π_{i<d/2} (2i+n)/(2i+1)`.
fn ball_bombieri_sq(n: usize, d: usize) -> f64 {
    (0..d / 2).map(|i| (2 * i + n) as f64 / (2 * i + 1) as f64).product()
}

pub fn bombieri_norm_ball_exact(n: usize, d: usize) -> Result<f64> {
    require_even(d)?;
    Ok(ball_bombieri_sq(n, d).sqrt())
}

/// Nuclear norm of the ball form, equal to its squared Bombieri norm.
pub fn nuclear_norm_ball(n: usize, d: usize) -> Result<f64> {
    require_even(d)?;
    Ok(ball_bombieri_sq(n, d))
}

/// `(y·x)^d`, whose rescaled coefficients are `sqrt(d!/α!) y^α`.
pub fn power_form(y: &[f64], d: usize) -> Result<Form> {
    let mut f = Form::zero(y.len(), d)?;
    let mut scratch = Vec::new();
    fill_powers(y, d, &mut scratch);
    let stride = d + 1;
    let table = Arc::clone(&f.table);
    for (idx, alpha) in table.iter().enumerate() {
        let mut c = table.sqrt_multinomial(idx);
        for (i, &a) in alpha.iter().enumerate() {
            c *= scratch[i * stride + a as usize];
        }
        f.coeffs[idx] = c;
    }
    Ok(f)
}

/// One term `λ (y·x)^d` of a power-sum decomposition, `y` on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTerm {
    pub weight: f64,
    pub direction: Vec<f64>,
}

/// Σ|λ_k| for a decomposition `f = Σ λ_k (y_k·x)^d`, after checking that the
/// decomposition reproduces `f` to within `tol` in Bombieri norm.
pub fn nuclear_upper_bound(terms: &[PowerTerm], f: &Form, tol: f64) -> Result<f64> {
    let mut acc = Form::with_table(Arc::clone(&f.table), vec![0.0; f.len()])?;
    for term in terms {
        if term.direction.len() != f.n() {
            return Err(Error::Shape(format!(
                "direction has {} coordinates, form has n={}",
                term.direction.len(),
                f.n()
            )));
        }
        let norm = crate::linalg::norm2(&term.direction);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("direction has length {norm}, expected 1")));
        }
        acc = acc.add_scaled(term.weight, &power_form(&term.direction, f.degree())?)?;
    }
    let residual = acc.add_scaled(-1.0, f)?.bombieri_norm();
    if !(residual <= tol) {
        return Err(Error::InvalidCertificate { residual, tol });
    }
    Ok(terms.iter().map(|t| t.weight.abs()).sum())
}
