use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::eigen::{check_symmetric, eigh};
use crate::error::{Error, Result};
use crate::form::{Form, MultiIndexTable};
use crate::linalg::Matrix;
use crate::special::binomial;

/// `N = C(d/2 + n − 1, n − 1)`, the size of a Gram matrix for degree `d`.
pub fn gram_dimension(n: usize, d: usize) -> Result<usize> {
    if d % 2 != 0 {
        return Err(Error::Domain(format!("degree {d} is odd; Gram matrices need even degree")));
    }
    if n == 0 {
        return Err(Error::Domain("variable count must be at least 1".into()));
    }
    binomial(d / 2 + n - 1, n - 1)
}

/// Symmetric `N×N` matrix `G` standing for the form `m(x)ᵗ G m(x)`, where
/// `m(x)` lists the rescaled monomials of degree `d/2` in table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    n: usize,
    d: usize,
    matrix: Matrix,
}

impl GramMatrix {
    pub fn new(n: usize, d: usize, matrix: Matrix) -> Result<Self> {
        let dim = gram_dimension(n, d)?;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Shape(format!(
                "Gram matrix for n={n}, d={d} must be {dim}x{dim}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        check_symmetric(&matrix)?;
        Ok(Self { n, d, matrix: matrix.symmetrized() })
    }

    pub fn identity(n: usize, d: usize) -> Result<Self> {
        Self::new(n, d, Matrix::identity(gram_dimension(n, d)?))
    }

    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        let dim = gram_dimension(n, d)?;
        Self::new(n, d, Matrix::zeros(dim, dim))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { n: self.n, d: self.d, matrix: self.matrix.scale(t) }
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.matrix)?.eigenvalues.last().copied().unwrap_or(0.0))
    }
}

/// The linear map `G ↦ m(x)ᵗ G m(x)` for a fixed `(n, d)`, together with its
/// adjoint with respect to the Frobenius and Bombieri inner products.
///
/// `f_γ = Σ_{α+β=γ} G_αβ · c(α) c(β) / c(γ)` where `c` is the square root of
/// the multinomial coefficient of the relevant degree.
#[derive(Debug, Clone)]
pub struct GramMap {
    n: usize,
    d: usize,
    half: Arc<MultiIndexTable>,
    full: Arc<MultiIndexTable>,
    /// `(i, j, γ, weight)` for `i ≤ j`.
    entries: Vec<(usize, usize, usize, f64)>,
}

impl GramMap {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        gram_dimension(n, d)?;
        let half = Arc::new(MultiIndexTable::new(n, d / 2)?);
        let full = Arc::new(MultiIndexTable::new(n, d)?);
        let mut entries = Vec::with_capacity(half.len() * (half.len() + 1) / 2);
        let mut sum = vec![0u32; n];
        for i in 0..half.len() {
            for j in i..half.len() {
                for (k, s) in sum.iter_mut().enumerate() {
                    *s = half.get(i)[k] + half.get(j)[k];
                }
                let g = full.position(&sum).expect("sum of half-degree exponents");
                let w = half.sqrt_multinomial(i) * half.sqrt_multinomial(j) / full.sqrt_multinomial(g);
                entries.push((i, j, g, w));
            }
        }
        Ok(Self { n, d, half, full, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.half.len()
    }

    pub fn half_table(&self) -> &Arc<MultiIndexTable> {
        &self.half
    }

    fn check(&self, g: &GramMatrix) -> Result<()> {
        if g.n != self.n || g.d != self.d {
            return Err(Error::Shape(format!(
                "Gram matrix for (n={}, d={}) used with map for (n={}, d={})",
                g.n, g.d, self.n, self.d
            )));
        }
        Ok(())
    }

    pub fn apply(&self, g: &GramMatrix) -> Result<Form> {
        self.check(g)?;
        let m = g.matrix();
        let mut coeffs = vec![0.0; self.full.len()];
        for &(i, j, pos, w) in &self.entries {
            let v = if i == j { m[(i, i)] } else { m[(i, j)] + m[(j, i)] };
            coeffs[pos] += w * v;
        }
        Form::with_table(Arc::clone(&self.full), coeffs)
    }

    /// Adjoint: `⟨apply(G), f⟩_B = ⟨G, adjoint(f)⟩_F` for symmetric `G`.
    pub fn adjoint(&self, f: &Form) -> Result<Matrix> {
        if f.n() != self.n || f.degree() != self.d {
            return Err(Error::Shape("form does not match Gram map".into()));
        }
        let dim = self.dim();
        let mut out = Matrix::zeros(dim, dim);
        for &(i, j, pos, w) in &self.entries {
            let v = w * f.coeffs()[pos];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
        Ok(out)
    }

    /// The Gram matrix of `f` with least Frobenius norm. `apply ∘ adjoint` is
    /// diagonal, so this is `adjoint(D⁻¹ f)`. Not necessarily PSD.
    pub fn least_norm_gram(&self, f: &Form) -> Result<GramMatrix> {
        let mut diag = vec![0.0; self.full.len()];
        for &(i, j, pos, w) in &self.entries {
            diag[pos] += if i == j { w * w } else { 2.0 * w * w };
        }
        let h: Vec<f64> = f.coeffs().iter().zip(&diag).map(|(c, q)| c / q).collect();
        let g = self.adjoint(&f.with_coeffs(h)?)?;
        GramMatrix::new(self.n, self.d, g)
    }

    /// Coefficient vector of a half-degree form as a column of `G`.
    fn half_coeffs<'a>(&self, s: &'a Form) -> Result<&'a [f64]> {
        if s.n() != self.n || 2 * s.degree() != self.d {
            return Err(Error::Shape(format!(
                "square root of degree {} in {} variables does not fit (n={}, d={})",
                s.degree(),
                s.n(),
                self.n,
                self.d
            )));
        }
        Ok(s.coeffs())
    }
}

pub fn form_from_gram(g: &GramMatrix) -> Result<Form> {
    GramMap::new(g.n(), g.degree())?.apply(g)
}

/// `G = Σ sᵢ sᵢᵗ` over the rescaled coefficient vectors of the `sᵢ`.
pub fn gram_from_squares(n: usize, d: usize, squares: &[Form]) -> Result<GramMatrix> {
    let map = GramMap::new(n, d)?;
    let dim = map.dim();
    let mut m = Matrix::zeros(dim, dim);
    for s in squares {
        let v = map.half_coeffs(s)?;
        for i in 0..dim {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                m[(i, j)] += v[i] * v[j];
            }
        }
    }
    GramMatrix::new(n, d, m)
}

/// Relative eigenvalue floor below which a Gram matrix counts as indefinite.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Forms `s_k = sqrt(λ_k) q_kᵗ m(x)` with `Σ s_k² = m(x)ᵗ G m(x)`.
///
/// Eigenvalues in `[−1e-9·λ_max, 0)` are clamped to zero; components whose
/// eigenvalue is not above `1e-14·λ_max` are omitted, so a rank-`r` matrix
/// yields `r` forms.
pub fn sos_decompose(g: &GramMatrix) -> Result<Vec<Form>> {
    let eig = eigh(g.matrix())?;
    let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if lmin < -PSD_TOLERANCE * lmax || (lmax == 0.0 && lmin < 0.0) {
        return Err(Error::Domain(format!(
            "Gram matrix is indefinite (λ_min = {lmin:.3e}, λ_max = {lmax:.3e})"
        )));
    }
    let half = Arc::new(MultiIndexTable::new(g.n(), g.degree() / 2)?);
    let mut out = Vec::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= 1e-14 * lmax || lam <= 0.0 {
            continue;
        }
        let r = lam.sqrt();
        let coeffs = eig.eigenvector(k).into_iter().map(|q| q * r).collect();
        out.push(Form::with_table(Arc::clone(&half), coeffs)?);
    }
    Ok(out)
}
