use crate::error::Result;
use crate::form::{apply_orthogonal, Form, MultiIndexTable, OrthogonalMatrix};
use crate::linalg::Matrix;

/// Matrix `R(ρ)` of the substitution action on degree-`half_d` forms in the
/// rescaled basis: row `α` holds the coefficients of `ρ*e_α`, where `e_α` is
/// the rescaled monomial. With this layout `ρ*(mᵗGm) = mᵗ(RᵗGR)m`.
pub fn induced_representation(rho: &OrthogonalMatrix, n: usize, half_d: usize) -> Result<Matrix> {
    if rho.n() != n {
        return Err(crate::Error::Shape(format!("ρ is {}x{}, expected n={n}", rho.n(), rho.n())));
    }
    let table = std::sync::Arc::new(MultiIndexTable::new(n, half_d)?);
    let dim = table.len();
    let mut r = Matrix::zeros(dim, dim);
    for a in 0..dim {
        let mut unit = vec![0.0; dim];
        unit[a] = 1.0;
        let e = Form::with_table(std::sync::Arc::clone(&table), unit)?;
        let moved = apply_orthogonal(&e, rho)?;
        for (b, &c) in moved.coeffs().iter().enumerate() {
            r[(a, b)] = c;
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::{form_from_gram, GramMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identity_rotation() {
        let r = induced_representation(&OrthogonalMatrix::identity(3), 3, 2).unwrap();
        assert_eq!(r, Matrix::identity(6));
    }

    #[test]
    fn degree_one_is_rho_transpose_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rho = OrthogonalMatrix::random(3, &mut rng);
        let r = induced_representation(&rho, 3, 1).unwrap();
        // e_i(ρᵗx) = Σ_j ρ_ji x_j, so row i of R is column i of ρ
        assert!(r.sub(&rho.matrix().transpose()).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn orthogonal_and_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let rho = OrthogonalMatrix::random(3, &mut rng);
            let r = induced_representation(&rho, 3, 2).unwrap();
            let rtr = r.transpose().matmul(&r).unwrap();
            assert!(rtr.sub(&Matrix::identity(6)).unwrap().max_abs() <= 1e-10);

            let data = (0..36).map(|_| rng.sample(StandardNormal)).collect();
            let g = Matrix::from_row_major(6, 6, data).unwrap().symmetrized();
            let g = GramMatrix::new(3, 4, g).unwrap();
            let lhs = apply_orthogonal(&form_from_gram(&g).unwrap(), &rho).unwrap();
            let conj = r.transpose().matmul(g.matrix()).unwrap().matmul(&r).unwrap().symmetrized();
            let rhs = form_from_gram(&GramMatrix::new(3, 4, conj).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-9);
        }
    }
}
