use super::eigen::{check_symmetric, eigh};
use super::gram::GramMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `(Σ|λᵢ|^p)^{1/p}`; `p = ∞` gives the spectral norm.
pub fn schatten_norm(g: &Matrix, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("Schatten exponent must be ≥ 1, got {p}")));
    }
    let eig = eigh(g)?;
    Ok(lp_of(&eig.eigenvalues, p))
}

pub fn spectral_norm(g: &Matrix) -> Result<f64> {
    schatten_norm(g, f64::INFINITY)
}

pub(crate) fn lp_of(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum();
    }
    // factor out the largest magnitude to keep |λ|^p finite
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    top * values.iter().map(|v| (v.abs() / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx ≤ 1}`.
pub fn project_capped_simplex(v: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= 1.0 {
        return clamped;
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn project_eigenvalues(lam: &[f64], p: f64) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = lam.iter().map(|x| x.max(0.0)).collect();
    if p == 1.0 {
        Ok(project_capped_simplex(lam))
    } else if p == 2.0 {
        let norm = clamped.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(if norm > 1.0 { clamped.iter().map(|x| x / norm).collect() } else { clamped })
    } else if p.is_infinite() {
        Ok(clamped.iter().map(|x| x.min(1.0)).collect())
    } else {
        Err(Error::Domain(format!("projection supports p ∈ {{1, 2, ∞}}, got {p}")))
    }
}

/// Nearest point (Frobenius) of `{G ⪰ 0, ‖G‖_p ≤ 1}` to symmetric `s`.
///
/// Both constraint sets are spectral (invariant under `G ↦ RᵗGR`), so the
/// projection keeps the eigenvectors of `s` and projects its eigenvalue
/// vector onto `{λ ≥ 0, ‖λ‖_p ≤ 1}`.
pub fn project_psd_schatten_ball(s: &Matrix, p: f64) -> Result<Matrix> {
    check_symmetric(s)?;
    if !(p == 1.0 || p == 2.0 || p.is_infinite()) {
        return Err(Error::Domain(format!("projection supports p ∈ {{1, 2, ∞}}, got {p}")));
    }
    let eig = eigh(s)?;
    let lam = project_eigenvalues(&eig.eigenvalues, p)?;
    Ok(eig.recompose_with(&lam))
}

pub fn project_gram(g: &GramMatrix, p: f64) -> Result<GramMatrix> {
    GramMatrix::new(g.n(), g.degree(), project_psd_schatten_ball(g.matrix(), p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::OrthogonalMatrix;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        Matrix::from_row_major(n, n, data).unwrap().symmetrized()
    }

    #[test]
    fn identity_norms() {
        for n in 1..8 {
            let id = Matrix::identity(n);
            for p in [1.0, 2.0, 3.5] {
                assert_relative_eq!(schatten_norm(&id, p).unwrap(), (n as f64).powf(1.0 / p), max_relative = 1e-12);
            }
            assert_eq!(spectral_norm(&id).unwrap(), 1.0);
        }
    }

    #[test]
    fn diagonal_examples() {
        let g = Matrix::from_diagonal(&[3.0, -4.0]);
        assert_relative_eq!(schatten_norm(&g, 1.0).unwrap(), 7.0, max_relative = 1e-15);
        assert_relative_eq!(schatten_norm(&g, 2.0).unwrap(), 5.0, max_relative = 1e-15);
        assert_eq!(spectral_norm(&g).unwrap(), 4.0);
        assert!(matches!(schatten_norm(&g, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let g = random_sym(6, &mut rng);
            let r = OrthogonalMatrix::random(6, &mut rng);
            let conj = r.matrix().transpose().matmul(&g).unwrap().matmul(r.matrix()).unwrap().symmetrized();
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                let a = schatten_norm(&g, p).unwrap();
                let b = schatten_norm(&conj, p).unwrap();
                assert!((a - b).abs() <= 1e-10 * a);
            }
        }
    }

    #[test]
    fn frobenius_agrees_with_schatten_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let g = random_sym(5, &mut rng);
        assert_relative_eq!(schatten_norm(&g, 2.0).unwrap(), g.frobenius(), max_relative = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let n = 4;
        let s = Matrix::identity(n).scale(1.0 / (2.0 * n as f64));
        let p = project_psd_schatten_ball(&s, 1.0).unwrap();
        assert!(p.sub(&s).unwrap().max_abs() < 1e-15);

        let s = Matrix::from_diagonal(&[0.8, 0.8]);
        let p = project_psd_schatten_ball(&s, 1.0).unwrap();
        assert!(p.sub(&Matrix::from_diagonal(&[0.5, 0.5])).unwrap().max_abs() < 1e-15);

        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let p = project_psd_schatten_ball(&s, f64::INFINITY).unwrap();
        let want = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(p.sub(&want).unwrap().max_abs() < 1e-14);

        assert!(matches!(project_psd_schatten_ball(&s, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn capped_simplex() {
        assert_eq!(project_capped_simplex(&[0.2, -1.0, 0.3]), vec![0.2, 0.0, 0.3]);
        let p = project_capped_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_capped_simplex(&[0.9, 0.6, 0.1]);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(p[0] - p[1], 0.3, max_relative = 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for p in [1.0, 2.0, f64::INFINITY] {
            for _ in 0..20 {
                let s = random_sym(5, &mut rng).scale(2.0);
                let once = project_psd_schatten_ball(&s, p).unwrap();
                let twice = project_psd_schatten_ball(&once, p).unwrap();
                assert!(twice.sub(&once).unwrap().max_abs() <= 1e-12);
                let eig = eigh(&once).unwrap();
                assert!(*eig.eigenvalues.last().unwrap() >= -1e-12);
                assert!(schatten_norm(&once, p).unwrap() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_nearest_among_sampled_feasible_points() {
        // the projection must beat every feasible competitor, and for p = 2 it
        // must not increase the distance to any feasible point
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let s = random_sym(4, &mut rng).scale(1.5);
        let proj = project_psd_schatten_ball(&s, 2.0).unwrap();
        let d0 = proj.sub(&s).unwrap().frobenius();
        for _ in 0..100 {
            let w = random_sym(4, &mut rng);
            let feasible = project_psd_schatten_ball(&w.matmul(&w).unwrap(), 2.0).unwrap();
            assert!(feasible.sub(&s).unwrap().frobenius() >= d0 - 1e-12);
            assert!(proj.sub(&feasible).unwrap().frobenius() <= s.sub(&feasible).unwrap().frobenius() + 1e-12);
        }
    }
}
