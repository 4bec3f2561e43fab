use ballopt::form::{
    apply_orthogonal, monomial_from_rescaled, power_form, rescaled_from_monomial, Form, MultiIndexTable,
    OrthogonalMatrix,
};
use ballopt::linalg::Matrix;
use ballopt::sos::{
    eigh, form_from_gram, induced_representation, project_capped_simplex, project_psd_schatten_ball, schatten_norm,
    GramMatrix,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=6)
}

fn form_strategy() -> impl Strategy<Value = Form> {
    shape().prop_flat_map(|(n, d)| {
        let len = ballopt::form::dimension(n, d).unwrap();
        prop::collection::vec(-3.0f64..3.0, len).prop_map(move |c| Form::new(n, d, c).unwrap())
    })
}

fn even_form_strategy() -> impl Strategy<Value = Form> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, h)| {
        let len = ballopt::form::dimension(n, 2 * h).unwrap();
        prop::collection::vec(-3.0f64..3.0, len).prop_map(move |c| Form::new(n, 2 * h, c).unwrap())
    })
}

fn symmetric(dim: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, dim * dim).prop_map(move |v| {
        let m = Matrix::from_row_major(dim, dim, v).unwrap();
        m.add(&m.transpose()).unwrap().scale(0.5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monomial_round_trip(f in form_strategy()) {
        let back = rescaled_from_monomial(f.n(), f.degree(), &monomial_from_rescaled(&f)).unwrap();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn positions_invert_the_table((n, d) in shape()) {
        let t = MultiIndexTable::new(n, d).unwrap();
        for i in 0..t.len() {
            prop_assert_eq!(t.position(t.get(i)), Some(i));
        }
    }

    #[test]
    fn bombieri_product_evaluates_at_powers(f in form_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..f.n()).map(|_| rand::Rng::random_range(&mut rng, -1.5..1.5)).collect();
        let via_product = f.bombieri_product(&power_form(&y, f.degree()).unwrap()).unwrap();
        let direct = f.evaluate(&y).unwrap();
        prop_assert!((via_product - direct).abs() <= 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn homogeneity(f in form_strategy(), t in -2.0f64..2.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..f.n()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let lhs = f.evaluate(&tx).unwrap();
        let rhs = t.powi(f.degree() as i32) * f.evaluate(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn rotations_preserve_bombieri_norm(f in form_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = OrthogonalMatrix::random(f.n(), &mut rng);
        let g = apply_orthogonal(&f, &rho).unwrap();
        prop_assert!((g.bombieri_norm() - f.bombieri_norm()).abs() <= 1e-10 * f.bombieri_norm().max(1.0));
    }

    #[test]
    fn gram_map_is_linear(f in even_form_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0, seed in any::<u64>()) {
        let (n, d) = (f.n(), f.degree());
        let dim = ballopt::sos::gram_dimension(n, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample = || {
            let m = Matrix::from_row_major(dim, dim, (0..dim * dim).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect()).unwrap();
            m.add(&m.transpose()).unwrap()
        };
        let (g, h) = (sample(), sample());
        let combo = g.scale(a).add(&h.scale(b)).unwrap();
        let lhs = form_from_gram(&GramMatrix::new(n, d, combo).unwrap()).unwrap();
        let fg = form_from_gram(&GramMatrix::new(n, d, g).unwrap()).unwrap();
        let fh = form_from_gram(&GramMatrix::new(n, d, h).unwrap()).unwrap();
        let rhs = fg.scaled(a).add_scaled(b, &fh).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * (1.0 + a.abs() + b.abs()) * 8.0);
    }

    #[test]
    fn equivariance((n, h) in (1usize..=4, 1usize..=3), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = OrthogonalMatrix::random(n, &mut rng);
        let r = induced_representation(&rho, n, h).unwrap();
        let dim = r.rows();
        prop_assert!(r.transpose().matmul(&r).unwrap().sub(&Matrix::identity(dim)).unwrap().max_abs() <= 1e-10);
        let m = Matrix::from_row_major(dim, dim, (0..dim * dim).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect()).unwrap();
        let g = m.add(&m.transpose()).unwrap();
        let conj = r.transpose().matmul(&g).unwrap().matmul(&r).unwrap().symmetrized();
        let lhs = apply_orthogonal(&form_from_gram(&GramMatrix::new(n, 2 * h, g).unwrap()).unwrap(), &rho).unwrap();
        let rhs = form_from_gram(&GramMatrix::new(n, 2 * h, conj).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-9);
    }

    #[test]
    fn eigh_trace_and_reconstruction(s in (1usize..=6).prop_flat_map(symmetric)) {
        let e = eigh(&s).unwrap();
        let sum: f64 = e.eigenvalues.iter().sum();
        prop_assert!((sum - s.trace()).abs() <= 1e-10 * s.max_abs().max(1.0) * s.rows() as f64);
        prop_assert!(e.recompose().sub(&s).unwrap().max_abs() <= 1e-9 * s.max_abs().max(1.0));
        let q = &e.eigenvectors;
        prop_assert!(q.transpose().matmul(q).unwrap().sub(&Matrix::identity(s.rows())).unwrap().max_abs() <= 1e-10);
        for w in e.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn schatten_is_conjugation_invariant(s in (1usize..=5).prop_flat_map(symmetric), p in 1.0f64..6.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = OrthogonalMatrix::random(s.rows(), &mut rng);
        let conj = r.matrix().transpose().matmul(&s).unwrap().matmul(r.matrix()).unwrap().symmetrized();
        let a = schatten_norm(&s, p).unwrap();
        prop_assert!((schatten_norm(&conj, p).unwrap() - a).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn psd_schatten_projection_is_idempotent(s in (1usize..=5).prop_flat_map(symmetric), which in 0usize..3) {
        let p = [1.0, 2.0, f64::INFINITY][which];
        let once = project_psd_schatten_ball(&s, p).unwrap();
        let twice = project_psd_schatten_ball(&once, p).unwrap();
        prop_assert!(twice.sub(&once).unwrap().max_abs() <= 1e-12);
        prop_assert!(schatten_norm(&once, p).unwrap() <= 1.0 + 1e-12);
        prop_assert!(eigh(&once).unwrap().eigenvalues.last().copied().unwrap() >= -1e-12);
    }

    #[test]
    fn capped_simplex_projection_is_feasible_and_nearest(v in prop::collection::vec(-2.0f64..2.0, 1..8), seed in any::<u64>()) {
        let w = project_capped_simplex(&v);
        prop_assert!(w.iter().all(|x| *x >= 0.0));
        prop_assert!(w.iter().sum::<f64>() <= 1.0 + 1e-12);
        // no random feasible point is closer
        let dist = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..v.len()).map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0)).collect();
            let total: f64 = raw.iter().sum::<f64>() * rand::Rng::random_range(&mut rng, 1.0..3.0);
            let feasible: Vec<f64> = raw.iter().map(|x| x / total).collect();
            prop_assert!(dist(&w) <= dist(&feasible) + 1e-12);
        }
    }
}

#[test]
fn projection_never_moves_away_from_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let dim = 4;
    let mut draw = |scale: f64| {
        let m = Matrix::from_row_major(dim, dim, (0..dim * dim).map(|_| rand::Rng::random_range(&mut rng, -scale..scale)).collect()).unwrap();
        m.add(&m.transpose()).unwrap()
    };
    let s = draw(2.0);
    let proj = project_psd_schatten_ball(&s, 2.0).unwrap();
    for _ in 0..100 {
        let h = draw(1.0);
        let feasible = project_psd_schatten_ball(&h, 2.0).unwrap();
        let before = s.sub(&feasible).unwrap().frobenius();
        let after = proj.sub(&feasible).unwrap().frobenius();
        assert!(after <= before + 1e-12);
    }
}
