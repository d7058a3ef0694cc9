use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_ofo::linalg::{dot, norm2, Matrix};
use robust_ofo::robust_qp::{
    jacobi_eigen, max_eigenvalue, power_iteration, qp_bounds, qp_eval, qp_grad_u, qp_grad_x, quadratic_value,
    spectral_norm, trs_max, RobustQpConstraint,
};
use robust_ofo::framework::RobustConstraint;
use robust_ofo::ProximalSetup;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

fn random_constraint(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> RobustQpConstraint {
    let a = random_matrix(rng, m, n, 1.0);
    let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = (0..k).map(|_| random_matrix(rng, m, n, 0.5)).collect();
    RobustQpConstraint::new(a, b, rng.random_range(-0.5..0.5), p).unwrap()
}

fn random_ball_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if norm2(&v) <= 1.0 {
            return v;
        }
    }
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// `(Q_x, r_x, s_x)` assembled with nalgebra from the raw data.
fn na_form(c: &RobustQpConstraint, x: &[f64]) -> (DMatrix<f64>, DVector<f64>, f64) {
    let xv = DVector::from_column_slice(x);
    let ax = to_na(c.a()) * &xv;
    let cols: Vec<DVector<f64>> = c.p().iter().map(|pk| to_na(pk) * &xv).collect();
    let px = DMatrix::from_columns(&cols);
    let q = px.transpose() * &px;
    let r = px.transpose() * &ax;
    let s = ax.dot(&ax) - DVector::from_column_slice(c.b()).dot(&xv) - c.c();
    (q, r, s)
}

fn raw_value(c: &RobustQpConstraint, x: &[f64], u: &[f64]) -> f64 {
    c.raw_value(x, u).unwrap()
}

/// Maximizes the concave `qp_eval(x, ·)` over the unit ball by projected gradient ascent.
fn ascent_max(c: &RobustQpConstraint, x: &[f64]) -> f64 {
    let k = c.k();
    let l = 2.0 * c.quadratic_form(x).unwrap().q.frobenius_norm().max(1e-3);
    let mut best = f64::NEG_INFINITY;
    for start in 0..k + 1 {
        let mut u = vec![0.0; k];
        if start < k {
            u[start] = 0.5;
        }
        for _ in 0..20_000 {
            let g = qp_grad_u(c, x, &u).unwrap();
            for (ui, gi) in u.iter_mut().zip(&g) {
                *ui += gi / l;
            }
            let nu = norm2(&u);
            if nu > 1.0 {
                u.iter_mut().for_each(|v| *v /= nu);
            }
        }
        best = best.max(qp_eval(c, x, &u).unwrap());
    }
    best
}

#[test]
fn quadratic_form_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let c = random_constraint(&mut rng, 5, 3, 4);
        let x = random_ball_point(&mut rng, 5);
        let form = c.quadratic_form(&x).unwrap();
        let (q, r, s) = na_form(&c, &x);
        for i in 0..4 {
            assert!((form.r[i] - r[i]).abs() < 1e-12);
            for j in 0..4 {
                assert!((form.q[(i, j)] - q[(i, j)]).abs() < 1e-12);
            }
        }
        assert!((form.s - s).abs() < 1e-12);
    }
}

#[test]
fn jacobi_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [1, 2, 3, 7, 20] {
        let g = random_matrix(&mut rng, n, n, 1.0);
        let sym = g.matmul(&g.transpose()).scale(0.5);
        let mut s = sym.clone();
        s.add_scaled(&Matrix::identity(n), -0.3);
        let ours = jacobi_eigen(&s).unwrap();
        let mut theirs: Vec<f64> = SymmetricEigen::new(to_na(&s)).eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in ours.values.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for j in 0..n {
            let v = ours.vector(j);
            let sv = s.mul_vec(&v);
            for (x, y) in sv.iter().zip(&v) {
                assert!((x - ours.values[j] * y).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn power_iteration_on_large_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [70, 100] {
        let g = random_matrix(&mut rng, n, n, 1.0);
        let s = g.matmul(&g.transpose());
        let top = SymmetricEigen::new(to_na(&s)).eigenvalues.max();
        let (lam, v) = power_iteration(&s, 1e-12).unwrap();
        assert!((lam - top).abs() <= 1e-6 * top, "{lam} vs {top}");
        assert!((norm2(&v) - 1.0).abs() < 1e-9);
        let (lam2, _) = max_eigenvalue(&s, 1e-12).unwrap();
        assert!((lam2 - top).abs() <= 1e-6 * top);
    }
}

#[test]
fn spectral_norm_matches_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (r, c) in [(1, 5), (5, 1), (3, 8), (80, 10)] {
        let m = random_matrix(&mut rng, r, c, 1.0);
        let svd = to_na(&m).singular_values().max();
        assert!((spectral_norm(&m).unwrap() - svd).abs() <= 1e-8 * svd.max(1.0));
    }
}

#[test]
fn trs_beats_dense_circle_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let g = random_matrix(&mut rng, 2, 2, 1.0);
        let q = g.matmul(&g.transpose());
        let r = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let (u, v) = trs_max(&q, &r, 0.3, 1e-12).unwrap();
        assert!(norm2(&u) <= 1.0 + 1e-9);
        assert!((quadratic_value(&q, &r, 0.3, &u) - v).abs() < 1e-10);
        let grid = (0..200_000)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 200_000.0;
                quadratic_value(&q, &r, 0.3, &[t.cos(), t.sin()])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= grid - 1e-9 && v - grid < 1e-6, "{v} vs {grid}");
    }
}

#[test]
fn trs_hard_case() {
    // r orthogonal to the top eigenvector e1; the interior solution has norm < 1.
    let q = Matrix::from_diagonal(&[3.0, 1.0, 0.5]);
    let r = vec![0.0, 0.4, 0.2];
    let (u, v) = trs_max(&q, &r, 0.0, 1e-12).unwrap();
    assert!((norm2(&u) - 1.0).abs() < 1e-9);
    // μ = 3: u = (±t, 0.4/2, 0.2/2.5) with the first entry filling the sphere.
    let (u2, u3) = (0.2, 0.08);
    let u1 = (1.0f64 - u2 * u2 - u3 * u3).sqrt();
    let expected = quadratic_value(&q, &r, 0.0, &[u1, u2, u3]);
    assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");
}

#[test]
fn trs_rejects_indefinite() {
    let q = Matrix::from_diagonal(&[1.0, -1.0]);
    assert!(trs_max(&q, &[0.0, 0.0], 0.0, 1e-12).is_err());
}

#[test]
fn lemma_one_reformulation_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..40 {
        let k = rng.random_range(1..=4);
        let c = random_constraint(&mut rng, 4, 3, k);
        let x = random_ball_point(&mut rng, 4);
        let (_, exact) = c.pessimize(&x, 1e-12).unwrap();
        let ascent = ascent_max(&c, &x);
        assert!((exact - ascent).abs() < 1e-6, "{exact} vs {ascent}");
        // On the sphere the reformulation equals the raw quadratic.
        let mut u = random_ball_point(&mut rng, k);
        let nu = norm2(&u);
        u.iter_mut().for_each(|v| *v /= nu);
        assert!((qp_eval(&c, &x, &u).unwrap() - raw_value(&c, &x, &u)).abs() < 1e-10);
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 60 {
        let k = rng.random_range(1..=4);
        let c = random_constraint(&mut rng, 5, 3, k);
        let x = random_ball_point(&mut rng, 5);
        let eig = jacobi_eigen(&c.quadratic_form(&x).unwrap().q).unwrap();
        if k > 1 && eig.values[0] - eig.values[1] < 1e-3 {
            continue;
        }
        let u: Vec<f64> = random_ball_point(&mut rng, k).iter().map(|v| 0.9 * v).collect();
        let h = 1e-6;
        let gu = qp_grad_u(&c, &x, &u).unwrap();
        for j in 0..k {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (qp_eval(&c, &x, &up).unwrap() - qp_eval(&c, &x, &dn).unwrap()) / (2.0 * h);
            assert!((fd - gu[j]).abs() <= 1e-5 * gu[j].abs().max(1.0), "u: {fd} vs {}", gu[j]);
        }
        let gx = qp_grad_x(&c, &x, &u).unwrap();
        for j in 0..5 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let fd = (qp_eval(&c, &xp, &u).unwrap() - qp_eval(&c, &xm, &u).unwrap()) / (2.0 * h);
            assert!((fd - gx[j]).abs() <= 1e-5 * gx[j].abs().max(1.0), "x: {fd} vs {}", gx[j]);
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concave_in_u_convex_in_x(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_constraint(&mut rng, 4, 2, k);
        let x = random_ball_point(&mut rng, 4);
        let (u1, u2) = (random_ball_point(&mut rng, k), random_ball_point(&mut rng, k));
        let mid: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| 0.5 * (a + b)).collect();
        let f = |u: &[f64]| qp_eval(&c, &x, u).unwrap();
        prop_assert!(f(&mid) >= 0.5 * (f(&u1) + f(&u2)) - 1e-9);

        let u = random_ball_point(&mut rng, k);
        let (x1, x2) = (random_ball_point(&mut rng, 4), random_ball_point(&mut rng, 4));
        let xm: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.5 * (a + b)).collect();
        let g = |x: &[f64]| qp_eval(&c, x, &u).unwrap();
        prop_assert!(g(&xm) <= 0.5 * (g(&x1) + g(&x2)) + 1e-9);
    }

    #[test]
    fn subgradient_inequality_in_x(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_constraint(&mut rng, 4, 2, k);
        let u = random_ball_point(&mut rng, k);
        let (x, y) = (random_ball_point(&mut rng, 4), random_ball_point(&mut rng, 4));
        let g = qp_grad_x(&c, &x, &u).unwrap();
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        prop_assert!(qp_eval(&c, &y, &u).unwrap() >= qp_eval(&c, &x, &u).unwrap() + dot(&g, &d) - 1e-9);
    }

    #[test]
    fn gradient_norms_within_bounds(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_constraint(&mut rng, 5, 3, k);
        let bounds = qp_bounds(std::slice::from_ref(&c));
        let ball = ProximalSetup::unit_ball(5).unwrap();
        for _ in 0..20 {
            let x = random_ball_point(&mut rng, 5);
            let u = random_ball_point(&mut rng, k);
            let gu = norm2(&qp_grad_u(&c, &x, &u).unwrap());
            let gx = norm2(&qp_grad_x(&c, &x, &u).unwrap());
            prop_assert!(gu <= c.grad_u_bound(&ball) + 1e-9);
            prop_assert!(gx <= c.grad_x_bound(&ball) + 1e-9);
            prop_assert!(c.grad_u_bound(&ball) <= bounds.grad_u_bound() + 1e-12);
            prop_assert!(c.grad_x_bound(&ball) <= bounds.grad_x_bound() + 1e-12);
        }
    }

    #[test]
    fn simplex_bounds_hold(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_constraint(&mut rng, 5, 3, k);
        let simplex = ProximalSetup::simplex(5).unwrap();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
            let x = simplex.project(&raw).unwrap();
            let u = random_ball_point(&mut rng, k);
            let gx = qp_grad_x(&c, &x, &u).unwrap();
            let gu = qp_grad_u(&c, &x, &u).unwrap();
            prop_assert!(simplex.dual_norm(&gx) <= c.grad_x_bound(&simplex) + 1e-9);
            prop_assert!(norm2(&gu) <= c.grad_u_bound(&simplex) + 1e-9);
        }
    }

    #[test]
    fn pessimizer_dominates_samples(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_constraint(&mut rng, 4, 3, k);
        let x = random_ball_point(&mut rng, 4);
        let (u_star, v) = c.pessimize(&x, 1e-12).unwrap();
        prop_assert!((raw_value(&c, &x, &u_star) - v).abs() < 1e-9);
        for _ in 0..200 {
            let u = random_ball_point(&mut rng, k);
            prop_assert!(raw_value(&c, &x, &u) <= v + 1e-9);
            prop_assert!(qp_eval(&c, &x, &u).unwrap() <= v + 1e-9);
        }
    }
}

#[test]
fn zero_perturbation_rows_do_not_change_values() {
    // Padding A and the P_k with rows that vanish in every P_k.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c = random_constraint(&mut rng, 3, 2, 2);
    let extra = random_matrix(&mut rng, 2, 3, 1.0);
    let mut a_rows = c.a().to_rows();
    a_rows.extend(extra.to_rows());
    let p: Vec<Matrix> = c
        .p()
        .iter()
        .map(|pk| {
            let mut rows = pk.to_rows();
            rows.extend(vec![vec![0.0; 3]; 2]);
            Matrix::from_rows(&rows).unwrap()
        })
        .collect();
    let padded = RobustQpConstraint::new(Matrix::from_rows(&a_rows).unwrap(), c.b().to_vec(), c.c(), p).unwrap();
    let x = random_ball_point(&mut rng, 3);
    let u = random_ball_point(&mut rng, 2);
    let ex = extra.mul_vec(&x);
    let shift = dot(&ex, &ex);
    assert!((qp_eval(&padded, &x, &u).unwrap() - qp_eval(&c, &x, &u).unwrap() - shift).abs() < 1e-12);
    let g_pad = qp_grad_x(&padded, &x, &u).unwrap();
    let mut g = qp_grad_x(&c, &x, &u).unwrap();
    extra.tr_mul_vec_acc(&ex, 2.0, &mut g);
    for (a, b) in g_pad.iter().zip(&g) {
        assert!((a - b).abs() < 1e-12);
    }
}
