use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_ofo::geometry::{Domain, ProximalSetup, MEMBERSHIP_TOL};
use robust_ofo::linalg::{dist2, dot};
use robust_ofo::oco::{
    brent_minimize, minimize_convex, NominalOptions, NominalStatus, OmdState, StepMode, WeightScheme,
};

fn setups(n: usize) -> Vec<ProximalSetup> {
    vec![
        ProximalSetup::unit_ball(n).unwrap(),
        ProximalSetup::ball(vec![0.5; n], 2.0).unwrap(),
        ProximalSetup::simplex(n).unwrap(),
        ProximalSetup::cube(vec![-1.0; n], vec![2.0; n]).unwrap(),
    ]
}

/// Gradient of dual norm `g_bound`: random, or aimed at the current point.
fn adversarial(setup: &ProximalSetup, z: &[f64], g_bound: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = z.len();
    let mut g: Vec<f64> = if rng.random_bool(0.5) {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    } else {
        // Rewards moving toward the opposite corner of the domain.
        let init = setup.initial_point();
        (0..n).map(|i| if z[i] >= init[i] { 1.0 } else { -1.0 }).collect()
    };
    let norm = setup.dual_norm(&g);
    if norm > 0.0 {
        g.iter_mut().for_each(|v| *v *= g_bound / norm);
    }
    g
}

/// Runs linear losses and checks the weighted regret against the bound at every prefix.
fn check_regret(setup: ProximalSetup, scheme: WeightScheme, g_bound: f64, steps: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = OmdState::new(setup.clone(), g_bound, scheme, StepMode::Theoretical).unwrap();
    let bound = state.regret_bound();
    let weight = |t: usize| match scheme {
        WeightScheme::UniformAnytime => 1.0 / t as f64,
        WeightScheme::FixedHorizon(h) => 1.0 / h as f64,
    };
    let mut played = 0.0;
    let mut sum = vec![0.0; setup.dim()];
    for t in 1..=steps {
        let z = state.point().to_vec();
        assert!(setup.contains(&z, MEMBERSHIP_TOL));
        let g = adversarial(&setup, &z, g_bound, &mut rng);
        played += dot(&g, &z);
        for (s, gi) in sum.iter_mut().zip(&g) {
            *s += gi;
        }
        let (best, _) = setup.linear_minimum(&sum);
        let regret = weight(t) * (played - best);
        if regret > bound.at(t) * (1.0 + 1e-6) {
            return Err(format!("t = {t}: regret {regret} > bound {}", bound.at(t)));
        }
        state.step(&g).unwrap();
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regret_within_bound(n in 1usize..6, which in 0usize..4, g_bound in 0.1f64..10.0, seed in any::<u64>(), fixed in any::<bool>()) {
        let setup = setups(n)[which].clone();
        let steps = 300;
        let scheme = if fixed { WeightScheme::FixedHorizon(steps) } else { WeightScheme::UniformAnytime };
        prop_assert_eq!(check_regret(setup, scheme, g_bound, steps, seed), Ok(()));
    }

    #[test]
    fn projection_is_nonexpansive(n in 1usize..8, which in 0usize..4,
                                  a in prop::collection::vec(-5.0f64..5.0, 8),
                                  b in prop::collection::vec(-5.0f64..5.0, 8)) {
        let setup = setups(n)[which].clone();
        let pa = setup.project(&a[..n]).unwrap();
        let pb = setup.project(&b[..n]).unwrap();
        prop_assert!(setup.contains(&pa, MEMBERSHIP_TOL));
        prop_assert!(dist2(&pa, &pb) <= dist2(&a[..n], &b[..n]) + 1e-12);
    }

    #[test]
    fn projection_is_idempotent(n in 1usize..8, which in 0usize..4, a in prop::collection::vec(-5.0f64..5.0, 8)) {
        let setup = setups(n)[which].clone();
        let p = setup.project(&a[..n]).unwrap();
        let pp = setup.project(&p).unwrap();
        prop_assert!(dist2(&p, &pp) <= 1e-12);
    }

    #[test]
    fn simplex_projection_matches_threshold_bisection(a in prop::collection::vec(-3.0f64..3.0, 1..10)) {
        let n = a.len();
        let setup = ProximalSetup::simplex(n).unwrap();
        let p = setup.project(&a).unwrap();
        // Projection is max(a − θ, 0) with θ making the sum one.
        let mass = |th: f64| a.iter().map(|v| (v - th).max(0.0)).sum::<f64>();
        let (mut lo, mut hi) = (a.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0, a.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) > 1.0 { lo = mid } else { hi = mid }
        }
        let th = 0.5 * (lo + hi);
        for (pi, ai) in p.iter().zip(&a) {
            prop_assert!((pi - (ai - th).max(0.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_prox_is_multiplicative_weights(z in prop::collection::vec(0.01f64..1.0, 2..8), g in prop::collection::vec(-20.0f64..20.0, 8)) {
        let total: f64 = z.iter().sum();
        let z: Vec<f64> = z.iter().map(|v| v / total).collect();
        let n = z.len();
        let setup = ProximalSetup::simplex(n).unwrap();
        let out = setup.prox_step(&z, &g[..n]).unwrap();
        let w: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi * (-gi).exp()).collect();
        let s: f64 = w.iter().sum();
        for (o, wi) in out.iter().zip(&w) {
            prop_assert!((o - wi / s).abs() < 1e-12);
        }
    }

    #[test]
    fn prox_step_stays_in_domain(n in 1usize..6, which in 0usize..4, g in prop::collection::vec(-1e3f64..1e3, 6)) {
        let setup = setups(n)[which].clone();
        let z = setup.initial_point();
        let out = setup.prox_step(&z, &g[..n]).unwrap();
        prop_assert!(setup.contains(&out, MEMBERSHIP_TOL));
    }

    #[test]
    fn linear_minimum_beats_samples(n in 1usize..6, which in 0usize..4, g in prop::collection::vec(-3.0f64..3.0, 6), seed in any::<u64>()) {
        let setup = setups(n)[which].clone();
        let (value, argmin) = setup.linear_minimum(&g[..n]);
        prop_assert!((dot(&g[..n], &argmin) - value).abs() < 1e-9);
        prop_assert!(setup.contains(&argmin, MEMBERSHIP_TOL));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let z = setup.project(&raw).unwrap();
            prop_assert!(dot(&g[..n], &z) >= value - 1e-9);
        }
    }
}

#[test]
fn adversarial_regret_long_horizon() {
    for (i, setup) in setups(4).into_iter().enumerate() {
        check_regret(setup.clone(), WeightScheme::UniformAnytime, 1.5, 2000, i as u64).unwrap();
        check_regret(setup, WeightScheme::FixedHorizon(2000), 1.5, 2000, 100 + i as u64).unwrap();
    }
}

#[test]
fn zero_gradient_bound_never_moves() {
    let setup = ProximalSetup::unit_ball(2).unwrap();
    let mut state = OmdState::new(setup, 0.0, WeightScheme::UniformAnytime, StepMode::Theoretical).unwrap();
    let report = state.step(&[0.0, 0.0]).unwrap();
    assert!(!report.bound_violated);
    assert_eq!(state.point(), &[0.0, 0.0]);
    assert!(state.step(&[1.0, 0.0]).unwrap().bound_violated);
    assert_eq!(state.bound_violations(), 1);
}

#[test]
fn line_search_never_worse_than_theory() {
    let setup = ProximalSetup::unit_ball(2).unwrap();
    let loss = |z: &[f64]| (z[0] - 0.3).powi(2) + (z[1] + 0.8).powi(2);
    let mut theory = OmdState::new(setup.clone(), 2.0, WeightScheme::FixedHorizon(50), StepMode::Theoretical).unwrap();
    let mut searched = OmdState::new(setup, 2.0, WeightScheme::FixedHorizon(50), StepMode::LineSearch).unwrap();
    let grad = |z: &[f64]| vec![2.0 * (z[0] - 0.3), 2.0 * (z[1] + 0.8)];
    let g = grad(theory.point());
    theory.step(&g).unwrap();
    searched.step_line_search(&g, loss).unwrap();
    assert!(loss(searched.point()) <= loss(theory.point()) + 1e-12);
}

#[test]
fn brent_finds_quadratic_minimum() {
    let r = brent_minimize(|s| (s - 1.7).powi(2) + 3.0, 0.0, 5.0, 1e-8);
    assert!((r.argmin - 1.7).abs() < 1e-6);
    assert!((r.value - 3.0).abs() < 1e-10);
}

#[test]
fn nominal_lower_bound_is_certified() {
    // min over the box [-1,2]^2 of |x0 − 3| + (x1 − 0.5)², minimum 1 at (2, 0.5).
    let setup = ProximalSetup::new(Domain::Box { lower: vec![-1.0; 2], upper: vec![2.0; 2] }).unwrap();
    let sol = minimize_convex(
        &setup,
        |x| {
            let v = (x[0] - 3.0).abs() + (x[1] - 0.5).powi(2);
            Ok((v, vec![(x[0] - 3.0).signum(), 2.0 * (x[1] - 0.5)]))
        },
        &NominalOptions::new(1e-3, 1_000_000),
    )
    .unwrap();
    assert_eq!(sol.status, NominalStatus::Converged);
    assert!(sol.lower_bound <= 1.0 + 1e-12);
    assert!(sol.value - 1.0 <= 1e-3);
}
