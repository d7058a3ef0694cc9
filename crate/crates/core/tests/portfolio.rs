use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_ofo::framework::{RunConfig, Strategy, Verification};
use robust_ofo::io::InstanceFile;
use robust_ofo::linalg::norm2;
use robust_ofo::portfolio::{
    build_robust_instance, default_level, deviation_ratio, generate_instance, optimize_by_levels, perturbation_count,
    robust_optimum, PortfolioParams,
};

fn unit_vector(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm2(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

#[test]
fn column_deviation_stays_within_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (n, m) in [(10, 1), (20, 3), (15, 8)] {
        let pi = generate_instance(&PortfolioParams::new(n, m, 1.0, 42)).unwrap();
        assert_eq!(pi.k(), perturbation_count(m));
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            worst = worst.max(deviation_ratio(&pi, &unit_vector(&mut rng, pi.k())));
        }
        assert!(worst <= 1.0 + 1e-9, "ratio {worst}");
        // Each column bound is attained by some direction, so random draws get close.
        assert!(worst > 0.5);
    }
}

#[test]
fn instance_file_round_trip_and_determinism() {
    let params = PortfolioParams::new(12, 3, 1.0, 9);
    let pi = generate_instance(&params).unwrap();
    let file = InstanceFile::from_portfolio(&pi, -3.0).unwrap();
    let text = file.to_json().unwrap();
    assert_eq!(InstanceFile::from_json(&text).unwrap(), file);
    let again = InstanceFile::from_portfolio(&generate_instance(&params).unwrap(), -3.0).unwrap();
    assert_eq!(again.to_json().unwrap(), text);
    let meta = file.meta.as_ref().unwrap();
    assert_eq!((meta.seed, meta.k), (9, Some(6)));
    file.to_instance().unwrap();
}

#[test]
fn level_search_brackets_the_optimum() {
    let pi = generate_instance(&PortfolioParams::new(6, 2, 1.0, 3).with_samples(30)).unwrap();
    let best = robust_optimum(&pi, 1e-6, 200_000).unwrap();
    let uniform = pi.robust_objective(&[1.0 / 6.0; 6]).unwrap();
    let eps = 0.005;
    let config = RunConfig::new(eps)
        .with_strategy(Strategy::FullPessimization)
        .with_max_iterations(500);
    let search = optimize_by_levels(&pi, &config, pi.objective_floor(), uniform, 0.02).unwrap();
    assert!(search.converged);
    let point = search.point.expect("some level is feasible");
    // The point is ε-feasible at the upper level and the bracket contains the optimum.
    assert!(pi.robust_objective(&point).unwrap() <= search.upper + eps + 1e-9);
    assert!(search.lower <= best.value + 1e-9);
    assert!(search.upper >= best.lower_bound - eps - 1e-9);
}

#[test]
fn default_level_is_certified_feasible() {
    let pi = generate_instance(&PortfolioParams::new(8, 2, 1.0, 5).with_samples(30)).unwrap();
    let level = default_level(&pi, 0.25).unwrap();
    let instance = build_robust_instance(&pi, level).unwrap();
    let config = RunConfig::new(0.002)
        .with_verification(Verification::Every(1))
        .with_max_iterations(100_000);
    let out = robust_ofo::solve(&instance, &config).unwrap();
    let point = out.verdict.point().expect("feasible");
    assert!(pi.robust_objective(point).unwrap() <= level + 0.002 + 1e-9);
}
