use std::f64::consts::{PI, SQRT_2};

use fsir_core::grid::{FunctionOnGrid, Grid};
use fsir_core::metrics::{compute_imse, compute_isb, compute_ivar, projection_correlation, MonteCarloSummary};
use fsir_core::simulation::{
    brownian_paths, generate_responses, sample_indices, simulate, simulate_brownian, true_beta, SimConfig, TrueModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn brownian_paths_start_at_zero_and_have_unit_variance_at_one() {
    let cfg = SimConfig {
        n: 10_000,
        seed: 5,
        ..SimConfig::default()
    };
    let paths = simulate_brownian(&cfg).unwrap();
    assert!(paths.iter().all(|x| x.values()[0] == 0.0));
    let ends: Vec<f64> = paths.iter().map(|x| *x.values().last().unwrap()).collect();
    let mean = ends.iter().sum::<f64>() / ends.len() as f64;
    let var = ends.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (ends.len() - 1) as f64;
    assert!((0.95..=1.05).contains(&var), "{var}");
    assert_eq!(paths, simulate_brownian(&cfg).unwrap());
}

#[test]
fn true_direction_has_unit_norm() {
    let exact = |p: usize| (true_beta(Grid::unit(p).unwrap()).l2_norm().powi(2) - 1.0).abs();
    assert!(exact(31) < 2e-2);
    assert!(exact(1001) < 1e-4);
}

#[test]
fn responses_follow_the_single_index_model() {
    let grid = Grid::unit(31).unwrap();
    let model = TrueModel::standard(grid);
    let quiet = SimConfig {
        noise_sd: 0.0,
        ..SimConfig::default()
    };
    let zero = FunctionOnGrid::zeros(grid);
    assert_eq!(generate_responses(&[zero], &model, &quiet).unwrap(), vec![4.0]);

    // Independent trapezoid rule written out by hand.
    let path = brownian_paths(grid, 1, 17).unwrap().remove(0);
    let t = grid.points();
    let f: Vec<f64> = t
        .iter()
        .zip(path.values())
        .map(|(&t, x)| SQRT_2 * (1.5 * PI * t).sin() * x)
        .collect();
    let h = 1.0 / 30.0;
    let integral = h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[30]));
    let y = generate_responses(&[path], &model, &quiet).unwrap()[0];
    assert!((y - (3.0 + integral.exp())).abs() < 1e-12);
}

#[test]
fn exp_index_range_is_moderate() {
    let grid = Grid::unit(31).unwrap();
    let model = TrueModel::standard(grid);
    let mut vals: Vec<f64> = brownian_paths(grid, 10_000, 8)
        .unwrap()
        .iter()
        .map(|x| model.index(x).unwrap().exp())
        .collect();
    vals.sort_by(f64::total_cmp);
    let (q05, q95) = (vals[500], vals[9500]);
    assert!(q05 > 0.4 && q95 < 1.8, "({q05}, {q95})");
}

#[test]
fn sparse_designs() {
    let cfg = SimConfig {
        n: 10_000,
        sparse: true,
        seed: 3,
        ..SimConfig::default()
    };
    let mut total = 0;
    for i in 0..cfg.n {
        let idx = sample_indices(&cfg, i);
        assert!((2..=10).contains(&idx.len()));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx[0] >= 1 && *idx.last().unwrap() <= 30);
        total += idx.len();
    }
    let mean = total as f64 / cfg.n as f64;
    assert!((5.9..=6.1).contains(&mean), "{mean}");

    let all = SimConfig {
        sparse: true,
        fixed_n_obs: Some(30),
        ..SimConfig::default()
    };
    assert_eq!(sample_indices(&all, 4), (1..=30).collect::<Vec<_>>());
}

#[test]
fn observed_values_are_path_values() {
    let cfg = SimConfig {
        n: 50,
        sparse: true,
        seed: 12,
        ..SimConfig::default()
    };
    let sim = simulate(&cfg).unwrap();
    let grid = cfg.grid().unwrap();
    for (i, s) in sim.dataset.subjects().iter().enumerate() {
        let idx = sample_indices(&cfg, i);
        assert_eq!(s.times, idx.iter().map(|&j| grid.point(j)).collect::<Vec<_>>());
        assert_eq!(
            s.values,
            idx.iter().map(|&j| sim.trajectories[i].values()[j]).collect::<Vec<_>>()
        );
        assert_eq!(s.response, sim.responses[i]);
    }
    assert_eq!(sim, simulate(&cfg).unwrap());
}

#[test]
fn smaller_samples_are_prefixes() {
    for sparse in [false, true] {
        let small = SimConfig {
            n: 100,
            sparse,
            seed: 77,
            ..SimConfig::default()
        };
        let large = SimConfig {
            n: 200,
            ..small.clone()
        };
        let (a, b) = (simulate(&small).unwrap(), simulate(&large).unwrap());
        assert_eq!(a.dataset.subjects(), &b.dataset.subjects()[..100]);
        assert_eq!(a.trajectories[..], b.trajectories[..100]);
    }
}

fn grid() -> Grid {
    Grid::unit(31).unwrap()
}

#[test]
fn constant_shift_bias_by_direct_summation() {
    let truth = true_beta(grid());
    let shifted = FunctionOnGrid::new(grid(), truth.values().iter().map(|v| v + 0.1).collect()).unwrap();
    let isb = compute_isb(&[shifted], &truth).unwrap();
    let t = grid().points();
    let oracle: f64 = (0..30).map(|j| 0.1 * 0.1 * (t[j + 1] - t[j])).sum();
    assert!((isb - oracle).abs() < 1e-15);
    assert!((isb - 0.01).abs() < 1e-15);
}

#[test]
fn variance_by_brute_force() {
    let truth = true_beta(grid());
    let normal = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let est: Vec<FunctionOnGrid> = (0..100)
        .map(|_| {
            let v = truth.values().iter().map(|b| b + normal.sample(&mut rng)).collect();
            FunctionOnGrid::new(grid(), v).unwrap()
        })
        .collect();
    let ivar = compute_ivar(&est).unwrap();

    let t = grid().points();
    let mut oracle = 0.0;
    for j in 0..30 {
        let xs: Vec<f64> = est.iter().map(|e| e.values()[j]).collect();
        let m1 = xs.iter().sum::<f64>() / 100.0;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / 100.0;
        oracle += (m2 - m1 * m1) * (t[j + 1] - t[j]);
    }
    assert!((ivar - oracle).abs() < 1e-12, "{ivar} vs {oracle}");

    let s = MonteCarloSummary::new(&est, &truth, vec![]).unwrap();
    assert!((s.imse - s.isb - s.ivar).abs() < 1e-10);
    assert!(s.isb >= 0.0 && s.ivar >= 0.0 && s.imse >= 0.0);
}

#[test]
fn normalization_removes_scale() {
    let g = FunctionOnGrid::from_fn(grid(), |t| t - 0.3);
    let est = [g.normalized(), g.scaled(3.0).normalized()];
    assert!(compute_ivar(&est).unwrap() < 1e-30);
}

#[test]
fn metrics_ignore_run_order() {
    let truth = true_beta(grid());
    let mut est: Vec<FunctionOnGrid> = (0..7)
        .map(|k| FunctionOnGrid::from_fn(grid(), |t| (3.0 * PI * t / 2.0 + 0.1 * k as f64).sin() * SQRT_2))
        .collect();
    let a = MonteCarloSummary::new(&est, &truth, vec![]).unwrap();
    est.reverse();
    est.swap(1, 4);
    let b = MonteCarloSummary::new(&est, &truth, vec![]).unwrap();
    assert!((a.isb - b.isb).abs() < 1e-15);
    assert!((a.ivar - b.ivar).abs() < 1e-15);
    assert!((a.imse - compute_imse(&est, &truth).unwrap()).abs() < 1e-15);
}

#[test]
fn projection_correlation_properties() {
    let g = grid();
    let paths = brownian_paths(g, 10_000, 4).unwrap();
    let beta = true_beta(g);
    assert!((projection_correlation(&beta, &beta, &paths).unwrap() - 1.0).abs() < 1e-12);
    assert!((projection_correlation(&beta.scaled(-1.0), &beta, &paths).unwrap() - 1.0).abs() < 1e-12);
    let wiggly = FunctionOnGrid::from_fn(g, |t| t * t - 0.2);
    let c1 = projection_correlation(&wiggly, &beta, &paths).unwrap();
    let c2 = projection_correlation(&wiggly.scaled(-7.5), &beta, &paths).unwrap();
    assert!((c1 - c2).abs() < 1e-12);

    // First Brownian eigenfunction: uncorrelated with the second under Γ.
    let first = FunctionOnGrid::from_fn(g, |t| SQRT_2 * (PI * t / 2.0).sin());
    assert!(projection_correlation(&first, &beta, &paths).unwrap() < 0.05);
}
