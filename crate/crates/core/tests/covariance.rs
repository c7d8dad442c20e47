use fsir_core::data::{LongitudinalDataset, Subject};
use fsir_core::grid::Grid;
use fsir_core::kernels::BandwidthRule;
use fsir_core::linalg::{symmetric_eigen, SquareMatrix};
use fsir_core::operators::{
    estimate_gamma, estimate_gamma_e, fve_rank, regularized_inv_sqrt, OperatorKind, OperatorMatrix,
};
use fsir_core::simulation::{simulate, SimConfig};
use fsir_core::{fit, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bm_config(n: usize, sparse: bool, seed: u64) -> SimConfig {
    SimConfig {
        n,
        sparse,
        seed,
        ..SimConfig::default()
    }
}

/// Interior grid: points at least one `h_phi` away from both ends.
fn interior(grid: &Grid, h: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| grid.point(i) >= grid.start() + h && grid.point(i) <= grid.end() - h)
        .collect()
}

/// Sup-norm distances of `Γ̂` to `min(s, t)` and to the sample covariance of
/// the same (unobserved) dense paths, over the interior grid.
fn bm_errors(n: usize, sparse: bool, seed: u64) -> (f64, f64) {
    let cfg = bm_config(n, sparse, seed);
    let sim = simulate(&cfg).unwrap();
    let spec = BandwidthRule::default().resolve(&sim.dataset).unwrap();
    let grid = cfg.grid().unwrap();
    let gamma = estimate_gamma(&sim.dataset, &spec, &grid).unwrap().operator;
    let p = grid.len();
    let paths: Vec<&[f64]> = sim.trajectories.iter().map(|x| x.values()).collect();
    let mean: Vec<f64> = (0..p)
        .map(|j| paths.iter().map(|x| x[j]).sum::<f64>() / n as f64)
        .collect();
    let (mut analytic, mut empirical) = (0.0f64, 0.0f64);
    let idx = interior(&grid, spec.h_phi);
    for &a in &idx {
        for &b in &idx {
            let g = gamma.values()[(a, b)];
            let sample = paths.iter().map(|x| (x[a] - mean[a]) * (x[b] - mean[b])).sum::<f64>() / n as f64;
            analytic = analytic.max((g - grid.point(a).min(grid.point(b))).abs());
            empirical = empirical.max((g - sample).abs());
        }
    }
    (analytic, empirical)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn dense_brownian_covariance_matches_the_sample_covariance() {
    let errs: Vec<f64> = (0..5).map(|s| bm_errors(400, false, 100 + s).1).collect();
    assert!(median(errs.clone()) < 0.1, "{errs:?}");
}

#[test]
fn sparse_brownian_covariance_is_recovered() {
    let errs: Vec<f64> = (0..5).map(|s| bm_errors(400, true, 200 + s).0).collect();
    assert!(median(errs.clone()) < 0.2, "{errs:?}");
}

#[test]
fn covariance_error_shrinks_with_sample_size() {
    let small = median((0..10).map(|s| bm_errors(100, false, 300 + s).0).collect());
    let large = median((0..10).map(|s| bm_errors(800, false, 400 + s).0).collect());
    assert!(large <= small, "n=800 {large} vs n=100 {small}");
}

fn constant_dataset(n: usize, c: f64) -> LongitudinalDataset {
    let grid = Grid::unit(31).unwrap();
    let subjects = (0..n)
        .map(|i| Subject {
            id: i.to_string(),
            times: (1..31).map(|j| grid.point(j)).collect(),
            values: vec![c; 30],
            response: i as f64 / n as f64,
        })
        .collect();
    LongitudinalDataset::new(subjects, (0.0, 1.0)).unwrap()
}

#[test]
fn constant_process_has_no_covariance() {
    let data = constant_dataset(200, -0.8);
    let spec = BandwidthRule::default().resolve(&data).unwrap();
    let grid = Grid::unit(31).unwrap();
    let est = estimate_gamma(&data, &spec, &grid).unwrap();
    assert!(est.operator.values().max_abs() < 1e-6);
    assert!(est.mean.values().iter().all(|m| (m + 0.8).abs() < 1e-9));
}

#[test]
fn single_subject_gives_zero_gamma_e() {
    let data = constant_dataset(1, 2.0);
    let grid = Grid::unit(31).unwrap();
    let spec = BandwidthRule::default().resolve(&data).unwrap();
    let ge = estimate_gamma_e(&data, &spec, &grid).unwrap();
    assert_eq!(ge.operator.values().max_abs(), 0.0);
    assert_eq!(ge.operator.kind(), OperatorKind::GammaE);
}

#[test]
fn gamma_e_is_positive_semidefinite() {
    for (seed, sparse) in [(1, false), (2, true), (3, true)] {
        let cfg = bm_config(150, sparse, seed);
        let sim = simulate(&cfg).unwrap();
        let spec = BandwidthRule::default().resolve(&sim.dataset).unwrap();
        let ge = estimate_gamma_e(&sim.dataset, &spec, &cfg.grid().unwrap()).unwrap();
        let eig = symmetric_eigen(ge.operator.values());
        let trace = ge.operator.values().trace();
        assert!(
            eig.values.iter().all(|&v| v >= -1e-8 * trace),
            "{:?}",
            eig.values.last()
        );
    }
}

#[test]
fn independent_response_leaves_little_inverse_regression_signal() {
    let cfg = bm_config(400, false, 11);
    let sim = simulate(&cfg).unwrap();
    // Replace every response by noise that ignores X.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let subjects = sim
        .dataset
        .subjects()
        .iter()
        .map(|s| Subject {
            response: rng.random::<f64>(),
            ..s.clone()
        })
        .collect();
    let data = LongitudinalDataset::new(subjects, (0.0, 1.0)).unwrap();
    let spec = BandwidthRule::default().resolve(&data).unwrap();
    let grid = cfg.grid().unwrap();
    let g = symmetric_eigen(&estimate_gamma(&data, &spec, &grid).unwrap().operator.action());
    let ge = symmetric_eigen(&estimate_gamma_e(&data, &spec, &grid).unwrap().operator.action());
    assert!(ge.values[0] < 0.1 * g.values[0], "{} vs {}", ge.values[0], g.values[0]);

    let fit = fit(&data, &spec, &grid, 0.95, 1).unwrap();
    assert!(fit.eta_orthonormality_error() < 1e-6);
    assert!(fit.beta_gamma_orthonormality_error() < 1e-4);
}

fn random_psd(rng: &mut ChaCha8Rng, p: usize, rank: usize) -> SquareMatrix {
    let cols: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..p).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    SquareMatrix::from_fn(p, |i, j| cols.iter().map(|c| c[i] * c[j]).sum())
}

#[test]
fn inverse_square_root_whitens_the_retained_span() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let p = 5 + case % 11;
        let rank = 1 + case % p;
        let grid = Grid::new(0.0, 2.0, p).unwrap();
        let gamma = OperatorMatrix::new(grid, random_psd(&mut rng, p, rank), OperatorKind::Gamma).unwrap();
        let fve = [0.8, 0.95, 0.99, 1.0][case % 4];
        let (inv, spectrum) = regularized_inv_sqrt(&gamma, fve).unwrap();

        assert!(inv.values().is_symmetric(1e-12));
        let inv_eig = symmetric_eigen(inv.values());
        assert!(inv_eig.values.iter().all(|&v| v >= -1e-8 * inv_eig.values[0]));

        let r = inv.action();
        let whitened = r.matmul(&gamma.action()).matmul(&r);
        let eig = symmetric_eigen(&gamma.action());
        let projector = SquareMatrix::from_fn(p, |i, j| {
            (0..spectrum.retained_rank)
                .map(|k| eig.vectors[(i, k)] * eig.vectors[(j, k)])
                .sum()
        });
        assert!(whitened.max_abs_diff(&projector) < 1e-6, "case {case}");
        assert!(spectrum.retained_rank <= rank);
        for f in &spectrum.eigenfunctions {
            assert!((grid.riemann_inner(f.values(), f.values()) - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn diagonal_inverse_square_roots() {
    let grid = Grid::unit(3).unwrap();
    let dt = grid.spacing();
    // Operator values chosen so that the action matrix (values · Δ) is the example.
    let op = |d: &[f64]| {
        OperatorMatrix::new(grid, SquareMatrix::from_diag(d).scaled(1.0 / dt), OperatorKind::Gamma).unwrap()
    };

    let (inv, s) = regularized_inv_sqrt(&op(&[1.0, 1.0, 1.0]), 0.99).unwrap();
    assert_eq!(s.retained_rank, 3);
    assert!(inv.action().max_abs_diff(&SquareMatrix::identity(3)) < 1e-12);

    for (d, fve) in [
        ([4.0, 1.0, 0.0], 1.0),
        ([4.0, 1.0, -0.1], 0.9999),
        ([4.0, 1.0, -0.1], 1.0),
    ] {
        let (inv, s) = regularized_inv_sqrt(&op(&d), fve).unwrap();
        assert_eq!(s.retained_rank, 2);
        assert!(inv.action().max_abs_diff(&SquareMatrix::from_diag(&[0.5, 1.0, 0.0])) < 1e-12);
    }
    assert_eq!(
        regularized_inv_sqrt(&op(&[-1.0, -2.0, 0.0]), 0.9).unwrap_err(),
        Error::AllNonpositive
    );
}

#[test]
fn jacobi_agrees_with_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [2, 5, 17, 31] {
        // Indefinite: a random Gram matrix shifted down.
        let gram = random_psd(&mut rng, p, p);
        let a = SquareMatrix::from_fn(p, |i, j| gram[(i, j)] - if i == j { 0.5 * p as f64 } else { 0.0 });
        let ours = symmetric_eigen(&a);
        let theirs = nalgebra::DMatrix::from_row_slice(p, p, a.as_slice()).symmetric_eigen();
        let mut want: Vec<f64> = theirs.eigenvalues.iter().copied().collect();
        want.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.values.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()), "p={p}: {x} vs {y}");
        }
        // Compare the leading eigenvector up to sign when it is well separated.
        if want[0] - want[1] > 1e-3 {
            let idx = theirs
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let v = theirs.eigenvectors.column(idx);
            let dot: f64 = (0..p).map(|i| v[i] * ours.vectors[(i, 0)]).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn raising_the_threshold_never_drops_components(
        mut values in prop::collection::vec(-1.0f64..10.0, 1..30),
        f1 in 0.01f64..1.0,
        f2 in 0.01f64..1.0,
    ) {
        values.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(values[0] > 0.0);
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let (l_lo, fve_lo) = fve_rank(&values, lo).unwrap();
        let (l_hi, fve_hi) = fve_rank(&values, hi).unwrap();
        prop_assert!(l_lo <= l_hi);
        prop_assert!(fve_lo >= lo * (1.0 - 1e-9) && fve_hi >= hi * (1.0 - 1e-9));
        prop_assert!(values[..l_hi].iter().all(|&v| v > 0.0));
    }
}
