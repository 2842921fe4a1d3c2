mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svrc_core::cubic::{solve_exact, solve_lanczos, CubicModel};
use svrc_core::dataio::{self, Dataset};
use svrc_core::linalg::{lanczos, min_eigenvalue, solve_shifted, sym_eigen};
use svrc_core::metrics::{self, is_local_min, mu_from};
use svrc_core::objectives::{
    estimate_rho, nc_logistic, nonlinear_least_squares, robust_linear_regression, DoubleWell,
    FiniteSumObjective, Quadratic, DEFAULT_LAMBDA,
};
use svrc_core::optimizers::{
    semi_stochastic_gradient, semi_stochastic_hessian, svrc_run, PenaltySchedule, SnapshotState,
    SoAccounting, SvrcConfig,
};
use svrc_core::{SymMatrix, Vector};

use common::{gaussian, random_model, with_spectrum};

fn sym_matrix(d: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-5.0..5.0f64, d * d)
        .prop_map(move |v| SymMatrix::from_upper_fn(d, |i, j| v[i * d + j]))
}

fn cubic_model() -> impl Strategy<Value = CubicModel> {
    (1usize..=8).prop_flat_map(|d| {
        (
            sym_matrix(d),
            prop::collection::vec(-3.0..3.0f64, d),
            0.1..10.0f64,
        )
            .prop_map(|(h, g, theta)| CubicModel::new(Vector::from_vec(g), h, theta).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_reconstructs_and_is_orthonormal(d in 1usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SymMatrix::from_matrix({
            let g = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| gaussian(&mut rng, 1)[0]);
            &g + g.transpose()
        }, 1e-12).unwrap();
        let e = sym_eigen(&a).unwrap();
        let scale = a.max_abs().max(1.0);
        prop_assert!((e.reconstruct() - a.as_matrix()).amax() <= 1e-10 * scale);
        let qtq = e.vectors.transpose() * &e.vectors;
        prop_assert!((qtq - nalgebra::DMatrix::<f64>::identity(d, d)).amax() <= 1e-10);
        prop_assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lanczos_full_run_recovers_min_eigenvalue(d in 2usize..=16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eigs: Vec<f64> = (0..d).map(|i| i as f64 - 0.37 * d as f64).collect();
        let a = with_spectrum(&mut rng, &eigs);
        let start = gaussian(&mut rng, d);
        let lz = lanczos(|v| a.mul_vec(v), &start, d).unwrap();
        let t_min = min_eigenvalue(&lz.tridiagonal).unwrap();
        prop_assert!((t_min - min_eigenvalue(&a).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn shifted_solve_residual(d in 1usize..=12, seed in any::<u64>(), shift in 0.1..10.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eigs: Vec<f64> = (0..d).map(|i| i as f64 * 0.5).collect();
        let a = with_spectrum(&mut rng, &eigs);
        let b = gaussian(&mut rng, d);
        let x = solve_shifted(&a, shift, &b).unwrap();
        let mut s = a.clone();
        s.add_diagonal(shift);
        prop_assert!((s.mul_vec(&x) - &b).norm() <= 1e-10 * (1.0 + b.norm()));
    }

    #[test]
    fn exact_solution_is_global(m in cubic_model(), seed in any::<u64>()) {
        let r = solve_exact(&m, 1e-10).unwrap();
        prop_assert!(r.model_value <= 0.0);
        prop_assert!(r.lambda >= 0.0);
        prop_assert!((r.model_value - m.value(&r.h)).abs() <= 1e-12 * (1.0 + r.model_value.abs()));
        let lmin = min_eigenvalue(m.hessian()).unwrap();
        prop_assert!(r.lambda >= -lmin - 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let p = gaussian(&mut rng, m.dim()) * (r.h.norm() + 1.0);
            prop_assert!(r.model_value <= m.value(&p) + 1e-10);
        }
    }

    #[test]
    fn lanczos_values_nest(m in cubic_model()) {
        let h = m.hessian().clone();
        let mut prev = f64::INFINITY;
        for k in 1..=m.dim() {
            let r = solve_lanczos(|v| h.mul_vec(v), m.g(), m.theta(), k, 0.0).unwrap();
            prop_assert!(r.model_value <= prev + 1e-12 * (1.0 + r.model_value.abs()));
            prev = r.model_value;
        }
    }

    #[test]
    fn libsvm_round_trip(
        n in 1usize..20,
        d in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<f64> = (0..n * d)
            .map(|k| if k % 3 == 0 { 0.0 } else { gaussian(&mut rng, 1)[0] })
            .collect();
        let labels: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let ds = Dataset::new("p", d, features, labels).unwrap();
        let mut buf = Vec::new();
        dataio::write_libsvm(&ds, &mut buf).unwrap();
        let back = dataio::parse_libsvm(&buf[..], Some(d)).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        prop_assert_eq!(back.labels(), ds.labels());
    }

    #[test]
    fn mu_non_increasing_in_m(g in 0.0..10.0f64, l in -10.0..10.0f64, m1 in 0.1..100.0f64, f in 1.0..10.0f64) {
        let m2 = m1 * f;
        if l < 0.0 {
            prop_assert!(mu_from(g, l, m2) <= mu_from(g, l, m1));
        }
    }

    #[test]
    fn decaying_schedule_strictly_decreases(alpha in 0.1..100.0f64, beta in 0.01..2.0f64, len in 1usize..20) {
        let s = PenaltySchedule::Decaying { alpha, beta };
        let mut prev = f64::INFINITY;
        for outer in 1..4 {
            for t in 0..len {
                let m = s.penalty(outer, t, len);
                prop_assert!(m > 0.0 && m < prev);
                prev = m;
            }
        }
    }

    #[test]
    fn estimators_unbiased_by_enumeration(n in 2usize..=12, seed in any::<u64>()) {
        let obj = DoubleWell::new(seed, n, 3, 0.5, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x = gaussian(&mut rng, 3);
        let snap = SnapshotState::at(&obj, &gaussian(&mut rng, 3));
        let mut v = Vector::zeros(3);
        let mut u = nalgebra::DMatrix::<f64>::zeros(3, 3);
        for i in 0..n {
            v += semi_stochastic_gradient(&obj, &x, &snap, &[i]).unwrap();
            u += semi_stochastic_hessian(&obj, &x, &snap, &[i]).unwrap().into_matrix();
        }
        prop_assert!((v / n as f64 - obj.gradient(&x)).amax() <= 1e-12);
        prop_assert!((u / n as f64 - obj.hessian(&x).into_matrix()).amax() <= 1e-12);
    }

    #[test]
    fn counters_follow_disjoint_formula(s in 0usize..4, t in 1usize..5, bg in 1usize..10, bh in 1usize..10) {
        let obj = DoubleWell::new(1, 10, 2, 0.5, 0.5).unwrap();
        let mut cfg = SvrcConfig::new(bg, bh, t, s, PenaltySchedule::Fixed { m: 4.0 });
        cfg.accounting = SoAccounting::Disjoint;
        let out = svrc_run(&obj, &Vector::from_element(2, 0.4), &cfg).unwrap();
        prop_assert_eq!(out.counters.so_calls, (s * (10 + t * (bg + bh))) as u64);
        prop_assert_eq!(out.counters.cso_calls, (s * t) as u64);
        let records = out.trace.records();
        prop_assert!(records.windows(2).all(|w| w[0].so_calls <= w[1].so_calls && w[0].cso_calls <= w[1].cso_calls));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn erm_objectives_are_consistent(seed in any::<u64>()) {
        let cls = dataio::synthetic_classification(seed, 15, 4).unwrap();
        let reg = dataio::synthetic_regression(seed, 15, 4).unwrap();
        let objs: Vec<Box<dyn FiniteSumObjective>> = vec![
            Box::new(nc_logistic(cls.clone(), DEFAULT_LAMBDA).unwrap()),
            Box::new(nonlinear_least_squares(cls).unwrap()),
            Box::new(robust_linear_regression(reg).unwrap()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for obj in &objs {
            let x = gaussian(&mut rng, 4);
            let mut acc = Vector::zeros(4);
            for i in 0..15 {
                obj.add_gradient_i(i, &x, 1.0, &mut acc);
                let h = obj.hessian_i(i, &x);
                prop_assert_eq!(h.max_asymmetry(), 0.0);
            }
            acc /= 15.0;
            prop_assert_eq!(acc, obj.gradient(&x));
        }
    }

    #[test]
    fn cubic_upper_bound_with_rho_hat(seed in any::<u64>()) {
        let cls = dataio::synthetic_classification(seed, 20, 4).unwrap();
        let obj = nc_logistic(cls, DEFAULT_LAMBDA).unwrap();
        let rho = estimate_rho(&obj, seed, 300).unwrap().rho_hat;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        for _ in 0..100 {
            let x = gaussian(&mut rng, 4) * 0.5;
            let mut h = gaussian(&mut rng, 4);
            h /= h.norm().max(1.0);
            let g = obj.gradient(&x);
            let hh = obj.hessian(&x);
            let n = h.norm();
            let bound = obj.value(&x) + g.dot(&h) + 0.5 * hh.quad_form(&h) + rho / 6.0 * n * n * n;
            prop_assert!(obj.value(&(&x + &h)) <= bound + 1e-8);
        }
    }

    #[test]
    fn mu_rotation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 4;
        let a = with_spectrum(&mut rng, &[-2.0, -0.5, 1.0, 3.0]);
        let b = gaussian(&mut rng, d);
        let q = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| gaussian(&mut rng, 1)[0]).qr().q();
        let rotated_a = SymMatrix::from_matrix(q.transpose() * a.as_matrix() * &q, 1e-10).unwrap();
        let rotated_b = q.transpose() * &b;
        let orig = Quadratic::new(vec![a], vec![b]).unwrap();
        let rot = Quadratic::new(vec![rotated_a], vec![rotated_b]).unwrap();
        let x = gaussian(&mut rng, d);
        let m = 2.0;
        let lhs = metrics::mu(&orig, &x, m).unwrap();
        let rhs = metrics::mu(&rot, &(q.transpose() * &x), m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn small_mu_certifies_local_min(seed in any::<u64>()) {
        let obj = DoubleWell::new(seed, 40, 3, 0.5, 0.5).unwrap();
        let mut cfg = SvrcConfig::new(10, 10, 5, 6, PenaltySchedule::Fixed { m: 10.0 });
        cfg.seed = seed;
        let out = svrc_run(&obj, &Vector::from_element(3, 0.05), &cfg).unwrap();
        let eps = 1e-4_f64;
        for (x, r) in out.iterates.iter().zip(out.trace.records().iter().filter(|r| !r.is_snapshot())) {
            prop_assert!((r.mu - mu_from(r.grad_norm, r.lambda_min, r.m_used)).abs() <= 1e-12);
            if r.mu <= eps.powf(1.5) {
                prop_assert!(is_local_min(&obj, x, eps * (1.0 + 1e-12), (r.m_used * eps).sqrt() * (1.0 + 1e-12)).unwrap());
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let obj = DoubleWell::new(3, 50, 4, 0.5, 0.5).unwrap();
    let mut cfg = SvrcConfig::new(
        8,
        5,
        4,
        5,
        PenaltySchedule::Decaying {
            alpha: 20.0,
            beta: 0.2,
        },
    );
    cfg.seed = 99;
    let x0 = Vector::from_element(4, 0.01);
    let csv = |cfg: &SvrcConfig| {
        let out = svrc_run(&obj, &x0, cfg).unwrap();
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf, false).unwrap();
        buf
    };
    assert_eq!(csv(&cfg), csv(&cfg));
}

#[test]
fn random_models_have_nonpositive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 1..=10 {
        let m = random_model(&mut rng, d);
        assert!(solve_exact(&m, 1e-8).unwrap().model_value <= 0.0);
    }
}
