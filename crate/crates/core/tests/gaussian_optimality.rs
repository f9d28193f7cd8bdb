use learnrate::gaussian::{
    build_teacher_matrix, eps_block_variance, joint_optimum_bound, optimal_student, strategy_variance, GaussianModel,
    StudentWeights, TeacherKind, TeacherMatrix,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_causal(n: usize, rng: &mut impl Rng) -> TeacherMatrix {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let row: Vec<f64> = (0..=i).map(|_| rng.random::<f64>().powi(3)).collect();
        let s: f64 = row.iter().sum();
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v / s;
        }
    }
    TeacherMatrix::from_matrix(m).unwrap()
}

fn random_weights(n: usize, rng: &mut impl Rng) -> StudentWeights {
    // Signed weights are allowed; only the sum is constrained.
    let v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.3);
    let s = v.sum();
    StudentWeights::new(v / s).unwrap()
}

#[test]
fn optimal_student_beats_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = GaussianModel::new(12, 1.0, 0.6).unwrap();
    for _ in 0..20 {
        let a = random_causal(12, &mut rng);
        let opt = optimal_student(&a, &model).unwrap();
        let direct = strategy_variance(&a, &opt.weights, &model).unwrap();
        assert!((direct - opt.variance).abs() < 1e-10);
        assert!((opt.weights.weights().sum() - 1.0).abs() < 1e-10);
        for _ in 0..100 {
            let b = random_weights(12, &mut rng);
            assert!(strategy_variance(&a, &b, &model).unwrap() >= opt.variance - 1e-12);
        }
    }
}

#[test]
fn spd_solve_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [10usize, 200, 1000] {
        let model = GaussianModel::new(n, 1.0, 0.5).unwrap();
        let a = if n == 1000 {
            build_teacher_matrix(TeacherKind::Cumulative, n).unwrap()
        } else {
            random_causal(n, &mut rng)
        };
        let opt = optimal_student(&a, &model).unwrap();
        // x = b* / variance solves M x = 1.
        let x = opt.weights.weights() / opt.variance;
        let m = a.matrix() * a.matrix().transpose() + DMatrix::identity(n, n) * 0.25;
        let residual = (m * x - DVector::from_element(n, 1.0)).amax();
        assert!(residual <= 1e-9 * n as f64, "n={n}: {residual}");
    }
}

#[test]
fn variance_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 6;
    let model = GaussianModel::new(n, 1.2, 0.8).unwrap();
    let a = random_causal(n, &mut rng);
    let b = random_weights(n, &mut rng);
    let exact = strategy_variance(&a, &b, &model).unwrap();
    let draws = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut y = DVector::zeros(n);
    let mut noise = DVector::zeros(n);
    for _ in 0..draws {
        for i in 0..n {
            y[i] = 0.7 + model.sigma1 * rng.sample::<f64, _>(StandardNormal);
            noise[i] = model.sigma2 * rng.sample::<f64, _>(StandardNormal);
        }
        let z = a.matrix() * &y + &noise;
        let est = b.weights().dot(&z);
        s1 += est;
        s2 += est * est;
    }
    let mean = s1 / draws as f64;
    let sample_var = (s2 - draws as f64 * mean * mean) / (draws - 1) as f64;
    // Standard error of the sample variance of a Gaussian: var * sqrt(2 / (N - 1)).
    let se = exact * (2.0 / (draws - 1) as f64).sqrt();
    assert!((sample_var - exact).abs() <= 4.0 * se, "{sample_var} vs {exact}");
    assert!((mean - 0.7).abs() <= 4.0 * (exact / draws as f64).sqrt());
}

#[test]
fn forwarding_variance_nonincreasing_in_n() {
    let mut prev = f64::INFINITY;
    for n in 1..=60 {
        let model = GaussianModel::new(n, 1.0, 0.7).unwrap();
        let a = build_teacher_matrix(TeacherKind::Forwarding, n).unwrap();
        let v = optimal_student(&a, &model).unwrap().variance;
        assert!(v <= prev + 1e-15);
        prev = v;
    }
}

#[test]
fn constructed_matrices_are_causal_and_stochastic() {
    for n in [1usize, 2, 7, 30] {
        for kind in [TeacherKind::Forwarding, TeacherKind::Cumulative, TeacherKind::EpsTeaching(0.3)] {
            let Ok(a) = build_teacher_matrix(kind, n) else { continue };
            assert!(a.is_causal());
            for row in a.matrix().row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn eps_block_formula_matches_quadratic_form() {
    for n in [10usize, 17, 40] {
        let model = GaussianModel::new(n, 1.0, 0.7).unwrap();
        for eps in [0.2, 0.5, 0.75] {
            let a = build_teacher_matrix(TeacherKind::EpsTeaching(eps), n).unwrap();
            let window = (eps * n as f64 + 1e-9).floor() as usize;
            let b = StudentWeights::last_window(n, window).unwrap();
            let direct = strategy_variance(&a, &b, &model).unwrap();
            let formula = eps_block_variance(&model, eps).unwrap();
            assert!((direct - formula).abs() < 1e-12, "n={n} eps={eps}");
            assert!(formula > joint_optimum_bound(&model));
        }
    }
}

#[test]
fn joint_bound_examples() {
    let model = GaussianModel::new(1, 1.5, 0.5).unwrap();
    assert!((joint_optimum_bound(&model) - 2.5).abs() < 1e-15);
    let model = GaussianModel::new(20, 1.0, 0.7).unwrap();
    let a = build_teacher_matrix(TeacherKind::Forwarding, 20).unwrap();
    let b = StudentWeights::averaging(20).unwrap();
    assert!((strategy_variance(&a, &b, &model).unwrap() - joint_optimum_bound(&model)).abs() < 1e-15);
}
