//! The Gaussian variant with linear strategies.
//!
//! The teacher observes `y = mu 1 + sigma1 noise` and transmits `A y`; the
//! student receives `z = A y + sigma2 noise` and estimates `mu` by `b^T z`.
//! With `A` row-stochastic and `b` summing to one the estimate is unbiased and
//! its variance is `sigma1^2 |A^T b|^2 + sigma2^2 |b|^2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::strategy::floor_frac;

/// Largest supported dimension.
pub const MAX_DIM: usize = 4096;

/// Tolerance on row sums and weight sums.
pub const SUM_TOL: f64 = 1e-10;

/// Horizon and noise levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub n: usize,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl GaussianModel {
    pub fn new(n: usize, sigma1: f64, sigma2: f64) -> Result<Self> {
        check_dim(n)?;
        for (name, s) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(domain(format!("{name} = {s} must be finite and non-negative")));
            }
        }
        if sigma1 == 0.0 && sigma2 == 0.0 {
            return Err(domain("sigma1 and sigma2 cannot both be zero"));
        }
        Ok(Self { n, sigma1, sigma2 })
    }

    fn var1(&self) -> f64 {
        self.sigma1 * self.sigma1
    }

    fn var2(&self) -> f64 {
        self.sigma2 * self.sigma2
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if n > MAX_DIM {
        return Err(Error::Resource { n, limit: MAX_DIM });
    }
    Ok(())
}

/// Linear teacher strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TeacherKind {
    /// Transmit each observation: `A = I`.
    Forwarding,
    /// Forward raw observations for `floor((1 - eps) n)` steps, then transmit
    /// the mean of that block.
    EpsTeaching(f64),
    /// Transmit the running mean.
    Cumulative,
    /// Transmit the mean of all `n` observations from the start. Not causal.
    Clairvoyant,
}

/// A row-stochastic `n x n` teacher matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherMatrix {
    matrix: DMatrix<f64>,
    causal: bool,
}

impl TeacherMatrix {
    /// Wraps a square row-stochastic matrix. Causality (lower-triangularity)
    /// is detected, not required.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "teacher matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dim(matrix.nrows())?;
        for (i, row) in matrix.row_iter().enumerate() {
            let s = row.sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(domain(format!("row {i} of A sums to {s}, expected 1")));
            }
        }
        let causal = (0..matrix.nrows()).all(|i| (i + 1..matrix.ncols()).all(|j| matrix[(i, j)] == 0.0));
        Ok(Self { matrix, causal })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Whether row `i` depends only on observations `1..=i`.
    pub fn is_causal(&self) -> bool {
        self.causal
    }
}

/// Student weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentWeights {
    weights: DVector<f64>,
}

impl StudentWeights {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        check_dim(weights.len())?;
        let s = weights.sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(domain(format!("student weights sum to {s}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Uniform average of all `n` received values.
    pub fn averaging(n: usize) -> Result<Self> {
        Self::last_window(n, n)
    }

    /// Uniform average of the last `window` received values.
    pub fn last_window(n: usize, window: usize) -> Result<Self> {
        check_dim(n)?;
        if window == 0 || window > n {
            return Err(domain(format!("window {window} must lie in [1, {n}]")));
        }
        let w = 1.0 / window as f64;
        Ok(Self { weights: DVector::from_fn(n, |i, _| if i >= n - window { w } else { 0.0 }) })
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }
}

/// Builds the matrix of a standard teacher strategy.
pub fn build_teacher_matrix(kind: TeacherKind, n: usize) -> Result<TeacherMatrix> {
    check_dim(n)?;
    let m = match kind {
        TeacherKind::Forwarding => DMatrix::identity(n, n),
        TeacherKind::Cumulative => {
            DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 / (i + 1) as f64 } else { 0.0 })
        }
        TeacherKind::Clairvoyant => DMatrix::from_element(n, n, 1.0 / n as f64),
        TeacherKind::EpsTeaching(eps) => {
            let block = eps_learning_block(eps, n)?;
            let w = 1.0 / block as f64;
            DMatrix::from_fn(n, n, |i, j| {
                if i < block {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                } else if j < block {
                    w
                } else {
                    0.0
                }
            })
        }
    };
    let causal = !matches!(kind, TeacherKind::Clairvoyant) || n == 1;
    Ok(TeacherMatrix { matrix: m, causal })
}

/// `floor((1 - eps) n)`, checked so that both phases are non-empty.
fn eps_learning_block(eps: f64, n: usize) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("eps = {eps} must lie in (0, 1)")));
    }
    let block = floor_frac(1.0 - eps, n);
    if block == 0 || block >= n {
        return Err(domain(format!(
            "eps = {eps} at n = {n} leaves a learning block of {block} steps"
        )));
    }
    Ok(block)
}

/// Variance of the student's estimate, `sigma1^2 b^T A A^T b + sigma2^2 b^T b`.
pub fn strategy_variance(a: &TeacherMatrix, b: &StudentWeights, model: &GaussianModel) -> Result<f64> {
    if a.n() != model.n || b.weights.len() != model.n {
        return Err(Error::Dimension(format!(
            "A is {0}x{0}, b has length {1}, model has n = {2}",
            a.n(),
            b.weights.len(),
            model.n
        )));
    }
    let atb = a.matrix.tr_mul(&b.weights);
    Ok(model.var1() * atb.norm_squared() + model.var2() * b.weights.norm_squared())
}

/// Best student response to a fixed teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalStudent {
    pub weights: StudentWeights,
    pub variance: f64,
}

/// Minimizes the variance over student weights for fixed `A`:
/// `b* = M^{-1} 1 / (1^T M^{-1} 1)` with `M = sigma1^2 A A^T + sigma2^2 I`.
pub fn optimal_student(a: &TeacherMatrix, model: &GaussianModel) -> Result<OptimalStudent> {
    if a.n() != model.n {
        return Err(Error::Dimension(format!("A is {0}x{0}, model has n = {1}", a.n(), model.n)));
    }
    let n = model.n;
    let mut m = (&a.matrix * a.matrix.transpose()) * model.var1();
    for i in 0..n {
        m[(i, i)] += model.var2();
    }
    let scale = m.diagonal().max();
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Singular("covariance of the received values is not positive definite".into()))?;
    // Pivots this small mean the received values are (numerically) collinear.
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &d| a.min(d * d));
    if min_pivot <= 1e-12 * scale {
        return Err(Error::Singular(format!(
            "covariance is numerically rank deficient (pivot {min_pivot:e})"
        )));
    }
    let x = chol.solve(&DVector::from_element(n, 1.0));
    let total = x.sum();
    Ok(OptimalStudent { weights: StudentWeights { weights: x / total }, variance: 1.0 / total })
}

/// Smallest variance over all teacher matrices and student weights,
/// `(sigma1^2 + sigma2^2) / n`, attained by forwarding and averaging.
pub fn joint_optimum_bound(model: &GaussianModel) -> f64 {
    (model.var1() + model.var2()) / model.n as f64
}

/// Variance of the best unbiased estimate from the teacher's own
/// observations, `sigma1^2 / n`.
pub fn blue_baseline(model: &GaussianModel) -> f64 {
    model.var1() / model.n as f64
}

/// Variance of ε-teaching with a last-window averaging student:
/// `sigma1^2 / floor((1 - eps) n) + sigma2^2 / floor(eps n)`.
pub fn eps_block_variance(model: &GaussianModel, eps: f64) -> Result<f64> {
    let block = eps_learning_block(eps, model.n)?;
    let window = floor_frac(eps, model.n);
    if window == 0 {
        return Err(domain(format!("student window floor(eps n) is empty at n = {}", model.n)));
    }
    Ok(model.var1() / block as f64 + model.var2() / window as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices() {
        let c = build_teacher_matrix(TeacherKind::Cumulative, 3).unwrap();
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        );
        assert_eq!(c.matrix(), &expect);
        assert!(c.is_causal());
        assert_eq!(build_teacher_matrix(TeacherKind::Forwarding, 3).unwrap().matrix(), &DMatrix::identity(3, 3));
        let cl = build_teacher_matrix(TeacherKind::Clairvoyant, 4).unwrap();
        assert!(!cl.is_causal());
        assert!(cl.matrix().iter().all(|&x| x == 0.25));
        let e = build_teacher_matrix(TeacherKind::EpsTeaching(0.4), 5).unwrap();
        assert!(e.is_causal());
        assert_eq!(e.matrix()[(1, 1)], 1.0);
        assert_eq!(e.matrix()[(4, 2)], 1.0 / 3.0);
        assert_eq!(e.matrix()[(4, 3)], 0.0);
        assert!(build_teacher_matrix(TeacherKind::EpsTeaching(0.05), 5).is_ok());
        assert!(build_teacher_matrix(TeacherKind::EpsTeaching(0.9), 1).is_err());
        assert!(build_teacher_matrix(TeacherKind::EpsTeaching(1.0), 5).is_err());
    }

    #[test]
    fn from_matrix_checks() {
        assert!(TeacherMatrix::from_matrix(DMatrix::from_element(2, 3, 0.5)).is_err());
        assert!(TeacherMatrix::from_matrix(DMatrix::from_element(2, 2, 0.4)).is_err());
        let t = TeacherMatrix::from_matrix(DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!(!t.is_causal());
    }

    #[test]
    fn forwarding_averaging_is_optimal() {
        let model = GaussianModel::new(8, 1.3, 0.4).unwrap();
        let a = build_teacher_matrix(TeacherKind::Forwarding, 8).unwrap();
        let b = StudentWeights::averaging(8).unwrap();
        let v = strategy_variance(&a, &b, &model).unwrap();
        assert!((v - joint_optimum_bound(&model)).abs() < 1e-15);
        let opt = optimal_student(&a, &model).unwrap();
        assert!(opt.weights.weights().iter().all(|&w| (w - 0.125).abs() < 1e-14));
    }

    #[test]
    fn clairvoyant_matches_bound() {
        let model = GaussianModel::new(6, 1.0, 0.7).unwrap();
        let a = build_teacher_matrix(TeacherKind::Clairvoyant, 6).unwrap();
        let opt = optimal_student(&a, &model).unwrap();
        assert!((opt.variance - joint_optimum_bound(&model)).abs() < 1e-12);
    }

    #[test]
    fn singular_without_channel_noise() {
        let model = GaussianModel::new(5, 1.0, 0.0).unwrap();
        let a = build_teacher_matrix(TeacherKind::Clairvoyant, 5).unwrap();
        assert!(matches!(optimal_student(&a, &model), Err(Error::Singular(_))));
        let a = build_teacher_matrix(TeacherKind::Forwarding, 5).unwrap();
        assert!(optimal_student(&a, &model).is_ok());
    }

    #[test]
    fn eps_block() {
        let model = GaussianModel::new(10, 1.0, 0.7).unwrap();
        let v = eps_block_variance(&model, 0.5).unwrap();
        assert!((v - 2.0 * (1.0 + 0.49) / 10.0).abs() < 1e-15);
        assert!(eps_block_variance(&model, 0.01).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(GaussianModel::new(0, 1.0, 1.0).is_err());
        assert!(GaussianModel::new(3, 0.0, 0.0).is_err());
        assert!(GaussianModel::new(3, -1.0, 1.0).is_err());
        assert!(matches!(GaussianModel::new(5000, 1.0, 1.0), Err(Error::Resource { .. })));
        assert_eq!(blue_baseline(&GaussianModel::new(4, 2.0, 1.0).unwrap()), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let model = GaussianModel::new(4, 1.0, 1.0).unwrap();
        let a = build_teacher_matrix(TeacherKind::Forwarding, 3).unwrap();
        let b = StudentWeights::averaging(3).unwrap();
        assert!(matches!(strategy_variance(&a, &b, &model), Err(Error::Dimension(_))));
        assert!(matches!(optimal_student(&a, &model), Err(Error::Dimension(_))));
    }
}
