//! Linear least-squares estimation error and its quadratic reformulation.
//!
//! The estimation error of the optimal linear estimator of the field value at
//! `x` from noisy measurements at `S` is
//! `f_x(S) = phi(x,x) - b' C_S^{-1} b`. Rewriting it as the minimum of the
//! convex quadratic `g_x(alpha) = alpha' C alpha - 2 b' alpha + phi(x,x)` over
//! coefficient vectors `alpha` is what lets selection problems become
//! mixed-integer quadratic programs: restricting the support of `alpha` to an
//! index set recovers the error of measuring exactly that subset.
//!
//! All solves go through Cholesky factorizations; the noise variance keeps
//! every covariance matrix positive definite with smallest eigenvalue at
//! least `sigma^2`, so the factorization cannot fail on valid inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::randfield::{cross_covariance, covariance_matrix, kernel_eval, Point, RandomFieldModel};

/// Prediction locations with nonnegative importance weights.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl PredictionSet {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("prediction set must be nonempty".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The quadratic `g(alpha) = alpha' Q alpha - linear' alpha + constant` for one
/// prediction point: `Q = C_Theta`, `linear = 2 b_{x,Theta}`,
/// `constant = phi(x,x)`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    q: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl QuadraticForm {
    pub fn new(q: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() != linear.len() {
            return Err(Error::DimensionMismatch {
                expected: q.nrows(),
                got: linear.len(),
            });
        }
        if constant < 0.0 {
            return Err(Error::InvalidParameter("constant term must be >= 0".into()));
        }
        Ok(Self { q, linear, constant })
    }

    /// Builds `g_x` over the full observation set `theta`.
    pub fn for_prediction(model: &RandomFieldModel, x: &Point, theta: &[Point]) -> Result<Self> {
        let q = covariance_matrix(model, theta)?;
        let b = cross_covariance(model, x, theta)?;
        let constant = kernel_eval(&model.kernel, x, x)?;
        Self::new(q, 2.0 * b, constant)
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `2 b_{x,Theta}`.
    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }
}

/// Solves `C alpha = b` for the optimal estimator coefficients through a
/// positive-definite factorization, never an explicit inverse.
pub fn lls_coefficients(c: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if c.nrows() != b.len() {
        return Err(Error::DimensionMismatch { expected: c.nrows(), got: b.len() });
    }
    let chol = c.clone().cholesky().ok_or(Error::FactorizationFailure)?;
    Ok(chol.solve(b))
}

/// Estimation error `f_x(S)` of the optimal linear estimate of the field at
/// `x` from measurements at `S`. Empty `S` returns the prior variance.
///
/// Values are returned raw; they are clamped into `[0, phi(x,x)]` only when
/// numerical noise pushes them outside by more than 1e-9.
pub fn mse(model: &RandomFieldModel, x: &Point, s: &[Point]) -> Result<f64> {
    let prior = kernel_eval(&model.kernel, x, x)?;
    if s.is_empty() {
        return Ok(prior);
    }
    let c = covariance_matrix(model, s)?;
    let b = cross_covariance(model, x, s)?;
    let alpha = lls_coefficients(&c, &b)?;
    Ok(clamp_noise(prior - b.dot(&alpha), prior))
}

fn clamp_noise(value: f64, prior: f64) -> f64 {
    if value < -1e-9 {
        0.0
    } else if value > prior + 1e-9 {
        prior
    } else {
        value
    }
}

/// Total weighted estimation error `sum_i w_i f_{x_i}(S)` over a prediction
/// set. The measurement covariance is factored once and reused for every
/// prediction point.
pub fn total_weighted_error(
    model: &RandomFieldModel,
    omega: &PredictionSet,
    s: &[Point],
) -> Result<f64> {
    if s.is_empty() {
        let mut total = 0.0;
        for (x, w) in omega.points().iter().zip(omega.weights()) {
            total += w * kernel_eval(&model.kernel, x, x)?;
        }
        return Ok(total);
    }
    let c = covariance_matrix(model, s)?;
    let chol = c.cholesky().ok_or(Error::FactorizationFailure)?;
    let mut total = 0.0;
    for (x, w) in omega.points().iter().zip(omega.weights()) {
        let prior = kernel_eval(&model.kernel, x, x)?;
        let b = cross_covariance(model, x, s)?;
        let alpha = chol.solve(&b);
        total += w * clamp_noise(prior - b.dot(&alpha), prior);
    }
    Ok(total)
}

/// Evaluates `g(alpha)`.
pub fn g_eval(form: &QuadraticForm, alpha: &DVector<f64>) -> Result<f64> {
    if alpha.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: alpha.len() });
    }
    Ok((alpha.transpose() * &form.q * alpha)[(0, 0)] - form.linear.dot(alpha) + form.constant)
}

/// Minimizes `g` over coefficient vectors supported on `support` (zero
/// elsewhere). Returns the minimizer embedded in the full dimension and the
/// minimum value, which equals the estimation error of measuring exactly the
/// subset `Theta[support]`.
///
/// Solves the `|support|`-sized subsystem rather than a masked full system;
/// equivalent by block elimination and exact for the restricted problem.
pub fn restricted_optimal_g(form: &QuadraticForm, support: &[usize]) -> Result<(DVector<f64>, f64)> {
    let m = form.dim();
    if support.iter().any(|&i| i >= m) {
        return Err(Error::InvalidParameter("support index out of range".into()));
    }
    if support.is_empty() {
        return Ok((DVector::zeros(m), form.constant));
    }
    let k = support.len();
    let mut c_sub = DMatrix::zeros(k, k);
    let mut b_sub = DVector::zeros(k);
    for (a, &i) in support.iter().enumerate() {
        b_sub[a] = form.linear[i] / 2.0;
        for (bx, &j) in support.iter().enumerate() {
            c_sub[(a, bx)] = form.q[(i, j)];
        }
    }
    let alpha_sub = lls_coefficients(&c_sub, &b_sub)?;
    let mut alpha = DVector::zeros(m);
    for (a, &i) in support.iter().enumerate() {
        alpha[i] = alpha_sub[a];
    }
    let value = form.constant - b_sub.dot(&alpha_sub);
    Ok((alpha, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randfield::Kernel;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    fn model() -> RandomFieldModel {
        RandomFieldModel::new(
            Kernel::SquaredExponential { std_dev: 1.0, length_scale: 1.0 },
            0.25,
        )
        .unwrap()
    }

    fn random_points(g: &mut SplitMix64, n: usize, span: f64) -> Vec<Point> {
        (0..n)
            .map(|_| Point::xy(g.next_range(0.0, span), g.next_range(0.0, span)))
            .collect()
    }

    #[test]
    fn lls_one_by_one() {
        let c = DMatrix::from_element(1, 1, 1.25);
        let b = DVector::from_element(1, 1.0);
        let alpha = lls_coefficients(&c, &b).unwrap();
        assert_relative_eq!(alpha[0], 0.8, epsilon = 1e-14);
    }

    #[test]
    fn lls_zero_rhs() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        let alpha = lls_coefficients(&c, &DVector::zeros(2)).unwrap();
        assert_eq!(alpha, DVector::zeros(2));
    }

    #[test]
    fn lls_residual_small_on_random_pd() {
        let m = model();
        let mut g = SplitMix64::new(5);
        for n in [3usize, 8, 15] {
            let pts = random_points(&mut g, n, 6.0);
            let c = covariance_matrix(&m, &pts).unwrap();
            let b = DVector::from_fn(n, |_, _| g.next_range(-1.0, 1.0));
            let alpha = lls_coefficients(&c, &b).unwrap();
            let res = (&c * &alpha - &b).amax();
            assert!(res < 1e-10, "residual {res} at n={n}");
        }
    }

    #[test]
    fn mse_empty_set_is_prior_variance() {
        let m = model();
        let x = Point::xy(0.3, 0.7);
        assert_relative_eq!(mse(&m, &x, &[]).unwrap(), 1.0);
    }

    #[test]
    fn mse_self_measurement() {
        let m = model();
        let x = Point::xy(0.0, 0.0);
        // 1 - 1/1.25 = 0.2
        assert_relative_eq!(mse(&m, &x, std::slice::from_ref(&x)).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn mse_monotone_under_set_growth() {
        let m = model();
        let mut g = SplitMix64::new(17);
        for _ in 0..20 {
            let pts = random_points(&mut g, 8, 4.0);
            let x = Point::xy(g.next_range(0.0, 4.0), g.next_range(0.0, 4.0));
            let mut prev = mse(&m, &x, &[]).unwrap();
            for k in 1..=pts.len() {
                let cur = mse(&m, &x, &pts[..k]).unwrap();
                assert!(cur <= prev + 1e-9, "k={k}: {cur} > {prev}");
                assert!(cur >= -1e-9 && cur <= 1.0 + 1e-9);
                prev = cur;
            }
        }
    }

    #[test]
    fn mse_permutation_invariant() {
        let m = model();
        let mut g = SplitMix64::new(23);
        let pts = random_points(&mut g, 6, 4.0);
        let x = Point::xy(1.0, 1.0);
        let base = mse(&m, &x, &pts).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        let swapped = mse(&m, &x, &rev).unwrap();
        assert!((base - swapped).abs() < 1e-12);
    }

    #[test]
    fn total_weighted_error_zero_weights() {
        let m = model();
        let omega = PredictionSet::new(
            vec![Point::xy(0.0, 0.0), Point::xy(1.0, 1.0)],
            vec![0.0, 0.0],
        )
        .unwrap();
        let s = [Point::xy(0.5, 0.5)];
        assert_eq!(total_weighted_error(&m, &omega, &s).unwrap(), 0.0);
    }

    #[test]
    fn total_weighted_error_single_point_equals_mse() {
        let m = model();
        let x = Point::xy(0.2, 0.9);
        let omega = PredictionSet::new(vec![x.clone()], vec![1.0]).unwrap();
        let s = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)];
        assert_relative_eq!(
            total_weighted_error(&m, &omega, &s).unwrap(),
            mse(&m, &x, &s).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn total_weighted_error_matches_termwise_sum() {
        let m = model();
        let mut g = SplitMix64::new(31);
        let theta = random_points(&mut g, 7, 5.0);
        let omega_pts = random_points(&mut g, 4, 5.0);
        let weights: Vec<f64> = (0..4).map(|_| g.next_f64()).collect();
        let omega = PredictionSet::new(omega_pts.clone(), weights.clone()).unwrap();
        let total = total_weighted_error(&m, &omega, &theta).unwrap();
        let brute: f64 = omega_pts
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * mse(&m, x, &theta).unwrap())
            .sum();
        assert_relative_eq!(total, brute, epsilon = 1e-12);
    }

    #[test]
    fn g_eval_at_zero_is_prior() {
        let m = model();
        let theta = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)];
        let x = Point::xy(0.5, 0.0);
        let form = QuadraticForm::for_prediction(&m, &x, &theta).unwrap();
        assert_relative_eq!(g_eval(&form, &DVector::zeros(2)).unwrap(), 1.0);
    }

    #[test]
    fn g_eval_at_optimum_equals_full_mse() {
        let m = model();
        let mut g = SplitMix64::new(41);
        let theta = random_points(&mut g, 5, 4.0);
        let x = Point::xy(2.0, 2.0);
        let form = QuadraticForm::for_prediction(&m, &x, &theta).unwrap();
        let alpha = lls_coefficients(form.q(), &(form.linear() / 2.0)).unwrap();
        let value = g_eval(&form, &alpha).unwrap();
        assert_relative_eq!(value, mse(&m, &x, &theta).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn restricted_optimum_empty_and_full_support() {
        let m = model();
        let mut g = SplitMix64::new(43);
        let theta = random_points(&mut g, 5, 4.0);
        let x = Point::xy(1.0, 3.0);
        let form = QuadraticForm::for_prediction(&m, &x, &theta).unwrap();

        let (alpha0, v0) = restricted_optimal_g(&form, &[]).unwrap();
        assert_eq!(alpha0, DVector::zeros(5));
        assert_relative_eq!(v0, 1.0);

        let full: Vec<usize> = (0..5).collect();
        let (alpha_full, v_full) = restricted_optimal_g(&form, &full).unwrap();
        let direct = lls_coefficients(form.q(), &(form.linear() / 2.0)).unwrap();
        assert_relative_eq!((alpha_full - direct).amax(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(v_full, mse(&m, &x, &theta).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn restricted_optimum_matches_subset_mse() {
        let m = model();
        let mut g = SplitMix64::new(47);
        let theta = random_points(&mut g, 6, 4.0);
        let x = Point::xy(2.0, 1.0);
        let form = QuadraticForm::for_prediction(&m, &x, &theta).unwrap();
        let support = [1usize, 3, 4];
        let (alpha, value) = restricted_optimal_g(&form, &support).unwrap();
        for i in 0..6 {
            if !support.contains(&i) {
                assert_eq!(alpha[i], 0.0);
            }
        }
        let subset: Vec<Point> = support.iter().map(|&i| theta[i].clone()).collect();
        assert_relative_eq!(value, mse(&m, &x, &subset).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn reformulation_identity_over_all_subsets() {
        // min over support-restricted alpha of g equals the closed-form
        // subset error, for every subset of a small observation set.
        let m = model();
        let mut g = SplitMix64::new(53);
        let theta = random_points(&mut g, 6, 4.0);
        let x = Point::xy(0.7, 2.3);
        let form = QuadraticForm::for_prediction(&m, &x, &theta).unwrap();
        for mask in 0u32..(1 << 6) {
            let support: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
            let (_, value) = restricted_optimal_g(&form, &support).unwrap();
            let subset: Vec<Point> = support.iter().map(|&i| theta[i].clone()).collect();
            let direct = mse(&m, &x, &subset).unwrap();
            assert!((value - direct).abs() < 1e-9, "mask={mask}: {value} vs {direct}");
        }
    }
}
