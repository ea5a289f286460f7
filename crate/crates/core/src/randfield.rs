//! Zero-mean random field described by a covariance function and noise variance.
//!
//! Only second moments ever enter a computation: the field variables
//! themselves are implicit. Both supported kernels are stationary and
//! isotropic, so they evaluate on the Euclidean distance between locations;
//! the matrix-assembly API still takes point pairs so a nonstationary kernel
//! variant can be added without touching callers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in the environment, `d >= 1` coordinates. Serializes as the
/// bare coordinate array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point needs >= 1 coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("point coordinates must be finite".into()));
        }
        Ok(Self { coords })
    }

    /// Planar shorthand; both experiment setups are 2-D.
    pub fn xy(x: f64, y: f64) -> Self {
        Self { coords: vec![x, y] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &Point) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Stationary isotropic covariance function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `std_dev^2 * exp(-h^2 / (2 * length_scale^2))`.
    SquaredExponential { std_dev: f64, length_scale: f64 },
    /// `sill * (1 - 3h/(2a) + (h/a)^3 / 2)` for `h <= a` (range `a`), else 0.
    Spherical { sill: f64, range: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::SquaredExponential { std_dev, length_scale } => {
                std_dev > 0.0 && length_scale > 0.0
            }
            Kernel::Spherical { sill, range } => sill > 0.0 && range > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "kernel parameters must be strictly positive".into(),
            ))
        }
    }

    /// Covariance at separation distance `h >= 0`.
    pub fn eval_distance(&self, h: f64) -> f64 {
        match *self {
            Kernel::SquaredExponential { std_dev, length_scale } => {
                std_dev * std_dev * (-h * h / (2.0 * length_scale * length_scale)).exp()
            }
            Kernel::Spherical { sill, range } => {
                if h > range {
                    0.0
                } else {
                    let r = h / range;
                    sill * (1.0 - 1.5 * r + 0.5 * r * r * r)
                }
            }
        }
    }

    /// Process variance, `phi(x, x)`.
    pub fn variance(&self) -> f64 {
        match *self {
            Kernel::SquaredExponential { std_dev, .. } => std_dev * std_dev,
            Kernel::Spherical { sill, .. } => sill,
        }
    }
}

/// Kernel plus measurement-noise variance; the only statistical inputs the
/// estimation error needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldModel {
    pub kernel: Kernel,
    pub noise_variance: f64,
}

impl RandomFieldModel {
    pub fn new(kernel: Kernel, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidParameter(
                "noise variance must be finite and > 0".into(),
            ));
        }
        Ok(Self { kernel, noise_variance })
    }
}

/// `phi(x, y)` for a point pair.
pub fn kernel_eval(kernel: &Kernel, x: &Point, y: &Point) -> Result<f64> {
    Ok(kernel.eval_distance(x.distance(y)?))
}

/// Measurement covariance matrix `C_S`: kernel Gram matrix of `points` plus
/// `noise_variance` on the diagonal. Positive definite since the noise
/// variance is strictly positive.
pub fn covariance_matrix(model: &RandomFieldModel, points: &[Point]) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty measurement set".into()));
    }
    reject_duplicates(points)?;
    let n = points.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = model.kernel.variance() + model.noise_variance;
        for j in (i + 1)..n {
            let v = kernel_eval(&model.kernel, &points[i], &points[j])?;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Cross-covariance vector `b_{x,S}`, entry `i = phi(x, S[i])`. No noise term:
/// the noise is uncorrelated with the process.
pub fn cross_covariance(model: &RandomFieldModel, x: &Point, points: &[Point]) -> Result<DVector<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty measurement set".into()));
    }
    let mut b = DVector::zeros(points.len());
    for (i, p) in points.iter().enumerate() {
        b[i] = kernel_eval(&model.kernel, x, p)?;
    }
    Ok(b)
}

/// Duplicate observation locations signal malformed input even though the
/// noise term keeps the covariance invertible.
pub fn reject_duplicates(points: &[Point]) -> Result<()> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i] == points[j] {
                return Err(Error::DuplicatePoints);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn se11() -> Kernel {
        Kernel::SquaredExponential { std_dev: 1.0, length_scale: 1.0 }
    }

    #[test]
    fn se_kernel_values() {
        let k = se11();
        assert_relative_eq!(k.eval_distance(0.0), 1.0);
        // exp(-1/2)
        assert_relative_eq!(k.eval_distance(1.0), 0.6065306597126334, epsilon = 1e-12);
        assert_relative_eq!(k.eval_distance(2.0), 0.1353352832366127, epsilon = 1e-12);
    }

    #[test]
    fn spherical_kernel_values() {
        let k = Kernel::Spherical { sill: 0.01519, range: 439.2 };
        assert_eq!(k.eval_distance(500.0), 0.0);
        assert_relative_eq!(k.eval_distance(0.0), 0.01519);
        assert_eq!(k.eval_distance(439.2), 0.0);
        // interior value stays within (0, sill)
        let mid = k.eval_distance(200.0);
        assert!(mid > 0.0 && mid < 0.01519);
    }

    #[test]
    fn kernel_eval_symmetric_and_dimension_checked() {
        let k = se11();
        let a = Point::xy(0.0, 0.0);
        let b = Point::xy(1.0, 0.0);
        assert_eq!(kernel_eval(&k, &a, &b).unwrap(), kernel_eval(&k, &b, &a).unwrap());
        let c = Point::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            kernel_eval(&k, &a, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn covariance_matrix_two_points() {
        let model = RandomFieldModel::new(se11(), 0.25).unwrap();
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)];
        let c = covariance_matrix(&model, &pts).unwrap();
        assert_relative_eq!(c[(0, 0)], 1.25);
        assert_relative_eq!(c[(1, 1)], 1.25);
        assert_relative_eq!(c[(0, 1)], 0.6065306597126334, epsilon = 1e-12);
        assert_eq!(c[(0, 1)], c[(1, 0)]);
    }

    #[test]
    fn covariance_matrix_single_point() {
        let model = RandomFieldModel::new(se11(), 0.25).unwrap();
        let c = covariance_matrix(&model, &[Point::xy(3.0, 4.0)]).unwrap();
        assert_eq!(c.nrows(), 1);
        assert_relative_eq!(c[(0, 0)], 1.25);
    }

    #[test]
    fn covariance_matrix_rejects_duplicates() {
        let model = RandomFieldModel::new(se11(), 0.25).unwrap();
        let pts = [Point::xy(0.0, 0.0), Point::xy(0.0, 0.0)];
        assert!(matches!(covariance_matrix(&model, &pts), Err(Error::DuplicatePoints)));
    }

    #[test]
    fn covariance_matrix_cholesky_succeeds() {
        let model = RandomFieldModel::new(se11(), 0.1).unwrap();
        let mut g = crate::rng::SplitMix64::new(11);
        for n in [1usize, 5, 20, 50] {
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::xy(g.next_range(0.0, 10.0), g.next_range(0.0, 10.0)))
                .collect();
            let c = covariance_matrix(&model, &pts).unwrap();
            assert!(c.clone().cholesky().is_some(), "n={n}");
        }
    }

    #[test]
    fn cross_covariance_entries() {
        let model = RandomFieldModel::new(se11(), 0.25).unwrap();
        let pts = [Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)];
        let x = Point::xy(0.0, 0.0);
        let b = cross_covariance(&model, &x, &pts).unwrap();
        assert_relative_eq!(b[0], 0.6065306597126334, epsilon = 1e-12);
        assert_relative_eq!(b[1], 0.1353352832366127, epsilon = 1e-12);
    }

    #[test]
    fn cross_covariance_coincident_point_gives_variance() {
        let model = RandomFieldModel::new(se11(), 0.25).unwrap();
        let pts = [Point::xy(0.0, 0.0), Point::xy(5.0, 5.0)];
        let b = cross_covariance(&model, &pts[0].clone(), &pts).unwrap();
        assert_relative_eq!(b[0], 1.0);
    }

    #[test]
    fn cross_covariance_compact_support_zero_vector() {
        let model =
            RandomFieldModel::new(Kernel::Spherical { sill: 0.01519, range: 439.2 }, 0.001).unwrap();
        let pts = [Point::xy(0.0, 0.0), Point::xy(100.0, 0.0)];
        let x = Point::xy(2000.0, 2000.0);
        let b = cross_covariance(&model, &x, &pts).unwrap();
        assert_eq!(b[0], 0.0);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn rho_max_constants_on_unit_grid() {
        // Nearest-neighbor correlation on a unit grid: exp(-1/(2 L^2)).
        let l1 = Kernel::SquaredExponential { std_dev: 1.0, length_scale: 1.0 };
        let l05 = Kernel::SquaredExponential { std_dev: 1.0, length_scale: 0.5 };
        assert_relative_eq!(l1.eval_distance(1.0) / l1.variance(), 0.6065306597126334, epsilon = 1e-12);
        assert_relative_eq!(l05.eval_distance(1.0) / l05.variance(), 0.1353352832366127, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Kernel::SquaredExponential { std_dev: 0.0, length_scale: 1.0 }
            .validate()
            .is_err());
        assert!(Kernel::Spherical { sill: 0.1, range: -1.0 }.validate().is_err());
        assert!(RandomFieldModel::new(se11(), 0.0).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![]).is_err());
    }
}
