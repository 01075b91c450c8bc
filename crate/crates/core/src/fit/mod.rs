//! Limit-surface model fitting: an ellipsoidal quadratic form and a
//! certified-convex homogeneous quartic, both fitted to normalized
//! boundary wrenches.

mod ellipsoid;
mod quartic;
pub mod sos;

pub use ellipsoid::{fit_ellipsoid, EllipsoidModel};
pub use quartic::{fit_quartic, QuarticFitOptions, QuarticModel};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::quad::pairwise_sum_scalar;

/// Which limit-surface family a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ellipsoid,
    Quartic,
}

impl ModelKind {
    #[must_use]
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ellipsoid => "ellipsoid",
            ModelKind::Quartic => "quartic",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ellipsoid" => Ok(ModelKind::Ellipsoid),
            "quartic" => Ok(ModelKind::Quartic),
            other => Err(Error::domain(format!(
                "unknown model kind {other:?}; expected \"ellipsoid\" or \"quartic\""
            ))),
        }
    }
}

/// Diagnostics from a model fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub kind: ModelKind,
    pub dim: usize,
    pub sample_count: usize,
    /// Mean of `|f(w_i) - 1|` over the fitted samples.
    pub mean_abs_error: f64,
    pub iterations: usize,
    /// Convexity-witness residual per iteration (quartic fits only).
    pub residual_history: Vec<f64>,
    /// Final distance of the witness from the positive-semidefinite
    /// cone; zero for the ellipsoid family.
    pub certificate_residual: f64,
    /// Set when an indefinite ellipsoid solution had to be projected.
    pub projected_to_pd: bool,
}

/// A fitted limit surface of either family, under a common evaluation
/// interface.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitSurfaceModel {
    Ellipsoid(EllipsoidModel),
    Quartic(QuarticModel),
}

impl LimitSurfaceModel {
    #[must_use]
    pub fn dim(&self) -> usize {
        match self {
            LimitSurfaceModel::Ellipsoid(m) => m.dim(),
            LimitSurfaceModel::Quartic(m) => m.dim(),
        }
    }

    #[must_use]
    pub fn kind(&self) -> ModelKind {
        match self {
            LimitSurfaceModel::Ellipsoid(_) => ModelKind::Ellipsoid,
            LimitSurfaceModel::Quartic(_) => ModelKind::Quartic,
        }
    }

    /// Degree of homogeneity of `f`.
    #[must_use]
    pub fn degree(&self) -> u32 {
        match self {
            LimitSurfaceModel::Ellipsoid(_) => 2,
            LimitSurfaceModel::Quartic(_) => 4,
        }
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w.len())?;
        Ok(match self {
            LimitSurfaceModel::Ellipsoid(m) => m.value(w),
            LimitSurfaceModel::Quartic(m) => m.value(w),
        })
    }

    pub fn gradient(&self, w: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(w.len())?;
        Ok(match self {
            LimitSurfaceModel::Ellipsoid(m) => m.gradient(w),
            LimitSurfaceModel::Quartic(m) => m.gradient(w),
        })
    }

    pub fn hessian(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(w.len())?;
        Ok(match self {
            LimitSurfaceModel::Ellipsoid(m) => m.hessian(),
            LimitSurfaceModel::Quartic(m) => m.hessian(w),
        })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::dimension(format!(
                "model expects {} wrench components, got {got}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Mean of `|f(w_i) - 1|` over a sample set.
pub fn fitting_error(model: &LimitSurfaceModel, samples: &[DVector<f64>]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("fitting error needs at least one sample"));
    }
    for w in samples {
        model.check_dim(w.len())?;
    }
    Ok(match model {
        LimitSurfaceModel::Ellipsoid(m) => mean_abs_error_raw(samples, |w| m.value(w)),
        LimitSurfaceModel::Quartic(m) => mean_abs_error_raw(samples, |w| m.value(w)),
    })
}

pub(crate) fn mean_abs_error_raw<F>(samples: &[DVector<f64>], f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let errs = par_map(samples, |w| (f(w.as_slice()) - 1.0).abs());
    pairwise_sum_scalar(&errs) / samples.len() as f64
}

/// Validates a boundary sample set (consistent dimension, finite
/// entries, full linear span) and returns its dimension. Sets confined
/// to a proper subspace cannot pin down a limit surface and are
/// rejected.
pub(crate) fn check_samples(samples: &[DVector<f64>], context: &str) -> Result<usize> {
    let Some(first) = samples.first() else {
        return Err(Error::domain(format!("{context}: empty sample set")));
    };
    let dim = first.len();
    if dim < 2 {
        return Err(Error::domain(format!("{context}: samples must have dim >= 2")));
    }
    for w in samples {
        if w.len() != dim {
            return Err(Error::dimension(format!(
                "{context}: inconsistent sample dimensions"
            )));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain(format!("{context}: non-finite sample entry")));
        }
    }
    if samples.len() < dim {
        return Err(Error::degenerate(format!(
            "{context}: {} samples cannot span {dim} dimensions",
            samples.len()
        )));
    }
    // Rank of the second-moment matrix decides the spanned subspace.
    let mut moment = DMatrix::zeros(dim, dim);
    for w in samples {
        moment.syger(1.0, w, w, 1.0);
    }
    let eig = moment.symmetric_eigen();
    let max_eig = eig.eigenvalues.max();
    if !(max_eig > 0.0) {
        return Err(Error::degenerate(format!("{context}: all samples are zero")));
    }
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-12 * max_eig)
        .count();
    if rank < dim {
        return Err(Error::degenerate(format!(
            "{context}: samples span only {rank} of {dim} dimensions"
        )));
    }
    Ok(dim)
}

/// Number of sample principal components whose variance ratio exceeds
/// `threshold`, plus the ratios themselves in descending order.
pub fn pca_components(
    samples: &[DVector<f64>],
    threshold: f64,
) -> Result<(usize, DVector<f64>)> {
    let Some(first) = samples.first() else {
        return Err(Error::domain("principal components need samples"));
    };
    let dim = first.len();
    if samples.len() < 2 {
        return Err(Error::domain("principal components need at least two samples"));
    }
    if samples.iter().any(|w| w.len() != dim) {
        return Err(Error::dimension("inconsistent sample dimensions"));
    }
    let mean = samples.iter().fold(DVector::zeros(dim), |acc, w| acc + w)
        / samples.len() as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for w in samples {
        let d = w - &mean;
        cov.syger(1.0, &d, &d, 1.0);
    }
    cov /= (samples.len() - 1) as f64;
    let mut vals: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = vals.iter().sum();
    if !(total > 0.0) {
        return Err(Error::degenerate("samples have no variance"));
    }
    let ratios = DVector::from_iterator(dim, vals.iter().map(|v| v / total));
    let count = ratios.iter().filter(|&&r| r > threshold).count();
    Ok((count, ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pca_counts_significant_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        // Variance 1 on three axes, 1e-4 on the other three.
        let samples: Vec<DVector<f64>> = (0..4000)
            .map(|_| {
                DVector::from_iterator(
                    6,
                    (0..6).map(|k| {
                        let scale = if k < 3 { 1.0 } else { 1e-2 };
                        scale * (rng.gen::<f64>() - 0.5)
                    }),
                )
            })
            .collect();
        let (count, ratios) = pca_components(&samples, 0.01).unwrap();
        assert_eq!(count, 3);
        assert!(ratios[0] >= ratios[5]);
        assert!((ratios.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fitting_error_is_zero_on_exact_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<DVector<f64>> = (0..50)
            .map(|_| {
                let mut v =
                    DVector::from_iterator(3, (0..3).map(|_| rng.gen::<f64>() - 0.5));
                let n = v.norm();
                v /= n;
                v
            })
            .collect();
        let model = LimitSurfaceModel::Ellipsoid(
            EllipsoidModel::from_matrix(DMatrix::identity(3, 3)).unwrap(),
        );
        let err = fitting_error(&model, &samples).unwrap();
        assert!(err < 1e-12);
        // Dimension mismatches are rejected.
        let bad = vec![DVector::zeros(4)];
        assert!(fitting_error(&model, &bad).is_err());
    }

    #[test]
    fn sample_checks_reject_subspaces_and_accept_full_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let full: Vec<DVector<f64>> = (0..40)
            .map(|_| DVector::from_iterator(3, (0..3).map(|_| rng.gen::<f64>() - 0.5)))
            .collect();
        assert_eq!(check_samples(&full, "test").unwrap(), 3);

        let planar: Vec<DVector<f64>> = full
            .iter()
            .map(|w| {
                let mut v = w.clone();
                v[2] = 0.0;
                v
            })
            .collect();
        assert!(matches!(
            check_samples(&planar, "test").unwrap_err(),
            Error::Degenerate(_)
        ));
        assert!(check_samples(&[], "test").is_err());
    }
}
