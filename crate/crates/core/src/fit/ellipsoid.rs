//! Ellipsoidal limit-surface model: `f(w) = w' A w` with `A` symmetric
//! positive definite, fitted to normalized boundary wrenches by least
//! squares on the distinct entries of `A`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{check_samples, mean_abs_error_raw, FitReport, ModelKind};

/// Positive-definite quadratic form describing an ellipsoidal limit
/// surface in normalized wrench coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidModel {
    dim: usize,
    matrix: DMatrix<f64>,
    projected: bool,
}

impl EllipsoidModel {
    /// Wraps an explicit form matrix; it must be square, symmetric to
    /// 1e-9 and positive definite.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim == 0 {
            return Err(Error::dimension("ellipsoid matrix must be square"));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::domain("ellipsoid matrix must be symmetric"));
                }
            }
        }
        let eig = matrix.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::domain(
                "ellipsoid matrix must be positive definite",
            ));
        }
        Ok(Self {
            dim,
            matrix,
            projected: false,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The symmetric positive-definite form matrix.
    #[must_use]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// True when the least-squares solution was indefinite and had to be
    /// projected back onto the positive-definite cone.
    #[must_use]
    pub fn was_projected(&self) -> bool {
        self.projected
    }

    /// `f(w) = w' A w`.
    #[must_use]
    pub fn value(&self, w: &[f64]) -> f64 {
        let mut out = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.matrix[(i, j)] * w[j];
            }
            out += w[i] * row;
        }
        out
    }

    /// `grad f = 2 A w`.
    #[must_use]
    pub fn gradient(&self, w: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.matrix[(i, j)] * w[j];
            }
            out[i] = 2.0 * row;
        }
        out
    }

    /// `hess f = 2 A`, independent of the point.
    #[must_use]
    pub fn hessian(&self) -> DMatrix<f64> {
        2.0 * &self.matrix
    }
}

/// Fits the form matrix to boundary samples by least squares over its
/// distinct entries (`f(w_i) = 1`). Sample sets confined to a proper
/// subspace are rejected; an indefinite least-squares solution is
/// projected onto the positive-definite cone (eigenvalue floor 1e-8) and
/// flagged in the model and report.
pub fn fit_ellipsoid(samples: &[DVector<f64>]) -> Result<(EllipsoidModel, FitReport)> {
    let dim = check_samples(samples, "ellipsoid fit")?;
    let n_coef = dim * (dim + 1) / 2;
    if samples.len() < n_coef {
        return Err(Error::domain(format!(
            "ellipsoid fit needs at least {n_coef} samples in {dim} dimensions, got {}",
            samples.len()
        )));
    }

    // Row per sample over vech(A); off-diagonal entries appear twice in
    // the quadratic form, hence the factor 2.
    let mut design = DMatrix::zeros(samples.len(), n_coef);
    for (r, w) in samples.iter().enumerate() {
        let mut c = 0;
        for i in 0..dim {
            for j in i..dim {
                design[(r, c)] = if i == j { w[i] * w[i] } else { 2.0 * w[i] * w[j] };
                c += 1;
            }
        }
    }
    let rhs = DVector::from_element(samples.len(), 1.0);
    let mut gram = design.transpose() * &design;
    let atb = design.transpose() * rhs;
    let ridge = 1e-12 * gram.trace().max(1.0) / n_coef as f64;
    for k in 0..n_coef {
        gram[(k, k)] += ridge;
    }
    let coeffs = gram
        .cholesky()
        .ok_or_else(|| Error::numerical("ellipsoid normal equations are singular"))?
        .solve(&atb);

    let mut matrix = DMatrix::zeros(dim, dim);
    let mut c = 0;
    for i in 0..dim {
        for j in i..dim {
            matrix[(i, j)] = coeffs[c];
            matrix[(j, i)] = coeffs[c];
            c += 1;
        }
    }

    let mut projected = false;
    let eig = matrix.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < 1e-8) {
        projected = true;
        let mut vals = eig.eigenvalues.clone();
        for v in vals.iter_mut() {
            *v = v.max(1e-8);
        }
        matrix = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
        // Symmetrize away the rounding from the eigenvector sandwich.
        matrix = 0.5 * (&matrix + matrix.transpose());
        log::warn!("ellipsoid fit was indefinite; projected onto the positive-definite cone");
    }

    let model = EllipsoidModel {
        dim,
        matrix,
        projected,
    };
    let mean_abs_error = mean_abs_error_raw(samples, |w| model.value(w));
    let report = FitReport {
        kind: ModelKind::Ellipsoid,
        dim,
        sample_count: samples.len(),
        mean_abs_error,
        iterations: 1,
        residual_history: Vec::new(),
        certificate_residual: 0.0,
        projected_to_pd: projected,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn quadric_samples(diag: &[f64], n: usize, seed: u64) -> Vec<DVector<f64>> {
        let dim = diag.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut v = DVector::from_iterator(dim, (0..dim).map(|_| rng.gen::<f64>() - 0.5));
                let f: f64 = (0..dim).map(|i| diag[i] * v[i] * v[i]).sum();
                v /= f.sqrt();
                v
            })
            .collect()
    }

    #[test]
    fn recovers_known_quadric() {
        let diag = [1.0, 2.0, 3.0, 0.5, 1.5, 2.5];
        let samples = quadric_samples(&diag, 400, 7);
        let (model, report) = fit_ellipsoid(&samples).unwrap();
        assert!(!model.was_projected());
        assert!(report.mean_abs_error < 1e-10);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { diag[i] } else { 0.0 };
                assert_relative_eq!(model.matrix()[(i, j)], want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn subspace_samples_are_rejected() {
        // All samples have w[2] = 0: a proper subspace, no information
        // about the third axis.
        let mut samples = quadric_samples(&[1.0, 2.0], 100, 3);
        for s in samples.iter_mut() {
            let mut v = DVector::zeros(3);
            v[0] = s[0];
            v[1] = s[1];
            *s = v;
        }
        let err = fit_ellipsoid(&samples).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "got {err:?}");
    }

    #[test]
    fn saddle_data_is_projected_to_definite() {
        // Points on the unit circle of a saddle form x^2 - y^2 + small
        // z^2 coupling: full-rank data whose least-squares form matrix
        // is indefinite.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut samples = Vec::new();
        for _ in 0..200 {
            let y: f64 = 3.0 * (rng.gen::<f64>() - 0.5);
            let z: f64 = 3.0 * (rng.gen::<f64>() - 0.5);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let x = (1.0 + y * y + z * z).sqrt();
            samples.push(DVector::from_column_slice(&[sign * x, y, z]));
        }
        // f(w) = x^2 - y^2 - z^2 = 1 on these points.
        let (model, report) = fit_ellipsoid(&samples).unwrap();
        assert!(model.was_projected());
        assert!(report.projected_to_pd);
        let eig = model.matrix().clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l >= 1e-8 - 1e-15));
    }

    #[test]
    fn gradient_and_hessian_are_consistent() {
        let diag = [1.0, 2.0, 3.0];
        let samples = quadric_samples(&diag, 60, 5);
        let (model, _) = fit_ellipsoid(&samples).unwrap();
        let w = [0.3, -0.2, 0.5];
        let g = model.gradient(&w);
        let h = model.hessian();
        let eps = 1e-6;
        for k in 0..3 {
            let mut wp = w;
            let mut wm = w;
            wp[k] += eps;
            wm[k] -= eps;
            let fd = (model.value(&wp) - model.value(&wm)) / (2.0 * eps);
            assert_relative_eq!(g[k], fd, epsilon = 1e-6);
            for l in 0..3 {
                let gp = model.gradient(&wp);
                let gm = model.gradient(&wm);
                let fd2 = (gp[l] - gm[l]) / (2.0 * eps);
                assert_relative_eq!(h[(k, l)], fd2, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn from_matrix_rejects_indefinite_or_asymmetric() {
        let saddle = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0]));
        assert!(EllipsoidModel::from_matrix(saddle).is_err());
        let mut asym = DMatrix::identity(2, 2);
        asym[(0, 1)] = 0.5;
        assert!(EllipsoidModel::from_matrix(asym).is_err());
    }

    #[test]
    fn needs_enough_samples() {
        let samples = quadric_samples(&[1.0, 1.0, 1.0], 4, 2);
        assert!(fit_ellipsoid(&samples).is_err());
    }
}
