//! Convex homogeneous quartic limit-surface model.
//!
//! `f(w) = sum_k a_k w^alpha_k` over all degree-4 monomials, fitted so
//! that the curvature form carries a positive-semidefinite witness
//! matrix; that witness certifies convexity of `f` everywhere.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::fit::sos::SosStructure;
use crate::fit::{check_samples, mean_abs_error_raw, FitReport, ModelKind};

/// Homogeneous quartic `f(w) = a' phi(w)` together with the convexity
/// witness produced by the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticModel {
    dim: usize,
    coefficients: DVector<f64>,
    exponents: Vec<Vec<u8>>,
    certificate: DMatrix<f64>,
    certificate_residual: f64,
}

impl QuarticModel {
    /// Wraps explicit coefficients (deserialization path). The stored
    /// witness is the minimum-norm candidate for the curvature form;
    /// its distance to the positive-semidefinite cone is recorded as
    /// the certificate residual.
    pub fn from_coefficients(dim: usize, coefficients: DVector<f64>) -> Result<Self> {
        let s = SosStructure::new(dim)?;
        if coefficients.len() != s.exponents.len() {
            return Err(Error::dimension(format!(
                "quartic in {dim} dimensions has {} coefficients, got {}",
                s.exponents.len(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("quartic coefficients must be finite"));
        }
        let curvature = s.v2_apply(&coefficients);
        let certificate = s.min_norm_certificate(&curvature);
        let (_, defect) = psd_projection(&certificate);
        Ok(Self {
            dim,
            coefficients,
            exponents: s.exponents,
            certificate,
            certificate_residual: defect,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Monomial coefficients in graded lexicographic order.
    #[must_use]
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Exponent vectors matching [`Self::coefficients`] one to one.
    #[must_use]
    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.exponents
    }

    /// Convexity witness for the curvature form.
    #[must_use]
    pub fn certificate(&self) -> &DMatrix<f64> {
        &self.certificate
    }

    /// Frobenius distance of the witness from the positive-semidefinite
    /// cone; zero (to tolerance) certifies convexity.
    #[must_use]
    pub fn certificate_residual(&self) -> f64 {
        self.certificate_residual
    }

    fn power_table(&self, w: &[f64]) -> Vec<[f64; 5]> {
        w.iter()
            .map(|&x| {
                let x2 = x * x;
                [1.0, x, x2, x2 * x, x2 * x2]
            })
            .collect()
    }

    /// `f(w)`.
    #[must_use]
    pub fn value(&self, w: &[f64]) -> f64 {
        let powers = self.power_table(w);
        let mut out = 0.0;
        for (a, alpha) in self.coefficients.iter().zip(&self.exponents) {
            let mut term = *a;
            for (j, &e) in alpha.iter().enumerate() {
                term *= powers[j][e as usize];
            }
            out += term;
        }
        out
    }

    /// `grad f(w)`.
    #[must_use]
    pub fn gradient(&self, w: &[f64]) -> DVector<f64> {
        let powers = self.power_table(w);
        let mut out = DVector::zeros(self.dim);
        for (a, alpha) in self.coefficients.iter().zip(&self.exponents) {
            for (j, &e) in alpha.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut term = *a * e as f64 * powers[j][(e - 1) as usize];
                for (k, &ek) in alpha.iter().enumerate() {
                    if k != j {
                        term *= powers[k][ek as usize];
                    }
                }
                out[j] += term;
            }
        }
        out
    }

    /// `hess f(w)`.
    #[must_use]
    pub fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let powers = self.power_table(w);
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (a, alpha) in self.coefficients.iter().zip(&self.exponents) {
            for j in 0..self.dim {
                let ej = alpha[j];
                if ej == 0 {
                    continue;
                }
                // Diagonal second derivative.
                if ej >= 2 {
                    let mut term = *a * (ej as f64) * (ej as f64 - 1.0) * powers[j][(ej - 2) as usize];
                    for (k, &ek) in alpha.iter().enumerate() {
                        if k != j {
                            term *= powers[k][ek as usize];
                        }
                    }
                    out[(j, j)] += term;
                }
                // Mixed second derivatives, each unordered pair once.
                for l in (j + 1)..self.dim {
                    let el = alpha[l];
                    if el == 0 {
                        continue;
                    }
                    let mut term = *a * ej as f64 * el as f64;
                    term *= powers[j][(ej - 1) as usize] * powers[l][(el - 1) as usize];
                    for (k, &ek) in alpha.iter().enumerate() {
                        if k != j && k != l {
                            term *= powers[k][ek as usize];
                        }
                    }
                    out[(j, l)] += term;
                    out[(l, j)] += term;
                }
            }
        }
        out
    }
}

/// Controls for the alternating quartic fit.
#[derive(Debug, Clone, Copy)]
pub struct QuarticFitOptions {
    /// Cap on alternating iterations.
    pub max_iterations: usize,
    /// The fit succeeds once the witness sits within this Frobenius
    /// distance of the positive-semidefinite cone.
    pub residual_tol: f64,
    /// Convexity penalty weight; `None` picks a scale-matched default.
    pub penalty: Option<f64>,
}

impl Default for QuarticFitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            residual_tol: 1e-8,
            penalty: None,
        }
    }
}

/// Fits a convex homogeneous quartic to boundary samples by alternating
/// between a penalized least-squares coefficient step and a projection
/// of the convexity witness onto the positive-semidefinite cone.
///
/// On success the returned model carries a witness with exact curvature
/// coupling and minimum eigenvalue no lower than `-residual_tol`; if the
/// residual fails to reach the tolerance the fit reports
/// [`Error::NoConvergence`] with the best residual seen.
pub fn fit_quartic(
    samples: &[DVector<f64>],
    options: &QuarticFitOptions,
) -> Result<(QuarticModel, FitReport)> {
    let dim = check_samples(samples, "quartic fit")?;
    let s = SosStructure::new(dim)?;
    let n_coef = s.exponents.len();
    if samples.len() < n_coef {
        return Err(Error::domain(format!(
            "quartic fit needs at least {n_coef} samples in {dim} dimensions, got {}",
            samples.len()
        )));
    }

    // Design matrix over the monomial basis.
    let rows: Vec<Vec<f64>> = par_map(samples, |w| {
        s.exponents
            .iter()
            .map(|alpha| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| w[j].powi(e as i32))
                    .product()
            })
            .collect()
    });
    let mut design = DMatrix::zeros(samples.len(), n_coef);
    for (r, row) in rows.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            design[(r, c)] = x;
        }
    }
    let gram = design.transpose() * &design;
    let atb = design.transpose() * DVector::from_element(samples.len(), 1.0);

    // Orbit-size weighting makes the penalty equal to the Frobenius
    // distance between the witness and the coupling-feasible set.
    let inv_sqrt_sizes =
        DVector::from_iterator(s.rows, s.orbits.iter().map(|o| 1.0 / (o.len() as f64).sqrt()));
    let mut v2_scaled = s.v2.clone();
    for r in 0..s.rows {
        for c in 0..n_coef {
            v2_scaled[(r, c)] *= inv_sqrt_sizes[r];
        }
    }
    let penalty_gram = v2_scaled.transpose() * &v2_scaled;
    let mut rho = options.penalty.unwrap_or_else(|| {
        let pg_trace = penalty_gram.trace();
        if pg_trace > 0.0 {
            gram.trace() / pg_trace
        } else {
            1.0
        }
    });

    let solve_a = |rho: f64, z: &DMatrix<f64>| -> Result<DVector<f64>> {
        let target = s.orbit_sums(z).component_mul(&inv_sqrt_sizes);
        let mut lhs = &gram + rho * &penalty_gram;
        let rhs = &atb + rho * v2_scaled.transpose() * target;
        let ridge = 1e-12 * lhs.trace().max(1.0) / n_coef as f64;
        for k in 0..n_coef {
            lhs[(k, k)] += ridge;
        }
        lhs.cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or_else(|| Error::numerical("quartic fit normal equations are singular"))
    };

    // Start from the unpenalized fit: a convex data set must come back
    // untouched, so the witness target cannot enter before a witness
    // for the actual curvature exists.
    let mut coefficients = {
        let mut lhs = gram.clone();
        let ridge = 1e-12 * lhs.trace().max(1.0) / n_coef as f64;
        for k in 0..n_coef {
            lhs[(k, k)] += ridge;
        }
        lhs.cholesky()
            .map(|ch| ch.solve(&atb))
            .ok_or_else(|| Error::numerical("quartic fit normal equations are singular"))?
    };
    let mut z = DMatrix::zeros(s.m_side, s.m_side);
    let mut coupled = s.project_to_coupling(&z, &s.v2_apply(&coefficients));
    let mut residual_history = Vec::new();
    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;
    let mut converged = false;

    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        let (projected, defect) = psd_projection(&coupled);
        z = projected;
        residual_history.push(defect);
        best_residual = best_residual.min(defect);
        if defect < options.residual_tol {
            converged = true;
            break;
        }
        // Escalate the penalty when the residual creeps; the quadratic
        // penalty only closes the coupling gap as rho grows, and the
        // late iterations barely move the data term.
        if iter >= 15 && iter % 15 == 0 {
            let old = residual_history[iter - 15];
            if defect > 0.8 * old {
                rho *= 2.0;
            }
        }
        coefficients = solve_a(rho, &z)?;
        coupled = s.project_to_coupling(&z, &s.v2_apply(&coefficients));
    }

    if !converged {
        return Err(Error::NoConvergence {
            context: "convex quartic fit".into(),
            residual: best_residual,
        });
    }

    // The coupled witness matches the model curvature exactly and its
    // eigenvalues sit above `-residual_tol`.
    let certificate_residual = *residual_history.last().unwrap();
    let model = QuarticModel {
        dim,
        coefficients,
        exponents: s.exponents,
        certificate: coupled,
        certificate_residual,
    };
    let mean_abs_error = mean_abs_error_raw(samples, |w| model.value(w));
    let report = FitReport {
        kind: ModelKind::Quartic,
        dim,
        sample_count: samples.len(),
        mean_abs_error,
        iterations,
        residual_history,
        certificate_residual,
        projected_to_pd: false,
    };
    Ok((model, report))
}

/// Nearest positive-semidefinite matrix in Frobenius norm, via
/// eigenvalue clamping, plus the clamped distance.
pub(crate) fn psd_projection(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    let mut defect_sq = 0.0;
    for v in vals.iter_mut() {
        if *v < 0.0 {
            defect_sq += *v * *v;
            *v = 0.0;
        }
    }
    let projected =
        &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let sym = 0.5 * (&projected + projected.transpose());
    (sym, defect_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn surface_samples<F: Fn(&[f64]) -> f64>(dim: usize, n: usize, seed: u64, f: F) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut v =
                    DVector::from_iterator(dim, (0..dim).map(|_| rng.gen::<f64>() - 0.5));
                let val = f(v.as_slice());
                // Homogeneous degree 4: scale by the fourth root.
                v /= val.powf(0.25);
                v
            })
            .collect()
    }

    fn squared_norm(w: &[f64]) -> f64 {
        let s: f64 = w.iter().map(|x| x * x).sum();
        s * s
    }

    #[test]
    fn recovers_squared_norm_quartic() {
        let samples = surface_samples(3, 120, 9, squared_norm);
        let (model, report) = fit_quartic(&samples, &QuarticFitOptions::default()).unwrap();
        assert!(report.certificate_residual < 1e-8);
        assert!(report.mean_abs_error < 1e-8);
        for w in [
            [0.3, -0.1, 0.4],
            [1.0, 0.0, 0.0],
            [-0.2, 0.9, 0.5],
        ] {
            assert_relative_eq!(model.value(&w), squared_norm(&w), epsilon = 1e-6);
        }
    }

    #[test]
    fn certificate_couples_to_coefficients() {
        let samples = surface_samples(3, 150, 23, |w| {
            let q = w[0] * w[0] + 2.0 * w[1] * w[1] + 3.0 * w[2] * w[2] + w[0] * w[1];
            q * q
        });
        let (model, _) = fit_quartic(&samples, &QuarticFitOptions::default()).unwrap();
        let s = SosStructure::new(3).unwrap();
        let coupling = s.orbit_sums(model.certificate()) - s.v2_apply(model.coefficients());
        assert!(coupling.amax() < 1e-10, "coupling error {}", coupling.amax());
        let eig = model.certificate().clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        assert!(min_eig >= -1e-8, "witness eigenvalue {min_eig}");
    }

    #[test]
    fn nonconvex_data_still_yields_convex_model() {
        // A quartic with a strongly nonconvex cross section; the fit
        // must trade accuracy for a certified convex surrogate.
        let samples = surface_samples(3, 200, 31, |w| {
            let s: f64 = w.iter().map(|x| x * x).sum();
            let dent = 0.9 * (w[0] * w[1]).powi(2);
            (s * s - dent).max(1e-3)
        });
        let (model, report) = fit_quartic(&samples, &QuarticFitOptions::default()).unwrap();
        assert!(report.certificate_residual < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let w: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() - 0.5).collect();
            let h = model.hessian(&w);
            let min_eig = h.symmetric_eigen().eigenvalues.min();
            assert!(min_eig >= -1e-7, "nonconvex point, eigenvalue {min_eig}");
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let samples = surface_samples(3, 150, 23, |w| {
            let q = w[0] * w[0] + 2.0 * w[1] * w[1] + 3.0 * w[2] * w[2] + w[0] * w[1];
            q * q
        });
        let (model, _) = fit_quartic(&samples, &QuarticFitOptions::default()).unwrap();
        let w = [0.4, -0.3, 0.2];
        let g = model.gradient(&w);
        let h = model.hessian(&w);
        let eps = 1e-5;
        for k in 0..3 {
            let mut wp = w;
            let mut wm = w;
            wp[k] += eps;
            wm[k] -= eps;
            let fd = (model.value(&wp) - model.value(&wm)) / (2.0 * eps);
            assert_relative_eq!(g[k], fd, epsilon = 1e-7);
            let gp = model.gradient(&wp);
            let gm = model.gradient(&wm);
            for l in 0..3 {
                let fd2 = (gp[l] - gm[l]) / (2.0 * eps);
                assert_relative_eq!(h[(k, l)], fd2, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn homogeneity_of_degree_four() {
        let samples = surface_samples(3, 120, 9, squared_norm);
        let (model, _) = fit_quartic(&samples, &QuarticFitOptions::default()).unwrap();
        let w = [0.3, 0.7, -0.2];
        let w2: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        assert_relative_eq!(model.value(&w2), 16.0 * model.value(&w), epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_sample_sets() {
        // Too few samples.
        let few = surface_samples(3, 5, 2, squared_norm);
        assert!(fit_quartic(&few, &QuarticFitOptions::default()).is_err());
        // Subspace-confined samples.
        let mut flat = surface_samples(2, 60, 2, squared_norm);
        for s in flat.iter_mut() {
            let mut v = DVector::zeros(3);
            v[0] = s[0];
            v[1] = s[1];
            *s = v;
        }
        let err = fit_quartic(&flat, &QuarticFitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "got {err:?}");
    }

    #[test]
    fn from_coefficients_round_trip() {
        let samples = surface_samples(3, 120, 9, squared_norm);
        let (model, _) = fit_quartic(&samples, &QuarticFitOptions::default()).unwrap();
        let rebuilt =
            QuarticModel::from_coefficients(3, model.coefficients().clone()).unwrap();
        let w = [0.2, -0.5, 0.3];
        assert_eq!(rebuilt.value(&w), model.value(&w));
        assert!(QuarticModel::from_coefficients(3, DVector::zeros(4)).is_err());
    }
}
