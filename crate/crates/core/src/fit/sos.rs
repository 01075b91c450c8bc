//! Structure matrices tying a homogeneous quartic to its convexity
//! certificate.
//!
//! For `f(w) = sum_k a_k w^{alpha_k}` (all exponents of degree 4), the
//! directional curvature `z' H(w) z` is a quadratic form in the stacked
//! products `y = w (x) z`:
//!
//! ```text
//!     z' H(w) z = y' M y      with   V1 vec(M) = V2 a
//! ```
//!
//! `V2` maps quartic coefficients to the coefficients of the biquadratic
//! monomials `(w_j w_k) (z_a z_b)`; `V1` collects the entries of `M` that
//! realize the same monomial (its rows partition the entries of `M` into
//! orbits). Any symmetric `M` in the affine set certifies the curvature;
//! a positive semidefinite one certifies convexity everywhere.

use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Exponent vectors of all degree-4 monomials in `dim` variables,
/// lexicographically descending. This ordering defines the coefficient
/// layout used across the crate (fitting, serialization, evaluation).
#[must_use]
pub fn quartic_exponents(dim: usize) -> Vec<Vec<u8>> {
    fn rec(dim_left: usize, remaining: u8, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if dim_left == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            rec(dim_left - 1, remaining - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, 4, &mut Vec::new(), &mut out);
    out
}

/// Index pairs `(i, j)` with `i <= j`, lexicographic. Shared between the
/// ellipsoid parameterization (vech layout) and the quadratic monomial
/// enumeration here.
#[must_use]
pub fn index_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            out.push((i, j));
        }
    }
    out
}

/// Orbit-level view of the coupling, used directly by the fitting loop.
pub(crate) struct SosStructure {
    /// Degree-4 exponent vectors, length `L`.
    pub exponents: Vec<Vec<u8>>,
    /// Rows: one per biquadratic monomial, `Q^2` with `Q = dim(dim+1)/2`.
    pub rows: usize,
    /// Side of the certificate matrix, `dim^2`.
    pub m_side: usize,
    /// V2 as a dense matrix, `rows x L`; all entries small integers.
    pub v2: DMatrix<f64>,
    /// For each row, the `(r, c)` entries of `M` realizing its monomial.
    pub orbits: Vec<Vec<(usize, usize)>>,
}

impl SosStructure {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain("quartic structure needs dim >= 2"));
        }
        let exponents = quartic_exponents(dim);
        let pairs = index_pairs(dim);
        let q = pairs.len();
        let rows = q * q;
        let m_side = dim * dim;

        let mut pair_index = HashMap::new();
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            pair_index.insert((i, j), idx);
        }
        let pair_of = |i: usize, j: usize| pair_index[&(i.min(j), i.max(j))];

        // V2: second derivatives of each quartic monomial, grouped by the
        // biquadratic monomial they land on.
        let mut v2 = DMatrix::zeros(rows, exponents.len());
        for (col, alpha) in exponents.iter().enumerate() {
            for j in 0..dim {
                for k in j..dim {
                    let coeff = if j == k {
                        f64::from(alpha[j]) * f64::from(alpha[j].saturating_sub(1))
                    } else {
                        2.0 * f64::from(alpha[j]) * f64::from(alpha[k])
                    };
                    if coeff == 0.0 {
                        continue;
                    }
                    // Remaining w-exponent after d/dw_j d/dw_k is degree 2.
                    let mut beta = alpha.clone();
                    beta[j] -= 1;
                    beta[k] -= 1;
                    let mut support = Vec::with_capacity(2);
                    for (s, &e) in beta.iter().enumerate() {
                        for _ in 0..e {
                            support.push(s);
                        }
                    }
                    debug_assert_eq!(support.len(), 2);
                    let row = pair_of(support[0], support[1]) * q + pair_of(j, k);
                    v2[(row, col)] += coeff;
                }
            }
        }

        // Orbits: entry ((j,a),(k,b)) of M realizes (w_j w_k)(z_a z_b).
        let mut orbits = vec![Vec::new(); rows];
        for j in 0..dim {
            for a in 0..dim {
                for k in 0..dim {
                    for b in 0..dim {
                        let row = pair_of(j, k) * q + pair_of(a, b);
                        orbits[row].push((j * dim + a, k * dim + b));
                    }
                }
            }
        }

        Ok(Self {
            exponents,
            rows,
            m_side,
            v2,
            orbits,
        })
    }

    /// Minimum-norm symmetric `M` with `V1 vec(M) = b`: spread each
    /// monomial's coefficient evenly over its orbit.
    pub fn min_norm_certificate(&self, b: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.m_side, self.m_side);
        for (row, orbit) in self.orbits.iter().enumerate() {
            let v = b[row] / orbit.len() as f64;
            for &(r, c) in orbit {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Smallest coupling correction of `z` onto `V1 vec(M) = b`; exact by
    /// construction (per-orbit mean shift).
    pub fn project_to_coupling(&self, z: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        let mut m = z.clone();
        for (row, orbit) in self.orbits.iter().enumerate() {
            let mut sum = 0.0;
            for &(r, c) in orbit {
                sum += z[(r, c)];
            }
            let delta = (b[row] - sum) / orbit.len() as f64;
            for &(r, c) in orbit {
                m[(r, c)] += delta;
            }
        }
        m
    }

    /// Orbit sums of `vec(M)`, i.e. `V1 vec(M)`.
    pub fn orbit_sums(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows,
            self.orbits
                .iter()
                .map(|orbit| orbit.iter().map(|&(r, c)| m[(r, c)]).sum()),
        )
    }

    /// Curvature coefficients `V2 a` of the quartic with coefficients
    /// `a`.
    pub fn v2_apply(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.v2 * a
    }
}

/// The coupling matrices in explicit dense form. `vec(M)` is row-major;
/// because `M` is symmetric, products agree with the column-major
/// convention.
#[derive(Debug, Clone)]
pub struct SosMatrices {
    /// `{0,1}`-matrix, one row per biquadratic monomial, one column per
    /// entry of `M`; every column has exactly one nonzero.
    pub v1: DMatrix<f64>,
    /// Integer matrix mapping quartic coefficients to biquadratic
    /// coefficients of the curvature form.
    pub v2: DMatrix<f64>,
}

/// Builds the explicit coupling matrices for `dim` variables.
pub fn build_sos_matrices(dim: usize) -> Result<SosMatrices> {
    let s = SosStructure::new(dim)?;
    let n = s.m_side;
    let mut v1 = DMatrix::zeros(s.rows, n * n);
    for (row, orbit) in s.orbits.iter().enumerate() {
        for &(r, c) in orbit {
            v1[(row, r * n + c)] = 1.0;
        }
    }
    Ok(SosMatrices { v1, v2: s.v2 })
}
