//! Dense two-phase simplex for small equality-form linear programs:
//! `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
//!
//! Sized for membership-style queries with a handful of rows and up to
//! a few thousand columns. Bland's rule guarantees termination.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug)]
pub(crate) enum LpOutcome {
    Optimal { x: DVector<f64> },
    Infeasible,
}

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

/// One Gauss pivot on `(row, col)`, updating the cost row and basis.
fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let inv = 1.0 / t[(row, col)];
    let width = t.ncols();
    for j in 0..width {
        t[(row, j)] *= inv;
    }
    t[(row, col)] = 1.0;
    for i in 0..t.nrows() {
        if i == row {
            continue;
        }
        let factor = t[(i, col)];
        if factor == 0.0 {
            continue;
        }
        for j in 0..width {
            t[(i, j)] -= factor * t[(row, j)];
        }
        t[(i, col)] = 0.0;
    }
    basis[row] = col;
}

/// Iterates until no original column prices out negative. The first
/// negative column enters (smallest index, Bland-compatible); among
/// rows tied at the minimum ratio the largest pivot entry leaves, which
/// keeps row amplification in check on near-parallel generator sets.
/// If the objective stalls across a long degenerate stretch, leaving
/// ties revert to the smallest basis index, i.e. full Bland's rule, so
/// termination stays guaranteed. `n` bounds the entering candidates
/// (artificials never re-enter).
fn run_simplex(t: &mut DMatrix<f64>, basis: &mut [usize], n: usize) -> Result<()> {
    let m = t.nrows() - 1;
    let rhs = t.ncols() - 1;
    let max_iters = 200 * (n + m + 10);
    let stall_window = 4 * (n + m) + 20;
    let mut stalled = 0usize;
    let mut last_obj = -t[(m, rhs)];
    for _ in 0..max_iters {
        let Some(entering) = (0..n).find(|&j| t[(m, j)] < -COST_TOL) else {
            return Ok(());
        };

        // Drifted basics can sit a hair below zero; clamping keeps their
        // ratios degenerate instead of negative.
        let mut best = f64::INFINITY;
        for i in 0..m {
            let a = t[(i, entering)];
            if a > PIVOT_TOL {
                best = best.min(t[(i, rhs)].max(0.0) / a);
            }
        }
        if !best.is_finite() {
            return Err(Error::numerical("linear program is unbounded"));
        }
        let cutoff = best + 1e-9 * (1.0 + best.abs());
        let bland = stalled >= stall_window;
        let mut leaving: Option<usize> = None;
        for i in 0..m {
            let a = t[(i, entering)];
            if a > PIVOT_TOL && t[(i, rhs)].max(0.0) / a <= cutoff {
                let wins = match leaving {
                    None => true,
                    Some(l) if bland => basis[i] < basis[l],
                    Some(l) => a > t[(l, entering)],
                };
                if wins {
                    leaving = Some(i);
                }
            }
        }
        let row = leaving.expect("finite min ratio implies a candidate row");
        pivot(t, basis, row, entering);

        let obj = -t[(m, rhs)];
        if obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
            stalled = 0;
        } else {
            stalled += 1;
        }
        last_obj = obj;
    }
    Err(Error::numerical("simplex iteration limit exceeded"))
}

/// Solves `min cᵀx : Ax = b, x ≥ 0`. Rows are rescaled to unit size
/// internally, so tolerances behave across wrench magnitudes.
pub(crate) fn solve_equality_lp(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    cost: &DVector<f64>,
) -> Result<LpOutcome> {
    let m = a.nrows();
    let n = a.ncols();
    if b.len() != m || cost.len() != n {
        return Err(Error::dimension("linear program shape mismatch"));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("linear program has non-finite entries"));
    }

    // Tableau layout: n original columns, m artificials, rhs.
    let rhs = n + m;
    let mut t = DMatrix::zeros(m + 1, rhs + 1);
    for i in 0..m {
        let mut scale: f64 = b[i].abs();
        for j in 0..n {
            scale = scale.max(a[(i, j)].abs());
        }
        if scale < 1e-300 {
            scale = 1.0;
        }
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)] / scale;
        }
        t[(i, n + i)] = 1.0;
        t[(i, rhs)] = sign * b[i] / scale;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: price out the artificial basis, minimize its sum.
    for j in 0..n {
        let mut r = 0.0;
        for i in 0..m {
            r -= t[(i, j)];
        }
        t[(m, j)] = r;
    }
    let mut obj = 0.0;
    for i in 0..m {
        obj += t[(i, rhs)];
    }
    t[(m, rhs)] = -obj;
    run_simplex(&mut t, &mut basis, n)?;
    if -t[(m, rhs)] > FEAS_TOL {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive leftover artificials out of the basis on the largest entry
    // available; pivoting on residue-level entries amplifies the whole
    // row by its reciprocal, so below the threshold the row is treated
    // as redundant and the artificial stays basic at zero.
    for i in 0..m {
        if basis[i] >= n {
            let j = (0..n).max_by(|&p, &q| t[(i, p)].abs().total_cmp(&t[(i, q)].abs()));
            if let Some(j) = j.filter(|&j| t[(i, j)].abs() > 1e-7) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // Phase 2: real objective, artificial columns barred from entry.
    for j in 0..n {
        let mut r = cost[j];
        for i in 0..m {
            if basis[i] < n {
                r -= cost[basis[i]] * t[(i, j)];
            }
        }
        t[(m, j)] = r;
    }
    let mut obj = 0.0;
    for i in 0..m {
        if basis[i] < n {
            obj += cost[basis[i]] * t[(i, rhs)];
        }
    }
    t[(m, rhs)] = -obj;
    run_simplex(&mut t, &mut basis, n)?;

    let mut x = DVector::zeros(n);
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[(i, rhs)].max(0.0);
        }
    }
    Ok(LpOutcome::Optimal { x })
}
