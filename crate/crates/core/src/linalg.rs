//! Small dense linear algebra used by the chain analysis: a partial-pivot
//! Gaussian solve and a cyclic Jacobi eigensolver for symmetric matrices.
//! Chains here have a handful of states, so plain O(n^3) kernels are exact
//! enough and keep the crate dependency-free.

// Index-juggling across rows and columns; iterator forms obscure the kernels.
#![allow(clippy::needless_range_loop)]

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot collapses (singular system).
pub(crate) fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n) && b.len() == n);

    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .expect("non-empty pivot range");
        if m[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);

        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= factor * v;
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Solves `A x = b` and polishes the result with one iterative-refinement
/// pass, which brings the residual down to a few ulps even for poorly
/// scaled chains.
pub(crate) fn solve_refined(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let mut x = solve(a, b)?;
    let n = a.len();
    let mut residual = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..n {
            acc -= a[i][j] * x[j];
        }
        residual[i] = acc;
    }
    let correction = solve(a, &residual)?;
    for i in 0..n {
        x[i] += correction[i];
    }
    Some(x)
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
/// sorted in decreasing order.
///
/// Returns `None` if the off-diagonal mass fails to vanish within the
/// sweep budget (treated by callers as a non-convergent eigensolve).
pub(crate) fn symmetric_eigenvalues(mat: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = mat.len();
    debug_assert!(mat.iter().all(|row| row.len() == n));
    if n == 1 {
        return Some(vec![mat[0][0]]);
    }

    let mut a: Vec<Vec<f64>> = mat.to_vec();
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
            eigs.sort_by(|x, y| y.total_cmp(x));
            return Some(eigs);
        }

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let app = a[p][p];
                let aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[p][k] = a[k][p];
                    a[k][q] = s * akp + c * akq;
                    a[q][k] = a[k][q];
                }
            }
        }
    }
    None
}
