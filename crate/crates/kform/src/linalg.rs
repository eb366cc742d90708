//! Pivoted factorizations used by the greedy point-selection algorithms.
//! Ties in pivot choice go to the lowest index.

use nalgebra::DMatrix;

/// Householder QR with column pivoting, stopped after `steps` pivots.
/// Returns the chosen column indices in order and the diagonal of R.
pub fn pivoted_qr_columns(m: &DMatrix<f64>, steps: usize) -> (Vec<usize>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let steps = steps.min(rows).min(cols);
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut diag = Vec::with_capacity(steps);
    for j in 0..steps {
        // residual column norms, recomputed rather than downdated
        let mut best = j;
        let mut best_norm = -1.0;
        for c in j..cols {
            let norm = a.view((j, c), (rows - j, 1)).norm_squared();
            if norm > best_norm {
                best_norm = norm;
                best = c;
            }
        }
        if best != j {
            a.swap_columns(j, best);
            perm.swap(j, best);
        }
        let mut v = a.view((j, j), (rows - j, 1)).clone_owned();
        let alpha = v.norm();
        if alpha == 0.0 {
            diag.push(0.0);
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm2 = v.norm_squared();
        let mut tail = a.view_mut((j, j), (rows - j, cols - j));
        let proj = v.transpose() * &tail;
        tail -= &v * proj * (2.0 / vnorm2);
        diag.push(a[(j, j)]);
    }
    perm.truncate(steps);
    (perm, diag)
}

/// Gaussian elimination with row pivoting on the first `steps` columns.
/// Returns the chosen row indices in order and the diagonal of U.
pub fn pivoted_lu_rows(m: &DMatrix<f64>, steps: usize) -> (Vec<usize>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let steps = steps.min(rows).min(cols);
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..rows).collect();
    let mut diag = Vec::with_capacity(steps);
    for j in 0..steps {
        let mut best = j;
        let mut best_abs = -1.0;
        for r in j..rows {
            let v = a[(r, j)].abs();
            if v > best_abs {
                best_abs = v;
                best = r;
            }
        }
        if best != j {
            a.swap_rows(j, best);
            perm.swap(j, best);
        }
        let pivot = a[(j, j)];
        diag.push(pivot);
        if pivot == 0.0 {
            continue;
        }
        for r in j + 1..rows {
            let f = a[(r, j)] / pivot;
            if f != 0.0 {
                for c in j..cols {
                    let u = a[(j, c)];
                    a[(r, c)] -= f * u;
                }
            }
        }
    }
    perm.truncate(steps);
    (perm, diag)
}

/// Thin QR factor pair (Q with orthonormal columns, upper triangular R).
pub fn thin_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// 2-norm condition number from the singular values; infinite if singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

/// Numerical rank with a relative singular value cutoff.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Inverse of an upper triangular matrix by back substitution.
pub fn upper_triangular_inverse(r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = r.nrows();
    let mut inv = DMatrix::identity(n, n);
    if r.solve_upper_triangular_mut(&mut inv) {
        Some(inv)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_pivot_picks_largest_column_first() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 3.0, 0.0, 2.0, 0.0]);
        let (p, d) = pivoted_qr_columns(&m, 2);
        assert_eq!(p, vec![2, 1]);
        assert!((d[0].abs() - 3.0).abs() < 1e-15 && (d[1].abs() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn qr_pivot_diagonal_product_is_volume() {
        let m = DMatrix::from_fn(3, 7, |i, j| ((i * 7 + j) as f64 * 0.37).sin());
        let (p, d) = pivoted_qr_columns(&m, 3);
        let sel = m.select_columns(p.iter());
        let det: f64 = d.iter().product();
        assert!((det.abs() - sel.determinant().abs()).abs() < 1e-12);
    }

    #[test]
    fn lu_pivot_ties_go_to_lowest_index() {
        let m = DMatrix::from_row_slice(3, 1, &[1.0, -1.0, 1.0]);
        assert_eq!(pivoted_lu_rows(&m, 1).0, vec![0]);
    }

    #[test]
    fn lu_pivot_diagonal_product_is_determinant() {
        let m = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.91).cos());
        let (p, d) = pivoted_lu_rows(&m, 3);
        let sel = m.select_rows(p.iter());
        let det: f64 = d.iter().product();
        assert!((det.abs() - sel.determinant().abs()).abs() < 1e-12);
    }
}
