#![allow(dead_code)]

use kform::geometry::{AffineCell, CellDomain};
use kform::polyform::PolyKForm;
use nalgebra::DMatrix;

/// Gauss-Legendre nodes and weights on [0, 1], found by Newton's method on P_q.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=q {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// k-vector coordinates of the frame: minors det A[alpha, :] for each term.
fn integrand(form: &PolyKForm, cell: &AffineCell, y: &[f64]) -> f64 {
    let x = cell.map(y);
    let a = cell.frame();
    let mut total = 0.0;
    for (beta, alpha, c) in form.terms() {
        let minor = if alpha.is_empty() { 1.0 } else { a.select_rows(alpha.entries().iter()).determinant() };
        let mono: f64 = beta.powers().iter().zip(&x).map(|(&p, xi)| xi.powi(p as i32)).product();
        total += c * mono * minor;
    }
    total
}

/// Tensor Gauss-Legendre rule on the parameter domain; simplices are reached
/// through the collapsed-coordinate map y_i = (eps - y_1 - ... - y_{i-1}) u_i.
pub fn reference_integral(form: &PolyKForm, cell: &AffineCell) -> f64 {
    let k = cell.k();
    let sign = cell.sign() as f64;
    if k == 0 {
        return sign * integrand(form, cell, &[]);
    }
    let q = form.degree().unwrap_or(0) as usize + k + 2;
    let (nodes, weights) = gauss_legendre(q);
    let mut total = 0.0;
    let mut idx = vec![0usize; k];
    loop {
        let mut y = vec![0.0; k];
        let mut w = 1.0;
        match cell.domain() {
            CellDomain::Box { bounds } => {
                for i in 0..k {
                    let len = bounds[i][1] - bounds[i][0];
                    y[i] = bounds[i][0] + len * nodes[idx[i]];
                    w *= len * weights[idx[i]];
                }
            }
            CellDomain::Simplex { eps, .. } => {
                let mut rest = *eps;
                for i in 0..k {
                    y[i] = rest * nodes[idx[i]];
                    w *= rest * weights[idx[i]];
                    rest -= y[i];
                }
            }
        }
        total += w * integrand(form, cell, &y);
        let mut d = 0;
        while d < k {
            idx[d] += 1;
            if idx[d] < q {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }
    sign * total
}

/// Smallest singular value at least `floor` times the largest.
pub fn well_conditioned(a: &DMatrix<f64>, floor: f64) -> bool {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    sv.iter().all(|s| *s >= floor * max)
}
