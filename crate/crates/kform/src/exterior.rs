//! Exterior algebra on R^n: multi-indices, k-vectors, k-covectors, the
//! pairing between them, orientations of affine frames and the comass norm.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::comb::{binomial, combination_rank, combinations};
use crate::error::{Error, Result};

/// Strictly increasing list of coordinate indices, stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    /// Builds from 0-based entries, which must be strictly increasing and below `n`.
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        let ok = entries.windows(2).all(|w| w[0] < w[1]) && entries.iter().all(|&e| e < n);
        if !ok {
            return Err(Error::BadMultiIndex(format!("{entries:?} (0-based, n = {n})")));
        }
        Ok(MultiIndex(entries))
    }

    /// Builds from 1-based entries as used in JSON.
    pub fn from_one_based(entries: &[usize], n: usize) -> Result<Self> {
        if entries.contains(&0) {
            return Err(Error::BadMultiIndex(format!("{entries:?} (1-based, n = {n})")));
        }
        Self::new(entries.iter().map(|e| e - 1).collect(), n)
            .map_err(|_| Error::BadMultiIndex(format!("{entries:?} (1-based, n = {n})")))
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|e| e + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position of this index in the lexicographic enumeration of `all(n, k)`.
    pub fn rank(&self, n: usize) -> usize {
        combination_rank(&self.0, n)
    }

    /// All k-multi-indices over n coordinates, lexicographically ordered.
    pub fn all(n: usize, k: usize) -> Vec<MultiIndex> {
        combinations(n, k).into_iter().map(MultiIndex).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Removes the entry at position `pos`.
    pub fn without_position(&self, pos: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.remove(pos);
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|i| format!("dx{}", i + 1)).collect();
        write!(f, "{}", parts.join("^"))
    }
}

/// Sign of the permutation sorting the concatenation `a ++ b`, or `None`
/// when the two index sets overlap. Returns the merged index as well.
pub fn merge_sign(a: &MultiIndex, b: &MultiIndex) -> Option<(f64, MultiIndex)> {
    let (a, b) = (&a.0, &b.0);
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            merged.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            merged.push(b[j]);
            // every remaining entry of `a` is larger and sits in front of b[j]
            inversions += a.len() - i;
            j += 1;
        } else {
            return None;
        }
    }
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, MultiIndex(merged)))
}

macro_rules! graded_element {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            n: usize,
            k: usize,
            coeffs: Vec<f64>,
        }

        impl $name {
            pub fn zeros(n: usize, k: usize) -> Result<Self> {
                if k > n {
                    return Err(Error::OrderOutOfRange { k, n });
                }
                Ok(Self { n, k, coeffs: vec![0.0; binomial(n, k)] })
            }

            /// Coefficients in the lexicographic basis of `MultiIndex::all(n, k)`.
            pub fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
                if k > n {
                    return Err(Error::OrderOutOfRange { k, n });
                }
                if coeffs.len() != binomial(n, k) {
                    return Err(Error::DimensionMismatch {
                        expected: binomial(n, k),
                        found: coeffs.len(),
                    });
                }
                Ok(Self { n, k, coeffs })
            }

            pub fn basis(n: usize, alpha: &MultiIndex) -> Result<Self> {
                let mut out = Self::zeros(n, alpha.len())?;
                out.coeffs[alpha.rank(n)] = 1.0;
                Ok(out)
            }

            pub fn n(&self) -> usize {
                self.n
            }

            pub fn k(&self) -> usize {
                self.k
            }

            pub fn coeffs(&self) -> &[f64] {
                &self.coeffs
            }

            pub fn coeffs_mut(&mut self) -> &mut [f64] {
                &mut self.coeffs
            }

            pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
                self.coeffs[alpha.rank(self.n)]
            }

            /// Euclidean norm of the coefficient vector.
            pub fn norm(&self) -> f64 {
                self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
            }

            pub fn scale(&self, s: f64) -> Self {
                Self { n: self.n, k: self.k, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.check_same(other)?;
                let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
                Ok(Self { n: self.n, k: self.k, coeffs })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.add(&other.scale(-1.0))
            }

            /// Exterior product. The result has degree `self.k + other.k`.
            pub fn wedge(&self, other: &Self) -> Result<Self> {
                if self.n != other.n {
                    return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
                }
                let mut out = Self::zeros(self.n, self.k + other.k)?;
                let left = MultiIndex::all(self.n, self.k);
                let right = MultiIndex::all(self.n, other.k);
                for (a, ca) in left.iter().zip(&self.coeffs) {
                    if *ca == 0.0 {
                        continue;
                    }
                    for (b, cb) in right.iter().zip(&other.coeffs) {
                        if *cb == 0.0 {
                            continue;
                        }
                        if let Some((sign, m)) = merge_sign(a, b) {
                            out.coeffs[m.rank(self.n)] += sign * ca * cb;
                        }
                    }
                }
                Ok(out)
            }

            fn check_same(&self, other: &Self) -> Result<()> {
                if self.n != other.n {
                    return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
                }
                if self.k != other.k {
                    return Err(Error::DimensionMismatch { expected: self.k, found: other.k });
                }
                Ok(())
            }
        }
    };
}

graded_element!(KVector, "Element of the k-th exterior power of R^n.");
graded_element!(KCovector, "Element of the k-th exterior power of the dual of R^n.");

impl KVector {
    /// Wedge of the columns of an n x k matrix, i.e. the vector of its k x k minors.
    pub fn from_columns(a: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = a.shape();
        let mut out = Self::zeros(n, k)?;
        for (slot, alpha) in MultiIndex::all(n, k).iter().enumerate() {
            out.coeffs[slot] = row_minor(a, alpha.entries());
        }
        Ok(out)
    }
}

/// Duality pairing: the bases dx_alpha and e_beta pair to the Kronecker delta.
pub fn pair(w: &KCovector, v: &KVector) -> Result<f64> {
    if w.n != v.n || w.k != v.k {
        return Err(Error::DimensionMismatch { expected: w.k, found: v.k });
    }
    Ok(w.coeffs.iter().zip(&v.coeffs).map(|(a, b)| a * b).sum())
}

/// Determinant of the square submatrix of `a` built from the listed rows.
pub(crate) fn row_minor(a: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let k = rows.len();
    match k {
        0 => 1.0,
        1 => a[(rows[0], 0)],
        2 => a[(rows[0], 0)] * a[(rows[1], 1)] - a[(rows[0], 1)] * a[(rows[1], 0)],
        3 => {
            let m = |i: usize, j: usize| a[(rows[i], j)];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        _ => a.select_rows(rows.iter()).determinant(),
    }
}

/// Relative rank tolerance used for frames and affine maps.
pub const RANK_TOL: f64 = 1e-10;

/// Ratio of extreme singular values, 1 for an empty matrix.
pub(crate) fn singular_ratio(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Unit simple k-vector spanned by the columns of the n x k matrix `a`.
/// Its coefficients are the minors of `a` divided by sqrt(det(a^T a)).
pub fn orientation_from_matrix(a: &DMatrix<f64>) -> Result<KVector> {
    let ratio = singular_ratio(a);
    if ratio < RANK_TOL {
        return Err(Error::DegenerateCell { ratio });
    }
    let v = KVector::from_columns(a)?;
    let norm = v.norm();
    Ok(v.scale(1.0 / norm))
}

/// Comass value together with whether it is exact or a lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comass {
    pub value: f64,
    pub exact: bool,
}

/// Default number of random starting frames for the comass ascent.
pub const COMASS_STARTS: usize = 64;

/// Comass of a k-covector: the supremum of its pairing with unit simple k-vectors.
///
/// For k in {0, 1, n-1, n} every k-vector is simple and this is the Euclidean
/// norm. Otherwise it is the best value found by a multistart ascent over
/// orthonormal k-frames, which is a lower bound.
pub fn comass(w: &KCovector) -> Comass {
    comass_with(w, COMASS_STARTS, 0x5eed)
}

pub fn comass_with(w: &KCovector, starts: usize, seed: u64) -> Comass {
    let (n, k) = (w.n, w.k);
    if k <= 1 || k + 1 >= n {
        return Comass { value: w.norm(), exact: true };
    }
    // coordinate frames are always tried, so the bound beats max |w_alpha|
    let mut best = w.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..starts {
        let g = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
        let mut frame = g.qr().q();
        best = best.max(frame_ascent(w, &mut frame));
    }
    Comass { value: best, exact: false }
}

fn frame_value(w: &KCovector, frame: &DMatrix<f64>) -> f64 {
    MultiIndex::all(w.n, w.k)
        .iter()
        .zip(&w.coeffs)
        .map(|(alpha, c)| c * row_minor(frame, alpha.entries()))
        .sum()
}

/// Coordinate-wise ascent: with all columns but one fixed the pairing is linear
/// in the free column, so the optimal unit column is the normalised gradient
/// projected off the span of the others.
fn frame_ascent(w: &KCovector, frame: &mut DMatrix<f64>) -> f64 {
    let (n, k) = frame.shape();
    let mut value = frame_value(w, frame).abs();
    for _ in 0..500 {
        let before = value;
        for i in 0..k {
            let mut grad = DVector::zeros(n);
            for j in 0..n {
                let mut probe = frame.clone();
                probe.column_mut(i).fill(0.0);
                probe[(j, i)] = 1.0;
                grad[j] = frame_value(w, &probe);
            }
            for c in 0..k {
                if c != i {
                    let col = frame.column(c).into_owned();
                    let d = col.dot(&grad);
                    grad -= col * d;
                }
            }
            let norm = grad.norm();
            if norm == 0.0 {
                continue;
            }
            frame.set_column(i, &(grad / norm));
            value = norm;
        }
        if value - before <= 1e-15 * value.max(1.0) {
            break;
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(v: &[usize], n: usize) -> MultiIndex {
        MultiIndex::from_one_based(v, n).unwrap()
    }

    #[test]
    fn multi_index_rejects_unsorted() {
        assert!(MultiIndex::from_one_based(&[2, 1], 3).is_err());
        assert!(MultiIndex::from_one_based(&[1, 4], 3).is_err());
        assert!(MultiIndex::from_one_based(&[0], 3).is_err());
    }

    #[test]
    fn wedge_of_basis_vectors() {
        let e1 = KCovector::basis(3, &idx(&[1], 3)).unwrap();
        let e2 = KCovector::basis(3, &idx(&[2], 3)).unwrap();
        let w12 = e1.wedge(&e2).unwrap();
        let w21 = e2.wedge(&e1).unwrap();
        assert_eq!(w12.coeff(&idx(&[1, 2], 3)), 1.0);
        assert_eq!(w21.coeff(&idx(&[1, 2], 3)), -1.0);
        assert_eq!(e1.wedge(&e1).unwrap().norm(), 0.0);
    }

    #[test]
    fn orientation_of_coordinate_frame() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let o = orientation_from_matrix(&a).unwrap();
        assert_eq!(o.coeff(&idx(&[1, 3], 3)), 1.0);
        assert!((o.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orientation_rejects_rank_deficient() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(orientation_from_matrix(&a), Err(Error::DegenerateCell { .. })));
    }

    #[test]
    fn comass_of_symplectic_form_is_one() {
        let mut w = KCovector::zeros(4, 2).unwrap();
        w.coeffs_mut()[idx(&[1, 2], 4).rank(4)] = 1.0;
        w.coeffs_mut()[idx(&[3, 4], 4).rank(4)] = 1.0;
        let c = comass(&w);
        assert!(!c.exact);
        assert!((c.value - 1.0).abs() < 1e-3, "{}", c.value);
        assert!(c.value <= 1.0 + 1e-12);
    }

    #[test]
    fn comass_exact_in_low_degree() {
        let w = KCovector::from_coeffs(3, 1, vec![3.0, 0.0, 4.0]).unwrap();
        assert_eq!(comass(&w), Comass { value: 5.0, exact: true });
    }

    fn covector(n: usize, k: usize) -> impl Strategy<Value = KCovector> {
        prop::collection::vec(-2.0f64..2.0, binomial(n, k))
            .prop_map(move |c| KCovector::from_coeffs(n, k, c).unwrap())
    }

    proptest! {
        #[test]
        fn wedge_is_graded_antisymmetric(a in covector(4, 1), b in covector(4, 2)) {
            let ab = a.wedge(&b).unwrap();
            let ba = b.wedge(&a).unwrap();
            // (-1)^{1*2} = +1
            for (x, y) in ab.coeffs().iter().zip(ba.coeffs()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let c = a.wedge(&a).unwrap();
            prop_assert!(c.norm() < 1e-12);
        }

        #[test]
        fn orientation_changes_by_sign_of_det(
            a in prop::collection::vec(-1.0f64..1.0, 8),
            q in prop::collection::vec(-1.0f64..1.0, 4),
        ) {
            let a = DMatrix::from_column_slice(4, 2, &a);
            let q = DMatrix::from_column_slice(2, 2, &q);
            prop_assume!(singular_ratio(&a) > 1e-3 && q.determinant().abs() > 1e-3);
            let o = orientation_from_matrix(&a).unwrap();
            let oq = orientation_from_matrix(&(&a * &q)).unwrap();
            let s = q.determinant().signum();
            for (x, y) in o.coeffs().iter().zip(oq.coeffs()) {
                prop_assert!((s * x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn comass_bounded_by_euclidean_norm(w in covector(4, 2)) {
            let c = comass_with(&w, 8, 1);
            let max_coeff = w.coeffs().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(c.value <= w.norm() * (1.0 + 1e-12));
            prop_assert!(c.value >= max_coeff - 1e-12);
        }
    }
}
