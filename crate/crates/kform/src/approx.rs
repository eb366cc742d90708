//! Vandermonde matrices of currents against form bases, approximate Fekete
//! and discrete Leja extraction, interpolation, weighted least squares and
//! norm estimates for the resulting projectors.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::currents::{monomial_vandermonde, ProbeFamily};
use crate::error::{Error, Result};
use crate::geometry::{singular_values, AffineCell};
use crate::linalg::{condition_number, numerical_rank, pivoted_lu_rows, pivoted_qr_columns, thin_qr, upper_triangular_inverse};
use crate::mesh::{IntegralKMesh, MeshTag};
use crate::polyform::{FormBasis, PolyKForm};

/// Largest condition number accepted by interpolation.
pub const MAX_CONDITION: f64 = 1e14;

/// Relative singular value cutoff for numerical rank.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Probes are processed in blocks of this many rows.
const PROBE_BLOCK: usize = 8192;

/// V[i][j] = T_i(v_j).
pub fn vandermonde_matrix(cells: &[AffineCell], basis: &FormBasis) -> Result<DMatrix<f64>> {
    let vm = monomial_vandermonde(cells, basis.n, basis.k, basis.r)?;
    Ok(vm * basis.coefficient_matrix())
}

/// Vandermonde matrix with rank and condition diagnostics.
#[derive(Clone, Debug)]
pub struct Vandermonde {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub condition: f64,
}

pub fn vandermonde(cells: &[AffineCell], basis: &FormBasis) -> Result<Vandermonde> {
    let matrix = vandermonde_matrix(cells, basis)?;
    let rank = numerical_rank(&matrix, RANK_CUTOFF);
    let condition = condition_number(&matrix);
    Ok(Vandermonde { matrix, rank, condition })
}

/// Currents chosen from a mesh.
#[derive(Clone, Debug)]
pub struct Selection {
    /// positions in the mesh, in selection order
    pub indices: Vec<usize>,
    pub cells: Vec<AffineCell>,
    /// |det| of the selected square Vandermonde matrix in the given basis
    pub abs_det: f64,
}

impl Selection {
    /// The selection as a mesh-format record. `constant` keeps the parent mesh constant.
    pub fn to_mesh(&self, parent: &IntegralKMesh, tag: MeshTag) -> IntegralKMesh {
        IntegralKMesh {
            n: parent.n,
            k: parent.k,
            r: parent.r,
            constant: parent.constant,
            tag,
            weakly_admissible: parent.weakly_admissible,
            cells: self.cells.clone(),
        }
    }
}

fn check_basis_mesh(mesh: &IntegralKMesh, basis: &FormBasis) -> Result<()> {
    if mesh.n != basis.n || mesh.k != basis.k {
        return Err(Error::DimensionMismatch { expected: mesh.k, found: basis.k });
    }
    if mesh.len() < basis.len() {
        return Err(Error::RankDeficient { rank: mesh.len(), expected: basis.len() });
    }
    Ok(())
}

/// Q factor of V, orthogonalised twice. Column j of Q spans the same prefix
/// as columns 0..=j of V, so the prefix structure of the basis is kept.
fn orthogonalized(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let expected = v.ncols();
    let (q, r) = thin_qr(v);
    let rmax = r.diagonal().amax();
    let rank = r.diagonal().iter().filter(|d| d.abs() > RANK_CUTOFF * rmax).count();
    if rank < expected {
        return Err(Error::RankDeficient { rank, expected });
    }
    let (q2, _) = thin_qr(&q);
    Ok(q2)
}

fn selection(cells: &[AffineCell], v: &DMatrix<f64>, indices: Vec<usize>) -> Selection {
    let abs_det = v.select_rows(indices.iter()).determinant().abs();
    let cells = indices.iter().map(|&i| cells[i].clone()).collect();
    Selection { indices, cells, abs_det }
}

/// Approximate Fekete currents: greedy volume maximisation by column-pivoted
/// QR of the (orthogonalised) transposed Vandermonde matrix.
pub fn extract_fekete_greedy(mesh: &IntegralKMesh, basis: &FormBasis) -> Result<Selection> {
    check_basis_mesh(mesh, basis)?;
    let v = vandermonde_matrix(&mesh.cells, basis)?;
    let q = orthogonalized(&v)?;
    let (indices, _) = pivoted_qr_columns(&q.transpose(), basis.len());
    Ok(selection(&mesh.cells, &v, indices))
}

/// A swap must grow |det| by more than this factor minus one.
pub const SWAP_TOL: f64 = 1e-12;

/// Swaps per basis element before the exchange search gives up.
const MAX_SWAPS_PER_ELEMENT: usize = 50;

/// Greedy selection followed by one-for-one exchanges. While some mesh
/// current T_s and Lagrange form w_i have |T_s(w_i)| > 1, current i is
/// replaced by the T_s with the largest value; each exchange multiplies
/// |det| by that value. On return every Lagrange form has mesh seminorm at
/// most 1 + SWAP_TOL, which is what the bound L <= C N rests on.
pub fn extract_fekete(mesh: &IntegralKMesh, basis: &FormBasis) -> Result<Selection> {
    check_basis_mesh(mesh, basis)?;
    let v = vandermonde_matrix(&mesh.cells, basis)?;
    let q = orthogonalized(&v)?;
    let (mut indices, _) = pivoted_qr_columns(&q.transpose(), basis.len());
    for _ in 0..MAX_SWAPS_PER_ELEMENT * basis.len() {
        let square = q.select_rows(indices.iter());
        let Some(inv) = square.try_inverse() else { break };
        let lagrange = &q * inv;
        let (mut best, mut at) = (1.0 + SWAP_TOL, None);
        for (s, row) in lagrange.row_iter().enumerate() {
            for (i, x) in row.iter().enumerate() {
                if x.abs() > best {
                    (best, at) = (x.abs(), Some((s, i)));
                }
            }
        }
        match at {
            Some((s, i)) => indices[i] = s,
            None => break,
        }
    }
    Ok(selection(&mesh.cells, &v, indices))
}

/// Discrete Leja currents: row-pivoted LU of the Vandermonde matrix. The
/// first j selected currents are a greedy choice for the first j basis
/// elements, for every j.
pub fn extract_leja(mesh: &IntegralKMesh, basis: &FormBasis) -> Result<Selection> {
    check_basis_mesh(mesh, basis)?;
    let v = vandermonde_matrix(&mesh.cells, basis)?;
    let q = orthogonalized(&v)?;
    let (indices, _) = pivoted_lu_rows(&q, basis.len());
    Ok(selection(&mesh.cells, &v, indices))
}

/// Interpolation projector onto span(basis) for a unisolvent set of currents.
#[derive(Clone, Debug)]
pub struct InterpolationProjector {
    pub cells: Vec<AffineCell>,
    pub basis: FormBasis,
    /// column i holds the basis coefficients of the i-th Lagrange form
    pub lagrange: DMatrix<f64>,
    pub condition: f64,
}

impl InterpolationProjector {
    pub fn new(cells: &[AffineCell], basis: &FormBasis) -> Result<Self> {
        if cells.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: cells.len() });
        }
        let v = vandermonde_matrix(cells, basis)?;
        let condition = condition_number(&v);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition, limit: MAX_CONDITION });
        }
        let lagrange = v.try_inverse().ok_or(Error::RankDeficient { rank: 0, expected: basis.len() })?;
        Ok(InterpolationProjector { cells: cells.to_vec(), basis: basis.clone(), lagrange, condition })
    }

    /// Basis coefficients of the interpolant of the given samples T_i(w).
    pub fn coefficients(&self, samples: &[f64]) -> Result<DVector<f64>> {
        if samples.len() != self.cells.len() {
            return Err(Error::DimensionMismatch { expected: self.cells.len(), found: samples.len() });
        }
        Ok(&self.lagrange * DVector::from_column_slice(samples))
    }

    pub fn apply(&self, samples: &[f64]) -> Result<PolyKForm> {
        let c = self.coefficients(samples)?;
        self.basis.combine(c.as_slice())
    }

    /// Interpolant of a form, sampling it exactly on the currents.
    pub fn project(&self, form: &PolyKForm) -> Result<PolyKForm> {
        self.apply(&sample(form, &self.cells)?)
    }

    /// Lagrange forms w_i with T_j(w_i) = delta_ij.
    pub fn lagrange_forms(&self) -> Result<Vec<PolyKForm>> {
        (0..self.lagrange.ncols())
            .map(|i| self.basis.combine(self.lagrange.column(i).as_slice()))
            .collect()
    }
}

/// Exact samples T_i(w).
pub fn sample(form: &PolyKForm, cells: &[AffineCell]) -> Result<Vec<f64>> {
    let r = form.degree().unwrap_or(0);
    let v = monomial_vandermonde(cells, form.n(), form.k(), r)?;
    let c = crate::polyform::form_to_monomial_coefficients(form, r)?;
    Ok((v * c).iter().copied().collect())
}

/// Interpolate samples on a unisolvent set of currents.
pub fn interpolate(cells: &[AffineCell], samples: &[f64], basis: &FormBasis) -> Result<PolyKForm> {
    InterpolationProjector::new(cells, basis)?.apply(samples)
}

/// Weighted discrete least squares projector
/// P w = sum_h (sum_i w_i T_i(w) T_i(eta_h)) eta_h, with eta orthonormal for
/// the weighted discrete inner product on the currents.
#[derive(Clone, Debug)]
pub struct LeastSquaresProjector {
    pub cells: Vec<AffineCell>,
    pub weights: Vec<f64>,
    pub basis: FormBasis,
    /// column h holds the basis coefficients of eta_h
    pub ortho: DMatrix<f64>,
    /// T_i(eta_h)
    pub eta_values: DMatrix<f64>,
}

impl LeastSquaresProjector {
    pub fn new(cells: &[AffineCell], weights: &[f64], basis: &FormBasis) -> Result<Self> {
        if weights.len() != cells.len() {
            return Err(Error::DimensionMismatch { expected: cells.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("least squares weights must be positive".into()));
        }
        if cells.len() < basis.len() {
            return Err(Error::RankDeficient { rank: cells.len(), expected: basis.len() });
        }
        let v = vandermonde_matrix(cells, basis)?;
        let mut sv = v.clone();
        for (i, w) in weights.iter().enumerate() {
            sv.row_mut(i).scale_mut(w.sqrt());
        }
        let (_, r) = thin_qr(&sv);
        let rmax = r.diagonal().amax();
        let rank = r.diagonal().iter().filter(|d| d.abs() > RANK_CUTOFF * rmax).count();
        if rank < basis.len() {
            return Err(Error::RankDeficient { rank, expected: basis.len() });
        }
        let mut ortho = upper_triangular_inverse(&r).ok_or(Error::RankDeficient { rank, expected: basis.len() })?;
        // one refinement pass restores orthonormality lost to conditioning
        let mut eta = &sv * &ortho;
        let (_, r2) = thin_qr(&eta);
        ortho = &ortho * upper_triangular_inverse(&r2).ok_or(Error::RankDeficient { rank, expected: basis.len() })?;
        eta = &v * &ortho;
        Ok(LeastSquaresProjector { cells: cells.to_vec(), weights: weights.to_vec(), basis: basis.clone(), ortho, eta_values: eta })
    }

    pub fn coefficients(&self, samples: &[f64]) -> Result<DVector<f64>> {
        if samples.len() != self.cells.len() {
            return Err(Error::DimensionMismatch { expected: self.cells.len(), found: samples.len() });
        }
        let ws = DVector::from_iterator(samples.len(), samples.iter().zip(&self.weights).map(|(s, w)| s * w));
        let eta_coeffs = self.eta_values.transpose() * ws;
        Ok(&self.ortho * eta_coeffs)
    }

    pub fn apply(&self, samples: &[f64]) -> Result<PolyKForm> {
        let c = self.coefficients(samples)?;
        self.basis.combine(c.as_slice())
    }

    pub fn project(&self, form: &PolyKForm) -> Result<PolyKForm> {
        self.apply(&sample(form, &self.cells)?)
    }

    /// Orthonormal forms eta_h.
    pub fn orthonormal_forms(&self) -> Result<Vec<PolyKForm>> {
        (0..self.ortho.ncols()).map(|h| self.basis.combine(self.ortho.column(h).as_slice())).collect()
    }
}

/// Probe estimate of an operator norm, with the maximum at each probe scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormLowerBound {
    pub value: f64,
    /// (scale, max over probes of that scale)
    pub per_scale: Vec<(f64, f64)>,
    pub probes: usize,
}

fn blocks(len: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..len).step_by(PROBE_BLOCK).map(move |s| s..(s + PROBE_BLOCK).min(len))
}

fn per_scale_max(probes: &ProbeFamily, values: &[f64]) -> NormLowerBound {
    let scales = if probes.k == 0 { vec![0.0] } else { probes.config.scales.clone() };
    let mut per = vec![0.0f64; scales.len()];
    for (v, &s) in values.iter().zip(&probes.scale_index) {
        per[s] = per[s].max(*v);
    }
    NormLowerBound {
        value: per.iter().copied().fold(0.0, f64::max),
        per_scale: scales.into_iter().zip(per).collect(),
        probes: probes.len(),
    }
}

fn check_probes(basis: &FormBasis, probes: &ProbeFamily) -> Result<()> {
    if probes.n != basis.n || probes.k != basis.k {
        return Err(Error::DimensionMismatch { expected: basis.k, found: probes.k });
    }
    Ok(())
}

/// Lower estimate of the Lebesgue constant sup_T sum_i |T(w_i)| over the probes.
pub fn lebesgue_constant(proj: &InterpolationProjector, probes: &ProbeFamily) -> Result<NormLowerBound> {
    check_probes(&proj.basis, probes)?;
    let mut values = Vec::with_capacity(probes.len());
    for range in blocks(probes.len()) {
        let vp = vandermonde_matrix(&probes.cells[range], &proj.basis)?;
        let l = vp * &proj.lagrange;
        values.extend(l.row_iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()));
    }
    Ok(per_scale_max(probes, &values))
}

/// Probe estimates of the least squares constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeastSquaresConstants {
    /// sup_T sum_i w_i |sum_h T_i(eta_h) T(eta_h)|, a lower estimate of ||P||
    pub m: NormLowerBound,
    /// sup_T (sum_h T(eta_h)^2)^(1/2)
    pub m2: f64,
    /// m2 * (sum_i w_i)^(1/2), an upper bound for m over the same probes
    pub m2_bound: f64,
    /// largest change of the per-probe sums under a random orthogonal change of the eta basis
    pub rotation_delta: f64,
}

pub fn constant_m(proj: &LeastSquaresProjector, probes: &ProbeFamily, seed: u64) -> Result<LeastSquaresConstants> {
    check_probes(&proj.basis, probes)?;
    let n_basis = proj.basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = DMatrix::from_fn(n_basis, n_basis, |_, _| StandardNormal.sample(&mut rng)).qr().q();
    let em_rot = &proj.eta_values * &rot;
    let w = &proj.weights;
    let mut values = Vec::with_capacity(probes.len());
    let mut m2 = 0.0f64;
    let mut rotation_delta = 0.0f64;
    for (bi, range) in blocks(probes.len()).enumerate() {
        let kp = vandermonde_matrix(&probes.cells[range], &proj.basis)? * &proj.ortho;
        for row in kp.row_iter() {
            m2 = m2.max(row.norm());
        }
        let kernel = &proj.eta_values * kp.transpose();
        let sums: Vec<f64> = kernel
            .column_iter()
            .map(|col| col.iter().zip(w).map(|(g, wi)| wi * g.abs()).sum())
            .collect();
        if bi == 0 {
            let kernel_rot = &em_rot * (&kp * &rot).transpose();
            for (p, s) in sums.iter().enumerate() {
                let sr: f64 = kernel_rot.column(p).iter().zip(w).map(|(g, wi)| wi * g.abs()).sum();
                rotation_delta = rotation_delta.max((sr - s).abs() / s.max(1.0));
            }
        }
        values.extend(sums);
    }
    let wsum: f64 = w.iter().sum();
    Ok(LeastSquaresConstants { m: per_scale_max(probes, &values), m2, m2_bound: m2 * wsum.sqrt(), rotation_delta })
}

/// Effect of an affine map on a mesh constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportBound {
    /// (sigma_1 ... sigma_k) / (sigma_{n-k+1} ... sigma_n)
    pub factor: f64,
    pub constant: f64,
    /// sigma_1 / sigma_n
    pub chi: f64,
    /// min(chi^k, chi^(n-k)), an upper bound for the factor
    pub chi_bound: f64,
}

pub fn affine_transport_bound(constant: f64, a: &DMatrix<f64>, k: usize) -> Result<TransportBound> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let sv = singular_values(a);
    if sv[n - 1] <= 0.0 {
        return Err(Error::SingularMap);
    }
    let factor = crate::mesh::affine_constant_factor(a, k);
    let chi = sv[0] / sv[n - 1];
    let chi_bound = chi.powi(k as i32).min(chi.powi((n - k) as i32));
    Ok(TransportBound { factor, constant: constant * factor, chi, chi_bound })
}

/// Worst-case error factors for weighted least squares on a mesh with constant C.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FittingBounds {
    /// 1 + C sqrt(sum w / min w) N
    pub standard: f64,
    /// 1 + C (1 + sqrt(sum w / min w))
    pub sharp: f64,
}

pub fn fitting_error_report(constant: f64, weights: &[f64], dim: usize) -> Result<FittingBounds> {
    if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParameter("weights must be positive".into()));
    }
    let sum: f64 = weights.iter().sum();
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let q = (sum / min).sqrt();
    Ok(FittingBounds { standard: 1.0 + constant * q * dim as f64, sharp: 1.0 + constant * (1.0 + q) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::baran_mesh_cube;
    use crate::polyform::monomial_basis;
    use proptest::prelude::*;

    #[test]
    fn fekete_is_unisolvent_and_lagrange_is_dual() {
        let mesh = baran_mesh_cube(2, 1, 2, 3).unwrap();
        let basis = monomial_basis(2, 1, 2).unwrap();
        let sel = extract_fekete(&mesh, &basis).unwrap();
        assert_eq!(sel.indices.len(), basis.len());
        let proj = InterpolationProjector::new(&sel.cells, &basis).unwrap();
        for (i, w) in proj.lagrange_forms().unwrap().iter().enumerate() {
            let s = sample(w, &sel.cells).unwrap();
            for (j, v) in s.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exchange_bounds_lagrange_forms_on_mesh() {
        let mesh = baran_mesh_cube(2, 1, 4, 6).unwrap();
        let basis = monomial_basis(2, 1, 4).unwrap();
        let greedy = extract_fekete_greedy(&mesh, &basis).unwrap();
        let sel = extract_fekete(&mesh, &basis).unwrap();
        assert!(sel.abs_det >= greedy.abs_det);
        let proj = InterpolationProjector::new(&sel.cells, &basis).unwrap();
        for w in proj.lagrange_forms().unwrap() {
            assert!(mesh.seminorm(&w).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn whitney_forms_against_face_averages() {
        use crate::polyform::whitney_basis;
        let verts = vec![vec![0.1, 0.2, 0.0], vec![1.3, -0.1, 0.2], vec![0.4, 1.1, -0.3], vec![0.2, 0.3, 0.9]];
        for k in 0..=3 {
            let basis = whitney_basis(&verts, k).unwrap();
            let cells: Vec<AffineCell> = crate::comb::combinations(4, k + 1)
                .iter()
                .map(|f| {
                    let pts: Vec<Vec<f64>> = f.iter().map(|&v| verts[v].clone()).collect();
                    if k == 0 { AffineCell::point(pts[0].clone()) } else { AffineCell::from_vertices(&pts).unwrap() }
                })
                .collect();
            let v = vandermonde_matrix(&cells, &basis).unwrap();
            assert!((v - DMatrix::identity(cells.len(), cells.len())).amax() < 1e-12);
        }
    }

    #[test]
    fn too_few_currents_is_rank_deficient() {
        let mesh = baran_mesh_cube(1, 0, 1, 2).unwrap();
        let basis = monomial_basis(1, 0, 3).unwrap();
        assert!(matches!(extract_fekete(&mesh, &basis), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn fitting_factors_equal_weights() {
        let f = fitting_error_report(2.0, &[1.0; 16], 6).unwrap();
        assert!((f.sharp - (1.0 + 2.0 * 5.0)).abs() < 1e-12);
        assert!((f.standard - (1.0 + 2.0 * 4.0 * 6.0)).abs() < 1e-12);
    }

    #[test]
    fn transport_example() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 2.0, 1.0]));
        let t = affine_transport_bound(1.5, &a, 2).unwrap();
        assert!((t.factor - 4.0).abs() < 1e-12 && (t.chi_bound - 4.0).abs() < 1e-12);
        assert!((t.constant - 6.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn leja_prefix_property(r in 1u32..4, seed in 0u64..1000) {
            // the first j Leja currents coincide with those extracted for the
            // basis truncated to its first j elements
            let mesh = baran_mesh_cube(2, 1, r, r as usize + 2).unwrap();
            let mut basis = monomial_basis(2, 1, r).unwrap();
            let full = extract_leja(&mesh, &basis).unwrap();
            let j = 1 + (seed as usize) % basis.len();
            basis.elements.truncate(j);
            let part = extract_leja(&mesh, &basis).unwrap();
            prop_assert_eq!(&full.indices[..j], &part.indices[..]);
        }

        #[test]
        fn fekete_invariant_under_row_permutation(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let mut mesh = baran_mesh_cube(2, 1, 2, 4).unwrap();
            let basis = monomial_basis(2, 1, 2).unwrap();
            let base = extract_fekete_greedy(&mesh, &basis).unwrap();
            let mut order: Vec<usize> = (0..mesh.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            mesh.cells = order.iter().map(|&i| mesh.cells[i].clone()).collect();
            let perm = extract_fekete_greedy(&mesh, &basis).unwrap();
            prop_assert!((perm.abs_det - base.abs_det).abs() <= 1e-9 * base.abs_det);
        }
    }
}
