//! Integration and averaging currents on affine cells, exact evaluation on
//! polynomial forms, sup-norm estimates and probe families of small cells.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::binomial;
use crate::error::{Error, Result};
use crate::exterior::{comass, MultiIndex};
use crate::geometry::{AffineCell, ConvexBody};
use crate::polyform::{monomial_dimension, monomials, Exponent, PolyKForm};

/// Precomputed index tables for averaging all monomials x^beta, |beta| <= r,
/// over k-cells in R^n.
#[derive(Clone, Debug)]
pub struct MomentPlan {
    n: usize,
    k: usize,
    r: u32,
    /// for each beta after the first: (index of beta - e_i, i)
    pred: Vec<(usize, usize)>,
    gammas: Vec<Exponent>,
    /// shift[g][j] = index of gamma_g + e_j, if its degree is <= r
    shift: Vec<Vec<Option<usize>>>,
}

impl MomentPlan {
    pub fn new(n: usize, k: usize, r: u32) -> Self {
        let betas = monomials(n, r);
        let pred = betas
            .iter()
            .skip(1)
            .map(|b| {
                let i = b.powers().iter().position(|&p| p > 0).expect("nonzero exponent");
                let mut p = b.powers().to_vec();
                p[i] -= 1;
                (Exponent::new(p).graded_index(), i)
            })
            .collect();
        let gammas = monomials(k, r);
        let shift = gammas
            .iter()
            .map(|g| {
                (0..k)
                    .map(|j| {
                        if g.degree() >= r {
                            None
                        } else {
                            Some(g.add(&Exponent::unit(k, j)).graded_index())
                        }
                    })
                    .collect()
            })
            .collect();
        MomentPlan { n, k, r, pred, gammas, shift }
    }

    pub fn degree(&self) -> u32 {
        self.r
    }

    /// Averages of x^beta over the cell, beta in graded order.
    pub fn averages(&self, cell: &AffineCell) -> Vec<f64> {
        debug_assert_eq!(cell.n(), self.n);
        debug_assert_eq!(cell.k(), self.k);
        let nb = binomial(self.n + self.r as usize, self.r as usize);
        if self.k == 0 {
            let x = cell.x0();
            let mut out = vec![1.0; nb];
            for (b, &(p, i)) in self.pred.iter().enumerate() {
                out[b + 1] = out[p] * x[i];
            }
            return out;
        }
        let domain = cell.domain();
        let measure = domain.measure();
        let integrals: Vec<f64> = self.gammas.iter().map(|g| domain.monomial_integral(g.powers()) / measure).collect();
        let ng = self.gammas.len();
        let x0 = cell.x0();
        let a = cell.frame();
        // polys[b] holds (x0 + A y)^beta_b as dense coefficients over gammas
        let mut polys = vec![0.0; nb * ng];
        polys[0] = 1.0;
        let mut out = vec![0.0; nb];
        out[0] = 1.0;
        for (b, &(p, i)) in self.pred.iter().enumerate() {
            let b = b + 1;
            let (done, rest) = polys.split_at_mut(b * ng);
            let src = &done[p * ng..(p + 1) * ng];
            let dst = &mut rest[..ng];
            for g in 0..ng {
                let c = src[g];
                if c == 0.0 {
                    continue;
                }
                dst[g] += c * x0[i];
                for j in 0..self.k {
                    if let Some(t) = self.shift[g][j] {
                        dst[t] += c * a[(i, j)];
                    }
                }
            }
            out[b] = dst.iter().zip(&integrals).map(|(c, m)| c * m).sum();
        }
        out
    }

    /// Row of the Vandermonde matrix of the cell against the monomial form
    /// basis of degree r: entry (beta, alpha) = avg(x^beta) * orientation_alpha.
    pub fn monomial_row(&self, cell: &AffineCell) -> Vec<f64> {
        let avg = self.averages(cell);
        let o = cell.orientation();
        let mut row = Vec::with_capacity(avg.len() * o.coeffs().len());
        for m in &avg {
            for s in o.coeffs() {
                row.push(m * s);
            }
        }
        row
    }
}

/// Vandermonde matrix (rows = cells, columns = monomial form basis of degree r).
pub fn monomial_vandermonde(cells: &[AffineCell], n: usize, k: usize, r: u32) -> Result<DMatrix<f64>> {
    if let Some(c) = cells.iter().find(|c| c.n() != n || c.k() != k) {
        return Err(Error::DimensionMismatch { expected: k, found: c.k() });
    }
    let plan = MomentPlan::new(n, k, r);
    let cols = monomial_dimension(n, k, r);
    let rows: Vec<Vec<f64>> = cells.par_iter().map(|c| plan.monomial_row(c)).collect();
    Ok(DMatrix::from_fn(cells.len(), cols, |i, j| rows[i][j]))
}

fn check_form_cell(form: &PolyKForm, cell: &AffineCell) -> Result<()> {
    if form.n() != cell.n() {
        return Err(Error::DimensionMismatch { expected: cell.n(), found: form.n() });
    }
    if form.k() != cell.k() {
        return Err(Error::DimensionMismatch { expected: cell.k(), found: form.k() });
    }
    Ok(())
}

/// Average of the form over the oriented cell: T(w) = (1 / H^k(S)) int_S w.
pub fn average(form: &PolyKForm, cell: &AffineCell) -> Result<f64> {
    check_form_cell(form, cell)?;
    let r = form.degree().unwrap_or(0);
    let avg = MomentPlan::new(form.n(), form.k(), r).averages(cell);
    let o = cell.orientation();
    Ok(form
        .terms()
        .map(|(b, a, c)| c * avg[b.graded_index()] * o.coeffs()[a.rank(form.n())])
        .sum())
}

/// Exact integral of the form over the oriented cell.
pub fn integrate(form: &PolyKForm, cell: &AffineCell) -> Result<f64> {
    Ok(average(form, cell)? * cell.hausdorff_measure())
}

/// Integration current [[S]].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntegrationCurrent {
    pub cell: AffineCell,
}

impl IntegrationCurrent {
    pub fn eval(&self, form: &PolyKForm) -> Result<f64> {
        integrate(form, &self.cell)
    }
}

/// Averaging current T_S = [[S]] / H^k(S). For k = 0 it is a point evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AveragingCurrent {
    pub cell: AffineCell,
}

impl AveragingCurrent {
    pub fn new(cell: AffineCell) -> Self {
        AveragingCurrent { cell }
    }

    pub fn measure(&self) -> f64 {
        self.cell.hausdorff_measure()
    }

    pub fn eval(&self, form: &PolyKForm) -> Result<f64> {
        average(form, &self.cell)
    }

    /// Averaging current on the image cell phi(S) with phi(x) = a x + b.
    pub fn pushforward_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        Ok(AveragingCurrent { cell: self.cell.transformed(a, b)? })
    }
}

/// Flattened terms for fast pointwise evaluation.
struct Compiled {
    n: usize,
    terms: Vec<(Vec<u32>, usize, f64)>,
    width: usize,
}

impl Compiled {
    fn new(form: &PolyKForm) -> Self {
        let terms = form.terms().map(|(b, a, c)| (b.powers().to_vec(), a.rank(form.n()), c)).collect();
        Compiled { n: form.n(), terms, width: binomial(form.n(), form.k()) }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (b, a, c) in &self.terms {
            let mut m = *c;
            for i in 0..self.n {
                if b[i] > 0 {
                    m *= x[i].powi(b[i] as i32);
                }
            }
            out[*a] += m;
        }
    }
}

/// Lower estimate of the sup-norm of a form over a body.
#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// False when comass had to be estimated (2 <= k <= n - 2).
    pub exact_comass: bool,
    pub points: usize,
    pub argmax: Vec<f64>,
}

/// max over a grid of spacing `h` in the body of the pointwise comass.
pub fn zero_norm_estimate(form: &PolyKForm, body: &ConvexBody, h: f64) -> Result<NormEstimate> {
    let grid = body.grid(h);
    zero_norm_on_points(form, &grid)
}

/// max over the given points of the pointwise comass.
pub fn zero_norm_on_points(form: &PolyKForm, points: &[Vec<f64>]) -> Result<NormEstimate> {
    if let Some(p) = points.iter().find(|p| p.len() != form.n()) {
        return Err(Error::DimensionMismatch { expected: form.n(), found: p.len() });
    }
    let (n, k) = (form.n(), form.k());
    let simple = k <= 1 || k + 1 >= n;
    let compiled = Compiled::new(form);
    let best = points
        .par_iter()
        .enumerate()
        .map_init(
            || vec![0.0; compiled.width],
            |buf, (i, x)| {
                compiled.eval(x, buf);
                let v = if simple {
                    buf.iter().map(|c| c * c).sum::<f64>().sqrt()
                } else {
                    let w = crate::exterior::KCovector::from_coeffs(n, k, buf.clone()).expect("sized");
                    comass(&w).value
                };
                (v, i)
            },
        )
        .reduce(|| (0.0, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok(NormEstimate {
        value: best.0,
        exact_comass: simple,
        points: points.len(),
        argmax: points.get(best.1).cloned().unwrap_or_default(),
    })
}

/// Upper bound on the Lipschitz constant of x -> comass(w(x)) over the
/// bounding box of the body, from the coefficient gradients.
pub fn lipschitz_bound(form: &PolyKForm, body: &ConvexBody) -> f64 {
    let radius = body.bounding_box().iter().map(|b| b[0].abs().max(b[1].abs())).fold(0.0, f64::max).max(1.0);
    let width = binomial(form.n(), form.k());
    let mut per_alpha = vec![0.0; width];
    for (b, a, c) in form.terms() {
        let d = b.degree();
        if d == 0 {
            continue;
        }
        let g: f64 = b.powers().iter().map(|&p| (p as f64).powi(2)).sum::<f64>().sqrt();
        per_alpha[a.rank(form.n())] += c.abs() * g * radius.powi(d as i32 - 1);
    }
    per_alpha.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Settings for a probe family.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    /// Grid spacing for probe base points.
    pub resolution: f64,
    /// Probe sizes as fractions of the body diameter.
    pub scales: Vec<f64>,
    /// Random orthonormal frames added to the coordinate frames.
    pub orientations: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { resolution: 0.05, scales: vec![1e-1, 1e-2, 1e-3], orientations: 8, seed: 1 }
    }
}

/// Finite family of small simplicial averaging currents inside a body, used
/// to estimate operator norms from below.
#[derive(Clone, Debug)]
pub struct ProbeFamily {
    pub n: usize,
    pub k: usize,
    pub cells: Vec<AffineCell>,
    /// index into `config.scales` for each probe
    pub scale_index: Vec<usize>,
    pub config: ProbeConfig,
}

impl ProbeFamily {
    /// Grid points x, scales s and frames F give the cell x + s diam(E) conv(0, F).
    /// If it leaves the body the mirrored cell x - s diam(E) conv(0, F), with
    /// the same orientation, is tried before the probe is dropped.
    pub fn build(body: &ConvexBody, k: usize, config: ProbeConfig) -> Result<Self> {
        let n = body.n();
        if k > n {
            return Err(Error::OrderOutOfRange { k, n });
        }
        if !(config.resolution > 0.0) || config.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter("probe resolution and scales must be positive".into()));
        }
        let grid = body.grid(config.resolution);
        let mut cells = Vec::new();
        let mut scale_index = Vec::new();
        if k == 0 {
            for x in grid {
                cells.push(AffineCell::point(x));
                scale_index.push(0);
            }
        } else {
            let frames = probe_frames(n, k, config.orientations, config.seed);
            let diam = body.diameter();
            let mirror_sign = if k % 2 == 0 { 1 } else { -1 };
            for x in &grid {
                for (si, s) in config.scales.iter().enumerate() {
                    let eps = s * diam;
                    for f in &frames {
                        let fits = |frame: &DMatrix<f64>| (0..k).all(|j| body.contains(&(0..n).map(|i| x[i] + eps * frame[(i, j)]).collect::<Vec<_>>()));
                        let cell = if fits(f) {
                            AffineCell::simplex(x.clone(), f.clone(), eps)?
                        } else {
                            let neg = -f.clone();
                            if !fits(&neg) {
                                continue;
                            }
                            AffineCell::simplex(x.clone(), neg, eps)?.with_sign(mirror_sign)
                        };
                        cells.push(cell);
                        scale_index.push(si);
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::EmptyProbeFamily);
        }
        Ok(ProbeFamily { n, k, cells, scale_index, config })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Coordinate frames P^alpha followed by seeded random orthonormal frames.
pub fn probe_frames(n: usize, k: usize, random: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut frames: Vec<DMatrix<f64>> = MultiIndex::all(n, k)
        .iter()
        .map(|alpha| DMatrix::from_fn(n, k, |i, j| if alpha.entries()[j] == i { 1.0 } else { 0.0 }))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let g = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
        frames.push(g.qr().q());
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CellDomain;
    use proptest::prelude::*;

    fn dx(n: usize, a: &[usize]) -> MultiIndex {
        MultiIndex::from_one_based(a, n).unwrap()
    }

    #[test]
    fn disk_radial_segments() {
        // S = {(1 - eps + t, 0) : t in [0, eps]} and w = x1 dx1 + x2 dx2
        let mut w = PolyKForm::zero(2, 1).unwrap();
        w.add_term(Exponent::new(vec![1, 0]), dx(2, &[1]), 1.0);
        w.add_term(Exponent::new(vec![0, 1]), dx(2, &[2]), 1.0);
        for eps in [0.5, 0.1, 1e-3] {
            let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
            let cell = AffineCell::new(vec![1.0 - eps, 0.0], a, CellDomain::Box { bounds: vec![[0.0, eps]] }, 1).unwrap();
            let v = average(&w, &cell).unwrap();
            assert!((v - (1.0 - eps / 2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn point_currents_evaluate() {
        let f = PolyKForm::monomial(Exponent::new(vec![2, 1]), MultiIndex::empty(), 3.0).unwrap();
        let v = average(&f, &AffineCell::point(vec![2.0, -1.0])).unwrap();
        assert_eq!(v, -12.0);
    }

    #[test]
    fn monomial_rows_agree_with_direct_average() {
        let a = DMatrix::from_column_slice(3, 2, &[0.3, -0.2, 0.5, 0.1, 0.4, -0.3]);
        let cell = AffineCell::simplex(vec![0.2, 0.1, -0.4], a, 0.7).unwrap();
        let basis = crate::polyform::monomial_basis(3, 2, 3).unwrap();
        let row = MomentPlan::new(3, 2, 3).monomial_row(&cell);
        for (e, v) in basis.elements.iter().zip(&row) {
            assert!((average(e, &cell).unwrap() - v).abs() < 1e-14);
        }
    }

    #[test]
    fn probes_stay_inside() {
        let body = ConvexBody::simplex(2);
        let cfg = ProbeConfig { resolution: 0.25, ..ProbeConfig::default() };
        let fam = ProbeFamily::build(&body, 1, cfg.clone()).unwrap();
        assert!(fam.cells.iter().all(|c| c.vertices().iter().all(|v| body.contains(v))));
        let again = ProbeFamily::build(&body, 1, cfg).unwrap();
        assert_eq!(fam.cells, again.cells);
    }

    fn quad_form() -> impl Strategy<Value = PolyKForm> {
        let exps = monomials(2, 3);
        prop::collection::vec((0..exps.len(), 0..2usize, -1.0f64..1.0), 1..6).prop_map(move |ts| {
            let mut f = PolyKForm::zero(2, 1).unwrap();
            for (e, a, c) in ts {
                f.add_term(exps[e].clone(), MultiIndex::new(vec![a], 2).unwrap(), c);
            }
            f
        })
    }

    proptest! {
        #[test]
        fn average_is_linear(f in quad_form(), g in quad_form(), s in -2.0f64..2.0, t in 0.0f64..6.28) {
            let a = DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]);
            let cell = AffineCell::simplex(vec![0.1, 0.2], a, 0.3).unwrap();
            let lhs = average(&f.add(&g.scale(s)).unwrap(), &cell).unwrap();
            let rhs = average(&f, &cell).unwrap() + s * average(&g, &cell).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn change_of_variables(
            f in quad_form(),
            m in prop::collection::vec(-1.0f64..1.0, 4),
            b in prop::collection::vec(-1.0f64..1.0, 2),
            t in 0.0f64..6.28,
        ) {
            let m = DMatrix::from_column_slice(2, 2, &m) + DMatrix::identity(2, 2) * 2.0;
            let a = DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]);
            let cell = AffineCell::simplex(vec![0.1, -0.2], a, 0.5).unwrap();
            let image = cell.transformed(&m, &b).unwrap();
            let lhs = integrate(&f, &image).unwrap();
            let rhs = integrate(&f.pullback_affine(&m, &b).unwrap(), &cell).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn averages_bounded_by_grid_norm(f in quad_form(), t in 0.0f64..6.28, x in 0.05f64..0.4, y in 0.05f64..0.4) {
            let body = ConvexBody::simplex(2);
            let h = 0.02;
            let est = zero_norm_estimate(&f, &body, h).unwrap();
            let a = DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]);
            let cell = AffineCell::simplex(vec![x, y], a, 0.05).unwrap();
            let v = average(&f, &cell).unwrap();
            let slack = lipschitz_bound(&f, &body) * h * 2f64.sqrt();
            prop_assert!(v.abs() <= est.value + slack);
        }
    }
}
