//! Polynomial differential k-forms with real coefficients: monomial algebra,
//! the Koszul operator, the full and trimmed polynomial spaces, Whitney forms
//! and affine pullback.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::comb::binomial;
use crate::error::{Error, Result};
use crate::exterior::{merge_sign, row_minor, singular_ratio, KCovector, MultiIndex, RANK_TOL};

/// Exponent vector of a monomial x^beta.
///
/// Ordering is graded: lower total degree first, then lexicographic with a
/// higher power of x1 first (x1^2 < x1 x2 < x2^2).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(powers: Vec<u32>) -> Self {
        Exponent(powers)
    }

    pub fn zero(n: usize) -> Self {
        Exponent(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        Exponent(v)
    }

    pub fn powers(&self) -> &[u32] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product()
    }

    /// Position of this exponent in `monomials(n, r)` for any r >= degree.
    pub fn graded_index(&self) -> usize {
        let n = self.n();
        let d = self.degree() as usize;
        if n == 0 {
            return 0;
        }
        // monomials of degree < d
        let mut idx = if d == 0 { 0 } else { binomial(n + d - 1, n) };
        let mut rest = d;
        for (i, &p) in self.0.iter().enumerate() {
            let vars_left = n - i - 1;
            let p = p as usize;
            // exponents with a larger power in this slot come first
            for v in (p + 1)..=rest {
                idx += count_homogeneous(vars_left, rest - v);
            }
            rest -= p;
        }
        idx
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn count_homogeneous(vars: usize, degree: usize) -> usize {
    if vars == 0 {
        return usize::from(degree == 0);
    }
    binomial(vars + degree - 1, degree)
}

/// Homogeneous exponents of total degree `d` in `n` variables, x1-major.
pub fn homogeneous_monomials(n: usize, d: u32) -> Vec<Exponent> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == n {
            prefix.push(d);
            out.push(Exponent(prefix.clone()));
            prefix.pop();
            return;
        }
        for p in (0..=d).rev() {
            prefix.push(p);
            rec(n, d - p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Exponent(Vec::new()));
        }
        return out;
    }
    rec(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All exponents of degree at most `r` in graded order.
pub fn monomials(n: usize, r: u32) -> Vec<Exponent> {
    (0..=r).flat_map(|d| homogeneous_monomials(n, d)).collect()
}

/// Real polynomial in n variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(Exponent::zero(n), c)
    }

    pub fn monomial(beta: Exponent, c: f64) -> Self {
        let n = beta.n();
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(beta, c);
        }
        Polynomial { n, terms }
    }

    /// c0 + sum_i c[i] x_i
    pub fn affine(c0: f64, c: &[f64]) -> Self {
        let n = c.len();
        let mut p = Self::constant(n, c0);
        for (i, &ci) in c.iter().enumerate() {
            p.add_term(Exponent::unit(n, i), ci);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Exponent::degree).max()
    }

    pub fn add_term(&mut self, beta: Exponent, c: f64) {
        let entry = self.terms.entry(beta).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(b.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (b, c) in &self.terms {
            out.add_term(b.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, 1.0);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(b, c)| c * b.eval(x)).sum()
    }

    /// Substitutes x = a y + b with `a` of shape n x m; the result lives in m variables.
    pub fn compose_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Polynomial {
        let m = a.ncols();
        let linear: Vec<Polynomial> = (0..self.n)
            .map(|i| {
                let row: Vec<f64> = (0..m).map(|j| a[(i, j)]).collect();
                Polynomial::affine(b[i], &row)
            })
            .collect();
        let mut powers: Vec<Vec<Polynomial>> = linear.iter().map(|l| vec![Polynomial::constant(m, 1.0), l.clone()]).collect();
        let mut out = Polynomial::zero(m);
        for (beta, c) in &self.terms {
            let mut term = Polynomial::constant(m, *c);
            for (i, &p) in beta.0.iter().enumerate() {
                while powers[i].len() <= p as usize {
                    let next = powers[i].last().unwrap().mul(&linear[i]);
                    powers[i].push(next);
                }
                if p > 0 {
                    term = term.mul(&powers[i][p as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

/// Polynomial differential k-form on R^n, a finite sum of c x^beta dx_alpha.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormJson", into = "FormJson")]
pub struct PolyKForm {
    n: usize,
    k: usize,
    terms: BTreeMap<(Exponent, MultiIndex), f64>,
}

impl PolyKForm {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::OrderOutOfRange { k, n });
        }
        Ok(PolyKForm { n, k, terms: BTreeMap::new() })
    }

    /// Single term c x^beta dx_alpha.
    pub fn monomial(beta: Exponent, alpha: MultiIndex, c: f64) -> Result<Self> {
        let n = beta.n();
        if alpha.entries().iter().any(|&i| i >= n) {
            return Err(Error::BadMultiIndex(format!("{alpha} for n = {n}")));
        }
        let mut out = Self::zero(n, alpha.len())?;
        out.add_term(beta, alpha, c);
        Ok(out)
    }

    /// Polynomial times a constant covector.
    pub fn from_poly_covector(p: &Polynomial, w: &KCovector) -> Result<Self> {
        if p.n() != w.n() {
            return Err(Error::DimensionMismatch { expected: w.n(), found: p.n() });
        }
        let mut out = Self::zero(w.n(), w.k())?;
        for (alpha, c) in MultiIndex::all(w.n(), w.k()).into_iter().zip(w.coeffs()) {
            if *c == 0.0 {
                continue;
            }
            for (beta, pc) in p.terms() {
                out.add_term(beta.clone(), alpha.clone(), pc * c);
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &MultiIndex, f64)> {
        self.terms.iter().map(|((b, a), c)| (b, a, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest monomial degree, `None` for the zero form.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(b, _)| b.degree()).max()
    }

    pub fn add_term(&mut self, beta: Exponent, alpha: MultiIndex, c: f64) {
        debug_assert_eq!(beta.n(), self.n);
        debug_assert_eq!(alpha.len(), self.k);
        let key = (beta, alpha);
        let entry = self.terms.entry(key.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
    }

    /// Coefficient polynomial of dx_alpha.
    pub fn component(&self, alpha: &MultiIndex) -> Polynomial {
        let mut p = Polynomial::zero(self.n);
        for ((b, a), c) in &self.terms {
            if a == alpha {
                p.add_term(b.clone(), *c);
            }
        }
        p
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

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for ((b, a), c) in &other.terms {
            out.add_term(b.clone(), a.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = PolyKForm { n: self.n, k: self.k, terms: BTreeMap::new() };
        for ((b, a), c) in &self.terms {
            out.add_term(b.clone(), a.clone(), c * s);
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let mut out = Self::zero(self.n, self.k + other.k)?;
        for ((b1, a1), c1) in &self.terms {
            for ((b2, a2), c2) in &other.terms {
                if let Some((sign, a)) = merge_sign(a1, a2) {
                    out.add_term(b1.add(b2), a, sign * c1 * c2);
                }
            }
        }
        Ok(out)
    }

    /// Pointwise value as a k-covector.
    pub fn eval(&self, x: &[f64]) -> Result<KCovector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        let mut out = KCovector::zeros(self.n, self.k)?;
        for ((b, a), c) in &self.terms {
            out.coeffs_mut()[a.rank(self.n)] += c * b.eval(x);
        }
        Ok(out)
    }

    /// Koszul operator: p dx_s1 ^ ... ^ dx_sk maps to
    /// sum_i (-1)^i p x_si dx_s1 ^ .. (omit i) .. ^ dx_sk with i counted from 1.
    pub fn koszul(&self) -> Result<Self> {
        if self.k == 0 {
            return Err(Error::OrderOutOfRange { k: 0, n: self.n });
        }
        let mut out = Self::zero(self.n, self.k - 1)?;
        for ((b, a), c) in &self.terms {
            for (pos, &s) in a.entries().iter().enumerate() {
                let sign = if pos % 2 == 0 { -1.0 } else { 1.0 };
                out.add_term(b.add(&Exponent::unit(self.n, s)), a.without_position(pos), sign * c);
            }
        }
        Ok(out)
    }

    /// Pullback by the invertible affine map x = a y + b.
    pub fn pullback_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        if a.nrows() != self.n || a.ncols() != self.n || b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.ncols() });
        }
        if singular_ratio(a) < RANK_TOL {
            return Err(Error::SingularMap);
        }
        self.pullback_affine_general(a, b)
    }

    /// Pullback by x = a y + b where `a` is n x m; the result is a k-form on R^m.
    pub fn pullback_affine_general(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        if a.nrows() != self.n || b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.nrows() });
        }
        let m = a.ncols();
        let mut out = Self::zero(m, self.k)?;
        let targets = MultiIndex::all(m, self.k);
        let mut by_alpha: BTreeMap<&MultiIndex, Polynomial> = BTreeMap::new();
        for ((beta, alpha), c) in &self.terms {
            by_alpha.entry(alpha).or_insert_with(|| Polynomial::zero(self.n)).add_term(beta.clone(), *c);
        }
        for (alpha, p) in by_alpha {
            let q = p.compose_affine(a, b);
            // dx_alpha pulls back to sum_gamma det(a[alpha, gamma]) dy_gamma
            let sub = a.select_rows(alpha.entries().iter());
            for gamma in &targets {
                let minor = row_minor(&sub.transpose(), gamma.entries());
                if minor == 0.0 {
                    continue;
                }
                for (e, c) in q.terms() {
                    out.add_term(e.clone(), gamma.clone(), c * minor);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PolyKForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((b, a), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, p) in b.0.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, " x{}", i + 1)?,
                    _ => write!(f, " x{}^{}", i + 1, p)?,
                }
            }
            if !a.is_empty() {
                write!(f, " {a}")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct FormJson {
    n: usize,
    k: usize,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    beta: Vec<u32>,
    alpha: Vec<usize>,
    coef: f64,
}

impl TryFrom<FormJson> for PolyKForm {
    type Error = Error;

    fn try_from(j: FormJson) -> Result<Self> {
        let mut out = PolyKForm::zero(j.n, j.k)?;
        for t in j.terms {
            if t.beta.len() != j.n {
                return Err(Error::DimensionMismatch { expected: j.n, found: t.beta.len() });
            }
            if t.alpha.len() != j.k {
                return Err(Error::DimensionMismatch { expected: j.k, found: t.alpha.len() });
            }
            let alpha = MultiIndex::from_one_based(&t.alpha, j.n)?;
            out.add_term(Exponent(t.beta), alpha, t.coef);
        }
        Ok(out)
    }
}

impl From<PolyKForm> for FormJson {
    fn from(f: PolyKForm) -> Self {
        let terms = f
            .terms
            .into_iter()
            .map(|((b, a), coef)| TermJson { beta: b.0, alpha: a.one_based(), coef })
            .collect();
        FormJson { n: f.n, k: f.k, terms }
    }
}

/// Dimension of the full polynomial space: C(n+r, r) C(n, k).
pub fn monomial_dimension(n: usize, k: usize, r: u32) -> usize {
    binomial(n + r as usize, r as usize) * binomial(n, k)
}

/// Index of x^beta dx_alpha in the monomial basis of any degree >= |beta|.
pub fn monomial_form_index(n: usize, beta: &Exponent, alpha: &MultiIndex) -> usize {
    beta.graded_index() * binomial(n, alpha.len()) + alpha.rank(n)
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisKind {
    Monomial,
    Trimmed,
    /// Whitney forms of a simplex given by its n+1 vertices.
    Whitney { vertices: Vec<Vec<f64>> },
    Custom,
}

/// Ordered basis of a finite-dimensional space of polynomial k-forms of degree <= r.
#[derive(Clone, Debug)]
pub struct FormBasis {
    pub n: usize,
    pub k: usize,
    pub r: u32,
    pub kind: BasisKind,
    pub elements: Vec<PolyKForm>,
}

impl FormBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Wraps arbitrary forms; they must share n, k and have degree <= r.
    pub fn custom(n: usize, k: usize, r: u32, elements: Vec<PolyKForm>) -> Result<Self> {
        for e in &elements {
            e.check_same(&PolyKForm::zero(n, k)?)?;
            if e.degree().unwrap_or(0) > r {
                return Err(Error::InvalidParameter(format!("basis element of degree above {r}")));
            }
        }
        Ok(FormBasis { n, k, r, kind: BasisKind::Custom, elements })
    }

    /// Column j holds the coordinates of element j in the monomial basis of degree r.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let rows = monomial_dimension(self.n, self.k, self.r);
        let mut m = DMatrix::zeros(rows, self.len());
        for (j, e) in self.elements.iter().enumerate() {
            for (b, a, c) in e.terms() {
                m[(monomial_form_index(self.n, b, a), j)] = c;
            }
        }
        m
    }

    /// Linear combination sum_j c[j] element_j.
    pub fn combine(&self, c: &[f64]) -> Result<PolyKForm> {
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: c.len() });
        }
        let mut out = PolyKForm::zero(self.n, self.k)?;
        for (e, &cj) in self.elements.iter().zip(c) {
            if cj != 0.0 {
                out = out.add(&e.scale(cj))?;
            }
        }
        Ok(out)
    }

    /// True when element i only involves monomial basis functions of index <= i,
    /// which is what Leja extraction needs for its prefix property to be meaningful.
    pub fn is_lower_triangular(&self) -> bool {
        let m = self.coefficient_matrix();
        (0..m.ncols()).all(|j| (j + 1..m.nrows()).all(|i| m[(i, j)] == 0.0))
    }
}

/// Coordinates of a form in the monomial basis of degree r.
pub fn form_to_monomial_coefficients(form: &PolyKForm, r: u32) -> Result<DVector<f64>> {
    if form.degree().unwrap_or(0) > r {
        return Err(Error::InvalidParameter(format!("form has degree above {r}")));
    }
    let mut v = DVector::zeros(monomial_dimension(form.n, form.k, r));
    for (b, a, c) in form.terms() {
        v[monomial_form_index(form.n, b, a)] = c;
    }
    Ok(v)
}

/// Monomial basis of the full space of k-forms of degree <= r, ordered by
/// monomial (graded) and then by multi-index.
pub fn monomial_basis(n: usize, k: usize, r: u32) -> Result<FormBasis> {
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let alphas = MultiIndex::all(n, k);
    let mut elements = Vec::with_capacity(monomial_dimension(n, k, r));
    for beta in monomials(n, r) {
        for alpha in &alphas {
            elements.push(PolyKForm::monomial(beta.clone(), alpha.clone(), 1.0)?);
        }
    }
    Ok(FormBasis { n, k, r, kind: BasisKind::Monomial, elements })
}

/// Basis of the trimmed space: degree r-1 forms plus the Koszul image of
/// homogeneous degree r-1 (k+1)-forms, reduced by in-order elimination.
pub fn trimmed_basis(n: usize, k: usize, r: u32) -> Result<FormBasis> {
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if r == 0 {
        return Err(Error::InvalidParameter("trimmed space needs r >= 1".into()));
    }
    let mut elements = monomial_basis(n, k, r - 1)?.elements;
    if k < n {
        let alphas = MultiIndex::all(n, k + 1);
        let mut kept: Vec<DVector<f64>> = Vec::new();
        for beta in homogeneous_monomials(n, r - 1) {
            for alpha in &alphas {
                let image = PolyKForm::monomial(beta.clone(), alpha.clone(), 1.0)?.koszul()?;
                let v = form_to_monomial_coefficients(&image, r)?;
                let mut res = v.clone();
                // two passes of Gram-Schmidt against accepted directions
                for _ in 0..2 {
                    for q in &kept {
                        let d = q.dot(&res);
                        res -= q * d;
                    }
                }
                let norm = res.norm();
                if norm > 1e-10 * v.norm() {
                    kept.push(res / norm);
                    elements.push(image);
                }
            }
        }
    }
    Ok(FormBasis { n, k, r, kind: BasisKind::Trimmed, elements })
}

/// Dimension of the trimmed space for r >= 1: C(r+n, r+k) C(r+k-1, k).
pub fn trimmed_dimension(n: usize, k: usize, r: u32) -> usize {
    let r = r as usize;
    binomial(r + n, r + k) * binomial(r + k - 1, k)
}

/// Barycentric coordinates of a simplex as affine polynomials, plus their
/// (constant) differentials.
pub fn barycentric(vertices: &[Vec<f64>]) -> Result<(Vec<Polynomial>, Vec<KCovector>)> {
    let n = vertices.len().saturating_sub(1);
    if vertices.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: vertices[0].len() });
    }
    let edges = DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - vertices[0][i]);
    let ratio = singular_ratio(&edges);
    if n > 0 && ratio < RANK_TOL {
        return Err(Error::DegenerateCell { ratio });
    }
    let m = DMatrix::from_fn(n + 1, n + 1, |i, j| if i == 0 { 1.0 } else { vertices[j][i - 1] });
    let inv = m.try_inverse().ok_or(Error::SingularMap)?;
    let mut lambdas = Vec::with_capacity(n + 1);
    let mut dl = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let grad: Vec<f64> = (0..n).map(|j| inv[(i, j + 1)]).collect();
        lambdas.push(Polynomial::affine(inv[(i, 0)], &grad));
        dl.push(KCovector::from_coeffs(n, 1, grad)?);
    }
    Ok((lambdas, dl))
}

/// Whitney k-forms of the simplex, one per k-face, faces in lexicographic
/// order of their vertex lists. The alternating sum of lambda_i dlambda_...
/// integrates to 1/k! over its face, so it is scaled by k! H^k(face): each form
/// then integrates to the face measure on its own face and to zero on the
/// others, and face averages give the identity matrix.
pub fn whitney_basis(vertices: &[Vec<f64>], k: usize) -> Result<FormBasis> {
    let n = vertices.len().saturating_sub(1);
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let (lambdas, dl) = barycentric(vertices)?;
    let faces = crate::comb::combinations(n + 1, k + 1);
    let mut elements = Vec::with_capacity(faces.len());
    for face in &faces {
        let mut form = PolyKForm::zero(n, k)?;
        for i in 0..=k {
            let mut w = KCovector::from_coeffs(n, 0, vec![1.0])?;
            for (j, &v) in face.iter().enumerate() {
                if j != i {
                    w = w.wedge(&dl[v])?;
                }
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let term = PolyKForm::from_poly_covector(&lambdas[face[i]], &w)?;
            form = form.add(&term.scale(sign))?;
        }
        let measure = if k == 0 {
            1.0
        } else {
            let pts: Vec<Vec<f64>> = face.iter().map(|&v| vertices[v].clone()).collect();
            crate::geometry::AffineCell::from_vertices(&pts)?.hausdorff_measure()
        };
        elements.push(form.scale(crate::comb::factorial(k as u32) * measure));
    }
    Ok(FormBasis { n, k, r: 1, kind: BasisKind::Whitney { vertices: vertices.to_vec() }, elements })
}
