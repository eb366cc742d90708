//! Affine k-cells, their measures and exact monomial integrals, convex bodies
//! and the Baran metric on cubes and simplices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::comb::factorial;
use crate::error::{Error, Result};
use crate::exterior::{orientation_from_matrix, singular_ratio, KVector, RANK_TOL};

/// sqrt(det(A^T A)) for an n x k matrix, 1 when k = 0.
pub fn jacobian(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    a.clone().singular_values().iter().product()
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Parameter domain of a k-cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CellDomain {
    /// eps * standard k-simplex. The dimension comes from the frame.
    Simplex {
        eps: f64,
        #[serde(skip)]
        dim: usize,
    },
    /// Product of intervals.
    Box { bounds: Vec<[f64; 2]> },
}

impl CellDomain {
    pub fn simplex(eps: f64, dim: usize) -> Self {
        CellDomain::Simplex { eps, dim }
    }

    pub fn unit_box(dim: usize) -> Self {
        CellDomain::Box { bounds: vec![[0.0, 1.0]; dim] }
    }

    pub fn dim(&self) -> usize {
        match self {
            CellDomain::Simplex { dim, .. } => *dim,
            CellDomain::Box { bounds } => bounds.len(),
        }
    }

    /// k-dimensional Lebesgue measure.
    pub fn measure(&self) -> f64 {
        match self {
            CellDomain::Simplex { eps, dim } => eps.powi(*dim as i32) / factorial(*dim as u32),
            CellDomain::Box { bounds } => bounds.iter().map(|b| b[1] - b[0]).product(),
        }
    }

    /// Exact integral of y^gamma over the domain.
    pub fn monomial_integral(&self, gamma: &[u32]) -> f64 {
        match self {
            CellDomain::Simplex { eps, dim } => {
                let total: u32 = gamma.iter().sum();
                let num: f64 = gamma.iter().map(|&g| factorial(g)).product();
                num / factorial(*dim as u32 + total) * eps.powi((*dim as u32 + total) as i32)
            }
            CellDomain::Box { bounds } => bounds
                .iter()
                .zip(gamma)
                .map(|(b, &g)| {
                    let p = g as i32 + 1;
                    (b[1].powi(p) - b[0].powi(p)) / p as f64
                })
                .product(),
        }
    }

    /// Vertices of the parameter domain.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            CellDomain::Simplex { eps, dim } => {
                let mut out = vec![vec![0.0; *dim]];
                for j in 0..*dim {
                    let mut v = vec![0.0; *dim];
                    v[j] = *eps;
                    out.push(v);
                }
                out
            }
            CellDomain::Box { bounds } => {
                let k = bounds.len();
                (0..1usize << k)
                    .map(|mask| (0..k).map(|i| bounds[i][(mask >> i) & 1]).collect())
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CellDomain::Simplex { eps, .. } if !(*eps > 0.0 && eps.is_finite()) => {
                Err(Error::InvalidParameter(format!("simplex scale must be positive, got {eps}")))
            }
            CellDomain::Box { bounds } if bounds.iter().any(|b| !(b[0] < b[1])) => {
                Err(Error::InvalidParameter("box bounds must satisfy lo < hi".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Oriented affine k-cell { x0 + A y : y in domain } in R^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellJson", into = "CellJson")]
pub struct AffineCell {
    x0: Vec<f64>,
    a: DMatrix<f64>,
    domain: CellDomain,
    sign: i8,
}

impl AffineCell {
    pub fn new(x0: Vec<f64>, a: DMatrix<f64>, mut domain: CellDomain, sign: i8) -> Result<Self> {
        let n = x0.len();
        if a.nrows() != n && a.ncols() > 0 {
            return Err(Error::DimensionMismatch { expected: n, found: a.nrows() });
        }
        let k = a.ncols();
        if k > n {
            return Err(Error::OrderOutOfRange { k, n });
        }
        if let CellDomain::Simplex { dim, .. } = &mut domain {
            *dim = k;
        }
        if domain.dim() != k {
            return Err(Error::DimensionMismatch { expected: k, found: domain.dim() });
        }
        domain.validate()?;
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("cell sign must be +1 or -1, got {sign}")));
        }
        if k > 0 {
            let ratio = singular_ratio(&a);
            if ratio < RANK_TOL {
                return Err(Error::DegenerateCell { ratio });
            }
        }
        let a = if k == 0 { DMatrix::zeros(n, 0) } else { a };
        Ok(AffineCell { x0, a, domain, sign })
    }

    /// 0-cell at a point.
    pub fn point(x0: Vec<f64>) -> Self {
        let n = x0.len();
        AffineCell { x0, a: DMatrix::zeros(n, 0), domain: CellDomain::simplex(1.0, 0), sign: 1 }
    }

    /// x0 + eps * conv(0, columns of frame).
    pub fn simplex(x0: Vec<f64>, frame: DMatrix<f64>, eps: f64) -> Result<Self> {
        let k = frame.ncols();
        Self::new(x0, frame, CellDomain::simplex(eps, k), 1)
    }

    /// Simplex with the given vertices: x0 = v0, columns v_j - v0, unit scale.
    pub fn from_vertices(vertices: &[Vec<f64>]) -> Result<Self> {
        let n = vertices[0].len();
        let k = vertices.len() - 1;
        let a = DMatrix::from_fn(n, k, |i, j| vertices[j + 1][i] - vertices[0][i]);
        Self::new(vertices[0].clone(), a, CellDomain::simplex(1.0, k), 1)
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn domain(&self) -> &CellDomain {
        &self.domain
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn with_sign(mut self, sign: i8) -> Self {
        self.sign = if sign < 0 { -1 } else { 1 };
        self
    }

    pub fn jacobian(&self) -> f64 {
        jacobian(&self.a)
    }

    /// k-dimensional Hausdorff measure; 1 for points.
    pub fn hausdorff_measure(&self) -> f64 {
        self.jacobian() * self.domain.measure()
    }

    /// Signed unit orientation k-vector.
    pub fn orientation(&self) -> KVector {
        if self.k() == 0 {
            return KVector::from_coeffs(self.n(), 0, vec![self.sign as f64]).expect("scalar");
        }
        orientation_from_matrix(&self.a).expect("validated frame").scale(self.sign as f64)
    }

    /// Image of a parameter point.
    pub fn map(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.x0.clone();
        for (j, yj) in y.iter().enumerate() {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += self.a[(i, j)] * yj;
            }
        }
        x
    }

    /// Images of the parameter domain vertices; the cell is their convex hull.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        self.domain.vertices().iter().map(|y| self.map(y)).collect()
    }

    /// Cell moved by x -> m x + b, keeping domain and sign.
    pub fn transformed(&self, m: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let x0 = m * DVector::from_column_slice(&self.x0);
        let x0: Vec<f64> = x0.iter().zip(b).map(|(u, v)| u + v).collect();
        let a = if self.k() == 0 { DMatrix::zeros(m.nrows(), 0) } else { m * &self.a };
        Self::new(x0, a, self.domain.clone(), self.sign)
    }
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    x0: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    domain: CellDomain,
    sign: i8,
}

impl TryFrom<CellJson> for AffineCell {
    type Error = Error;

    fn try_from(j: CellJson) -> Result<Self> {
        let n = j.x0.len();
        let k = j.a.len();
        if let Some(bad) = j.a.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        let a = DMatrix::from_fn(n, k, |i, c| j.a[c][i]);
        AffineCell::new(j.x0, a, j.domain, j.sign)
    }
}

impl From<AffineCell> for CellJson {
    fn from(c: AffineCell) -> Self {
        let a = (0..c.a.ncols()).map(|j| c.a.column(j).iter().copied().collect()).collect();
        CellJson { x0: c.x0, a, domain: c.domain, sign: c.sign }
    }
}

/// Shape of a convex body.
#[derive(Clone, Debug, PartialEq)]
pub enum BodyKind {
    /// Axis-aligned box.
    Cube { bounds: Vec<[f64; 2]> },
    /// Standard simplex { x >= 0, sum x <= 1 }.
    Simplex,
    Ball { center: Vec<f64>, radius: f64 },
    /// { x : a_i . x <= b_i }, with a bounding box and width supplied by the caller.
    Polytope { halfspaces: Vec<(Vec<f64>, f64)>, bbox: Vec<[f64; 2]>, width: f64 },
}

/// Compact convex body with nonempty interior.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    n: usize,
    kind: BodyKind,
}

/// Membership slack for points on the boundary.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

impl ConvexBody {
    pub fn new(n: usize, kind: BodyKind) -> Result<Self> {
        let ok = match &kind {
            BodyKind::Cube { bounds } => bounds.len() == n && bounds.iter().all(|b| b[0] < b[1]),
            BodyKind::Simplex => n > 0,
            BodyKind::Ball { center, radius } => center.len() == n && *radius > 0.0,
            BodyKind::Polytope { halfspaces, bbox, width } => {
                bbox.len() == n && *width > 0.0 && halfspaces.iter().all(|(a, _)| a.len() == n)
            }
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("malformed body description for n = {n}")));
        }
        Ok(ConvexBody { n, kind })
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        ConvexBody::new(n, BodyKind::Cube { bounds: vec![[lo, hi]; n] }).expect("valid cube")
    }

    pub fn unit_cube(n: usize) -> Self {
        Self::cube(n, 0.0, 1.0)
    }

    pub fn simplex(n: usize) -> Self {
        ConvexBody::new(n, BodyKind::Simplex).expect("valid simplex")
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        ConvexBody::new(center.len(), BodyKind::Ball { center, radius })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    /// Exact inside for every kind.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Cube { bounds } => bounds
                .iter()
                .zip(x)
                .map(|(b, &xi)| (xi - b[0]).min(b[1] - xi))
                .fold(f64::INFINITY, f64::min),
            BodyKind::Simplex => {
                let s: f64 = x.iter().sum();
                let face = (1.0 - s) / (self.n as f64).sqrt();
                x.iter().copied().fold(face, f64::min)
            }
            BodyKind::Ball { center, radius } => {
                let d: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum::<f64>().sqrt();
                radius - d
            }
            BodyKind::Polytope { halfspaces, .. } => halfspaces
                .iter()
                .map(|(a, b)| {
                    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (b - a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>()) / norm
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.depth(x) >= -MEMBERSHIP_TOL
    }

    pub fn bounding_box(&self) -> Vec<[f64; 2]> {
        match &self.kind {
            BodyKind::Cube { bounds } => bounds.clone(),
            BodyKind::Simplex => vec![[0.0, 1.0]; self.n],
            BodyKind::Ball { center, radius } => center.iter().map(|c| [c - radius, c + radius]).collect(),
            BodyKind::Polytope { bbox, .. } => bbox.clone(),
        }
    }

    /// Minimal width over all directions.
    pub fn width(&self) -> f64 {
        match &self.kind {
            BodyKind::Cube { bounds } => bounds.iter().map(|b| b[1] - b[0]).fold(f64::INFINITY, f64::min),
            BodyKind::Simplex => simplex_width(&standard_simplex_vertices(self.n)),
            BodyKind::Ball { radius, .. } => 2.0 * radius,
            BodyKind::Polytope { width, .. } => *width,
        }
    }

    /// Euclidean diameter (exact for cube, simplex and ball; bounding box diagonal otherwise).
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            BodyKind::Simplex => {
                if self.n == 1 {
                    1.0
                } else {
                    2f64.sqrt()
                }
            }
            BodyKind::Ball { radius, .. } => 2.0 * radius,
            _ => self.bounding_box().iter().map(|b| (b[1] - b[0]).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// Grid of spacing at most h over the bounding box, restricted to the body,
    /// together with extra samples on curved boundaries.
    pub fn grid(&self, h: f64) -> Vec<Vec<f64>> {
        let bbox = self.bounding_box();
        let counts: Vec<usize> = bbox.iter().map(|b| ((b[1] - b[0]) / h).ceil().max(1.0) as usize).collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.n];
        'outer: loop {
            let x: Vec<f64> = (0..self.n)
                .map(|i| {
                    let t = idx[i] as f64 / counts[i] as f64;
                    if idx[i] == counts[i] {
                        bbox[i][1]
                    } else {
                        bbox[i][0] + t * (bbox[i][1] - bbox[i][0])
                    }
                })
                .collect();
            if self.contains(&x) {
                out.push(x);
            }
            for i in 0..self.n {
                idx[i] += 1;
                if idx[i] <= counts[i] {
                    continue 'outer;
                }
                idx[i] = 0;
            }
            break;
        }
        out.extend(self.boundary_samples(h));
        out
    }

    /// Points on curved parts of the boundary with spacing about h.
    pub fn boundary_samples(&self, h: f64) -> Vec<Vec<f64>> {
        let BodyKind::Ball { center, radius } = &self.kind else {
            return Vec::new();
        };
        match self.n {
            2 => {
                let m = (2.0 * std::f64::consts::PI * radius / h).ceil() as usize;
                (0..m)
                    .map(|i| {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                        vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect()
            }
            3 => {
                // Fibonacci lattice on the sphere
                let m = (4.0 * std::f64::consts::PI * radius * radius / (h * h)).ceil() as usize;
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..m)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                        let rho = (1.0 - z * z).sqrt();
                        let t = golden * i as f64;
                        vec![
                            center[0] + radius * rho * t.cos(),
                            center[1] + radius * rho * t.sin(),
                            center[2] + radius * z,
                        ]
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Vertices 0, e_1, ..., e_n of the standard simplex.
pub fn standard_simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        out.push(v);
    }
    out
}

/// Minimal width of a nondegenerate simplex. The minimum is attained in a
/// direction orthogonal to both parts of some split of the vertex set, so all
/// splits are tried.
pub fn simplex_width(vertices: &[Vec<f64>]) -> f64 {
    let m = vertices.len();
    let n = m - 1;
    let mut best = f64::INFINITY;
    for mask in 1..(1usize << m) - 1 {
        if mask & 1 == 0 {
            continue; // each split once
        }
        let (p, q): (Vec<usize>, Vec<usize>) = (0..m).partition(|&i| mask >> i & 1 == 1);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for part in [&p, &q] {
            for &i in &part[1..] {
                rows.push((0..n).map(|c| vertices[i][c] - vertices[part[0]][c]).collect());
            }
        }
        // rows span an (n-1)-dim space; the normal is the last right singular vector
        let mat = DMatrix::from_fn(n, n, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
        let svd = mat.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        let dir = vt.row(imin);
        let gap: f64 = (0..n).map(|c| dir[c] * (vertices[q[0]][c] - vertices[p[0]][c])).sum();
        best = best.min(gap.abs());
    }
    best
}

/// Baran distance on [-1, 1]^n: max_i |acos x_i - acos y_i|.
pub fn baran_distance_cube(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a.clamp(-1.0, 1.0).acos() - b.clamp(-1.0, 1.0).acos()).abs())
        .fold(0.0, f64::max)
}

/// Baran distance on the standard simplex: 2 acos(<phi(x), phi(y)>) with
/// phi(x) = (sqrt(1 - sum x), sqrt(x_1), ..., sqrt(x_n)).
pub fn baran_distance_simplex(x: &[f64], y: &[f64]) -> f64 {
    let root = |v: f64| {
        if v < 1e-14 {
            0.0
        } else {
            v.sqrt()
        }
    };
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let mut dot = root(1.0 - sx) * root(1.0 - sy);
    for (a, b) in x.iter().zip(y) {
        dot += root(*a) * root(*b);
    }
    2.0 * dot.clamp(-1.0, 1.0).acos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaranMetric {
    Cube,
    Simplex,
}

impl BaranMetric {
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            BaranMetric::Cube => baran_distance_cube(x, y),
            BaranMetric::Simplex => baran_distance_simplex(x, y),
        }
    }
}

/// Baran diameter of a polytope given by its vertices (the metric balls are
/// convex, so the maximum over vertex pairs is the diameter).
pub fn baran_diameter_polytope(vertices: &[Vec<f64>], metric: BaranMetric) -> f64 {
    let mut best = 0.0f64;
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            best = best.max(metric.distance(&vertices[i], &vertices[j]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simplex_monomial_integrals() {
        let d = CellDomain::simplex(1.0, 2);
        assert!((d.monomial_integral(&[0, 0]) - 0.5).abs() < 1e-16);
        assert!((d.monomial_integral(&[1, 0]) - 1.0 / 6.0).abs() < 1e-16);
        assert!((d.monomial_integral(&[1, 1]) - 1.0 / 24.0).abs() < 1e-16);
        let d = CellDomain::simplex(0.5, 1);
        assert!((d.monomial_integral(&[2]) - 0.125 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn hausdorff_measure_of_slanted_segment() {
        let a = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let c = AffineCell::new(vec![0.0, 0.0], a, CellDomain::unit_box(1), 1).unwrap();
        assert!((c.hausdorff_measure() - 5.0).abs() < 1e-14);
        assert_eq!(AffineCell::point(vec![1.0, 2.0]).hausdorff_measure(), 1.0);
    }

    #[test]
    fn cell_json_layout_and_round_trip() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let c = AffineCell::new(vec![0.25, 0.5], a, CellDomain::simplex(0.1, 1), 1).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"x0":[0.25,0.5],"A":[[1.0,0.0]],"domain":{"type":"simplex","eps":0.1},"sign":1}"#);
        let back: AffineCell = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn degenerate_cells_are_rejected() {
        let a = DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(AffineCell::new(vec![0.0, 0.0], a, CellDomain::unit_box(2), 1).is_err());
    }

    #[test]
    fn widths() {
        for n in 1..=4 {
            let w = ConvexBody::simplex(n).width();
            assert!((w - 1.0 / (n as f64).sqrt()).abs() < 1e-12, "n={n} w={w}");
        }
        assert_eq!(ConvexBody::unit_cube(3).width(), 1.0);
    }

    #[test]
    fn baran_diameter_of_corner_simplex() {
        for m in [2usize, 5, 40] {
            let l = 1.0 / m as f64;
            let verts: Vec<Vec<f64>> = standard_simplex_vertices(2).iter().map(|v| v.iter().map(|x| x * l).collect()).collect();
            let d = baran_diameter_polytope(&verts, BaranMetric::Simplex);
            assert!((d - 2.0 * (1.0 - l).acos()).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_grid_reaches_boundary() {
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let g = disk.grid(0.05);
        let rmax = g.iter().map(|x| (x[0] * x[0] + x[1] * x[1]).sqrt()).fold(0.0, f64::max);
        assert!((rmax - 1.0).abs() < 1e-12);
        assert!(g.iter().all(|x| disk.contains(x)));
    }

    fn simplex_point() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 3).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>().max(1.0);
            v.iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn baran_triangle_inequality_simplex(x in simplex_point(), y in simplex_point(), z in simplex_point()) {
            let d = baran_distance_simplex;
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
        }

        #[test]
        fn baran_triangle_inequality_cube(
            x in prop::collection::vec(-1.0f64..1.0, 3),
            y in prop::collection::vec(-1.0f64..1.0, 3),
            z in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let d = baran_distance_cube;
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        }
    }
}
