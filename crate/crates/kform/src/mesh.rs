//! Integral k-meshes: finite families of averaging currents that control the
//! sup-norm of every polynomial k-form of degree <= r up to a constant.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{binomial, combinations};
use crate::currents::{monomial_vandermonde, zero_norm_on_points};
use crate::error::{Error, Result};
use crate::exterior::MultiIndex;
use crate::geometry::{baran_diameter_polytope, singular_values, AffineCell, BaranMetric, CellDomain, ConvexBody};
use crate::polyform::{monomial_basis, monomial_dimension, monomials, PolyKForm};

/// How a mesh was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshTag {
    MarkovConvex,
    MarkovCubeFaces,
    BaranCube,
    SimplexLayers,
    Union,
    AffineImage,
    Fekete,
    Leja,
    Custom,
}

impl MeshTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshTag::MarkovConvex => "markov_convex",
            MeshTag::MarkovCubeFaces => "markov_cube_faces",
            MeshTag::BaranCube => "baran_cube",
            MeshTag::SimplexLayers => "simplex_layers",
            MeshTag::Union => "union",
            MeshTag::AffineImage => "affine_image",
            MeshTag::Fekete => "fekete",
            MeshTag::Leja => "leja",
            MeshTag::Custom => "custom",
        }
    }
}

/// Averaging currents T_1..T_M with ||w||_0 <= constant * max_i |T_i(w)|
/// for all k-forms w of degree <= r.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshJson")]
pub struct IntegralKMesh {
    pub n: usize,
    pub k: usize,
    pub r: u32,
    pub constant: f64,
    pub tag: MeshTag,
    /// The constant does not grow with r (Markov-type and Baran-type meshes with
    /// a degree-proportional parameter are weakly admissible instead).
    #[serde(default)]
    pub weakly_admissible: bool,
    pub cells: Vec<AffineCell>,
}

#[derive(Deserialize)]
struct MeshJson {
    n: usize,
    k: usize,
    r: u32,
    constant: f64,
    tag: MeshTag,
    #[serde(default)]
    weakly_admissible: bool,
    cells: Vec<AffineCell>,
}

impl TryFrom<MeshJson> for IntegralKMesh {
    type Error = Error;

    fn try_from(j: MeshJson) -> Result<Self> {
        if j.k > j.n {
            return Err(Error::OrderOutOfRange { k: j.k, n: j.n });
        }
        if let Some(c) = j.cells.iter().find(|c| c.n() != j.n || c.k() != j.k) {
            return Err(Error::DimensionMismatch { expected: j.k, found: c.k() });
        }
        Ok(IntegralKMesh {
            n: j.n,
            k: j.k,
            r: j.r,
            constant: j.constant,
            tag: j.tag,
            weakly_admissible: j.weakly_admissible,
            cells: j.cells,
        })
    }
}

impl IntegralKMesh {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// max_i |T_i(w)|.
    pub fn seminorm(&self, form: &PolyKForm) -> Result<f64> {
        let r = form.degree().unwrap_or(0);
        let v = monomial_vandermonde(&self.cells, self.n, self.k, r)?;
        let c = crate::polyform::form_to_monomial_coefficients(form, r)?;
        Ok((v * c).amax())
    }
}

fn check_common(n: usize, k: usize, r: u32) -> Result<()> {
    if k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("degree r must be at least 1".into()));
    }
    Ok(())
}

fn check_c1(c1: f64) -> Result<()> {
    if !(c1 > 0.0 && c1 < 1.0) {
        return Err(Error::InvalidParameter(format!("c1 must lie in (0, 1), got {c1}")));
    }
    Ok(())
}

/// Coordinate frame P^alpha: columns e_{alpha_1}, ..., e_{alpha_k}.
pub fn coordinate_frame(n: usize, alpha: &MultiIndex) -> DMatrix<f64> {
    DMatrix::from_fn(n, alpha.len(), |i, j| if alpha.entries()[j] == i { 1.0 } else { 0.0 })
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

const HALTON_BASES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Number of quasi-random samples tried when a cube centre is not interior.
pub const CUBE_SAMPLES: usize = 32;

struct CubeGrid {
    lo: Vec<f64>,
    side: Vec<f64>,
    counts: Vec<usize>,
}

impl CubeGrid {
    fn new(body: &ConvexBody, d: f64) -> Self {
        let bbox = body.bounding_box();
        let counts: Vec<usize> = bbox.iter().map(|b| ((b[1] - b[0]) / d).ceil().max(1.0) as usize).collect();
        let side = bbox.iter().zip(&counts).map(|(b, &c)| (b[1] - b[0]) / c as f64).collect();
        CubeGrid { lo: bbox.iter().map(|b| b[0]).collect(), side, counts }
    }

    fn total(&self) -> usize {
        self.counts.iter().product()
    }

    fn cube(&self, mut lin: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.counts.len();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let j = lin % self.counts[i];
            lin /= self.counts[i];
            lo[i] = self.lo[i] + j as f64 * self.side[i];
            hi[i] = if j + 1 == self.counts[i] { self.lo[i] + self.counts[i] as f64 * self.side[i] } else { lo[i] + self.side[i] };
        }
        (lo, hi)
    }

    /// Interior point of body within the cube and the scale of the cells
    /// attached to it, or None when the cube misses the interior.
    fn anchor(&self, body: &ConvexBody, lin: usize) -> Option<(Vec<f64>, f64)> {
        let (lo, hi) = self.cube(lin);
        let n = lo.len();
        let centre: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let point = if body.depth(&centre) > 0.0 {
            centre
        } else {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for s in 1..=CUBE_SAMPLES {
                let x: Vec<f64> = (0..n).map(|i| lo[i] + radical_inverse(s, HALTON_BASES[i % 8]) * (hi[i] - lo[i])).collect();
                let d = body.depth(&x);
                if d > 0.0 && best.as_ref().is_none_or(|b| d > b.0) {
                    best = Some((d, x));
                }
            }
            best?.1
        };
        let to_cube = (0..n).map(|i| (point[i] - lo[i]).min(hi[i] - point[i])).fold(f64::INFINITY, f64::min);
        let eps = 0.5 * body.depth(&point).min(to_cube);
        Some((point, eps))
    }
}

fn markov_convex_side(body: &ConvexBody, k: usize, r: u32, c1: f64) -> f64 {
    let n = body.n();
    c1 * body.width() / (4.0 * (n as f64).sqrt() * binomial(n, k) as f64 * (r * r) as f64)
}

/// Markov-type mesh on a convex body: one interior point per cube of side
/// d = c1 w / (4 sqrt(n) C(n,k) r^2), each carrying the C(n,k) coordinate
/// simplices of a scale that keeps them inside body and cube.
pub fn markov_mesh_convex(body: &ConvexBody, k: usize, r: u32, c1: f64) -> Result<IntegralKMesh> {
    let n = body.n();
    check_common(n, k, r)?;
    check_c1(c1)?;
    let grid = CubeGrid::new(body, markov_convex_side(body, k, r, c1));
    let anchors: Vec<(Vec<f64>, f64)> = (0..grid.total()).into_par_iter().filter_map(|lin| grid.anchor(body, lin)).collect();
    let alphas = MultiIndex::all(n, k);
    let frames: Vec<DMatrix<f64>> = alphas.iter().map(|a| coordinate_frame(n, a)).collect();
    let mut cells = Vec::with_capacity(anchors.len() * frames.len());
    for (x, eps) in anchors {
        if k == 0 {
            cells.push(AffineCell::point(x));
            continue;
        }
        for f in &frames {
            cells.push(AffineCell::simplex(x.clone(), f.clone(), eps)?);
        }
    }
    Ok(IntegralKMesh {
        n,
        k,
        r,
        constant: (binomial(n, k) as f64).sqrt() / (1.0 - c1),
        tag: MeshTag::MarkovConvex,
        weakly_admissible: false,
        cells,
    })
}

/// Number of cells `markov_mesh_convex` would produce, without building them.
pub fn markov_mesh_convex_cardinality(body: &ConvexBody, k: usize, r: u32, c1: f64) -> Result<usize> {
    let n = body.n();
    check_common(n, k, r)?;
    check_c1(c1)?;
    let grid = CubeGrid::new(body, markov_convex_side(body, k, r, c1));
    let hits = (0..grid.total()).into_par_iter().filter(|&lin| grid.anchor(body, lin).is_some()).count();
    Ok(hits * binomial(n, k))
}

/// Grid cells per axis used by `markov_mesh_cube_faces`: 1/q is the
/// side c1 / (2 sqrt(n) C(n,k) r^2) rounded down to a unit fraction.
pub fn cube_faces_divisions(n: usize, k: usize, r: u32, c1: f64) -> usize {
    let d = c1 / (2.0 * (n as f64).sqrt() * binomial(n, k) as f64 * (r * r) as f64);
    (1.0 / d - 1e-9).ceil() as usize
}

/// Number of k-faces of the uniform grid with q cells per axis on the unit cube.
pub fn cube_faces_cardinality(n: usize, k: usize, q: usize) -> usize {
    binomial(n, k) * q.pow(k as u32) * (q + 1).pow((n - k) as u32)
}

/// All k-faces of a tensor grid with the given nodes along every axis.
fn tensor_grid_faces(n: usize, k: usize, nodes: &[f64]) -> Result<Vec<AffineCell>> {
    let m = nodes.len() - 1;
    let mut cells = Vec::with_capacity(cube_faces_cardinality(n, k, m));
    for alpha in MultiIndex::all(n, k) {
        let frame = coordinate_frame(n, &alpha);
        // free axes walk intervals 0..m, fixed axes walk nodes 0..=m
        let ranges: Vec<usize> = (0..n).map(|i| if alpha.contains(i) { m } else { m + 1 }).collect();
        let total: usize = ranges.iter().product();
        for mut lin in 0..total {
            let mut x0 = vec![0.0; n];
            let mut bounds = Vec::with_capacity(k);
            for i in 0..n {
                let j = lin % ranges[i];
                lin /= ranges[i];
                if alpha.contains(i) {
                    let (a, b) = (nodes[j].min(nodes[j + 1]), nodes[j].max(nodes[j + 1]));
                    x0[i] = a;
                    bounds.push([0.0, b - a]);
                } else {
                    x0[i] = nodes[j];
                }
            }
            let cell = if k == 0 {
                AffineCell::point(x0)
            } else {
                AffineCell::new(x0, frame.clone(), CellDomain::Box { bounds }, 1)?
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Markov-type mesh on [0,1]^n made of all k-faces of a uniform grid.
pub fn markov_mesh_cube_faces(n: usize, k: usize, r: u32, c1: f64) -> Result<IntegralKMesh> {
    check_common(n, k, r)?;
    check_c1(c1)?;
    let q = cube_faces_divisions(n, k, r, c1);
    let nodes: Vec<f64> = (0..=q).map(|i| i as f64 / q as f64).collect();
    Ok(IntegralKMesh {
        n,
        k,
        r,
        constant: (binomial(n, k) as f64).sqrt() / (1.0 - c1),
        tag: MeshTag::MarkovCubeFaces,
        weakly_admissible: false,
        cells: tensor_grid_faces(n, k, &nodes)?,
    })
}

/// Chebyshev-Lobatto nodes cos(i pi / m), i = 0..m.
pub fn chebyshev_lobatto(m: usize) -> Vec<f64> {
    (0..=m).map(|i| (i as f64 * PI / m as f64).cos()).collect()
}

/// Constant of the Baran mesh on the cube: sqrt(C(n,k)) / cos(pi r / (2m)).
pub fn baran_cube_constant(n: usize, k: usize, r: u32, m: usize) -> f64 {
    (binomial(n, k) as f64).sqrt() / (PI * r as f64 / (2.0 * m as f64)).cos()
}

/// Mesh on [-1,1]^n made of all k-faces of the Chebyshev-Lobatto tensor grid.
/// Needs m > r. Contains C(n,k) m^k (m+1)^(n-k) cells.
pub fn baran_mesh_cube(n: usize, k: usize, r: u32, m: usize) -> Result<IntegralKMesh> {
    check_common(n, k, r)?;
    if m <= r as usize {
        return Err(Error::InvalidParameter(format!("Chebyshev grid size m = {m} must exceed the degree r = {r}")));
    }
    Ok(IntegralKMesh {
        n,
        k,
        r,
        constant: baran_cube_constant(n, k, r, m),
        tag: MeshTag::BaranCube,
        weakly_admissible: true,
        cells: tensor_grid_faces(n, k, &chebyshev_lobatto(m))?,
    })
}

/// One layer of the simplex construction: the tessellation of c + s Sigma_n
/// with m subdivisions per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexLayer {
    pub c: f64,
    pub s: f64,
    pub m: usize,
    /// m from the closed-form rule before any refinement
    pub m_rule: usize,
    pub ell: f64,
}

/// Shape of a tessellation element in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElementShape {
    Simplex,
    /// The octahedron between the upright and inverted corner tetrahedra of a
    /// lattice cube; `anchor` is the cube's lowest corner.
    Octahedron { anchor: Vec<i64> },
}

/// Tessellation element whose k-faces were added to the mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexElement {
    pub layer: usize,
    pub shape: ElementShape,
    pub lattice: Vec<Vec<i64>>,
    pub vertices: Vec<Vec<f64>>,
    /// Baran diameter (largest vertex-pair distance)
    pub diameter: f64,
}

/// Mesh on the standard simplex built layer by layer, with the retained
/// tessellation elements kept for inspection.
#[derive(Clone, Debug)]
pub struct SimplexMesh {
    pub mesh: IntegralKMesh,
    pub layers: Vec<SimplexLayer>,
    pub elements: Vec<SimplexElement>,
    /// target Baran diameter theta pi / (2 r)
    pub h: f64,
    by_anchor: HashMap<(usize, Vec<i64>), Vec<usize>>,
}

fn boundary_anchors(n: usize, m: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    let sum: i64 = prefix.iter().sum();
    if prefix.len() + 1 == n {
        let last_max = m - 1 - sum;
        if last_max < 0 {
            return;
        }
        let from = if prefix.contains(&0) { 0 } else { (m - n as i64 - sum).max(1) };
        if from > 0 {
            prefix.push(0);
            out.push(prefix.clone());
            prefix.pop();
        }
        for v in from..=last_max {
            prefix.push(v);
            out.push(prefix.clone());
            prefix.pop();
        }
        return;
    }
    for v in 0..=(m - 1 - sum) {
        prefix.push(v);
        boundary_anchors(n, m, prefix, out);
        prefix.pop();
    }
}

/// Tessellation elements of m Sigma_n (lattice units) near its boundary.
fn lattice_elements(n: usize, m: usize, k: usize) -> Vec<(ElementShape, Vec<Vec<i64>>)> {
    let m = m as i64;
    let mut out = Vec::new();
    let unit = |i: usize| -> Vec<i64> { (0..n).map(|j| i64::from(j == i)).collect() };
    let add = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    // only anchors whose cube reaches the outer boundary: a_i = 0 or sum(a) >= m - n
    let mut anchors: Vec<Vec<i64>> = Vec::new();
    let mut prefix: Vec<i64> = Vec::with_capacity(n);
    boundary_anchors(n, m, &mut prefix, &mut anchors);
    for a in anchors {
        let s: i64 = a.iter().sum();
        // slab s <= sum <= s+1: upright corner simplex
        let mut up = vec![a.clone()];
        up.extend((0..n).map(|i| add(&a, &unit(i))));
        out.push((ElementShape::Simplex, up));
        match n {
            2 if s + 2 <= m => {
                let down = vec![add(&a, &unit(0)), add(&a, &unit(1)), add(&a, &[1, 1])];
                out.push((ElementShape::Simplex, down));
            }
            3 => {
                if s + 2 <= m {
                    let p: Vec<Vec<i64>> = (0..3).map(|i| add(&a, &unit(i))).collect();
                    let q12 = add(&a, &[1, 1, 0]);
                    let q13 = add(&a, &[1, 0, 1]);
                    let q23 = add(&a, &[0, 1, 1]);
                    if k == 3 {
                        // four tetrahedra around the diagonal p1 - q23
                        let ring = [&p[1], &p[2], &q13, &q12];
                        for i in 0..4 {
                            let t = vec![p[0].clone(), q23.clone(), ring[i].clone(), ring[(i + 1) % 4].clone()];
                            out.push((ElementShape::Simplex, t));
                        }
                    } else {
                        let verts = vec![p[0].clone(), p[1].clone(), p[2].clone(), q12, q13, q23];
                        out.push((ElementShape::Octahedron { anchor: a.clone() }, verts));
                    }
                }
                if s + 3 <= m {
                    let top = add(&a, &[1, 1, 1]);
                    let inv = vec![add(&a, &[0, 1, 1]), add(&a, &[1, 0, 1]), add(&a, &[1, 1, 0]), top];
                    out.push((ElementShape::Simplex, inv));
                }
            }
            _ => {}
        }
    }
    out
}

/// k-faces of an element, as lists of lattice vertices.
fn element_faces(shape: &ElementShape, verts: &[Vec<i64>], k: usize) -> Vec<Vec<Vec<i64>>> {
    match shape {
        ElementShape::Simplex => combinations(verts.len(), k + 1)
            .into_iter()
            .map(|f| f.into_iter().map(|i| verts[i].clone()).collect())
            .collect(),
        ElementShape::Octahedron { .. } => {
            // vertices p1 p2 p3 q12 q13 q23; two vertices are adjacent unless opposite
            let opposite = [(0, 5), (1, 4), (2, 3)];
            let adjacent = |i: usize, j: usize| !opposite.contains(&(i.min(j), i.max(j)));
            combinations(6, k + 1)
                .into_iter()
                .filter(|f| f.iter().enumerate().all(|(x, &i)| f[x + 1..].iter().all(|&j| adjacent(i, j))))
                .map(|f| f.into_iter().map(|i| verts[i].clone()).collect())
                .collect()
        }
    }
}

fn inside_inner(u: &[i64], m: usize) -> bool {
    u.iter().all(|&x| x >= 1) && u.iter().sum::<i64>() <= m as i64 - 1
}

fn to_physical(u: &[i64], c: f64, ell: f64) -> Vec<f64> {
    u.iter().map(|&x| c + ell * x as f64).collect()
}

fn quantize(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * (1u64 << 40) as f64).round() as i64).collect()
}

/// Constant of the simplex mesh: sqrt(C(n,k)) / cos(theta pi / 2).
pub fn simplex_mesh_constant(n: usize, k: usize, theta: f64) -> f64 {
    (binomial(n, k) as f64).sqrt() / (theta * PI / 2.0).cos()
}

/// Mesh on the standard simplex for n in {2, 3} and any k in 0..=n.
///
/// Starting from the whole simplex, each round tessellates c + s Sigma_n with
/// the coarsest m whose boundary elements have Baran diameter at most
/// theta pi / (2 r), keeps the k-faces of elements not inside the shrunken
/// simplex (c + l) + (s - (n+1) l) Sigma_n, and continues on that simplex.
pub fn simplex_kmesh(n: usize, k: usize, r: u32, theta: f64) -> Result<SimplexMesh> {
    check_common(n, k, r)?;
    if n != 2 && n != 3 {
        return Err(Error::InvalidParameter(format!("simplex meshes are available for n = 2, 3; got n = {n}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
    }
    let h = theta * PI / (2.0 * r as f64);
    let p = 1.0 - (h / 2.0).cos();
    let (mut c, mut s) = (0.0f64, 1.0f64);
    let mut layers = Vec::new();
    let mut elements = Vec::new();
    let mut cells = Vec::new();
    let mut seen: HashSet<Vec<Vec<i64>>> = HashSet::new();
    while s > 1e-14 {
        let ratio = s / (p * (2.0 * (c / p).sqrt() + 1.0));
        let m_rule = ((ratio - 1e-9).ceil() as usize).max(1);
        let attempt = |m: usize| -> Option<Vec<SimplexElement>> {
            let ell = s / m as f64;
            let kept: Vec<SimplexElement> = lattice_elements(n, m, k)
                .into_iter()
                .filter(|(_, verts)| !verts.iter().all(|u| inside_inner(u, m)))
                .map(|(shape, lattice)| {
                    let vertices: Vec<Vec<f64>> = lattice.iter().map(|u| to_physical(u, c, ell)).collect();
                    let diameter = baran_diameter_polytope(&vertices, BaranMetric::Simplex);
                    SimplexElement { layer: layers.len(), shape, lattice, vertices, diameter }
                })
                .collect();
            kept.iter().all(|e| e.diameter <= h * (1.0 + 1e-12)).then_some(kept)
        };
        // the rule's m is tried first; if some element is too wide, gallop then bisect
        let (mut m, mut retained) = (m_rule, attempt(m_rule));
        if retained.is_none() {
            let (mut bad, mut step) = (m_rule, 1);
            let (mut good, mut kept) = loop {
                let trial = bad + step;
                match attempt(trial) {
                    Some(e) => break (trial, e),
                    None => {
                        bad = trial;
                        step *= 2;
                    }
                }
            };
            while good - bad > 1 {
                let mid = (good + bad) / 2;
                match attempt(mid) {
                    Some(e) => (good, kept) = (mid, e),
                    None => bad = mid,
                }
            }
            (m, retained) = (good, Some(kept));
        }
        let retained = retained.expect("search ends on a passing m");
        let ell = s / m as f64;
        for e in &retained {
            for face in element_faces(&e.shape, &e.lattice, k) {
                let mut phys: Vec<Vec<f64>> = face.iter().map(|u| to_physical(u, c, ell)).collect();
                phys.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
                if !seen.insert(phys.iter().map(|v| quantize(v)).collect()) {
                    continue;
                }
                let cell = if k == 0 { AffineCell::point(phys[0].clone()) } else { AffineCell::from_vertices(&phys)? };
                cells.push(cell);
            }
        }
        layers.push(SimplexLayer { c, s, m, m_rule, ell });
        elements.extend(retained);
        c += ell;
        s = if m > n + 1 { s * (m - n - 1) as f64 / m as f64 } else { 0.0 };
    }
    let mut by_anchor: HashMap<(usize, Vec<i64>), Vec<usize>> = HashMap::new();
    for (i, e) in elements.iter().enumerate() {
        let anchor: Vec<i64> = (0..n).map(|d| e.lattice.iter().map(|u| u[d]).min().unwrap()).collect();
        by_anchor.entry((e.layer, anchor)).or_default().push(i);
    }
    let mesh = IntegralKMesh {
        n,
        k,
        r,
        constant: simplex_mesh_constant(n, k, theta),
        tag: MeshTag::SimplexLayers,
        weakly_admissible: false,
        cells,
    };
    Ok(SimplexMesh { mesh, layers, elements, h, by_anchor })
}

impl SimplexMesh {
    /// Retained element containing x, searching layers from the outside in.
    pub fn locate(&self, x: &[f64]) -> Option<&SimplexElement> {
        let n = self.mesh.n;
        for (li, layer) in self.layers.iter().enumerate() {
            let u: Vec<f64> = x.iter().map(|v| (v - layer.c) / layer.ell).collect();
            let tol = 1e-9;
            if u.iter().any(|&v| v < -tol) || u.iter().sum::<f64>() > layer.m as f64 + tol {
                continue;
            }
            let base: Vec<i64> = u.iter().map(|v| v.floor() as i64).collect();
            for offset in 0..(1usize << n) {
                let anchor: Vec<i64> = (0..n).map(|d| base[d] - ((offset >> d) & 1) as i64).collect();
                let Some(ids) = self.by_anchor.get(&(li, anchor)) else { continue };
                for &id in ids {
                    if element_contains(&self.elements[id], &u, tol) {
                        return Some(&self.elements[id]);
                    }
                }
            }
        }
        None
    }
}

fn element_contains(e: &SimplexElement, u: &[f64], tol: f64) -> bool {
    let n = u.len();
    match &e.shape {
        ElementShape::Octahedron { anchor } => {
            let s = anchor.iter().sum::<i64>() as f64;
            let t: f64 = u.iter().sum();
            (0..n).all(|d| u[d] >= anchor[d] as f64 - tol && u[d] <= anchor[d] as f64 + 1.0 + tol) && t >= s + 1.0 - tol && t <= s + 2.0 + tol
        }
        ElementShape::Simplex => {
            let v0 = &e.lattice[0];
            let a = DMatrix::from_fn(n, n, |i, j| (e.lattice[j + 1][i] - v0[i]) as f64);
            let rhs = nalgebra::DVector::from_fn(n, |i, _| u[i] - v0[i] as f64);
            match a.lu().solve(&rhs) {
                Some(l) => l.iter().all(|&v| v >= -tol) && l.iter().sum::<f64>() <= 1.0 + tol,
                None => false,
            }
        }
    }
}

/// Union of two meshes for the same n and k; the constant is the larger one.
pub fn union_mesh(a: &IntegralKMesh, b: &IntegralKMesh) -> Result<IntegralKMesh> {
    if a.n != b.n || a.k != b.k {
        return Err(Error::DimensionMismatch { expected: a.k, found: b.k });
    }
    let mut cells = a.cells.clone();
    cells.extend(b.cells.iter().cloned());
    Ok(IntegralKMesh {
        n: a.n,
        k: a.k,
        r: a.r.min(b.r),
        constant: a.constant.max(b.constant),
        tag: MeshTag::Union,
        weakly_admissible: a.weakly_admissible && b.weakly_admissible,
        cells,
    })
}

/// Factor by which a mesh constant grows under x -> a x + b:
/// (sigma_1 ... sigma_k) / (sigma_{n-k+1} ... sigma_n).
pub fn affine_constant_factor(a: &DMatrix<f64>, k: usize) -> f64 {
    let sv = singular_values(a);
    let n = sv.len();
    let top: f64 = sv[..k].iter().product();
    let bottom: f64 = sv[n - k..].iter().product();
    top / bottom
}

/// Image of a mesh under an invertible affine map.
pub fn map_mesh_affine(mesh: &IntegralKMesh, a: &DMatrix<f64>, b: &[f64]) -> Result<IntegralKMesh> {
    if a.nrows() != mesh.n || a.ncols() != mesh.n || b.len() != mesh.n {
        return Err(Error::DimensionMismatch { expected: mesh.n, found: a.nrows() });
    }
    if crate::exterior::singular_ratio(a) < crate::exterior::RANK_TOL {
        return Err(Error::SingularMap);
    }
    let cells = mesh.cells.iter().map(|c| c.transformed(a, b)).collect::<Result<Vec<_>>>()?;
    Ok(IntegralKMesh {
        n: mesh.n,
        k: mesh.k,
        r: mesh.r,
        constant: mesh.constant * affine_constant_factor(a, mesh.k),
        tag: MeshTag::AffineImage,
        weakly_admissible: mesh.weakly_admissible,
        cells,
    })
}

/// Outcome of checking ||w||_0 <= C max_i |T_i(w)| on random forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub trials: usize,
    pub constant: f64,
    /// largest observed ratio ||w||_0 estimate / mesh seminorm
    pub max_ratio: f64,
    pub slack: f64,
    pub grid_points: usize,
    pub pass: bool,
}

/// Draws `trials` forms with Gaussian monomial coefficients and compares the
/// grid sup-norm (spacing `resolution`) with the mesh seminorm. The grid value
/// is a lower bound for the true norm, so `slack` may be zero.
pub fn verify_mesh_constant(
    mesh: &IntegralKMesh,
    body: &ConvexBody,
    trials: usize,
    seed: u64,
    resolution: f64,
    slack: f64,
) -> Result<VerificationReport> {
    if body.n() != mesh.n {
        return Err(Error::DimensionMismatch { expected: mesh.n, found: body.n() });
    }
    let (n, k, r) = (mesh.n, mesh.k, mesh.r);
    let dim = monomial_dimension(n, k, r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = DMatrix::from_fn(dim, trials, |_, _| StandardNormal.sample(&mut rng));
    let v = monomial_vandermonde(&mesh.cells, n, k, r)?;
    let mesh_values = &v * &coeffs;
    let grid = body.grid(resolution);
    let width = binomial(n, k);
    let sup: Vec<f64> = if k <= 1 || k + 1 >= n {
        let exps = monomials(n, r);
        let pts = DMatrix::from_fn(grid.len(), exps.len(), |i, j| exps[j].eval(&grid[i]));
        let mut sq = DMatrix::<f64>::zeros(grid.len(), trials);
        for a in 0..width {
            let rows: Vec<usize> = (0..exps.len()).map(|b| b * width + a).collect();
            let ca = coeffs.select_rows(rows.iter());
            let vals = &pts * ca;
            sq += vals.component_mul(&vals);
        }
        (0..trials).map(|t| sq.column(t).max().sqrt()).collect()
    } else {
        let basis = monomial_basis(n, k, r)?;
        (0..trials)
            .map(|t| {
                let c: Vec<f64> = coeffs.column(t).iter().copied().collect();
                Ok(zero_norm_on_points(&basis.combine(&c)?, &grid)?.value)
            })
            .collect::<Result<_>>()?
    };
    let mut max_ratio = 0.0f64;
    for t in 0..trials {
        let semi = mesh_values.column(t).amax();
        max_ratio = max_ratio.max(sup[t] / semi);
    }
    Ok(VerificationReport {
        trials,
        constant: mesh.constant,
        max_ratio,
        slack,
        grid_points: grid.len(),
        pass: max_ratio <= mesh.constant * (1.0 + 1e-9) + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baran_cardinality_formula() {
        let mesh = baran_mesh_cube(2, 1, 4, 8).unwrap();
        assert_eq!(mesh.len(), 144);
        for (n, k) in [(2, 0), (2, 2), (3, 1), (3, 2)] {
            let m = 5;
            assert_eq!(baran_mesh_cube(n, k, 3, m).unwrap().len(), cube_faces_cardinality(n, k, m));
        }
        assert!(baran_mesh_cube(2, 1, 4, 4).is_err());
    }

    #[test]
    fn cube_face_count_matches_closed_form() {
        for c1 in [0.5, 0.9] {
            let q = cube_faces_divisions(3, 2, 1, c1);
            let mesh = markov_mesh_cube_faces(3, 2, 1, c1).unwrap();
            assert_eq!(mesh.len(), 3 * q * q * (q + 1));
        }
    }

    #[test]
    fn markov_cells_inside_body() {
        let body = ConvexBody::simplex(2);
        let mesh = markov_mesh_convex(&body, 1, 1, 0.5).unwrap();
        assert!(!mesh.is_empty());
        assert!(mesh.cells.iter().all(|c| c.vertices().iter().all(|v| body.depth(v) > 0.0)));
        assert_eq!(markov_mesh_convex_cardinality(&body, 1, 1, 0.5).unwrap(), mesh.len());
    }

    #[test]
    fn simplex_layers_cover_and_respect_diameter() {
        for (n, k, r) in [(2, 1, 3), (2, 2, 2), (2, 0, 2), (3, 1, 1), (3, 2, 1), (3, 3, 1)] {
            let sm = simplex_kmesh(n, k, r, 2.0 / 3.0).unwrap();
            assert!(sm.elements.iter().all(|e| e.diameter <= sm.h * (1.0 + 1e-12)));
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..500 {
                let mut x: Vec<f64> = (0..=n).map(|_| -rand::Rng::random::<f64>(&mut rng).ln()).collect();
                let t: f64 = x.iter().sum();
                x.iter_mut().for_each(|v| *v /= t);
                x.pop();
                assert!(sm.locate(&x).is_some(), "n={n} k={k} r={r} x={x:?}");
            }
        }
    }

    #[test]
    fn mesh_json_round_trip() {
        let mesh = baran_mesh_cube(2, 1, 2, 3).unwrap();
        let s = serde_json::to_string(&mesh).unwrap();
        let back: IntegralKMesh = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mesh);
        let s2 = serde_json::to_string(&back).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn affine_factor_example() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 2.0, 1.0]));
        assert!((affine_constant_factor(&a, 2) - 4.0).abs() < 1e-12);
    }
}
