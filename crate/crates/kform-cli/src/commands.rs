use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use kform::approx::{
    constant_m, extract_fekete, extract_fekete_greedy, extract_leja, fitting_error_report, lebesgue_constant, sample, FittingBounds,
    InterpolationProjector, LeastSquaresProjector,
};
use kform::currents::{ProbeConfig, ProbeFamily};
use kform::geometry::ConvexBody;
use kform::mesh::{
    baran_mesh_cube, cube_faces_cardinality, cube_faces_divisions, markov_mesh_convex, markov_mesh_cube_faces, simplex_kmesh,
    verify_mesh_constant, IntegralKMesh, MeshTag,
};
use kform::polyform::{form_to_monomial_coefficients, monomial_basis, monomial_dimension, PolyKForm};
use kform::{binomial, Error};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::body::{implied_body, parse_body};
use crate::{CliError, Common, Figure, Method};

type CliResult<T> = Result<T, CliError>;

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn writer(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

/// The artifact goes to --out (or stdout); the report then goes to stdout
/// when --out is set and to stderr otherwise.
fn emit<A: Serialize, R: Serialize>(c: &Common, artifact: &A, report: &R) -> CliResult<()> {
    let mut w = writer(c.out.as_deref())?;
    serde_json::to_writer(&mut w, artifact).map_err(|e| CliError::Numeric(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    print_report(c, report)
}

fn print_report<R: Serialize>(c: &Common, report: &R) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Numeric(e.to_string()))?;
    if c.out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    Ok(())
}

fn validate(c: &Common) -> CliResult<()> {
    if !(c.c1 > 0.0 && c.c1 < 1.0) {
        return Err(CliError::Usage(format!("--c1 must lie in (0,1), got {}", c.c1)));
    }
    if !(c.theta > 0.0 && c.theta < 1.0) {
        return Err(CliError::Usage(format!("--theta must lie in (0,1), got {}", c.theta)));
    }
    if let (Some(n), Some(k)) = (c.n, c.k) {
        if k > n {
            return Err(CliError::Usage(format!("--k {k} exceeds --n {n}")));
        }
    }
    if let (Some(m), Some(r)) = (c.m, c.r) {
        if m <= r as usize {
            return Err(CliError::Usage(format!("--m {m} must exceed --r {r}")));
        }
    }
    if !(c.probe_res > 0.0) || c.probe_scales.iter().any(|s| !(*s > 0.0)) {
        return Err(CliError::Usage("probe resolution and scales must be positive".into()));
    }
    Ok(())
}

fn default_m(r: u32) -> usize {
    (3 * r as usize).div_ceil(2)
}

/// Mesh from the construction flags, with the body it was built for.
fn build_mesh(c: &Common) -> CliResult<(IntegralKMesh, ConvexBody)> {
    let method = require(c.method, "method")?;
    let (n, k, r) = (require(c.n, "n")?, require(c.k, "k")?, require(c.r, "r")?);
    let cube_only = || match c.body.as_deref() {
        None | Some("cube") => Ok(()),
        Some(b) => Err(CliError::Usage(format!("method {method:?} needs --body cube, got {b}"))),
    };
    Ok(match method {
        Method::Markov => {
            let body = parse_body(c.body.as_deref().unwrap_or("cube"), n, None)?;
            (markov_mesh_convex(&body, k, r, c.c1)?, body)
        }
        Method::Faces => {
            cube_only()?;
            (markov_mesh_cube_faces(n, k, r, c.c1)?, ConvexBody::unit_cube(n))
        }
        Method::Baran => {
            cube_only()?;
            (baran_mesh_cube(n, k, r, c.m.unwrap_or(default_m(r)))?, ConvexBody::cube(n, -1.0, 1.0))
        }
        Method::Alg1 => {
            if let Some(b) = c.body.as_deref().filter(|b| *b != "simplex") {
                return Err(CliError::Usage(format!("method alg1 needs --body simplex, got {b}")));
            }
            (simplex_kmesh(n, k, r, c.theta)?.mesh, ConvexBody::simplex(n))
        }
    })
}

/// Mesh from --in if given, otherwise built from the flags. The body is the
/// one given by --body, the one the mesh was built for, or the one implied by
/// the mesh tag, in that order.
fn mesh_and_body(c: &Common) -> CliResult<(IntegralKMesh, Option<ConvexBody>)> {
    match &c.input {
        Some(path) => {
            let mesh: IntegralKMesh = read_json(path)?;
            let body = match c.body.as_deref() {
                Some(spec) => Some(parse_body(spec, mesh.n, Some(&mesh))?),
                None => implied_body(&mesh),
            };
            Ok((mesh, body))
        }
        None => {
            let (mesh, body) = build_mesh(c)?;
            Ok((mesh, Some(body)))
        }
    }
}

fn probe_config(c: &Common) -> ProbeConfig {
    ProbeConfig { resolution: c.probe_res, scales: c.probe_scales.clone(), orientations: c.probe_orient, seed: c.seed }
}

fn load_weights(spec: &str, len: usize) -> CliResult<Vec<f64>> {
    if spec == "equal" {
        return Ok(vec![1.0; len]);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("weights must be 'equal' or a file ({spec}: {e})")))?;
    let weights: Vec<f64> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?
    } else {
        text.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("{spec}: not a number: {t:?}"))))
            .collect::<CliResult<_>>()?
    };
    if weights.len() != len {
        return Err(CliError::Usage(format!("{spec}: {} weights for {len} currents", weights.len())));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(CliError::Usage(format!("{spec}: weights must be positive")));
    }
    Ok(weights)
}

fn load_form(path: &Path, mesh: &IntegralKMesh) -> CliResult<PolyKForm> {
    let form: PolyKForm = read_json(path)?;
    if form.n() != mesh.n || form.k() != mesh.k {
        return Err(CliError::Usage(format!(
            "form has (n, k) = ({}, {}) but the currents have ({}, {})",
            form.n(),
            form.k(),
            mesh.n,
            mesh.k
        )));
    }
    Ok(form)
}

/// Largest monomial coefficient difference, when `b` has degree at most r.
fn coefficient_error(a: &PolyKForm, b: &PolyKForm, r: u32) -> kform::Result<Option<f64>> {
    if b.degree().unwrap_or(0) > r {
        return Ok(None);
    }
    Ok(Some((form_to_monomial_coefficients(a, r)? - form_to_monomial_coefficients(b, r)?).amax()))
}

#[derive(Serialize)]
struct MeshReport {
    tag: MeshTag,
    n: usize,
    k: usize,
    r: u32,
    cardinality: usize,
    constant: f64,
}

pub fn mesh(c: &Common, table: Option<&Path>) -> CliResult<()> {
    validate(c)?;
    let (mesh, _) = build_mesh(c)?;
    if let Some(path) = table {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
        if fresh {
            w.write_record(["r", "cardinality", "constant", "tag"]).map_err(csv_err)?;
        }
        w.write_record([mesh.r.to_string(), mesh.len().to_string(), mesh.constant.to_string(), mesh.tag.as_str().to_string()])
            .map_err(csv_err)?;
        w.flush()?;
    }
    let report = MeshReport { tag: mesh.tag, n: mesh.n, k: mesh.k, r: mesh.r, cardinality: mesh.len(), constant: mesh.constant };
    emit(c, &mesh, &report)
}

pub enum Selector {
    Fekete { greedy: bool },
    Leja,
}

#[derive(Serialize)]
struct SelectReport {
    method: &'static str,
    n: usize,
    k: usize,
    r: u32,
    mesh_cells: usize,
    selected: usize,
    abs_det: f64,
    constant: f64,
    /// C N, the bound for Fekete currents extracted from the mesh
    lebesgue_bound: f64,
    lebesgue_lower: Option<f64>,
    per_scale: Option<Vec<(f64, f64)>>,
    probes: Option<usize>,
}

pub fn select(c: &Common, which: Selector) -> CliResult<()> {
    validate(c)?;
    let (mesh, body) = mesh_and_body(c)?;
    let basis = monomial_basis(mesh.n, mesh.k, mesh.r)?;
    let (method, tag, sel) = match which {
        Selector::Fekete { greedy: false } => ("fekete", MeshTag::Fekete, extract_fekete(&mesh, &basis)?),
        Selector::Fekete { greedy: true } => ("fekete-greedy", MeshTag::Fekete, extract_fekete_greedy(&mesh, &basis)?),
        Selector::Leja => ("leja", MeshTag::Leja, extract_leja(&mesh, &basis)?),
    };
    let (mut lebesgue_lower, mut per_scale, mut probes) = (None, None, None);
    if let Some(body) = body {
        let family = ProbeFamily::build(&body, mesh.k, probe_config(c))?;
        let proj = InterpolationProjector::new(&sel.cells, &basis)?;
        let est = lebesgue_constant(&proj, &family)?;
        lebesgue_lower = Some(est.value);
        per_scale = Some(est.per_scale);
        probes = Some(est.probes);
    }
    let report = SelectReport {
        method,
        n: mesh.n,
        k: mesh.k,
        r: mesh.r,
        mesh_cells: mesh.len(),
        selected: sel.cells.len(),
        abs_det: sel.abs_det,
        constant: mesh.constant,
        lebesgue_bound: mesh.constant * basis.len() as f64,
        lebesgue_lower,
        per_scale,
        probes,
    };
    emit(c, &sel.to_mesh(&mesh, tag), &report)
}

#[derive(Serialize)]
struct InterpReport {
    n: usize,
    k: usize,
    r: u32,
    condition: f64,
    /// max |T_i(w) - T_i(Pi w)| over the interpolation currents
    sample_residual: f64,
    /// max monomial coefficient difference, reported when the input has degree <= r
    coefficient_error: Option<f64>,
}

pub fn interp(c: &Common, form_path: &Path) -> CliResult<()> {
    validate(c)?;
    let currents: IntegralKMesh = read_json(require(c.input.as_deref(), "in")?)?;
    let r = c.r.unwrap_or(currents.r);
    let form = load_form(form_path, &currents)?;
    let basis = monomial_basis(currents.n, currents.k, r)?;
    let proj = InterpolationProjector::new(&currents.cells, &basis)?;
    let samples = sample(&form, &currents.cells)?;
    let result = proj.apply(&samples)?;
    let residual = sample(&result, &currents.cells)?.iter().zip(&samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let report = InterpReport {
        n: currents.n,
        k: currents.k,
        r,
        condition: proj.condition,
        sample_residual: residual,
        coefficient_error: coefficient_error(&result, &form, r)?,
    };
    emit(c, &result, &report)
}

#[derive(Serialize)]
struct FitReport {
    n: usize,
    k: usize,
    r: u32,
    cells: usize,
    dim: usize,
    constant: f64,
    /// worst-case error factors relative to the best approximation
    bounds: FittingBounds,
    /// max |T_i(w - P w)| over the mesh
    mesh_residual: f64,
    coefficient_error: Option<f64>,
}

pub fn fit(c: &Common, form_path: &Path) -> CliResult<()> {
    validate(c)?;
    let (mesh, _) = mesh_and_body(c)?;
    let r = c.r.filter(|_| c.input.is_some()).unwrap_or(mesh.r);
    let form = load_form(form_path, &mesh)?;
    let basis = monomial_basis(mesh.n, mesh.k, r)?;
    let weights = load_weights(&c.weights, mesh.len())?;
    let proj = LeastSquaresProjector::new(&mesh.cells, &weights, &basis)?;
    let samples = sample(&form, &mesh.cells)?;
    let result = proj.apply(&samples)?;
    let residual = sample(&result, &mesh.cells)?.iter().zip(&samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let report = FitReport {
        n: mesh.n,
        k: mesh.k,
        r,
        cells: mesh.len(),
        dim: basis.len(),
        constant: mesh.constant,
        bounds: fitting_error_report(mesh.constant, &weights, basis.len())?,
        mesh_residual: residual,
        coefficient_error: coefficient_error(&result, &form, r)?,
    };
    emit(c, &result, &report)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LebesgueReport {
    Interpolation {
        value: f64,
        per_scale: Vec<(f64, f64)>,
        probes: usize,
        /// C N with C the constant stored with the currents
        bound: f64,
    },
    LeastSquares {
        m: f64,
        per_scale: Vec<(f64, f64)>,
        m2: f64,
        m2_bound: f64,
        rotation_delta: f64,
        probes: usize,
    },
}

pub fn lebesgue(c: &Common) -> CliResult<()> {
    validate(c)?;
    let (mesh, body) = mesh_and_body(c)?;
    let body = body.ok_or_else(|| CliError::Usage("--body is required for these currents".into()))?;
    let r = c.r.filter(|_| c.input.is_some()).unwrap_or(mesh.r);
    let basis = monomial_basis(mesh.n, mesh.k, r)?;
    let family = ProbeFamily::build(&body, mesh.k, probe_config(c))?;
    let report = if mesh.len() == basis.len() {
        let proj = InterpolationProjector::new(&mesh.cells, &basis)?;
        let est = lebesgue_constant(&proj, &family)?;
        LebesgueReport::Interpolation {
            value: est.value,
            per_scale: est.per_scale,
            probes: est.probes,
            bound: mesh.constant * basis.len() as f64,
        }
    } else {
        let weights = load_weights(&c.weights, mesh.len())?;
        let proj = LeastSquaresProjector::new(&mesh.cells, &weights, &basis)?;
        let est = constant_m(&proj, &family, c.seed)?;
        LebesgueReport::LeastSquares {
            m: est.m.value,
            per_scale: est.m.per_scale,
            m2: est.m2,
            m2_bound: est.m2_bound,
            rotation_delta: est.rotation_delta,
            probes: est.m.probes,
        }
    };
    let mut w = writer(c.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Numeric(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn verify(c: &Common, trials: usize) -> CliResult<()> {
    validate(c)?;
    let (mesh, body) = mesh_and_body(c)?;
    let body = body.ok_or_else(|| CliError::Usage("--body is required for this mesh".into()))?;
    // the grid value never exceeds the true norm, so no slack is added
    let report = verify_mesh_constant(&mesh, &body, trials, c.seed, c.probe_res, 0.0)?;
    let mut w = writer(c.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| CliError::Numeric(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    if !report.pass {
        return Err(CliError::Numeric(format!(
            "sampling inequality violated: ratio {} exceeds constant {}",
            report.max_ratio, report.constant
        )));
    }
    Ok(())
}

pub fn tables(c: &Common, fig: Figure, rmax: Option<u32>) -> CliResult<()> {
    validate(c)?;
    let mut w = csv::Writer::from_writer(writer(c.out.as_deref())?);
    let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
    match fig {
        Figure::Markovsquare => {
            w.write_record(["n", "k", "r", "cardinality"]).map_err(csv_err)?;
            let dims: Vec<usize> = c.n.map(|n| vec![n]).unwrap_or_else(|| vec![2, 3]);
            for n in dims {
                let ks: Vec<usize> = c.k.map(|k| vec![k]).unwrap_or_else(|| (1..=n).collect());
                for k in ks {
                    if k > n {
                        return Err(CliError::Usage(format!("--k {k} exceeds --n {n}")));
                    }
                    for r in 1..=rmax.unwrap_or(20) {
                        let q = cube_faces_divisions(n, k, r, c.c1);
                        let card = cube_faces_cardinality(n, k, q);
                        w.write_record([n.to_string(), k.to_string(), r.to_string(), card.to_string()]).map_err(csv_err)?;
                    }
                }
            }
        }
        Figure::Comparecard => {
            let (n, k) = (c.n.unwrap_or(3), c.k.unwrap_or(2));
            if k > n {
                return Err(Error::OrderOutOfRange { k, n }.into());
            }
            w.write_record(["r", "markov_card", "baran_card", "dim"]).map_err(csv_err)?;
            for r in 1..=rmax.unwrap_or(20) {
                let markov = cube_faces_cardinality(n, k, cube_faces_divisions(n, k, r, c.c1));
                let m = default_m(r);
                let baran = binomial(n, k) * m.pow(k as u32) * (m + 1).pow((n - k) as u32);
                let dim = monomial_dimension(n, k, r);
                w.write_record([r.to_string(), markov.to_string(), baran.to_string(), dim.to_string()]).map_err(csv_err)?;
            }
        }
        Figure::Cardsimplex => {
            let (n, k) = (c.n.unwrap_or(2), c.k.unwrap_or(1));
            w.write_record(["r", "card", "ratio"]).map_err(csv_err)?;
            for r in 1..=rmax.unwrap_or(12) {
                let card = simplex_kmesh(n, k, r, c.theta)?.mesh.len();
                // card / (r^2 log r) is undefined at r = 1
                let ratio = if r > 1 { (card as f64 / ((r * r) as f64 * (r as f64).ln())).to_string() } else { String::new() };
                w.write_record([r.to_string(), card.to_string(), ratio]).map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
