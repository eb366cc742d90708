use std::path::Path;

use kform::geometry::{BodyKind, ConvexBody};
use kform::mesh::{IntegralKMesh, MeshTag};
use serde::Deserialize;

use crate::CliError;

/// Body description accepted from a JSON file.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum BodyJson {
    Cube { bounds: Vec<[f64; 2]> },
    Simplex { n: usize },
    Ball { center: Vec<f64>, radius: f64 },
    Polytope { halfspaces: Vec<Halfspace>, bbox: Vec<[f64; 2]>, width: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Halfspace {
    a: Vec<f64>,
    b: f64,
}

/// Reference cube of a mesh: [-1,1]^n for the Chebyshev grid, [0,1]^n for the
/// other cube families, and for anything else the smaller of the two that
/// holds every cell vertex.
pub fn reference_cube(n: usize, mesh: Option<&IntegralKMesh>) -> ConvexBody {
    let unit = ConvexBody::unit_cube(n);
    let Some(mesh) = mesh else { return unit };
    match mesh.tag {
        MeshTag::BaranCube => ConvexBody::cube(n, -1.0, 1.0),
        MeshTag::MarkovCubeFaces | MeshTag::MarkovConvex => unit,
        _ if mesh.cells.iter().all(|c| c.vertices().iter().all(|v| unit.contains(v))) => unit,
        _ => ConvexBody::cube(n, -1.0, 1.0),
    }
}

/// `cube`, `simplex`, `ball` (unit ball at the origin) or a path to a JSON body.
pub fn parse_body(spec: &str, n: usize, mesh: Option<&IntegralKMesh>) -> Result<ConvexBody, CliError> {
    match spec {
        "cube" => Ok(reference_cube(n, mesh)),
        "simplex" => Ok(ConvexBody::simplex(n)),
        "ball" => Ok(ConvexBody::ball(vec![0.0; n], 1.0)?),
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| CliError::Usage(format!("body must be cube, simplex, ball or a JSON file ({path}: {e})")))?;
            let json: BodyJson = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            let body = match json {
                BodyJson::Cube { bounds } => ConvexBody::new(bounds.len(), BodyKind::Cube { bounds })?,
                BodyJson::Simplex { n } => ConvexBody::new(n, BodyKind::Simplex)?,
                BodyJson::Ball { center, radius } => ConvexBody::ball(center, radius)?,
                BodyJson::Polytope { halfspaces, bbox, width } => ConvexBody::new(
                    bbox.len(),
                    BodyKind::Polytope { halfspaces: halfspaces.into_iter().map(|h| (h.a, h.b)).collect(), bbox, width },
                )?,
            };
            if body.n() != n {
                return Err(CliError::Usage(format!("body {path} has dimension {}, expected {n}", body.n())));
            }
            Ok(body)
        }
    }
}

/// Body implied by a mesh tag when none is given.
pub fn implied_body(mesh: &IntegralKMesh) -> Option<ConvexBody> {
    let n = mesh.n;
    match mesh.tag {
        MeshTag::BaranCube | MeshTag::MarkovCubeFaces => Some(reference_cube(n, Some(mesh))),
        MeshTag::SimplexLayers => Some(ConvexBody::simplex(n)),
        _ => None,
    }
}
