mod common;

use kform::currents::integrate;
use kform::exterior::MultiIndex;
use kform::geometry::{AffineCell, CellDomain};
use kform::polyform::{monomials, PolyKForm};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn gauss_legendre_integrates_monomials() {
    for q in 1..12 {
        let (x, w) = common::gauss_legendre(q);
        for p in 0..(2 * q) as i32 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((s - 1.0 / (p + 1) as f64).abs() < 1e-14, "q={q} p={p}");
        }
    }
}

#[test]
fn triangle_area_form() {
    // dx1^dx2 over the triangle (0,0), (2,0), (0,3) is its area
    let mut w = PolyKForm::zero(2, 2).unwrap();
    w.add_term(monomials(2, 0)[0].clone(), MultiIndex::all(2, 2)[0].clone(), 1.0);
    let cell = AffineCell::from_vertices(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
    assert!((integrate(&w, &cell).unwrap() - 3.0).abs() < 1e-14);
    assert!((common::reference_integral(&w, &cell) - 3.0).abs() < 1e-14);
}

fn form_from(n: usize, k: usize, r: u32, coeffs: &[f64]) -> PolyKForm {
    let mut w = PolyKForm::zero(n, k).unwrap();
    let mut c = coeffs.iter().cycle();
    for beta in monomials(n, r) {
        for alpha in MultiIndex::all(n, k) {
            w.add_term(beta.clone(), alpha, *c.next().unwrap());
        }
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_matches_quadrature(
        n in 1usize..4,
        k_raw in 0usize..4,
        r in 0u32..5,
        coeffs in prop::collection::vec(-2.0f64..2.0, 8),
        x0 in prop::collection::vec(-1.0f64..1.0, 3),
        frame in prop::collection::vec(-1.0f64..1.0, 9),
        simplex in any::<bool>(),
        size in 0.2f64..1.5,
    ) {
        let k = k_raw % (n + 1);
        let w = form_from(n, k, r, &coeffs);
        let a = DMatrix::from_fn(n, k, |i, j| frame[i * 3 + j]);
        let domain = if simplex { CellDomain::simplex(size, k) } else { CellDomain::Box { bounds: vec![[0.0, size]; k] } };
        let Ok(cell) = AffineCell::new(x0[..n].to_vec(), a, domain, 1) else { return Ok(()) };
        let exact = integrate(&w, &cell).unwrap();
        let reference = common::reference_integral(&w, &cell);
        prop_assert!((exact - reference).abs() <= 1e-11 * reference.abs().max(1.0));
    }
}
