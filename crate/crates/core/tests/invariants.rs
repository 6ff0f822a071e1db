//! Property tests of the public API: mesh geometry, kernel scaling,
//! operator linearity, harmonic transforms and potential-field trends.

use std::sync::OnceLock;

use approx::assert_relative_eq;
use fraclayer::analysis::{sht_forward, sht_inverse, spectral_sobolev_norm, SpectralCoeffs};
use fraclayer::field::{uniform_sphere_potential, FieldEvaluator, FieldQuadrature};
use fraclayer::{decay_fit, BoundaryOperator, Density, KernelSpec, SurfaceMesh};
use proptest::prelude::*;

fn unit_sphere() -> &'static SurfaceMesh {
    static MESH: OnceLock<SurfaceMesh> = OnceLock::new();
    MESH.get_or_init(|| SurfaceMesh::sphere(1.0, [0.0; 3], 12, 24).unwrap())
}

fn operator() -> &'static BoundaryOperator {
    static OP: OnceLock<BoundaryOperator> = OnceLock::new();
    OP.get_or_init(|| BoundaryOperator::assemble(unit_sphere(), 1.5).unwrap())
}

fn smooth_density(mesh: &SurfaceMesh, c: [f64; 3]) -> Density {
    Density::from_fn(mesh, |p, _| c[0] + c[1] * p[2] + c[2] * p[0] * p[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_weights_positive_and_normals_unit(
        a in 0.5f64..2.0, b in 0.5f64..2.0, c in 0.5f64..2.0, nlat in 4usize..12,
    ) {
        let mesh = SurfaceMesh::ellipsoid(a, b, c, nlat, 2 * nlat).unwrap();
        prop_assert!(mesh.weights().iter().all(|w| *w > 0.0));
        for n in mesh.normals() {
            prop_assert!((n.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for p in mesh.nodes() {
            let level = (p[0] / a).powi(2) + (p[1] / b).powi(2) + (p[2] / c).powi(2);
            prop_assert!((level - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_quadrature_integrates_low_degree_polynomials(r in 0.3f64..3.0, nlat in 6usize..14) {
        let mesh = SurfaceMesh::sphere(r, [0.2, -0.1, 0.4], nlat, 2 * nlat).unwrap();
        let area = mesh.surface_integral(&vec![1.0; mesh.len()]).unwrap();
        prop_assert!((area / (4.0 * std::f64::consts::PI * r * r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_homogeneous(s in 1.05f64..2.95, t in 0.1f64..10.0, x in prop::array::uniform3(-3.0f64..3.0)) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let k = KernelSpec::order(s).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        let lhs = k.eval(&scaled).unwrap();
        let rhs = t.powf(s - 3.0) * k.eval(&x).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_apply_is_linear(
        c1 in prop::array::uniform3(-2.0f64..2.0),
        c2 in prop::array::uniform3(-2.0f64..2.0),
        a in -3.0f64..3.0, b in -3.0f64..3.0,
    ) {
        let mesh = unit_sphere();
        let op = operator();
        let f = smooth_density(mesh, c1);
        let g = smooth_density(mesh, c2);
        let lhs = op.apply(&f.combine(a, &g, b).unwrap()).unwrap();
        let rhs = op.apply(&f).unwrap().combine(a, &op.apply(&g).unwrap(), b).unwrap();
        let scale = lhs.values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn harmonic_transform_round_trips(coeffs in prop::collection::vec(-1.0f64..1.0, 49)) {
        let mesh = unit_sphere();
        let lmax = 6;
        let mut c = SpectralCoeffs::zeros(lmax);
        let mut k = 0;
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                c.set(l, m, coeffs[k]);
                k += 1;
            }
        }
        let back = sht_forward(mesh, &sht_inverse(&c, mesh).unwrap(), lmax).unwrap();
        for (x, y) in back.as_slice().iter().zip(c.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_norm_is_absolutely_homogeneous(t in -5.0f64..5.0, s in -2.0f64..2.0) {
        let mesh = unit_sphere();
        let phi = smooth_density(mesh, [1.0, 0.5, -0.25]);
        let c = sht_forward(mesh, &phi, 4).unwrap();
        let ct = sht_forward(mesh, &phi.scaled(t), 4).unwrap();
        let n = spectral_sobolev_norm(&c, s).unwrap();
        prop_assert!((spectral_sobolev_norm(&ct, s).unwrap() - t.abs() * n).abs() <= 1e-12 * n.max(1.0) * (1.0 + t.abs()));
    }

    #[test]
    fn potential_of_positive_density_is_positive(c0 in 1.0f64..3.0, c1 in -0.5f64..0.5, r in 1.3f64..20.0) {
        let mesh = unit_sphere();
        let phi = smooth_density(mesh, [c0, c1, 0.0]);
        let ev = FieldEvaluator::new(mesh, &phi, 0.75).unwrap();
        let u = ev.eval(&[0.0, 0.6 * r, 0.8 * r]).unwrap();
        prop_assert!(u.value > 0.0);
    }
}

#[test]
fn exterior_potential_decreases_along_rays() {
    let mesh = unit_sphere();
    let one = Density::constant(mesh, 1.0);
    let ev = FieldEvaluator::new(mesh, &one, 0.75).unwrap();
    let values: Vec<f64> = [1.5, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|r| ev.eval(&[r * 0.48, r * 0.6, r * 0.64]).unwrap().value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn trace_is_approached_monotonically_from_outside() {
    let mesh = SurfaceMesh::sphere(1.0, [0.0; 3], 16, 32).unwrap();
    let one = Density::constant(&mesh, 1.0);
    let ev = FieldEvaluator::new(&mesh, &one, 0.75).unwrap();
    let trace = uniform_sphere_potential(1.5, 1.0, 1.0).unwrap();
    let h = ev.spacing();
    let dir = [0.48, 0.6, 0.64];
    let mut errors = Vec::new();
    for k in [8.0, 4.0, 2.0, 1.0] {
        let r = 1.0 + k * h;
        let s = ev.eval(&[r * dir[0], r * dir[1], r * dir[2]]).unwrap();
        if k <= 1.0 {
            assert_eq!(s.quadrature, FieldQuadrature::Upsampled);
        }
        errors.push((s.value - trace).abs() / trace);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn decay_fit_scales_with_density() {
    let mesh = unit_sphere();
    let phi = smooth_density(mesh, [1.0, 0.3, 0.2]);
    let radii = [10.0, 20.0, 40.0, 80.0];
    let base = decay_fit(mesh, &phi, 0.75, &radii).unwrap();
    let scaled = decay_fit(mesh, &phi.scaled(10.0), 0.75, &radii).unwrap();
    assert_relative_eq!(scaled.exponent, base.exponent, epsilon = 1e-12);
    assert_relative_eq!(scaled.prefactor, 10.0 * base.prefactor, max_relative = 1e-12);
    assert_relative_eq!(base.exponent, base.expected_exponent, epsilon = 0.02);
}
