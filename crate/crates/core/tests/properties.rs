//! Property tests of mesh, quadrature and solver invariants on generated
//! meshes and random polygons.

use hdgplus::fields::{trig, varkappa};
use hdgplus::mesh::{random_star_polygon, MeshFamily, MeshSpec, PolyMesh};
use hdgplus::polyquad::QuadratureRule;
use hdgplus::solver::{energy_identity, scheme_residuals, solve, SolverOptions};
use nalgebra::Point2;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = MeshFamily> {
    prop_oneof![
        Just(MeshFamily::Quad),
        Just(MeshFamily::Triangle),
        Just(MeshFamily::DistortedQuad),
        Just(MeshFamily::Hexagon),
    ]
}

fn binom(n: i32, r: i32) -> f64 {
    (0..r).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// `int_P x^a y^b` by Green's theorem, `oint x^{a+1} y^b / (a+1) dy`, with
/// each edge integral expanded exactly in powers of the edge parameter.
fn monomial_integral(poly: &[Point2<f64>], a: i32, b: i32) -> f64 {
    let mut total = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let d = poly[(i + 1) % poly.len()] - p;
        let mut s = 0.0;
        for i in 0..=a + 1 {
            for j in 0..=b {
                let c = binom(a + 1, i) * p.x.powi(a + 1 - i) * d.x.powi(i) * binom(b, j) * p.y.powi(b - j) * d.y.powi(j);
                s += c / (i + j + 1) as f64;
            }
        }
        total += s * d.y / (a + 1) as f64;
    }
    total
}

fn interior_normals_antiparallel(mesh: &PolyMesh) -> f64 {
    let geoms = mesh.geometries().unwrap();
    let mut worst = 0.0_f64;
    for face in mesh.faces.iter().filter(|f| !f.is_boundary()) {
        let (c0, l0) = face.first;
        let (c1, l1) = face.second.unwrap();
        let n0 = geoms[c0].faces[l0].normal;
        let n1 = geoms[c1].faces[l1].normal;
        worst = worst.max((n0 + n1).norm());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_meshes_tile_the_square(f in family(), n in 1usize..7, seed in 0u64..500) {
        let mesh = MeshSpec::new(f, n).with_seed(seed).generate().unwrap();
        prop_assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        prop_assert!(interior_normals_antiparallel(&mesh) < 1e-12);
        let geoms = mesh.geometries().unwrap();
        for g in &geoms {
            prop_assert!(g.fan_areas().iter().all(|a| *a > 0.0));
        }
    }

    #[test]
    fn element_quadrature_matches_greens_theorem(n in 3usize..9, seed in 0u64..1000, deg in 0usize..9) {
        let mesh = random_star_polygon(n, Point2::new(0.3, -0.2), 0.8, seed).unwrap();
        let geom = &mesh.geometries().unwrap()[0];
        let rule = QuadratureRule::element(geom, deg);
        prop_assert!(rule.weights.iter().all(|w| *w > 0.0));
        let pts = mesh.cell_points(0);
        for a in 0..=deg as i32 {
            for b in 0..=deg as i32 - a {
                let exact = monomial_integral(&pts, a, b);
                let q = rule.integrate(|p| p.x.powi(a) * p.y.powi(b));
                prop_assert!((q - exact).abs() <= 1e-12 * exact.abs().max(1e-3), "x^{} y^{}: {} vs {}", a, b, q, exact);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn solver_invariants_hold_for_any_stabilisation(
        f in family(),
        k in 0usize..3,
        tau_c in 0.1f64..10.0,
        variable in any::<bool>(),
    ) {
        let mesh = MeshSpec::new(f, 3).generate().unwrap();
        let problem = if variable { varkappa() } else { trig() };
        let data = problem.data();
        let opts = SolverOptions { tau_c, ..SolverOptions::new(k) };
        let sol = solve(&mesh, &data, &opts).unwrap();
        prop_assert!(sol.condensed.asymmetry() < 1e-12);
        prop_assert!(sol.condensed.min_eigenvalue() > 0.0);
        prop_assert!(scheme_residuals(&mesh, &sol, &data).max() < 1e-10);
        let e = energy_identity(&mesh, &sol, &problem).unwrap();
        prop_assert!(e.relative_residual() < 1e-9, "{:?}", e);
        prop_assert!(e.bound_holds());
    }
}

#[test]
fn quad_shape_regularity_is_level_independent() {
    let gamma = |n| {
        MeshSpec::new(MeshFamily::Quad, n)
            .generate()
            .unwrap()
            .geometries()
            .unwrap()
            .iter()
            .map(|g| g.shape_regularity().gamma_k)
            .fold(0.0, f64::max)
    };
    let g0 = gamma(2);
    for n in [4, 8, 16] {
        assert!((gamma(n) - g0).abs() < 1e-12 * g0);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mesh = MeshSpec::new(MeshFamily::Hexagon, 6).generate().unwrap();
    let data = varkappa().data();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| solve(&mesh, &data, &SolverOptions::new(1)).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.q, b.q);
    assert_eq!(a.u, b.u);
}
