//! Solver behaviour on hand-checkable cases and through mesh files.

use std::sync::Arc;

use hdgplus::fields::{poly, trig, ScalarProblem};
use hdgplus::mesh::{read_mesh, write_mesh, MeshFamily, MeshSpec, PolyMesh};
use hdgplus::polyquad::LocalSpaces;
use hdgplus::solver::{error_report, solve, LinearSolver, SolverOptions};
use nalgebra::{Point2, Vector2};

fn linear_x() -> ScalarProblem {
    ScalarProblem::from_potential(
        "x",
        Arc::new(|p| p.x),
        Arc::new(|_| Vector2::new(1.0, 0.0)),
        Arc::new(|_| 0.0),
        None,
    )
}

#[test]
fn linear_potential_gives_the_constant_flux() {
    let mesh = MeshSpec::new(MeshFamily::Quad, 1).generate().unwrap();
    let opts = SolverOptions::new(0);
    let sol = solve(&mesh, &linear_x().data(), &opts).unwrap();
    assert_eq!(sol.condensed.size(), 0);
    let geom = &mesh.geometries().unwrap()[0];
    let spaces = LocalSpaces::new(geom, 0, opts.exactness()).unwrap();
    for p in [Point2::new(0.1, 0.2), Point2::new(0.5, 0.5), Point2::new(0.9, 0.7)] {
        let q = spaces.eval_vector(&sol.q[0], &p);
        assert!((q - Vector2::new(-1.0, 0.0)).norm() < 1e-13, "{q}");
        assert!((spaces.eval_scalar(&sol.u[0], &p) - p.x).abs() < 1e-13);
    }
}

#[test]
fn linear_potential_is_exact_on_every_family() {
    for family in [MeshFamily::Quad, MeshFamily::Triangle, MeshFamily::DistortedQuad, MeshFamily::Hexagon] {
        let mesh = MeshSpec::new(family, 4).generate().unwrap();
        let problem = linear_x();
        let sol = solve(&mesh, &problem.data(), &SolverOptions::new(0)).unwrap();
        let r = error_report(&mesh, &sol, &problem).unwrap();
        assert!(r.q_error < 1e-12 && r.u_error < 1e-12 && r.trace_error < 1e-12, "{family}: {r:?}");
    }
}

#[test]
fn polynomial_of_degree_k_plus_one_is_reproduced() {
    for k in 0..3 {
        let mesh = MeshSpec::new(MeshFamily::Hexagon, 3).generate().unwrap();
        let problem = poly(k as u32 + 1);
        let sol = solve(&mesh, &problem.data(), &SolverOptions::new(k)).unwrap();
        let r = error_report(&mesh, &sol, &problem).unwrap();
        assert!(r.q_error < 1e-10 && r.u_error < 1e-10, "k = {k}: {r:?}");
    }
}

#[test]
fn cholesky_and_conjugate_gradients_agree() {
    let mesh = MeshSpec::new(MeshFamily::DistortedQuad, 6).generate().unwrap();
    let data = trig().data();
    let direct = solve(&mesh, &data, &SolverOptions::new(1)).unwrap();
    let opts = SolverOptions {
        linear: LinearSolver::Cg { tol: 1e-13, max_iter: 5000 },
        ..SolverOptions::new(1)
    };
    let iterative = solve(&mesh, &data, &opts).unwrap();
    for (a, b) in direct.traces.iter().zip(&iterative.traces) {
        assert!((a - b).amax() < 1e-9);
    }
}

#[test]
fn solving_a_reloaded_mesh_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.json");
    let mesh = MeshSpec::new(MeshFamily::Hexagon, 4).generate().unwrap();
    write_mesh(&mesh, &path).unwrap();
    let back: PolyMesh = read_mesh(&path).unwrap();
    let data = trig().data();
    let a = solve(&mesh, &data, &SolverOptions::new(1)).unwrap();
    let b = solve(&back, &data, &SolverOptions::new(1)).unwrap();
    assert_eq!(a.q, b.q);
    assert_eq!(a.u, b.u);
    assert_eq!(a.traces, b.traces);
}
