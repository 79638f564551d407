//! Projects a smooth flux and potential onto a random pentagon, checks the
//! defining identities for several degrees, then measures the projection
//! error under refinement of a hexagonal mesh.

use std::f64::consts::PI;

use hdgplus::mesh::{element_geometry, random_star_polygon, refine_sequence, MeshFamily, MeshSpec};
use hdgplus::polyquad::{default_exactness, LocalSpaces};
use hdgplus::projection::{projection_convergence_study, verify_projection_identities, LocalProjector, StudyOptions};
use nalgebra::{Point2, Vector2};

fn u(p: &Point2<f64>) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin()
}

fn q(p: &Point2<f64>) -> Vector2<f64> {
    -PI * Vector2::new((PI * p.x).cos() * (PI * p.y).sin(), (PI * p.x).sin() * (PI * p.y).cos())
}

fn div_q(p: &Point2<f64>) -> f64 {
    2.0 * PI * PI * u(p)
}

pub fn run_example() -> hdgplus::Result<()> {
    let cell = random_star_polygon(5, Point2::new(0.5, 0.5), 0.4, 11)?;
    let geom = element_geometry(&cell, 0)?;
    for k in 0..4 {
        let sp = LocalSpaces::new(&geom, k, default_exactness(k) + 4)?;
        let projector = LocalProjector::new(&sp)?;
        let proj = projector.project(&sp, q, u, 1.0 / geom.diameter)?;
        let res = verify_projection_identities(&proj, &sp, q, div_q, u);
        println!(
            "k = {k}: identity residual {:.2e}, |delta+| {:.3e}, condition {:.1e}",
            res.max(),
            proj.delta_plus.norm(),
            projector.condition_number()
        );
    }

    let meshes = refine_sequence(&MeshSpec::new(MeshFamily::Hexagon, 4), 4)?;
    let study = projection_convergence_study(&meshes, &StudyOptions::new(1), q, div_q, u)?;
    for l in &study.levels {
        println!("h {:.4}  q {:.3e}  u {:.3e}  delta {:.3e}", l.h_max, l.q_error, l.u_error, l.delta_plus);
    }
    println!("k = 1 slopes: q {:.2}, u {:.2}, delta {:.2}", study.q_rate, study.u_rate, study.delta_rate);
    Ok(())
}

fn main() -> hdgplus::Result<()> {
    run_example()
}
