//! Projects a symmetric stress and a displacement on distorted
//! quadrilaterals and reports the combined error slope and how exactly
//! rigid motions are reproduced.

use hdgplus::elasticity::elastic_convergence_study;
use hdgplus::fields::elastic_trig;
use hdgplus::mesh::{refine_sequence, MeshFamily, MeshSpec};
use hdgplus::projection::StudyOptions;

pub fn run_example() -> hdgplus::Result<()> {
    let problem = elastic_trig();
    let meshes = refine_sequence(&MeshSpec::new(MeshFamily::DistortedQuad, 4), 4)?;
    for k in 1..3 {
        let (sigma, div, u) = (&problem.sigma, &problem.div_sigma, &problem.u);
        let study = elastic_convergence_study(&meshes, &StudyOptions::new(k), |p| sigma(p), |p| div(p), |p| u(p))?;
        let rigid = study.levels.iter().map(|l| l.rigid_residual).fold(0.0, f64::max);
        let identity = study.levels.iter().map(|l| l.identity_residual).fold(0.0, f64::max);
        println!(
            "k = {k}: total slope {:.2}, stress slope {:.2}, identity residual {:.1e}, rigid residual {:.1e}",
            study.total_rate, study.sigma_rate, identity, rigid
        );
    }
    Ok(())
}

fn main() -> hdgplus::Result<()> {
    run_example()
}
