//! Solves the Poisson problem with a trigonometric solution on a sequence of
//! hexagonal meshes and prints errors and fitted slopes.

use hdgplus::fields::trig;
use hdgplus::mesh::{refine_sequence, MeshFamily, MeshSpec};
use hdgplus::solver::{convergence_study, SolverOptions};

pub fn run_example() -> hdgplus::Result<()> {
    let meshes = refine_sequence(&MeshSpec::new(MeshFamily::Hexagon, 4), 4)?;
    for k in 0..3 {
        let study = convergence_study(&meshes, &trig(), &SolverOptions::new(k), false, 0)?;
        println!("k = {k}");
        for l in &study.levels {
            println!(
                "  h {:.4}  unknowns {:>5}  q {:.3e}  u {:.3e}  trace {:.3e}",
                l.errors.h_max, l.condensed_size, l.errors.q_error, l.errors.u_error, l.errors.trace_error
            );
        }
        let r = &study.rates;
        println!("  slopes: q {:.2}, u {:.2}, trace {:.2}", r.q, r.u, r.trace);
    }
    Ok(())
}

fn main() -> hdgplus::Result<()> {
    run_example()
}
