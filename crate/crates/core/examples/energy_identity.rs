//! Solves a problem with variable conductivity and checks the discrete
//! energy identity, its error bound and the residuals of the scheme itself.

use hdgplus::fields::varkappa;
use hdgplus::mesh::{MeshFamily, MeshSpec};
use hdgplus::solver::{error_report, scheme_residuals, solve, SolverOptions};

pub fn run_example() -> hdgplus::Result<()> {
    let problem = varkappa();
    let data = problem.data();
    for family in [MeshFamily::Triangle, MeshFamily::Hexagon] {
        let mesh = MeshSpec::new(family, 8).generate()?;
        for tau_c in [0.1, 1.0, 10.0] {
            let sol = solve(&mesh, &data, &SolverOptions { tau_c, ..SolverOptions::new(1) })?;
            let r = error_report(&mesh, &sol, &problem)?;
            let e = r.energy;
            println!(
                "{family:<9} tau_c {tau_c:<4}: energy {:.6e} = {:.6e} (residual {:.1e}) <= bound {:.6e}; scheme residual {:.1e}",
                e.lhs,
                e.rhs,
                e.relative_residual(),
                e.bound,
                scheme_residuals(&mesh, &sol, &data).max()
            );
            assert!(e.bound_holds());
        }
    }
    Ok(())
}

fn main() -> hdgplus::Result<()> {
    run_example()
}
