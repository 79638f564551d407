//! Runs every example end to end.

#[allow(dead_code)]
#[path = "../examples/mesh_families.rs"]
mod mesh_families;

#[allow(dead_code)]
#[path = "../examples/projection_identities.rs"]
mod projection_identities;

#[allow(dead_code)]
#[path = "../examples/elasticity_projection.rs"]
mod elasticity_projection;

#[allow(dead_code)]
#[path = "../examples/poisson_convergence.rs"]
mod poisson_convergence;

#[allow(dead_code)]
#[path = "../examples/energy_identity.rs"]
mod energy_identity;

#[allow(dead_code)]
#[path = "../examples/config_study.rs"]
mod config_study;

#[test]
fn mesh_families_runs() {
    mesh_families::run_example().unwrap();
}

#[test]
fn projection_identities_runs() {
    projection_identities::run_example().unwrap();
}

#[test]
fn elasticity_projection_runs() {
    elasticity_projection::run_example().unwrap();
}

#[test]
fn poisson_convergence_runs() {
    poisson_convergence::run_example().unwrap();
}

#[test]
fn energy_identity_runs() {
    energy_identity::run_example().unwrap();
}

#[test]
fn config_study_runs() {
    config_study::run_example().unwrap();
}
