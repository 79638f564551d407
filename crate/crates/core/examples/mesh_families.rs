//! Generates every mesh family, reports size and shape regularity, and
//! round-trips one mesh through the JSON format.

use hdgplus::mesh::{read_mesh, write_mesh, MeshFamily, MeshSpec};

pub fn run_example() -> hdgplus::Result<()> {
    println!("{:<15} {:>6} {:>6} {:>9} {:>8} {:>9}", "family", "cells", "faces", "h_max", "gamma", "max faces");
    for family in [MeshFamily::Quad, MeshFamily::Triangle, MeshFamily::DistortedQuad, MeshFamily::Hexagon] {
        let mesh = MeshSpec::new(family, 8).generate()?;
        let gamma = mesh
            .geometries()?
            .iter()
            .map(|g| g.shape_regularity().gamma_k)
            .fold(0.0, f64::max);
        println!(
            "{:<15} {:>6} {:>6} {:>9.4} {:>8.3} {:>9}",
            family.to_string(),
            mesh.n_cells(),
            mesh.n_faces(),
            mesh.h_max(),
            gamma,
            mesh.max_face_count()
        );
    }

    let mesh = MeshSpec::new(MeshFamily::Hexagon, 4).with_seed(3).generate()?;
    let path = std::env::temp_dir().join(format!("hdgplus-mesh-{}.json", std::process::id()));
    write_mesh(&mesh, &path)?;
    let back = read_mesh(&path)?;
    std::fs::remove_file(&path)?;
    assert_eq!(back.vertices, mesh.vertices);
    assert_eq!(back.cells, mesh.cells);
    println!("hexagon mesh with {} cells survives a JSON round trip", back.n_cells());
    Ok(())
}

fn main() -> hdgplus::Result<()> {
    run_example()
}
