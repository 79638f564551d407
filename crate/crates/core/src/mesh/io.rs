//! JSON mesh files: `{"dim": 2, "vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`.
//!
//! Indices are 0-based, cells counter-clockwise. Coordinates are written with
//! 17 significant digits so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point2;
use serde::Deserialize;

use super::PolyMesh;
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    dim: usize,
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

pub fn write_mesh_string(mesh: &PolyMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{{\n  \"dim\": {},\n  \"vertices\": [", mesh.dim);
    for (i, v) in mesh.vertices.iter().enumerate() {
        let sep = if i + 1 < mesh.vertices.len() { "," } else { "" };
        let _ = writeln!(s, "    [{:.16e}, {:.16e}]{sep}", v.x, v.y);
    }
    s.push_str("  ],\n  \"cells\": [\n");
    for (i, c) in mesh.cells.iter().enumerate() {
        let sep = if i + 1 < mesh.cells.len() { "," } else { "" };
        let idx: Vec<String> = c.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "    [{}]{sep}", idx.join(", "));
    }
    s.push_str("  ]\n}\n");
    s
}

pub fn write_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn read_mesh_str(text: &str) -> Result<PolyMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.dim != 2 {
        return Err(Error::Parse {
            location: "dim".into(),
            message: format!("only dim = 2 is supported, found {}", file.dim),
        });
    }
    let nv = file.vertices.len();
    for (c, cell) in file.cells.iter().enumerate() {
        for (j, &v) in cell.iter().enumerate() {
            if v >= nv {
                return Err(Error::Parse {
                    location: format!("cells[{c}][{j}]"),
                    message: format!("dangling vertex index {v} ({nv} vertices)"),
                });
            }
        }
    }
    let vertices = file.vertices.iter().map(|p| Point2::new(p[0], p[1])).collect();
    PolyMesh::new(vertices, file.cells)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    read_mesh_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{MeshFamily, MeshSpec};

    #[test]
    fn round_trip_preserves_everything() {
        let m = MeshSpec::new(MeshFamily::DistortedQuad, 3).generate().unwrap();
        let back = read_mesh_str(&write_mesh_string(&m)).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.faces, m.faces);
    }

    #[test]
    fn file_round_trip() {
        let m = MeshSpec::new(MeshFamily::Quad, 2).generate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        write_mesh(&m, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.n_interior_faces(), 4);
    }

    #[test]
    fn clockwise_cell_fails_validation() {
        let text = r#"{"dim": 2, "vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,3,2,1]]}"#;
        let err = read_mesh_str(text).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("negative orientation"));
    }

    #[test]
    fn dangling_index_is_a_parse_error() {
        let text = r#"{"dim": 2, "vertices": [[0,0],[1,0],[1,1]], "cells": [[0,1,7]]}"#;
        let err = read_mesh_str(text).unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "cells[0][2]"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let text = "{\"dim\": 2,\n \"vertices\": [[0,0],[1,0]\n";
        let err = read_mesh_str(text).unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location.starts_with("line")));
    }
}
