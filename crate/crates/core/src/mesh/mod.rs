//! Polygonal meshes in two dimensions.
//!
//! A [`PolyMesh`] stores vertices and counter-clockwise vertex loops. Faces
//! (edges) are derived on construction together with their cell incidence.
//! Every face carries a global orientation: the direction in which its
//! first incident cell traverses it. Face bases are parametrised along that
//! direction so neighbouring cells agree on the trace unknowns.

mod generate;
mod geometry;
mod io;

pub use generate::{generate_structured, random_star_polygon, refine_sequence, MeshFamily, MeshSpec, Rect};
pub use geometry::{element_geometry, ElementGeometry, FaceGeometry, ShapeRegularityReport};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};

use std::collections::HashMap;

use nalgebra::Point2;

use crate::error::{Error, Result};

/// A mesh face with its incident cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    /// Endpoints in the global orientation of the face.
    pub vertices: [usize; 2],
    /// `(cell, local face index)` of the cell that traverses the face from
    /// `vertices[0]` to `vertices[1]`.
    pub first: (usize, usize),
    /// The neighbouring cell, absent on the boundary.
    pub second: Option<(usize, usize)>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct PolyMesh {
    pub dim: usize,
    pub vertices: Vec<Point2<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
    /// `cell_faces[c][j]` is the global face of the edge from local vertex
    /// `j` to `j + 1`.
    pub cell_faces: Vec<Vec<usize>>,
    pub boundary_flags: Vec<bool>,
}

pub(crate) fn signed_area(pts: &[Point2<f64>]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

fn segments_intersect(p1: Point2<f64>, p2: Point2<f64>, q1: Point2<f64>, q2: Point2<f64>) -> bool {
    let orient = |a: Point2<f64>, b: Point2<f64>, c: Point2<f64>| (b - a).perp(&(c - a));
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

impl PolyMesh {
    /// Builds a mesh from vertices and CCW cells, deriving the faces and
    /// checking the topological invariants.
    pub fn new(vertices: Vec<Point2<f64>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::Validation(format!(
                    "cell {c}: needs at least 3 vertices, has {}",
                    cell.len()
                )));
            }
            for &v in cell {
                if v >= nv {
                    return Err(Error::Validation(format!(
                        "cell {c}: vertex index {v} out of range ({nv} vertices)"
                    )));
                }
                used[v] = true;
            }
            let pts: Vec<_> = cell.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&pts);
            if area <= 0.0 {
                return Err(Error::Validation(format!(
                    "cell {c}: negative orientation (signed area {area:e})"
                )));
            }
            let n = pts.len();
            for i in 0..n {
                for j in i + 2..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                        return Err(Error::Validation(format!(
                            "cell {c}: polygon is not simple (edges {i} and {j} cross)"
                        )));
                    }
                }
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Validation(format!("vertex {v} is not used by any cell")));
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_faces = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut local = Vec::with_capacity(n);
            for j in 0..n {
                let a = cell[j];
                let b = cell[(j + 1) % n];
                if a == b {
                    return Err(Error::Validation(format!("cell {c}: repeated vertex {a}")));
                }
                if lookup.contains_key(&(a, b)) {
                    return Err(Error::Validation(format!(
                        "edge ({a}, {b}) traversed twice in the same direction (cell {c})"
                    )));
                }
                if let Some(&f) = lookup.get(&(b, a)) {
                    if faces[f].second.is_some() {
                        return Err(Error::Validation(format!(
                            "edge ({a}, {b}) shared by more than two cells"
                        )));
                    }
                    faces[f].second = Some((c, j));
                    lookup.insert((a, b), f);
                    local.push(f);
                } else {
                    let f = faces.len();
                    faces.push(Face {
                        vertices: [a, b],
                        first: (c, j),
                        second: None,
                    });
                    lookup.insert((a, b), f);
                    local.push(f);
                }
            }
            cell_faces.push(local);
        }
        let boundary_flags = faces.iter().map(Face::is_boundary).collect();
        Ok(Self {
            dim: 2,
            vertices,
            cells,
            faces,
            cell_faces,
            boundary_flags,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.boundary_flags.iter().filter(|b| !**b).count()
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point2<f64>> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        signed_area(&self.cell_points(cell))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn max_face_count(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// All element geometries, in cell order.
    pub fn geometries(&self) -> Result<Vec<ElementGeometry>> {
        (0..self.n_cells()).map(|c| element_geometry(self, c)).collect()
    }

    /// Maximum element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| geometry::diameter(&self.cell_points(c)))
            .fold(0.0, f64::max)
    }

    /// A mesh made of a single polygon.
    pub fn single_cell(points: Vec<Point2<f64>>) -> Result<Self> {
        let cells = vec![(0..points.len()).collect()];
        Self::new(points, cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point2<f64>> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let mut pts = square();
        pts.reverse();
        let err = PolyMesh::single_cell(pts).unwrap_err();
        assert!(err.to_string().contains("negative orientation"), "{err}");
    }

    #[test]
    fn bow_tie_is_rejected() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(-1.0, 0.5),
        ];
        assert!(PolyMesh::single_cell(pts).is_err());
    }

    #[test]
    fn two_cells_share_one_face() {
        let mut pts = square();
        pts.push(Point2::new(2.0, 0.0));
        pts.push(Point2::new(2.0, 1.0));
        let mesh = PolyMesh::new(pts, vec![vec![0, 1, 2, 3], vec![1, 4, 5, 2]]).unwrap();
        assert_eq!(mesh.n_faces(), 7);
        assert_eq!(mesh.n_interior_faces(), 1);
        let shared = mesh.cell_faces[0][1];
        assert_eq!(mesh.cell_faces[1][3], shared);
        assert_eq!(mesh.faces[shared].first, (0, 1));
        assert_eq!(mesh.faces[shared].second, Some((1, 3)));
    }

    #[test]
    fn unused_vertex_is_rejected() {
        let mut pts = square();
        pts.push(Point2::new(5.0, 5.0));
        assert!(PolyMesh::new(pts, vec![vec![0, 1, 2, 3]]).is_err());
    }
}
