use nalgebra::{Point2, Vector2};

use super::{signed_area, PolyMesh};
use crate::error::{Error, Result};

/// One face of an element as seen from that element.
#[derive(Clone, Debug)]
pub struct FaceGeometry {
    /// Global face index.
    pub global: usize,
    /// Start and end point in the face's global orientation.
    pub start: Point2<f64>,
    pub end: Point2<f64>,
    /// Outward unit normal with respect to this element.
    pub normal: Vector2<f64>,
    pub length: f64,
    pub on_boundary: bool,
}

impl FaceGeometry {
    pub fn point_at(&self, t: f64) -> Point2<f64> {
        self.start + (self.end - self.start) * t
    }

    pub fn midpoint(&self) -> Point2<f64> {
        self.point_at(0.5)
    }
}

/// Geometric data of one polygonal element.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    pub cell_id: usize,
    pub dim: usize,
    pub vertices: Vec<Point2<f64>>,
    pub star_center: Point2<f64>,
    /// Fan triangulation from `star_center`, one triangle per face.
    pub simplices: Vec<[Point2<f64>; 3]>,
    pub diameter: f64,
    /// Inscribed-ball radius about `star_center`.
    pub rho: f64,
    pub area: f64,
    pub faces: Vec<FaceGeometry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeRegularityReport {
    pub gamma_chunkiness: f64,
    pub gamma_simplex: f64,
    pub gamma_faceratio: f64,
    pub gamma_k: f64,
}

pub(crate) fn diameter(pts: &[Point2<f64>]) -> f64 {
    let mut h: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            h = h.max((b - a).norm());
        }
    }
    h
}

fn point_segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn fan_areas(center: Point2<f64>, pts: &[Point2<f64>]) -> Vec<f64> {
    let n = pts.len();
    (0..n)
        .map(|i| signed_area(&[center, pts[i], pts[(i + 1) % n]]))
        .collect()
}

fn min_edge_distance(p: Point2<f64>, pts: &[Point2<f64>]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| point_segment_distance(p, pts[i], pts[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Area-weighted centroid of a simple polygon.
pub(crate) fn centroid(pts: &[Point2<f64>]) -> Point2<f64> {
    let n = pts.len();
    let mut a = 0.0;
    let mut c = Vector2::zeros();
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let cross = p.x * q.y - q.x * p.y;
        a += cross;
        c += (p.coords + q.coords) * cross;
    }
    Point2::from(c / (3.0 * a))
}

fn admissible(center: Point2<f64>, pts: &[Point2<f64>], scale: f64) -> bool {
    let tol = 1e-12 * scale * scale;
    fan_areas(center, pts).iter().all(|&a| a > tol)
}

// Max-min distance to the edges over a grid of admissible candidates.
fn grid_search_center(pts: &[Point2<f64>], scale: f64) -> Option<Point2<f64>> {
    const N: usize = 64;
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut best: Option<(f64, Point2<f64>)> = None;
    for i in 1..N {
        for j in 1..N {
            let p = Point2::new(
                lo.x + (hi.x - lo.x) * i as f64 / N as f64,
                lo.y + (hi.y - lo.y) * j as f64 / N as f64,
            );
            if !admissible(p, pts, scale) {
                continue;
            }
            let d = min_edge_distance(p, pts);
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, p));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Geometry of `cell`: star center, fan simplices, faces and size measures.
///
/// The star center is the centroid when every fan triangle from it has
/// positive area, otherwise the best point of a grid search maximising the
/// distance to the boundary among admissible points.
pub fn element_geometry(mesh: &PolyMesh, cell: usize) -> Result<ElementGeometry> {
    if cell >= mesh.n_cells() {
        return Err(Error::Input(format!(
            "cell id {cell} out of range ({} cells)",
            mesh.n_cells()
        )));
    }
    let pts = mesh.cell_points(cell);
    let n = pts.len();
    let h = diameter(&pts);
    let c0 = centroid(&pts);
    let center = if admissible(c0, &pts, h) {
        c0
    } else {
        grid_search_center(&pts, h).ok_or(Error::NotStarShaped(cell))?
    };

    let simplices: Vec<[Point2<f64>; 3]> =
        (0..n).map(|i| [center, pts[i], pts[(i + 1) % n]]).collect();

    let faces = (0..n)
        .map(|j| {
            let a = pts[j];
            let b = pts[(j + 1) % n];
            let t = b - a;
            let length = t.norm();
            let normal = Vector2::new(t.y, -t.x) / length;
            let global = mesh.cell_faces[cell][j];
            let face = &mesh.faces[global];
            let (start, end) = if face.first == (cell, j) { (a, b) } else { (b, a) };
            FaceGeometry {
                global,
                start,
                end,
                normal,
                length,
                on_boundary: face.is_boundary(),
            }
        })
        .collect();

    Ok(ElementGeometry {
        cell_id: cell,
        dim: mesh.dim,
        area: signed_area(&pts),
        rho: min_edge_distance(center, &pts),
        vertices: pts,
        star_center: center,
        simplices,
        diameter: h,
        faces,
    })
}

impl ElementGeometry {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn fan_areas(&self) -> Vec<f64> {
        fan_areas(self.star_center, &self.vertices)
    }

    pub fn shape_regularity(&self) -> ShapeRegularityReport {
        let gamma_chunkiness = self.diameter / self.rho;
        let gamma_simplex = self
            .simplices
            .iter()
            .map(|t| {
                let e = [(t[1] - t[0]).norm(), (t[2] - t[1]).norm(), (t[0] - t[2]).norm()];
                let h_t = e[0].max(e[1]).max(e[2]);
                let inradius = 2.0 * signed_area(t) / (e[0] + e[1] + e[2]);
                h_t / inradius
            })
            .fold(0.0, f64::max);
        let (lmin, lmax) = self
            .faces
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), f| (lo.min(f.length), hi.max(f.length)));
        let gamma_faceratio = lmax / lmin;
        ShapeRegularityReport {
            gamma_chunkiness,
            gamma_simplex,
            gamma_faceratio,
            gamma_k: gamma_chunkiness.max(gamma_simplex).max(gamma_faceratio),
        }
    }
}
