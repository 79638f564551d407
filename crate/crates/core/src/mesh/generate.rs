//! Structured test-mesh factory and refinement sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{element_geometry, PolyMesh};
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFamily {
    Quad,
    Triangle,
    DistortedQuad,
    /// Honeycomb-like brick pattern: hexagons in the interior, pentagons and
    /// quadrilaterals along the boundary.
    Hexagon,
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MeshFamily::Quad => "quad",
            MeshFamily::Triangle => "triangle",
            MeshFamily::DistortedQuad => "distorted-quad",
            MeshFamily::Hexagon => "hexagon",
        };
        f.write_str(s)
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" => Ok(MeshFamily::Quad),
            "triangle" => Ok(MeshFamily::Triangle),
            "distorted-quad" => Ok(MeshFamily::DistortedQuad),
            "hexagon" | "hexagon-ish" => Ok(MeshFamily::Hexagon),
            other => Err(Error::Input(format!("unknown mesh family '{other}'"))),
        }
    }
}

/// Everything needed to regenerate a structured mesh at any resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub family: MeshFamily,
    pub seed: u64,
    /// Vertex jitter as a fraction of the cell width (distorted-quad), or
    /// zig-zag amplitude as a fraction of the row height (hexagon).
    pub distortion: f64,
}

impl MeshSpec {
    pub fn new(family: MeshFamily, n: usize) -> Self {
        let distortion = match family {
            MeshFamily::Hexagon => 0.25,
            _ => 0.2,
        };
        Self {
            domain: Rect::UNIT,
            nx: n,
            ny: n,
            family,
            seed: 7,
            distortion,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_distortion(mut self, distortion: f64) -> Self {
        self.distortion = distortion;
        self
    }

    pub fn refined(&self, level: usize) -> Self {
        Self {
            nx: self.nx << level,
            ny: self.ny << level,
            ..*self
        }
    }

    pub fn generate(&self) -> Result<PolyMesh> {
        generate_with(self)
    }
}

/// Structured mesh of `domain` with `nx x ny` base cells of `family`,
/// using the default seed and distortion.
pub fn generate_structured(domain: Rect, nx: usize, ny: usize, family: MeshFamily) -> Result<PolyMesh> {
    MeshSpec {
        domain,
        nx,
        ny,
        ..MeshSpec::new(family, 1)
    }
    .generate()
}

/// `levels` meshes, each at twice the resolution of the previous one.
pub fn refine_sequence(base: &MeshSpec, levels: usize) -> Result<Vec<PolyMesh>> {
    if levels < 2 {
        return Err(Error::Input(format!(
            "a refinement sequence needs at least 2 levels, got {levels}"
        )));
    }
    (0..levels).map(|l| base.refined(l).generate()).collect()
}

fn generate_with(spec: &MeshSpec) -> Result<PolyMesh> {
    let MeshSpec { domain, nx, ny, .. } = *spec;
    if nx == 0 || ny == 0 {
        return Err(Error::Input(format!("nx and ny must be >= 1 (got {nx} x {ny})")));
    }
    if domain.x1 <= domain.x0 || domain.y1 <= domain.y0 {
        return Err(Error::Input("empty domain rectangle".into()));
    }
    if !(0.0..0.5).contains(&spec.distortion) {
        return Err(Error::Input(format!(
            "distortion {} must lie in [0, 0.5)",
            spec.distortion
        )));
    }
    let (vertices, cells) = match spec.family {
        MeshFamily::Quad => grid_quads(spec, false),
        MeshFamily::DistortedQuad => grid_quads(spec, true),
        MeshFamily::Triangle => grid_triangles(spec),
        MeshFamily::Hexagon => bricks(spec),
    };
    let mesh = PolyMesh::new(vertices, cells)?;
    for c in 0..mesh.n_cells() {
        let g = element_geometry(&mesh, c)?;
        if let Some((t, &a)) = g
            .fan_areas()
            .iter()
            .enumerate()
            .find(|(_, a)| **a <= 0.0)
        {
            return Err(Error::DegenerateCell {
                cell: c,
                triangle: t,
                area: a,
            });
        }
    }
    Ok(mesh)
}

fn grid_points(spec: &MeshSpec, jitter: bool) -> Vec<Point2<f64>> {
    let MeshSpec { domain, nx, ny, .. } = *spec;
    let hx = (domain.x1 - domain.x0) / nx as f64;
    let hy = (domain.y1 - domain.y0) / ny as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let mut p = Point2::new(domain.x0 + i as f64 * hx, domain.y0 + j as f64 * hy);
            if jitter && i > 0 && i < nx && j > 0 && j < ny {
                let dx: f64 = rng.random_range(-1.0..1.0);
                let dy: f64 = rng.random_range(-1.0..1.0);
                p.x += spec.distortion * hx * dx;
                p.y += spec.distortion * hy * dy;
            }
            pts.push(p);
        }
    }
    pts
}

fn grid_quads(spec: &MeshSpec, jitter: bool) -> (Vec<Point2<f64>>, Vec<Vec<usize>>) {
    let (nx, ny) = (spec.nx, spec.ny);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let cells = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
        .collect();
    (grid_points(spec, jitter), cells)
}

fn grid_triangles(spec: &MeshSpec) -> (Vec<Point2<f64>>, Vec<Vec<usize>>) {
    let (nx, ny) = (spec.nx, spec.ny);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (grid_points(spec, false), cells)
}

// Rows of bricks, every other row shifted by half a brick. Horizontal lines
// carry a vertex every half brick; interior lines zig-zag so that each brick
// becomes a convex hexagon.
fn bricks(spec: &MeshSpec) -> (Vec<Point2<f64>>, Vec<Vec<usize>>) {
    let MeshSpec { domain, nx, ny, .. } = *spec;
    let half = (domain.x1 - domain.x0) / (2 * nx) as f64;
    let hy = (domain.y1 - domain.y0) / ny as f64;
    let amp = spec.distortion * hy;
    // parity of the brick-middle positions in row r
    let mid_parity = |r: usize| usize::from(r.is_multiple_of(2));

    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut pts: Vec<Point2<f64>> = Vec::new();
    let mut vertex = |m: usize, j: usize| -> usize {
        *index.entry((m, j)).or_insert_with(|| {
            let mut y = domain.y0 + j as f64 * hy;
            if j > 0 && j < ny {
                y += if m % 2 == mid_parity(j - 1) { amp } else { -amp };
            }
            pts.push(Point2::new(domain.x0 + m as f64 * half, y));
            pts.len() - 1
        })
    };

    let mut cells = Vec::new();
    for r in 0..ny {
        // (left, right) corner positions of the bricks in this row
        let mut spans = Vec::new();
        if r % 2 == 0 {
            spans.extend((0..nx).map(|i| (2 * i, 2 * i + 2)));
        } else {
            spans.push((0, 1));
            spans.extend((0..nx - 1).map(|i| (2 * i + 1, 2 * i + 3)));
            spans.push((2 * nx - 1, 2 * nx));
        }
        for (a, b) in spans {
            let mut cell = Vec::with_capacity(6);
            for m in a..=b {
                if m == a || m == b || r > 0 {
                    cell.push(vertex(m, r));
                }
            }
            for m in (a..=b).rev() {
                if m == a || m == b || r + 1 < ny {
                    cell.push(vertex(m, r + 1));
                }
            }
            cells.push(cell);
        }
    }
    (pts, cells)
}

/// Single-cell mesh on a random polygon with `n` vertices, star-shaped with
/// respect to `center`: sorted jittered angles, radii in `[0.55, 1] * radius`.
pub fn random_star_polygon(n: usize, center: Point2<f64>, radius: f64, seed: u64) -> Result<PolyMesh> {
    if n < 3 || !(radius > 0.0) {
        return Err(Error::Input(format!(
            "random polygon needs n >= 3 and radius > 0, got n = {n}, radius = {radius}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let phase = rng.random::<f64>() * step;
    let pts = (0..n)
        .map(|i| {
            let t = phase + step * (i as f64 + 0.2 * rng.random_range(-1.0..1.0));
            let r = radius * rng.random_range(0.55..1.0);
            Point2::new(center.x + r * t.cos(), center.y + r * t.sin())
        })
        .collect();
    PolyMesh::single_cell(pts)
}
