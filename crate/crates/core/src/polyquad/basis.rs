//! Element and face polynomial bases.
//!
//! Element functions are scaled monomials `((x - x_K) / h_K)^a ((y - y_K) / h_K)^b`
//! in graded order, orthonormalised in `L2(K)` by a Cholesky factor of their
//! Gram matrix. The graded order makes the first `dim P_d` functions an
//! orthonormal basis of `P_d(K)` for every `d` up to the basis degree.
//!
//! Face functions are Legendre polynomials in the face coordinate, scaled to
//! be `L2(F)`-orthonormal.

use nalgebra::{DMatrix, DVector, Point2, Vector2};

use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::mesh::ElementGeometry;

/// `dim P_k` in two dimensions; zero for negative degrees.
pub fn poly_dim(k: isize) -> usize {
    if k < 0 {
        0
    } else {
        let k = k as usize;
        (k + 1) * (k + 2) / 2
    }
}

pub(crate) fn exponents(k: usize) -> Vec<(i32, i32)> {
    let mut e = Vec::with_capacity(poly_dim(k as isize));
    for d in 0..=k as i32 {
        for b in 0..=d {
            e.push((d - b, b));
        }
    }
    e
}

/// Values and first derivatives of a basis at a list of points; rows are
/// points, columns are basis functions.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: DMatrix<f64>,
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
}

impl Tabulation {
    pub fn grad(&self, q: usize, j: usize) -> Vector2<f64> {
        Vector2::new(self.dx[(q, j)], self.dy[(q, j)])
    }
}

#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub degree: usize,
    pub center: Point2<f64>,
    pub scale: f64,
    exponents: Vec<(i32, i32)>,
    /// `phi_i = sum_j change[(i, j)] m_j`, lower triangular.
    change: DMatrix<f64>,
    /// Gram matrix of the raw scaled monomials.
    monomial_gram: DMatrix<f64>,
}

impl ElementBasis {
    /// Orthonormal basis of `P_degree(K)` with respect to `rule`.
    pub fn new(geom: &ElementGeometry, degree: usize, rule: &QuadratureRule) -> Result<Self> {
        if rule.degree < 2 * degree {
            return Err(Error::WeakQuadrature {
                have: rule.degree,
                need: 2 * degree,
            });
        }
        let exponents = exponents(degree);
        let n = exponents.len();
        let center = geom.star_center;
        let scale = geom.diameter;
        let mut gram = DMatrix::zeros(n, n);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let m = monomials(&exponents, center, scale, p);
            gram.ger(*w, &m, &m, 1.0);
        }
        let chol = gram.clone().cholesky().ok_or(Error::GramFactorization {
            cell: geom.cell_id,
            need: 2 * degree,
        })?;
        let l = chol.l();
        if (0..n).any(|i| l[(i, i)] <= 0.0 || !l[(i, i)].is_finite()) {
            return Err(Error::GramFactorization {
                cell: geom.cell_id,
                need: 2 * degree,
            });
        }
        let change = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::GramFactorization {
                cell: geom.cell_id,
                need: 2 * degree,
            })?;
        Ok(Self {
            degree,
            center,
            scale,
            exponents,
            change,
            monomial_gram: gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Ratio of extreme eigenvalues of the raw monomial Gram matrix.
    pub fn monomial_conditioning(&self) -> f64 {
        let ev = self.monomial_gram.clone().symmetric_eigenvalues();
        let max = ev.iter().cloned().fold(f64::MIN, f64::max);
        let min = ev.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    /// Coefficients of the orthonormal functions in the scaled monomials.
    pub fn change_of_basis(&self) -> &DMatrix<f64> {
        &self.change
    }

    pub fn exponents(&self) -> &[(i32, i32)] {
        &self.exponents
    }

    pub fn values(&self, p: &Point2<f64>) -> DVector<f64> {
        &self.change * monomials(&self.exponents, self.center, self.scale, p)
    }

    pub fn values_and_gradients(&self, p: &Point2<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let n = self.dim();
        let x = (p.x - self.center.x) / self.scale;
        let y = (p.y - self.center.y) / self.scale;
        let mut m = DVector::zeros(n);
        let mut mx = DVector::zeros(n);
        let mut my = DVector::zeros(n);
        for (i, &(a, b)) in self.exponents.iter().enumerate() {
            m[i] = x.powi(a) * y.powi(b);
            if a > 0 {
                mx[i] = a as f64 * x.powi(a - 1) * y.powi(b) / self.scale;
            }
            if b > 0 {
                my[i] = b as f64 * x.powi(a) * y.powi(b - 1) / self.scale;
            }
        }
        (&self.change * m, &self.change * mx, &self.change * my)
    }

    pub fn tabulate(&self, points: &[Point2<f64>]) -> Tabulation {
        let n = self.dim();
        let mut values = DMatrix::zeros(points.len(), n);
        let mut dx = DMatrix::zeros(points.len(), n);
        let mut dy = DMatrix::zeros(points.len(), n);
        for (q, p) in points.iter().enumerate() {
            let (v, gx, gy) = self.values_and_gradients(p);
            values.set_row(q, &v.transpose());
            dx.set_row(q, &gx.transpose());
            dy.set_row(q, &gy.transpose());
        }
        Tabulation { values, dx, dy }
    }
}

fn monomials(exponents: &[(i32, i32)], center: Point2<f64>, scale: f64, p: &Point2<f64>) -> DVector<f64> {
    let x = (p.x - center.x) / scale;
    let y = (p.y - center.y) / scale;
    DVector::from_iterator(exponents.len(), exponents.iter().map(|&(a, b)| x.powi(a) * y.powi(b)))
}

/// `L2(F)`-orthonormal Legendre basis of `P_k(F)` on every face of an element;
/// together these span `R_k(dK)`.
#[derive(Clone, Debug)]
pub struct FaceBasis {
    pub degree: usize,
    pub lengths: Vec<f64>,
}

impl FaceBasis {
    pub fn new(geom: &ElementGeometry, degree: usize) -> Self {
        Self {
            degree,
            lengths: geom.faces.iter().map(|f| f.length).collect(),
        }
    }

    pub fn dim_per_face(&self) -> usize {
        self.degree + 1
    }

    pub fn dim(&self) -> usize {
        self.dim_per_face() * self.lengths.len()
    }

    /// Values at reference coordinate `s in [-1, 1]` of face `f`.
    pub fn values(&self, f: usize, s: f64) -> DVector<f64> {
        face_values(self.degree, self.lengths[f], s)
    }
}

pub(crate) fn face_values(degree: usize, length: f64, s: f64) -> DVector<f64> {
    let p = super::quadrature::legendre_values(degree, s);
    DVector::from_iterator(
        degree + 1,
        p.iter()
            .enumerate()
            .map(|(j, v)| v * ((2 * j + 1) as f64 / length).sqrt()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{element_geometry, MeshFamily, MeshSpec, PolyMesh};
    use approx::assert_relative_eq;

    fn unit_square() -> ElementGeometry {
        let m = PolyMesh::single_cell(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        element_geometry(&m, 0).unwrap()
    }

    #[test]
    fn dims() {
        assert_eq!(poly_dim(-1), 0);
        assert_eq!(poly_dim(0), 1);
        assert_eq!(poly_dim(1), 3);
        assert_eq!(poly_dim(2), 6);
        assert_eq!(exponents(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn constant_on_unit_square() {
        let g = unit_square();
        let rule = QuadratureRule::element(&g, 4);
        let b = ElementBasis::new(&g, 0, &rule).unwrap();
        assert_eq!(b.dim(), 1);
        assert_relative_eq!(b.values(&Point2::new(0.3, 0.7))[0], 1.0, epsilon = 1e-14);
        let b1 = ElementBasis::new(&g, 1, &rule).unwrap();
        assert_eq!(b1.dim(), 3);
    }

    #[test]
    fn weak_rule_is_rejected() {
        let g = unit_square();
        let rule = QuadratureRule::element(&g, 2);
        assert!(matches!(
            ElementBasis::new(&g, 2, &rule),
            Err(Error::WeakQuadrature { need: 4, .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = unit_square();
        let rule = QuadratureRule::element(&g, 8);
        let b = ElementBasis::new(&g, 3, &rule).unwrap();
        let p = Point2::new(0.31, 0.62);
        let (_, gx, gy) = b.values_and_gradients(&p);
        let e = 1e-6;
        let fx = (b.values(&Point2::new(p.x + e, p.y)) - b.values(&Point2::new(p.x - e, p.y))) / (2.0 * e);
        let fy = (b.values(&Point2::new(p.x, p.y + e)) - b.values(&Point2::new(p.x, p.y - e))) / (2.0 * e);
        for i in 0..b.dim() {
            assert_relative_eq!(gx[i], fx[i], epsilon = 1e-6);
            assert_relative_eq!(gy[i], fy[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn gram_is_identity_under_an_independent_rule() {
        let m = MeshSpec::new(MeshFamily::DistortedQuad, 4).generate().unwrap();
        for c in [0, 5, 10, 15] {
            let g = element_geometry(&m, c).unwrap();
            let b = ElementBasis::new(&g, 2, &QuadratureRule::element(&g, 4)).unwrap();
            let check = QuadratureRule::element(&g, 11);
            let t = b.tabulate(&check.points);
            let w = DMatrix::from_diagonal(&DVector::from_vec(check.weights.clone()));
            let gram = t.values.transpose() * w * &t.values;
            assert!((gram - DMatrix::identity(6, 6)).abs().max() < 1e-10);
        }
    }

    #[test]
    fn face_basis_is_orthonormal() {
        let g = unit_square();
        let fb = FaceBasis::new(&g, 3);
        let (x, w) = super::super::quadrature::gauss_legendre(6);
        for f in 0..g.n_faces() {
            let mut mass = DMatrix::zeros(4, 4);
            for (s, wi) in x.iter().zip(&w) {
                let v = fb.values(f, *s);
                mass.ger(0.5 * wi * fb.lengths[f], &v, &v, 1.0);
            }
            assert!((mass - DMatrix::identity(4, 4)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn conditioning_is_scale_invariant() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.1),
            Point2::new(1.2, 0.9),
            Point2::new(0.4, 1.3),
            Point2::new(-0.2, 0.6),
        ];
        let small: Vec<_> = pts.iter().map(|p| Point2::new(1e-3 * p.x + 5.0, 1e-3 * p.y - 2.0)).collect();
        let cond = |pts: Vec<Point2<f64>>| {
            let g = element_geometry(&PolyMesh::single_cell(pts).unwrap(), 0).unwrap();
            ElementBasis::new(&g, 3, &QuadratureRule::element(&g, 8))
                .unwrap()
                .monomial_conditioning()
        };
        let (a, b) = (cond(pts), cond(small));
        assert!(((a - b) / a).abs() < 0.01, "{a} vs {b}");
    }
}
