//! Polynomial spaces, quadrature and `L2` projections on polygonal elements.
//!
//! [`LocalSpaces`] bundles, for one element and flux degree `k`, the
//! quadrature rules, the orthonormal basis of `P_{k+1}(K)` (whose leading
//! `dim P_k` functions span `P_k(K)`), the face basis of `R_k(dK)`, and
//! the basis tabulated at every quadrature point.
//!
//! Vector-valued functions in `P_d(K)^2` are stored as `[x-block; y-block]`
//! coefficient vectors of length `2 dim P_d`. Trace functions in `R_k(dK)`
//! are stored face after face, `k + 1` coefficients per face, in the local
//! face order of the element.

mod basis;
mod matrices;
mod quadrature;

pub use basis::{poly_dim, ElementBasis, FaceBasis, Tabulation};
pub use matrices::{mass_and_mixed_matrices, MixedMatrices};
pub use quadrature::{
    default_exactness, gauss_legendre, legendre_values, ElementQuadrature, FaceRule, QuadratureRule,
};

use nalgebra::{DMatrix, DVector, Point2, Vector2};

use crate::error::Result;
use crate::mesh::{ElementGeometry, FaceGeometry};

#[derive(Clone, Debug)]
pub struct LocalSpaces {
    pub geom: ElementGeometry,
    /// Flux and trace degree; the primal degree is `k + 1`.
    pub k: usize,
    pub quad: ElementQuadrature,
    pub basis: ElementBasis,
    pub faces: FaceBasis,
    /// Element basis at the volume quadrature points.
    pub vol: Tabulation,
    /// Element basis at each face's quadrature points.
    pub face_tabs: Vec<Tabulation>,
    /// Face basis at each face's quadrature points (points x `k + 1`).
    pub face_psi: Vec<DMatrix<f64>>,
}

impl LocalSpaces {
    pub fn new(geom: &ElementGeometry, k: usize, exactness: usize) -> Result<Self> {
        Self::with_primal_degree(geom, k, k + 1, exactness)
    }

    /// Spaces whose element basis has degree `primal` (at least `k`).
    pub fn with_primal_degree(geom: &ElementGeometry, k: usize, primal: usize, exactness: usize) -> Result<Self> {
        let quad = ElementQuadrature::new(geom, exactness);
        let basis = ElementBasis::new(geom, primal.max(k), &quad.volume)?;
        let vol = basis.tabulate(&quad.volume.points);
        let face_tabs = quad.faces.iter().map(|r| basis.tabulate(&r.points)).collect();
        let faces = FaceBasis::new(geom, k);
        let face_psi = quad
            .faces
            .iter()
            .enumerate()
            .map(|(f, r)| {
                let mut m = DMatrix::zeros(r.params.len(), k + 1);
                for (q, &s) in r.params.iter().enumerate() {
                    m.set_row(q, &faces.values(f, s).transpose());
                }
                m
            })
            .collect();
        Ok(Self {
            geom: geom.clone(),
            k,
            quad,
            basis,
            faces,
            vol,
            face_tabs,
            face_psi,
        })
    }

    pub fn n_flux_scalar(&self) -> usize {
        poly_dim(self.k as isize)
    }

    pub fn n_flux(&self) -> usize {
        2 * self.n_flux_scalar()
    }

    pub fn n_primal(&self) -> usize {
        poly_dim(self.k as isize + 1).min(self.basis.dim())
    }

    pub fn n_face(&self) -> usize {
        self.k + 1
    }

    pub fn n_trace(&self) -> usize {
        self.n_face() * self.geom.n_faces()
    }

    pub fn n_faces(&self) -> usize {
        self.geom.n_faces()
    }

    /// Coefficients of `Pi_degree f` in the orthonormal basis.
    pub fn l2_project_scalar(&self, f: impl Fn(&Point2<f64>) -> f64, degree: usize) -> DVector<f64> {
        let n = poly_dim(degree as isize);
        assert!(n <= self.basis.dim(), "degree {degree} exceeds the element basis");
        let rule = &self.quad.volume;
        let mut c = DVector::zeros(n);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let fw = w * f(p);
            for i in 0..n {
                c[i] += fw * self.vol.values[(q, i)];
            }
        }
        c
    }

    /// Coefficients of the vector projection onto `P_degree(K)^2`.
    pub fn l2_project_vector(&self, f: impl Fn(&Point2<f64>) -> Vector2<f64>, degree: usize) -> DVector<f64> {
        let n = poly_dim(degree as isize);
        assert!(n <= self.basis.dim(), "degree {degree} exceeds the element basis");
        let rule = &self.quad.volume;
        let mut c = DVector::zeros(2 * n);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(p) * *w;
            for i in 0..n {
                let phi = self.vol.values[(q, i)];
                c[i] += v.x * phi;
                c[n + i] += v.y * phi;
            }
        }
        c
    }

    /// `P_M f`: face-wise projection onto `R_k(dK)`.
    pub fn l2_project_face(&self, f: impl Fn(&Point2<f64>, &FaceGeometry) -> f64) -> DVector<f64> {
        let nf = self.n_face();
        let mut c = DVector::zeros(self.n_trace());
        for (fi, (rule, face)) in self.quad.faces.iter().zip(&self.geom.faces).enumerate() {
            let psi = &self.face_psi[fi];
            for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let fw = w * f(p, face);
                for m in 0..nf {
                    c[fi * nf + m] += fw * psi[(q, m)];
                }
            }
        }
        c
    }

    /// Values of a scalar element polynomial at the volume quadrature points.
    pub fn scalar_at_volume(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        self.vol.values.columns(0, coeffs.len()) * coeffs
    }

    pub fn scalar_at_face(&self, f: usize, coeffs: &DVector<f64>) -> DVector<f64> {
        self.face_tabs[f].values.columns(0, coeffs.len()) * coeffs
    }

    /// Vector element polynomial at the volume quadrature points.
    pub fn vector_at_volume(&self, coeffs: &DVector<f64>) -> Vec<Vector2<f64>> {
        let n = coeffs.len() / 2;
        let x = self.vol.values.columns(0, n) * coeffs.rows(0, n);
        let y = self.vol.values.columns(0, n) * coeffs.rows(n, n);
        x.iter().zip(y.iter()).map(|(a, b)| Vector2::new(*a, *b)).collect()
    }

    pub fn vector_at_face(&self, f: usize, coeffs: &DVector<f64>) -> Vec<Vector2<f64>> {
        let n = coeffs.len() / 2;
        let t = &self.face_tabs[f].values;
        let x = t.columns(0, n) * coeffs.rows(0, n);
        let y = t.columns(0, n) * coeffs.rows(n, n);
        x.iter().zip(y.iter()).map(|(a, b)| Vector2::new(*a, *b)).collect()
    }

    /// Divergence of a vector element polynomial at the volume points.
    pub fn divergence_at_volume(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let n = coeffs.len() / 2;
        self.vol.dx.columns(0, n) * coeffs.rows(0, n) + self.vol.dy.columns(0, n) * coeffs.rows(n, n)
    }

    /// Trace function values on face `f` at its quadrature points.
    pub fn trace_at_face(&self, f: usize, trace: &DVector<f64>) -> DVector<f64> {
        let nf = self.n_face();
        &self.face_psi[f] * trace.rows(f * nf, nf)
    }

    pub fn eval_scalar(&self, coeffs: &DVector<f64>, p: &Point2<f64>) -> f64 {
        self.basis.values(p).rows(0, coeffs.len()).dot(coeffs)
    }

    pub fn eval_vector(&self, coeffs: &DVector<f64>, p: &Point2<f64>) -> Vector2<f64> {
        let n = coeffs.len() / 2;
        let v = self.basis.values(p);
        Vector2::new(v.rows(0, n).dot(&coeffs.rows(0, n)), v.rows(0, n).dot(&coeffs.rows(n, n)))
    }

    /// `(a, b)_dK` for two trace functions.
    pub fn trace_inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(b)
    }

    /// `||f - g||_K^2` for `g` an element polynomial, by quadrature.
    pub fn scalar_error_sq(&self, f: impl Fn(&Point2<f64>) -> f64, coeffs: &DVector<f64>) -> f64 {
        let v = self.scalar_at_volume(coeffs);
        let rule = &self.quad.volume;
        rule.points
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(q, (p, w))| w * (f(p) - v[q]).powi(2))
            .sum()
    }

    pub fn vector_error_sq(&self, f: impl Fn(&Point2<f64>) -> Vector2<f64>, coeffs: &DVector<f64>) -> f64 {
        let v = self.vector_at_volume(coeffs);
        let rule = &self.quad.volume;
        rule.points
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(q, (p, w))| w * (f(p) - v[q]).norm_squared())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{element_geometry, PolyMesh};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square_spaces(k: usize) -> LocalSpaces {
        let m = PolyMesh::single_cell(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        LocalSpaces::new(&element_geometry(&m, 0).unwrap(), k, default_exactness(k)).unwrap()
    }

    #[test]
    fn projection_of_x_squared_onto_linears() {
        // normal equations on [0,1]^2: Pi_1 x^2 = x - 1/6
        let sp = square_spaces(0);
        let c = sp.l2_project_scalar(|p| p.x * p.x, 1);
        for p in [Point2::new(0.1, 0.2), Point2::new(0.7, 0.9), Point2::new(0.5, 0.5)] {
            assert_relative_eq!(sp.eval_scalar(&c, &p), p.x - 1.0 / 6.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn projection_reproduces_polynomials_and_is_idempotent() {
        let sp = square_spaces(1);
        let f = |p: &Point2<f64>| 1.0 - 2.0 * p.x + 0.5 * p.x * p.y + 3.0 * p.y * p.y;
        let c = sp.l2_project_scalar(f, 2);
        for p in [Point2::new(0.13, 0.77), Point2::new(0.9, 0.05)] {
            assert_relative_eq!(sp.eval_scalar(&c, &p), f(&p), epsilon = 1e-12);
        }
        let g = |p: &Point2<f64>| (PI * p.x).sin() * p.y.exp();
        let c1 = sp.l2_project_scalar(g, 2);
        let c2 = sp.l2_project_scalar(|p| sp.eval_scalar(&c1, p), 2);
        assert!((c1 - c2).abs().max() < 1e-13);
    }

    #[test]
    fn projection_residual_is_orthogonal() {
        let sp = square_spaces(1);
        let f = |p: &Point2<f64>| (PI * p.x).sin();
        let c = sp.l2_project_scalar(f, 2);
        let rule = &sp.quad.volume;
        for j in 0..sp.n_primal() {
            let r: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .enumerate()
                .map(|(q, (p, w))| w * (f(p) - sp.scalar_at_volume(&c)[q]) * sp.vol.values[(q, j)])
                .sum();
            assert!(r.abs() < 1e-11);
        }
    }

    #[test]
    fn face_projection_of_cubic_on_an_edge() {
        // bottom edge y = 0, f = x^3, k = 1: best line on [0,1] is
        // argmin ||x^3 - a - b x||: normal equations give a = -1/5, b = 9/10.
        let sp = square_spaces(1);
        let c = sp.l2_project_face(|p, _| p.x.powi(3));
        let f0 = &sp.geom.faces[0];
        assert!(f0.start.y.abs() < 1e-15 && f0.end.y.abs() < 1e-15);
        for t in [0.1, 0.4, 0.8] {
            let p = f0.point_at(t);
            let s = 2.0 * t - 1.0;
            let v = sp.faces.values(0, s).dot(&c.rows(0, 2));
            assert_relative_eq!(v, -0.2 + 0.9 * p.x, epsilon = 1e-13);
        }
    }

    #[test]
    fn face_projection_keeps_constants_and_flux_traces() {
        let sp = square_spaces(1);
        let c = sp.l2_project_face(|_, _| 2.5);
        for f in 0..sp.n_faces() {
            let v = sp.trace_at_face(f, &c);
            assert!(v.iter().all(|x| (x - 2.5).abs() < 1e-13));
        }
        let q = |p: &Point2<f64>| Vector2::new(1.0 + p.y, 2.0 * p.x - p.y);
        let c = sp.l2_project_face(|p, face| q(p).dot(&face.normal));
        for (f, (rule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
            let v = sp.trace_at_face(f, &c);
            for (i, p) in rule.points.iter().enumerate() {
                assert_relative_eq!(v[i], q(p).dot(&face.normal), epsilon = 1e-13);
            }
        }
    }
}
