use nalgebra::Point2;

use crate::mesh::{ElementGeometry, FaceGeometry};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one Gauss point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Legendre polynomials `P_0..=P_n` at `s`.
pub fn legendre_values(n: usize, s: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(1.0);
    if n >= 1 {
        v.push(s);
    }
    for j in 2..=n {
        let p = ((2 * j - 1) as f64 * s * v[j - 1] - (j - 1) as f64 * v[j - 2]) / j as f64;
        v.push(p);
    }
    v
}

/// A point/weight rule on a planar region.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point2<f64>>,
    pub weights: Vec<f64>,
    /// Polynomial exactness.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point2<f64>) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// Collapsed (Duffy) tensor Gauss rule on a triangle, exact for `degree`.
    pub fn triangle(tri: &[Point2<f64>; 3], degree: usize) -> Self {
        // the collapse adds one degree in the first direction
        let n = (degree + 3) / 2;
        let (x, w) = gauss_legendre(n);
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[0];
        let jac = e1.perp(&e2).abs();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let s = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let t = 0.5 * (x[j] + 1.0);
                let xi = s;
                let eta = t * (1.0 - s);
                points.push(tri[0] + e1 * xi + e2 * eta);
                weights.push(0.25 * w[i] * w[j] * (1.0 - s) * jac);
            }
        }
        Self {
            points,
            weights,
            degree,
        }
    }

    /// Union of triangle rules over the element's fan simplices.
    pub fn element(geom: &ElementGeometry, degree: usize) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for t in &geom.simplices {
            let r = Self::triangle(t, degree);
            points.extend(r.points);
            weights.extend(r.weights);
        }
        Self {
            points,
            weights,
            degree,
        }
    }
}

/// Gauss-Legendre rule on one face.
#[derive(Clone, Debug)]
pub struct FaceRule {
    pub points: Vec<Point2<f64>>,
    pub weights: Vec<f64>,
    /// Reference coordinate in `[-1, 1]` along the face's global orientation.
    pub params: Vec<f64>,
}

impl FaceRule {
    pub fn new(face: &FaceGeometry, degree: usize) -> Self {
        let (x, w) = gauss_legendre(degree / 2 + 1);
        let points = x.iter().map(|&s| face.point_at(0.5 * (s + 1.0))).collect();
        let weights = w.iter().map(|wi| 0.5 * wi * face.length).collect();
        Self {
            points,
            weights,
            params: x,
        }
    }

    pub fn integrate(&self, f: impl Fn(&Point2<f64>) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Volume and face rules of one element.
#[derive(Clone, Debug)]
pub struct ElementQuadrature {
    pub volume: QuadratureRule,
    pub faces: Vec<FaceRule>,
    pub degree: usize,
}

impl ElementQuadrature {
    pub fn new(geom: &ElementGeometry, degree: usize) -> Self {
        Self {
            volume: QuadratureRule::element(geom, degree),
            faces: geom.faces.iter().map(|f| FaceRule::new(f, degree)).collect(),
            degree,
        }
    }
}

/// Default exactness for flux degree `k`: `2(k + 2) + 2`.
pub fn default_exactness(k: usize) -> usize {
    2 * (k + 2) + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!(w.iter().all(|&wi| wi > 0.0));
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert_relative_eq!(q, exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn legendre_recurrence() {
        let v = legendre_values(3, 0.5);
        assert_relative_eq!(v[2], 0.5 * (3.0 * 0.25 - 1.0));
        assert_relative_eq!(v[3], 0.5 * (5.0 * 0.125 - 3.0 * 0.5));
    }

    #[test]
    fn triangle_rule_on_reference_triangle() {
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        // int x^a y^b over the reference triangle = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for deg in 0..=14 {
            let r = QuadratureRule::triangle(&tri, deg);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let q = r.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert_relative_eq!(q, exact, max_relative = 1e-12);
                }
            }
        }
    }
}
