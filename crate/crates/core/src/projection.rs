//! The HDG+ projection of a flux/potential pair and its boundary remainder.
//!
//! For `q` and `u` on an element `K`, `Pi q` in `P_k(K)^2` solves
//!
//! ```text
//! (Pi q - q, r)_K      = 0                              for r in (grad P_{k+1})^perp
//! (Pi q - q, grad w)_K = <P_M(q.n) - q.n, w>_dK         for non-constant w in P_{k+1}
//! ```
//!
//! the potential is projected by `Pi_{k+1}`, and the remainder is
//! `delta_{+-tau} = P_M(Pi q . n) - P_M(q . n) +- tau (P_M Pi_{k+1} u - P_M u)`.

use nalgebra::{DMatrix, DVector, Point2, Vector2, LU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, range_and_complement, RANK_TOL};
use crate::mesh::{ElementGeometry, PolyMesh};
use crate::polyquad::{default_exactness, mass_and_mixed_matrices, poly_dim, LocalSpaces, MixedMatrices};
use crate::rates::fitted_rate;

/// `G = grad P_{k+1}(K)` and its `L2(K)` complement inside `P_k(K)^2`, both
/// as columns of `[x-block; y-block]` coefficients.
#[derive(Clone, Debug)]
pub struct GradComplementSplit {
    /// Gradients of the non-constant orthonormal `P_{k+1}` functions.
    pub grad: DMatrix<f64>,
    /// Orthonormal basis of the complement.
    pub complement: DMatrix<f64>,
}

impl GradComplementSplit {
    pub fn dim_grad(&self) -> usize {
        self.grad.ncols()
    }

    pub fn dim_complement(&self) -> usize {
        self.complement.ncols()
    }

    /// Largest entry of the cross Gram matrix between the two subspaces.
    pub fn cross_gram(&self) -> f64 {
        if self.dim_complement() == 0 {
            return 0.0;
        }
        (self.complement.transpose() * &self.grad).abs().max()
    }
}

pub fn build_grad_complement(sp: &LocalSpaces, mm: &MixedMatrices) -> Result<GradComplementSplit> {
    let nk = sp.n_flux_scalar();
    let n1 = sp.n_primal();
    // (phi_a e_i, grad phi_j)_K are exactly the coefficients of grad phi_j.
    let grad = mm.grad.columns(1, n1 - 1).into_owned();
    let (range, complement) = range_and_complement(&grad, RANK_TOL);
    if range.ncols() != n1 - 1 || complement.ncols() != 2 * nk - (n1 - 1) {
        return Err(Error::Assembly(format!(
            "cell {}: gradient space has rank {} (expected {}), complement {} (expected {})",
            sp.geom.cell_id,
            range.ncols(),
            n1 - 1,
            complement.ncols(),
            2 * nk - (n1 - 1)
        )));
    }
    Ok(GradComplementSplit { grad, complement })
}

/// `(Pi q, Pi u)` on one element together with `delta_{+tau}` and `delta_{-tau}`.
#[derive(Clone, Debug)]
pub struct HdgPlusProjection {
    pub k: usize,
    /// `Pi q` in `P_k(K)^2`.
    pub q_proj: DVector<f64>,
    /// `Pi_{k+1} u`.
    pub u_proj: DVector<f64>,
    pub delta_plus: DVector<f64>,
    pub delta_minus: DVector<f64>,
    pub tau: f64,
    /// `|<P_M(q.n) - q.n, 1>_dK|`, the equation dropped from the system.
    pub constant_row_residual: f64,
    /// Largest pointwise gap between `Pi q . n` and `P_M(Pi q . n)` on `dK`.
    pub trace_defect: f64,
}

/// Factorised projection system of one element; depends only on geometry,
/// degree and quadrature.
#[derive(Clone, Debug)]
pub struct LocalProjector {
    pub split: GradComplementSplit,
    system: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    trace_scalar: DMatrix<f64>,
    trace_flux: DMatrix<f64>,
}

impl LocalProjector {
    pub fn new(sp: &LocalSpaces) -> Result<Self> {
        let mm = mass_and_mixed_matrices(sp, None)?;
        Self::from_matrices(sp, &mm)
    }

    pub fn from_matrices(sp: &LocalSpaces, mm: &MixedMatrices) -> Result<Self> {
        let split = build_grad_complement(sp, mm)?;
        let n = sp.n_flux();
        let mut system = DMatrix::zeros(n, n);
        let m = split.dim_complement();
        system.rows_mut(0, m).copy_from(&split.complement.transpose());
        system.rows_mut(m, n - m).copy_from(&split.grad.transpose());
        let lu = system.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::SingularLocal(sp.geom.cell_id));
        }
        Ok(Self {
            split,
            system,
            lu,
            trace_scalar: mm.trace_scalar.clone(),
            trace_flux: mm.trace_flux.clone(),
        })
    }

    /// Rows: complement block, then the non-constant gradient block.
    pub fn system_matrix(&self) -> &DMatrix<f64> {
        &self.system
    }

    pub fn condition_number(&self) -> f64 {
        condition_number(&self.system)
    }

    pub fn project(
        &self,
        sp: &LocalSpaces,
        q: impl Fn(&Point2<f64>) -> Vector2<f64>,
        u: impl Fn(&Point2<f64>) -> f64,
        tau: f64,
    ) -> Result<HdgPlusProjection> {
        if !(tau > 0.0) {
            return Err(Error::Input(format!("tau must be positive, got {tau}")));
        }
        let k = sp.k;
        let n1 = sp.n_primal();
        let bq = sp.l2_project_vector(&q, k);
        let qn = sp.l2_project_face(|p, f| q(p).dot(&f.normal));
        // <P_M(q.n) - q.n, phi_j>_dK for every phi_j in P_{k+1}
        let mut bnd = self.trace_scalar.tr_mul(&qn);
        for (f, (rule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
            let tab = &sp.face_tabs[f];
            for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let v = w * q(p).dot(&face.normal);
                for j in 0..n1 {
                    bnd[j] -= v * tab.values[(i, j)];
                }
            }
        }
        let m = self.split.dim_complement();
        let mut rhs = DVector::zeros(sp.n_flux());
        rhs.rows_mut(0, m).copy_from(&self.split.complement.tr_mul(&bq));
        rhs.rows_mut(m, n1 - 1)
            .copy_from(&(self.split.grad.tr_mul(&bq) + bnd.rows(1, n1 - 1)));
        let q_proj = self.lu.solve(&rhs).ok_or(Error::SingularLocal(sp.geom.cell_id))?;
        let u_proj = sp.l2_project_scalar(&u, k + 1);

        let pm_flux = &self.trace_flux * &q_proj;
        let mut trace_defect: f64 = 0.0;
        for f in 0..sp.n_faces() {
            let n = sp.geom.faces[f].normal;
            let exact = sp.vector_at_face(f, &q_proj);
            let fitted = sp.trace_at_face(f, &pm_flux);
            for (e, v) in exact.iter().zip(fitted.iter()) {
                trace_defect = trace_defect.max((e.dot(&n) - v).abs());
            }
        }
        let pm_u = sp.l2_project_face(|p, _| u(p));
        let jump = &self.trace_scalar * &u_proj - pm_u;
        let flux_part = pm_flux - qn;
        Ok(HdgPlusProjection {
            k,
            delta_plus: &flux_part + &jump * tau,
            delta_minus: &flux_part - &jump * tau,
            q_proj,
            u_proj,
            tau,
            constant_row_residual: bnd[0].abs(),
            trace_defect,
        })
    }
}

/// Projects `(q, u)` on one element with the default quadrature.
pub fn project_hdg_plus(
    q: impl Fn(&Point2<f64>) -> Vector2<f64>,
    u: impl Fn(&Point2<f64>) -> f64,
    geom: &ElementGeometry,
    k: usize,
    tau: f64,
) -> Result<HdgPlusProjection> {
    let sp = LocalSpaces::new(geom, k, default_exactness(k))?;
    LocalProjector::new(&sp)?.project(&sp, q, u, tau)
}

/// Largest residuals of the three projection identities, over both signs of
/// `tau`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    /// `(Pi u - u, v)_K` for `v` in `P_{k-1}`.
    pub moments: f64,
    /// `<Pi q.n - q.n +- tau(Pi u - u) - delta, mu>_dK` for `mu` in `R_k`.
    pub boundary: f64,
    /// `(div(Pi q - q), w)_K +- <tau P_M(Pi u - u), w>_dK - <delta, w>_dK`
    /// for `w` in `P_{k+1}`.
    pub divergence: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.moments.max(self.boundary).max(self.divergence)
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            moments: self.moments.max(other.moments),
            boundary: self.boundary.max(other.boundary),
            divergence: self.divergence.max(other.divergence),
        }
    }
}

/// Evaluates the projection identities by direct quadrature of the fields;
/// `div_q` is the exact divergence of `q`.
pub fn verify_projection_identities(
    proj: &HdgPlusProjection,
    sp: &LocalSpaces,
    q: impl Fn(&Point2<f64>) -> Vector2<f64>,
    div_q: impl Fn(&Point2<f64>) -> f64,
    u: impl Fn(&Point2<f64>) -> f64,
) -> IdentityResiduals {
    let k = sp.k;
    let tau = proj.tau;
    let n1 = sp.n_primal();
    let nf = sp.n_face();
    let rule = &sp.quad.volume;

    let u_vol = sp.scalar_at_volume(&proj.u_proj);
    let mut moments: f64 = 0.0;
    for i in 0..poly_dim(k as isize - 1) {
        let r: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(qi, (p, w))| w * (u_vol[qi] - u(p)) * sp.vol.values[(qi, i)])
            .sum();
        moments = moments.max(r.abs());
    }

    let pm_jump = {
        let pm_u = sp.l2_project_face(|p, _| u(p));
        let pm_pu = sp.l2_project_face(|p, _| sp.eval_scalar(&proj.u_proj, p));
        pm_pu - pm_u
    };
    let div_vol = sp.divergence_at_volume(&proj.q_proj);
    let mut div_part = DVector::<f64>::zeros(n1);
    for (qi, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let d = w * (div_vol[qi] - div_q(p));
        for j in 0..n1 {
            div_part[j] += d * sp.vol.values[(qi, j)];
        }
    }

    let mut boundary: f64 = 0.0;
    let mut divergence: f64 = 0.0;
    for (sign, delta) in [(1.0, &proj.delta_plus), (-1.0, &proj.delta_minus)] {
        let mut face_part = DVector::<f64>::zeros(n1);
        for (f, (frule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
            let pq = sp.vector_at_face(f, &proj.q_proj);
            let pu = sp.scalar_at_face(f, &proj.u_proj);
            let jump = sp.trace_at_face(f, &pm_jump);
            let dv = sp.trace_at_face(f, delta);
            let psi = &sp.face_psi[f];
            let tab = &sp.face_tabs[f];
            let mut lhs = DVector::<f64>::zeros(nf);
            for (qi, (p, w)) in frule.points.iter().zip(&frule.weights).enumerate() {
                let v = (pq[qi] - q(p)).dot(&face.normal) + sign * tau * (pu[qi] - u(p)) - dv[qi];
                for m in 0..nf {
                    lhs[m] += w * v * psi[(qi, m)];
                }
                let s = w * (sign * tau * jump[qi] - dv[qi]);
                for j in 0..n1 {
                    face_part[j] += s * tab.values[(qi, j)];
                }
            }
            boundary = boundary.max(lhs.amax());
        }
        divergence = divergence.max((&div_part + face_part).amax());
    }
    IdentityResiduals {
        moments,
        boundary,
        divergence,
    }
}

/// Mesh-wide projection errors at one refinement level.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionLevel {
    pub h_max: f64,
    pub n_cells: usize,
    /// `||Pi q - q||`.
    pub q_error: f64,
    /// `||Pi u - u||`.
    pub u_error: f64,
    /// `||tau^{-1/2} delta_{+tau}||_{dT_h}`.
    pub delta_plus: f64,
    /// `||tau^{-1/2} delta_{-tau}||_{dT_h}`.
    pub delta_minus: f64,
    /// Largest identity residual over all elements.
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionStudy {
    pub k: usize,
    pub levels: Vec<ProjectionLevel>,
    pub q_rate: f64,
    pub u_rate: f64,
    pub delta_rate: f64,
}

/// Options shared by the projection studies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyOptions {
    pub k: usize,
    /// `tau = tau_c / h_K`.
    pub tau_c: f64,
    pub exactness: Option<usize>,
    pub include_coarsest: bool,
}

impl StudyOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            tau_c: 1.0,
            exactness: None,
            include_coarsest: false,
        }
    }

    /// Defaults to four degrees above the element default: the identities
    /// are exact, so only quadrature of the smooth data shows up in them.
    pub fn exactness(&self) -> usize {
        self.exactness.unwrap_or(default_exactness(self.k) + 4)
    }
}

/// Projection errors and the largest identity residual on one mesh.
pub fn projection_level(
    mesh: &PolyMesh,
    opts: &StudyOptions,
    q: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync,
    div_q: impl Fn(&Point2<f64>) -> f64 + Sync,
    u: impl Fn(&Point2<f64>) -> f64 + Sync,
) -> Result<ProjectionLevel> {
    let per_cell = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let geom = crate::mesh::element_geometry(mesh, c)?;
            let tau = opts.tau_c / geom.diameter;
            let sp = LocalSpaces::new(&geom, opts.k, opts.exactness())?;
            let proj = LocalProjector::new(&sp)?.project(&sp, &q, &u, tau)?;
            let res = verify_projection_identities(&proj, &sp, &q, &div_q, &u);
            Ok([
                sp.vector_error_sq(&q, &proj.q_proj),
                sp.scalar_error_sq(&u, &proj.u_proj),
                proj.delta_plus.norm_squared() / tau,
                proj.delta_minus.norm_squared() / tau,
                res.max().max(proj.constant_row_residual),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = |i: usize| per_cell.iter().map(|v| v[i]).sum::<f64>().sqrt();
    Ok(ProjectionLevel {
        h_max: mesh.h_max(),
        n_cells: mesh.n_cells(),
        q_error: sum(0),
        u_error: sum(1),
        delta_plus: sum(2),
        delta_minus: sum(3),
        identity_residual: per_cell.iter().map(|v| v[4]).fold(0.0, f64::max),
    })
}

/// Projection errors and fitted slopes over a refinement sequence.
pub fn projection_convergence_study(
    meshes: &[PolyMesh],
    opts: &StudyOptions,
    q: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync,
    div_q: impl Fn(&Point2<f64>) -> f64 + Sync,
    u: impl Fn(&Point2<f64>) -> f64 + Sync,
) -> Result<ProjectionStudy> {
    if meshes.len() < 3 {
        return Err(Error::Input(format!(
            "a convergence study needs at least 3 levels, got {}",
            meshes.len()
        )));
    }
    let levels = meshes
        .iter()
        .map(|m| projection_level(m, opts, &q, &div_q, &u))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = levels.iter().map(|l| l.h_max).collect();
    let rate = |f: fn(&ProjectionLevel) -> f64| {
        let e: Vec<f64> = levels.iter().map(f).collect();
        fitted_rate(&h, &e, opts.include_coarsest)
    };
    Ok(ProjectionStudy {
        k: opts.k,
        q_rate: rate(|l| l.q_error)?,
        u_rate: rate(|l| l.u_error)?,
        delta_rate: rate(|l| l.delta_plus)?,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{element_geometry, random_star_polygon, MeshFamily, MeshSpec};
    use proptest::prelude::*;

    fn spaces(geom: &ElementGeometry, k: usize) -> LocalSpaces {
        LocalSpaces::new(geom, k, default_exactness(k) + 4).unwrap()
    }

    fn polygon(n: usize, seed: u64) -> ElementGeometry {
        let m = random_star_polygon(n, Point2::new(0.3, -0.2), 0.8, seed).unwrap();
        element_geometry(&m, 0).unwrap()
    }

    fn unit_square() -> ElementGeometry {
        let m = crate::mesh::PolyMesh::single_cell(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        element_geometry(&m, 0).unwrap()
    }

    #[test]
    fn split_dimensions() {
        for (k, g, c) in [(0, 2, 0), (1, 5, 1), (2, 9, 3)] {
            let sp = spaces(&polygon(6, 3), k);
            let mm = mass_and_mixed_matrices(&sp, None).unwrap();
            let s = build_grad_complement(&sp, &mm).unwrap();
            assert_eq!((s.dim_grad(), s.dim_complement()), (g, c));
            assert!(s.cross_gram() < 1e-10);
        }
    }

    #[test]
    fn polynomial_data_is_reproduced() {
        let geom = polygon(5, 11);
        for k in 0..=2 {
            let sp = spaces(&geom, k);
            let pr = LocalProjector::new(&sp).unwrap();
            let c = sp.geom.star_center;
            let q = |p: &Point2<f64>| {
                let (x, y) = (p.x - c.x, p.y - c.y);
                let lin = Vector2::new(1.0 - 2.0 * x + 0.5 * y, 0.3 + x + y);
                let quad = Vector2::new(x * y - 0.7 * y * y, 2.0 * x * x);
                match k {
                    0 => Vector2::new(0.4, -1.2),
                    1 => lin,
                    _ => lin + quad,
                }
            };
            let u = |p: &Point2<f64>| p.x.powi(k as i32 + 1) - 0.5 * p.x * p.y.powi(k as i32) + 0.1;
            let proj = pr.project(&sp, q, u, 2.0).unwrap();
            assert!((&proj.q_proj - sp.l2_project_vector(q, k)).amax() < 1e-11);
            assert!(proj.delta_plus.amax() < 1e-11 && proj.delta_minus.amax() < 1e-11);
            assert!(sp.vector_error_sq(q, &proj.q_proj).sqrt() < 1e-11);
            assert!(sp.scalar_error_sq(u, &proj.u_proj).sqrt() < 1e-11);
        }
    }

    #[test]
    fn zero_flux_decouples() {
        let geom = polygon(6, 2);
        let sp = spaces(&geom, 1);
        let u = |p: &Point2<f64>| (2.0 * p.x).sin() * p.y.exp();
        let tau = 1.7;
        let proj = LocalProjector::new(&sp).unwrap().project(&sp, |_| Vector2::zeros(), u, tau).unwrap();
        assert!(proj.q_proj.amax() < 1e-14);
        let pm_u = sp.l2_project_face(|p, _| u(p));
        let pm_pu = sp.l2_project_face(|p, _| sp.eval_scalar(&proj.u_proj, p));
        let expect = (pm_pu - pm_u) * tau;
        assert!((&proj.delta_plus - &expect).amax() < 1e-13);
        assert!((&proj.delta_minus + &expect).amax() < 1e-13);
    }

    /// Polynomials on the unit square as `(x-exponent, y-exponent, coefficient)`.
    type Poly = Vec<(i32, i32, f64)>;

    fn square_integral(p: &Poly) -> f64 {
        p.iter().map(|&(a, b, c)| c / ((a + 1) as f64 * (b + 1) as f64)).sum()
    }

    fn mul(p: &Poly, r: &Poly) -> Poly {
        p.iter()
            .flat_map(|&(a, b, c)| r.iter().map(move |&(d, e, f)| (a + d, b + e, c * f)))
            .collect()
    }

    /// Restriction to an edge `t -> (x0 + dx t, y0 + dy t)`, `t in [0, 1]`,
    /// integrated against `t^j` by expanding in powers of `t`.
    fn edge_moment(p: &Poly, x0: f64, y0: f64, dx: f64, dy: f64, j: i32) -> f64 {
        // binomial expansion of (x0 + dx t)^a (y0 + dy t)^b
        let binom = |n: i32, r: i32| -> f64 { (0..r).map(|i| (n - i) as f64 / (i + 1) as f64).product() };
        let mut total = 0.0;
        for &(a, b, c) in p {
            for i in 0..=a {
                for l in 0..=b {
                    let coef = binom(a, i) * x0.powi(a - i) * dx.powi(i) * binom(b, l) * y0.powi(b - l) * dy.powi(l);
                    total += c * coef / (i + l + j + 1) as f64;
                }
            }
        }
        total
    }

    #[test]
    fn matches_monomial_oracle_on_unit_square() {
        // k = 1, u = 0, q = (y^3, x^3): independent assembly with raw monomials.
        let mono: [Poly; 3] = [vec![(0, 0, 1.0)], vec![(1, 0, 1.0)], vec![(0, 1, 1.0)]];
        let qx: Poly = vec![(1, 3, 1.0)];
        let qy: Poly = vec![(2, 1, 1.0)];
        // trial functions r_i: (mono[i], 0) for i < 3, (0, mono[i-3]) otherwise
        let comp = |i: usize| -> (Poly, Poly) {
            if i < 3 {
                (mono[i].clone(), vec![])
            } else {
                (vec![], mono[i - 3].clone())
            }
        };
        let inner = |a: &(Poly, Poly), b: &(Poly, Poly)| square_integral(&mul(&a.0, &b.0)) + square_integral(&mul(&a.1, &b.1));
        let grads: Vec<(Poly, Poly)> = vec![
            (vec![(0, 0, 1.0)], vec![]),
            (vec![], vec![(0, 0, 1.0)]),
            (vec![(1, 0, 2.0)], vec![]),
            (vec![(0, 1, 1.0)], vec![(1, 0, 1.0)]),
            (vec![], vec![(0, 1, 2.0)]),
        ];
        let ws: Vec<Poly> = vec![vec![(1, 0, 1.0)], vec![(0, 1, 1.0)], vec![(2, 0, 1.0)], vec![(1, 1, 1.0)], vec![(0, 2, 1.0)]];
        let gram = DMatrix::from_fn(6, 6, |i, j| inner(&comp(i), &comp(j)));
        let gmat = DMatrix::from_fn(6, 5, |i, j| inner(&comp(i), &grads[j]));
        // complement direction r with (r, grad w) = 0 for all five gradients:
        // the generalised cross product of the rows of the 5 x 6 matrix
        let gt = gmat.transpose();
        let r = DVector::from_fn(6, |i, _| {
            let minor = gt.clone().remove_column(i);
            if i % 2 == 0 { minor.determinant() } else { -minor.determinant() }
        });
        assert!((gmat.transpose() * &r).amax() < 1e-12);
        // edges: (x0, y0, dx, dy, nx, ny)
        let edges = [
            (0.0, 0.0, 1.0, 0.0, 0.0, -1.0),
            (1.0, 0.0, 0.0, 1.0, 1.0, 0.0),
            (1.0, 1.0, -1.0, 0.0, 0.0, 1.0),
            (0.0, 1.0, 0.0, -1.0, -1.0, 0.0),
        ];
        let mut mat = DMatrix::zeros(6, 6);
        let mut rhs = DVector::zeros(6);
        let q = (qx.clone(), qy.clone());
        // row 0: (c - q, r) = 0 with r = sum r_i comp(i)
        for j in 0..6 {
            mat[(0, j)] = (0..6).map(|i| r[i] * gram[(i, j)]).sum();
        }
        rhs[0] = (0..6).map(|i| r[i] * inner(&comp(i), &q)).sum();
        for (wi, w) in ws.iter().enumerate() {
            let row = wi + 1;
            for j in 0..6 {
                mat[(row, j)] = inner(&comp(j), &grads[wi]);
            }
            let mut b = inner(&q, &grads[wi]);
            for &(x0, y0, dx, dy, nx, ny) in &edges {
                let qn: Poly = qx.iter().map(|&(a, bb, c)| (a, bb, c * nx)).chain(qy.iter().map(|&(a, bb, c)| (a, bb, c * ny))).collect();
                // P_1 fit of q.n on the edge in the basis {1, 2t - 1}
                let m0 = edge_moment(&qn, x0, y0, dx, dy, 0);
                let m1 = 2.0 * edge_moment(&qn, x0, y0, dx, dy, 1) - m0;
                let (c0, c1) = (m0, 3.0 * m1);
                // <P_M(q.n), w> - <q.n, w>
                let w0 = edge_moment(w, x0, y0, dx, dy, 0);
                let w1 = 2.0 * edge_moment(w, x0, y0, dx, dy, 1) - w0;
                b += c0 * w0 + c1 * w1 - edge_moment(&mul(&qn, w), x0, y0, dx, dy, 0);
            }
            rhs[row] = b;
        }
        let coef = mat.lu().solve(&rhs).unwrap();

        let geom = unit_square();
        let sp = LocalSpaces::new(&geom, 1, default_exactness(1)).unwrap();
        let proj = LocalProjector::new(&sp)
            .unwrap()
            .project(&sp, |p| Vector2::new(p.x * p.y.powi(3), p.x * p.x * p.y), |_| 0.0, 1.0)
            .unwrap();
        for p in [Point2::new(0.1, 0.2), Point2::new(0.7, 0.4), Point2::new(0.5, 0.95)] {
            let ours = sp.eval_vector(&proj.q_proj, &p);
            let oracle = Vector2::new(coef[0] + coef[1] * p.x + coef[2] * p.y, coef[3] + coef[4] * p.x + coef[5] * p.y);
            assert!((ours - oracle).norm() < 1e-12, "{ours} vs {oracle}");
        }
        // the boundary term is genuinely active here
        let plain = sp.l2_project_vector(|p| Vector2::new(p.x * p.y.powi(3), p.x * p.x * p.y), 1);
        assert!((&proj.q_proj - plain).amax() > 1e-3);
    }

    #[test]
    fn x_squared_flux_on_unit_square() {
        let sp = LocalSpaces::new(&unit_square(), 1, default_exactness(1)).unwrap();
        let proj = LocalProjector::new(&sp)
            .unwrap()
            .project(&sp, |p| Vector2::new(p.x * p.x, 0.0), |_| 0.0, 1.0)
            .unwrap();
        // every trace of (x^2, 0) . n is linear on the square's edges, so the
        // projection is the plain one: (x - 1/6, 0)
        for p in [Point2::new(0.2, 0.3), Point2::new(0.9, 0.1)] {
            let v = sp.eval_vector(&proj.q_proj, &p);
            assert!((v - Vector2::new(p.x - 1.0 / 6.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn smooth_data_satisfies_identities() {
        let q = |p: &Point2<f64>| Vector2::new(p.x.cos() * p.y.cos(), -p.x.sin() * p.y.sin());
        let div_q = |p: &Point2<f64>| -2.0 * p.x.sin() * p.y.cos();
        let u = |p: &Point2<f64>| p.x.sin() * p.y.cos();
        for (n, k) in [(4, 1), (5, 0), (6, 2)] {
            let geom = polygon(n, 40 + n as u64);
            let sp = spaces(&geom, k);
            let tau = 1.0 / geom.diameter;
            let proj = LocalProjector::new(&sp).unwrap().project(&sp, q, u, tau).unwrap();
            let res = verify_projection_identities(&proj, &sp, q, div_q, u);
            assert!(res.max() < 1e-10, "k = {k}: {res:?}");
            assert!(proj.constant_row_residual < 1e-11);
            assert!(proj.trace_defect < 1e-11);
        }
    }

    #[test]
    fn delta_is_a_fixed_point_of_face_projection() {
        let geom = polygon(5, 8);
        let sp = spaces(&geom, 2);
        let proj = LocalProjector::new(&sp)
            .unwrap()
            .project(&sp, |p| Vector2::new(p.y.exp(), p.x * p.y.sin()), |p| (p.x - p.y).cos(), 0.9)
            .unwrap();
        let again = sp.l2_project_face(|p, face| {
            let f = sp.geom.faces.iter().position(|g| g.global == face.global).unwrap();
            let rule = &sp.quad.faces[f];
            let i = rule.points.iter().position(|x| (x - p).norm() < 1e-15).unwrap();
            sp.trace_at_face(f, &proj.delta_plus)[i]
        });
        assert!((again - &proj.delta_plus).amax() < 1e-13);
    }

    #[test]
    fn system_is_well_conditioned_on_generated_cells() {
        let mesh = MeshSpec::new(MeshFamily::DistortedQuad, 4).generate().unwrap();
        for c in 0..mesh.n_cells() {
            let geom = element_geometry(&mesh, c).unwrap();
            for k in 0..=2 {
                let sp = LocalSpaces::new(&geom, k, default_exactness(k)).unwrap();
                let pr = LocalProjector::new(&sp).unwrap();
                assert!(pr.condition_number() < 1e6);
                // the complement block is orthonormal, hence SPD
                let cb = pr.split.complement.transpose() * &pr.split.complement;
                assert!((cb - DMatrix::identity(pr.split.dim_complement(), pr.split.dim_complement())).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn convergence_study_rejects_two_levels() {
        let base = MeshSpec::new(MeshFamily::Quad, 2);
        let meshes = crate::mesh::refine_sequence(&base, 2).unwrap();
        let r = projection_convergence_study(&meshes, &StudyOptions::new(0), |_| Vector2::zeros(), |_| 0.0, |_| 0.0);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reproduction_on_random_polygons(
            n in 3usize..8,
            seed in 0u64..10_000,
            k in 0usize..3,
            coefs in prop::collection::vec(-2.0f64..2.0, 12),
        ) {
            let geom = polygon(n, seed);
            let sp = LocalSpaces::new(&geom, k, default_exactness(k)).unwrap();
            let c = geom.star_center;
            let q = |p: &Point2<f64>| {
                let (x, y) = (p.x - c.x, p.y - c.y);
                let e = poly_eval(&coefs[..6], x, y, k);
                let f = poly_eval(&coefs[6..], x, y, k);
                Vector2::new(e, f)
            };
            let proj = LocalProjector::new(&sp).unwrap().project(&sp, q, |_| 1.0, 1.0).unwrap();
            prop_assert!((&proj.q_proj - sp.l2_project_vector(q, k)).amax() < 1e-11);
            prop_assert!(proj.constant_row_residual < 1e-11);
        }

        #[test]
        fn constant_row_is_consistent_for_any_flux(seed in 0u64..10_000, a in -3.0f64..3.0, b in 0.1f64..4.0) {
            let geom = polygon(6, seed);
            let sp = LocalSpaces::new(&geom, 1, default_exactness(1)).unwrap();
            let proj = LocalProjector::new(&sp)
                .unwrap()
                .project(&sp, |p| Vector2::new((a * p.x).sin(), (b * p.y * p.x).exp()), |_| 0.0, 1.0)
                .unwrap();
            prop_assert!(proj.constant_row_residual < 1e-11);
        }
    }

    fn poly_eval(c: &[f64], x: f64, y: f64, k: usize) -> f64 {
        let terms = [1.0, x, y, x * x, x * y, y * y];
        terms.iter().zip(c).take(crate::polyquad::poly_dim(k as isize)).map(|(t, c)| t * c).sum()
    }
}
