//! The HDG+ projection for linear elasticity.
//!
//! Stresses live in `P_k(K; S)`, symmetric 2x2 tensors with polynomial
//! entries, displacements in `P_{k+1}(K)^2` and traces in `R_k(dK)^2`.
//! `Pi sigma` solves
//!
//! ```text
//! (Pi sigma - sigma, theta)_K  = 0                          for theta in eps(P_{k+1}^2)^perp
//! (Pi sigma - sigma, eps(v))_K = <P_M(sigma n) - sigma n, v>_dK  for v orthogonal to rigid motions
//! ```
//!
//! and `delta_{+-tau} = -(P_M(Pi sigma n) - P_M(sigma n)) +- tau (P_M Pi_{k+1} u - P_M u)`.
//!
//! Tensor coefficients use the Frobenius-orthonormal frame
//! `E1 = [[1, 0], [0, 0]]`, `E2 = [[0, 0], [0, 1]]`, `E3 = [[0, 1], [1, 0]] / sqrt 2`,
//! stored as `[E1-block; E2-block; E3-block]` of `dim P_k` each.
//! Vector traces are stored as `[x-block; y-block]` of `dim R_k(dK)` each.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector, Matrix2, Point2, Vector2, LU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{range_and_complement, RANK_TOL};
use crate::mesh::{element_geometry, ElementGeometry, PolyMesh};
use crate::polyquad::{default_exactness, mass_and_mixed_matrices, poly_dim, LocalSpaces, MixedMatrices};
use crate::rates::fitted_rate;

/// Tolerance on `<P_M(sigma n) - sigma n, m>_dK` for rigid motions `m`.
pub const RIGID_MOTION_TOL: f64 = 1e-11;

/// Frobenius-orthonormal frame of symmetric 2x2 matrices.
pub fn sym_frame() -> [Matrix2<f64>; 3] {
    let s = 1.0 / SQRT_2;
    [
        Matrix2::new(1.0, 0.0, 0.0, 0.0),
        Matrix2::new(0.0, 0.0, 0.0, 1.0),
        Matrix2::new(0.0, s, s, 0.0),
    ]
}

/// Orthonormal basis of `P_k(K; S)`: `phi_a E_s` for the orthonormal scalar
/// basis `phi_a` of `P_k(K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymTensorBasis {
    pub k: usize,
    pub scalar_dim: usize,
}

impl SymTensorBasis {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            scalar_dim: poly_dim(k as isize),
        }
    }

    pub fn dim(&self) -> usize {
        3 * self.scalar_dim
    }

    /// Tensor with coefficients `c` at the volume quadrature point `q`.
    pub fn eval_at_volume(&self, sp: &LocalSpaces, c: &DVector<f64>, q: usize) -> Matrix2<f64> {
        let frame = sym_frame();
        let n = self.scalar_dim;
        let mut m = Matrix2::zeros();
        for (s, e) in frame.iter().enumerate() {
            let v: f64 = (0..n).map(|a| c[s * n + a] * sp.vol.values[(q, a)]).sum();
            m += e * v;
        }
        m
    }

    pub fn eval_at_face(&self, sp: &LocalSpaces, c: &DVector<f64>, f: usize, q: usize) -> Matrix2<f64> {
        let frame = sym_frame();
        let n = self.scalar_dim;
        let t = &sp.face_tabs[f];
        let mut m = Matrix2::zeros();
        for (s, e) in frame.iter().enumerate() {
            let v: f64 = (0..n).map(|a| c[s * n + a] * t.values[(q, a)]).sum();
            m += e * v;
        }
        m
    }

    pub fn eval(&self, sp: &LocalSpaces, c: &DVector<f64>, p: &Point2<f64>) -> Matrix2<f64> {
        let frame = sym_frame();
        let n = self.scalar_dim;
        let phi = sp.basis.values(p);
        let mut m = Matrix2::zeros();
        for (s, e) in frame.iter().enumerate() {
            let v: f64 = (0..n).map(|a| c[s * n + a] * phi[a]).sum();
            m += e * v;
        }
        m
    }

    /// Divergence (row-wise) at the volume quadrature point `q`.
    pub fn divergence_at_volume(&self, sp: &LocalSpaces, c: &DVector<f64>, q: usize) -> Vector2<f64> {
        let n = self.scalar_dim;
        let s = 1.0 / SQRT_2;
        let mut d = Vector2::zeros();
        for a in 0..n {
            let (dx, dy) = (sp.vol.dx[(q, a)], sp.vol.dy[(q, a)]);
            d.x += c[a] * dx + c[2 * n + a] * s * dy;
            d.y += c[n + a] * dy + c[2 * n + a] * s * dx;
        }
        d
    }

    /// `L2(K)` projection of a tensor field (symmetric part).
    pub fn project(&self, sp: &LocalSpaces, sigma: impl Fn(&Point2<f64>) -> Matrix2<f64>) -> DVector<f64> {
        let frame = sym_frame();
        let n = self.scalar_dim;
        let rule = &sp.quad.volume;
        let mut c = DVector::zeros(3 * n);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let m = sigma(p);
            for (s, e) in frame.iter().enumerate() {
                let v = w * m.component_mul(e).sum();
                for a in 0..n {
                    c[s * n + a] += v * sp.vol.values[(q, a)];
                }
            }
        }
        c
    }
}

/// `E = eps(P_{k+1}^2)` and its complement in `P_k(K; S)`, plus the rigid
/// motions and their complement in `P_{k+1}(K)^2`.
#[derive(Clone, Debug)]
pub struct SymGradSplit {
    /// `eps(v)` for the columns `v` of `motion_complement`.
    pub symgrad: DMatrix<f64>,
    /// Orthonormal basis of `E^perp` inside `P_k(K; S)`.
    pub complement: DMatrix<f64>,
    /// Orthonormal basis of the rigid motions in `P_{k+1}(K)^2`.
    pub rigid: DMatrix<f64>,
    /// Orthonormal basis of the `L2(K)` complement of the rigid motions.
    pub motion_complement: DMatrix<f64>,
    /// `eps` of every `P_{k+1}^2` basis function (tensor rows).
    pub eps_matrix: DMatrix<f64>,
}

impl SymGradSplit {
    pub fn dim_symgrad(&self) -> usize {
        self.symgrad.ncols()
    }

    pub fn dim_complement(&self) -> usize {
        self.complement.ncols()
    }
}

/// Rigid motions `(1, 0)`, `(0, 1)`, `(-(y - y_c), x - x_c)` about the star center.
pub fn rigid_motions(center: Point2<f64>) -> [Box<dyn Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync>; 3] {
    [
        Box::new(|_| Vector2::new(1.0, 0.0)),
        Box::new(|_| Vector2::new(0.0, 1.0)),
        Box::new(move |p| Vector2::new(-(p.y - center.y), p.x - center.x)),
    ]
}

pub fn build_symgrad_split(sp: &LocalSpaces, mm: &MixedMatrices) -> Result<SymGradSplit> {
    if sp.k < 1 {
        return Err(Error::Input(
            "the elasticity projection needs k >= 1: for k = 0 rotations are not constant on faces".into(),
        ));
    }
    let nk = sp.n_flux_scalar();
    let n1 = sp.n_primal();
    let s = 1.0 / SQRT_2;
    // eps(phi_j e_x) = [[d_x, d_y / 2], [d_y / 2, 0]], eps(phi_j e_y) = [[0, d_x / 2], [d_x / 2, d_y]]
    let mut eps = DMatrix::zeros(3 * nk, 2 * n1);
    for j in 0..n1 {
        for a in 0..nk {
            let gx = mm.grad[(a, j)];
            let gy = mm.grad[(nk + a, j)];
            eps[(a, j)] = gx;
            eps[(2 * nk + a, j)] = s * gy;
            eps[(nk + a, n1 + j)] = gy;
            eps[(2 * nk + a, n1 + j)] = s * gx;
        }
    }
    let c = sp.geom.star_center;
    let rm = rigid_motions(c);
    let mut rig = DMatrix::zeros(2 * n1, 3);
    for (i, m) in rm.iter().enumerate() {
        rig.set_column(i, &sp.l2_project_vector(m, sp.k + 1));
    }
    let (rigid, motion_complement) = range_and_complement(&rig, RANK_TOL);
    if rigid.ncols() != 3 {
        return Err(Error::Assembly(format!(
            "cell {}: rigid motions span {} dimensions",
            sp.geom.cell_id,
            rigid.ncols()
        )));
    }
    let symgrad = &eps * &motion_complement;
    let (range, complement) = range_and_complement(&symgrad, RANK_TOL);
    let expect = 2 * n1 - 3;
    if range.ncols() != expect || complement.ncols() != 3 * nk - expect {
        return Err(Error::Assembly(format!(
            "cell {}: symmetric gradients have rank {} (expected {expect}), complement {} (expected {})",
            sp.geom.cell_id,
            range.ncols(),
            complement.ncols(),
            3 * nk - expect
        )));
    }
    Ok(SymGradSplit {
        symgrad,
        complement,
        rigid,
        motion_complement,
        eps_matrix: eps,
    })
}

/// `(Pi sigma, Pi u)` with both remainders on one element.
#[derive(Clone, Debug)]
pub struct ElasticProjection {
    pub k: usize,
    pub sigma_proj: DVector<f64>,
    /// `[x-block; y-block]` coefficients of `Pi_{k+1} u`.
    pub u_proj: DVector<f64>,
    pub delta_plus: DVector<f64>,
    pub delta_minus: DVector<f64>,
    pub tau: Matrix2<f64>,
    /// Largest `|<P_M(sigma n) - sigma n, m>_dK|` over the rigid motions.
    pub rigid_residual: f64,
}

/// Factorised elasticity projection system of one element.
#[derive(Clone, Debug)]
pub struct ElasticProjector {
    pub split: SymGradSplit,
    pub basis: SymTensorBasis,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    trace_scalar: DMatrix<f64>,
}

impl ElasticProjector {
    pub fn new(sp: &LocalSpaces) -> Result<Self> {
        let mm = mass_and_mixed_matrices(sp, None)?;
        let split = build_symgrad_split(sp, &mm)?;
        let basis = SymTensorBasis::new(sp.k);
        let n = basis.dim();
        let m = split.dim_complement();
        let mut system = DMatrix::zeros(n, n);
        system.rows_mut(0, m).copy_from(&split.complement.transpose());
        system.rows_mut(m, n - m).copy_from(&split.symgrad.transpose());
        let lu = system.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularLocal(sp.geom.cell_id));
        }
        Ok(Self {
            split,
            basis,
            lu,
            trace_scalar: mm.trace_scalar,
        })
    }

    pub fn project(
        &self,
        sp: &LocalSpaces,
        sigma: impl Fn(&Point2<f64>) -> Matrix2<f64>,
        u: impl Fn(&Point2<f64>) -> Vector2<f64>,
        tau: Matrix2<f64>,
    ) -> Result<ElasticProjection> {
        if (tau - tau.transpose()).abs().max() > 1e-14 * tau.abs().max() || tau.cholesky().is_none() {
            return Err(Error::Input(format!("tau must be symmetric positive definite, got {tau}")));
        }
        let n1 = sp.n_primal();
        let nt = sp.n_trace();
        let bs = self.basis.project(sp, &sigma);
        // P_M(sigma n), both components
        let sn_x = sp.l2_project_face(|p, f| (sigma(p) * f.normal).x);
        let sn_y = sp.l2_project_face(|p, f| (sigma(p) * f.normal).y);
        // <P_M(sigma n) - sigma n, phi_j e_i>_dK
        let mut bnd = DVector::zeros(2 * n1);
        bnd.rows_mut(0, n1).copy_from(&self.trace_scalar.tr_mul(&sn_x));
        let ty = self.trace_scalar.tr_mul(&sn_y);
        bnd.rows_mut(n1, n1).copy_from(&ty);
        for (f, (rule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
            let tab = &sp.face_tabs[f];
            for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let v = sigma(p) * face.normal * *w;
                for j in 0..n1 {
                    bnd[j] -= v.x * tab.values[(i, j)];
                    bnd[n1 + j] -= v.y * tab.values[(i, j)];
                }
            }
        }
        let rig = self.split.rigid.tr_mul(&bnd);
        let rigid_residual = rig.amax();
        if rigid_residual > RIGID_MOTION_TOL {
            return Err(Error::RigidMotion {
                cell: sp.geom.cell_id,
                residual: rigid_residual,
            });
        }
        let m = self.split.dim_complement();
        let nd = self.split.dim_symgrad();
        let mut rhs = DVector::zeros(self.basis.dim());
        rhs.rows_mut(0, m).copy_from(&self.split.complement.tr_mul(&bs));
        rhs.rows_mut(m, nd)
            .copy_from(&(self.split.symgrad.tr_mul(&bs) + self.split.motion_complement.tr_mul(&bnd)));
        let sigma_proj = self.lu.solve(&rhs).ok_or(Error::SingularLocal(sp.geom.cell_id))?;
        let u_proj = sp.l2_project_vector(&u, sp.k + 1);

        // P_M(Pi sigma n): the trace of a degree-k tensor is degree k on a face
        let frame = sym_frame();
        let nk = self.basis.scalar_dim;
        let mut pn = DVector::zeros(2 * nt);
        for (f, face) in sp.geom.faces.iter().enumerate() {
            let nf = sp.n_face();
            let rule = &sp.quad.faces[f];
            let psi = &sp.face_psi[f];
            for (i, w) in rule.weights.iter().enumerate() {
                let mut t = Matrix2::zeros();
                for (s, e) in frame.iter().enumerate() {
                    let v: f64 = (0..nk).map(|a| sigma_proj[s * nk + a] * sp.face_tabs[f].values[(i, a)]).sum();
                    t += e * v;
                }
                let tn = t * face.normal * *w;
                for mm in 0..nf {
                    pn[f * nf + mm] += tn.x * psi[(i, mm)];
                    pn[nt + f * nf + mm] += tn.y * psi[(i, mm)];
                }
            }
        }
        let mut sn = DVector::zeros(2 * nt);
        sn.rows_mut(0, nt).copy_from(&sn_x);
        sn.rows_mut(nt, nt).copy_from(&sn_y);
        let pm_u_x = sp.l2_project_face(|p, _| u(p).x);
        let pm_u_y = sp.l2_project_face(|p, _| u(p).y);
        let jx = &self.trace_scalar * u_proj.rows(0, n1) - pm_u_x;
        let jy = &self.trace_scalar * u_proj.rows(n1, n1) - pm_u_y;
        let mut tau_jump = DVector::zeros(2 * nt);
        for i in 0..nt {
            let v = tau * Vector2::new(jx[i], jy[i]);
            tau_jump[i] = v.x;
            tau_jump[nt + i] = v.y;
        }
        let flux_part = -(pn - sn);
        Ok(ElasticProjection {
            k: sp.k,
            delta_plus: &flux_part + &tau_jump,
            delta_minus: &flux_part - &tau_jump,
            sigma_proj,
            u_proj,
            tau,
            rigid_residual,
        })
    }
}

/// Projects `(sigma, u)` on one element with the default quadrature.
pub fn project_elastic(
    sigma: impl Fn(&Point2<f64>) -> Matrix2<f64>,
    u: impl Fn(&Point2<f64>) -> Vector2<f64>,
    geom: &ElementGeometry,
    k: usize,
    tau: Matrix2<f64>,
) -> Result<ElasticProjection> {
    let sp = LocalSpaces::new(geom, k, default_exactness(k))?;
    ElasticProjector::new(&sp)?.project(&sp, sigma, u, tau)
}

/// Largest residuals of the three elasticity identities over both signs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElasticResiduals {
    /// `(Pi u - u, v)_K` for `v` in `P_{k-1}^2`.
    pub moments: f64,
    /// `<-(Pi sigma n - sigma n) +- tau(Pi u - u) - delta, mu>_dK`.
    pub boundary: f64,
    /// `-(div(Pi sigma - sigma), w)_K +- <tau P_M(Pi u - u), w>_dK - <delta, w>_dK`.
    pub divergence: f64,
}

impl ElasticResiduals {
    pub fn max(&self) -> f64 {
        self.moments.max(self.boundary).max(self.divergence)
    }
}

pub fn verify_elastic_identities(
    proj: &ElasticProjection,
    sp: &LocalSpaces,
    sigma: impl Fn(&Point2<f64>) -> Matrix2<f64>,
    div_sigma: impl Fn(&Point2<f64>) -> Vector2<f64>,
    u: impl Fn(&Point2<f64>) -> Vector2<f64>,
) -> ElasticResiduals {
    let basis = SymTensorBasis::new(sp.k);
    let n1 = sp.n_primal();
    let nf = sp.n_face();
    let nt = sp.n_trace();
    let rule = &sp.quad.volume;
    let tau = proj.tau;
    let uv = sp.vector_at_volume(&proj.u_proj);

    let mut moments: f64 = 0.0;
    for i in 0..poly_dim(sp.k as isize - 1) {
        let mut r = Vector2::zeros();
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            r += (uv[q] - u(p)) * (w * sp.vol.values[(q, i)]);
        }
        moments = moments.max(r.amax());
    }

    let pm_jump = |comp: usize| {
        let a = sp.l2_project_face(|p, _| sp.eval_vector(&proj.u_proj, p)[comp]);
        let b = sp.l2_project_face(|p, _| u(p)[comp]);
        a - b
    };
    let (jx, jy) = (pm_jump(0), pm_jump(1));

    let mut div_part = DVector::<f64>::zeros(2 * n1);
    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let d = -(basis.divergence_at_volume(sp, &proj.sigma_proj, q) - div_sigma(p)) * *w;
        for j in 0..n1 {
            div_part[j] += d.x * sp.vol.values[(q, j)];
            div_part[n1 + j] += d.y * sp.vol.values[(q, j)];
        }
    }

    let mut boundary: f64 = 0.0;
    let mut divergence: f64 = 0.0;
    for (sign, delta) in [(1.0, &proj.delta_plus), (-1.0, &proj.delta_minus)] {
        let mut face_part = DVector::<f64>::zeros(2 * n1);
        for (f, (frule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
            let psi = &sp.face_psi[f];
            let tab = &sp.face_tabs[f];
            let pu = sp.vector_at_face(f, &proj.u_proj);
            let dx = psi * delta.rows(f * nf, nf);
            let dy = psi * delta.rows(nt + f * nf, nf);
            let jfx = psi * jx.rows(f * nf, nf);
            let jfy = psi * jy.rows(f * nf, nf);
            let mut lhs = DVector::<f64>::zeros(2 * nf);
            for (i, (p, w)) in frule.points.iter().zip(&frule.weights).enumerate() {
                let ps = basis.eval_at_face(sp, &proj.sigma_proj, f, i);
                let dv = Vector2::new(dx[i], dy[i]);
                let v = -(ps - sigma(p)) * face.normal + sign * (tau * (pu[i] - u(p))) - dv;
                for m in 0..nf {
                    lhs[m] += w * v.x * psi[(i, m)];
                    lhs[nf + m] += w * v.y * psi[(i, m)];
                }
                let s = (sign * (tau * Vector2::new(jfx[i], jfy[i])) - dv) * *w;
                for j in 0..n1 {
                    face_part[j] += s.x * tab.values[(i, j)];
                    face_part[n1 + j] += s.y * tab.values[(i, j)];
                }
            }
            boundary = boundary.max(lhs.amax());
        }
        divergence = divergence.max((&div_part + face_part).amax());
    }
    ElasticResiduals {
        moments,
        boundary,
        divergence,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElasticLevel {
    pub h_max: f64,
    pub n_cells: usize,
    /// `||Pi sigma - sigma||`.
    pub sigma_error: f64,
    /// `(sum_K h_K^-2 ||Pi u - u||_K^2)^{1/2}`.
    pub scaled_u_error: f64,
    /// `(sum_K h_K ||delta_{+tau}||_dK^2)^{1/2}`.
    pub scaled_delta: f64,
    pub identity_residual: f64,
    pub rigid_residual: f64,
}

impl ElasticLevel {
    pub fn total(&self) -> f64 {
        self.sigma_error + self.scaled_u_error + self.scaled_delta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElasticStudy {
    pub k: usize,
    pub levels: Vec<ElasticLevel>,
    pub total_rate: f64,
    pub sigma_rate: f64,
    pub delta_rate: f64,
}

/// Elasticity projection errors and residuals on one mesh.
pub fn elastic_level(
    mesh: &PolyMesh,
    opts: &crate::projection::StudyOptions,
    sigma: impl Fn(&Point2<f64>) -> Matrix2<f64> + Sync,
    div_sigma: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync,
    u: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync,
) -> Result<ElasticLevel> {
    let per_cell = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let geom = element_geometry(mesh, c)?;
            let h = geom.diameter;
            let sp = LocalSpaces::new(&geom, opts.k, opts.exactness())?;
            let tau = Matrix2::identity() * (opts.tau_c / h);
            let proj = ElasticProjector::new(&sp)?.project(&sp, &sigma, &u, tau)?;
            let res = verify_elastic_identities(&proj, &sp, &sigma, &div_sigma, &u);
            let basis = SymTensorBasis::new(opts.k);
            let sig_err: f64 = sp
                .quad
                .volume
                .points
                .iter()
                .zip(&sp.quad.volume.weights)
                .enumerate()
                .map(|(q, (p, w))| w * (basis.eval_at_volume(&sp, &proj.sigma_proj, q) - sigma(p)).norm_squared())
                .sum();
            Ok([
                sig_err,
                sp.vector_error_sq(&u, &proj.u_proj) / (h * h),
                h * proj.delta_plus.norm_squared(),
                res.max(),
                proj.rigid_residual,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = |i: usize| per_cell.iter().map(|v| v[i]).sum::<f64>().sqrt();
    let max = |i: usize| per_cell.iter().map(|v| v[i]).fold(0.0, f64::max);
    Ok(ElasticLevel {
        h_max: mesh.h_max(),
        n_cells: mesh.n_cells(),
        sigma_error: sum(0),
        scaled_u_error: sum(1),
        scaled_delta: sum(2),
        identity_residual: max(3),
        rigid_residual: max(4),
    })
}

/// Elasticity projection errors over a refinement sequence with
/// `tau = (tau_c / h_K) I`.
pub fn elastic_convergence_study(
    meshes: &[PolyMesh],
    opts: &crate::projection::StudyOptions,
    sigma: impl Fn(&Point2<f64>) -> Matrix2<f64> + Sync,
    div_sigma: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync,
    u: impl Fn(&Point2<f64>) -> Vector2<f64> + Sync,
) -> Result<ElasticStudy> {
    if meshes.len() < 3 {
        return Err(Error::Input(format!(
            "a convergence study needs at least 3 levels, got {}",
            meshes.len()
        )));
    }
    let levels = meshes
        .iter()
        .map(|m| elastic_level(m, opts, &sigma, &div_sigma, &u))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = levels.iter().map(|l| l.h_max).collect();
    let rate = |f: fn(&ElasticLevel) -> f64| {
        let e: Vec<f64> = levels.iter().map(f).collect();
        fitted_rate(&h, &e, opts.include_coarsest)
    };
    Ok(ElasticStudy {
        k: opts.k,
        total_rate: rate(|l| l.total())?,
        sigma_rate: rate(|l| l.sigma_error)?,
        delta_rate: rate(|l| l.scaled_delta)?,
        levels,
    })
}
