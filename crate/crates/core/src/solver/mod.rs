//! The HDG+ diffusion solver with static condensation onto the traces.
//!
//! Find `(q_h, u_h, uhat_h)` in `P_k^2 x P_{k+1} x P_k(F)` with
//!
//! ```text
//! (kappa^-1 q_h, r) - (u_h, div r) + <uhat_h, r.n>         = 0
//! (div q_h, w) + <tau P_M(u_h - uhat_h), w>                = (f, w)
//! -<q_h.n + tau(P_M u_h - uhat_h), mu>  on interior faces  = 0
//! uhat_h = P_M g                        on boundary faces
//! ```
//!
//! Element unknowns are eliminated locally; the global system couples only
//! the `k + 1` trace coefficients of each interior face.

mod local;
mod report;

pub use local::{assemble_local, LocalOperator};
pub use report::{
    convergence_study, energy_identity, error_report, scheme_residuals, EnergyIdentity, ErrorReport,
    SchemeResiduals, SolverLevel, SolverRates, SolverStudy,
};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::PoissonData;
use crate::mesh::{element_geometry, PolyMesh};
use crate::polyquad::{default_exactness, FaceRule};
use crate::sparse::{conjugate_gradients, CsrMatrix, ProfileCholesky};

/// Linear solver for the condensed system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    /// Sparse Cholesky factorisation.
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients to a relative residual.
    Cg { tol: f64, max_iter: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub k: usize,
    /// `tau = tau_c / h_K` on every face of `K`.
    pub tau_c: f64,
    pub exactness: Option<usize>,
    pub linear: LinearSolver,
}

impl SolverOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            tau_c: 1.0,
            exactness: None,
            linear: LinearSolver::Cholesky,
        }
    }

    /// Defaults to two degrees above the element default so that quadrature
    /// of the smooth data does not pollute the discrete identities.
    pub fn exactness(&self) -> usize {
        self.exactness.unwrap_or(default_exactness(self.k) + 2)
    }
}

/// Numbering of the trace unknowns: interior faces only, `k + 1` per face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub per_face: usize,
    /// First unknown of each face, `None` on the boundary.
    pub face_start: Vec<Option<usize>>,
    pub n_dofs: usize,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh, per_face: usize) -> Self {
        let mut next = 0;
        let face_start = mesh
            .faces
            .iter()
            .map(|f| {
                if f.is_boundary() {
                    None
                } else {
                    next += per_face;
                    Some(next - per_face)
                }
            })
            .collect();
        Self {
            per_face,
            face_start,
            n_dofs: next,
        }
    }
}

/// Global condensed system after elimination of the boundary traces.
#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub matrix: CsrMatrix,
    pub rhs: DVector<f64>,
    pub dofs: DofMap,
}

impl CondensedSystem {
    pub fn size(&self) -> usize {
        self.dofs.n_dofs
    }

    /// `max |A - A^T| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        self.matrix.asymmetry()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        self.matrix.to_dense()
    }

    /// Smallest eigenvalue of the symmetric part (dense; small systems only).
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.to_dense();
        let sym = (&d + d.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    pub fn solve(&self, linear: LinearSolver) -> Result<DVector<f64>> {
        if self.size() == 0 {
            return Ok(DVector::zeros(0));
        }
        match linear {
            LinearSolver::Cholesky => Ok(ProfileCholesky::factor(&self.matrix)?.solve(&self.rhs)),
            LinearSolver::Cg { tol, max_iter } => conjugate_gradients(&self.matrix, &self.rhs, tol, max_iter),
        }
    }
}

/// Discrete solution: element coefficients plus face traces in each face's
/// global orientation.
#[derive(Clone, Debug)]
pub struct HdgSolution {
    pub k: usize,
    pub q: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    /// `k + 1` Legendre coefficients per global face.
    pub traces: Vec<DVector<f64>>,
    pub locals: Vec<LocalOperator>,
    pub condensed: CondensedSystem,
}

impl HdgSolution {
    /// Trace coefficients of element `cell` in its local face order.
    pub fn local_traces(&self, mesh: &PolyMesh, cell: usize) -> DVector<f64> {
        let nf = self.k + 1;
        let faces = &mesh.cell_faces[cell];
        let mut v = DVector::zeros(nf * faces.len());
        for (l, &g) in faces.iter().enumerate() {
            v.rows_mut(l * nf, nf).copy_from(&self.traces[g]);
        }
        v
    }
}

/// Face-wise `L2` projection of `g` onto `P_k(F)`.
fn project_on_face(rule: &FaceRule, psi: &nalgebra::DMatrix<f64>, g: &(dyn Fn(&nalgebra::Point2<f64>) -> f64 + Sync)) -> DVector<f64> {
    let mut c = DVector::zeros(psi.ncols());
    for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let v = w * g(p);
        for m in 0..psi.ncols() {
            c[m] += v * psi[(i, m)];
        }
    }
    c
}

/// Element operators for every cell, in cell order.
pub fn assemble_locals(mesh: &PolyMesh, data: &PoissonData, opts: &SolverOptions) -> Result<Vec<LocalOperator>> {
    if !(opts.tau_c > 0.0) {
        return Err(Error::Input(format!("tau constant must be positive, got {}", opts.tau_c)));
    }
    let kappa = data.kappa.as_deref().map(|k| k as &(dyn Fn(&nalgebra::Point2<f64>) -> f64 + Sync));
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let geom = element_geometry(mesh, c)?;
            let tau = opts.tau_c / geom.diameter;
            assemble_local(&geom, opts.k, kappa, tau, &*data.f, opts.exactness())
        })
        .collect()
}

/// Boundary traces `P_M g` and the assembled condensed system.
pub fn condense(
    mesh: &PolyMesh,
    locals: &[LocalOperator],
    data: &PoissonData,
    k: usize,
) -> Result<(CondensedSystem, Vec<Option<DVector<f64>>>)> {
    let nf = k + 1;
    let dofs = DofMap::new(mesh, nf);
    let mut dirichlet: Vec<Option<DVector<f64>>> = vec![None; mesh.n_faces()];
    for (g, face) in mesh.faces.iter().enumerate() {
        if face.is_boundary() {
            let (c, l) = face.first;
            let sp = &locals[c].spaces;
            dirichlet[g] = Some(project_on_face(&sp.quad.faces[l], &sp.face_psi[l], &*data.g));
        }
    }
    let mut triplets = Vec::new();
    let mut rhs = DVector::zeros(dofs.n_dofs);
    for (c, op) in locals.iter().enumerate() {
        let faces = &mesh.cell_faces[c];
        for (li, &gi) in faces.iter().enumerate() {
            let Some(si) = dofs.face_start[gi] else { continue };
            for a in 0..nf {
                let row = li * nf + a;
                rhs[si + a] += op.schur_rhs[row];
                for (lj, &gj) in faces.iter().enumerate() {
                    match (dofs.face_start[gj], &dirichlet[gj]) {
                        (Some(sj), _) => {
                            for b in 0..nf {
                                triplets.push((si + a, sj + b, op.schur[(row, lj * nf + b)]));
                            }
                        }
                        (None, Some(gv)) => {
                            for b in 0..nf {
                                rhs[si + a] -= op.schur[(row, lj * nf + b)] * gv[b];
                            }
                        }
                        (None, None) => {
                            return Err(Error::Assembly(format!("face {gj} has neither an unknown nor data")));
                        }
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(dofs.n_dofs, triplets)?;
    Ok((CondensedSystem { matrix, rhs, dofs }, dirichlet))
}

/// Solves the HDG+ scheme on `mesh`.
pub fn solve(mesh: &PolyMesh, data: &PoissonData, opts: &SolverOptions) -> Result<HdgSolution> {
    let locals = assemble_locals(mesh, data, opts)?;
    let (condensed, dirichlet) = condense(mesh, &locals, data, opts.k)?;
    let x = condensed.solve(opts.linear)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solve("condensed solve produced non-finite values".into()));
    }
    let nf = opts.k + 1;
    let traces: Vec<DVector<f64>> = (0..mesh.n_faces())
        .map(|g| match (condensed.dofs.face_start[g], &dirichlet[g]) {
            (Some(s), _) => x.rows(s, nf).into_owned(),
            (None, Some(v)) => v.clone(),
            (None, None) => DVector::zeros(nf),
        })
        .collect();
    let (q, u): (Vec<_>, Vec<_>) = locals
        .par_iter()
        .enumerate()
        .map(|(c, op)| {
            let faces = &mesh.cell_faces[c];
            let mut lam = DVector::zeros(nf * faces.len());
            for (l, &g) in faces.iter().enumerate() {
                lam.rows_mut(l * nf, nf).copy_from(&traces[g]);
            }
            op.recover(&lam)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .unzip();
    Ok(HdgSolution {
        k: opts.k,
        q,
        u,
        traces,
        locals,
        condensed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{poly, trig};
    use crate::mesh::{MeshFamily, MeshSpec};
    use nalgebra::{Point2, Vector2};
    use std::sync::Arc;

    fn data(g: impl Fn(&Point2<f64>) -> f64 + Send + Sync + 'static) -> PoissonData {
        PoissonData {
            kappa: None,
            f: Arc::new(|_| 0.0),
            g: Arc::new(g),
        }
    }

    #[test]
    fn single_square_reproduces_linear_potential() {
        let mesh = MeshSpec::new(MeshFamily::Quad, 1).generate().unwrap();
        let sol = solve(&mesh, &data(|p| p.x), &SolverOptions::new(0)).unwrap();
        let sp = &sol.locals[0].spaces;
        for p in [Point2::new(0.2, 0.3), Point2::new(0.8, 0.9)] {
            assert!((sp.eval_scalar(&sol.u[0], &p) - p.x).abs() < 1e-11);
            assert!((sp.eval_vector(&sol.q[0], &p) - Vector2::new(-1.0, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let mesh = MeshSpec::new(MeshFamily::Hexagon, 3).generate().unwrap();
        let sol = solve(&mesh, &data(|_| 1.0), &SolverOptions::new(1)).unwrap();
        for (c, op) in sol.locals.iter().enumerate() {
            let p = op.spaces.geom.star_center;
            assert!((op.spaces.eval_scalar(&sol.u[c], &p) - 1.0).abs() < 1e-11);
            assert!(sol.q[c].amax() < 1e-11);
        }
        for (t, face) in sol.traces.iter().zip(&mesh.faces) {
            // the constant 1 on a face of length L has coefficients (sqrt L, 0, ..)
            let len = (mesh.vertices[face.vertices[1]] - mesh.vertices[face.vertices[0]]).norm();
            assert!((t[0] - len.sqrt()).abs() < 1e-11);
            assert!(t.rows(1, t.len() - 1).amax() < 1e-11);
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let mesh = MeshSpec::new(MeshFamily::DistortedQuad, 3).generate().unwrap();
        let sol = solve(&mesh, &data(|_| 0.0), &SolverOptions::new(1)).unwrap();
        assert!(sol.q.iter().chain(&sol.u).chain(&sol.traces).all(|v| v.amax() == 0.0));
    }

    #[test]
    fn cg_matches_cholesky() {
        let mesh = MeshSpec::new(MeshFamily::DistortedQuad, 4).generate().unwrap();
        let d = trig().data();
        let a = solve(&mesh, &d, &SolverOptions::new(1)).unwrap();
        let mut o = SolverOptions::new(1);
        o.linear = LinearSolver::Cg { tol: 1e-13, max_iter: 10_000 };
        let b = solve(&mesh, &d, &o).unwrap();
        for (x, y) in a.traces.iter().zip(&b.traces) {
            assert!((x - y).amax() < 1e-10);
        }
    }

    #[test]
    fn local_condensation_is_symmetric_on_random_pentagon() {
        let m = crate::mesh::random_star_polygon(5, Point2::new(0.0, 0.0), 1.0, 77).unwrap();
        let geom = element_geometry(&m, 0).unwrap();
        let f = |p: &Point2<f64>| p.x.sin();
        let kappa = |p: &Point2<f64>| 1.5 + p.y.cos();
        for k in 0..=2 {
            let op = assemble_local(&geom, k, Some(&kappa), 1.0 / geom.diameter, &f, default_exactness(k)).unwrap();
            assert!(op.schur_asymmetry() < 1e-12, "{}", op.schur_asymmetry());
        }
    }

    #[test]
    fn polynomial_solution_is_exact() {
        let mesh = MeshSpec::new(MeshFamily::Hexagon, 2).generate().unwrap();
        let p = poly(2);
        let sol = solve(&mesh, &p.data(), &SolverOptions::new(1)).unwrap();
        for (c, op) in sol.locals.iter().enumerate() {
            assert!(op.spaces.scalar_error_sq(&*p.u, &sol.u[c]).sqrt() < 1e-10);
            assert!(op.spaces.vector_error_sq(&*p.q, &sol.q[c]).sqrt() < 1e-10);
        }
    }

    #[test]
    fn nonpositive_tau_is_rejected() {
        let mesh = MeshSpec::new(MeshFamily::Quad, 1).generate().unwrap();
        let mut o = SolverOptions::new(0);
        o.tau_c = 0.0;
        assert!(matches!(solve(&mesh, &data(|_| 0.0), &o), Err(Error::Input(_))));
    }
}
