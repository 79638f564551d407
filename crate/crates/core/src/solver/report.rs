use nalgebra::{DVector, Point2};
use rayon::prelude::*;

use super::{solve, HdgSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::fields::{PoissonData, ScalarProblem};
use crate::mesh::PolyMesh;
use crate::polyquad::LocalSpaces;
use crate::projection::LocalProjector;
use crate::rates::fitted_rate;

/// Both sides of the energy identity
///
/// ```text
/// (kappa^-1 e_q, e_q) + <tau P_M(e_u - e_uhat), e_u - e_uhat>
///     = (kappa^-1 (Pi q - q), e_q) + <delta_tau, e_u - e_uhat>
/// ```
///
/// with `e_q = Pi q - q_h`, `e_u = Pi u - u_h`, `e_uhat = P_M u - uhat_h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// `||kappa^-1/2 (Pi q - q)||^2 + ||tau^-1/2 delta_tau||^2`, an upper
    /// bound for `lhs`.
    pub bound: f64,
}

impl EnergyIdentity {
    /// `|lhs - rhs| / |lhs|`; zero when both sides vanish.
    pub fn relative_residual(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if self.lhs == 0.0 {
            d
        } else {
            d / self.lhs.abs()
        }
    }

    /// `lhs <= bound` up to roundoff; exact solutions make both vanish.
    pub fn bound_holds(&self) -> bool {
        self.lhs <= self.bound * (1.0 + 1e-8) + 1e-20
    }
}

/// Error norms of one solve against the exact solution.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub h_max: f64,
    pub n_cells: usize,
    /// `||q - q_h||`.
    pub q_error: f64,
    /// `||u - u_h||`.
    pub u_error: f64,
    /// `||P_M u - uhat_h||_h` with `||mu||_h^2 = sum_K h_K ||mu||_dK^2`.
    pub trace_error: f64,
    /// `||Pi q - q_h||`.
    pub proj_q_error: f64,
    /// `||Pi u - u_h||`.
    pub proj_u_error: f64,
    /// `||tau^1/2 P_M(e_u - e_uhat)||_{dT_h}`.
    pub jump: f64,
    /// `||Pi q - q||`.
    pub q_proj_error: f64,
    /// `||tau^-1/2 delta_tau||_{dT_h}`.
    pub delta_norm: f64,
    /// `||h_K^1/2 (Pi_0 q - q)||_{dT_h}`, reported for `k = 0` only.
    pub qk: Option<f64>,
    pub energy: EnergyIdentity,
}

/// Per-element contributions, summed afterwards in cell order.
struct CellTerms {
    q: f64,
    u: f64,
    trace: f64,
    pq: f64,
    pu: f64,
    jump: f64,
    qproj: f64,
    delta: f64,
    qk: f64,
    lhs: f64,
    rhs: f64,
    bound_flux: f64,
}

fn cell_terms(mesh: &PolyMesh, sol: &HdgSolution, problem: &ScalarProblem, c: usize) -> Result<CellTerms> {
    let op = &sol.locals[c];
    let sp = &op.spaces;
    let tau = op.tau;
    let h = sp.geom.diameter;
    let q = &*problem.q;
    let u = &*problem.u;
    let proj = LocalProjector::from_matrices(sp, &op.matrices)?.project(sp, q, u, tau)?;
    let lam = sol.local_traces(mesh, c);
    let pm_u = sp.l2_project_face(|p, _| u(p));

    let e_q = &proj.q_proj - &sol.q[c];
    let e_u = &proj.u_proj - &sol.u[c];
    let e_hat = &pm_u - &lam;
    // P_M(e_u - e_uhat) in trace coefficients
    let jump_coef = &op.matrices.trace_scalar * &e_u - &e_hat;

    let a = &op.matrices.flux_mass;
    let inv_kappa = |p: &Point2<f64>| problem.kappa.as_ref().map_or(1.0, |k| 1.0 / k(p));
    let rule = &sp.quad.volume;
    let pq_vals = sp.vector_at_volume(&proj.q_proj);
    let e_vals = sp.vector_at_volume(&e_q);
    let mut weighted_cross = 0.0;
    let mut weighted_proj = 0.0;
    for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let d = pq_vals[i] - q(p);
        let ik = inv_kappa(p);
        weighted_cross += w * ik * d.dot(&e_vals[i]);
        weighted_proj += w * ik * d.norm_squared();
    }
    let lhs = e_q.dot(&(a * &e_q)) + tau * jump_coef.norm_squared();
    let rhs = weighted_cross + proj.delta_plus.dot(&jump_coef);

    let qk = if sol.k == 0 {
        let q0 = sp.l2_project_vector(q, 0);
        let mut s = 0.0;
        for (f, rule) in sp.quad.faces.iter().enumerate() {
            let vals = sp.vector_at_face(f, &q0);
            for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                s += w * (vals[i] - q(p)).norm_squared();
            }
        }
        h * s
    } else {
        0.0
    };

    Ok(CellTerms {
        q: sp.vector_error_sq(q, &sol.q[c]),
        u: sp.scalar_error_sq(u, &sol.u[c]),
        trace: h * e_hat.norm_squared(),
        pq: e_q.norm_squared(),
        pu: e_u.norm_squared(),
        jump: tau * jump_coef.norm_squared(),
        qproj: sp.vector_error_sq(q, &proj.q_proj),
        delta: proj.delta_plus.norm_squared() / tau,
        qk,
        lhs,
        rhs,
        bound_flux: weighted_proj,
    })
}

/// Error norms, projected errors and the energy identity of a solution.
pub fn error_report(mesh: &PolyMesh, sol: &HdgSolution, problem: &ScalarProblem) -> Result<ErrorReport> {
    let terms = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| cell_terms(mesh, sol, problem, c))
        .collect::<Result<Vec<_>>>()?;
    let sum = |f: fn(&CellTerms) -> f64| terms.iter().map(f).sum::<f64>();
    let energy = EnergyIdentity {
        lhs: sum(|t| t.lhs),
        rhs: sum(|t| t.rhs),
        bound: sum(|t| t.bound_flux) + sum(|t| t.delta),
    };
    Ok(ErrorReport {
        h_max: mesh.h_max(),
        n_cells: mesh.n_cells(),
        q_error: sum(|t| t.q).sqrt(),
        u_error: sum(|t| t.u).sqrt(),
        trace_error: sum(|t| t.trace).sqrt(),
        proj_q_error: sum(|t| t.pq).sqrt(),
        proj_u_error: sum(|t| t.pu).sqrt(),
        jump: sum(|t| t.jump).sqrt(),
        q_proj_error: sum(|t| t.qproj).sqrt(),
        delta_norm: sum(|t| t.delta).sqrt(),
        qk: (sol.k == 0).then(|| sum(|t| t.qk).sqrt()),
        energy,
    })
}

/// The energy identity alone.
pub fn energy_identity(mesh: &PolyMesh, sol: &HdgSolution, problem: &ScalarProblem) -> Result<EnergyIdentity> {
    Ok(error_report(mesh, sol, problem)?.energy)
}

/// Relative residuals of the four discrete equations, each tested against
/// its full discrete basis and evaluated by quadrature of the computed
/// fields. Each is `max |residual| / max |term|` over the equations of
/// that kind.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SchemeResiduals {
    pub flux: f64,
    pub balance: f64,
    pub conservation: f64,
    pub dirichlet: f64,
}

impl SchemeResiduals {
    pub fn max(&self) -> f64 {
        self.flux.max(self.balance).max(self.conservation).max(self.dirichlet)
    }
}

#[derive(Default)]
struct Acc {
    res: f64,
    scale: f64,
}

impl Acc {
    fn add(&mut self, terms: &[f64]) {
        let r: f64 = terms.iter().sum();
        self.res = self.res.max(r.abs());
        self.scale = self.scale.max(terms.iter().map(|t| t.abs()).fold(0.0, f64::max));
    }

    fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.res
        } else {
            self.res / self.scale
        }
    }
}

/// `P_M` of a polynomial given by its values at a face's quadrature points.
fn face_fit(sp: &LocalSpaces, f: usize, vals: &DVector<f64>) -> DVector<f64> {
    let psi = &sp.face_psi[f];
    let w = DVector::from_column_slice(&sp.quad.faces[f].weights);
    psi.tr_mul(&vals.component_mul(&w))
}

pub fn scheme_residuals(mesh: &PolyMesh, sol: &HdgSolution, data: &PoissonData) -> SchemeResiduals {
    let nf = sol.k + 1;
    let mut flux = Acc::default();
    let mut balance = Acc::default();
    let mut dirichlet = Acc::default();
    // per global face and trace mode: the terms of the conservation equation
    let mut cons: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); nf]; mesh.n_faces()];

    for (c, op) in sol.locals.iter().enumerate() {
        let sp = &op.spaces;
        let tau = op.tau;
        let nk = sp.n_flux_scalar();
        let nw = sp.n_primal();
        let rule = &sp.quad.volume;
        let qh = sp.vector_at_volume(&sol.q[c]);
        let uh = sp.scalar_at_volume(&sol.u[c]);
        let divq = sp.divergence_at_volume(&sol.q[c]);
        let lam = sol.local_traces(mesh, c);

        let mut t_mass = vec![0.0; 2 * nk];
        let mut t_div = vec![0.0; 2 * nk];
        let mut t_trace = vec![0.0; 2 * nk];
        let mut b_div = vec![0.0; nw];
        let mut b_stab = vec![0.0; nw];
        let mut b_f = vec![0.0; nw];
        for (i, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let ik = data.kappa.as_ref().map_or(1.0, |k| 1.0 / k(p));
            for a in 0..nk {
                let phi = sp.vol.values[(i, a)];
                t_mass[a] += w * ik * qh[i].x * phi;
                t_mass[nk + a] += w * ik * qh[i].y * phi;
                t_div[a] -= w * uh[i] * sp.vol.dx[(i, a)];
                t_div[nk + a] -= w * uh[i] * sp.vol.dy[(i, a)];
            }
            let fv = (data.f)(p);
            for j in 0..nw {
                let phi = sp.vol.values[(i, j)];
                b_div[j] += w * divq[i] * phi;
                b_f[j] -= w * fv * phi;
            }
        }
        for (f, (frule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
            let lam_f = sp.trace_at_face(f, &lam);
            let u_f = sp.scalar_at_face(f, &sol.u[c]);
            let pm_u = &sp.face_psi[f] * face_fit(sp, f, &u_f);
            let q_f = sp.vector_at_face(f, &sol.q[c]);
            let tab = &sp.face_tabs[f];
            let psi = &sp.face_psi[f];
            let mut flux_terms = vec![0.0; nf];
            let mut stab_terms = vec![0.0; nf];
            let mut data_terms = vec![0.0; nf];
            let mut lam_terms = vec![0.0; nf];
            for (i, (p, w)) in frule.points.iter().zip(&frule.weights).enumerate() {
                let n = face.normal;
                for a in 0..nk {
                    let phi = tab.values[(i, a)];
                    t_trace[a] += w * lam_f[i] * phi * n.x;
                    t_trace[nk + a] += w * lam_f[i] * phi * n.y;
                }
                let jump = tau * (pm_u[i] - lam_f[i]);
                for j in 0..nw {
                    b_stab[j] += w * jump * tab.values[(i, j)];
                }
                for m in 0..nf {
                    flux_terms[m] -= w * q_f[i].dot(&n) * psi[(i, m)];
                    stab_terms[m] -= w * jump * psi[(i, m)];
                    if face.on_boundary {
                        lam_terms[m] += w * lam_f[i] * psi[(i, m)];
                        data_terms[m] -= w * (data.g)(p) * psi[(i, m)];
                    }
                }
            }
            if face.on_boundary {
                for m in 0..nf {
                    dirichlet.add(&[lam_terms[m], data_terms[m]]);
                }
            } else {
                for m in 0..nf {
                    cons[face.global][m].push(flux_terms[m]);
                    cons[face.global][m].push(stab_terms[m]);
                }
            }
        }
        for a in 0..2 * nk {
            flux.add(&[t_mass[a], t_div[a], t_trace[a]]);
        }
        for j in 0..nw {
            balance.add(&[b_div[j], b_stab[j], b_f[j]]);
        }
    }
    let mut conservation = Acc::default();
    for face in cons.iter().filter(|f| !f[0].is_empty()) {
        for terms in face {
            conservation.add(terms);
        }
    }
    SchemeResiduals {
        flux: flux.relative(),
        balance: balance.relative(),
        conservation: conservation.relative(),
        dirichlet: dirichlet.relative(),
    }
}

/// One refinement level of a solver study.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverLevel {
    pub errors: ErrorReport,
    pub max_gamma: f64,
    pub max_faces: usize,
    pub condensed_size: usize,
    pub scheme_residual: f64,
    pub asymmetry: f64,
    /// Smallest eigenvalue of the condensed matrix when it was checked.
    pub min_eigenvalue: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverRates {
    pub q: f64,
    pub u: f64,
    pub trace: f64,
    pub proj_q: f64,
    pub proj_u: f64,
    pub qk: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverStudy {
    pub k: usize,
    pub levels: Vec<SolverLevel>,
    pub rates: SolverRates,
}

/// Solves on every mesh, measures errors and fits slopes. The condensed
/// matrix spectrum is checked on systems with at most `spd_check_limit`
/// unknowns.
pub fn convergence_study(
    meshes: &[PolyMesh],
    problem: &ScalarProblem,
    opts: &SolverOptions,
    include_coarsest: bool,
    spd_check_limit: usize,
) -> Result<SolverStudy> {
    if meshes.len() < 3 {
        return Err(Error::Input(format!(
            "a convergence study needs at least 3 levels, got {}",
            meshes.len()
        )));
    }
    let data = problem.data();
    let mut levels = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let sol = solve(mesh, &data, opts)?;
        let errors = error_report(mesh, &sol, problem)?;
        let residuals = scheme_residuals(mesh, &sol, &data);
        let max_gamma = sol
            .locals
            .iter()
            .map(|op| op.spaces.geom.shape_regularity().gamma_k)
            .fold(0.0, f64::max);
        let n = sol.condensed.size();
        levels.push(SolverLevel {
            errors,
            max_gamma,
            max_faces: mesh.max_face_count(),
            condensed_size: n,
            scheme_residual: residuals.max(),
            asymmetry: sol.condensed.asymmetry(),
            min_eigenvalue: (n > 0 && n <= spd_check_limit).then(|| sol.condensed.min_eigenvalue()),
        });
    }
    let h: Vec<f64> = levels.iter().map(|l| l.errors.h_max).collect();
    let rate = |f: &dyn Fn(&ErrorReport) -> f64| {
        let e: Vec<f64> = levels.iter().map(|l| f(&l.errors)).collect();
        fitted_rate(&h, &e, include_coarsest)
    };
    let rates = SolverRates {
        q: rate(&|e| e.q_error)?,
        u: rate(&|e| e.u_error)?,
        trace: rate(&|e| e.trace_error)?,
        proj_q: rate(&|e| e.proj_q_error)?,
        proj_u: rate(&|e| e.proj_u_error)?,
        qk: if opts.k == 0 {
            Some(rate(&|e| e.qk.unwrap_or(f64::NAN))?)
        } else {
            None
        },
    };
    Ok(SolverStudy {
        k: opts.k,
        levels,
        rates,
    })
}
