use nalgebra::{DMatrix, DVector, Point2, LU};

use crate::error::{Error, Result};
use crate::mesh::ElementGeometry;
use crate::polyquad::{mass_and_mixed_matrices, LocalSpaces, MixedMatrices};

/// Element blocks of the scheme and the condensation onto the element's
/// trace unknowns.
///
/// With `X = [q; u]` and the local trace `lambda`, the element equations read
/// `K X = R lambda + [0; F]` where
///
/// ```text
/// K = [[A, -D^T], [D, tau T^T T]],   R = [-C^T; tau T^T],
/// ```
///
/// `A = (kappa^-1 q, r)`, `D = (div q, w)`, `T = <mu, w>`, `C = <mu, r.n>`
/// and `F = (f, w)`. The face equation contributes
/// `(tau I - [C, tau T] K^-1 R) lambda - [C, tau T] K^-1 [0; F]`.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    pub spaces: LocalSpaces,
    pub matrices: MixedMatrices,
    pub tau: f64,
    pub system: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `K^-1 R`.
    pub lift: DMatrix<f64>,
    /// `K^-1 [0; F]`.
    pub load: DVector<f64>,
    /// Condensed element matrix on the trace unknowns.
    pub schur: DMatrix<f64>,
    pub schur_rhs: DVector<f64>,
}

pub fn assemble_local(
    geom: &ElementGeometry,
    k: usize,
    kappa: Option<&(dyn Fn(&Point2<f64>) -> f64 + Sync)>,
    tau: f64,
    f: &(dyn Fn(&Point2<f64>) -> f64 + Sync),
    exactness: usize,
) -> Result<LocalOperator> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Input(format!("tau must be positive and finite, got {tau}")));
    }
    let sp = LocalSpaces::new(geom, k, exactness)?;
    let mm = mass_and_mixed_matrices(&sp, kappa)?;
    let nv = sp.n_flux();
    let nw = sp.n_primal();
    let nt = sp.n_trace();
    let n = nv + nw;

    let mut system = DMatrix::zeros(n, n);
    system.view_mut((0, 0), (nv, nv)).copy_from(&mm.flux_mass);
    system.view_mut((0, nv), (nv, nw)).copy_from(&(-mm.div.transpose()));
    system.view_mut((nv, 0), (nw, nv)).copy_from(&mm.div);
    system
        .view_mut((nv, nv), (nw, nw))
        .copy_from(&(mm.trace_scalar.tr_mul(&mm.trace_scalar) * tau));

    let mut r = DMatrix::zeros(n, nt);
    r.view_mut((0, 0), (nv, nt)).copy_from(&(-mm.trace_flux.transpose()));
    r.view_mut((nv, 0), (nw, nt)).copy_from(&(mm.trace_scalar.transpose() * tau));

    let mut load = DVector::zeros(n);
    load.rows_mut(nv, nw).copy_from(&sp.l2_project_scalar(f, k + 1));

    let lu = system.clone().lu();
    let lift = lu.solve(&r).ok_or(Error::SingularLocal(geom.cell_id))?;
    let load = lu.solve(&load).ok_or(Error::SingularLocal(geom.cell_id))?;
    if lift.iter().chain(load.iter()).any(|v| !v.is_finite()) {
        return Err(Error::SingularLocal(geom.cell_id));
    }

    let mut out = DMatrix::zeros(nt, n);
    out.view_mut((0, 0), (nt, nv)).copy_from(&mm.trace_flux);
    out.view_mut((0, nv), (nt, nw)).copy_from(&(&mm.trace_scalar * tau));
    let schur = DMatrix::identity(nt, nt) * tau - &out * &lift;
    let schur_rhs = &out * &load;

    Ok(LocalOperator {
        spaces: sp,
        matrices: mm,
        tau,
        system,
        lu,
        lift,
        load,
        schur,
        schur_rhs,
    })
}

impl LocalOperator {
    /// `(q_h, u_h)` on the element from its trace coefficients.
    pub fn recover(&self, lambda: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let x = &self.lift * lambda + &self.load;
        let nv = self.spaces.n_flux();
        let nw = self.spaces.n_primal();
        (x.rows(0, nv).into_owned(), x.rows(nv, nw).into_owned())
    }

    /// Solves the element system for an arbitrary right-hand side.
    pub fn solve_system(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(rhs)
    }

    /// `max |S - S^T| / max |S|` of the condensed element matrix.
    pub fn schur_asymmetry(&self) -> f64 {
        (&self.schur - self.schur.transpose()).amax() / self.schur.amax()
    }
}
