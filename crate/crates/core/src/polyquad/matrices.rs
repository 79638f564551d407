use nalgebra::{DMatrix, Point2};

use super::LocalSpaces;
use crate::error::{Error, Result};

/// Dense element matrices of the mixed forms. Flux columns/rows use the
/// `[x-block; y-block]` layout of `P_k(K)^2`, primal ones the first
/// `dim P_{k+1}` orthonormal functions, trace ones the face-wise layout of
/// `R_k(dK)`.
#[derive(Clone, Debug)]
pub struct MixedMatrices {
    /// `(u, v)_K` on `P_{k+1}(K)`.
    pub scalar_mass: DMatrix<f64>,
    /// `(kappa^-1 q, r)_K` on `P_k(K)^2`.
    pub flux_mass: DMatrix<f64>,
    /// `(q, grad w)_K`: flux rows, primal columns.
    pub grad: DMatrix<f64>,
    /// `(div q, w)_K`: primal rows, flux columns.
    pub div: DMatrix<f64>,
    /// `<mu, w>_dK`: trace rows, primal columns.
    pub trace_scalar: DMatrix<f64>,
    /// `<mu, r . n>_dK`: trace rows, flux columns.
    pub trace_flux: DMatrix<f64>,
    /// `<mu, eta>_dK`.
    pub face_mass: DMatrix<f64>,
}

/// Assembles the element matrices; `kappa` defaults to one and must be
/// positive at every volume quadrature node.
pub fn mass_and_mixed_matrices(
    sp: &LocalSpaces,
    kappa: Option<&(dyn Fn(&Point2<f64>) -> f64 + Sync)>,
) -> Result<MixedMatrices> {
    let nk = sp.n_flux_scalar();
    let nv = 2 * nk;
    let nw = sp.n_primal();
    let nt = sp.n_trace();
    let nf = sp.n_face();
    if sp.basis.dim() < nw || nw < nk {
        return Err(Error::Assembly(format!(
            "incompatible degrees: flux dim {nk}, primal dim {nw}, basis dim {}",
            sp.basis.dim()
        )));
    }
    let rule = &sp.quad.volume;
    let tab = &sp.vol;

    let mut scalar_mass = DMatrix::zeros(nw, nw);
    let mut flux_mass = DMatrix::zeros(nv, nv);
    let mut grad = DMatrix::zeros(nv, nw);
    for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let inv_kappa = match kappa {
            Some(kf) => {
                let kv = kf(p);
                if !(kv > 0.0) {
                    return Err(Error::Input(format!(
                        "kappa must be positive, got {kv} at ({}, {}) in cell {}",
                        p.x, p.y, sp.geom.cell_id
                    )));
                }
                1.0 / kv
            }
            None => 1.0,
        };
        for i in 0..nw {
            let pi = tab.values[(q, i)];
            for j in 0..nw {
                scalar_mass[(i, j)] += w * pi * tab.values[(q, j)];
            }
        }
        for a in 0..nk {
            let pa = tab.values[(q, a)];
            for b in 0..nk {
                let m = w * inv_kappa * pa * tab.values[(q, b)];
                flux_mass[(a, b)] += m;
                flux_mass[(nk + a, nk + b)] += m;
            }
            for j in 0..nw {
                grad[(a, j)] += w * pa * tab.dx[(q, j)];
                grad[(nk + a, j)] += w * pa * tab.dy[(q, j)];
            }
        }
    }

    let mut div = DMatrix::zeros(nw, nv);
    for (q, &w) in rule.weights.iter().enumerate() {
        for j in 0..nw {
            let pj = tab.values[(q, j)];
            for a in 0..nk {
                div[(j, a)] += w * tab.dx[(q, a)] * pj;
                div[(j, nk + a)] += w * tab.dy[(q, a)] * pj;
            }
        }
    }

    let mut trace_scalar = DMatrix::zeros(nt, nw);
    let mut trace_flux = DMatrix::zeros(nt, nv);
    let mut face_mass = DMatrix::zeros(nt, nt);
    for (f, (frule, face)) in sp.quad.faces.iter().zip(&sp.geom.faces).enumerate() {
        let psi = &sp.face_psi[f];
        let ft = &sp.face_tabs[f];
        let n = face.normal;
        for (q, &w) in frule.weights.iter().enumerate() {
            for m in 0..nf {
                let row = f * nf + m;
                let pm = w * psi[(q, m)];
                for j in 0..nw {
                    trace_scalar[(row, j)] += pm * ft.values[(q, j)];
                }
                for a in 0..nk {
                    let v = pm * ft.values[(q, a)];
                    trace_flux[(row, a)] += v * n.x;
                    trace_flux[(row, nk + a)] += v * n.y;
                }
                for l in 0..nf {
                    face_mass[(row, f * nf + l)] += pm * psi[(q, l)];
                }
            }
        }
    }

    Ok(MixedMatrices {
        scalar_mass,
        flux_mass,
        grad,
        div,
        trace_scalar,
        trace_flux,
        face_mass,
    })
}
