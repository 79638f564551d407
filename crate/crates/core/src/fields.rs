//! Analytic fields and the built-in manufactured-solution catalog.
//!
//! Every problem carries closed-form derivatives, so fluxes, forcing terms
//! and divergences are evaluated exactly at quadrature nodes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Matrix2, Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&Point2<f64>) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(&Point2<f64>) -> Matrix2<f64> + Send + Sync>;

/// Diffusion problem `kappa^-1 q + grad u = 0`, `div q = f`, `u = g` on the
/// boundary, with its exact solution.
#[derive(Clone)]
pub struct ScalarProblem {
    pub name: String,
    /// `None` means `kappa = 1`.
    pub kappa: Option<ScalarFn>,
    pub u: ScalarFn,
    /// `q = -kappa grad u`.
    pub q: VectorFn,
    /// `f = div q`.
    pub f: ScalarFn,
}

impl ScalarProblem {
    /// Builds `q` and `f` from `u`, its gradient and Laplacian, and an optional
    /// `kappa` with its gradient.
    pub fn from_potential(
        name: &str,
        u: ScalarFn,
        grad_u: VectorFn,
        lap_u: ScalarFn,
        kappa: Option<(ScalarFn, VectorFn)>,
    ) -> Self {
        match kappa {
            None => {
                let g = grad_u.clone();
                let l = lap_u.clone();
                Self {
                    name: name.to_string(),
                    kappa: None,
                    u,
                    q: Arc::new(move |p| -g(p)),
                    f: Arc::new(move |p| -l(p)),
                }
            }
            Some((k, gk)) => {
                let (k1, g1) = (k.clone(), grad_u.clone());
                let (k2, g2, gk2, l2) = (k.clone(), grad_u, gk, lap_u);
                Self {
                    name: name.to_string(),
                    kappa: Some(k),
                    u,
                    q: Arc::new(move |p| -k1(p) * g1(p)),
                    f: Arc::new(move |p| -(gk2(p).dot(&g2(p)) + k2(p) * l2(p))),
                }
            }
        }
    }

    pub fn data(&self) -> PoissonData {
        PoissonData {
            kappa: self.kappa.clone(),
            f: self.f.clone(),
            g: self.u.clone(),
        }
    }
}

impl fmt::Debug for ScalarProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarProblem")
            .field("name", &self.name)
            .field("variable_kappa", &self.kappa.is_some())
            .finish()
    }
}

/// Coefficient, forcing and Dirichlet data for the diffusion solver.
#[derive(Clone)]
pub struct PoissonData {
    pub kappa: Option<ScalarFn>,
    pub f: ScalarFn,
    pub g: ScalarFn,
}

/// Displacement `u` with stress `sigma = eps(u)` and its divergence.
#[derive(Clone)]
pub struct ElasticProblem {
    pub name: String,
    pub u: VectorFn,
    pub sigma: TensorFn,
    pub div_sigma: VectorFn,
}

impl fmt::Debug for ElasticProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElasticProblem").field("name", &self.name).finish()
    }
}

/// Names of the built-in problems: `trig`, `poly-<p>`, `varkappa`,
/// `elastic-trig`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProblemId {
    Trig,
    Poly(u32),
    VarKappa,
    ElasticTrig,
}

impl ProblemId {
    pub fn is_elastic(&self) -> bool {
        matches!(self, ProblemId::ElasticTrig)
    }

    pub fn scalar(&self) -> Result<ScalarProblem> {
        match *self {
            ProblemId::Trig => Ok(trig()),
            ProblemId::Poly(p) => Ok(poly(p)),
            ProblemId::VarKappa => Ok(varkappa()),
            ProblemId::ElasticTrig => Err(Error::Input(
                "elastic-trig is an elasticity problem, not a diffusion problem".into(),
            )),
        }
    }

    pub fn elastic(&self) -> Result<ElasticProblem> {
        match *self {
            ProblemId::ElasticTrig => Ok(elastic_trig()),
            other => Err(Error::Input(format!("{other} is not an elasticity problem"))),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::Trig => write!(f, "trig"),
            ProblemId::Poly(p) => write!(f, "poly-{p}"),
            ProblemId::VarKappa => write!(f, "varkappa"),
            ProblemId::ElasticTrig => write!(f, "elastic-trig"),
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trig" => Ok(ProblemId::Trig),
            "varkappa" => Ok(ProblemId::VarKappa),
            "elastic-trig" => Ok(ProblemId::ElasticTrig),
            _ => s
                .strip_prefix("poly-")
                .and_then(|p| p.parse().ok())
                .map(ProblemId::Poly)
                .ok_or_else(|| {
                    Error::Input(format!(
                        "unknown problem '{s}' (expected trig, poly-<p>, varkappa or elastic-trig)"
                    ))
                }),
        }
    }
}

impl TryFrom<String> for ProblemId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProblemId> for String {
    fn from(p: ProblemId) -> String {
        p.to_string()
    }
}

/// `u = sin(pi x) sin(pi y)`, `kappa = 1`.
pub fn trig() -> ScalarProblem {
    ScalarProblem::from_potential(
        "trig",
        Arc::new(|p| (PI * p.x).sin() * (PI * p.y).sin()),
        Arc::new(trig_grad),
        Arc::new(|p| -2.0 * PI * PI * (PI * p.x).sin() * (PI * p.y).sin()),
        None,
    )
}

fn trig_grad(p: &Point2<f64>) -> Vector2<f64> {
    Vector2::new(
        PI * (PI * p.x).cos() * (PI * p.y).sin(),
        PI * (PI * p.x).sin() * (PI * p.y).cos(),
    )
}

/// `u = (1 + x + 2y)^p`, `kappa = 1`; lies in `P_p`.
pub fn poly(p: u32) -> ScalarProblem {
    let pf = p as f64;
    let pi = p as i32;
    let s = |x: &Point2<f64>| 1.0 + x.x + 2.0 * x.y;
    ScalarProblem::from_potential(
        &format!("poly-{p}"),
        Arc::new(move |x| s(x).powi(pi)),
        Arc::new(move |x| {
            let d = if p == 0 { 0.0 } else { pf * s(x).powi(pi - 1) };
            Vector2::new(d, 2.0 * d)
        }),
        Arc::new(move |x| if p < 2 { 0.0 } else { 5.0 * pf * (pf - 1.0) * s(x).powi(pi - 2) }),
        None,
    )
}

/// `kappa = 2 + sin(xy)` with the trig potential.
pub fn varkappa() -> ScalarProblem {
    ScalarProblem::from_potential(
        "varkappa",
        Arc::new(|p| (PI * p.x).sin() * (PI * p.y).sin()),
        Arc::new(trig_grad),
        Arc::new(|p| -2.0 * PI * PI * (PI * p.x).sin() * (PI * p.y).sin()),
        Some((
            Arc::new(|p| 2.0 + (p.x * p.y).sin()),
            Arc::new(|p| (p.x * p.y).cos() * Vector2::new(p.y, p.x)),
        )),
    )
}

/// `u = (sin(pi x) sin(pi y), x^2 y)`, `sigma = eps(u)`.
pub fn elastic_trig() -> ElasticProblem {
    ElasticProblem {
        name: "elastic-trig".into(),
        u: Arc::new(|p| Vector2::new((PI * p.x).sin() * (PI * p.y).sin(), p.x * p.x * p.y)),
        sigma: Arc::new(|p| {
            let s11 = PI * (PI * p.x).cos() * (PI * p.y).sin();
            let s22 = p.x * p.x;
            let s12 = 0.5 * (PI * (PI * p.x).sin() * (PI * p.y).cos() + 2.0 * p.x * p.y);
            Matrix2::new(s11, s12, s12, s22)
        }),
        div_sigma: Arc::new(|p| {
            let ss = (PI * p.x).sin() * (PI * p.y).sin();
            let cc = (PI * p.x).cos() * (PI * p.y).cos();
            Vector2::new(
                -PI * PI * ss + 0.5 * (-PI * PI * ss + 2.0 * p.x),
                0.5 * (PI * PI * cc + 2.0 * p.y),
            )
        }),
    }
}
