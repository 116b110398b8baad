//! Per-agent flocking control law.
//!
//! ```text
//! v_i = -(K_f / N_i) ō_i ∇²J_i (∂P_i/∂X_i)ᵀ
//! ω_i =  (K_f / N_i) ō_i⊥ ∇²J_i (∂P_i/∂X_i)ᵀ
//! ```
//!
//! with `ō_i = (cos θ_i, sin θ_i)` and `ō_i⊥ = (sin θ_i, -cos θ_i)`.
//! [`agent_step_inputs`] is the only entry point the simulation uses, and
//! its [`LocalView`] carries nothing about other agents beyond their
//! gradient samples and the shared edge memory.

use serde::{Deserialize, Serialize};

use crate::bus::GradientSample;
use crate::error::{FlockError, Result};
use crate::graph::mu;
use crate::potential::{edge_direction, grad_wrt_gradient, PotentialKind};
use crate::spacing::EdgeState;
use crate::types::{AgentState, Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub k_f: f64,
    pub potential: PotentialKind,
}

impl ControllerConfig {
    pub fn new(k_f: f64, potential: PotentialKind) -> Result<Self> {
        if !(k_f > 0.0) || !k_f.is_finite() {
            return Err(FlockError::InvalidArgument(format!("K_f = {k_f} must be positive")));
        }
        Ok(ControllerConfig { k_f, potential })
    }
}

pub fn orientation_vectors(theta: f64) -> (Vec2, Vec2) {
    let (s, c) = theta.sin_cos();
    (Vec2::new(c, s), Vec2::new(s, -c))
}

pub fn compute_control(
    pose: &AgentState,
    hess: &Mat2,
    grad_p: Vec2,
    n_neighbors: usize,
    cfg: &ControllerConfig,
) -> Result<ControlInput> {
    if !pose.is_finite() || !hess.is_finite() || !grad_p.is_finite() {
        return Err(FlockError::InvalidArgument("non-finite controller input".into()));
    }
    if n_neighbors == 0 {
        return Ok(ControlInput::default());
    }
    let (o, o_perp) = orientation_vectors(pose.theta);
    let gain = cfg.k_f / n_neighbors as f64;
    Ok(ControlInput {
        v: -gain * hess.bilinear(o, grad_p),
        omega: gain * hess.bilinear(o_perp, grad_p),
    })
}

/// Everything agent `id` may use to compute its input.
///
/// `edges[k]` is the spacing memory for the edge to `inbox[k].sender`. Its
/// `mu` and `e` are recomputed from the samples, so only `d`, `s` and `D*`
/// are read from it.
#[derive(Debug, Clone, Copy)]
pub struct LocalView<'a> {
    pub id: usize,
    pub pose: AgentState,
    pub gradient: Vec2,
    pub hessian: Mat2,
    pub inbox: &'a [GradientSample],
    pub edges: &'a [EdgeState],
}

pub fn agent_step_inputs(view: &LocalView<'_>, cfg: &ControllerConfig) -> Result<ControlInput> {
    if view.inbox.len() != view.edges.len() {
        return Err(FlockError::InvalidArgument(format!(
            "agent {}: {} samples but {} edge states",
            view.id,
            view.inbox.len(),
            view.edges.len()
        )));
    }
    let mut terms = Vec::with_capacity(view.inbox.len());
    for (sample, edge) in view.inbox.iter().zip(view.edges) {
        let geom = edge_direction(view.gradient, sample.gradient).map_err(|err| match err {
            FlockError::DegenerateDirection => FlockError::Collision { i: view.id, j: sample.sender },
            other => other,
        })?;
        terms.push((edge.with_mu(mu(view.gradient, sample.gradient)), geom));
    }
    let grad_p = grad_wrt_gradient(&terms, cfg.potential)?;
    compute_control(&view.pose, &view.hessian, grad_p, view.inbox.len(), cfg)
}
