//! Flocking potentials.
//!
//! Per-edge contributions only; an agent's `P_i` is the sum over its
//! neighbours. `Quadratic` is `½ e²`. `Barrier { r }` is
//! `½ e² [(ln(c μ))² + 1]` with `c = r - μ`, which blows up as the gap closes
//! (`μ → 0`) or the pair approaches the edge of sensing range (`μ → r`).

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::spacing::EdgeState;
use crate::types::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    Quadratic,
    Barrier { r: f64 },
}

/// Unit vector from `X_i` to `X_j` and its angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub o_mu: Vec2,
    pub beta: f64,
}

pub fn edge_direction(xi: Vec2, xj: Vec2) -> Result<EdgeGeometry> {
    let delta = xj - xi;
    let mu = delta.norm();
    if mu == 0.0 {
        return Err(FlockError::DegenerateDirection);
    }
    Ok(EdgeGeometry { o_mu: delta * (1.0 / mu), beta: delta.y.atan2(delta.x) })
}

/// `ln(c μ)` after checking `0 < μ < r`.
fn barrier_log(mu: f64, r: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < r) {
        return Err(FlockError::BarrierDomain { mu, r });
    }
    Ok(((r - mu) * mu).ln())
}

pub fn potential_value(kind: PotentialKind, edge: &EdgeState) -> Result<f64> {
    let e2 = edge.e * edge.e;
    match kind {
        PotentialKind::Quadratic => Ok(0.5 * e2),
        PotentialKind::Barrier { r } => {
            let l = barrier_log(edge.mu, r)?;
            Ok(0.5 * e2 * (l * l + 1.0))
        }
    }
}

/// Partial derivative in `e`, holding the barrier's direct `μ` term fixed.
#[allow(non_snake_case)]
pub fn dP_de(kind: PotentialKind, edge: &EdgeState) -> Result<f64> {
    match kind {
        PotentialKind::Quadratic => Ok(edge.e),
        PotentialKind::Barrier { r } => {
            let l = barrier_log(edge.mu, r)?;
            Ok(edge.e * (l * l + 1.0))
        }
    }
}

/// Total derivative in `μ` at fixed `D*` (so `∂e/∂μ = 1`).
#[allow(non_snake_case)]
pub fn dP_dmu_total(kind: PotentialKind, edge: &EdgeState) -> Result<f64> {
    match kind {
        PotentialKind::Quadratic => Ok(edge.e),
        PotentialKind::Barrier { r } => {
            let l = barrier_log(edge.mu, r)?;
            let c = r - edge.mu;
            let e = edge.e;
            Ok(e * (l * l + 1.0) + e * e * l * (r - 2.0 * edge.mu) / (c * edge.mu))
        }
    }
}

/// `∂P_i/∂X_i = -Σ_j (dP/dμ)_ij ō_μij` over the agent's incident edges.
pub fn grad_wrt_gradient(neighbors: &[(EdgeState, EdgeGeometry)], kind: PotentialKind) -> Result<Vec2> {
    let mut acc = Vec2::ZERO;
    for (edge, geom) in neighbors {
        acc = acc - geom.o_mu * dP_dmu_total(kind, edge)?;
    }
    Ok(acc)
}
