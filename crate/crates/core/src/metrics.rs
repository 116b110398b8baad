//! Diagnostics for convergence, cohesion and safety.

use serde::Serialize;

use crate::controller::ControlInput;
use crate::error::Result;
use crate::graph::{is_connected, Topology};
use crate::potential::{potential_value, PotentialKind};
use crate::spacing::EdgeState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSnapshot {
    pub t: f64,
    pub n_edges: usize,
    pub sum_abs_e: f64,
    pub max_abs_e: f64,
    pub e_dev: f64,
    pub e_asp: f64,
    pub v_lyap: f64,
    pub connected: bool,
    /// Smallest gap over connected pairs; `+∞` with no edges.
    pub min_mu: f64,
    pub max_mu: f64,
    pub max_abs_v: f64,
    pub max_abs_omega: f64,
}

impl MetricsSnapshot {
    /// `ε = √E / d_nom`, the relative deviation from an equal-spacing lattice.
    pub fn epsilon(&self, d_nom: f64) -> f64 {
        self.e_dev.sqrt() / d_nom
    }
}

/// `E = Σ (μ - d_nom)² / (|E| + 1)`.
pub fn deviation_energy(edges: &[EdgeState], d_nom: f64) -> f64 {
    let sum: f64 = edges.iter().map(|e| (e.mu - d_nom).powi(2)).sum();
    sum / (edges.len() + 1) as f64
}

/// `E_ASP = Σ (μ - D*)² / (|E| + 1)`.
pub fn asp_energy(edges: &[EdgeState]) -> f64 {
    let sum: f64 = edges.iter().map(|e| e.e * e.e).sum();
    sum / (edges.len() + 1) as f64
}

/// `V = Σ_i P_i + N/2`. Every edge appears in both endpoints' `P_i`. The
/// `N/2` stands in for the `cos² θ + sin² θ` terms.
pub fn lyapunov(edges: &[EdgeState], kind: PotentialKind, n_agents: usize) -> Result<f64> {
    let mut sum = 0.0;
    for e in edges {
        sum += 2.0 * potential_value(kind, e)?;
    }
    Ok(sum + n_agents as f64 / 2.0)
}

pub fn snapshot(
    t: f64,
    edges: &[EdgeState],
    topo: &Topology,
    controls: &[ControlInput],
    kind: PotentialKind,
    d_nom: f64,
) -> Result<MetricsSnapshot> {
    let abs_e = edges.iter().map(|e| e.e.abs());
    Ok(MetricsSnapshot {
        t,
        n_edges: edges.len(),
        sum_abs_e: abs_e.clone().sum(),
        max_abs_e: abs_e.fold(0.0, f64::max),
        e_dev: deviation_energy(edges, d_nom),
        e_asp: asp_energy(edges),
        v_lyap: lyapunov(edges, kind, topo.n_agents())?,
        connected: is_connected(topo),
        min_mu: edges.iter().map(|e| e.mu).fold(f64::INFINITY, f64::min),
        max_mu: edges.iter().map(|e| e.mu).fold(0.0, f64::max),
        max_abs_v: controls.iter().map(|c| c.v.abs()).fold(0.0, f64::max),
        max_abs_omega: controls.iter().map(|c| c.omega.abs()).fold(0.0, f64::max),
    })
}
