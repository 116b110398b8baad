//! Closed-loop simulation.
//!
//! The state is every agent pose plus the auxiliary spacing variable `d` of
//! every edge, integrated together as one ODE. Controls are recomputed at
//! each integrator stage. The edge set only changes between steps.

use std::collections::BTreeMap;
use std::fmt;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::bus::publish_all;
use crate::controller::{agent_step_inputs, ControlInput, ControllerConfig, LocalView};
use crate::error::{FlockError, Result};
use crate::field::{gradient, hessian, FieldModel};
use crate::graph::{canonical, mu, update_edges, Edge, EdgeEvent, EdgeEventKind, Topology, TopologyMode};
use crate::metrics::{snapshot, MetricsSnapshot};
use crate::spacing::{d_rate, DInit, EdgeState, SpacingParams};
use crate::types::{AgentState, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// How the desired gap evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingPolicy {
    /// `D*` follows the adaptive spacing law.
    #[default]
    Adaptive,
    /// `D* ≡ d_nom`: the classic equal-spacing flock.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub field: FieldModel,
    pub spacing: SpacingParams,
    pub d_init: DInit,
    pub controller: ControllerConfig,
    pub policy: SpacingPolicy,
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl SimConfig {
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    fn fresh_edge(&self, mu: f64) -> EdgeState {
        match self.policy {
            SpacingPolicy::Adaptive => EdgeState::new(self.d_init.resolve(&self.spacing), mu, &self.spacing),
            SpacingPolicy::Fixed => EdgeState::fixed(mu, &self.spacing),
        }
    }

    fn edge_from(&self, d: f64, mu: f64) -> EdgeState {
        match self.policy {
            SpacingPolicy::Adaptive => EdgeState::new(d, mu, &self.spacing),
            SpacingPolicy::Fixed => EdgeState::fixed(mu, &self.spacing),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub poses: Vec<AgentState>,
    /// Keyed by the current topology's edge set.
    pub edges: BTreeMap<Edge, EdgeState>,
    pub topo: Topology,
}

impl SimState {
    /// Initial state at `t = 0` with every edge started from `d_init`.
    pub fn new(poses: Vec<AgentState>, topo: Topology, cfg: &SimConfig) -> Result<Self> {
        if poses.len() != topo.n_agents() {
            return Err(FlockError::InvalidArgument(format!(
                "{} poses for {} agents",
                poses.len(),
                topo.n_agents()
            )));
        }
        let grads = gradients(&cfg.field, &poses);
        let edges = topo
            .edges()
            .iter()
            .map(|&(i, j)| ((i, j), cfg.fresh_edge(mu(grads[i], grads[j]))))
            .collect();
        Ok(SimState { t: 0.0, step: 0, poses, edges, topo })
    }

    pub fn gradients(&self, field: &FieldModel) -> Vec<Vec2> {
        gradients(field, &self.poses)
    }

    pub fn edge_list(&self) -> Vec<EdgeState> {
        self.edges.values().copied().collect()
    }

    fn d_values(&self) -> Vec<f64> {
        self.edges.values().map(|e| e.d).collect()
    }
}

pub fn gradients(field: &FieldModel, poses: &[AgentState]) -> Vec<Vec2> {
    poses.iter().map(|p| gradient(field, p.position())).collect()
}

/// Time derivative of the coupled state plus the controls that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    /// `(ẋ, ẏ, θ̇)` per agent.
    pub poses: Vec<[f64; 3]>,
    /// `ḋ` per edge, in edge-key order.
    pub d: Vec<f64>,
    pub controls: Vec<ControlInput>,
    pub messages: usize,
}

/// Sense, exchange, control: evaluates the right-hand side at an arbitrary
/// stage state sharing `topo`'s edge set.
fn eval_rates(
    poses: &[AgentState],
    d: &[f64],
    keys: &[Edge],
    topo: &Topology,
    cfg: &SimConfig,
    stamp: u64,
) -> Result<Rates> {
    let grads = gradients(&cfg.field, poses);
    let mail = publish_all(&grads, topo, stamp)?;

    let mut controls = Vec::with_capacity(poses.len());
    let mut edge_buf = Vec::new();
    for (i, pose) in poses.iter().enumerate() {
        let inbox = mail.inbox(i);
        edge_buf.clear();
        for sample in inbox {
            let k = keys
                .binary_search(&canonical(i, sample.sender))
                .map_err(|_| FlockError::InvalidArgument(format!("no edge state for ({i}, {})", sample.sender)))?;
            edge_buf.push(cfg.edge_from(d[k], 0.0));
        }
        let view = LocalView {
            id: i,
            pose: *pose,
            gradient: grads[i],
            hessian: hessian(&cfg.field, pose.position()),
            inbox,
            edges: &edge_buf,
        };
        controls.push(agent_step_inputs(&view, &cfg.controller)?);
    }

    let pose_rates = poses
        .iter()
        .zip(&controls)
        .map(|(p, u)| {
            let (s, c) = p.theta.sin_cos();
            [u.v * c, u.v * s, u.omega]
        })
        .collect();
    let d_rates = keys
        .iter()
        .zip(d)
        .map(|(&(i, j), &dk)| match cfg.policy {
            SpacingPolicy::Adaptive => d_rate(cfg.edge_from(dk, mu(grads[i], grads[j])).e),
            SpacingPolicy::Fixed => 0.0,
        })
        .collect();
    Ok(Rates { poses: pose_rates, d: d_rates, controls, messages: mail.message_count() })
}

pub fn derivatives(state: &SimState, cfg: &SimConfig) -> Result<Rates> {
    let keys: Vec<Edge> = state.edges.keys().copied().collect();
    eval_rates(&state.poses, &state.d_values(), &keys, &state.topo, cfg, state.step)
}

fn shifted(poses: &[AgentState], d: &[f64], k: &Rates, h: f64) -> (Vec<AgentState>, Vec<f64>) {
    let p = poses
        .iter()
        .zip(&k.poses)
        .map(|(p, r)| AgentState::new(p.x + h * r[0], p.y + h * r[1], p.theta + h * r[2]))
        .collect();
    let d = d.iter().zip(&k.d).map(|(x, r)| x + h * r).collect();
    (p, d)
}

/// One integrator step from `state`, given the stage-one rates `k1`.
fn advance(state: &SimState, k1: &Rates, cfg: &SimConfig) -> Result<(SimState, Vec<EdgeEvent>)> {
    let keys: Vec<Edge> = state.edges.keys().copied().collect();
    let d0 = state.d_values();
    let dt = cfg.dt;
    let (poses, d) = match cfg.integrator {
        Integrator::Euler => shifted(&state.poses, &d0, k1, dt),
        Integrator::Rk4 => {
            let stage = |p: &[AgentState], d: &[f64]| eval_rates(p, d, &keys, &state.topo, cfg, state.step);
            let (p2, d2) = shifted(&state.poses, &d0, k1, dt / 2.0);
            let k2 = stage(&p2, &d2)?;
            let (p3, d3) = shifted(&state.poses, &d0, &k2, dt / 2.0);
            let k3 = stage(&p3, &d3)?;
            let (p4, d4) = shifted(&state.poses, &d0, &k3, dt);
            let k4 = stage(&p4, &d4)?;
            let combine = |y: f64, a: f64, b: f64, c: f64, e: f64| y + dt / 6.0 * (a + 2.0 * b + 2.0 * c + e);
            let poses = state
                .poses
                .iter()
                .enumerate()
                .map(|(n, p)| {
                    let r = |m: usize| {
                        combine(
                            [p.x, p.y, p.theta][m],
                            k1.poses[n][m],
                            k2.poses[n][m],
                            k3.poses[n][m],
                            k4.poses[n][m],
                        )
                    };
                    AgentState::new(r(0), r(1), r(2))
                })
                .collect();
            let d = (0..d0.len()).map(|n| combine(d0[n], k1.d[n], k2.d[n], k3.d[n], k4.d[n])).collect();
            (poses, d)
        }
    };

    let step = state.step + 1;
    let t = step as f64 * dt;
    let poses: Vec<AgentState> = poses;
    if poses.iter().any(|p| !p.is_finite()) {
        return Err(FlockError::NonFinite { t });
    }
    let grads = gradients(&cfg.field, &poses);
    let mut edges: BTreeMap<Edge, EdgeState> = keys
        .iter()
        .zip(&d)
        .map(|(&(i, j), &dk)| ((i, j), cfg.edge_from(dk, mu(grads[i], grads[j]))))
        .collect();

    let mut topo = state.topo.clone();
    let mut events = Vec::new();
    if let TopologyMode::Dynamic { .. } = topo.mode() {
        events = update_edges(&mut topo, &grads, t)?;
        for ev in &events {
            let (i, j) = ev.edge;
            match ev.kind {
                EdgeEventKind::Added => {
                    debug!("t = {t:.4}: edge ({i}, {j}) admitted");
                    edges.insert(ev.edge, cfg.fresh_edge(mu(grads[i], grads[j])));
                }
                EdgeEventKind::RemovedViolation => {
                    edges.remove(&ev.edge);
                }
            }
        }
    }
    Ok((SimState { t, step, poses, edges, topo }, events))
}

/// Advances one step and, in dynamic mode, re-evaluates the edge set.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<(SimState, Vec<EdgeEvent>)> {
    let k1 = derivatives(state, cfg)?;
    advance(state, &k1, cfg)
}

/// Checks the per-step invariants: edge keys match the topology and, under
/// the adaptive policy, `s` and `D*` sit strictly inside their bands.
pub fn check_invariants(state: &SimState, cfg: &SimConfig) -> Result<()> {
    let t = state.t;
    if !state.edges.keys().eq(state.topo.edges().iter()) {
        return Err(FlockError::Invariant { t, what: "edge states out of sync with topology".into() });
    }
    if cfg.policy == SpacingPolicy::Adaptive {
        let (slo, shi) = cfg.spacing.scale_bounds();
        let (glo, ghi) = cfg.spacing.gap_bounds();
        for (&(i, j), e) in &state.edges {
            if !(e.s > slo && e.s < shi && e.d_star > glo && e.d_star < ghi) {
                return Err(FlockError::Invariant {
                    t,
                    what: format!("edge ({i}, {j}) left the spacing band: s = {}, D* = {}", e.s, e.d_star),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub step: u64,
    pub poses: Vec<AgentState>,
    pub controls: Vec<ControlInput>,
    pub edges: Vec<(Edge, EdgeState)>,
    pub metrics: MetricsSnapshot,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub n_agents: usize,
    pub samples: Vec<TraceSample>,
    pub events: Vec<EdgeEvent>,
    /// Gradient samples delivered over all stage evaluations.
    pub messages: u64,
    pub steps: u64,
}

impl SimTrace {
    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn final_metrics(&self) -> Option<&MetricsSnapshot> {
        self.samples.last().map(|s| &s.metrics)
    }

    pub fn removed_violations(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EdgeEventKind::RemovedViolation).count()
    }

    /// Every edge that appears anywhere in the trace, sorted.
    pub fn all_edges(&self) -> Vec<Edge> {
        let mut v: Vec<Edge> = self.samples.iter().flat_map(|s| s.edges.iter().map(|(k, _)| *k)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// A run that stopped early. The trace holds everything up to the failure.
#[derive(Debug)]
pub struct RunError {
    pub error: FlockError,
    pub trace: SimTrace,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.trace.last().map_or(0.0, |s| s.t);
        write!(f, "{} (last recorded t = {t})", self.error)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn record(trace: &mut SimTrace, state: &SimState, controls: &[ControlInput], cfg: &SimConfig) -> Result<()> {
    let edges = state.edge_list();
    let metrics = snapshot(
        state.t,
        &edges,
        &state.topo,
        controls,
        cfg.controller.potential,
        cfg.spacing.d_nom,
    )?;
    trace.samples.push(TraceSample {
        t: state.t,
        step: state.step,
        poses: state.poses.clone(),
        controls: controls.to_vec(),
        edges: state.edges.iter().map(|(k, v)| (*k, *v)).collect(),
        metrics,
    });
    Ok(())
}

/// Simulates `[0, t_end]` from `init`, recording every `record_every`-th
/// step and always the last one.
pub fn run(cfg: &SimConfig, init: SimState) -> std::result::Result<SimTrace, RunError> {
    let mut trace = SimTrace { n_agents: init.poses.len(), ..SimTrace::default() };
    match run_into(cfg, init, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(RunError { error, trace }),
    }
}

fn run_into(cfg: &SimConfig, init: SimState, trace: &mut SimTrace) -> Result<()> {
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(FlockError::InvalidArgument(format!("dt = {} must be positive", cfg.dt)));
    }
    let every = cfg.record_every.max(1) as u64;
    let n_steps = cfg.n_steps();
    let mut state = init;
    check_invariants(&state, cfg)?;
    loop {
        let k1 = derivatives(&state, cfg)?;
        trace.messages += k1.messages as u64;
        if state.step.is_multiple_of(every) || state.step == n_steps {
            record(trace, &state, &k1.controls, cfg)?;
        }
        if state.step >= n_steps {
            break;
        }
        let (next, events) = advance(&state, &k1, cfg)?;
        if cfg.integrator == Integrator::Rk4 {
            trace.messages += 3 * k1.messages as u64;
        }
        trace.steps += 1;
        let removed = events.iter().find(|e| e.kind == EdgeEventKind::RemovedViolation).copied();
        trace.events.extend(events);
        if let Some(ev) = removed {
            return Err(FlockError::EdgeRemoved { t: ev.time, i: ev.edge.0, j: ev.edge.1 });
        }
        state = next;
        check_invariants(&state, cfg)?;
    }
    Ok(())
}
