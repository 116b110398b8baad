//! Scenario files.
//!
//! Scenarios are TOML documents with flat top-level keys plus `[field]`,
//! `[topology]` and `[initial]` tables:
//!
//! ```toml
//! name = "static_k5_cubic"
//! n_agents = 5
//! potential = "quadratic"   # or "barrier" (dynamic topologies only)
//! k_f = 1.0
//! d_nom = 2.0
//! lambda = 1.0
//! d_init = "zero"           # "nominal" | "zero" | a number
//! dt = 1e-3
//! T = 50.0
//! record_every = 10
//! integrator = "rk4"        # or "euler"
//!
//! [field]
//! kind = "cubic_bench"      # "quadratic_bowl" | "polynomial" (+ terms = [[i, j, c], ...])
//!
//! [topology]
//! mode = "complete"         # "static" (+ edges = [[i, j], ...]) | "dynamic" (+ r = 10.0)
//!
//! [initial]
//! poses = [[x, y, theta], ...]
//! # or: seed = 7, radius = 3.0, min_separation = 0.5
//! ```

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::error::{FlockError, Result};
use crate::field::{gradient, FieldModel};
use crate::graph::{is_connected, mu, Edge, Topology};
use crate::potential::PotentialKind;
use crate::sim::{gradients, Integrator, SimConfig, SimState, SpacingPolicy};
use crate::spacing::{DInit, SpacingParams};
use crate::types::{AgentState, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialChoice {
    Quadratic,
    Barrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TopologySpec {
    Static { edges: Vec<Edge> },
    Complete,
    Dynamic { r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InitialPoses {
    Explicit { poses: Vec<[f64; 3]> },
    Generated(PoseGenerator),
}

/// Seeded random poses in a disc, rejecting draws whose gradient lies
/// within `min_separation` of an earlier agent's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseGenerator {
    pub seed: u64,
    pub radius: f64,
    pub min_separation: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

fn default_k_f() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    50.0
}
fn default_record_every() -> usize {
    10
}
fn default_d_init() -> DInit {
    DInit::Nominal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub n_agents: usize,
    pub potential: PotentialChoice,
    #[serde(default = "default_k_f")]
    pub k_f: f64,
    pub d_nom: f64,
    pub lambda: f64,
    #[serde(default = "default_d_init")]
    pub d_init: DInit,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T", default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub field: FieldModel,
    pub topology: TopologySpec,
    pub initial: InitialPoses,
}

pub const BUNDLED: &[(&str, &str)] = &[
    ("static_k5_cubic", include_str!("../scenarios/static_k5_cubic.toml")),
    ("dynamic_r10", include_str!("../scenarios/dynamic_r10.toml")),
];

/// A scenario shipped with the crate, by name.
pub fn bundled(name: &str) -> Option<ScenarioConfig> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_config(src).expect("bundled scenario is valid"))
}

pub fn parse_config(src: &str) -> Result<ScenarioConfig> {
    if src.trim().is_empty() {
        return Err(FlockError::Parse("config is empty".into()));
    }
    let cfg: ScenarioConfig = toml::from_str(src).map_err(|e| FlockError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let src = std::fs::read_to_string(path)?;
    parse_config(&src)
}

impl ScenarioConfig {
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FlockError::Parse(e.to_string()))
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self.topology, TopologySpec::Dynamic { .. })
    }

    /// Replaces the generator seed; no effect on explicit poses.
    pub fn set_seed(&mut self, seed: u64) {
        if let InitialPoses::Generated(g) = &mut self.initial {
            g.seed = seed;
        }
    }

    pub fn initial_poses(&self) -> Result<Vec<AgentState>> {
        match &self.initial {
            InitialPoses::Explicit { poses } => Ok(poses.iter().map(|p| AgentState::new(p[0], p[1], p[2])).collect()),
            InitialPoses::Generated(g) => generate_poses(&self.field, self.n_agents, g),
        }
    }

    pub fn potential_kind(&self) -> PotentialKind {
        match (self.potential, &self.topology) {
            (PotentialChoice::Barrier, TopologySpec::Dynamic { r }) => PotentialKind::Barrier { r: *r },
            _ => PotentialKind::Quadratic,
        }
    }

    pub fn topology(&self, poses: &[AgentState]) -> Result<Topology> {
        match &self.topology {
            TopologySpec::Static { edges } => Topology::from_edges(self.n_agents, edges),
            TopologySpec::Complete => Topology::complete(self.n_agents),
            TopologySpec::Dynamic { r } => Topology::dynamic(*r, &gradients(&self.field, poses)),
        }
    }

    pub fn sim_config(&self, policy: SpacingPolicy) -> Result<SimConfig> {
        Ok(SimConfig {
            field: self.field.clone(),
            spacing: SpacingParams::new(self.d_nom, self.lambda)?,
            d_init: self.d_init,
            controller: ControllerConfig::new(self.k_f, self.potential_kind())?,
            policy,
            integrator: self.integrator,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
        })
    }

    /// Simulation config and initial state for the given spacing policy.
    pub fn build(&self, policy: SpacingPolicy) -> Result<(SimConfig, SimState)> {
        self.validate()?;
        let cfg = self.sim_config(policy)?;
        let poses = self.initial_poses()?;
        let topo = self.topology(&poses)?;
        let state = SimState::new(poses, topo, &cfg)?;
        Ok((cfg, state))
    }

    /// Collects every violated constraint instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let positive = |errs: &mut Vec<String>, key: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{key} {v} must be a positive finite number"));
            }
        };
        if self.n_agents == 0 {
            errs.push("n_agents must be at least 1".into());
        }
        positive(&mut errs, "d_nom", self.d_nom);
        positive(&mut errs, "lambda", self.lambda);
        positive(&mut errs, "k_f", self.k_f);
        positive(&mut errs, "dt", self.dt);
        positive(&mut errs, "T", self.t_end);
        if self.record_every == 0 {
            errs.push("record_every must be at least 1".into());
        }
        if let Err(e) = self.field.validate() {
            errs.push(format!("field: {e}"));
        }
        if let InitialPoses::Generated(g) = &self.initial {
            positive(&mut errs, "initial.radius", g.radius);
            positive(&mut errs, "initial.min_separation", g.min_separation);
        }
        match &self.topology {
            TopologySpec::Dynamic { r } => {
                positive(&mut errs, "topology.r", *r);
                if *r > 0.0 && self.d_nom > 0.0 {
                    let bound = SpacingParams::lambda_bound(self.d_nom, *r);
                    if self.lambda > bound {
                        errs.push(format!("lambda {:?} > ln(r/d_nom) = {bound:.4}", self.lambda));
                    }
                }
            }
            _ => {
                if self.potential == PotentialChoice::Barrier {
                    errs.push("potential \"barrier\" needs a dynamic topology (it binds the sensing range r)".into());
                }
            }
        }
        if !errs.is_empty() {
            return Err(FlockError::Validation(errs));
        }

        // checks below need usable poses
        let poses = match self.initial_poses() {
            Ok(p) => p,
            Err(e) => return Err(FlockError::Validation(vec![format!("initial: {e}")])),
        };
        if poses.len() != self.n_agents {
            errs.push(format!("initial.poses has {} entries for n_agents = {}", poses.len(), self.n_agents));
            return Err(FlockError::Validation(errs));
        }
        if let Some(k) = poses.iter().position(|p| !p.is_finite()) {
            errs.push(format!("initial pose {k} is not finite"));
        }
        let topo = match self.topology(&poses) {
            Ok(t) => t,
            Err(e) => {
                errs.push(format!("topology: {e}"));
                return Err(FlockError::Validation(errs));
            }
        };
        if self.is_dynamic() && !is_connected(&topo) {
            errs.push("dynamic topology: initial graph is not connected".into());
        }
        let grads = gradients(&self.field, &poses);
        for &(i, j) in topo.edges() {
            if mu(grads[i], grads[j]) == 0.0 {
                errs.push(format!("agents {i} and {j} are connected but share a gradient (mu = 0)"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(FlockError::Validation(errs))
        }
    }
}

/// Draws `n` poses uniformly in the disc, with every pair at least
/// `min_separation` apart in gradient space.
pub fn generate_poses(field: &FieldModel, n: usize, g: &PoseGenerator) -> Result<Vec<AgentState>> {
    const MAX_TRIES: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut poses: Vec<AgentState> = Vec::with_capacity(n);
    let mut grads: Vec<Vec2> = Vec::with_capacity(n);
    let mut tries = 0;
    while poses.len() < n {
        tries += 1;
        if tries > MAX_TRIES {
            return Err(FlockError::InvalidArgument(format!(
                "could not place {n} agents with min_separation {} in radius {}",
                g.min_separation, g.radius
            )));
        }
        let rad = g.radius * rng.gen::<f64>().sqrt();
        let ang = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let p = Vec2::new(g.center[0] + rad * ang.cos(), g.center[1] + rad * ang.sin());
        let x = gradient(field, p);
        if grads.iter().all(|&o| mu(o, x) >= g.min_separation) {
            let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            poses.push(AgentState::new(p.x, p.y, theta));
            grads.push(x);
        }
    }
    Ok(poses)
}
