//! Flexible distributed flocking for unicycle agents.
//!
//! Agents exchange only their local field gradient. Each edge carries an
//! adaptive spacing state that lets the desired gap drift inside a bounded
//! band until the whole flock settles on a geometry it can actually realise.
//!
//! Module map:
//!
//! * [`field`]: scalar fields with exact gradients and Hessians.
//! * [`graph`]: static or range-limited communication topology.
//! * [`spacing`]: the adaptive spacing policy (per-edge `d`, `s`, `D*`, `e`).
//! * [`potential`]: quadratic and log-barrier flocking potentials.
//! * [`controller`]: the per-agent `(v, ω)` control law.
//! * [`bus`]: synchronous gradient-message exchange.
//! * [`sim`]: coupled RK4/Euler integration and trace recording.
//! * [`metrics`]: deviation energies, Lyapunov value and safety diagnostics.
//! * [`scenario`], [`export`], [`compare`]: configuration, CSV output and the
//!   fixed-spacing baseline comparison used by the CLI.

pub mod bus;
pub mod compare;
pub mod controller;
pub mod error;
pub mod export;
pub mod field;
pub mod graph;
pub mod metrics;
pub mod potential;
pub mod scenario;
pub mod sim;
pub mod spacing;
pub mod types;

pub use bus::{GradientSample, Mailboxes};
pub use controller::{ControlInput, ControllerConfig, LocalView};
pub use error::{FlockError, Result};
pub use field::FieldModel;
pub use graph::{EdgeEvent, EdgeEventKind, Topology, TopologyMode};
pub use metrics::MetricsSnapshot;
pub use potential::{EdgeGeometry, PotentialKind};
pub use scenario::ScenarioConfig;
pub use sim::{Integrator, SimConfig, SimState, SimTrace, SpacingPolicy};
pub use spacing::{DInit, EdgeState, SpacingParams};
pub use types::{AgentState, Mat2, Vec2};
