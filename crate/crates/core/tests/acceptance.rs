//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Runs record every step, so "every recorded step" checks cover every step.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use flexflock::bus::publish_all;
use flexflock::compare::{compare, DEFAULT_THRESHOLD};
use flexflock::controller::{agent_step_inputs, ControlInput, ControllerConfig, LocalView};
use flexflock::export::metrics_csv;
use flexflock::field::{self, check_gradient_fd, FieldModel};
use flexflock::graph::{self, is_connected, Topology};
use flexflock::potential::{dP_de, dP_dmu_total, potential_value, PotentialKind};
use flexflock::scenario::{bundled, parse_config, ScenarioConfig, TopologySpec};
use flexflock::sim::{derivatives, run, SimConfig, SimState, SimTrace, SpacingPolicy};
use flexflock::spacing::{s_rate, scaling_factor, EdgeState, SpacingParams};
use flexflock::{Result, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn scenario(name: &str) -> ScenarioConfig {
    let mut cfg = bundled(name).expect("bundled scenario");
    cfg.record_every = 1;
    cfg
}

fn run_scenario(cfg: &ScenarioConfig, policy: SpacingPolicy) -> (SimTrace, Duration) {
    let (sim, state) = cfg.build(policy).expect("scenario builds");
    let t0 = Instant::now();
    let trace = match run(&sim, state) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{} run stopped: {}", cfg.name, e.error);
            e.trace
        }
    };
    (trace, t0.elapsed())
}

fn edge_set(s: &flexflock::sim::TraceSample) -> BTreeSet<(usize, usize)> {
    s.edges.iter().map(|(k, _)| *k).collect()
}

/// Largest V increase between consecutive samples with the same edge set.
fn worst_lyapunov_rise(trace: &SimTrace) -> f64 {
    trace
        .samples
        .windows(2)
        .filter(|w| edge_set(&w[0]) == edge_set(&w[1]))
        .map(|w| w[1].metrics.v_lyap - w[0].metrics.v_lyap)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Count of (sample, edge) pairs outside the open scale or gap bands.
fn band_violations(trace: &SimTrace, params: &SpacingParams) -> usize {
    let (s_lo, s_hi) = params.scale_bounds();
    let (g_lo, g_hi) = params.gap_bounds();
    trace
        .samples
        .iter()
        .flat_map(|s| s.edges.iter())
        .filter(|(_, e)| !(e.s > s_lo && e.s < s_hi && e.d_star > g_lo && e.d_star < g_hi))
        .count()
}

fn c1(trace: &SimTrace, elapsed: Duration) -> Outcome {
    let m = trace.final_metrics().unwrap();
    let finished = trace.last().map(|s| s.step) == Some(50_000);
    outcome(
        finished && m.max_abs_e < 1e-2 && m.e_asp < 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "final max|e| = {:.3e} (< 1e-2), E_ASP = {:.3e} (< 1e-4), runtime {:.2} s (< 60 s), reached t = {}",
            m.max_abs_e,
            m.e_asp,
            elapsed.as_secs_f64(),
            m.t
        ),
    )
}

fn c2(stat: &SimTrace, dynamic: &SimTrace) -> Outcome {
    let (a, b) = (worst_lyapunov_rise(stat), worst_lyapunov_rise(dynamic));
    outcome(
        a <= 1e-6 && b <= 1e-6,
        format!("largest V rise per step: static {a:.3e}, dynamic within event intervals {b:.3e} (<= 1e-6)"),
    )
}

fn c3(trace: &SimTrace, d_nom: f64) -> Outcome {
    let m = trace.final_metrics().unwrap();
    let eps = m.epsilon(d_nom);
    outcome(eps < 1.0, format!("E_dev = {:.4}, epsilon = {eps:.4} (< 1)", m.e_dev))
}

fn c4(cfg: &ScenarioConfig) -> Outcome {
    let report = match compare(cfg, DEFAULT_THRESHOLD) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("compare failed: {e}")),
    };
    let fmt = |t: Option<f64>| t.map_or("never (infinite)".to_string(), |v| format!("{v}"));
    outcome(
        report.flexible_faster(),
        format!(
            "time to threshold {}: flexible {} vs baseline {} (baseline final E_dev = {:.4})",
            DEFAULT_THRESHOLD,
            fmt(report.flexible_time),
            fmt(report.baseline_time),
            report.baseline.final_metrics().unwrap().e_dev
        ),
    )
}

fn c5(trace: &SimTrace, n_agents: usize) -> Outcome {
    let finished = trace.last().map(|s| s.step) == Some(50_000);
    let disconnected = trace
        .samples
        .iter()
        .filter(|s| {
            let edges: Vec<_> = s.edges.iter().map(|(k, _)| *k).collect();
            !is_connected(&Topology::from_edges(n_agents, &edges).unwrap())
        })
        .count();
    let shrinks = trace.samples.windows(2).filter(|w| !edge_set(&w[0]).is_subset(&edge_set(&w[1]))).count();
    let removed = trace.removed_violations();
    let first = trace.samples[0].edges.len();
    let last = trace.last().unwrap().edges.len();
    outcome(
        finished && disconnected == 0 && removed == 0 && shrinks == 0,
        format!(
            "{} samples, disconnected {disconnected}, removed {removed}, shrinking steps {shrinks}, edges {first} -> {last}",
            trace.samples.len()
        ),
    )
}

fn c6(trace: &SimTrace, r: f64) -> Outcome {
    let mus = trace.samples.iter().flat_map(|s| s.edges.iter().map(|(_, e)| e.mu));
    let (lo, hi) = mus.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m), hi.max(m)));
    outcome(lo > 0.0 && hi < r, format!("connected-pair mu in [{lo:.4}, {hi:.4}], required inside (0, {r})"))
}

fn c7() -> Outcome {
    let src = r#"
n_agents = 3
potential = "barrier"
d_nom = 2.0
lambda = 2.0
[field]
kind = "quadratic_bowl"
[topology]
mode = "dynamic"
r = 10.0
[initial]
poses = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]
"#;
    match parse_config(src) {
        Ok(_) => outcome(false, "lambda = 2 config was accepted"),
        Err(e) => {
            let msg = e.to_string();
            outcome(msg.contains("1.6094"), format!("rejected: {}", msg.replace('\n', " ")))
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Five-point derivative of `f` at 0.
fn five(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let poly = FieldModel::polynomial(vec![(2, 0, 0.7), (1, 1, -0.4), (0, 3, 0.25), (3, 1, 0.1), (0, 0, 3.0)]).unwrap();
    let mut field_worst: f64 = 0.0;
    for fm in [FieldModel::QuadraticBowl, FieldModel::CubicBench, poly] {
        for _ in 0..100 {
            let p = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            field_worst = field_worst.max(check_gradient_fd(&fm, p, 1e-5).unwrap().rel_error);
        }
    }

    let mut s_worst: f64 = 0.0;
    for _ in 0..1000 {
        let params = SpacingParams::new(rng.gen_range(0.5..4.0), rng.gen_range(0.1..2.0)).unwrap();
        let d = params.d_nom + rng.gen_range(-6.0..6.0);
        let mu = rng.gen_range(0.0..10.0);
        let edge = EdgeState::new(d, mu, &params);
        // dd/dt = tanh(e/2) with e frozen over the difference
        let ddot = (edge.e / 2.0).tanh();
        let fd = five(|h| scaling_factor(d + h * ddot, &params), 1e-4);
        s_worst = s_worst.max(rel(s_rate(&edge, &params), fd));
    }

    let r = 10.0;
    let mut p_worst: f64 = 0.0;
    for kind in [PotentialKind::Quadratic, PotentialKind::Barrier { r }] {
        for _ in 0..1000 {
            let mu = rng.gen_range(0.05..9.95);
            let d_star = rng.gen_range(0.5..5.0);
            let base = EdgeState { d: 0.0, s: 1.0, d_star, mu, e: mu - d_star };
            let h = 1e-3 * mu.min(r - mu).min(1.0);
            let fd_e = five(|dx| potential_value(kind, &EdgeState { e: base.e + dx, ..base }).unwrap(), h);
            let fd_mu = five(|dx| potential_value(kind, &EdgeState { mu: mu + dx, e: mu + dx - d_star, ..base }).unwrap(), h);
            p_worst = p_worst.max(rel(dP_de(kind, &base).unwrap(), fd_e));
            p_worst = p_worst.max(rel(dP_dmu_total(kind, &base).unwrap(), fd_mu));
        }
    }
    outcome(
        field_worst < 1e-6 && s_worst < 1e-6 && p_worst < 1e-6,
        format!(
            "worst rel. error: field grad/Hessian {field_worst:.2e} (3 fields x 100 points), s_rate {s_worst:.2e} (1000), \
             dP_de and dP_dmu_total {p_worst:.2e} (2 kinds x 1000)"
        ),
    )
}

fn c9(runs: &[(&str, &SimTrace, SpacingParams)]) -> Outcome {
    let mut parts = Vec::new();
    let mut total = 0;
    for (name, trace, params) in runs {
        let bad = band_violations(trace, params);
        total += bad;
        parts.push(format!("{name}: {bad} of {} samples", trace.samples.len()));
    }
    outcome(total == 0, format!("samples outside the open s and D* bands: {}", parts.join(", ")))
}

fn final_state(dt: f64, t_end: f64) -> Vec<f64> {
    let mut cfg = bundled("static_k5_cubic").unwrap();
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.record_every = usize::MAX;
    let (sim, state) = cfg.build(SpacingPolicy::Adaptive).unwrap();
    let trace = run(&sim, state).unwrap();
    let last = trace.last().unwrap();
    let mut v: Vec<f64> = last.poses.iter().flat_map(|p| [p.x, p.y, p.theta]).collect();
    v.extend(last.edges.iter().map(|(_, e)| e.d));
    v
}

fn c10() -> Outcome {
    let (dt, t_end) = (0.01, 1.0);
    let a = final_state(dt, t_end);
    let b = final_state(dt / 2.0, t_end);
    let c = final_state(dt / 4.0, t_end);
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let (e1, e2) = (dist(&a, &b), dist(&b, &c));
    let order = (e1 / e2).log2();
    outcome(
        order >= 3.5,
        format!("dt = {dt}, {}, {} to T = {t_end}: differences {e1:.3e}, {e2:.3e}, order {order:.3} (>= 3.5)", dt / 2.0, dt / 4.0),
    )
}

fn c11() -> Outcome {
    let mut cfg = bundled("static_k5_cubic").unwrap();
    cfg.t_end = 5.0;
    cfg.set_seed(21);
    let once = || {
        let (sim, state) = cfg.build(SpacingPolicy::Adaptive).unwrap();
        metrics_csv(&run(&sim, state).unwrap())
    };
    let (a, b) = (once(), once());
    outcome(a.as_bytes() == b.as_bytes(), format!("two seeded runs: {} vs {} bytes of metrics.csv", a.len(), b.len()))
}

/// Controls from the textbook formula with full knowledge of every agent,
/// for comparison with the bus path.
fn direct_controls(sim: &SimConfig, state: &SimState) -> Vec<ControlInput> {
    let grads: Vec<Vec2> = state.poses.iter().map(|p| field::gradient(&sim.field, p.position())).collect();
    let kind = sim.controller.potential;
    (0..state.poses.len())
        .map(|i| {
            let nbrs: Vec<usize> = state.topo.neighbors(i);
            if nbrs.is_empty() {
                return ControlInput::default();
            }
            // dP/dX_i = -sum_j dP/dmu_ij (X_j - X_i)/mu_ij
            let mut gp = Vec2::ZERO;
            for &j in &nbrs {
                let e = state.edges[&graph::canonical(i, j)];
                let diff = grads[j] - grads[i];
                let m = diff.norm();
                let edge = EdgeState { mu: m, e: m - e.d_star, ..e };
                gp = gp - diff * (dP_dmu_total(kind, &edge).unwrap() / m);
            }
            let h = field::hessian(&sim.field, state.poses[i].position());
            let th = state.poses[i].theta;
            let (o, op) = (Vec2::new(th.cos(), th.sin()), Vec2::new(th.sin(), -th.cos()));
            let hg = h.mul_vec(gp);
            let g = sim.controller.k_f / nbrs.len() as f64;
            ControlInput { v: -g * o.dot(hg), omega: g * op.dot(hg) }
        })
        .collect()
}

fn path_graph_case(potential: &str, topology: &str) -> Result<f64> {
    let cfg = parse_config(&format!(
        r#"
n_agents = 3
potential = "{potential}"
k_f = 1.7
d_nom = 1.5
lambda = 0.8
d_init = 0.6
[field]
kind = "cubic_bench"
{topology}
[initial]
poses = [[-0.9, 0.3, 0.4], [0.1, 0.6, -2.0], [1.2, 0.2, 2.9]]
"#
    ))?;
    let (sim, state) = cfg.build(SpacingPolicy::Adaptive)?;
    assert_eq!(state.topo.edges().iter().copied().collect::<Vec<_>>(), vec![(0, 1), (1, 2)], "path graph");
    let via_bus = derivatives(&state, &sim)?.controls;
    let direct = direct_controls(&sim, &state);
    Ok(via_bus
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a.v - b.v).abs().max((a.omega - b.omega).abs()))
        .fold(0.0, f64::max))
}

fn c12() -> Outcome {
    // The entry point's type: own pose, gradient and Hessian, the inbox of
    // neighbor samples and the matching edge states. Nothing else.
    let entry: for<'a, 'b, 'c> fn(&'a LocalView<'b>, &'c ControllerConfig) -> Result<ControlInput> = agent_step_inputs;

    // Mailboxes only hold what the topology allows.
    let grads = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
    let topo = Topology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let boxes = publish_all(&grads, &topo, 0).unwrap();
    let senders: Vec<Vec<usize>> = (0..3).map(|i| boxes.inbox(i).iter().map(|s| s.sender).collect()).collect();
    let inbox_ok = senders == vec![vec![1], vec![0, 2], vec![1]];

    // An exhaustive struct literal: this stops compiling if LocalView grows a field.
    let params = SpacingParams::new(2.0, 1.0).unwrap();
    let edges = [EdgeState::new(2.0, 1.0, &params)];
    let view = LocalView {
        id: 0,
        pose: flexflock::AgentState::new(0.0, 0.0, 0.0),
        gradient: grads[0],
        hessian: flexflock::Mat2::identity(),
        inbox: boxes.inbox(0),
        edges: &edges,
    };
    // e = 1 - 2 = -1, dP/dX_0 = -(-1)(1, 0) = (1, 0), H = I, theta = 0: v = -1, omega = 0
    let single = entry(&view, &ControllerConfig::new(1.0, PotentialKind::Quadratic).unwrap()).unwrap();
    let single_ok = single == ControlInput { v: -1.0, omega: 0.0 };

    // Quadratic on a static path; barrier on a dynamic range that only links neighbors in the path.
    let cases = [
        ("quadratic", "[topology]\nmode = \"static\"\nedges = [[0, 1], [1, 2]]"),
        ("barrier", "[topology]\nmode = \"dynamic\"\nr = 6.0"),
    ];
    let mut worst: f64 = 0.0;
    for (pot, topo) in cases {
        match path_graph_case(pot, topo) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return outcome(false, format!("{pot} case failed: {e}")),
        }
    }
    outcome(
        inbox_ok && single_ok && worst < 1e-12,
        format!("inboxes {senders:?}; local-view call {single:?}; N = 3 path, bus vs direct max difference {worst:.2e} (< 1e-12)"),
    )
}

fn main() {
    let stat_cfg = scenario("static_k5_cubic");
    let dyn_cfg = scenario("dynamic_r10");
    let TopologySpec::Dynamic { r } = dyn_cfg.topology else { panic!("dynamic_r10 must be dynamic") };
    let (stat, stat_time) = run_scenario(&stat_cfg, SpacingPolicy::Adaptive);
    let (dynamic, _) = run_scenario(&dyn_cfg, SpacingPolicy::Adaptive);
    let (baseline, _) = run_scenario(&stat_cfg, SpacingPolicy::Fixed);
    let stat_params = SpacingParams::new(stat_cfg.d_nom, stat_cfg.lambda).unwrap();
    let dyn_params = SpacingParams::new(dyn_cfg.d_nom, dyn_cfg.lambda).unwrap();
    // the baseline holds s = 1, which sits inside the same bands
    let runs = [
        ("static_k5_cubic", &stat, stat_params),
        ("dynamic_r10", &dynamic, dyn_params),
        ("static_k5_cubic baseline", &baseline, stat_params),
    ];

    let results = [
        (1, "static flexible convergence", c1(&stat, stat_time)),
        (2, "Lyapunov monotonicity", c2(&stat, &dynamic)),
        (3, "deviation-energy magnitude", c3(&stat, stat_cfg.d_nom)),
        (4, "faster-convergence ordering", c4(&bundled("static_k5_cubic").unwrap())),
        (5, "connectivity preservation", c5(&dynamic, dyn_cfg.n_agents)),
        (6, "collision avoidance and range", c6(&dynamic, r)),
        (7, "lambda-bound gate", c7()),
        (8, "derivative oracles", c8()),
        (9, "spacing bands", c9(&runs)),
        (10, "integrator order", c10()),
        (11, "determinism", c11()),
        (12, "information firewall", c12()),
    ];
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
