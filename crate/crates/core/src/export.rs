//! Plain-text outputs: run CSVs, the run summary and per-figure plot data.
//!
//! Every CSV starts with a `# flexflock <kind> v1` comment line followed by
//! a column header. Floats use Rust's shortest round-trip formatting, so
//! identical runs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::compare::{energy_rows, CompareReport};
use crate::error::{FlockError, Result};
use crate::graph::Edge;
use crate::sim::SimTrace;

pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_CSV: &str = "trace.csv";
pub const EDGES_CSV: &str = "edges.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const EVENTS_CSV: &str = "events.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const COMPARE_CSV: &str = "compare.csv";
pub const PLOT_DIR: &str = "plot";

fn header(kind: &str, columns: &str) -> String {
    format!("# flexflock {kind} v{SCHEMA_VERSION}\n{columns}\n")
}

/// Per-agent pose and control at every recorded step.
pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = header("trace", "step,t,agent,x,y,theta,v,omega");
    for s in &trace.samples {
        for (k, (p, u)) in s.poses.iter().zip(&s.controls).enumerate() {
            let _ = writeln!(out, "{},{},{k},{},{},{},{},{}", s.step, s.t, p.x, p.y, p.wrapped_theta(), u.v, u.omega);
        }
    }
    out
}

/// Per-edge spacing state at every recorded step.
pub fn edges_csv(trace: &SimTrace) -> String {
    let mut out = header("edges", "step,t,i,j,mu,d,s,D_star,e");
    for s in &trace.samples {
        for ((i, j), e) in &s.edges {
            let _ = writeln!(out, "{},{},{i},{j},{},{},{},{},{}", s.step, s.t, e.mu, e.d, e.s, e.d_star, e.e);
        }
    }
    out
}

pub fn metrics_csv(trace: &SimTrace) -> String {
    let mut out = header(
        "metrics",
        "t,n_edges,sum_abs_e,max_abs_e,E_dev,E_asp,V_lyap,connected,min_mu,max_mu,max_abs_v,max_abs_omega",
    );
    for s in &trace.samples {
        let m = &s.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            m.t,
            m.n_edges,
            m.sum_abs_e,
            m.max_abs_e,
            m.e_dev,
            m.e_asp,
            m.v_lyap,
            m.connected as u8,
            m.min_mu,
            m.max_mu,
            m.max_abs_v,
            m.max_abs_omega
        );
    }
    out
}

pub fn events_csv(trace: &SimTrace) -> String {
    let mut out = header("events", "time,i,j,kind");
    for e in &trace.events {
        let _ = writeln!(out, "{},{},{},{}", e.time, e.edge.0, e.edge.1, e.kind.as_str());
    }
    out
}

/// Headline numbers for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    /// `None` when the run completed.
    pub failure: Option<String>,
    pub steps: u64,
    pub t_final: f64,
    pub d_nom: f64,
    pub e_dev: f64,
    pub e_asp: f64,
    pub max_abs_e: f64,
    pub connected_throughout: bool,
    pub collision_free: bool,
    pub edges_added: usize,
    pub removed_violations: usize,
    pub peak_abs_v: f64,
    pub peak_abs_omega: f64,
    pub messages: u64,
}

impl RunSummary {
    pub fn from_trace(name: &str, trace: &SimTrace, d_nom: f64, failure: Option<String>) -> Self {
        let last = trace.final_metrics();
        let fold = |f: fn(&crate::metrics::MetricsSnapshot) -> f64| {
            trace.samples.iter().map(|s| f(&s.metrics)).fold(0.0, f64::max)
        };
        RunSummary {
            name: name.to_string(),
            failure,
            steps: trace.steps,
            t_final: last.map_or(0.0, |m| m.t),
            d_nom,
            e_dev: last.map_or(f64::NAN, |m| m.e_dev),
            e_asp: last.map_or(f64::NAN, |m| m.e_asp),
            max_abs_e: last.map_or(f64::NAN, |m| m.max_abs_e),
            connected_throughout: trace.samples.iter().all(|s| s.metrics.connected),
            collision_free: trace.samples.iter().all(|s| s.metrics.min_mu > 0.0),
            edges_added: trace.events.iter().filter(|e| e.kind == crate::graph::EdgeEventKind::Added).count(),
            removed_violations: trace.removed_violations(),
            peak_abs_v: fold(|m| m.max_abs_v),
            peak_abs_omega: fold(|m| m.max_abs_omega),
            messages: trace.messages,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.e_dev.sqrt() / self.d_nom
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# flexflock summary v{SCHEMA_VERSION}");
        let _ = writeln!(out, "scenario = {:?}", self.name);
        let _ = writeln!(out, "status = {:?}", if self.failure.is_some() { "violation" } else { "completed" });
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "failure = {f:?}");
        }
        let _ = writeln!(out, "steps = {}", self.steps);
        let _ = writeln!(out, "t_final = {}", self.t_final);
        let _ = writeln!(out, "E_dev = {}", self.e_dev);
        let _ = writeln!(out, "E_asp = {}", self.e_asp);
        let _ = writeln!(out, "epsilon = {}", self.epsilon());
        let _ = writeln!(out, "max_abs_e = {}", self.max_abs_e);
        let _ = writeln!(out, "connected_throughout = {}", self.connected_throughout);
        let _ = writeln!(out, "collision_free = {}", self.collision_free);
        let _ = writeln!(out, "edges_added = {}", self.edges_added);
        let _ = writeln!(out, "removed_violations = {}", self.removed_violations);
        let _ = writeln!(out, "peak_abs_v = {}", self.peak_abs_v);
        let _ = writeln!(out, "peak_abs_omega = {}", self.peak_abs_omega);
        let _ = writeln!(out, "messages = {}", self.messages);
        out
    }
}

/// Writes trace, edges, metrics, events and summary files into `dir`.
pub fn write_run(dir: &Path, trace: &SimTrace, summary: &RunSummary) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = [
        (TRACE_CSV, trace_csv(trace)),
        (EDGES_CSV, edges_csv(trace)),
        (METRICS_CSV, metrics_csv(trace)),
        (EVENTS_CSV, events_csv(trace)),
        (SUMMARY_TXT, summary.render()),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

pub fn compare_csv(report: &CompareReport) -> Result<String> {
    let mut out = header("compare", "t,flexible_E_dev,flexible_E_asp,baseline_E_dev");
    for [t, a, b, c] in energy_rows(report)? {
        let _ = writeln!(out, "{t},{a},{b},{c}");
    }
    Ok(out)
}

pub fn compare_summary(report: &CompareReport) -> String {
    let fmt_t = |t: Option<f64>| t.map_or_else(|| "never".to_string(), |v| v.to_string());
    let ff = report.flexible.final_metrics();
    let bf = report.baseline.final_metrics();
    let mut out = String::new();
    let _ = writeln!(out, "# flexflock compare v{SCHEMA_VERSION}");
    let _ = writeln!(out, "threshold = {}", report.threshold);
    let _ = writeln!(out, "flexible_time_to_threshold = {}", fmt_t(report.flexible_time));
    let _ = writeln!(out, "baseline_time_to_threshold = {}", fmt_t(report.baseline_time));
    let _ = writeln!(out, "flexible_faster = {}", report.flexible_faster());
    let _ = writeln!(out, "flexible_final_E_dev = {}", ff.map_or(f64::NAN, |m| m.e_dev));
    let _ = writeln!(out, "flexible_final_E_asp = {}", ff.map_or(f64::NAN, |m| m.e_asp));
    let _ = writeln!(out, "baseline_final_E_dev = {}", bf.map_or(f64::NAN, |m| m.e_dev));
    out
}

/// Minimal reader for our own CSVs: skips the comment line, returns the
/// header and the rows as raw fields.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| FlockError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let head = lines
        .next()
        .ok_or_else(|| FlockError::Parse(format!("{} has no header", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((head, rows))
}

fn col(head: &[String], name: &str, path: &Path) -> Result<usize> {
    head.iter()
        .position(|h| h == name)
        .ok_or_else(|| FlockError::Parse(format!("{} lacks column {name}", path.display())))
}

fn num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| FlockError::Parse(format!("bad number {s:?}")))
}

fn write_table(path: &Path, columns: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = format!("# {}\n", columns.join(" "));
    for r in rows {
        out.push_str(&r.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Turns a run directory into whitespace-separated tables under `plot/`:
/// `trajectories.dat`, `errors.dat`, `mu.dat`, `scaling.dat`, plus
/// `energy.dat` when a `compare.csv` is present. One row per recorded step;
/// edges absent at a step are written as `nan`.
pub fn plotdata(dir: &Path) -> Result<Vec<PathBuf>> {
    let trace_path = dir.join(TRACE_CSV);
    let edges_path = dir.join(EDGES_CSV);
    if !trace_path.exists() || !edges_path.exists() {
        return Err(FlockError::InvalidArgument(format!(
            "{} has no {TRACE_CSV}/{EDGES_CSV}; run a scenario first",
            dir.display()
        )));
    }
    let out_dir = dir.join(PLOT_DIR);
    fs::create_dir_all(&out_dir)?;
    let mut written = Vec::new();

    // trajectories: t x0 y0 x1 y1 ...
    let (head, rows) = read_csv(&trace_path)?;
    let (ci_step, ci_t, ci_agent, ci_x, ci_y) = (
        col(&head, "step", &trace_path)?,
        col(&head, "t", &trace_path)?,
        col(&head, "agent", &trace_path)?,
        col(&head, "x", &trace_path)?,
        col(&head, "y", &trace_path)?,
    );
    // step -> (t, agent -> (x, y))
    type Positions = BTreeMap<usize, (String, String)>;
    let mut by_step: BTreeMap<u64, (String, Positions)> = BTreeMap::new();
    for r in &rows {
        let step: u64 = r[ci_step].parse().map_err(|_| FlockError::Parse("bad step".into()))?;
        let agent: usize = r[ci_agent].parse().map_err(|_| FlockError::Parse("bad agent".into()))?;
        by_step
            .entry(step)
            .or_insert_with(|| (r[ci_t].clone(), BTreeMap::new()))
            .1
            .insert(agent, (r[ci_x].clone(), r[ci_y].clone()));
    }
    let n_agents = by_step.values().map(|(_, a)| a.len()).max().unwrap_or(0);
    let mut columns = vec!["t".to_string()];
    for k in 0..n_agents {
        columns.push(format!("x{k}"));
        columns.push(format!("y{k}"));
    }
    let table: Vec<Vec<String>> = by_step
        .values()
        .map(|(t, agents)| {
            let mut row = vec![t.clone()];
            for (x, y) in agents.values() {
                row.push(x.clone());
                row.push(y.clone());
            }
            row
        })
        .collect();
    let p = out_dir.join("trajectories.dat");
    write_table(&p, &columns, &table)?;
    written.push(p);

    // per-edge series
    let (head, rows) = read_csv(&edges_path)?;
    let ci = |n: &str| col(&head, n, &edges_path);
    let (e_step, e_i, e_j) = (ci("step")?, ci("i")?, ci("j")?);
    let mut all_edges: Vec<Edge> = Vec::new();
    let mut cells: BTreeMap<(u64, Edge), &Vec<String>> = BTreeMap::new();
    for r in &rows {
        let step: u64 = r[e_step].parse().map_err(|_| FlockError::Parse("bad step".into()))?;
        let edge: Edge = (
            r[e_i].parse().map_err(|_| FlockError::Parse("bad i".into()))?,
            r[e_j].parse().map_err(|_| FlockError::Parse("bad j".into()))?,
        );
        all_edges.push(edge);
        cells.insert((step, edge), r);
    }
    all_edges.sort_unstable();
    all_edges.dedup();
    for (file, field) in [("errors.dat", "e"), ("mu.dat", "mu"), ("scaling.dat", "s")] {
        let fi = ci(field)?;
        let mut columns = vec!["t".to_string()];
        columns.extend(all_edges.iter().map(|(i, j)| format!("{field}_{i}_{j}")));
        let table: Vec<Vec<String>> = by_step
            .iter()
            .map(|(step, (t, _))| {
                let mut row = vec![t.clone()];
                row.extend(
                    all_edges
                        .iter()
                        .map(|edge| cells.get(&(*step, *edge)).map_or_else(|| "nan".to_string(), |r| r[fi].clone())),
                );
                row
            })
            .collect();
        let p = out_dir.join(file);
        write_table(&p, &columns, &table)?;
        written.push(p);
    }

    let compare_path = dir.join(COMPARE_CSV);
    if compare_path.exists() {
        let (head, rows) = read_csv(&compare_path)?;
        for r in &rows {
            for v in r {
                num(v)?;
            }
        }
        let p = out_dir.join("energy.dat");
        write_table(&p, &head, &rows)?;
        written.push(p);
    }
    Ok(written)
}
