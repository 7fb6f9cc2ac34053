//! Run reports and CSV tables.
//!
//! Reports hold only deterministic quantities so that identical inputs give
//! byte-identical files; wall-clock times go to a separate `timings.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::cp::{CompareRow, CpEstimate};
use crate::error::{PumpError, Result};
use crate::plan::{ExploreStats, McEval, PhaseTimes, PlannerParams, PumpOutcome, RrtOutcome, RrtParams, Seeds};
use crate::trajectory::Trajectory;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct FrontEntry {
    pub rank: usize,
    pub plan: usize,
    pub head: usize,
    pub cost: f64,
    pub cp_hat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub scenario: Option<String>,
    pub seeds: Seeds,
    pub params: PlannerParams,
    pub success: bool,
    pub certified_cp: Option<f64>,
    pub mc_samples: usize,
    /// Cost of the returned (smoothed) trajectory.
    pub cost: Option<f64>,
    pub plan_cost: Option<f64>,
    pub plan_cp_hat: Option<f64>,
    pub smoothing_blend: Option<f64>,
    pub best_explored_cost: Option<f64>,
    pub samples: usize,
    pub edges: usize,
    pub partial_plans: usize,
    pub termination: crate::plan::Termination,
    pub explore: ExploreStats,
    pub pareto_front: Vec<FrontEntry>,
    pub mc_evaluations: Vec<McEval>,
    pub trajectory: Option<Trajectory>,
}

impl PlanReport {
    pub fn new(name: Option<String>, params: &PlannerParams, seeds: Seeds, out: &PumpOutcome) -> Self {
        let ex = &out.explore;
        let sel = out.selection.as_ref();
        PlanReport {
            schema_version: SCHEMA_VERSION,
            command: "plan",
            scenario: name,
            seeds,
            params: params.clone(),
            success: sel.is_some(),
            certified_cp: sel.map(|s| s.smoothed.mc),
            mc_samples: params.mc_samples,
            cost: sel.map(|s| s.smoothed.cost),
            plan_cost: sel.map(|s| s.plan_cost),
            plan_cp_hat: sel.map(|s| s.cp_hat),
            smoothing_blend: sel.map(|s| s.smoothed.s),
            best_explored_cost: out.best_goal_cost(),
            samples: out.graph.len(),
            edges: out.graph.edge_count(),
            partial_plans: ex.stats.partial_plans,
            termination: ex.stats.termination,
            explore: ex.stats,
            pareto_front: out
                .front
                .iter()
                .enumerate()
                .map(|(rank, &id)| {
                    let p = &ex.plans[id];
                    FrontEntry { rank, plan: id, head: p.head, cost: p.cost, cp_hat: p.cp_hat }
                })
                .collect(),
            mc_evaluations: out.evaluations.clone(),
            trajectory: out.trajectory().cloned(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RrtReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub scenario: Option<String>,
    pub seed: u64,
    pub mc_seed: u64,
    pub params: RrtParams,
    pub success: bool,
    pub certified_cp: Option<f64>,
    pub cost: Option<f64>,
    pub trial: Option<usize>,
    pub successes: usize,
    pub attempts: Vec<crate::plan::RrtAttempt>,
    pub trajectory: Option<Trajectory>,
}

impl RrtReport {
    pub fn new(name: Option<String>, params: &RrtParams, seed: u64, mc_seed: u64, out: &RrtOutcome) -> Self {
        let best = out.best.as_ref();
        RrtReport {
            schema_version: SCHEMA_VERSION,
            command: "rrt",
            scenario: name,
            seed,
            mc_seed,
            params: *params,
            success: best.is_some(),
            certified_cp: best.map(|b| b.0.mc),
            cost: best.map(|b| b.0.cost),
            trial: best.map(|b| b.0.trial),
            successes: out.successes,
            attempts: out.attempts.clone(),
            trajectory: best.map(|b| b.1.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub scenario: Option<String>,
    pub seed: u64,
    pub waypoints: usize,
    pub cost: f64,
    pub estimate: CpEstimate,
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub scenario: Option<String>,
    pub seed: u64,
    pub particles: usize,
    pub mc_samples: usize,
    pub rows: Vec<CompareRow>,
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_timings(path: &Path, times: &PhaseTimes) -> Result<()> {
    #[derive(Serialize)]
    struct Timings {
        build_graph: f64,
        explore: f64,
        selection: f64,
        total: f64,
    }
    write_json(
        path,
        &Timings { build_graph: times.build_graph, explore: times.explore, selection: times.selection, total: times.total() },
    )
}

fn csv_error(e: csv::Error) -> PumpError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PumpError::Io(io),
        other => PumpError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows<W: Write>(out: W, header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        w.write_record(&r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `t, p0.., v0.., u0..` per waypoint.
pub fn trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let dims = traj.points.first().map_or(0, |p| p.state.dims());
    let mut header = vec!["t".to_string()];
    for prefix in ["p", "v", "u"] {
        header.extend((0..dims).map(|i| format!("{prefix}{i}")));
    }
    let rows = traj.points.iter().map(|p| {
        std::iter::once(p.t)
            .chain(p.state.position.iter().copied())
            .chain(p.state.velocity.iter().copied())
            .chain(p.control.iter().copied())
            .map(num)
            .collect()
    });
    write_rows(out, header, rows)
}

pub fn front_csv<W: Write>(out: W, front: &[FrontEntry], evals: &[McEval]) -> Result<()> {
    let header = ["rank", "plan", "head", "cost", "cp_hat", "mc"].map(String::from).to_vec();
    let rows = front.iter().map(|f| {
        let mc = evals.iter().find(|e| e.stage == "selection" && e.index == f.rank).map(|e| e.mc);
        vec![f.rank.to_string(), f.plan.to_string(), f.head.to_string(), num(f.cost), num(f.cp_hat), opt(mc)]
    });
    write_rows(out, header, rows)
}

pub fn evaluations_csv<W: Write>(out: W, evals: &[McEval]) -> Result<()> {
    let header = ["stage", "index", "s", "cp_hat", "cost", "mc"].map(String::from).to_vec();
    let rows = evals
        .iter()
        .map(|e| vec![e.stage.to_string(), e.index.to_string(), opt(e.s), opt(e.cp_hat), num(e.cost), num(e.mc)]);
    write_rows(out, header, rows)
}

pub fn rrt_attempts_csv<W: Write>(out: W, attempts: &[crate::plan::RrtAttempt]) -> Result<()> {
    let header = ["trial", "cost", "mc"].map(String::from).to_vec();
    let rows = attempts.iter().map(|a| vec![a.trial.to_string(), num(a.cost), num(a.mc)]);
    write_rows(out, header, rows)
}

/// Estimates only; per-method wall times are written by [`compare_timings_csv`].
pub fn compare_csv<W: Write>(out: W, rows: &[CompareRow]) -> Result<()> {
    let header = ["method", "steps", "estimate", "mc_reference"].map(String::from).to_vec();
    let rows = rows
        .iter()
        .map(|r| vec![r.method.name().to_string(), r.steps.to_string(), num(r.estimate), num(r.mc_reference)]);
    write_rows(out, header, rows)
}

pub fn compare_timings_csv<W: Write>(out: W, rows: &[CompareRow]) -> Result<()> {
    let header = ["method", "steps", "seconds"].map(String::from).to_vec();
    let rows = rows.iter().map(|r| vec![r.method.name().to_string(), r.steps.to_string(), num(r.seconds)]);
    write_rows(out, header, rows)
}

/// Reads the trajectory from a report (its `trajectory` field) or from a bare
/// trajectory document.
pub fn read_trajectory(text: &str) -> Result<Trajectory> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let inner = match value.get("trajectory") {
        Some(serde_json::Value::Null) => {
            return Err(PumpError::Scenario("report carries no trajectory (planner failed)".into()))
        }
        Some(t) => t.clone(),
        None => value,
    };
    let traj: Trajectory = serde_json::from_value(inner)?;
    if traj.points.is_empty() {
        return Err(PumpError::Scenario("trajectory has no waypoints".into()));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steer::{State, Waypoint};

    fn traj() -> Trajectory {
        Trajectory::new(vec![
            Waypoint { t: 0.0, state: State::at_rest(vec![0.1, 0.2]), control: vec![1.0, -0.5] },
            Waypoint {
                t: 0.1,
                state: State::new(vec![0.1 + 1.0 / 3.0, 0.2], vec![0.1, 1e-17]),
                control: vec![0.0, 0.0],
            },
        ])
    }

    #[test]
    fn trajectory_csv_layout() {
        let mut buf = Vec::new();
        trajectory_csv(&mut buf, &traj()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,p0,p1,v0,v1,u0,u1");
        assert_eq!(lines[1], "0,0.1,0.2,0,0,1,-0.5");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn trajectory_round_trips_bit_exactly() {
        let t = traj();
        let doc = serde_json::json!({ "schema_version": 1, "trajectory": t });
        let back = read_trajectory(&serde_json::to_string_pretty(&doc).unwrap()).unwrap();
        assert_eq!(back, t);
        let bare = read_trajectory(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(bare, t);
        assert!(read_trajectory(r#"{"trajectory": null}"#).is_err());
    }
}
