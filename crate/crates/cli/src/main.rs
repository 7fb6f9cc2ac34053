//! `pump`: plan, run the RRT baseline, compare CP estimators, or certify a
//! trajectory for a JSON scenario.
//!
//! Exit codes: 0 success, 2 input error, 3 planner failure (no certified
//! plan), 1 anything else (e.g. output not writable).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pump_core::cp::{compare_estimators, mc_certify, CompareSetup};
use pump_core::plan::{pump, repeated_rrt, Seeds};
use pump_core::report::{self, CertifyReport, CompareReport, PlanReport, RrtReport, SCHEMA_VERSION};
use pump_core::scenario::{Resolved, Scenario};
use pump_core::PumpError;

#[derive(Parser, Debug)]
#[command(name = "pump", version, about = "Chance-constrained kinodynamic planning")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Master seed; overrides the scenario's seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan with the Pareto search and certify the result.
    Plan {
        /// Override the scenario's CP bound.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the HSMC particle count.
        #[arg(long)]
        particles: Option<usize>,
    },
    /// Repeated kinodynamic RRT baseline.
    Rrt {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Compare CP estimators on one trajectory over several discretizations.
    CpCompare {
        /// Trajectory file or a report carrying one.
        #[arg(long)]
        trajectory: PathBuf,
        /// Step counts to split the trajectory into.
        #[arg(long, value_delimiter = ',', default_values_t = [25, 50, 100, 200])]
        steps: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        particles: usize,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
    },
    /// Monte Carlo CP of a trajectory at the scenario's step size.
    Certify {
        #[arg(long)]
        trajectory: PathBuf,
        /// Defaults to the scenario's `mc_samples`.
        #[arg(long)]
        mc_samples: Option<usize>,
    },
}

enum Failure {
    Input(String),
    Planner(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Planner(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn output(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

/// Errors raised while planning: bad parameters are the caller's fault,
/// everything else is a planner failure.
fn planning(e: PumpError) -> Failure {
    match e {
        PumpError::InvalidParameter { .. } | PumpError::Dimension(_) | PumpError::Scenario(_) => input(e),
        PumpError::Io(_) | PumpError::Json(_) => output(e),
        other => Failure::Planner(other.to_string()),
    }
}

fn csv_file(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    File::create(dir.join(name)).map(BufWriter::new).map_err(output)
}

fn load(cli: &Cli) -> Result<(Scenario, Resolved), Failure> {
    let path = cli.scenario.as_ref().ok_or_else(|| input("--scenario is required"))?;
    let scenario = Scenario::load(path).map_err(input)?;
    let mut resolved = scenario.resolve().map_err(input)?;
    if let Some(seed) = cli.seed {
        resolved.seeds = Seeds::from_master(seed);
    }
    Ok((scenario, resolved))
}

fn run(cli: &Cli) -> Result<String, Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(input("--workers must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(output)?;
    }
    let (scenario, mut r) = load(cli)?;
    let out = &cli.out;
    fs::create_dir_all(out).map_err(output)?;

    match &cli.command {
        Command::Plan { alpha, particles } => {
            if let Some(a) = alpha {
                r.params.alpha = *a;
                r.params.eta = scenario.planner.eta.unwrap_or_else(|| pump_core::plan::PlannerParams::default_eta(*a));
            }
            if let Some(n) = particles {
                r.params.particles = *n;
            }
            let outcome = pump(&r.problem, &r.params, &r.seeds).map_err(planning)?;
            let rep = PlanReport::new(scenario.name.clone(), &r.params, r.seeds, &outcome);
            report::write_json(&out.join("plan_report.json"), &rep).map_err(output)?;
            report::write_timings(&out.join("timings.json"), &outcome.times).map_err(output)?;
            report::front_csv(csv_file(out, "pareto.csv")?, &rep.pareto_front, &rep.mc_evaluations).map_err(output)?;
            report::evaluations_csv(csv_file(out, "evaluations.csv")?, &rep.mc_evaluations).map_err(output)?;
            if let Some(t) = &rep.trajectory {
                report::trajectory_csv(csv_file(out, "trajectory.csv")?, t).map_err(output)?;
            }
            match (rep.cost, rep.certified_cp) {
                (Some(c), Some(cp)) => Ok(format!(
                    "plan: cost {c:.4}, certified CP {cp:.4} ({} partial plans, {:.2} s)",
                    rep.partial_plans,
                    outcome.times.total()
                )),
                _ => Err(Failure::Planner(format!(
                    "no plan certified at α = {} ({} goal plans on the front)",
                    r.params.alpha,
                    rep.pareto_front.len()
                ))),
            }
        }
        Command::Rrt { alpha, trials } => {
            if let Some(a) = alpha {
                r.rrt.alpha = *a;
            }
            if let Some(t) = trials {
                r.rrt.trials = *t;
            }
            if !(r.rrt.alpha > 0.0 && r.rrt.alpha < 1.0) {
                return Err(input(format!("alpha must lie in (0, 1), got {}", r.rrt.alpha)));
            }
            let res = repeated_rrt(&r.problem, &r.rrt, r.seeds.rrt, r.seeds.mc).map_err(planning)?;
            let rep = RrtReport::new(scenario.name.clone(), &r.rrt, r.seeds.rrt, r.seeds.mc, &res);
            report::write_json(&out.join("rrt_report.json"), &rep).map_err(output)?;
            report::rrt_attempts_csv(csv_file(out, "rrt_attempts.csv")?, &rep.attempts).map_err(output)?;
            if let Some(t) = &rep.trajectory {
                report::trajectory_csv(csv_file(out, "rrt_trajectory.csv")?, t).map_err(output)?;
            }
            match (rep.cost, rep.certified_cp) {
                (Some(c), Some(cp)) => Ok(format!(
                    "rrt: cost {c:.4}, certified CP {cp:.4} ({}/{} trials reached the goal)",
                    res.successes, r.rrt.trials
                )),
                _ => Err(Failure::Planner(format!(
                    "no satisfactory plan found ({}/{} trials reached the goal)",
                    res.successes, r.rrt.trials
                ))),
            }
        }
        Command::CpCompare { trajectory, steps, particles, mc_samples } => {
            let traj = read_trajectory(trajectory)?;
            let setup = CompareSetup {
                model: r.continuous.clone(),
                lqg: r.lqg.clone(),
                sigma0: r.problem.sigma0.clone(),
                workspace: r.problem.workspace.clone(),
                particles: *particles,
                mc_samples: *mc_samples,
                seed: r.seeds.mc,
            };
            let rows = compare_estimators(&setup, &traj, steps).map_err(planning)?;
            let rep = CompareReport {
                schema_version: SCHEMA_VERSION,
                command: "cp-compare",
                scenario: scenario.name.clone(),
                seed: r.seeds.mc,
                particles: *particles,
                mc_samples: *mc_samples,
                rows: rows.clone(),
            };
            report::compare_csv(csv_file(out, "cp_compare.csv")?, &rows).map_err(output)?;
            report::compare_timings_csv(csv_file(out, "cp_compare_timings.csv")?, &rows).map_err(output)?;
            // Wall times live in the timings table only.
            let stable = CompareReport {
                rows: rows.iter().cloned().map(|mut row| {
                    row.seconds = 0.0;
                    row
                }).collect(),
                ..rep
            };
            report::write_json(&out.join("cp_compare.json"), &stable).map_err(output)?;
            Ok(format!("cp-compare: {} rows for step counts {steps:?}", rows.len()))
        }
        Command::Certify { trajectory, mc_samples } => {
            let traj = read_trajectory(trajectory)?;
            let n = mc_samples.unwrap_or(r.params.mc_samples);
            let p = &r.problem;
            let est = mc_certify(&p.model, &p.gains, &p.sigma0, &p.workspace, &traj, n, r.seeds.mc).map_err(planning)?;
            let rep = CertifyReport {
                schema_version: SCHEMA_VERSION,
                command: "certify",
                scenario: scenario.name.clone(),
                seed: r.seeds.mc,
                waypoints: traj.len(),
                cost: traj.cost(&p.weights),
                estimate: est,
                standard_error: est.standard_error(),
            };
            report::write_json(&out.join("certify.json"), &rep).map_err(output)?;
            Ok(format!("certify: CP {} over {n} rollouts", est.value))
        }
    }
}

fn read_trajectory(path: &Path) -> Result<pump_core::trajectory::Trajectory, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    report::read_trajectory(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            let (Failure::Input(m) | Failure::Planner(m) | Failure::Other(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
