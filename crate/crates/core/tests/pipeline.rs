use std::path::PathBuf;
use std::sync::Arc;

use pump_core::cp::mc_certify;
use pump_core::plan::{build_roadmap, pump, pump_on_graph, Seeds};
use pump_core::report::{read_trajectory, PlanReport};
use pump_core::scenario::{Resolved, Scenario};

fn bundled(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    Scenario::load(&p).unwrap()
}

/// A bundled scenario shrunk to test size.
fn small(name: &str) -> Resolved {
    let mut s = bundled(name);
    s.planner.samples = 400;
    s.planner.particles = Some(128);
    s.planner.mc_samples = Some(500);
    s.resolve().unwrap()
}

#[test]
fn bundled_scenarios_resolve() {
    for name in ["three_obstacles", "indoor"] {
        let r = bundled(name).resolve().unwrap();
        assert_eq!(r.problem.dims(), 3);
        assert!(r.params.alpha > 0.0 && r.params.alpha < 1.0);
        assert!(r.problem.workspace.obstacles.len() >= 9, "{name}");
    }
}

#[test]
fn shared_roadmap_matches_fresh_run() {
    let r = small("three_obstacles");
    let fresh = pump(&r.problem, &r.params, &r.seeds).unwrap();
    let graph = Arc::new(build_roadmap(&r.problem, &r.params).unwrap());
    let reused = pump_on_graph(&r.problem, &r.params, &r.seeds, graph.clone()).unwrap();
    let a = serde_json::to_string(&PlanReport::new(None, &r.params, r.seeds, &fresh)).unwrap();
    let b = serde_json::to_string(&PlanReport::new(None, &r.params, r.seeds, &reused)).unwrap();
    assert_eq!(a, b);

    let mut other = r.params.clone();
    other.radius *= 0.5;
    assert!(pump_on_graph(&r.problem, &other, &r.seeds, graph).is_err(), "mismatched roadmap must be rejected");
}

#[test]
fn report_trajectory_recertifies_exactly() {
    let r = small("indoor");
    let out = pump(&r.problem, &r.params, &r.seeds).unwrap();
    let report = PlanReport::new(Some("indoor".into()), &r.params, r.seeds, &out);
    let Some(cp) = report.certified_cp else {
        assert!(report.trajectory.is_none());
        return;
    };
    assert!(cp <= r.params.alpha);
    let text = serde_json::to_string_pretty(&report).unwrap();
    let traj = read_trajectory(&text).unwrap();
    let p = &r.problem;
    let again = mc_certify(&p.model, &p.gains, &p.sigma0, &p.workspace, &traj, r.params.mc_samples, r.seeds.mc).unwrap();
    assert_eq!(again.value, cp);
}

#[test]
fn seeds_change_the_estimates_but_not_the_roadmap() {
    let r = small("three_obstacles");
    let a = pump(&r.problem, &r.params, &Seeds::from_master(1)).unwrap();
    let b = pump(&r.problem, &r.params, &Seeds::from_master(2)).unwrap();
    assert_eq!(a.graph.edge_count(), b.graph.edge_count());
    assert_eq!(a.graph.states, b.graph.states);
}
