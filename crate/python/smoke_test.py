"""Smoke test for the pump_py extension.

Build and install first, e.g. `pip install ./crates/python --no-build-isolation`
(needs maturin), then run `python python/smoke_test.py`.
"""

import json
import math
import pathlib
import sys

import pump_py

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return cond


def main():
    good = True

    tau, cost = pump_py.optimal_duration([0.0], [0.0], [1.0], [0.0])
    good &= check(abs(tau - 36 ** 0.25) < 1e-6 and abs(cost - 3.2660) < 1e-4, f"rest-to-rest steering τ={tau:.6f} cost={cost:.4f}")
    good &= check(pump_py.optimal_duration([1.0], [0.0], [1.0], [0.0]) is None, "identical states have no connection")
    good &= check(abs(pump_py.normal_tail(1.6449) - 0.05) < 1e-4, "normal tail at 1.6449")

    try:
        pump_py.Scenario.from_json("{}")
        good &= check(False, "empty scenario rejected")
    except ValueError:
        good &= check(True, "empty scenario rejected")

    # Small planning run on the bundled three-obstacle world.
    text = (ROOT / "scenarios" / "three_obstacles.json").read_text()
    spec = json.loads(text)
    spec["planner"].update(samples=600, mc_samples=1000, particles=128)
    sc = pump_py.Scenario.from_json(json.dumps(spec))
    good &= check(sc.dims == 3 and sc.name == "three_obstacles", "scenario metadata")

    res = sc.plan(seed=7)
    report = json.loads(res.report_json())
    good &= check(report["command"] == "plan" and report["success"] == res.success, "plan report round-trips as JSON")
    good &= check(res.partial_plans > 0, f"exploration processed {res.partial_plans} partial plans")
    if res.success:
        traj = res.trajectory()
        good &= check(res.certified_cp <= sc.alpha, f"certified CP {res.certified_cp} ≤ α")
        again = sc.certify(traj, seed=7)
        good &= check(again == res.certified_cp, "certify reproduces the reported CP")
        back = pump_py.Trajectory.from_json(traj.to_json())
        good &= check(math.isclose(back.cost(1.0, 1.0), res.cost, rel_tol=1e-12), "trajectory JSON round trip")
    else:
        print(f"note: no certified plan at this size (front {res.front})")

    rrt = json.loads(sc.rrt(seed=7, trials=20))
    good &= check(rrt["command"] == "rrt" and len(rrt["attempts"]) <= 20, "rrt report")

    print("smoke test " + ("passed" if good else "FAILED"))
    return 0 if good else 1


if __name__ == "__main__":
    sys.exit(main())
