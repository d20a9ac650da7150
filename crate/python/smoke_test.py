"""Smoke test for the pathbarrier_py extension.

Build and install first:  pip install --no-build-isolation ./crates/python
Then run:                 python3 python/smoke_test.py
"""

import json
import sys

import pathbarrier_py as pb


def check(cond, what):
    if not cond:
        print(f"FAIL: {what}")
        sys.exit(1)
    print(f"ok    {what}")


def main():
    ga, gb = pb.Graph.catalog("a"), pb.Graph.catalog("b")
    check(ga.is_path_complete(), "Ga is path-complete")
    check(gb.rejected_word() == [1, 2, 1], "Gb rejects (121)")
    check(not gb.accepts([1, 2, 1]) and gb.accepts([1, 1]), "word acceptance")

    g = pb.Graph(2, ["p", "q"], [("p", 1, "p"), ("p", 2, "q"), ("q", 1, "p"), ("q", 2, "q")])
    check(g.is_path_complete() and len(g) == 2, "hand-built graph")
    check(pb.Graph.from_json(g.to_json()).edges == g.edges, "graph JSON round trip")

    cmp = pb.Graph.catalog("platoon").compare(pb.Graph.catalog("platoon_lift"))
    check(cmp["verdict"] == "less_or_equal" and cmp["map"]["v3"] == "v1", "platoon graph simulates its lift")

    ce = pb.counterexample(gb)
    check(ce["verified"] and ce["coefficients"] == [["64", "16", "16", "4"], ["4", "64", "4", "4"]],
          "counterexample coefficients")
    check(ce["witness"]["final_norm2"] == "1", "counterexample witness reaches the unit sphere")

    sep = pb.separate(gb)
    check(sep["report"]["pass"], "separating instance verifies")

    half = pb.System.linear([[["1/2", 0, 0], [0, "1/2", 0], [0, 0, "1/2"]]] * 2)
    check(half.simulate([2, 0, 0], [1, 2]) == [["2", "0", "0"], ["1", "0", "0"], ["0.5", "0", "0"]],
          "exact simulation")
    balls = pb.Spec.balls(4, 9)
    out = pb.synthesize(half, pb.Graph.catalog("platoon"), balls)
    check(out["status"] == "certified", "quadratic synthesis on a contraction")
    report = pb.validate(json.dumps(out["certificate"]), half, pb.Graph.catalog("platoon"), balls)
    check(report["pass"], "certificate revalidates")

    double = pb.System.linear([[[2, 0, 0], [0, 2, 0], [0, 0, 2]]] * 2)
    check(pb.synthesize(double, pb.Graph.catalog("platoon"), balls)["status"] == "infeasible", "expansion is infeasible")
    w = pb.brute_force(double, balls, 1)
    check(w is not None and w["exact"], "brute force finds an exact witness")

    platoon = pb.System.catalog("platoon")
    spec = pb.Spec.catalog("platoon")
    sos = pb.synthesize(platoon, pb.Graph.catalog("platoon"), spec, template="sos")
    check(sos["status"] == "certified", "platoon SOS certificate")
    traj = pb.System.catalog("platoon_modified").simulate_float([0.0, 1.0], [2] * 50)
    check(any(spec.in_unsafe(x) for x in traj), "modified platoon enters the unsafe set")

    tally = pb.experiment(count=8, dimension=2, seed=1)
    check(tally["only_g"] == 0 and tally["neither"] + tally["both"] + tally["only_gbar"] == 8, "experiment tally")

    try:
        pb.Graph(2, ["a"], [("a", 3, "a")])
    except pb.PathbarrierError:
        check(True, "bad symbol raises PathbarrierError")
    else:
        check(False, "bad symbol raises PathbarrierError")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
