"""Smoke test for the pitwise_py extension module.

Run ./build_ext.sh first (it drops pitwise_py.so next to this script), then
`python smoke_test.py`.
"""

import math
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pitwise_py as pw


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    rng = random.Random(42)
    u = [rng.random() for _ in range(200)]

    # pointwise + combined tests on a uniform sample
    for method in ["potc", "pietc", "ks", "ad", "pitos"]:
        report = pw.test(u, method=method)
        assert 0.0 <= report["global_p"] <= 1.0, report
        assert report["n"] == 200
    report = pw.test(u, method="pritc", partition=[0.25, 0.5, 0.75], combiner="tcct")
    assert 0.0 <= report["global_p"] <= 1.0

    # pointwise decomposition feeds the combiners consistently
    pointwise = pw.potc(u)
    t_stat, p_star = pw.combine_cct(pointwise["p_values"])
    report = pw.test(u, method="potc", combiner="cct")
    approx(t_stat, report["statistic"])
    approx(p_star, report["global_p"])

    # Shapley influence: efficiency and the attribution pipeline
    phi = pw.shapley(pointwise["cauchy_t"])
    approx(sum(phi), sum(pointwise["cauchy_t"]) / len(u), tol=1e-9)
    region = pw.influential(phi, 0.0)
    assert region == [i for i, v in enumerate(phi) if v > 0.0]
    plot = pw.plot_data(u, method="potc")
    assert len(plot["ecdf_points"]) == 200
    assert sorted(plot["influential"]) == plot["influential"]

    # a pile-up near zero must be rejected and blamed on the right points
    bad = [0.001] * 40
    assert pw.test(bad, method="potc")["reject"]

    # conjugate laboratory: exact PITs without MCMC
    data, pits = pw.conjugate_pits(50, 5, sigma=1.0, tau=1.0, seed=7, variant="loo")
    assert len(data) == 50 and len(data[0]) == 5 and len(pits) == 250
    assert all(0.0 < x < 1.0 for x in pits)
    _, post = pw.conjugate_pits(50, 5, sigma=1.0, tau=1.0, seed=7, variant="posterior")
    var = lambda xs: sum((x - sum(xs) / len(xs)) ** 2 for x in xs) / len(xs)
    assert var(post) < var(pits), "posterior PITs should concentrate"
    _, heavy = pw.conjugate_pits(
        50, 5, sigma=0.06, tau=1.96, dgp="student_t", dgp_params={"nu": 3.0}, seed=7
    )
    assert pw.test(heavy, method="pietc")["global_p"] < 0.05

    # copula: calibration round trip and dependent uniforms
    s = pw.copula_calibrate(100, 3, 11, 0.3)
    assert 0.0 < s < 1.0
    du = pw.copula_uniforms(100, 3, s, seed=11)
    assert len(du) == 100 and all(0.0 < x < 1.0 for x in du)

    # simulation harness from TOML, deterministic across job counts
    spec = """
model = "conjugate"
groups = 10
per_group = 4
sigma = 1.0
tau = 1.0
mu0 = 0.0
dgp = "normal"
pit = "loo"
methods = ["potc", "ks"]
combiner = "cct"
replicates = 30
alphas = [0.05]
seed = 3
"""
    a = pw.simulate(spec, jobs=1)
    b = pw.simulate(spec, jobs=4)
    assert a == b, "simulate must not depend on parallelism"
    assert a["completed"] == 30
    assert {r["method"] for r in a["rejection_rates"]} == {"potc+cct", "ks"}

    # error paths surface as ValueError
    for call in [
        lambda: pw.test([], method="potc"),
        lambda: pw.test([0.2, 1.5], method="potc"),
        lambda: pw.combine_cct([0.0]),
        lambda: pw.copula_uniforms(10, 1, 1.0),
    ]:
        try:
            call()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed:", len(u), "PITs,", len(pits), "lab PITs, simulate OK")


if __name__ == "__main__":
    main()
