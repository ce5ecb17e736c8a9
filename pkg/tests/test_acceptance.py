"""Acceptance criteria, one test each.

Every test records a one-line verdict; the lines are printed at the end of a
pytest session (see conftest.py) and when this file is run as a script.
"""

import sys

import numpy as np
import pytest

from nlcontact.fd import Grid, TraceFunction
from nlcontact.fourier import PoissonContactProblem, denominators, sinh_ratio
from nlcontact.geometry import ContactSpec, ProblemData, Rect, SideData, SplitGeometry
from nlcontact.iterate import ContactProblem, IterationOptions, estimate_ratio, run
from nlcontact.verify import builtin_example, cross_validate, iteration_study, observed_orders, operator_residual

RESULTS: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


@pytest.fixture(scope="module")
def builtin_study():
    problem, exact = builtin_example()
    grid = Grid.square(129, 0.5)
    return iteration_study(problem, exact, grid, IterationOptions(max_iters=30, trace_tol=1e-13), keep=10)


def test_criterion_1_contraction_bound(builtin_study):
    rep = builtin_study.report
    d = rep.deltas
    # quotient d_{k+1}/d_k for k >= 2, 1-based
    tail = [d[k] / d[k - 1] for k in range(2, len(d)) if d[k - 1] > 1e-11]
    ok = rep.reason == "converged" and len(tail) > 0 and max(tail) <= 0.625 + 0.05 and rep.q_hat <= 0.625
    record(1, "contraction bound", ok,
           f"{rep.iterations_run} sweeps, max tail quotient {max(tail):.4f} <= 0.675, Q_hat {rep.q_hat:.4f} <= 0.625")


def test_criterion_2_decay_band(builtin_study):
    first = builtin_study.report.abs_errors[0]
    ninth = builtin_study.distance_to_converged(9)
    ok = 0.005 <= first <= 0.3 and ninth <= 1e-5
    record(2, "decay band", ok, f"|u1 - u*| = {first:.4g} in [0.005, 0.3], |u9 - u_conv| = {ninth:.3g} <= 1e-5")


def test_criterion_3_relative_error_decay(builtin_study):
    rel = builtin_study.report.rel_errors
    floor = builtin_study.discretization_error[1]
    steps = [(rel[k], rel[k + 1]) for k in range(1, 9)]  # k = 2..10, 1-based
    monotone = all(b <= a or b <= 1.01 * floor for a, b in steps)
    ratio = rel[9] / rel[0]
    record(3, "relative error decay", monotone and ratio <= 1e-3,
           f"nonincreasing over k=2..10 (floor {floor:.3g}), rel(10)/rel(1) = {ratio:.3g} <= 1e-3")


def test_criterion_4_operator_identity():
    problem, exact = builtin_example()
    res = [operator_residual(exact, problem, Grid.square(n + 1, 0.5)) for n in (64, 128, 256)]
    orders = {s: observed_orders([r[s] for r in res]) for s in ("minus", "plus")}
    ok = all(1.8 <= o <= 2.2 for v in orders.values() for o in v)
    text = ", ".join(f"{s} " + "/".join(f"{o:.3f}" for o in v) for s, v in orders.items())
    record(4, "operator residual order", ok, f"observed orders {text} in [1.8, 2.2]")


def test_criterion_5_cross_validation():
    p = PoissonContactProblem(0.5, 0.25, 0.75, 0.5, 0.5, phi0="sin(pi*x2)")
    coarse = cross_validate(p, 64, Grid.square(65, 0.5)).discrepancy
    fine = cross_validate(p, 64, Grid.square(129, 0.5)).discrepancy
    ratio = coarse / fine
    ok = coarse <= 5e-4 and 3.5 <= ratio <= 4.5
    record(5, "series vs grid", ok, f"65x65 {coarse:.3g} <= 5e-4, 129x129 {fine:.3g}, ratio {ratio:.2f} ~ 4")


def test_criterion_6_uniqueness():
    problem, _ = builtin_example()
    grid = Grid.square(129, 0.5)
    u0, r0 = run(problem, grid, IterationOptions(trace_tol=1e-13))
    u1, r1 = run(problem, grid, IterationOptions(trace_tol=1e-13, initial_traces=1.0))
    diff = float(np.max(np.abs(u0.values - u1.values)))
    ok = r0.reason == r1.reason == "converged" and diff <= 1e-11
    record(6, "initial-guess independence", ok, f"sup difference {diff:.3g} <= 1e-11")


def test_criterion_7_weight_sum_one():
    problem, _ = builtin_example()
    spec = ContactSpec((0.2,) * 3, (0.2,) * 2, problem.spec.phi0)
    rescaled = ContactProblem(problem.geom, spec, problem.data)
    _, rep = run(rescaled, Grid.square(129, 0.5), IterationOptions(max_iters=500, trace_tol=1e-12))
    q = estimate_ratio(rep.deltas)
    ok = spec.weight_sum == 1.0 and rep.reason == "converged" and q < 1.0
    record(7, "weights summing to one", ok, f"converged in {rep.iterations_run} sweeps, Q_hat {q:.4f} < 1")


def test_criterion_8_denominator_positivity():
    rng = np.random.default_rng(20261015)
    K = 256
    c = np.pi * np.arange(1, K + 1)
    worst = np.inf
    with np.errstate(over="raise", invalid="raise"):
        for i in range(100):
            xi0 = rng.uniform(0.05, 0.95)
            xm = rng.uniform(0.01, 0.99) * xi0
            xp = xi0 + rng.uniform(0.01, 0.99) * (1 - xi0)
            gm = rng.uniform(0.01, 0.99)
            gp = 1.0 - gm if i % 2 == 0 else rng.uniform(0.0, 1.0 - gm)
            gp = max(gp, 1e-6)
            D = denominators(gm, gp, xi0, xm, xp, K)
            S = np.concatenate([sinh_ratio(c, xm, xi0), sinh_ratio(c, xp - 1, xi0 - 1)])
            assert np.all(np.isfinite(S)) and np.all((0 <= S) & (S <= 1))
            assert np.all(np.isfinite(D))
            worst = min(worst, float(D.min()))
    record(8, "denominator positivity", worst > 0, f"min denominator {worst:.4g} > 0 over 100 tuples x 256 modes")


def _random_problem(rng):
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, (0.375, 0.25, 0.125), (0.625, 0.75, 0.875))
    w = rng.dirichlet(np.ones(6)) * rng.uniform(0.3, 1.0)
    phi0 = f"{rng.uniform(-1, 1):.6f}*sin({rng.uniform(1, 4):.6f}*x2) + {rng.uniform(-0.5, 0.5):.6f}"

    def side():
        a, b, c, d = rng.uniform(0.2, 2, 4)
        return SideData(K11=f"{a:.6f}+{b:.6f}*x1^2", K22=f"{c:.6f}+{d:.6f}*sin(3*x1*x2)^2",
                        k=f"{rng.uniform(0, 3):.6f}*x2", boundary=f"{rng.uniform(-2, 2):.6f}*cos({rng.uniform(0, 5):.6f}*(x1+x2))")

    return ContactProblem(geom, ContactSpec(tuple(w[:3]), tuple(w[3:]), phi0), ProblemData(side(), side()))


def test_criterion_9_maximum_principle():
    rng = np.random.default_rng(9)
    grid = Grid.square(33, 0.5)
    i0 = grid.i0
    worst = -np.inf
    sweeps = 0
    for _ in range(50):
        problem = _random_problem(rng)

        def check(k, u, trace: TraceFunction):
            nonlocal worst, sweeps
            sweeps += 1
            for cols in (slice(0, i0 + 1), slice(i0, None)):
                v = u.values[cols]
                data = np.concatenate([v[0], v[-1], v[:, 0], v[:, -1]])
                # a nonnegative reaction term pulls toward zero, so 0 joins the data
                lo, hi = min(data.min(), 0.0), max(data.max(), 0.0)
                worst = max(worst, lo - v.min(), v.max() - hi)

        run(problem, grid, IterationOptions(trace_tol=1e-12), callback=check)
    record(9, "discrete maximum principle", worst <= 1e-12,
           f"{sweeps} sweeps over 50 problems, worst excursion {worst:.3g} <= 1e-12")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
