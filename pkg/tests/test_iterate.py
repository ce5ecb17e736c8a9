from fractions import Fraction

import numpy as np
import pytest

from nlcontact import iterate
from nlcontact.fd import Grid, TraceFunction, extract_trace
from nlcontact.geometry import AdmissibilityError, ContactSpec, ProblemData, Rect, SideData, SplitGeometry
from nlcontact.iterate import (ContactProblem, IterationError, IterationOptions, NonContractionError, contact_update,
                               estimate_ratio, run)
from nlcontact.verify import BUILTIN_XI_MINUS, BUILTIN_XI_PLUS, builtin_example

BUILTIN, EXACT = builtin_example()
GRID31 = Grid(1.0, 1.0, 31, 31, 0.5)


def test_contact_update_zero_traces_gives_phi0():
    x2 = GRID31.x2
    zero = [TraceFunction(xi, np.zeros_like(x2)) for xi in BUILTIN.geom.lines]
    t = contact_update(zero, BUILTIN.spec, x2, 0.5)
    assert np.array_equal(t.values, BUILTIN.spec.phi0(np.full_like(x2, 0.5), x2))


def test_contact_update_builtin_exact_traces():
    x2 = GRID31.x2
    c = x2 * np.cos(np.pi * x2 / 2)
    traces = [TraceFunction(float(x), float(x) * c) for x in BUILTIN_XI_MINUS]
    traces += [TraceFunction(float(x), float(1 - x) * c) for x in BUILTIN_XI_PLUS]
    t = contact_update(traces, BUILTIN.spec, x2, 0.5)
    assert np.allclose(t.values, 0.5 * c, rtol=1e-15, atol=1e-16)
    w = Fraction(1, 8)
    assert w * sum(BUILTIN_XI_MINUS) + w * sum(1 - x for x in BUILTIN_XI_PLUS) == Fraction(11, 64)
    assert Fraction(11, 64) + Fraction(21, 64) == Fraction(1, 2)


def test_contact_update_is_affine():
    rng = np.random.default_rng(1)
    x2 = GRID31.x2
    lines = BUILTIN.geom.lines
    t = [TraceFunction(xi, rng.normal(size=x2.size)) for xi in lines]
    s = [TraceFunction(xi, rng.normal(size=x2.size)) for xi in lines]
    ts = [TraceFunction(xi, a.values + b.values) for xi, a, b in zip(lines, t, s)]
    phi = BUILTIN.spec.phi0(np.full_like(x2, 0.5), x2)
    lhs = contact_update(ts, BUILTIN.spec, x2, 0.5).values
    rhs = contact_update(t, BUILTIN.spec, x2, 0.5).values + contact_update(s, BUILTIN.spec, x2, 0.5).values - phi
    assert np.allclose(lhs, rhs, atol=1e-14)


def test_contact_update_rejects_mismatched_nodes():
    x2 = GRID31.x2
    bad = [TraceFunction(xi, np.zeros(5)) for xi in BUILTIN.geom.lines]
    with pytest.raises(ValueError):
        contact_update(bad, BUILTIN.spec, x2, 0.5)
    with pytest.raises(ValueError):
        contact_update(bad[:2], BUILTIN.spec, x2, 0.5)


@pytest.mark.parametrize("deltas,q", [([1, 0.5, 0.25, 0.125], 0.5), ([1, 0.3, 0.09, 0.027], 0.3)])
def test_estimate_ratio_examples(deltas, q):
    assert estimate_ratio(deltas) == pytest.approx(q, rel=1e-14)


def test_estimate_ratio_window_and_floor():
    d = [1.0, 0.9, 0.5, 0.25, 0.125, 0.0625, 0.03125]
    # last five quotients: 0.5/0.9 then four halvings
    assert estimate_ratio(d) == pytest.approx(((0.5 / 0.9) * 0.5**4) ** (1 / 5), rel=1e-12)
    assert estimate_ratio(d, window=3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        estimate_ratio([1.0, 0.5])
    with pytest.raises(ValueError):
        estimate_ratio([1e-20, 1e-21, 1e-22])


def test_options_invariants():
    with pytest.raises(ValueError):
        IterationOptions(max_iters=0)
    with pytest.raises(ValueError):
        IterationOptions(trace_tol=0.0)


def zero_problem():
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, (0.25,), (0.75,))
    return ContactProblem(geom, ContactSpec((0.5,), (0.5,)), ProblemData())


def test_zero_problem_converges_first_sweep():
    u, rep = run(zero_problem(), Grid(1.0, 1.0, 15, 15, 0.5))
    assert rep.reason == "converged" and rep.iterations_run == 1
    assert not np.any(u.values)
    assert rep.q_hat is None


def test_builtin_contracts_below_bound():
    _, rep = run(BUILTIN, GRID31, IterationOptions(trace_tol=1e-13))
    assert rep.reason == "converged"
    assert rep.q_bound == 0.625
    tail = [q for q, d in zip(rep.quotients, rep.deltas) if d > 100 * iterate.EPS]
    assert max(tail) <= rep.q_bound + 0.05
    assert rep.q_hat <= 0.625


def test_fixed_point_consistency():
    opts = IterationOptions(trace_tol=1e-13)
    u, rep = run(BUILTIN, GRID31, opts)
    init = {xi: extract_trace(u, xi).values for xi in (0.5,) + BUILTIN.geom.lines}
    _, again = run(BUILTIN, GRID31, IterationOptions(trace_tol=1e-13, initial_traces=init))
    assert again.deltas[0] <= 10 * opts.solver_tol


def test_initial_guess_independence():
    tol = 1e-12
    u0, _ = run(BUILTIN, GRID31, IterationOptions(trace_tol=tol))
    u1, _ = run(BUILTIN, GRID31, IterationOptions(trace_tol=tol, initial_traces=1.0))
    assert np.max(np.abs(u0.values - u1.values)) <= 10 * tol


def test_missing_initial_trace_rejected():
    with pytest.raises(KeyError):
        run(BUILTIN, GRID31, IterationOptions(initial_traces={0.5: np.zeros(33)}))


def test_interface_columns_bit_identical():
    seen = []

    def cb(k, u, trace):
        seen.append((u.values[16].copy(), trace.values.copy()))

    u, _ = run(BUILTIN, GRID31, IterationOptions(max_iters=3), callback=cb)
    for col, tr in seen:
        assert np.array_equal(col, tr)
    assert u.values.shape == (33, 33)


def test_maximum_principle_transfer():
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, (0.375, 0.25), (0.75,))
    spec = ContactSpec((0.25, 0.25), (0.125,), "sin(pi*x2)")
    data = ProblemData(SideData(K11="1+x1^2", K22="1+x2^2"), SideData(K11="2", K22="1+x1*x2"))
    bound = 1.0 / (1 - spec.weight_sum)
    peaks = []
    run(ContactProblem(geom, spec, data), GRID31, callback=lambda k, u, t: peaks.append(np.max(np.abs(u.values))))
    assert len(peaks) > 3
    assert max(peaks) <= bound + 1e-12


def test_coordination_violation_warns_and_proceeds():
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, (0.25,), (0.75,))
    problem = ContactProblem(geom, ContactSpec((0.25,), (0.25,), "1"), ProblemData())
    u, rep = run(problem, Grid(1.0, 1.0, 15, 15, 0.5))
    assert rep.reason == "converged"
    assert any("coordination" in w for w in rep.warnings)
    assert u.values[8, 0] == 0.0 and u.values[8, -1] == 0.0


def test_inadmissible_problem_refused():
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, (0.25,), (0.75,))
    with pytest.raises(AdmissibilityError):
        run(ContactProblem(geom, ContactSpec((0.75,), (0.75,)), ProblemData()), GRID31)


def test_non_contraction_alarm(monkeypatch):
    monkeypatch.setattr(iterate, "validate", lambda g, s: [])
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, (0.4375,), (0.5625,))
    problem = ContactProblem(geom, ContactSpec((0.75,), (0.75,), "sin(pi*x2)"), ProblemData())
    with pytest.raises(NonContractionError) as info:
        run(problem, GRID31)
    rep = info.value.report
    assert rep.reason == "non-contraction"
    assert info.value.iteration == len(rep.deltas)
    assert all(b > a for a, b in zip(rep.deltas[-4:], rep.deltas[-3:]))


def test_max_iters_reported():
    _, rep = run(BUILTIN, GRID31, IterationOptions(max_iters=4))
    assert rep.reason == "max-iters" and rep.iterations_run == 4
    assert rep.q_hat is not None and rep.q_hat < 0.625


def test_solver_failure_carries_iteration(monkeypatch):
    from nlcontact.fd import LinearSolveError

    def boom(system, tol):
        raise LinearSolveError("singular", 1.0)

    monkeypatch.setattr(iterate, "solve_linear", boom)
    with pytest.raises(IterationError) as info:
        run(BUILTIN, GRID31)
    assert info.value.iteration == 1
    assert info.value.report.reason == "solver-failure"


def test_reference_errors_recorded():
    _, rep = run(BUILTIN, GRID31, reference=EXACT.nodal(GRID31))
    assert len(rep.abs_errors) == rep.iterations_run
    rows = list(rep.rows())
    assert rows[0][0] == 1 and rows[-1][0] == rep.iterations_run
    assert rep.rel_errors[-1] == pytest.approx(rep.abs_errors[-1] / np.max(np.abs(EXACT.nodal(GRID31)[1:-1, 1:-1])))
