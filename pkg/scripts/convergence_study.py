"""Grid refinement: operator residual order for the built-in problem and
series-vs-grid discrepancy for the constant-coefficient two-point problem.

    python3 scripts/convergence_study.py --levels 64 128 256
"""

import argparse

from nlcontact.fd import Grid
from nlcontact.fourier import PoissonContactProblem
from nlcontact.verify import builtin_example, cross_validate, observed_orders, operator_residual

CASES = {
    "phi0 = sin(pi x2)": PoissonContactProblem(0.5, 0.25, 0.75, 0.5, 0.5, phi0="sin(pi*x2)"),
    "f = sin(pi x2)": PoissonContactProblem(0.5, 0.25, 0.75, 0.5, 0.5, f_minus="sin(pi*x2)", f_plus="sin(pi*x2)"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[64, 128, 256], help="intervals per direction")
    ap.add_argument("--modes", type=int, default=64)
    args = ap.parse_args()

    problem, exact = builtin_example()
    res = {s: [] for s in ("minus", "plus")}
    print("operator residual max|A u* - f|")
    for n in args.levels:
        r = operator_residual(exact, problem, Grid.square(n + 1, 0.5))
        for s in res:
            res[s].append(r[s])
        print(f"  h=1/{n:<4d} minus {r['minus']:.3e}  plus {r['plus']:.3e}")
    for s, v in res.items():
        print(f"  observed order {s}: " + ", ".join(f"{o:.3f}" for o in observed_orders(v)))

    for name, p in CASES.items():
        print(f"series (K={args.modes}) vs grid, {name}")
        d = []
        for n in args.levels:
            cv = cross_validate(p, args.modes, Grid.square(n + 1, 0.5))
            d.append(cv.discrepancy)
            print(f"  {n + 1}x{n + 1}: {cv.discrepancy:.3e}  (Q_hat {cv.report.q_hat:.4f}, tail {cv.tail_estimate:.1e})")
        print("  observed order: " + ", ".join(f"{o:.3f}" for o in observed_orders(d)))


if __name__ == "__main__":
    main()
