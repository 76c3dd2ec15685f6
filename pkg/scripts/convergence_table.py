"""Convergence of the jump, DtN and manufactured-solution residuals under grid refinement.

    python3 scripts/convergence_table.py [--V0 "bump(1)"] [--sizes 32 64 128]

Prints a whitespace table (one row per N) suitable for plotting.
"""
import argparse
import warnings

from stokeslp.bvp import DirichletProblem, dtn, field_distance, no_jump_check, solve_dirichlet
from stokeslp.checks import _density, _flux_free, engine_for
from stokeslp.config import parse_coefficient
from stokeslp.layers import jump_residuals


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--V", default="1")
    ap.add_argument("--V0", default="1")
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    V, V0 = parse_coefficient(args.V), parse_coefficient(args.V0)
    cols = ("N", "W", "V", "P", "TS", "dtn", "nojump", "manufactured")
    print(" ".join(f"{c:>12}" for c in cols))
    for N in args.sizes:
        eng = engine_for(V, V0, N)
        h = _density(2, N, 4, args.seed)
        jr = jump_residuals(eng, h, check_extrapolation=False).residuals
        f = _flux_free(h) if eng.params.classification["V0_zero_on_omega"] else h
        d = dtn(eng, f).residual
        nj = no_jump_check(eng, f)
        Ustar = eng.potential("double", h)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_dirichlet(DirichletProblem(eng, Ustar.trace_density("interior", "velocity")))
        man = field_distance(sol.potential, Ustar)["velocity"]
        vals = [jr["W"], jr["V"], jr["P"], jr["TS"], d, max(nj["plus"], nj["minus"]), man]
        print(f"{N:>12} " + " ".join(f"{v:12.3e}" for v in vals), flush=True)


if __name__ == "__main__":
    main()
