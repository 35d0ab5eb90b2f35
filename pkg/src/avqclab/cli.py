"""Batch command-line driver.

Exit codes: 0 success, 2 validation failure, 3 budget/size failure, 4 IO.
``AVQCLAB_THREADS`` caps the number of worker processes used by sweeps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import avqc as av
from . import capacities, channels, finite
from . import io as aio
from .errors import AvqcError, ValidationError


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("grid must be nonempty")
    return vals


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers: {text!r}")
    return [int(v) for v in vals]


def threads() -> int:
    raw = os.environ.get("AVQCLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"AVQCLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"AVQCLAB_THREADS must be a positive integer, got {raw!r}")
    return min(n, os.cpu_count() or 1)


def _config(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str) -> None:
    if args.out:
        aio.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _echo(args) -> None:
    print("config: " + json.dumps(_config(args), sort_keys=True), file=sys.stderr if not args.out else sys.stdout)


# -- commands --------------------------------------------------------------


def cmd_build(args) -> None:
    if args.kind == "example":
        a = av.build_example()
    else:
        if args.lam is None or args.eta is None:
            raise ValidationError("build family needs --lambda and --eta")
        a = av.build_interpolated_family(args.lam, args.eta)
    _emit(args, aio.dump_json({**aio.avqc_to_json(a), "config": _config(args)}))


def cmd_symmetrizability(args) -> None:
    a = aio.load_avqc(args.avqc)
    rep = av.f_value(a, args.l, av.Budget(starts=args.budget_starts, seed=args.seed))
    _emit(args, aio.dump_json({**rep.to_dict(), "config": _config(args)}))
    if args.out:
        print(f"F_{rep.l} = {rep.value:.9g} ({rep.certificate})")
        rho, sigma = rep.witness_states
        print("witness rho diag:", np.round(np.diag(rho).real, 6).tolist())
        print("witness sigma diag:", np.round(np.diag(sigma).real, 6).tolist())


def _sweep_row(task):
    lam, eta, starts, seed, hull_grid, d_starts = task
    fam = av.build_interpolated_family(lam, eta)
    rep = av.f_value(fam, 1, av.Budget(starts=starts, seed=seed))
    limits = [av.build_interpolated_family(1.0, eta), av.build_interpolated_family(lam, 1.0)]
    dist = min(channels.set_distance(fam.channels, lim.channels, starts=d_starts, seed=seed) for lim in limits)
    eb = av.eb_in_hull_search(fam).verdict
    chi = capacities.chi_minimax_lower_bound(fam, grid=hull_grid).value
    return (lam, eta, rep.value, dist, eb, chi, rep.certificate)


def cmd_sweep(args) -> None:
    grid = args.grid or [0.0, 0.25, 0.5, 0.75, 1.0]
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise ValidationError("grid values must lie in [0, 1]")
    tasks = [(lam, eta, args.budget_starts, args.seed, args.hull_grid, args.diamond_starts) for lam in grid for eta in grid]
    n = threads()
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    header = ["lambda", "eta", "F1", "D_to_limit_set", "eb_hull_verdict", "chi_minimax", "certificate"]
    _emit(args, aio.csv_text(header, rows))
    _echo(args)


def cmd_capacity(args) -> None:
    if args.avqc is None:
        n = args.grid or 11
        if n < 2:
            raise ValidationError("capacity curve needs at least 2 grid points")
        ts = [k / (n - 1) for k in range(n)]
        rows = capacities.capacity_curve(ts)
        _emit(args, aio.csv_text(["t", "chi", "closed_form", "abs_err"], rows))
        _echo(args)
        return
    a = aio.load_avqc(args.avqc)
    res = capacities.chi_minimax_lower_bound(a, grid=args.grid or 1001)
    out = {
        "chi_minimax": res.value,
        "worst_q": res.worst_q.tolist(),
        "best_p": res.best_p.tolist(),
        "config": _config(args),
    }
    if args.coherent:
        ic = capacities.ic_minimax_single_letter(a, seed=args.seed)
        out["coherent_information_heuristic"] = ic.value
        out["coherent_worst_q"] = ic.worst_q.tolist()
    _emit(args, aio.dump_json(out))


def cmd_tradeoff(args) -> None:
    rows = finite.tradeoff_rows(args.lambdas, args.gaps, args.s_sizes)
    _emit(args, aio.csv_text(["lambda", "E_minus_eps", "S_size", "K", "L", "L_approx"], rows))
    _echo(args)


def cmd_simulate(args) -> None:
    a = aio.load_avqc(args.avqc)
    code = finite.build_toy_base_code(a, args.l, args.M)
    K = args.K
    if K is None:
        w = finite.cq_outputs(a)
        ens = finite.robustify(code, a.dim_out)
        eps_l = float(finite.ensemble_error_table(w, ens).mean(axis=0).max())
        K = finite.codes_for_tail(args.target, args.lam, eps_l, a.n_states, args.l)
    res = finite.derandomize_simulate(a, code, K, args.lam, args.trials, args.seed, exhaustive=args.exhaustive)
    out = {
        **res.to_dict(),
        "codewords": code.codewords.tolist(),
        "hull_error": code.hull_error,
        "config": _config(args),
    }
    _emit(args, aio.dump_json(out))


def cmd_eb_hull(args) -> None:
    a = aio.load_avqc(args.avqc)
    res = av.eb_in_hull_search(a)
    out = {
        "best_q": res.best_q.tolist(),
        "min_pt_eig": res.min_pt_eig,
        "upper_bound": res.upper_bound,
        "verdict": res.verdict,
        "config": _config(args),
    }
    _emit(args, aio.dump_json(out))


def cmd_diamond(args) -> None:
    a, b = aio.load_avqc(args.first), aio.load_avqc(args.second)
    table = [
        [channels.diamond_norm_estimate(x, y, starts=args.budget_starts, seed=args.seed).lower for y in b.channels]
        for x in a.channels
    ]
    t = np.asarray(table)
    dist = float(max(t.min(axis=1).max(), t.min(axis=0).max()))
    _emit(args, aio.dump_json({"set_distance": dist, "pairwise": t.tolist(), "config": _config(args)}))


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="avqclab", description="Numerical experiments on arbitrarily varying quantum channels.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, starts=64):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        if starts:
            p.add_argument("--budget-starts", type=int, default=starts)

    p = sub.add_parser("build", help="write an AVQC as JSON")
    p.add_argument("kind", choices=["example", "family"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eta", type=float)
    common(p, starts=0)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("symmetrizability", help="F_l with witnesses and certificate")
    p.add_argument("avqc")
    p.add_argument("--l", type=int, default=1, choices=[1, 2, 3])
    common(p)
    p.set_defaults(func=cmd_symmetrizability)

    p = sub.add_parser("sweep-discontinuity", help="F_1 and friends over the (lambda, eta) family grid")
    p.add_argument("--grid", type=_floats, default=None, help="comma-separated values in [0, 1]")
    p.add_argument("--hull-grid", type=int, default=1001)
    p.add_argument("--diamond-starts", type=int, default=16)
    common(p, starts=16)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("capacity", help="capacity curve (no input) or hull minimax for an AVQC")
    p.add_argument("avqc", nargs="?")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--coherent", action="store_true", help="also run the coherent-information heuristic")
    common(p, starts=0)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("tradeoff", help="K and L tables")
    p.add_argument("--lambdas", type=_floats, default=[0.01, 0.05, 0.1])
    p.add_argument("--gaps", type=_floats, default=[0.1, 0.2])
    p.add_argument("--s-sizes", type=_ints, default=[2])
    common(p, starts=0)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("simulate", help="derandomization Monte Carlo")
    p.add_argument("avqc")
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--K", type=int, default=None, help="default: smallest K with tail bound <= --target")
    p.add_argument("--lam", type=float, default=0.25)
    p.add_argument("--target", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--exhaustive", action="store_true")
    common(p, starts=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eb-hull", help="search the hull for an entanglement breaking channel")
    p.add_argument("avqc")
    common(p, starts=0)
    p.set_defaults(func=cmd_eb_hull)

    p = sub.add_parser("diamond-distance", help="set distance of two AVQCs")
    p.add_argument("first")
    p.add_argument("second")
    common(p, starts=32)
    p.set_defaults(func=cmd_diamond)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads()
        args.func(args)
    except AvqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
