"""Command-line front end: ``pdlimits {sample,density,rates,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 sampler
budget exhausted, 4 numerical failure.  Floats are printed with repr(),
the shortest string that round-trips, and infinite values as ``inf``.
The seed comes from --seed, else $PDLIMITS_SEED, else the plan file, else 42.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .experiments import SUITES, ExperimentPlan, PlanError, RarityGuardError, run_suite
from .py_sampler import (
    BudgetExhausted,
    LadderStop,
    PYParams,
    StopRule,
    partition_masses_stable,
    sample_pd0_subordinator,
    sample_pd_ranked,
    sample_py_measure,
    spawn_rng,
    write_draws_csv,
)
from .rate_functions import (
    DepthInsufficient,
    MixtureMeasure,
    PartitionGrid,
    TailedSequence,
    contraction_psi,
    rate_i1,
    rate_i2,
    rate_in,
    rate_j1,
    rate_j2,
    rate_j_rho,
    rate_jn,
    rate_measure,
    sup_partition_rate,
)
from .stable_numerics import (
    PrecisionLossError,
    QuadratureConfig,
    QuadratureError,
    SeriesDivergenceError,
    mittag_leffler_moment,
    mittag_leffler_pdf,
    stable_cdf,
    stable_log_cdf,
    stable_log_sf_lower,
    stable_log_sf_upper,
    stable_pdf,
)

DEFAULT_SEED = 42
SEED_ENV = "PDLIMITS_SEED"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET, EXIT_NUMERICS = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _num(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_num(v: float):
    v = float(v)
    return ("inf" if v > 0 else "-inf") if math.isinf(v) else v


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}")


def _seed(args, plan_seed: Optional[int] = None) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"${SEED_ENV} is not an integer: {env!r}")
    return plan_seed if plan_seed is not None else DEFAULT_SEED


def _seed_arg(value: str) -> int:
    s = int(value)
    if not 0 <= s < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _open_out(path: Optional[str]):
    return open(path, "w", newline="", encoding="utf-8") if path else sys.stdout


def _quad_config(args) -> QuadratureConfig:
    return QuadratureConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol, max_subdivisions=args.max_subdivisions)


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    seed = _seed(args)
    rng = spawn_rng(seed, 0)
    try:
        params = PYParams(args.alpha, args.theta)
    except ValueError as exc:
        raise UsageError(str(exc))
    rep = args.representation
    header = (f"# pdlimits {__version__} sample representation={rep} alpha={_num(args.alpha)} "
              f"theta={_num(args.theta)} seed={seed}\n")
    if rep == "cells":
        if params.alpha <= 0 or params.theta != 0:
            raise UsageError("cells needs theta = 0 and alpha > 0")
        grid = _floats(args.grid) if args.grid else []
        rows = [partition_masses_stable(params.alpha, grid, rng) for _ in range(args.n_draws)]
    else:
        if rep == "ladder" and not params.subordinator_available:
            raise UsageError("ladder needs theta = 0 and alpha > 0")
        draws = []
        for _ in range(args.n_draws):
            if rep == "stick":
                stop = StopRule(max_sticks=args.max_terms, residual_eps=args.truncation_eps)
                draws.append(sample_pd_ranked(params, rng, stop))
            elif rep == "ladder":
                stop = LadderStop(max_terms=args.max_terms, weight_eps=args.truncation_eps)
                draws.append(sample_pd0_subordinator(params.alpha, rng, stop)[0])
            else:
                stop = StopRule(max_sticks=args.max_terms, residual_eps=args.truncation_eps)
                draws.append(sample_py_measure(params, rng, stop))
    out = _open_out(args.output)
    try:
        out.write(header)
        if rep == "cells":
            # rank is the cell index here
            out.write("draw_id,rank,weight\n")
            for i, m in enumerate(rows):
                for k, x in enumerate(m, start=1):
                    out.write(f"{i},{k},{_num(x)}\n")
        else:
            write_draws_csv(draws, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def cmd_density(args) -> int:
    cfg = _quad_config(args)
    xs = _floats(args.at)
    which = args.which
    rows = []
    for x in xs:
        log_v = None
        if which == "cdf":
            log_v = stable_log_cdf(args.alpha, x, cfg)
            v = stable_cdf(args.alpha, x, cfg)
        elif which == "pdf":
            v = stable_pdf(args.alpha, x, cfg)
        elif which == "ml-pdf":
            v = mittag_leffler_pdf(args.alpha, x, cfg)
        elif which == "ml-moment":
            v = mittag_leffler_moment(args.alpha, x)
        elif which == "tail-lower":
            est = stable_log_sf_lower(args.alpha, x, cfg)
            v, log_v = est.prob, est.log_prob
        else:
            est = stable_log_sf_upper(args.alpha, x, cfg)
            v, log_v = est.prob, est.log_prob
        rows.append((x, v, log_v))
    with_log = which in ("cdf", "tail-lower", "tail-upper")
    out = _open_out(args.output)
    try:
        if args.format == "json":
            recs = [{"x": x, "value": _json_num(v), **({"log_value": _json_num(lv)} if with_log else {})}
                    for x, v, lv in rows]
            json.dump({"command": "density", "which": which, "alpha": args.alpha, "seed": _seed(args),
                       "rows": recs}, out, indent=2)
            out.write("\n")
        else:
            out.write(f"# pdlimits {__version__} density which={which} alpha={_num(args.alpha)} seed={_seed(args)}\n")
            out.write("x,value,log_value\n" if with_log else "x,value\n")
            for x, v, lv in rows:
                out.write(",".join([_num(x), _num(v)] + ([_num(lv)] if with_log else [])) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def _sequence(args) -> TailedSequence:
    prefix = _floats(args.prefix) if args.prefix else []
    tail = args.tail
    try:
        if tail == "zeros":
            return TailedSequence.zeros(prefix)
        if tail.startswith("const:"):
            return TailedSequence.constant(prefix, float(tail[6:]))
        return TailedSequence.constant(prefix, float(tail))
    except ValueError as exc:
        raise UsageError(f"bad sequence: {exc}")


def _atoms(text: Optional[str]) -> MixtureMeasure:
    atoms = []
    for item in (text or "").split(","):
        if not item.strip():
            continue
        try:
            x, p = item.split(":")
            atoms.append((float(x), float(p)))
        except ValueError:
            raise UsageError(f"atoms must look like x:p,x:p, got {item!r}")
    return MixtureMeasure.from_atoms(atoms)


def cmd_rates(args) -> int:
    r = args.rate
    try:
        if r == "j1":
            v = rate_j1(_sequence(args))
        elif r == "j2":
            v = rate_j2(_sequence(args))
        elif r == "i1":
            v = rate_i1(_sequence(args))
        elif r == "i2":
            v = rate_i2(_sequence(args))
        elif r == "psi":
            y = contraction_psi(_sequence(args))
            v = None
            seq = {"prefix": list(y.prefix), "tail": y.tail}
        elif r == "j":
            if args.at is None:
                raise UsageError("--rate j needs --at")
            v = rate_j_rho(float(args.at))
        elif r == "jn":
            v = rate_jn(_floats(args.u or ""))
        elif r == "in":
            v = rate_in(_floats(args.y or ""), PartitionGrid(tuple(_floats(args.grid or ""))))
        elif r == "measure":
            v = rate_measure(_atoms(args.atoms))
        else:
            v = sup_partition_rate(_atoms(args.atoms), args.depth)
    except ValueError as exc:
        raise UsageError(str(exc))
    out = _open_out(args.output)
    try:
        if r == "psi":
            text = ",".join(_num(x) for x in seq["prefix"]) + f";tail={_num(seq['tail'])}"
            if args.format == "json":
                json.dump({"command": "rates", "rate": r, "seed": _seed(args), **seq}, out, indent=2)
                out.write("\n")
            else:
                out.write(text + "\n")
            return EXIT_OK
        val = float(v)
        if args.format == "json":
            json.dump({"command": "rates", "rate": r, "seed": _seed(args), "value": _json_num(val)}, out, indent=2)
            out.write("\n")
        elif args.format == "csv":
            out.write(f"# pdlimits {__version__} rates seed={_seed(args)}\nrate,value\n{r},{_fmt_rate(val)}\n")
        else:
            out.write(_fmt_rate(val) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _fmt_rate(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return str(int(v)) if v == int(v) else repr(v)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    try:
        plan = ExperimentPlan.load(args.plan) if args.plan else ExperimentPlan()
    except OSError as exc:
        raise UsageError(f"cannot read plan: {exc}")
    seed = _seed(args, plan.seed if args.plan else None)
    kw = {"seed": seed}
    if args.workers:
        kw["workers"] = args.workers
    plan = ExperimentPlan(**{**plan.__dict__, **kw})
    report = run_suite(args.suite, plan)
    json_path = args.output or plan.output_path
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    raw_path = args.raw_csv or plan.raw_path
    if raw_path:
        report.write_raw_csv(raw_path)
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdlimits", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"pdlimits {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=_seed_arg, default=None,
                        help=f"master seed (default: ${SEED_ENV}, else {DEFAULT_SEED})")

    def quad(sp):
        sp.add_argument("--abs-tol", type=float, default=1e-10)
        sp.add_argument("--rel-tol", type=float, default=1e-8)
        sp.add_argument("--max-subdivisions", type=int, default=2000)

    s = sub.add_parser("sample", help="draw PD weights, Pitman-Yor measures or cell masses")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--n-draws", type=int, default=1)
    s.add_argument("--truncation-eps", type=float, default=1e-3,
                   help="stick residual target, or the largest omitted ladder atom")
    s.add_argument("--max-terms", type=int, default=100_000)
    s.add_argument("--representation", choices=["stick", "ladder", "measure", "cells"], default="stick")
    s.add_argument("--grid", help="interior cuts for --representation cells, comma separated")
    s.add_argument("--output", help="file instead of standard output")
    seeded(s)
    s.set_defaults(func=cmd_sample)

    d = sub.add_parser("density", help="stable and Mittag-Leffler laws")
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--which", choices=["cdf", "pdf", "ml-pdf", "ml-moment", "tail-lower", "tail-upper"],
                   required=True)
    d.add_argument("--at", required=True, help="point or comma-separated points (delta for tails)")
    d.add_argument("--format", choices=["csv", "json"], default="csv")
    d.add_argument("--output")
    quad(d)
    seeded(d)
    d.set_defaults(func=cmd_density)

    r = sub.add_parser("rates", help="evaluate a rate function")
    r.add_argument("--rate", choices=["j1", "j2", "i1", "i2", "psi", "j", "jn", "in", "measure", "sup"],
                   required=True)
    r.add_argument("--prefix", help="sequence prefix, comma separated")
    r.add_argument("--tail", default="zeros", help="zeros, or a constant c in (0, 1] (also const:c)")
    r.add_argument("--at", help="point for --rate j")
    r.add_argument("--u", help="vector for --rate jn")
    r.add_argument("--y", help="cell masses for --rate in")
    r.add_argument("--grid", help="interior cuts for --rate in")
    r.add_argument("--atoms", help="atoms x:p, comma separated, for --rate measure/sup")
    r.add_argument("--depth", type=int, default=12)
    r.add_argument("--format", choices=["text", "csv", "json"], default="text")
    r.add_argument("--output")
    seeded(r)
    r.set_defaults(func=cmd_rates)

    v = sub.add_parser("verify", help="run experiment suites")
    v.add_argument("--suite", choices=sorted(SUITES) + ["all"], required=True)
    v.add_argument("--plan", help="key = value plan file")
    v.add_argument("--format", choices=["text", "json"], default="text")
    v.add_argument("--output", help="also write the JSON report here")
    v.add_argument("--raw-csv", help="write per-replica values here")
    v.add_argument("--workers", type=int, default=None)
    seeded(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, PlanError) as exc:
        print(f"pdlimits: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhausted as exc:
        print(f"pdlimits: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (QuadratureError, SeriesDivergenceError) as exc:
        err = getattr(exc, "error_estimate", None) or getattr(exc, "largest_term", None)
        print(f"pdlimits: numerical failure: {exc} (achieved error {err!r})", file=sys.stderr)
        return EXIT_NUMERICS
    except (PrecisionLossError, RarityGuardError, DepthInsufficient, OverflowError) as exc:
        print(f"pdlimits: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except ValueError as exc:
        print(f"pdlimits: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_entry() -> None:
    try:
        code = main()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main_entry()
