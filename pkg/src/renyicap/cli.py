"""Command-line front end: ``renyicap <subcommand> ...``.

Scalars print as one 17-digit number per line; structured results print as
JSON. Domain errors exit 1 with an error object on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import capacity as cap
from . import families as fam
from . import measures as ms
from . import verify as vf
from .errors import DomainError, RenyiError
from .formatting import dumps, fmt


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def load_json(arg: str) -> Any:
    """Inline JSON when the argument looks like JSON, otherwise a file path."""
    text = arg.strip()
    if text[:1] in "{[" or text in ("null", "true", "false"):
        source = text
    else:
        try:
            source = Path(arg).read_text()
        except OSError as exc:
            raise DomainError(f"cannot read {arg!r}: {exc.strerror}") from None
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid JSON in {arg!r}: {exc.msg}") from None


def parse_order(text: str) -> float:
    return ms.as_order(text).value


def parse_alphas(spec: str) -> list[float]:
    """Comma-separated items, each an order atom or ``lo:hi:n[:log]``."""
    out: list[float] = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            out.append(parse_order(item))
            continue
        parts = item.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise _Usage(f"bad grid {item!r}; expected lo:hi:n[:log]")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise _Usage(f"bad grid {item!r}; expected lo:hi:n[:log]") from None
        if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
            raise _Usage(f"bad grid {item!r}: need finite ends and n >= 1")
        if len(parts) == 4:
            if lo <= 0 or hi <= 0:
                raise _Usage(f"log grid {item!r} needs positive ends")
            out.extend(np.geomspace(lo, hi, n).tolist())
        else:
            out.extend(np.linspace(lo, hi, n).tolist())
    if not out:
        raise _Usage("empty order grid")
    return out


def _emit(obj: Any) -> None:
    sys.stdout.write(dumps(obj) + "\n")


def _scalar(x: float) -> None:
    sys.stdout.write(fmt(x) + "\n")


def _channel(arg: str) -> ms.FiniteChannel:
    return ms.FiniteChannel.from_json(load_json(arg))


# --------------------------------------------------------------------------
# subcommands


def cmd_divergence(args: argparse.Namespace) -> int:
    _scalar(ms.renyi_divergence(load_json(args.w), load_json(args.q), args.alpha))
    return 0


def cmd_info(args: argparse.Namespace) -> int:
    _scalar(ms.renyi_information(_channel(args.channel), load_json(args.prior), args.alpha))
    return 0


def cmd_mean(args: argparse.Namespace) -> int:
    ch = _channel(args.channel)
    prior = load_json(args.prior)
    q = ms.renyi_mean(ch, prior, args.alpha)
    out: dict[str, Any] = {"order": args.alpha, "pmf": q.weights}
    if args.alpha > 0:
        out["norm"] = ms.mean_measure(ch, prior, args.alpha).norm
    _emit(out)
    return 0


def cmd_capacity(args: argparse.Namespace) -> int:
    sol = cap.solve_capacity(_channel(args.channel), args.alpha, tol=args.tol, max_iter=args.max_iter, n_starts=args.starts)
    _emit(sol.to_json())
    return 0


def cmd_curve(args: argparse.Namespace) -> int:
    curve = cap.capacity_curve(_channel(args.channel), parse_alphas(args.alphas), tol=args.tol, max_iter=args.max_iter)
    sys.stdout.write(curve.to_csv())
    return 0


def cmd_constrained(args: argparse.Namespace) -> int:
    cons = cap.constraint_from_json(load_json(args.constraint))
    sol = cap.solve_constrained_capacity(_channel(args.channel), args.alpha, cons, tol=args.tol, max_iter=args.max_iter)
    _emit(sol.to_json())
    return 0


def cmd_shift(args: argparse.Namespace) -> int:
    _scalar(fam.shift_capacity(fam.DensityOnCircle.from_json(load_json(args.density)), args.alpha))
    return 0


def cmd_poisson(args: argparse.Namespace) -> int:
    obj = load_json(args.spec)
    if args.mode in ("le", "ge", "mean") and isinstance(obj, dict) and "c" in obj and "constraint" not in obj:
        obj = dict(obj, constraint={"kind": {"mean": "eq"}.get(args.mode, args.mode), "c": obj["c"]})
    spec = fam.PoissonFamilySpec.from_json(obj)
    if args.mode == "mean":
        res = fam.poisson_mean_capacity(spec, args.alpha)
    elif args.mode in ("le", "ge"):
        want = fam.MeanLe if args.mode == "le" else fam.MeanGe
        if not isinstance(spec.constraint, want):
            raise DomainError(f"mode {args.mode} needs a {args.mode!r} mean constraint in the family JSON")
        res = fam.poisson_constrained_capacity(spec, args.alpha)
    elif args.mode == "bounded":
        res = fam.poisson_bounded_capacity(spec.T, spec.a, spec._ceiling(), args.alpha)
    else:
        g = spec.envelope if spec.envelope is not None else fam.PiecewiseConstant.constant(spec._ceiling())
        res = fam.poisson_product_capacity(spec.T, spec.a, g, args.alpha)
    _emit(res.to_json())
    return 0


def _intensity(text: str) -> Any:
    if text.strip()[:1] == "{":
        return fam.PiecewiseConstant.from_json(load_json(text))
    try:
        return float(text)
    except ValueError:
        raise _Usage(f"intensity must be a number or piecewise JSON, got {text!r}") from None


def cmd_poisson_mc(args: argparse.Namespace) -> int:
    f, g = _intensity(args.f), _intensity(args.g)
    est = fam.poisson_mc_divergence(f, g, args.T, args.alpha, args.n, seed=args.seed)
    _emit({"estimate": est.estimate, "stderr": est.stderr, "n": args.n, "seed": args.seed})
    return 0


def cmd_discretize(args: argparse.Namespace) -> int:
    spec = fam.PoissonFamilySpec.from_json(load_json(args.spec))
    ch = fam.poisson_discretize(spec, args.bins, args.levels, max_count=args.max_count, seed=args.seed)
    text = dumps(ch.to_json()) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.coverage:
        _emit(vf.coverage_table())
        return 0
    reports = vf.run_all(args.suites or None, n_instances=args.n, seed=args.seed)
    _emit([r.to_json() for r in reports])
    return 1 if any(r.violations for r in reports) else 0


# --------------------------------------------------------------------------
# parser


def _order_arg(text: str) -> float:
    try:
        return parse_order(text)
    except RenyiError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(kind: type) -> Any:
    def conv(text: str) -> Any:
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="renyicap", description="Renyi divergence, information and capacity.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, fn: Any, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=fn)
        return sp

    def alpha(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--alpha", type=_order_arg, required=True, help="order in [0, inf]; 'inf' accepted")

    def solver(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--tol", type=_positive(float), default=cap.DEFAULT_TOL)
        sp.add_argument("--max-iter", type=_positive(int), default=cap.DEFAULT_MAX_ITER)

    sp = add("divergence", cmd_divergence, "order-alpha divergence of two finite measures (JSON arrays)")
    sp.add_argument("w")
    sp.add_argument("q")
    alpha(sp)

    sp = add("info", cmd_info, "information of a channel under a prior")
    sp.add_argument("channel")
    sp.add_argument("prior")
    alpha(sp)

    sp = add("mean", cmd_mean, "normalized order-alpha mean of a channel under a prior")
    sp.add_argument("channel")
    sp.add_argument("prior")
    alpha(sp)

    sp = add("capacity", cmd_capacity, "certified capacity, center and optimal prior")
    sp.add_argument("channel")
    alpha(sp)
    solver(sp)
    sp.add_argument("--starts", type=_positive(int), default=cap.N_RESTARTS, help="independent starts below order one")

    sp = add("curve", cmd_curve, "capacity over a grid of orders, as CSV")
    sp.add_argument("channel")
    sp.add_argument("--alphas", required=True, help="comma list of orders or lo:hi:n[:log] grids")
    solver(sp)

    sp = add("constrained", cmd_constrained, "capacity over a constrained prior set")
    sp.add_argument("channel")
    alpha(sp)
    sp.add_argument("--constraint", required=True, help="constraint JSON or path")
    solver(sp)

    sp = add("shift", cmd_shift, "capacity of the mod-1 shift channel of a density")
    sp.add_argument("density")
    alpha(sp)

    sp = add("poisson", cmd_poisson, "Poisson family capacity and center intensity")
    sp.add_argument("spec")
    alpha(sp)
    sp.add_argument("--mode", choices=["mean", "le", "ge", "bounded", "product"], required=True)

    sp = add("poisson-mc", cmd_poisson_mc, "Monte-Carlo divergence between two Poisson processes")
    sp.add_argument("--f", required=True, help="constant intensity or piecewise JSON")
    sp.add_argument("--g", required=True, help="constant intensity or piecewise JSON")
    sp.add_argument("--T", type=_positive(float), required=True)
    alpha(sp)
    sp.add_argument("--n", type=_positive(int), default=100_000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("discretize", cmd_discretize, "finite sub-channel of a bounded Poisson family")
    sp.add_argument("spec")
    sp.add_argument("--bins", type=_positive(int), required=True)
    sp.add_argument("--levels", type=_positive(int), default=2)
    sp.add_argument("--max-count", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", "-o", help="write the channel JSON here instead of stdout")

    sp = add("verify", cmd_verify, "randomized property suites; exit 1 on any violation")
    sp.add_argument("suites", nargs="*", help="suite ids (default: all)")
    sp.add_argument("--n", type=_positive(int), default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--coverage", action="store_true", help="print the statement-to-suite table and exit")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"renyicap: error: {exc}\n")
        return 2
    except RenyiError as exc:
        sys.stderr.write(dumps(exc.to_dict()) + "\n")
        return 1
    except ArithmeticError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
