"""Command-line entry point: ``erkc disc|run|converge|selftest``."""

from __future__ import annotations

import argparse
import io
import logging
import sys
import time
from typing import Optional, Sequence

import numpy as np

from .delay import build_mesh, compute_discontinuities
from .errors import ERKCError
from .harness import SCHEMA, ComputedReference, ConvergenceStudy, parse_norm, parse_steps, run_study
from .integrator import MethodConfig, integrate
from .phi import gauss, scheme_from_name
from .problems import PROBLEMS, get_problem

log = logging.getLogger("erkc")

# reference step for problems without a closed-form solution
DEFAULT_H_REF = {"ex2": 2.0**-11, "ex3": 2.0**-14}

SYNOPSIS = """\
usage: erkc [--config FILE] <command> [options]

commands:
  disc      --problem P                         primary discontinuities and segments
  run       --problem P --method M --scheme K --s S --h H [--mesh constrained|per-segment] [--timing]
  converge  --problem P --method M --scheme K --s S --hs 2^-a..2^-b [--norm linf|l2|v:ALPHA] [--global]
  selftest  [--fast]                            property suites and acceptance checks

common: --out FILE (default stdout), --n GRID, --fp-tol, --fp-max-iter, -v
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(SYNOPSIS)
        sys.stderr.write(f"erkc: error: {message}\n")
        raise SystemExit(2)


def _common(p: argparse.ArgumentParser, problem_required: bool = True) -> None:
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=problem_required)
    p.add_argument("--n", type=int, default=None, help="spatial grid size")
    p.add_argument("--out", default=None, help="CSV destination (default stdout)")


def _method_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", default="erkc_c", help="erkc-i, erkc-c or merkc-i")
    p.add_argument("--scheme", default="radau", help="gauss, radau or custom:<c1,c2,...>")
    p.add_argument("--s", type=int, default=None, help="number of stages")
    p.add_argument("--mesh", choices=["constrained", "per-segment"], default="constrained")
    p.add_argument("--fp-tol", type=float, default=1e-12)
    p.add_argument("--fp-max-iter", type=int, default=100)
    p.add_argument("--source", choices=["semidiscrete", "continuous"], default=None,
                   help="manufactured source mode (ex1 only)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="erkc", usage=SYNOPSIS, add_help=True)
    parser.add_argument("--config", default=None, help="key=value file supplying defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("disc", usage=SYNOPSIS)
    _common(p)

    p = sub.add_parser("run", usage=SYNOPSIS)
    _common(p)
    _method_args(p)
    p.add_argument("--h", required=True, help="base step, e.g. 2^-6 or 0.01")
    p.add_argument("--timing", action="store_true", help="append wall time to the report")

    p = sub.add_parser("converge", usage=SYNOPSIS)
    _common(p)
    _method_args(p)
    p.add_argument("--hs", required=True, help="2^-a..2^-b or comma list")
    p.add_argument("--norm", default="linf")
    p.add_argument("--global", dest="global_error", action="store_true",
                   help="also report max node error over [0, T]")
    p.add_argument("--h-ref", default=None, help="computed-reference step (problems without exact solution)")

    p = sub.add_parser("selftest", usage=SYNOPSIS)
    p.add_argument("--fast", action="store_true", help="skip the long-running 2D study")
    return parser


def read_config(path: str) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` flags; ``#`` starts a comment."""
    args = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                args.append(flag)
            elif value.lower() not in ("false", "no", "off"):
                args += [flag, value]
    return args


def _scheme(args):
    kind = args.scheme
    s = args.s
    if s is None and not kind.startswith("custom:"):
        raise ValueError(f"--scheme {kind} needs --s")
    return scheme_from_name(kind, s)


def _problem_kwargs(args):
    if getattr(args, "source", None):
        if args.problem != "ex1":
            raise ValueError("--source applies to ex1 only")
        return {"source": args.source}
    return {}


def _mesh_policy(args):
    return "per_segment_uniform" if args.mesh == "per-segment" else "constrained_uniform"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_disc(args) -> int:
    problem = get_problem(args.problem, args.n)
    disc = compute_discontinuities(problem.delay, problem.T)
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    buf.write("mu,xi,segment_start,segment_end\n")
    bps = disc.breakpoints
    for mu, xi in enumerate(disc.xi, 1):
        buf.write(f"{mu},{xi!r},{bps[mu - 1]!r},{bps[mu]!r}\n")
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_run(args) -> int:
    problem = get_problem(args.problem, args.n, **_problem_kwargs(args))
    scheme = _scheme(args)
    (h,) = parse_steps(args.h)
    disc = compute_discontinuities(problem.delay, problem.T)
    mesh = build_mesh(disc, h, problem.T, _mesh_policy(args))
    cfg = MethodConfig(args.method, scheme, args.fp_tol, args.fp_max_iter)
    traj = integrate(problem, mesh, cfg, keep_nodes=False)
    rep = traj.report

    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    buf.write(
        f"#problem={problem.label} method={rep.method} scheme={rep.scheme} h={h!r} "
        f"steps={rep.n_steps} mean_iterations={rep.mean_iterations!r} "
        f"max_iterations={max(rep.iterations)}\n"
    )
    stats = rep.ratio_stats
    buf.write("#" + " ".join(f"{k}={stats[k]!r}" for k in sorted(stats)) + "\n")
    if args.timing:
        buf.write(f"#wall_time={rep.wall_time:.3f}\n")
    ref = problem.exact(problem.T) if problem.exact is not None else None
    if ref is not None:
        buf.write(f"#final_linf_error={float(np.max(np.abs(traj.final - ref)))!r}\n")
    coords = problem.operator.coords or ()
    names = ["x", "y"][: len(coords)]
    buf.write(",".join(["dof"] + names + ["u"]) + "\n")
    for i, u in enumerate(traj.final):
        buf.write(",".join([str(i)] + [repr(float(c[i])) for c in coords] + [repr(float(u))]) + "\n")
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_converge(args) -> int:
    hs = parse_steps(args.hs)
    reference = "exact"
    problem = get_problem(args.problem, args.n, **_problem_kwargs(args))
    if problem.exact is None:
        if args.h_ref:
            h_ref = parse_steps(args.h_ref)[0]
        else:
            h_ref = min(DEFAULT_H_REF.get(args.problem, 2.0**-11), min(hs) / 8)
        reference = ComputedReference("erkc_c", gauss(3), h_ref)
    study = ConvergenceStudy(
        args.problem,
        args.method,
        _scheme(args),
        hs,
        norm=parse_norm(args.norm),
        reference=reference,
        out=None,
        n=args.n,
        mesh_policy=_mesh_policy(args),
        global_error=args.global_error,
        fp_tol=args.fp_tol,
        fp_max_iter=args.fp_max_iter,
        problem_kwargs=_problem_kwargs(args),
    )
    result = run_study(study)
    _emit(result.csv, args.out)
    return 0


def cmd_selftest(args) -> int:
    from .checks import run_checks

    failed = 0
    for res in run_checks(fast=args.fast):
        print(res.line(), flush=True)
        failed += not res.passed
    print(f"{failed} failed" if failed else "all checks passed")
    return 1 if failed else 0


COMMANDS = {"disc": cmd_disc, "run": cmd_run, "converge": cmd_converge, "selftest": cmd_selftest}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv, config = _pop_config(argv)
        if config:
            argv = _splice_config(argv, read_config(config))
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"erkc: {exc}\n")
        return 2
    if args.command is None:
        sys.stderr.write(SYNOPSIS)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except (ERKCError, ValueError) as exc:
        sys.stderr.write(f"erkc {args.command}: {type(exc).__name__}: {exc}\n")
        return 1
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return code


def _pop_config(argv: list) -> tuple[list, Optional[str]]:
    out, path, i = [], None, 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            i += 2
            continue
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            out.append(tok)
        i += 1
    return out, path


def _splice_config(argv: list, config_args: list) -> list:
    # config values go after the subcommand so explicit flags (later) win
    for i, tok in enumerate(argv):
        if tok in COMMANDS:
            return argv[: i + 1] + config_args + argv[i + 1 :]
    return argv + config_args


if __name__ == "__main__":
    raise SystemExit(main())
