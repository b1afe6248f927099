"""Convergence studies: error norms, order fits and CSV output."""

from __future__ import annotations

import io
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .delay import build_mesh, compute_discontinuities
from .errors import DimensionError, ERKCError, InsufficientData
from .integrator import MethodConfig, integrate, normalize_method
from .phi import CollocationScheme, gauss, scheme_from_name
from .problems import DEFAULT_GRID, get_problem
from .spectral import DiagonalizableOperator

SCHEMA = "#schema=1"
THREADS_ENV = "ERKC_THREADS"

Norm = Union[str, tuple]


def parse_norm(text: str) -> Norm:
    """``linf``, ``l2`` or ``v:<alpha>``."""
    key = text.strip().lower()
    if key in ("linf", "l2"):
        return key
    m = re.fullmatch(r"v[:_]?(.+)", key)
    if m:
        return ("v", float(Fraction(m.group(1))))
    raise ValueError(f"unknown norm {text!r}; use linf, l2 or v:<alpha>")


def norm_label(norm: Norm) -> str:
    return norm if isinstance(norm, str) else f"v:{norm[1]!r}"


def error_norm(u_num, u_ref, norm: Norm, operator: DiagonalizableOperator) -> float:
    """Distance between two state vectors.

    ``linf`` is the max abs difference, ``l2`` the grid-weighted root sum of
    squares and ``("v", alpha)`` the ``l2`` norm of ``A^alpha`` applied to the
    difference.
    """
    u_num = np.asarray(u_num, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u_num.shape != u_ref.shape or u_num.shape != (operator.dof,):
        raise DimensionError(
            f"shapes {u_num.shape} and {u_ref.shape} do not match dof {operator.dof}"
        )
    d = u_num - u_ref
    if isinstance(norm, str):
        norm = parse_norm(norm)
    if norm == "linf":
        return float(np.max(np.abs(d))) if d.size else 0.0
    if norm == "l2":
        return float(math.sqrt(operator.cell_volume * float(d @ d)))
    if isinstance(norm, tuple) and norm[0] == "v":
        return error_norm(operator.apply_fractional_power(norm[1], d), np.zeros_like(d), "l2", operator)
    raise ValueError(f"unknown norm {norm!r}")


def _parse_step(text: str) -> float:
    text = text.strip()
    m = re.fullmatch(r"2\^(-?\d+)", text)
    if m:
        return 2.0 ** int(m.group(1))
    return float(Fraction(text))


def parse_steps(text: str) -> list[float]:
    """Expand ``2^-a..2^-b`` into octaves or split a comma list."""
    m = re.fullmatch(r"\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = -1 if b < a else 1
        return [2.0**k for k in range(a, b + step, step)]
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty step-size list")
    try:
        return [_parse_step(p) for p in parts]
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot parse step sizes {text!r}") from None


@dataclass(frozen=True)
class ComputedReference:
    method: str = "erkc_c"
    scheme: CollocationScheme = field(default_factory=lambda: gauss(3))
    h_ref: float = 2.0**-11
    # second run at 2 h_ref to estimate the reference's own accuracy
    estimate_floor: bool = False


@dataclass
class ConvergenceStudy:
    problem: str
    method: str
    scheme: CollocationScheme
    hs: Sequence[float]
    norm: Norm = "linf"
    reference: Union[str, ComputedReference] = "exact"
    out: Optional[str] = None
    n: Optional[int] = None
    mesh_policy: str = "constrained_uniform"
    global_error: bool = False
    fp_tol: float = 1e-12
    fp_max_iter: int = 100
    problem_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.method = normalize_method(self.method)
        self.hs = [float(h) for h in self.hs]
        if isinstance(self.norm, str):
            self.norm = parse_norm(self.norm)
        if len(self.hs) < 1 or any(h <= 0 for h in self.hs):
            raise ValueError("step sizes must be positive")
        if any(b >= a for a, b in zip(self.hs, self.hs[1:])):
            raise ValueError("step sizes must be strictly decreasing")
        if isinstance(self.reference, ComputedReference):
            if not self.reference.h_ref < min(self.hs) / 4:
                raise ValueError(
                    f"h_ref = {self.reference.h_ref} must be below min step / 4 = {min(self.hs) / 4}"
                )
        elif self.reference != "exact":
            raise ValueError("reference must be 'exact' or a ComputedReference")


@dataclass
class OrderFit:
    hs: list
    errors: list
    pairwise: list
    slope: float
    window: tuple
    excluded: list = field(default_factory=list)
    floor: float = 0.0

    def summary(self) -> str:
        lo, hi = self.window
        return f"slope={self.slope:.4f} over h={self.hs[lo]:g}..{self.hs[hi]:g}"


def _pairwise(hs, es):
    return [
        math.log(es[i] / es[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(hs) - 1)
    ]


def fit_order(errors: Sequence[tuple], floor: float = 0.0) -> OrderFit:
    """Fit ``e ~ C h^p`` on the asymptotic window of ``(h, e)`` pairs.

    Points with ``e < 100 floor`` are dropped.  Among the remaining pairwise
    orders the longest contiguous run within 1 of their median defines the
    window.
    """
    pts = sorted(((float(h), float(e)) for h, e in errors), key=lambda p: -p[0])
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 points, got {len(pts)}")
    if any(e <= 0 or not math.isfinite(e) for _, e in pts):
        raise InsufficientData("errors must be positive and finite")
    hs = [h for h, _ in pts]
    es = [e for _, e in pts]
    pairwise = _pairwise(hs, es)

    excluded = []
    usable = []
    for i, e in enumerate(es):
        if e < 100.0 * floor:
            excluded.append((hs[i], f"error below 100x reference floor {floor:.3g}"))
        else:
            usable.append(i)
    if len(usable) < 3:
        raise InsufficientData("fewer than 3 points above the reference floor")
    # usable indices are a prefix since errors decrease with h; keep it general anyway
    sub_p = _pairwise([hs[i] for i in usable], [es[i] for i in usable])
    med = float(np.median(sub_p))
    runs, start = [], None
    for j, p in enumerate(sub_p):
        if abs(p - med) <= 1.0:
            start = j if start is None else start
        elif start is not None:
            runs.append((start, j - 1))
            start = None
    if start is not None:
        runs.append((start, len(sub_p) - 1))
    # longest run wins; ties go to the finer one
    best = max(runs, key=lambda r: (r[1] - r[0], r[0]), default=None)
    if best is None or best[1] == best[0]:
        raise InsufficientData("no run of consistent pairwise orders spans 3 points")
    window = usable[best[0] : best[1] + 2]
    for i in usable:
        if i not in window:
            side = "coarse" if i < window[0] else "fine"
            excluded.append((hs[i], f"{side} point outside the consistent-order window (median {med:.3f})"))
    x = np.log([hs[i] for i in window])
    y = np.log([es[i] for i in window])
    slope = float(np.polyfit(x, y, 1)[0])
    excluded.sort(key=lambda r: -r[0])
    return OrderFit(hs, es, pairwise, slope, (window[0], window[-1]), excluded, floor)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class StudyResult:
    fit: OrderFit
    csv: str
    global_errors: Optional[list] = None
    reports: list = field(default_factory=list)


def run_study(study: ConvergenceStudy) -> StudyResult:
    """Integrate once per step size and fit the final-time error order."""
    n = DEFAULT_GRID.get(study.problem) if study.n is None else study.n
    problem = get_problem(study.problem, n, **study.problem_kwargs)
    disc = compute_discontinuities(problem.delay, problem.T)
    T = problem.T

    def solve(method, scheme, h, keep_nodes):
        mesh = build_mesh(disc, h, T, study.mesh_policy)
        cfg = MethodConfig(method, scheme, study.fp_tol, study.fp_max_iter,
                           retain="all" if keep_nodes else "needed")
        try:
            return integrate(problem, mesh, cfg, keep_nodes=keep_nodes)
        except ERKCError as exc:
            raise type(exc)(f"h = {h!r}: {exc}") from exc

    floor = 0.0
    ref_traj = None
    if isinstance(study.reference, ComputedReference):
        ref = study.reference
        ref_traj = solve(ref.method, ref.scheme, ref.h_ref, study.global_error)
        ref_final = ref_traj.final
        if ref.estimate_floor:
            coarse = solve(ref.method, ref.scheme, 2 * ref.h_ref, False)
            floor = error_norm(coarse.final, ref_final, study.norm, problem.operator)
    else:
        if problem.exact is None:
            raise ValueError(f"problem {study.problem} has no exact solution; use a computed reference")
        ref_final = np.asarray(problem.exact(T), dtype=float)

    def cell(h):
        return solve(study.method, study.scheme, h, study.global_error)

    workers = min(_threads(), len(study.hs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(cell, study.hs))
    else:
        trajs = [cell(h) for h in study.hs]

    errors = [error_norm(tr.final, ref_final, study.norm, problem.operator) for tr in trajs]
    global_errors = None
    if study.global_error:
        global_errors = [_global_error(tr, problem, ref_traj, study.norm) for tr in trajs]

    fit = fit_order(list(zip(study.hs, errors)), floor)
    text = _format_csv(study, n, fit, errors, global_errors)
    if study.out:
        with open(study.out, "w", newline="") as fh:
            fh.write(text)
    return StudyResult(fit, text, global_errors, [tr.report for tr in trajs])


def _global_error(traj, problem, ref_traj, norm) -> float:
    worst = 0.0
    for t, u in zip(traj.times, traj.values):
        if ref_traj is None:
            ref = problem.exact(float(t))
        else:
            k = int(np.searchsorted(ref_traj.times, t))
            k = min(max(k, 0), len(ref_traj.times) - 1)
            if abs(ref_traj.times[k] - t) > 1e-12 * max(1.0, abs(t)):
                raise ValueError(f"node {t} is not on the reference mesh")
            ref = ref_traj.values[k]
        worst = max(worst, error_norm(u, ref, norm, problem.operator))
    return worst


def _format_csv(study, n, fit, errors, global_errors) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    ref = study.reference
    ref_text = "exact" if ref == "exact" else f"{ref.method}/{ref.scheme.name}/h_ref={ref.h_ref!r}"
    buf.write(
        f"#problem={study.problem} n={n} method={study.method} scheme={study.scheme.name} "
        f"norm={norm_label(study.norm)} mesh={study.mesh_policy} reference={ref_text}\n"
    )
    cols = ["h", "error", "pairwise_order"] + (["global_error"] if global_errors else [])
    buf.write(",".join(cols) + "\n")
    for i, (h, e) in enumerate(zip(study.hs, errors)):
        row = [repr(h), repr(e), "" if i == 0 else repr(fit.pairwise[i - 1])]
        if global_errors:
            row.append(repr(global_errors[i]))
        buf.write(",".join(row) + "\n")
    lo, hi = fit.window
    buf.write(f"#slope={fit.slope!r} window={fit.hs[lo]!r}..{fit.hs[hi]!r}\n")
    for h, why in fit.excluded:
        buf.write(f"#excluded h={h!r}: {why}\n")
    return buf.getvalue()


def study_from_names(
    problem: str,
    method: str,
    scheme_kind: str,
    s: Optional[int],
    hs: Sequence[float],
    **kwargs,
) -> ConvergenceStudy:
    return ConvergenceStudy(problem, method, scheme_from_name(scheme_kind, s), hs, **kwargs)
