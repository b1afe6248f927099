"""Delays, primary discontinuity points and constrained time meshes."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BracketFailure,
    DelayTooSmall,
    EmptySegment,
    NonmonotoneDeviatedArgument,
    OutOfDomain,
    StepExceedsTauZero,
)

HISTORY = -1
SAMPLES_PER_UNIT = 10_000


@dataclass(frozen=True)
class DelaySpec:
    """Time-dependent delay ``tau(t) >= tau0 > 0``.

    ``history_start`` is the left end of the interval on which the initial
    function is needed, i.e. ``min_t (t - tau(t))`` over the horizon.
    """

    tau: Callable[[float], float]
    tau0: float
    history_start: float

    def deviated(self, t):
        return t - self.tau(t)

    def validate(self, T: float, samples_per_unit: int = SAMPLES_PER_UNIT) -> None:
        """Check ``tau >= tau0`` and strict growth of ``t - tau(t)`` on ``[0, T]`` by sampling."""
        if self.tau0 <= 0:
            raise DelayTooSmall("tau0 must be positive")
        m = max(int(math.ceil(T * samples_per_unit)), 2) + 1
        t = np.linspace(0.0, T, m)
        tau = np.array([self.tau(v) for v in t], dtype=float)
        slack = 1e-12 * max(1.0, self.tau0)
        if np.any(tau < self.tau0 - slack):
            k = int(np.argmin(tau))
            raise DelayTooSmall(f"tau({t[k]:.6g}) = {tau[k]:.6g} < tau0 = {self.tau0:.6g}")
        dev = t - tau
        if np.any(np.diff(dev) <= 0):
            k = int(np.argmax(np.diff(dev) <= 0))
            raise NonmonotoneDeviatedArgument(
                f"t - tau(t) is not increasing near t = {t[k]:.6g}"
            )
        if np.min(dev) < self.history_start - slack:
            raise OutOfDomain(
                f"delayed argument {np.min(dev):.6g} precedes history_start {self.history_start}"
            )


def constant_delay(tau: float) -> DelaySpec:
    return DelaySpec(lambda t: tau + 0.0 * t, tau, -tau)


@dataclass(frozen=True)
class DiscontinuitySet:
    """Primary discontinuity points ``0 < xi_1 < ... < xi_m < T``."""

    xi: tuple
    T: float
    tau0: float

    @property
    def breakpoints(self) -> tuple:
        """``(0, xi_1, ..., xi_m, T)``: the segment boundaries."""
        return (0.0,) + tuple(self.xi) + (self.T,)

    def segments(self) -> list[tuple[float, float]]:
        b = self.breakpoints
        return [(b[k], b[k + 1]) for k in range(len(b) - 1)]


def compute_discontinuities(
    delay: DelaySpec, T: float, tol: float = 1e-12, validate: bool = True
) -> DiscontinuitySet:
    """Generate ``xi_mu`` from ``xi_mu - tau(xi_mu) = xi_{mu-1}``, ``xi_0 = 0``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if validate:
        delay.validate(T)
    xi = []
    prev = 0.0
    while True:
        lo_val = delay.deviated(prev) - prev
        hi_val = delay.deviated(T) - prev
        if lo_val >= 0:
            raise BracketFailure(f"t - tau(t) >= t at t = {prev}; tau must be positive")
        if hi_val <= 0:
            break
        root = brentq(
            lambda t: delay.deviated(t) - prev, prev, T, xtol=1e-15, rtol=1e-15, maxiter=500
        )
        # brentq's stopping rule is on the abscissa; polish with bisection on the residual
        root = _polish(delay, prev, root, tol)
        if root >= T:
            break
        xi.append(root)
        prev = root
    return DiscontinuitySet(tuple(xi), T, delay.tau0)


def _polish(delay, target, root, tol):
    if abs(delay.deviated(root) - target) <= tol:
        return root
    step = max(abs(root), 1.0) * 1e-12
    lo, hi = root - step, root + step
    while delay.deviated(lo) > target:
        lo -= step
        step *= 2
    while delay.deviated(hi) < target:
        hi += step
        step *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = delay.deviated(mid) - target
        if abs(r) <= tol or hi - lo <= 4 * np.finfo(float).eps * max(abs(mid), 1.0):
            return mid
        if r < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Mesh:
    """Time mesh ``0 = t_0 < ... < t_N = T`` containing every ``xi_mu``.

    ``seg[k]`` is the (one-based) segment index of interval ``(t_k, t_{k+1}]``;
    ``breakpoint_index[mu]`` is the node index of ``xi_mu`` (with
    ``xi_0 = 0`` and the final entry ``T``).
    """

    nodes: np.ndarray
    disc: DiscontinuitySet
    seg: np.ndarray = field(repr=False)
    breakpoint_index: tuple = field(repr=False)
    policy: str = "constrained_uniform"

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def n_intervals(self) -> int:
        return len(self.nodes) - 1

    @property
    def max_step(self) -> float:
        return float(np.max(self.steps))

    @property
    def ratio_stats(self) -> dict:
        h = self.steps
        if len(h) < 2:
            return {"max_shrink": 1.0, "max_growth": 1.0, "min_step": float(h.min()), "max_step": float(h.max())}
        return {
            "max_shrink": float(np.max(h[:-1] / h[1:])),
            "max_growth": float(np.max(h[1:] / h[:-1])),
            "min_step": float(h.min()),
            "max_step": float(h.max()),
        }

    def locate(self, t: float, history_start: float = -math.inf) -> int:
        """Interval index ``k`` with ``t`` in ``(t_k, t_{k+1}]``, or ``HISTORY`` for ``t <= 0``."""
        if t < history_start or t > self.nodes[-1] or math.isnan(t):
            raise OutOfDomain(f"t = {t} outside [{history_start}, {self.nodes[-1]}]")
        if t <= 0.0:
            return HISTORY
        return bisect.bisect_left(self.nodes, t) - 1

    def segment_nodes(self, k: int) -> tuple[int, int]:
        """Node-index range ``[a, b]`` of the segment containing interval ``k``."""
        mu = int(self.seg[k])
        return self.breakpoint_index[mu - 1], self.breakpoint_index[mu]


def _finish_mesh(nodes, disc, policy):
    nodes = np.asarray(nodes, dtype=float)
    bps = disc.breakpoints
    bp_index = []
    for b in bps:
        k = int(np.argmin(np.abs(nodes - b)))
        if nodes[k] != b:
            raise EmptySegment(f"breakpoint {b} is not a mesh node")
        bp_index.append(k)
    if len(set(bp_index)) != len(bp_index):
        raise EmptySegment("two breakpoints collapsed onto one node")
    seg = np.empty(len(nodes) - 1, dtype=int)
    for mu in range(1, len(bp_index)):
        seg[bp_index[mu - 1] : bp_index[mu]] = mu
    nodes.setflags(write=False)
    seg.setflags(write=False)
    return Mesh(nodes, disc, seg, tuple(bp_index), policy)


def build_mesh(
    disc: DiscontinuitySet,
    base_h: float,
    T: float | None = None,
    policy: str = "constrained_uniform",
) -> Mesh:
    """Mesh with every primary discontinuity as a node.

    ``constrained_uniform``: the grid ``{k base_h}`` merged with ``{xi_mu}``
    and ``T``; a grid node closer than ``1e-8 base_h`` to a breakpoint is
    replaced by the breakpoint.
    ``per_segment_uniform``: each segment split into
    ``ceil(length / base_h)`` equal steps.
    """
    T = disc.T if T is None else T
    if base_h <= 0:
        raise ValueError("base_h must be positive")
    if base_h > disc.tau0 * (1 + 1e-12):
        raise StepExceedsTauZero(f"base_h = {base_h} exceeds tau0 = {disc.tau0}")
    xi = [x for x in disc.xi if x < T]
    disc = DiscontinuitySet(tuple(xi), T, disc.tau0)
    bps = disc.breakpoints
    merge_tol = base_h * 1e-8
    if policy in ("constrained_uniform", "constrained"):
        grid = base_h * np.arange(0, int(math.floor(T / base_h)) + 1)
        keep = [g for g in grid if min(abs(g - b) for b in bps) > merge_tol]
        nodes = np.unique(np.concatenate([keep, bps]))
        policy = "constrained_uniform"
    elif policy in ("per_segment_uniform", "per-segment"):
        parts = [np.array([0.0])]
        for a, b in disc.segments():
            m = max(int(math.ceil((b - a) / base_h - 1e-9)), 1)
            pts = a + (b - a) * np.arange(1, m + 1) / m
            pts[-1] = b
            parts.append(pts)
        nodes = np.concatenate(parts)
        policy = "per_segment_uniform"
    else:
        raise ValueError(f"unknown mesh policy {policy!r}")
    if np.any(np.diff(nodes) <= 0):
        raise EmptySegment("mesh construction produced a nonpositive step")
    return _finish_mesh(nodes, disc, policy)


def mesh_from_nodes(nodes, disc: DiscontinuitySet) -> Mesh:
    """Wrap an explicit node sequence; it must contain every breakpoint."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
        raise ValueError("mesh nodes must start at 0 and increase strictly")
    disc = DiscontinuitySet(tuple(x for x in disc.xi if x < nodes[-1]), float(nodes[-1]), disc.tau0)
    return _finish_mesh(nodes, disc, "explicit")
