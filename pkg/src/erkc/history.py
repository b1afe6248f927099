"""Continuous extensions of the numerical solution, used for delayed arguments.

Three stores share the same life cycle.  The integrator appends one
completed interval at a time, and readers evaluate at any time up to the
last completed node.  Times ``t <= 0`` are answered by the initial
function.

* :class:`InterpolantStore` -- per-interval polynomial through the node and
  stage values (ERKC-I);
* :class:`ModifiedInterpolantStore` -- polynomial through ``s + 2``
  consecutive mesh-node values that never straddle a breakpoint
  (modified ERKC-I);
* :class:`ExponentialDenseOutput` -- the method's own exponential
  continuous extension (ERKC-C).
"""

from __future__ import annotations

import bisect
import csv
import math

import numpy as np

from .delay import HISTORY, Mesh
from .errors import FutureEvaluation, OutOfDomain, StencilUnavailable
from .phi import CollocationScheme, weight_matrix
from .spectral import DiagonalizableOperator

_TIME_SLACK = 1e-13


def barycentric_weights(x: np.ndarray) -> np.ndarray:
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, 1.0)
    return 1.0 / np.prod(d, axis=1)


def barycentric_eval(x: np.ndarray, w: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    """Evaluate the interpolant of ``(x, y)`` at ``t`` (second barycentric form)."""
    diff = t - x
    hit = np.flatnonzero(diff == 0.0)
    if hit.size:
        return np.array(y[hit[0]], copy=True)
    q = w / diff
    return (q @ y) / q.sum()


class _Store:
    def __init__(self, history, history_start: float = -math.inf):
        self._history = history
        self.history_start = history_start
        self._nodes = [0.0]
        self._records = {}

    @property
    def completed(self) -> float:
        """Right end of the completed range."""
        return self._nodes[-1]

    @property
    def n_completed(self) -> int:
        return len(self._nodes) - 1

    def _locate(self, t: float) -> int:
        if t <= 0.0:
            if t < self.history_start - _TIME_SLACK:
                raise OutOfDomain(f"t = {t} precedes the history interval")
            return HISTORY
        end = self._nodes[-1]
        if t > end + _TIME_SLACK * max(1.0, abs(end)):
            raise FutureEvaluation(f"t = {t} beyond completed range {end}")
        k = bisect.bisect_left(self._nodes, t) - 1
        return min(k, len(self._nodes) - 2)

    def _record(self, k):
        try:
            return self._records[k]
        except KeyError:
            raise OutOfDomain(f"interval {k} was pruned from the history store") from None

    def _advance(self, t0, t1):
        if abs(t0 - self._nodes[-1]) > _TIME_SLACK * max(1.0, abs(t0)):
            raise ValueError(f"append at {t0} does not continue the completed range {self._nodes[-1]}")
        if t1 <= t0:
            raise ValueError("interval must have positive length")
        self._nodes.append(t1)
        return len(self._nodes) - 2

    def prune(self, t_min: float) -> None:
        """Drop records of intervals ending before ``t_min``."""
        k_end = bisect.bisect_left(self._nodes, t_min) - 1
        for k in [k for k in self._records if k < k_end]:
            del self._records[k]

    def evaluate(self, t: float) -> np.ndarray:
        k = self._locate(t)
        if k == HISTORY:
            return np.asarray(self._history(t), dtype=float)
        return self._evaluate_interval(k, t)

    __call__ = evaluate

    def _evaluate_interval(self, k, t):
        raise NotImplementedError

    def dump_csv(self, times, path) -> None:
        """Write samples ``t, dof_0, ..., dof_{m-1}`` for plotting."""
        rows = [(float(t), self.evaluate(float(t))) for t in times]
        m = len(rows[0][1]) if rows else 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"dof_{i}" for i in range(m)])
            for t, v in rows:
                writer.writerow([repr(t)] + [repr(float(x)) for x in v])


class InterpolantStore(_Store):
    """Piecewise polynomial through ``{t_k, t_{k+1}} u {t_{k,i}}`` on each interval.

    Coinciding abscissae (``c_1 = 0`` or ``c_s = 1``) are stored once, so the
    degree is ``s - 1``, ``s`` or ``s + 1``.
    """

    def append(self, t0, t1, c, u0, stages, u1) -> None:
        k = self._advance(t0, t1)
        theta = [0.0]
        vals = [np.asarray(u0, dtype=float)]
        for ci, ui in zip(c, stages):
            if 0.0 < ci < 1.0:
                theta.append(float(ci))
                vals.append(np.asarray(ui, dtype=float))
        theta.append(1.0)
        vals.append(np.asarray(u1, dtype=float))
        x = np.array(theta)
        self._records[k] = (t0, t1 - t0, x, barycentric_weights(x), np.stack(vals))

    def degree(self, k: int) -> int:
        return len(self._record(k)[2]) - 1

    def _evaluate_interval(self, k, t):
        t0, h, x, w, y = self._record(k)
        return barycentric_eval(x, w, y, (t - t0) / h)


def modified_stencil(k: int, a: int, b: int, s: int) -> tuple[int, int]:
    """Node-index range ``[lo, hi]`` of the ``s + 2`` point stencil for interval ``k``.

    Starts from ``ell = ceil((s+2)/2)`` nodes at or left of ``t_k`` and
    ``r = s + 2 - ell`` nodes right of it, then shifts the window into the
    admissible node range ``[a, b]``.
    """
    width = s + 2
    if b - a + 1 < width:
        raise StencilUnavailable(
            f"segment nodes {a}..{b} hold fewer than {width} points required by s={s}"
        )
    ell = math.ceil(width / 2)
    lo = k - ell + 1
    hi = lo + width - 1
    if lo < a:
        lo, hi = a, a + width - 1
    if hi > b:
        lo, hi = b - width + 1, b
    return lo, hi


class ModifiedInterpolantStore(_Store):
    """Mesh-node interpolant on ``s + 2`` node stencils confined to one segment."""

    def __init__(self, history, mesh: Mesh, s: int, history_start: float = -math.inf):
        super().__init__(history, history_start)
        self.mesh = mesh
        self.s = s
        self._values = {}

    def append(self, t0, t1, u0, u1) -> None:
        k = self._advance(t0, t1)
        if abs(t1 - self.mesh.nodes[k + 1]) > _TIME_SLACK * max(1.0, abs(t1)):
            raise ValueError("appended interval does not match the mesh")
        self._values.setdefault(k, np.asarray(u0, dtype=float))
        self._values[k + 1] = np.asarray(u1, dtype=float)
        self._records[k] = True

    def stencil(self, k: int) -> tuple[int, int]:
        a, b = self.mesh.segment_nodes(k)
        b = min(b, self.n_completed)
        return modified_stencil(k, a, b, self.s)

    def prune(self, t_min: float) -> None:
        k_end = bisect.bisect_left(self._nodes, t_min) - 1
        keep_from = k_end - (self.s + 2)
        for q in [q for q in self._values if q < keep_from]:
            del self._values[q]
        super().prune(t_min)

    def _evaluate_interval(self, k, t):
        self._record(k)
        lo, hi = self.stencil(k)
        nodes = self.mesh.nodes
        h = nodes[k + 1] - nodes[k]
        x = (nodes[lo : hi + 1] - nodes[k]) / h
        try:
            y = np.stack([self._values[q] for q in range(lo, hi + 1)])
        except KeyError:
            raise OutOfDomain("stencil node was pruned from the history store") from None
        return barycentric_eval(x, barycentric_weights(x), y, (t - nodes[k]) / h)


class ExponentialDenseOutput(_Store):
    """``W(t_k + theta h) = exp(-theta h A) W_k + h sum_i b_i(theta; -h A) G_{k,i}``.

    Records hold spectral coefficients of ``W_k`` and of the stage
    nonlinearities, so one evaluation costs one inverse transform plus the
    phi-function multipliers.
    """

    def __init__(
        self,
        history,
        operator: DiagonalizableOperator,
        scheme: CollocationScheme,
        history_start: float = -math.inf,
    ):
        super().__init__(history, history_start)
        self.operator = operator
        self.scheme = scheme

    def append(self, t0, t1, w0_hat, g_hat) -> None:
        k = self._advance(t0, t1)
        self._records[k] = (t0, t1 - t0, np.asarray(w0_hat), np.asarray(g_hat))

    def _evaluate_interval(self, k, t):
        t0, h, w0_hat, g_hat = self._record(k)
        theta = (t - t0) / h
        z = -h * self.operator.eigenvalues
        b = weight_matrix(self.scheme, theta, z)
        out_hat = np.exp(theta * z) * w0_hat + h * np.einsum("im,im->m", b, g_hat)
        return self.operator.inverse(out_hat)
