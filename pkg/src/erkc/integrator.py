"""Time stepping for ERKC-I, ERKC-C and modified ERKC-I.

One step on ``I_{n+1} = [t_n, t_n + h]`` solves

    U_{n,i} = exp(-c_i h A) U_n + h sum_j a_ij(-h A) G_{n,j}
    U_{n+1} = exp(-h A) U_n + h sum_i b_i(-h A) G_{n,i}
    G_{n,j} = g(t_{n,j}, U_{n,j}, V(t_{n,j} - tau(t_{n,j})))

where ``V`` is the method's continuous extension: the per-interval
polynomial (``erkc_i``), the mesh-node stencil polynomial (``merkc_i``) or
the exponential dense output (``erkc_c``).  Every delayed argument lies in
the completed range (checked up front), so the delayed values are fixed
during the stage iteration and are computed once per step.

All linear algebra happens in the operator's eigenbasis; the
nonlinearity is evaluated pointwise in physical space.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .delay import Mesh
from .errors import ERKCError, FixedPointDivergence, StepExceedsTauZero
from .history import ExponentialDenseOutput, InterpolantStore, ModifiedInterpolantStore
from .phi import CollocationScheme, weight_matrix
from .problems import ProblemSpec

log = logging.getLogger(__name__)

METHODS = ("erkc_i", "erkc_c", "merkc_i")


def normalize_method(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    aliases = {"erkci": "erkc_i", "erkcc": "erkc_c", "merkci": "merkc_i", "m_erkc_i": "merkc_i"}
    key = aliases.get(key, key)
    if key not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {METHODS}")
    return key


@dataclass(frozen=True)
class MethodConfig:
    method: str
    scheme: CollocationScheme
    fp_tol: float = 1e-12
    fp_max_iter: int = 100
    # "all" keeps every interval; "needed" drops what no future delayed argument can reach
    retain: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "method", normalize_method(self.method))
        if self.fp_tol <= 0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max_iter < 1:
            raise ValueError("fp_max_iter must be >= 1")
        if self.retain not in ("all", "needed"):
            raise ValueError("retain must be 'all' or 'needed'")
        if self.method == "merkc_i" and self.scheme.quadrature_order < self.scheme.s + 2:
            warnings.warn(
                f"modified ERKC-I with quadrature order {self.scheme.quadrature_order} "
                f"< s + 2 = {self.scheme.s + 2}; no gain over ERKC-I is expected",
                stacklevel=3,
            )


@dataclass
class StepRecord:
    n: int
    t0: float
    t1: float
    state: np.ndarray
    stages: np.ndarray
    g_values: np.ndarray
    iterations: int


@dataclass
class RunReport:
    method: str
    scheme: str
    n_steps: int
    iterations: list
    wall_time: float
    ratio_stats: dict

    @property
    def mean_iterations(self) -> float:
        return float(np.mean(self.iterations)) if self.iterations else 0.0


@dataclass
class Trajectory:
    times: np.ndarray
    values: Optional[np.ndarray]
    final: np.ndarray
    store: object
    report: RunReport
    records: list = field(default_factory=list)


class _StepCoefficients:
    """Spectral multipliers for one step size ``h``."""

    def __init__(self, eigenvalues, scheme: CollocationScheme, h: float):
        z = -h * eigenvalues
        self.h = h
        self.E = np.exp(z)
        self.Ec = np.exp(np.outer(scheme.c, z))
        # A[i, j] = h a_ij(-hA) = h b_j(c_i; -hA)
        self.A = h * np.stack([weight_matrix(scheme, ci, z) for ci in scheme.c])
        self.B = h * weight_matrix(scheme, 1.0, z)


def verify_no_future_reference(
    problem: ProblemSpec, mesh: Mesh, scheme: CollocationScheme | None = None
) -> bool:
    """True iff every stage's delayed argument lies at or before the left node.

    Without a scheme the worst case ``c = 1`` is checked, which suffices
    because ``t - tau(t)`` increases.
    """
    c = np.array([1.0]) if scheme is None else scheme.c
    t = mesh.nodes
    for k in range(len(t) - 1):
        h = t[k + 1] - t[k]
        for ci in c:
            arg = problem.delay.deviated(t[k] + ci * h)
            if arg > t[k] + 1e-12 * max(1.0, abs(t[k])):
                return False
    return True


class Integrator:
    """Sequential driver for one (problem, mesh, method) combination."""

    def __init__(self, problem: ProblemSpec, mesh: Mesh, config: MethodConfig):
        self.problem = problem
        self.mesh = mesh
        self.config = config
        self.scheme = config.scheme
        self.op = problem.operator
        if abs(mesh.T - problem.T) > 1e-12 * max(1.0, problem.T):
            log.info("mesh ends at %s, problem horizon is %s", mesh.T, problem.T)
        if not verify_no_future_reference(problem, mesh, self.scheme):
            raise StepExceedsTauZero(
                "a stage's delayed argument reaches into its own step; "
                f"reduce the step size (max step {mesh.max_step:.4g}, tau0 {problem.delay.tau0:.4g})"
            )
        hs = problem.delay.history_start
        if config.method == "erkc_i":
            self.store = InterpolantStore(problem.history, hs)
        elif config.method == "merkc_i":
            self.store = ModifiedInterpolantStore(problem.history, mesh, self.scheme.s, hs)
        else:
            self.store = ExponentialDenseOutput(problem.history, self.op, self.scheme, hs)
        self._cache: dict = {}

    def coefficients(self, h: float) -> _StepCoefficients:
        key = round(h, 14)
        coef = self._cache.get(key)
        if coef is None:
            if len(self._cache) > 64:
                self._cache.clear()
            coef = self._cache[key] = _StepCoefficients(self.op.eigenvalues, self.scheme, h)
        return coef

    def step(self, n: int, u: np.ndarray) -> tuple[np.ndarray, StepRecord]:
        """Advance from ``t_n`` to ``t_{n+1}`` and append the interval to the store."""
        t0 = float(self.mesh.nodes[n])
        t1 = float(self.mesh.nodes[n + 1])
        h = t1 - t0
        coef = self.coefficients(h)
        op, g, c = self.op, self.problem.g, self.scheme.c
        s = self.scheme.s
        stage_t = t0 + c * h
        delayed = [self.store.evaluate(float(self.problem.delay.deviated(ti))) for ti in stage_t]

        u_hat = op.forward(u)
        base_hat = coef.Ec * u_hat
        stages = op.inverse(base_hat)
        tol, max_iter = self.config.fp_tol, self.config.fp_max_iter
        for it in range(1, max_iter + 1):
            gv = np.stack([g(stage_t[i], stages[i], delayed[i]) for i in range(s)])
            g_hat = op.forward(gv)
            new = op.inverse(base_hat + np.einsum("ijm,jm->im", coef.A, g_hat))
            diff = np.max(np.abs(new - stages))
            stages = new
            if diff <= tol * np.max(np.abs(new)):
                break
        else:
            raise FixedPointDivergence(
                f"stage iteration did not reach {tol:g} in {max_iter} sweeps (last change {diff:.3e})"
            )
        gv = np.stack([g(stage_t[i], stages[i], delayed[i]) for i in range(s)])
        g_hat = op.forward(gv)
        stages = op.inverse(base_hat + np.einsum("ijm,jm->im", coef.A, g_hat))
        u_next = op.inverse(coef.E * u_hat + np.einsum("im,im->m", coef.B, g_hat))

        if self.config.method == "erkc_i":
            self.store.append(t0, t1, c, u, stages, u_next)
        elif self.config.method == "merkc_i":
            self.store.append(t0, t1, u, u_next)
        else:
            self.store.append(t0, t1, u_hat, g_hat)
        if self.config.retain == "needed":
            # later delayed arguments are all >= deviated(t1) since t - tau(t) increases
            self.store.prune(float(self.problem.delay.deviated(t1)))
        return u_next, StepRecord(n, t0, t1, u, stages, gv, it)

    def run(self, keep_nodes: bool = True, keep_records: bool = False) -> Trajectory:
        start = time.perf_counter()
        u = self.problem.initial_value
        values = [u] if keep_nodes else None
        records, iterations = [], []
        for n in range(self.mesh.n_intervals):
            try:
                u, rec = self.step(n, u)
            except ERKCError as exc:
                raise type(exc)(f"interval {n} [{self.mesh.nodes[n]:.6g}, "
                                f"{self.mesh.nodes[n + 1]:.6g}]: {exc}") from exc
            iterations.append(rec.iterations)
            if keep_nodes:
                values.append(u)
            if keep_records:
                records.append(rec)
        report = RunReport(
            self.config.method,
            self.scheme.name,
            self.mesh.n_intervals,
            iterations,
            time.perf_counter() - start,
            self.mesh.ratio_stats,
        )
        return Trajectory(
            self.mesh.nodes,
            np.stack(values) if keep_nodes else None,
            u,
            self.store,
            report,
            records,
        )


def integrate(
    problem: ProblemSpec,
    mesh: Mesh,
    config: MethodConfig,
    keep_nodes: bool = True,
    keep_records: bool = False,
) -> Trajectory:
    return Integrator(problem, mesh, config).run(keep_nodes, keep_records)
