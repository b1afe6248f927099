"""Delay-parabolic problems ``u' + A u = g(t, u, u(t - tau(t)))`` and the four benchmarks.

Examples 1 and 4 carry a manufactured source term built from the exact
solution ``u(t, x) = Psi(t) w(x)``.  For the finite-difference example the
source can be manufactured against the continuous Laplacian
(``source="continuous"``) or against the discrete one
(``source="semidiscrete"``, the default).  The latter makes the sampled
exact solution solve the semidiscrete system exactly, so measured errors
are purely temporal.  For the pseudospectral example both coincide because
``sin(2 pi x)`` is an exact eigenfunction of the discrete operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .delay import DelaySpec
from .spectral import (
    DiagonalizableOperator,
    dirichlet_laplacian_1d,
    dirichlet_laplacian_2d,
    periodic_laplacian_1d,
)

E2 = math.exp(2.0)


@dataclass(frozen=True)
class ProblemSpec:
    operator: DiagonalizableOperator
    delay: DelaySpec
    history: Callable[[float], np.ndarray]
    g: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    T: float
    exact: Optional[Callable[[float], np.ndarray]] = None
    label: str = "custom"

    @property
    def initial_value(self) -> np.ndarray:
        return np.asarray(self.history(0.0), dtype=float)


def psi(t: float) -> float:
    """Three-piece temporal profile shared by examples 1 and 4."""
    if t <= 0.0:
        return math.exp(-t)
    if t <= 1.0:
        return 1.0 + t * math.exp(2.0 * t)
    return (1.0 + E2) + 3.0 * E2 * (t - 1.0) + (t - 1.0) ** 2 * math.exp(3.0 * t)


def dpsi(t: float) -> float:
    """Derivative of :func:`psi`; right limit at ``t = 0`` and ``t = 1``."""
    if t < 0.0:
        return -math.exp(-t)
    if t < 1.0:
        return math.exp(2.0 * t) * (1.0 + 2.0 * t)
    s = t - 1.0
    return 3.0 * E2 + math.exp(3.0 * t) * (2.0 * s + 3.0 * s * s)


def _half_delay() -> DelaySpec:
    # t - tau(t) = t/2 - 1/2
    return DelaySpec(lambda t: 0.5 * (t + 1.0), 0.5, -0.5)


def example_1(n: int = 256, source: str = "semidiscrete") -> ProblemSpec:
    """1D Dirichlet problem with exact solution ``Psi(t) sin(x) sin(1-x)``, T = 3."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if source not in ("semidiscrete", "continuous"):
        raise ValueError(f"unknown source mode {source!r}")
    op = dirichlet_laplacian_1d(n)
    (x,) = op.coords
    hx = 1.0 / (n + 1)
    w = np.sin(x) * np.sin(1.0 - x)
    if source == "continuous":
        # -d^2/dx^2 [ (cos(2x-1) - cos 1)/2 ] = 2 cos(2x-1)
        aw = 2.0 * np.cos(2.0 * x - 1.0)
    else:
        padded = np.concatenate([[0.0], w, [0.0]])
        aw = (2.0 * padded[1:-1] - padded[:-2] - padded[2:]) / hx**2
    delay = _half_delay()

    def source_term(t):
        u = psi(t) * w
        ud = psi(0.5 * t - 0.5) * w
        return dpsi(t) * w + psi(t) * aw - 1.0 / (1.0 + u * u) - 1.0 / (1.0 + ud * ud)

    def g(t, v, vd):
        return 1.0 / (1.0 + v * v) + 1.0 / (1.0 + vd * vd) + source_term(t)

    def exact(t):
        return psi(t) * w

    return ProblemSpec(op, delay, exact, g, 3.0, exact, f"ex1[{source}]")


def example_2(n: int = 64) -> ProblemSpec:
    """2D Dirichlet problem without known solution, T = 3."""
    if n < 2:
        raise ValueError("n must be >= 2")
    op = dirichlet_laplacian_2d(n)
    X, Y = op.coords
    shape = X * (1.0 - X) * Y * (1.0 - Y)

    def history(t):
        return math.exp(-t) * shape

    def g(t, v, vd):
        return 1.0 / (1.0 + v * v) + 1.0 / (1.0 + vd * vd)

    return ProblemSpec(op, _half_delay(), history, g, 3.0, None, "ex2")


def example_3(n: int = 200) -> ProblemSpec:
    """1D Dirichlet logistic-type problem without known solution, T = 3."""
    if n < 2:
        raise ValueError("n must be >= 2")
    op = dirichlet_laplacian_1d(n)
    (x,) = op.coords
    shape = x * (1.0 - x)

    def history(t):
        return math.exp(t) * shape

    def g(t, v, vd):
        return v * (1.0 - v) - vd * (1.0 - vd)

    return ProblemSpec(op, _half_delay(), history, g, 3.0, None, "ex3")


def example_4(n: int = 128) -> ProblemSpec:
    """1D periodic problem with exact solution ``Psi(t) sin(2 pi x)``, T = 1.4.

    The delayed argument is ``t^2 - 1``.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    op = periodic_laplacian_1d(n)
    (x,) = op.coords
    w = np.sin(2.0 * np.pi * x)
    lam = (2.0 * np.pi) ** 2
    T = 1.4
    delay = DelaySpec(lambda t: t - t * t + 1.0, T - T * T + 1.0, -1.0)

    def source_term(t):
        u = psi(t) * w
        ud = psi(t * t - 1.0) * w
        return (dpsi(t) + lam * psi(t)) * w - 1.0 / (1.0 + u * u) - 2000.0 / (1.0 + ud * ud)

    def g(t, v, vd):
        return 1.0 / (1.0 + v * v) + 2000.0 / (1.0 + vd * vd) + source_term(t)

    def exact(t):
        return psi(t) * w

    return ProblemSpec(op, delay, exact, g, T, exact, "ex4")


PROBLEMS = {"ex1": example_1, "ex2": example_2, "ex3": example_3, "ex4": example_4}

DEFAULT_GRID = {"ex1": 256, "ex2": 64, "ex3": 200, "ex4": 128}


def get_problem(label: str, n: int | None = None, **kwargs) -> ProblemSpec:
    if label not in PROBLEMS:
        raise ValueError(f"unknown problem {label!r}; choose from {sorted(PROBLEMS)}")
    return PROBLEMS[label](DEFAULT_GRID[label] if n is None else n, **kwargs)
