r"""Scalar phi-functions and collocation schemes.

The phi-functions are the entire functions

.. math::

    \varphi_0(z) = e^z, \qquad
    \varphi_j(z) = \int_0^1 e^{(1-\xi)z}\frac{\xi^{j-1}}{(j-1)!}\,d\xi
    = \sum_{k\ge 0} \frac{z^k}{(k+j)!}.

A collocation scheme with nodes ``c`` defines the weight functions

.. math::

    b_i(\theta; z) = \int_0^\theta e^{(\theta-\xi)z}\,\ell_i(\xi)\,d\xi
    = \sum_{j=1}^{s} p_{ij}\,(j-1)!\,\theta^j\,\varphi_j(\theta z),

where :math:`\ell_i(\xi) = \sum_j p_{ij}\xi^{j-1}` is the Lagrange basis
polynomial of node :math:`c_i`.  Step weights are ``b_i(1; z)`` and the
internal stage coefficients are ``a_ij(z) = b_j(c_i; z)``.

Evaluation of phi
-----------------
Two regimes are combined, chosen per element of ``z`` and per index ``j``:

* ``|z| < max(TAYLOR_RADIUS, j)``: the power series.  The term ratio is
  ``z/(k+j+1)``, below one in modulus, so the series converges fast and the
  alternating-sign cancellation for negative ``z`` costs at most about one
  digit.
* otherwise: the upward recurrence ``phi_{k+1} = (phi_k - 1/k!)/z`` started
  from ``exp(z)``.  A perturbation of ``phi_k`` is multiplied by
  ``(k+1)/|z| <= 1`` relative to ``phi_{k+1}``, so the recurrence is stable
  in this regime.  It is catastrophically cancellative for small ``|z|``,
  which is why the series takes over there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as P

from .errors import ConfluentNodes, NodeOutOfRange, StageIndexError

TAYLOR_RADIUS = 0.5
_SERIES_RTOL = 1e-18
_SERIES_MAX_TERMS = 400
QUADRATURE_TOL = 1e-10


def _phi_series(j: int, z: np.ndarray) -> np.ndarray:
    term = np.full(z.shape, 1.0 / math.factorial(j), dtype=z.dtype)
    total = term.copy()
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * z / (k + j)
        total = total + term
        if np.all(np.abs(term) <= _SERIES_RTOL * np.abs(total)):
            break
    return total


def _phi_upward(j: int, z: np.ndarray) -> np.ndarray:
    val = np.exp(z)
    for k in range(j):
        val = (val - 1.0 / math.factorial(k)) / z
    return val


def phi(j: int, z):
    """Evaluate ``phi_j(z)`` for a scalar or array argument.

    Real input gives real output; complex input gives complex output.
    Scalars in, scalar out.
    """
    if j < 0:
        raise ValueError(f"phi index must be >= 0, got {j}")
    arr = np.asarray(z)
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    if j == 0:
        out = np.exp(arr)
    else:
        out = np.empty(arr.shape, dtype=arr.dtype)
        small = np.abs(arr) < max(TAYLOR_RADIUS, j)
        if np.any(small):
            out[small] = _phi_series(j, arr[small])
        if not np.all(small):
            big = ~small
            with np.errstate(over="ignore", invalid="ignore"):
                out[big] = _phi_upward(j, arr[big])
    if np.ndim(z) == 0:
        return out[()]
    return out


@dataclass(frozen=True)
class PhiSeries:
    """``values[j-1] == phi_j(z)`` for ``j = 1..max_index``."""

    max_index: int
    z: complex
    values: tuple


def phi_series(max_index: int, z) -> PhiSeries:
    vals = tuple(phi(j, z) for j in range(1, max_index + 1))
    return PhiSeries(max_index, z, vals)


@dataclass(frozen=True)
class CollocationScheme:
    """Nonconfluent collocation nodes and their Lagrange basis.

    Attributes
    ----------
    c : ndarray, shape (s,)
        Nodes in ``[0, 1]``.
    p : ndarray, shape (s, s)
        ``ell_i(xi) = sum_j p[i, j] * xi**j`` (zero-based powers).
    quadrature_order : int
        Order of the underlying quadrature rule with weights ``b_i(0)``.
    name : str
        Label used in reports.
    """

    c: np.ndarray
    p: np.ndarray
    quadrature_order: int
    name: str = "custom"
    b0: np.ndarray = field(repr=False, default=None)

    @property
    def s(self) -> int:
        return len(self.c)

    def lagrange(self, xi) -> np.ndarray:
        """Values ``ell_i(xi)`` stacked along the first axis."""
        xi = np.asarray(xi, dtype=float)
        return np.stack([P.polyval(xi, self.p[i]) for i in range(self.s)])

    def __hash__(self):
        return hash((self.name, tuple(self.c)))

    def __eq__(self, other):
        return (
            isinstance(other, CollocationScheme)
            and self.name == other.name
            and np.array_equal(self.c, other.c)
        )


def _monomial_coefficients(c: np.ndarray) -> np.ndarray:
    s = len(c)
    p = np.empty((s, s))
    for i in range(s):
        others = np.delete(c, i)
        num = P.polyfromroots(others) if s > 1 else np.array([1.0])
        denom = np.prod(c[i] - others) if s > 1 else 1.0
        p[i] = num / denom
    return p


def _quadrature_order(c: np.ndarray, b0: np.ndarray) -> int:
    order = 0
    for k in range(1, 2 * len(c) + 2):
        lhs = np.sum(b0 * c ** (k - 1)) / math.factorial(k - 1)
        if abs(lhs - 1.0 / math.factorial(k)) < QUADRATURE_TOL:
            order = k
        else:
            break
    return order


def make_scheme(nodes: Sequence[float], name: str = "custom") -> CollocationScheme:
    """Build a scheme from explicit collocation nodes."""
    c = np.asarray(nodes, dtype=float).ravel()
    if c.size == 0:
        raise ValueError("at least one collocation node is required")
    if np.any((c < 0.0) | (c > 1.0)) or not np.all(np.isfinite(c)):
        raise NodeOutOfRange(f"collocation nodes must lie in [0, 1], got {c.tolist()}")
    if len(np.unique(c)) != len(c):
        raise ConfluentNodes(f"collocation nodes must be distinct, got {c.tolist()}")
    p = _monomial_coefficients(c)
    # b_i(0) = int_0^1 ell_i
    b0 = p @ (1.0 / np.arange(1, len(c) + 1))
    return CollocationScheme(c, p, _quadrature_order(c, b0), name, b0)


def gauss(s: int) -> CollocationScheme:
    if s not in (1, 2, 3):
        raise ValueError("named Gauss schemes exist for s = 1, 2, 3")
    x, _ = legendre.leggauss(s)
    return make_scheme((x + 1.0) / 2.0, name=f"gauss{s}")


_RADAU_NODES = {
    1: [1.0],
    2: [1.0 / 3.0, 1.0],
    3: [(4.0 - math.sqrt(6.0)) / 10.0, (4.0 + math.sqrt(6.0)) / 10.0, 1.0],
}


def radau_iia(s: int) -> CollocationScheme:
    if s not in _RADAU_NODES:
        raise ValueError("named Radau IIA schemes exist for s = 1, 2, 3")
    return make_scheme(_RADAU_NODES[s], name=f"radau{s}")


def scheme_from_name(kind: str, s: int | None = None) -> CollocationScheme:
    """Parse ``gauss``, ``radau`` or ``custom:<c1,c2,...>``."""
    kind = kind.strip().lower()
    if kind.startswith("custom:"):
        nodes = [_parse_node(v) for v in kind.split(":", 1)[1].split(",") if v.strip()]
        return make_scheme(nodes, name=f"custom[{','.join(f'{v:g}' for v in nodes)}]")
    if s is None:
        raise ValueError(f"scheme {kind!r} requires a stage count")
    if kind == "gauss":
        return gauss(s)
    if kind in ("radau", "radau_iia", "radauiia"):
        return radau_iia(s)
    raise ValueError(f"unknown scheme {kind!r}")


def _parse_node(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def weight_matrix(scheme: CollocationScheme, theta: float, z) -> np.ndarray:
    """All weights ``b_i(theta; z)``; shape ``(s,) + shape(z)``.

    The phi-functions are evaluated once and shared between stages.
    """
    z = np.asarray(z)
    tz = theta * z
    s = scheme.s
    # basis[j] = j! * theta^(j+1) * phi_{j+1}(theta z)
    basis = np.stack(
        [math.factorial(j) * theta ** (j + 1) * phi(j + 1, tz) for j in range(s)]
    )
    return np.tensordot(scheme.p, basis, axes=(1, 0))


def weight_b(scheme: CollocationScheme, i: int, theta: float, z):
    """Weight ``b_i(theta; z)`` of stage ``i`` (zero-based)."""
    if not 0 <= i < scheme.s:
        raise StageIndexError(f"stage index {i} out of range for s={scheme.s}")
    out = weight_matrix(scheme, theta, z)[i]
    return out[()] if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class OrderConditionReport:
    theta: float
    z: complex
    residuals: tuple
    tol: float

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals)


def check_order_conditions(
    scheme: CollocationScheme, theta: float, z, tol: float = 1e-11
) -> OrderConditionReport:
    """Relative residuals of ``sum_i b_i(theta;z) c_i^(j-1)/(j-1)! = theta^j phi_j(theta z)``.

    Each residual is scaled by the larger of the right-hand side and the
    sum of absolute values of the left-hand side terms, for ``j = 1..s``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = weight_matrix(scheme, theta, z)
    res = []
    for j in range(1, scheme.s + 1):
        terms = b * scheme.c ** (j - 1) / math.factorial(j - 1)
        rhs = theta**j * phi(j, theta * z)
        scale = max(abs(rhs), float(np.sum(np.abs(terms))), np.finfo(float).tiny)
        res.append(float(abs(np.sum(terms) - rhs) / scale))
    return OrderConditionReport(theta, z, tuple(res), tol)
