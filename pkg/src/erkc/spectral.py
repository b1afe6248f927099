"""Diagonalizable model operators and their matrix-function actions.

Every operator is diagonal in a fast-transform basis:

* ``dirichlet_laplacian_1d``/``_2d`` -- second-order central differences on
  the interior points of ``[0, 1]`` (or the unit square), diagonalized by the
  orthonormal DST-I;
* ``periodic_laplacian_1d`` -- Fourier pseudospectral ``-d^2/dx^2`` on
  ``n`` equispaced points of ``[0, 1)``, diagonalized by the real FFT;
* ``explicit_diagonal`` -- a given list of eigenvalues, identity transform.

State vectors are flat real arrays of length ``dof``.  Spectral
coefficients ("hats") have length ``len(eigenvalues)``; for the periodic
case they are complex.  Every ``apply_*`` method accepts stacked inputs of
shape ``(..., dof)``.
"""

from __future__ import annotations

import numpy as np
from scipy import fft

from .errors import DimensionError, ZeroEigenvalueNegativePower
from .phi import CollocationScheme, phi, weight_b, weight_matrix

KINDS = (
    "dirichlet_laplacian_1d",
    "dirichlet_laplacian_2d",
    "periodic_laplacian_1d",
    "explicit_diagonal",
)


class DiagonalizableOperator:
    """Nonnegative operator ``A`` stored through its eigenvalues.

    Use the module-level constructors rather than instantiating directly.
    Instances are immutable and hold no scratch buffers, so they can be
    shared between threads.
    """

    def __init__(self, kind, n, eigenvalues, coords, cell_volume):
        if kind not in KINDS:
            raise ValueError(f"unknown operator kind {kind!r}")
        self.kind = kind
        self.n = n
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.eigenvalues.setflags(write=False)
        self.coords = coords
        self.cell_volume = cell_volume
        if kind == "dirichlet_laplacian_2d":
            self.dof = n * n
        elif kind == "explicit_diagonal":
            self.dof = len(self.eigenvalues)
        else:
            self.dof = n

    def __repr__(self):
        return f"DiagonalizableOperator({self.kind}, dof={self.dof})"

    def _check(self, v):
        v = np.asarray(v)
        if v.shape[-1:] != (self.dof,):
            raise DimensionError(
                f"state of shape {v.shape} does not match operator with {self.dof} dof"
            )
        return v

    def forward(self, v: np.ndarray) -> np.ndarray:
        v = self._check(v)
        if self.kind == "dirichlet_laplacian_1d":
            return fft.dst(v, type=1, norm="ortho", axis=-1)
        if self.kind == "dirichlet_laplacian_2d":
            grid = v.reshape(v.shape[:-1] + (self.n, self.n))
            return fft.dstn(grid, type=1, norm="ortho", axes=(-2, -1)).reshape(v.shape)
        if self.kind == "periodic_laplacian_1d":
            return fft.rfft(v, norm="ortho", axis=-1)
        return np.array(v, dtype=float, copy=True)

    def inverse(self, vhat: np.ndarray) -> np.ndarray:
        vhat = np.asarray(vhat)
        if self.kind == "dirichlet_laplacian_1d":
            return fft.idst(vhat, type=1, norm="ortho", axis=-1)
        if self.kind == "dirichlet_laplacian_2d":
            grid = vhat.reshape(vhat.shape[:-1] + (self.n, self.n))
            return fft.idstn(grid, type=1, norm="ortho", axes=(-2, -1)).reshape(vhat.shape)
        if self.kind == "periodic_laplacian_1d":
            return fft.irfft(vhat, n=self.n, norm="ortho", axis=-1)
        return np.real_if_close(vhat).astype(float)

    def apply_diagonal(self, d: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``inverse(d * forward(v))`` for a spectral multiplier ``d``."""
        return self.inverse(d * self.forward(v))

    def apply_semigroup(self, t: float, v: np.ndarray) -> np.ndarray:
        """``exp(-t A) v``."""
        if t < 0:
            raise ValueError("semigroup time must be >= 0")
        return self.apply_diagonal(np.exp(-t * self.eigenvalues), v)

    def apply_phi(self, j: int, t: float, v: np.ndarray) -> np.ndarray:
        """``phi_j(-t A) v``."""
        if t < 0:
            raise ValueError("phi time must be >= 0")
        return self.apply_diagonal(phi(j, -t * self.eigenvalues), v)

    def apply_weight(
        self, scheme: CollocationScheme, i: int, theta: float, h: float, v: np.ndarray
    ) -> np.ndarray:
        """``b_i(theta; -h A) v`` for stage ``i`` (zero-based)."""
        if h <= 0:
            raise ValueError("step size must be positive")
        return self.apply_diagonal(weight_b(scheme, i, theta, -h * self.eigenvalues), v)

    def weight_multipliers(self, scheme: CollocationScheme, theta: float, h: float):
        """Spectral multipliers of all ``b_i(theta; -h A)``, shape ``(s, m)``."""
        return weight_matrix(scheme, theta, -h * self.eigenvalues)

    def apply_fractional_power(self, gamma: float, v: np.ndarray) -> np.ndarray:
        """``A^gamma v`` for ``gamma`` in ``[-1, 1]``."""
        if not -1.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [-1, 1]")
        if gamma == 0:
            return np.array(self._check(v), dtype=float, copy=True)
        if gamma < 0 and np.any(self.eigenvalues == 0):
            raise ZeroEigenvalueNegativePower(
                "negative power of an operator with a zero eigenvalue"
            )
        return self.apply_diagonal(self.eigenvalues**gamma, v)


def _fd_eigenvalues(n: int) -> np.ndarray:
    hx = 1.0 / (n + 1)
    k = np.arange(1, n + 1)
    return 4.0 / hx**2 * np.sin(k * np.pi / (2 * (n + 1))) ** 2


def dirichlet_laplacian_1d(n: int) -> DiagonalizableOperator:
    """``-d^2/dx^2`` by central differences on ``n`` interior points of ``[0, 1]``."""
    if n < 1:
        raise ValueError("n must be positive")
    hx = 1.0 / (n + 1)
    x = hx * np.arange(1, n + 1)
    return DiagonalizableOperator("dirichlet_laplacian_1d", n, _fd_eigenvalues(n), (x,), hx)


def dirichlet_laplacian_2d(n: int) -> DiagonalizableOperator:
    """Five-point Laplacian on the ``n x n`` interior grid, row-major (x slow, y fast)."""
    if n < 1:
        raise ValueError("n must be positive")
    hx = 1.0 / (n + 1)
    lam = _fd_eigenvalues(n)
    eig = (lam[:, None] + lam[None, :]).ravel()
    x = hx * np.arange(1, n + 1)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return DiagonalizableOperator(
        "dirichlet_laplacian_2d", n, eig, (X.ravel(), Y.ravel()), hx * hx
    )


def periodic_laplacian_1d(n: int) -> DiagonalizableOperator:
    """Fourier pseudospectral ``-d^2/dx^2`` on ``x_j = j/n``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    k = fft.rfftfreq(n, d=1.0 / n)
    x = np.arange(n) / n
    return DiagonalizableOperator(
        "periodic_laplacian_1d", n, (2.0 * np.pi * k) ** 2, (x,), 1.0 / n
    )


def explicit_diagonal(eigenvalues) -> DiagonalizableOperator:
    eig = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    if np.any(eig < 0):
        raise ValueError("eigenvalues must be nonnegative")
    return DiagonalizableOperator("explicit_diagonal", len(eig), eig, None, 1.0)


def make_operator(kind: str, n) -> DiagonalizableOperator:
    builders = {
        "dirichlet_laplacian_1d": dirichlet_laplacian_1d,
        "dirichlet_laplacian_2d": dirichlet_laplacian_2d,
        "periodic_laplacian_1d": periodic_laplacian_1d,
        "explicit_diagonal": explicit_diagonal,
    }
    return builders[kind](n)
