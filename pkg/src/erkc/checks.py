"""Acceptance checks shared by ``erkc selftest`` and the test suite.

Each check runs a small study and returns a :class:`CheckResult`; the
runtime budget is part of the verdict.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import integrate as spi
from scipy import linalg

from .delay import build_mesh, compute_discontinuities, constant_delay
from .harness import ComputedReference, ConvergenceStudy, run_study
from .integrator import MethodConfig, integrate
from .phi import gauss, make_scheme, phi, radau_iia, weight_b
from .problems import ProblemSpec, example_1, example_4
from .spectral import explicit_diagonal

SEED = 20240611


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float
    limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.elapsed:.2f}s, limit {self.limit:g}s)"


def _timed(name: str, limit: float, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    if elapsed >= limit:
        ok = False
        detail += "; over time budget"
    return CheckResult(name, ok, detail, elapsed, limit)


def _slope(problem, method, scheme, hs, norm="linf", n=None, **kw) -> float:
    study = ConvergenceStudy(problem, method, scheme, hs, norm=norm, n=n, **kw)
    return run_study(study).fit.slope


OCTAVES_3_8 = [2.0**-k for k in range(3, 9)]


# -- 1 -----------------------------------------------------------------------

def random_points(count: int, seed: int = SEED) -> list[tuple[float, complex]]:
    """``(theta, z)`` samples: half real, half complex, ``Re z <= 50``."""
    rng = np.random.default_rng(seed)
    pts = []
    for k in range(count):
        theta = float(rng.uniform(0.05, 1.0))
        mag = 10.0 ** rng.uniform(-8, 3)
        if k % 2 == 0:
            z = complex(-mag if rng.random() < 0.8 else min(mag, 50.0))
        else:
            ang = rng.uniform(0, 2 * np.pi)
            z = complex(mag * math.cos(ang), mag * math.sin(ang))
            if z.real > 50:
                z = complex(50.0 * rng.random(), z.imag)
        pts.append((theta, z))
    return pts


def check_phi_weights() -> CheckResult:
    from .phi import check_order_conditions

    def body():
        schemes = [gauss(1), gauss(2), gauss(3), radau_iia(2), radau_iia(3), make_scheme([0.25, 0.75])]
        worst_oc = 0.0
        worst_rec = 0.0
        for theta, z in random_points(200):
            for sch in schemes:
                worst_oc = max(worst_oc, max(check_order_conditions(sch, theta, z).residuals))
            for j in range(0, 6):
                # multiplied-out recurrence, well conditioned for every z
                lhs = z * phi(j + 1, z) + 1.0 / math.factorial(j)
                rel = abs(lhs - phi(j, z)) / max(abs(phi(j, z)), abs(z * phi(j + 1, z)), 1e-300)
                worst_rec = max(worst_rec, rel)
        r2 = radau_iia(2)
        b = [complex(weight_b(r2, i, 1.0, 0.0)).real for i in range(2)]
        werr = max(abs(b[0] - 0.75), abs(b[1] - 0.25))
        ok = worst_oc <= 1e-11 and worst_rec <= 1e-11 and werr <= 1e-14
        return ok, (f"order-condition residual {worst_oc:.2e}, recurrence {worst_rec:.2e}, "
                    f"radau2 b(1;0) error {werr:.1e}")

    return _timed("1 phi/weight properties", 1.0, body)


# -- 2 -----------------------------------------------------------------------

def check_discontinuities() -> CheckResult:
    def body():
        p1 = example_1(16)
        d1 = compute_discontinuities(p1.delay, p1.T)
        ok1 = len(d1.xi) == 1 and abs(p1.delay.deviated(d1.xi[0])) <= 1e-12
        d4 = compute_discontinuities(example_4(8).delay, 1.4)
        ok4 = len(d4.xi) == 1 and abs(d4.xi[0] - 1.0) <= 1e-12
        dc = compute_discontinuities(constant_delay(0.3), 1.0)
        ok_c = len(dc.xi) == 3 and np.allclose(dc.xi, [0.3, 0.6, 0.9], atol=1e-12, rtol=0)
        return ok1 and ok4 and ok_c, f"ex1 {list(d1.xi)}, ex4 {list(d4.xi)}, constant 0.3 {list(dc.xi)}"

    return _timed("2 discontinuity points", 1.0, body)


# -- 3 -----------------------------------------------------------------------

def linear_test_problem(lam: float, kappa: float = 0.0, T: float = 1.0) -> ProblemSpec:
    """``u' = -lam u + kappa u + sin t``; the delay is present but unused."""
    return ProblemSpec(
        explicit_diagonal([lam]),
        constant_delay(1.0),
        lambda t: np.array([1.0]),
        lambda t, v, w: np.sin(t) + kappa * v,
        T,
        label=f"linear(lam={lam}, kappa={kappa})",
    )


def dense_exponential_step(lam, kappa, c, h, t0, u0):
    """One exponential collocation step built from scratch.

    Coefficients come from 40-point Gauss-Legendre quadrature of
    ``int_0^theta exp(-lam (theta - x) h) l_j(x) dx`` and the stage system
    ``(I - h kappa A) U = exp(-c lam h) u0 + h A sin(t0 + c h)`` is solved
    with a dense LU.
    """
    c = np.asarray(c, dtype=float)
    s = len(c)

    def ell(j, x):
        return np.prod([(x - c[m]) / (c[j] - c[m]) for m in range(s) if m != j])

    def coef(theta, j):
        f = np.vectorize(lambda x: math.exp(-lam * h * (theta - x)) * ell(j, x))
        val, _ = spi.fixed_quad(f, 0.0, theta, n=40)
        return val

    A = np.array([[coef(ci, j) for j in range(s)] for ci in c])
    b = np.array([coef(1.0, j) for j in range(s)])
    src = np.sin(t0 + c * h)
    rhs = np.exp(-c * lam * h) * u0 + h * A @ src
    U = linalg.solve(np.eye(s) - h * kappa * A, rhs)
    g = src + kappa * U
    return math.exp(-lam * h) * u0 + h * b @ g, U


def compare_with_dense_steps(lam, kappa=0.0, h=0.1, scheme=None, method="erkc_c"):
    scheme = scheme or gauss(2)
    prob = linear_test_problem(lam, kappa)
    disc = compute_discontinuities(prob.delay, prob.T)
    mesh = build_mesh(disc, h, prob.T)
    traj = integrate(prob, mesh, MethodConfig(method, scheme), keep_records=True)
    worst = 0.0
    for rec, u_next in zip(traj.records, traj.values[1:]):
        ref, stages = dense_exponential_step(lam, kappa, scheme.c, rec.t1 - rec.t0, rec.t0, rec.state[0])
        worst = max(worst, abs(u_next[0] - ref), float(np.max(np.abs(rec.stages[:, 0] - stages))))
    return worst


def check_dense_equivalence() -> CheckResult:
    def body():
        errs = {lam: compare_with_dense_steps(lam) for lam in (1.0, 10.0, 100.0)}
        ok = all(e <= 1e-11 for e in errs.values())
        return ok, "max per-step deviation " + ", ".join(f"lam={k:g}: {v:.1e}" for k, v in errs.items())

    return _timed("3 no-delay dense-step equivalence", 1.0, body)


# -- 4, 5, 6 -------------------------------------------------------------------

def check_order_s() -> CheckResult:
    def body():
        be = make_scheme([1.0], "backward_euler")
        mid = make_scheme([0.25, 0.75], "c=[1/4,3/4]")
        parts, ok = [], True
        for method in ("erkc_i", "erkc_c"):
            p1 = _slope("ex1", method, be, OCTAVES_3_8, n=256)
            p2 = _slope("ex1", method, mid, OCTAVES_3_8, n=256)
            ok &= abs(p1 - 1.0) <= 0.2 and 2 - 0.25 <= p2 <= 2 + 0.6
            parts.append(f"{method}: s=1 {p1:.3f}, [1/4,3/4] {p2:.3f}")
        return ok, "; ".join(parts)

    return _timed("4 order s (ex1, n=256)", 30.0, body)


def check_order_s_plus_1() -> CheckResult:
    def body():
        parts, ok = [], True
        for sch in (radau_iia(2), gauss(2)):
            for method in ("erkc_i", "erkc_c"):
                p = _slope("ex1", method, sch, OCTAVES_3_8, n=512)
                ok &= abs(p - 3.0) <= 0.3
                parts.append(f"{method}/{sch.name} {p:.3f}")
        return ok, "Linf slopes " + ", ".join(parts)

    return _timed("5 order s+1 (ex1, n=512)", 60.0, body)


def check_l2_superconvergence() -> CheckResult:
    def body():
        p = _slope("ex1", "erkc_c", gauss(2), OCTAVES_3_8, norm="l2", n=512)
        return 3.1 <= p <= 3.6, f"gauss2 L2 slope {p:.3f} (target [3.1, 3.6])"

    return _timed("6 L2 superconvergence (ex1, gauss2)", 60.0, body)


# -- 7 -----------------------------------------------------------------------

def check_modified_full_order() -> CheckResult:
    def body():
        hs = [2.0**-k for k in range(4, 10)]
        pm = _slope("ex4", "merkc_i", gauss(3), hs, n=128)
        pi = _slope("ex4", "erkc_i", gauss(3), hs, n=128)
        ok = pm >= 4.5 and pi <= pm - 0.7
        return ok, f"merkc_i {pm:.3f} (need >= 4.5), erkc_i {pi:.3f}, gap {pm - pi:.3f} (need >= 0.7)"

    return _timed("7 modified ERKC-I full order (ex4, gauss3)", 120.0, body)


# -- 8 -----------------------------------------------------------------------

def check_2d_self_convergence() -> CheckResult:
    def body():
        ref = ComputedReference("erkc_c", gauss(3), 2.0**-11, estimate_floor=True)
        study = ConvergenceStudy("ex2", "erkc_c", radau_iia(2), OCTAVES_3_8, "linf", ref, n=64)
        fit = run_study(study).fit
        ok = abs(fit.slope - 3.0) <= 0.35
        return ok, f"radau2 Linf slope {fit.slope:.3f}, reference floor {fit.floor:.1e}, excluded {len(fit.excluded)}"

    return _timed("8 2D self-convergence (ex2, n=64)", 600.0, body)


# -- 9 -----------------------------------------------------------------------

def node_consistency(method: str, scheme, h: float = 2.0**-5, n: int = 128) -> float:
    prob = example_1(n)
    disc = compute_discontinuities(prob.delay, prob.T)
    mesh = build_mesh(disc, h, prob.T)
    traj = integrate(prob, mesh, MethodConfig(method, scheme), keep_records=True)
    store = traj.store
    worst = 0.0
    for rec, u1 in zip(traj.records, traj.values[1:]):
        h_n = rec.t1 - rec.t0
        pairs = [(rec.t1, u1)]
        if method != "merkc_i":
            pairs += [(rec.t0 + ci * h_n, ui) for ci, ui in zip(scheme.c, rec.stages)]
        for t, ref in pairs:
            dev = np.max(np.abs(store.evaluate(t) - ref)) / max(np.max(np.abs(ref)), 1e-300)
            worst = max(worst, float(dev))
    return worst


def check_node_consistency() -> CheckResult:
    def body():
        res = {
            "dense gauss2": node_consistency("erkc_c", gauss(2)),
            "dense radau2": node_consistency("erkc_c", radau_iia(2)),
            "interpolant gauss2": node_consistency("erkc_i", gauss(2)),
            "modified gauss2": node_consistency("merkc_i", gauss(2)),
        }
        return all(v <= 1e-10 for v in res.values()), ", ".join(f"{k} {v:.1e}" for k, v in res.items())

    return _timed("9 dense/interpolant node consistency", 10.0, body)


# -- 10 ----------------------------------------------------------------------

def check_determinism() -> CheckResult:
    from .cli import main

    def body():
        argv = ["converge", "--problem", "ex1", "--n", "64", "--method", "erkc-c", "--scheme",
                "radau", "--s", "2", "--norm", "linf", "--hs", "2^-3..2^-6"]
        with tempfile.TemporaryDirectory() as tmp:
            outs = []
            for k in range(2):
                path = os.path.join(tmp, f"run{k}.csv")
                if main(argv + ["--out", path]) != 0:
                    return False, "converge exited nonzero"
                with open(path, "rb") as fh:
                    outs.append(fh.read())
        return outs[0] == outs[1], f"{len(outs[0])} bytes, identical={outs[0] == outs[1]}"

    return _timed("10 byte-identical converge CSV", 30.0, body)


CHECKS = [
    check_phi_weights,
    check_discontinuities,
    check_dense_equivalence,
    check_order_s,
    check_order_s_plus_1,
    check_l2_superconvergence,
    check_modified_full_order,
    check_2d_self_convergence,
    check_node_consistency,
    check_determinism,
]
LONG = {check_2d_self_convergence}


def run_checks(fast: bool = False) -> Iterator[CheckResult]:
    for check in CHECKS:
        if fast and check in LONG:
            continue
        yield check()
