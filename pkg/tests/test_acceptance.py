"""Acceptance criteria, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line with the measured values and
tolerances; run ``python tests/test_acceptance.py`` for the lines alone.
"""

import sys

import pytest

from erkc import checks

RESULTS = []


def _run(check, capsys):
    res = check()
    RESULTS.append(res)
    with capsys.disabled():
        print("\n" + res.line())
    return res


def test_c01_phi_and_weight_properties(capsys):
    assert _run(checks.check_phi_weights, capsys).passed


def test_c02_discontinuity_points(capsys):
    assert _run(checks.check_discontinuities, capsys).passed


def test_c03_dense_step_equivalence(capsys):
    assert _run(checks.check_dense_equivalence, capsys).passed


def test_c04_order_s(capsys):
    assert _run(checks.check_order_s, capsys).passed


def test_c05_order_s_plus_1(capsys):
    assert _run(checks.check_order_s_plus_1, capsys).passed


def test_c06_l2_superconvergence(capsys):
    assert _run(checks.check_l2_superconvergence, capsys).passed


def test_c07_modified_erkc_i_full_order(capsys):
    assert _run(checks.check_modified_full_order, capsys).passed


@pytest.mark.slow
def test_c08_two_dimensional_self_convergence(capsys):
    assert _run(checks.check_2d_self_convergence, capsys).passed


def test_c09_node_consistency(capsys):
    assert _run(checks.check_node_consistency, capsys).passed


def test_c10_determinism(capsys):
    assert _run(checks.check_determinism, capsys).passed


if __name__ == "__main__":
    failed = 0
    for res in checks.run_checks(fast="--fast" in sys.argv):
        print(res.line(), flush=True)
        failed += not res.passed
    sys.exit(1 if failed else 0)
