"""Acceptance battery: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import time

import pytest

from bvheat.acceptance import CHECKS, check_lower_bound_liminf, format_line, run_check

SLOW = {5, 8, 9, 11}


def report(r):
    print("\n" + format_line(r))
    return r


@pytest.mark.parametrize("k", [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k
                               for k in sorted(CHECKS) if k != 6])
def test_criterion(k):
    r = report(run_check(k))
    assert r.passed, r.detail


@pytest.mark.xfail(strict=True, reason="heat flow lowers the variation of rough fields at "
                                       "every fixed t > 0; only the small-t limit holds")
def test_criterion_6_every_t():
    r = report(run_check(6))
    assert r.passed, r.detail


def test_criterion_6_small_t_limit():
    t0 = time.perf_counter()
    r = check_lower_bound_liminf()
    r.runtime = time.perf_counter() - t0
    report(r)
    assert r.passed, r.detail
