"""Acceptance gate: every criterion runs at its pinned tolerance.

One test per criterion; heavy artifacts (orbits, ensembles) are shared
through a session-scoped context.  Each test prints its one-line verdict
(visible with -v/-s or on failure).
"""

import pytest

from urnflow.acceptance import CRITERIA, Context


@pytest.fixture(scope="session")
def ctx():
    return Context(jobs=4)


@pytest.mark.parametrize(
    "name,fn", [(name, fn) for name, _, fn in CRITERIA], ids=[c[0] for c in CRITERIA]
)
def test_criterion(name, fn, ctx):
    result = fn(ctx)
    line = f"{name}: {'PASS' if result.passed else 'FAIL'} - {result.message}"
    print(line)
    assert result.passed, line
