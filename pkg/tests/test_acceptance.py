"""Acceptance criteria 1-10; each prints one pass/fail line."""
import json

import pytest

from cylbubble.verify import CHECKS, Context, run_check


@pytest.fixture(scope="module")
def ctx(es, gs, table):
    return Context(es=es, gs=gs, table=table)


@pytest.mark.parametrize("criterion", sorted(CHECKS))
def test_criterion(criterion, ctx, capsys):
    res = run_check(criterion, ctx)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, json.dumps(res.detail, default=str)
