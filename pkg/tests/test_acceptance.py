from __future__ import annotations

import pytest

from opfields.acceptance import CRITERIA, run_criterion

SEED = 0
RESULTS = {}


def line(res):
    return f"criterion {res['criterion']:>2}: {'PASS' if res['ok'] else 'FAIL'}  {res['name']}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    res = run_criterion(n, SEED)
    RESULTS[n] = res
    print(line(res))
    assert res["ok"], {f: res["witness"][f] for f in res["failures"]}


def test_all_criteria_present():
    assert sorted(CRITERIA) == list(range(1, 11))


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        print(line(run_criterion(n, SEED)))
