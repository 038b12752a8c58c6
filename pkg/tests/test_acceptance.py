"""Acceptance gate: ten checks, each printing one pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete; each check's tolerance is stated in its detail string.
"""

import pytest

from bubble_lab import report


@pytest.mark.parametrize("name,fn", report.ALL_CHECKS,
                         ids=[name.replace(" ", "-")
                              for name, _ in report.ALL_CHECKS])
def test_acceptance(name, fn, cache):
    passed, detail = fn(cache)
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} -- {detail}")
    assert passed, f"{name}: {detail}"
