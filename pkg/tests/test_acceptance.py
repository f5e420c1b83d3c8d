"""Every acceptance criterion at its stated tolerance, one printed line per check.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines; failing criteria are
reported as failures rather than relaxed.
"""

from __future__ import annotations

import pytest

from qedneg import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda c: f"criterion_{c.id}")
def test_criterion(criterion):
    checks = acceptance.run((criterion,))
    print()
    for check in checks:
        print(check.line())
    status = "PASS" if all(c.passed for c in checks) else "FAIL"
    print(f"[{status}] criterion {criterion.id}: {criterion.title}")
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, "\n".join(failed)
