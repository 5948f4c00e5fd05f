"""Acceptance suite: the nine end-to-end correctness criteria.

Each test runs one check from ``manyq.validation`` and prints a single
``criterion i (name): PASS/FAIL`` line, mirroring the ``manyq validate``
subcommand.  Several checks are long simulations; the whole module takes a
few minutes.
"""

import pytest

from manyq import validation

CHECKS = [getattr(validation, f"check_{i}") for i in range(1, 10)]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance_criterion(check, capsys):
    result = check()
    line = (
        f"criterion {result['criterion']} ({result['name']}): "
        f"{'PASS' if result['passed'] else 'FAIL'}"
    )
    with capsys.disabled():
        print(line)
    assert result["passed"], f"{line}\ndetails: {result['details']}"
