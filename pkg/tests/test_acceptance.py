"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one ``[PASS]``/``[FAIL]`` line with the measured values,
so the gate is readable directly from ``pytest -v`` output.
"""
import pytest

from qstokes.checks import ACCEPTANCE, INVARIANTS


def _report(result, capsys):
    with capsys.disabled():
        print(f"\n{result.line()}")


@pytest.mark.parametrize("check", ACCEPTANCE, ids=[f"{i:02d}_{f.__name__[5:]}" for i, f in enumerate(ACCEPTANCE, 1)])
def test_acceptance(check, capsys):
    result = check()
    _report(result, capsys)
    assert result.passed, result.line()


@pytest.mark.parametrize("check", INVARIANTS, ids=[f.__name__[4:] for f in INVARIANTS])
def test_invariant(check, capsys):
    result = check()
    _report(result, capsys)
    assert result.passed, result.line()
