"""Acceptance gate: each numbered criterion at its pinned tolerance.

Criterion 2 is an expected failure documented in the acceptance module:
the reference closed-form constant for the torus automaton disagrees with
exact enumeration of the chain (the corrected constant matches to machine
precision, as the detail line shows).  It is asserted as stated and stays
red rather than being loosened to match the enumeration.
"""

import pytest

from occlab.acceptance import CRITERIA, run_criterion

_results = {}


def _get(ident):
    if ident not in _results:
        _results[ident] = run_criterion(ident, fast=False)
    return _results[ident]


@pytest.mark.parametrize("ident,name", [(c[0], c[1]) for c in CRITERIA])
def test_criterion(ident, name):
    res = _get(ident)
    print(res.line() + f" [{res.seconds:.1f}s]")
    assert res.passed, res.line()
