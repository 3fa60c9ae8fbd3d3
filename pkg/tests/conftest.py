import numpy as np
import pytest
from hypothesis import settings

from shadowkit.words import Alphabet, FiniteWord

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

BIN = Alphabet(2)


def w(text, alphabet=BIN):
    return FiniteWord([int(c) for c in text], alphabet)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store a criterion verdict for the end-of-run summary."""

    def _record(k, ok, detail):
        ACCEPTANCE[k] = (bool(ok), detail)
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
