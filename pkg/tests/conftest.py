import functools

import pytest

from yoshidalift import FieldTower, FormSpace, QuatContext, eigenforms

ACCEPTANCE = {}


@functools.lru_cache(maxsize=None)
def context(n_minus: int, n_plus: int = 1) -> QuatContext:
    return QuatContext(n_minus, n_plus)


def forms_on(n_minus: int, ks, n_plus: int = 1, tower=None):
    """Eigenforms of each weight in `ks` sharing one fresh field tower."""
    tower = tower or FieldTower()
    ctx = context(n_minus, n_plus)
    return tower, {k: eigenforms(FormSpace(ctx, k, tower)) for k in set(ks)}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, desc = ACCEPTANCE[n][:2]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {desc}")


@pytest.fixture
def tower():
    return FieldTower()
