import json
from importlib import resources

import numpy as np
import pytest

from phaselab.ensemble import COMPLEX, REAL, MeasurementEnsemble


def random_ensemble(rng, M, N, field=REAL):
    A = rng.standard_normal((M, N))
    if field == COMPLEX:
        A = A + 1j * rng.standard_normal((M, N))
    return MeasurementEnsemble(A, field)


def random_vector(rng, M, field=REAL):
    x = rng.standard_normal(M)
    if field == COMPLEX:
        x = x + 1j * rng.standard_normal(M)
    return x


def load_schema(name):
    text = resources.files("phaselab").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def three_vectors():
    """Columns (1,0), (0,1), (1,1)."""
    return np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    num, text = mark.args
    prev = _ACCEPTANCE.get(num, (text, True))
    _ACCEPTANCE[num] = (text, prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        text, ok = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {text}")
