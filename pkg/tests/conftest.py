import numpy as np
import pytest

from causeg import kernels
from causeg.dataset import Dataset
from causeg.synth import SynthConfig, generate

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, desc = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {desc}")


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    return kernels.backends()[request.param]


@pytest.fixture(scope="session")
def small_world():
    return generate(SynthConfig(n_units=2_000), seed=11)


@pytest.fixture(scope="session")
def default_world():
    return generate(SynthConfig(), seed=7)


def make_dataset(X, t, y):
    return Dataset(unit_ids=None, covariates=np.asarray(X, dtype=float), treatment=t, outcome=y)
