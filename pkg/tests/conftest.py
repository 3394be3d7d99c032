import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rowbench import kernels

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return kernels.get_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance verdicts -------------------------------------------------------
# Each acceptance test records one line; the lines are printed together at the
# end of the session so they show up in the log even when output is captured.

_VERDICTS: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def verdict(request):
    number = int(request.node.name.split("_")[2])

    def record(title: str, ok: bool, detail: str = "") -> None:
        _VERDICTS[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}): {detail}"

    yield record
    if number not in _VERDICTS:
        _VERDICTS[number] = (request.node.name, False, "raised before reaching a verdict")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        title, ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}  {title}: {detail}")
