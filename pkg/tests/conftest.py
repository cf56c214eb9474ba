import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

SEED = int(os.environ.get("HAMBIF_SEED", "20240611"))

settings.register_profile(
    "hambif",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("hambif")


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


# One summary line per acceptance criterion, printed at the end of the run.
_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number = int(name.split("_")[2])
        title = " ".join(name.split("_")[3:])
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict, detail = _CRITERIA[number]
        line = f"criterion {number} ({title}): {verdict}"
        terminalreporter.write_line(line + (f" -- {detail}" if detail else ""))
