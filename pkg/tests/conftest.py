import re
import sys
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"


def two_blobs(seed, n_per=10, p=50, offset=100.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0.0, 1.0, (n_per, p)), rng.normal(offset, 1.0, (n_per, p))])
    return X, np.repeat([0, 1], n_per)


@pytest.fixture
def iris_paths():
    return DATA_DIR / "iris.csv", DATA_DIR / "iris.schema"


_CRITERION = re.compile(r"test_acceptance\.py::test_(\d+)_")
_failed_criteria = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m and report.failed:
        _failed_criteria[int(m.group(1))] = report.when


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = dict(getattr(module, "ACCEPTANCE_LINES", {}))
    for number, when in _failed_criteria.items():
        lines.setdefault(number, f"FAIL criterion {number}: error during {when}")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
