import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("ENTQUANT_EXTENDED") == "1":
        return
    skip = pytest.mark.skip(reason="set ENTQUANT_EXTENDED=1 to run hours-scale reproductions")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        if not any("criterion 8:" in line for line in lines):
            lines = lines + ["[SKIP] criterion 8: four-qubit full-scale sweep, set ENTQUANT_EXTENDED=1 to run"]
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
