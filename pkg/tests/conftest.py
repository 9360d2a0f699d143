import sys
from datetime import datetime

import numpy as np
import pytest
from hypothesis import settings

from hybriddr.ingest import AlignedSeries

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def make_series(prices, loads=None, start=datetime(2008, 1, 7), interval=15, mask=None):
    prices = np.asarray(prices, dtype=float)
    loads = np.full(prices.size, 1000.0) if loads is None else np.asarray(loads, dtype=float)
    return AlignedSeries(start, prices, loads, mask, interval)


@pytest.fixture
def series_factory():
    return make_series


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    report = getattr(module, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(report):
        terminalreporter.write_line(report[number])
