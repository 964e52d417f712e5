import sys
import numpy as np
import pandas as pd
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def write_ticks(path, rows, with_amount=False):
    cols = ["asset", "ts_ms", "price", "qty"] + (["amount"] if with_amount else [])
    pd.DataFrame(rows, columns=cols).to_csv(path, index=False)
    return path


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
