import os
import sys
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

LONG_TESTS = "PERMCODES_LONG_TESTS"


def pytest_configure(config):
    config.addinivalue_line("markers", "long_run: reproduces published figures, minutes to hours")


def pytest_collection_modifyitems(config, items):
    if os.environ.get(LONG_TESTS) == "1":
        return
    skip = pytest.mark.skip(reason=f"set {LONG_TESTS}=1 to run")
    for item in items:
        if "long_run" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def sudoku4_codeword():
    return [1, 2, 3, 4,
            3, 4, 1, 2,
            2, 1, 4, 3,
            4, 3, 2, 1]
