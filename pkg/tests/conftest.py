import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

DATA_DIR = TESTS_DIR.parent / "src" / "powsim" / "data"


@pytest.fixture(scope="session")
def world_placement_path():
    return DATA_DIR / "world_placement.csv"


@pytest.fixture(scope="session")
def world_latency_path():
    return DATA_DIR / "world_latency.csv"
