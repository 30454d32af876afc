import sys
from pathlib import Path

import pytest

PLOTS_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PLOTS_DIR))

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture()
def fixtures():
    return FIXTURES
