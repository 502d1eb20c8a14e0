import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

FIXTURES = TESTS / "fixtures"


@pytest.fixture
def fixture_cmd():
    """argv prefix that runs one of the fixture scripts with this interpreter."""

    def make(name, *args):
        return [sys.executable, str(FIXTURES / name), *args]

    return make
