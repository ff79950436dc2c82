from __future__ import annotations

import pytest

from helpers import FIXTURES


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
