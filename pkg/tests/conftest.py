from __future__ import annotations

import pytest

from combidla.rng import stream


@pytest.fixture
def rng():
    return stream(12345)
