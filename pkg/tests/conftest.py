import pytest

from synth import random_walk_suite


@pytest.fixture(scope="session")
def suite():
    """The frozen 50-trajectory random-walk suite (shared, do not mutate)."""
    return random_walk_suite()
