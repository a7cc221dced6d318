"""Shared fixtures: the bundled tower world, parsed once per session.

Tests that mutate a theory or mapping must build a fresh value (via
dataclasses.replace or a fresh parse), never edit the shared objects.
"""

import pytest

from absynth import (
    DomainBounds,
    StateUniverse,
    classify_all,
    load_fixture,
)


@pytest.fixture(scope="session")
def project():
    return load_fixture("blocks_world")


@pytest.fixture(scope="session")
def low(project):
    return project.low


@pytest.fixture(scope="session")
def high(project):
    return project.high


@pytest.fixture(scope="session")
def mapping(project):
    return project.mapping


@pytest.fixture(scope="session")
def instances(project):
    return project.instances


@pytest.fixture(scope="session")
def bounds_small():
    return DomainBounds(min_objects=2, max_objects=4)


@pytest.fixture(scope="session")
def universe_small(low, bounds_small):
    return StateUniverse(low, bounds_small)


@pytest.fixture(scope="session")
def table_small(low, mapping, universe_small):
    """Classification of every (action, fluent) pair at the small bounds."""
    return classify_all(low, mapping, universe=universe_small)


@pytest.fixture(scope="session")
def board_project():
    return load_fixture("switchboard")
