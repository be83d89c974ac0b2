import pytest
from hypothesis import HealthCheck, settings

import ppth
from seraph.model import graph_union_all

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile("default")


@pytest.fixture
def ppth_events():
    return list(ppth.EVENTS)


@pytest.fixture
def ppth_graph():
    return graph_union_all(ppth.EVENTS)
