import pytest

from cegames import flow
from cegames.core import CEGame


@pytest.fixture
def g1() -> CEGame:
    """Two sites, one evader, unit caps; its unique equilibrium spreads the
    catcher (0.6, 0.4) and leaves the evader indifferent at (0.5, 0.5)."""
    return CEGame.create(
        sites=("A", "B"),
        resources=[1.0, 1.0],
        limits=1.0,
        base=[[0.0, 0.0], [6.0, 4.0]],
        delta=[[1.0, 1.0], [-10.0, -10.0]],
    )


@pytest.fixture(params=flow.available_engines())
def flow_engine(request):
    """Run a test under every built kernel flavor."""
    previous = flow.engine_name()
    flow.set_engine(request.param)
    yield request.param
    flow.set_engine(previous)
