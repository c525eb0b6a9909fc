import pytest

from laneintent.geometry import build_octagon_track


@pytest.fixture(scope="session")
def track():
    return build_octagon_track(80.0, 40.0, lane_count=3, lane_width=3.5)


@pytest.fixture(scope="session")
def two_lane_track():
    return build_octagon_track(80.0, 40.0, lane_count=2, lane_width=3.5)
