import math

import pytest
from hypothesis import given, settings, strategies as st

from waggledance.circular import angular_distance
from waggledance.geodesy import EARTH_RADIUS_M, destination, inverse, local_offset


def test_hundred_metres_north():
    lat, lon = destination(52.457, 13.296, 0.0, 100.0)
    assert lon == pytest.approx(13.296, abs=1e-12)
    assert lat - 52.457 == pytest.approx(math.degrees(100.0 / EARTH_RADIUS_M), rel=1e-9)


def test_east_along_equator():
    lat, lon = destination(0.0, 0.0, 90.0, 1000.0)
    assert lat == pytest.approx(0.0, abs=1e-12)
    assert lon == pytest.approx(math.degrees(1000.0 / EARTH_RADIUS_M), rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(-80, 80), st.floats(-179, 179), st.floats(0, 359.99), st.floats(1, 5000))
def test_round_trip(lat, lon, bearing, dist):
    lat2, lon2 = destination(lat, lon, bearing, dist)
    b, d = inverse(lat, lon, lat2, lon2)
    assert d == pytest.approx(dist, abs=0.1)
    assert angular_distance(b, bearing) <= 0.01


def test_local_offset_axes():
    lat, lon = destination(52.0, 13.0, 225.0, 342.0)
    east, north = local_offset(52.0, 13.0, lat, lon)
    assert east == pytest.approx(-342 / math.sqrt(2), abs=0.05)
    assert north == pytest.approx(-342 / math.sqrt(2), abs=0.05)
