import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_spectra.errors import ParameterError
from robust_spectra.net import (DeltaNet, build_delta_net, check_covering,
                                construction_pool, min_distances, uniform_sphere)

EIGHT = 2 * math.sin(math.pi / 8)


def test_one_dimensional_net():
    net = build_delta_net(1, 0.5, 0)
    np.testing.assert_array_equal(net.points, [[1.0], [-1.0]])
    assert check_covering(net, 100, 0) == (0.0, True)


def test_circle_net_size():
    net = build_delta_net(2, EIGHT, 0)
    assert len(net) <= 8


def test_eight_angle_net_covers_circle():
    ang = np.arange(8) * math.pi / 4
    net = DeltaNet(2, 0.766, np.column_stack([np.cos(ang), np.sin(ang)]))
    worst, ok = check_covering(net, 10 ** 5, 0)
    assert ok
    # the largest gap sits halfway between neighbours, at chord 2 sin(pi/16)
    assert worst <= 2 * math.sin(math.pi / 16) + 1e-12


def test_single_point_net_fails():
    net = DeltaNet(2, 0.1, np.array([[1.0, 0.0]]))
    assert check_covering(net, 10 ** 4, 0)[1] is False


def test_sphere_net_passes_probe_check():
    net = build_delta_net(3, 0.5, 1)
    worst, ok = check_covering(net, 10 ** 5, 2)
    assert ok and net.delta - worst >= 0


@pytest.mark.parametrize("d, delta", [(2, 0.3), (3, 0.5), (4, 0.8)])
def test_points_unit_distinct_and_antipodal(d, delta):
    net = build_delta_net(d, delta, 3)
    assert np.max(np.abs(np.linalg.norm(net.points, axis=1) - 1.0)) <= 1e-12
    np.testing.assert_array_equal(net.points[1::2], -net.points[0::2])
    assert len(np.unique(net.points, axis=0)) == len(net)


def test_determinism():
    a, b = build_delta_net(3, 0.4, 7), build_delta_net(3, 0.4, 7)
    np.testing.assert_array_equal(a.points, b.points)


@settings(max_examples=20)
@given(st.floats(0.2, 1.0), st.floats(0.2, 1.0))
def test_size_monotone_in_delta(d1, d2):
    small, large = min(d1, d2), max(d1, d2)
    pool = 10 ** 4
    assert len(build_delta_net(2, small, 0, pool)) >= len(build_delta_net(2, large, 0, pool))


@pytest.mark.parametrize("d, delta", [(2, 0.3), (3, 0.5)])
def test_own_pool_is_covered(d, delta):
    net = build_delta_net(d, delta, 4)
    pool = construction_pool(net)
    assert np.max(min_distances(net, pool)) <= delta


@pytest.mark.parametrize("d, delta", [(0, 0.5), (2, 0.0), (2, 2.5), (2, math.nan)])
def test_invalid_arguments(d, delta):
    with pytest.raises(ParameterError):
        build_delta_net(d, delta, 0)


def test_check_covering_rejects_no_probes():
    with pytest.raises(ParameterError):
        check_covering(build_delta_net(2, 0.5, 0), 0)


def test_uniform_sphere_rows_are_unit():
    x = uniform_sphere(1000, 5, np.random.default_rng(0))
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-14)
