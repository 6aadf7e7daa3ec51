import math

import numpy as np
import pytest

from wasep.lattice import (FluxCounter, ScalingConstants, SiteConfiguration, Topology,
                           WindowSpec, auto_extent, height_field, increments_from_height,
                           lattice_point, observation_sites, scaling_constants)

# Frozen with mpmath at 30 digits from p = (1 - s)/2, q = (1 + s)/2, s = sqrt(eps):
# lam = log(q/p)/2, v = 1 - sqrt(1 - eps), gamma = 1/(2 s).
EPS = 0.04
FROZEN = dict(p=0.4, q=0.6, gamma=2.5, lam=0.202732554054082190989,
              v=0.0202041028867287607211)


def test_scaling_constants_match_frozen_values():
    sc = scaling_constants(EPS)
    for k, want in FROZEN.items():
        assert getattr(sc, k) == pytest.approx(want, rel=1e-14), k
    assert sc.q - sc.p == pytest.approx(math.sqrt(EPS), rel=1e-14)


def test_lambda_close_to_its_series():
    # lam - (s + s^3/3) = s^5/5 + ... ~ 6.59e-5 at eps = 0.04
    sc = scaling_constants(EPS)
    s = math.sqrt(EPS)
    assert sc.lam - (s + s ** 3 / 3) == pytest.approx(6.58873874155e-5, rel=1e-9)


def test_v_expansion_starts_at_half_eps():
    for eps in (1e-2, 1e-3, 1e-4):
        v = scaling_constants(eps).v
        assert v == pytest.approx(eps / 2 + eps ** 2 / 8, rel=eps ** 2)


def test_unit_gamma_mode():
    assert scaling_constants(0.1, unit_gamma=True).gamma == 1.0
    assert ScalingConstants.symmetric().p == ScalingConstants.symmetric().q == 0.5


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_epsilon_out_of_range(eps):
    with pytest.raises(ValueError):
        scaling_constants(eps)


def test_lattice_point_truncates_and_snaps():
    assert lattice_point(0.3, 0.1) == 3
    assert lattice_point(0.25, 0.1) == 2
    assert lattice_point(-0.25, 0.1) == -2
    assert lattice_point(-1.0, 0.1) == -10
    assert observation_sites(-0.95, 0.95, 0.1) == (-9, 9)
    assert observation_sites(-1.0, 1.0, 0.1) == (-10, 10)


def test_window_validation():
    with pytest.raises(ValueError, match="a < b"):
        WindowSpec(1.0, -1.0, 10)
    with pytest.raises(ValueError):
        WindowSpec(-1.0, 1.0, 0)
    with pytest.raises(ValueError):
        WindowSpec(-1.0, 1.0, 5, n_sites=7)
    w = WindowSpec(-1.0, 1.0, 10)
    assert (w.first_site, w.last_site, w.n_sites, w.n_bonds) == (-10, 10, 21, 20)
    with pytest.raises(IndexError):
        w.index(11)
    with pytest.raises(ValueError, match="does not fit"):
        w.check_scale(0.1)
    WindowSpec(-1.0, 1.0, 11).check_scale(0.1)


def test_ring_window():
    r = WindowSpec.ring(8)
    assert r.topology is Topology.RING
    assert r.n_sites == r.n_bonds == 8


def test_auto_extent_buffer_rule():
    # ceil(1/0.1 + 3 * 1/0.01) = 310
    assert auto_extent(-1, 1, 0.1, 1.0) == 310
    assert auto_extent(-1, 0.5, 0.05, 1.0) == 1220
    assert WindowSpec.auto(-1, 1, 0.1, 1.0).lattice_extent == 310


def test_height_examples():
    # sites -3..3, occupancy 1 0 0 1 1 0 1, flux N = 1, so h(0) = 2
    w = WindowSpec(-0.3, 0.3, 3)
    c = SiteConfiguration(np.array([1, 0, 0, 1, 1, 0, 1]), w)
    h = height_field(c, FluxCounter(1))
    # h(1) = 2 + 1, h(2) = 3 - 1, h(3) = 2 + 1; h(-1) = 2 - spin(0) = 1, h(-2) = 1 + 1, h(-3) = 2 + 1
    assert [h.at(x) for x in range(-3, 4)] == [3, 2, 1, 2, 3, 2, 3]
    assert h.flux == FluxCounter(1)
    assert np.array_equal(increments_from_height(h), c.spins()[1:])


def test_step_heights():
    # 1{x >= 0}: h(-1) = h(0) - spin(0) = -1, so the wedge has its tip at -1
    from wasep.initial import step_profile
    w = WindowSpec(-0.3, 0.3, 3)
    h = height_field(step_profile(w), 0)
    assert [h.at(x) for x in range(-3, 4)] == [1, 0, -1, 0, 1, 2, 3]
    # 1{x >= 1} is the symmetric wedge |x|
    h1 = height_field(step_profile(w, origin=1), 0)
    assert [h1.at(x) for x in range(-3, 4)] == [3, 2, 1, 0, 1, 2, 3]


def test_increments_reject_non_unit_steps():
    w = WindowSpec(-0.1, 0.1, 1)
    from wasep.lattice import HeightField
    with pytest.raises(ValueError, match="increment 2"):
        increments_from_height(HeightField(np.array([0, 2, 3]), w))


def test_height_rejects_ring():
    r = WindowSpec.ring(4)
    with pytest.raises(ValueError):
        height_field(SiteConfiguration(np.zeros(4, np.uint8), r), 0)


def test_configuration_checks():
    w = WindowSpec(-0.1, 0.1, 1)
    with pytest.raises(ValueError):
        SiteConfiguration(np.array([0, 2, 1]), w)
    with pytest.raises(ValueError):
        SiteConfiguration(np.array([0, 1]), w)
    a = SiteConfiguration(np.array([0, 1, 0]), w)
    b = SiteConfiguration(np.array([1, 1, 0]), w)
    assert a.leq(b) and not b.leq(a)
    assert a.n_particles == 1 and a.at(0) == 1
