import csv
import itertools
import math

import numpy as np
import pytest

from wasep.initial import sitewise_meet_join
from wasep.lattice import (FluxCounter, SiteConfiguration, WindowSpec, height_field,
                           scaling_constants)
from wasep.observables import (OBSERVABLE_COLUMNS, closure_sites, discrepancy_sum, hopf_cole,
                               height_from_hopf_cole, interval_increment, log_hopf_cole,
                               observable_rows, proposition_report, rescaled_height,
                               total_variation, tv_integer, write_observables_csv)

# eps = 0.1 and [a, b] = [-0.2, 0.2] observe every site of the 5-site window
SC = scaling_constants(0.1)
W5 = WindowSpec(-0.2, 0.2, 2)
CONFIGS = [SiteConfiguration(np.array(b), W5) for b in itertools.product((0, 1), repeat=5)]


def test_closure_sites():
    assert closure_sites(-1.0, 1.0, 0.1) == (-11, 10)
    assert closure_sites(-0.2, 0.2, 0.1) == (-3, 2)
    with pytest.raises(ValueError):
        closure_sites(0.01, 0.02, 0.1)


def test_discrepancy_count_is_hamming_distance():
    for c1, c2 in itertools.product(CONFIGS, repeat=2):
        d = discrepancy_sum(c1, c2, SC, W5)
        assert d.count == int(np.sum(c1.occupancy != c2.occupancy))
        assert d.value == SC.sqrt_eps * d.count


def test_tv_identity_exhaustive():
    # TV of h - h_eq over the closure sites equals twice the discrepancy count
    w = WindowSpec(-0.2, 0.2, 3)
    configs = [SiteConfiguration(np.array(b), w) for b in itertools.product((0, 1), repeat=7)]
    rng = np.random.default_rng(0)
    for c1, c2 in itertools.product(configs[::3], configs[::5]):
        h1 = height_field(c1, int(rng.integers(-3, 4)))
        h2 = height_field(c2, int(rng.integers(-3, 4)))
        d = discrepancy_sum(c1, c2, SC, w)
        assert tv_integer(h1, h2, w.a, w.b, SC.epsilon) == 2 * d.count


def test_equality_at_time_zero_exhaustive():
    w = WindowSpec(-0.2, 0.2, 3)
    configs = [SiteConfiguration(np.array(b), w) for b in itertools.product((0, 1), repeat=7)]
    for step, eq in itertools.product(configs[::2], configs[::3]):
        lo, hi = sitewise_meet_join(step, eq)
        rep = proposition_report(step, eq, height_field(hi, 0), height_field(lo, 0), SC, w, 0.0)
        assert rep.equality and rep.passed
        assert rep.lhs == pytest.approx(rep.rhs, rel=1e-15)


def test_interval_increment():
    w = WindowSpec(-0.3, 0.3, 3)
    c = SiteConfiguration(np.array([1, 0, 0, 1, 1, 0, 1]), w)
    h = height_field(c, FluxCounter(1))
    # closure sites for [-0.2, 0.2] at eps 0.1 are -3 and 2: h = 3 and 2
    assert interval_increment(h, -0.2, 0.2, 0.1) == -1


def test_hopf_cole_hand_value():
    # h(0) = 2 and t = 0: Z = gamma * exp(-2 lam) = 2.5 * p / q = 5/3 at eps = 0.04
    sc = scaling_constants(0.04)
    w = WindowSpec(-0.04, 0.04, 3)
    c = SiteConfiguration(np.array([1, 0, 0, 1, 1, 0, 1]), w)
    h = height_field(c, FluxCounter(1))
    assert hopf_cole(h, sc, 0.0, 0.0) == pytest.approx(5 / 3, rel=1e-14)
    assert hopf_cole(h, sc, 0.0, 0.0, unit_gamma=True) == pytest.approx(2 / 3, rel=1e-14)
    # the drift is v t / eps^2
    assert log_hopf_cole(h, sc, 0.5, 0.0) - log_hopf_cole(h, sc, 0.0, 0.0) == pytest.approx(
        sc.v * 0.5 / 0.04 ** 2, rel=1e-12)


@pytest.mark.parametrize("eps", [0.1, 0.04, 0.01])
def test_hopf_cole_round_trip(eps):
    sc = scaling_constants(eps)
    w = WindowSpec(-1.0, 1.0, int(2 / eps))
    rng = np.random.default_rng(1)
    h = height_field(SiteConfiguration((rng.random(w.n_sites) < 0.5).astype(np.uint8), w), 3)
    for x in (-0.9, 0.0, 0.35):
        for t in (0.0, 0.7):
            for unit in (False, True):
                back = height_from_hopf_cole(log_hopf_cole(h, sc, t, x, unit), sc, t, unit)
                want = rescaled_height(h, sc, x)
                assert back == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_total_variation():
    assert total_variation([0, 1, 0, 2]) == 4
    assert total_variation([5, 0, 1, 0, 2, 9], interval=(0.1, 0.4),
                           grid=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]) == 4
    with pytest.raises(ValueError):
        total_variation([1.0])


def test_observables_csv(tmp_path):
    w = WindowSpec(-0.3, 0.3, 3)
    c = SiteConfiguration(np.array([1, 0, 0, 1, 1, 0, 1]), w)
    rows = observable_rows({"eq": height_field(c, 1)}, SC, 0.0, [0.0, 0.1])
    path = tmp_path / "obs.csv"
    write_observables_csv(path, rows)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert tuple(got[0]) == OBSERVABLE_COLUMNS
    assert float(got[1]["h_tilde"]) == SC.sqrt_eps * 3
    assert float(got[0]["Z"]) == math.exp(-SC.lam * 2)
