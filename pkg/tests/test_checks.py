import math

import numpy as np
import pytest
from scipy.stats import skellam

from wasep import seeding
from wasep.dynamics import CoupledEnsemble, EventStream, evolve
from wasep.initial import linear_phi, phi_from_spec, step_profile
from wasep.lattice import SiteConfiguration, WindowSpec, scaling_constants
from wasep.observables import log_hopf_cole
from wasep.verification.checks import (LIPSCHITZ_ORDER, PROPOSITION_ORDER, check_ordering,
                                       check_proposition, grid_standard_error,
                                       lipschitz_bound_check, lipschitz_ensemble,
                                       proposition_ensemble)
from wasep.verification.experiments import (buffer_doubling_check, decoupled_proposition,
                                            epsilon_scan, light_cone_extent, lipschitz_grid)

SC = scaling_constants(0.1, unit_gamma=True)
W = WindowSpec.auto(-1.0, 1.0, 0.1, 1.0)


def test_proposition_holds_and_is_tight_at_zero():
    for run in range(5):
        s = seeding.run_seeds(77, run)
        ens = proposition_ensemble(SC, W, s["stream"], s["uniforms"])
        reps = check_proposition(ens, W, SC, [0.0, 0.25, 0.5, 1.0], order_hook=True)
        assert reps[0].equality
        assert all(r.passed for r in reps)
        assert [r.t_macro for r in reps] == [0.0, 0.25, 0.5, 1.0]


def test_proposition_needs_all_replicas():
    ens = CoupledEnsemble({"step": step_profile(W)}, EventStream(0, SC, W))
    with pytest.raises(KeyError, match="eq"):
        check_proposition(ens, W, SC, [0.0])


def test_sample_times_cannot_go_back():
    ens = proposition_ensemble(SC, W, 1, 2)
    check_proposition(ens, W, SC, [0.5])
    with pytest.raises(ValueError):
        check_proposition(ens, W, SC, [0.2])


def test_decoupled_streams_break_the_bound():
    params = {"root_seed": 3, "epsilon": 0.1, "t_macro": 1.0,
              "window": {"a": -1.0, "b": 1.0, "lattice_extent": "auto"}}
    results = [decoupled_proposition(params, r)["pass"] for r in range(10)]
    assert not all(results)


def test_ordering_check_passes_and_skips_incomparable_pairs():
    ens = proposition_ensemble(SC, W, 5, 6)
    ens_pairs = list(PROPOSITION_ORDER) + [("step", "eq")]
    evolve(ens, 50.0)
    res = check_ordering(ens, ens_pairs)
    assert res.passed
    assert res.skipped == [("step", "eq")]
    assert len(res.checked) == 4


def test_ordering_check_reports_first_violation():
    ens = proposition_ensemble(SC, W, 5, 6)
    i = W.index(3)
    ens.packed[i] = np.uint64(int(ens.packed[i]) & ~(1 << ens._bit("max")))
    ens.packed[i] = np.uint64(int(ens.packed[i]) | (1 << ens._bit("step")))
    res = check_ordering(ens, [("step", "max")])
    assert not res.passed
    assert res.violation["site"] == 3 and res.violation["pair"] == ["step", "max"]
    assert any("step" in k for k in res.violation["neighbourhood"])


def test_zero_phi_lipschitz_quotient_vanishes():
    sc = scaling_constants(0.04, unit_gamma=True)
    w = WindowSpec.auto(-1.0, 1.0, 0.04, 0.1)
    ens = lipschitz_ensemble(phi_from_spec({"kind": "zero"}), 0.0, sc, w, 1, 2)
    evolve(ens, 0.1 / 0.04 ** 2)
    rep = lipschitz_bound_check(ens, 0.0, w, lipschitz_grid(-1, 1, 11), sc)
    assert rep.increments_ordered and rep.quotient == 0.0


def test_lipschitz_sandwich_short_run():
    sc = scaling_constants(0.04, unit_gamma=True)
    w = WindowSpec.auto(-1.0, 1.0, 0.04, 0.2)
    ens = lipschitz_ensemble(linear_phi(0.5), 0.5, sc, w, 3, 4)
    from wasep.dynamics import OrderingHook
    evolve(ens, 0.2 / 0.04 ** 2, [OrderingHook(LIPSCHITZ_ORDER)])
    rep = lipschitz_bound_check(ens, 0.5, w, lipschitz_grid(-1, 1, 11), sc)
    assert rep.increments_ordered and rep.increment_violations == 0
    assert rep.bound == pytest.approx(0.5 + rep.slack)


def test_lipschitz_negative_control_rejected():
    sc = scaling_constants(0.04, unit_gamma=True)
    w = WindowSpec.auto(-1.0, 1.0, 0.04, 1.0)
    with pytest.raises(ValueError):
        lipschitz_ensemble(linear_phi(0.5), 0.1, sc, w, 1, 2)


def test_grid_standard_error_formula():
    # rho_d = 0.05, n = 5 sites per cell of width 0.2 at eps = 0.04
    se = grid_standard_error(0.5, 0.04, 0.2)
    assert se == pytest.approx(2 * 0.2 * math.sqrt(5 * 0.05 * 0.95) / 0.2)


def test_buffer_doubling():
    rep = buffer_doubling_check(0.1, 1.0, -1.0, 1.0, seeds=20, root_seed=11)
    assert rep["pass"], rep
    assert rep["lattice_extent"] == 310


def test_epsilon_scan_small():
    res, records = epsilon_scan((0.2, 0.1), runs=10, root_seed=4)
    assert res.identity_holds and res.domination_holds and res.quantiles_monotone
    assert res.runs == {"0.2": 10, "0.1": 10}
    for r in records:
        assert r["tv"] == math.sqrt(r["epsilon"]) * r["tv_int"]
        assert r["tv_int"] == 2 * r["count"]


def test_hopf_cole_mean_solves_discrete_heat_equation():
    # E[Z] at microscopic time T is the wedge convolved with a rate-sqrt(pq) walk
    eps, t = 0.05, 0.05
    sc = scaling_constants(eps)
    L = light_cone_extent(0.5, eps, t)
    w = WindowSpec(-0.5, 0.5, L)
    T = t / eps ** 2
    pts = (0.0, 0.25, -0.25)
    n = 20_000
    z = np.empty((n, len(pts)))
    for i in range(n):
        ens = CoupledEnsemble({"s": step_profile(w, 1)}, EventStream(seeding.derive_seed(8, i),
                                                                     sc, w))
        evolve(ens, T)
        h = ens.height("s")
        z[i] = [math.exp(log_hopf_cole(h, sc, t, x)) for x in pts]
    ys = np.arange(-L, L + 1)
    z0 = sc.gamma * np.exp(-sc.lam * np.abs(ys))
    r = math.sqrt(sc.p * sc.q) * T
    for j, x in enumerate(pts):
        exact = float((z0 * skellam.pmf(round(x / eps) - ys, r, r)).sum())
        se = z[:, j].std(ddof=1) / math.sqrt(n)
        assert abs(z[:, j].mean() - exact) < 4 * se, (x, z[:, j].mean(), exact, se)


def test_literal_step_has_the_wrong_mass():
    # with 1{x >= 0} the wedge tip sits at -1 and the Hopf-Cole mass is e^lam (1 + sqrt(1-eps))/2
    sc = scaling_constants(0.05)
    w = WindowSpec(-1.0, 1.0, 600)
    from wasep.lattice import height_field
    for origin, mass in ((0, 1.23950044185), (1, 0.98733971724)):
        h = height_field(step_profile(w, origin), 0)
        total = 0.05 * sum(math.exp(log_hopf_cole(h, sc, 0.0, x * 0.05)) for x in w.sites)
        assert total == pytest.approx(mass, rel=1e-9)
