from fractions import Fraction
import itertools
import math

import numpy as np
import pytest

from oracles import fold, rounding_law, tv
from qeclab import privacy as pv
from qeclab.errors import ValidationError
from qeclab.quantized import QuantizedScenario
from qeclab.rng import stream


def scen(w=8, alpha=0.5, xbar=1.0, n=1, w_b=4):
    return QuantizedScenario(w, w_b, alpha, np.broadcast_to(xbar, (n,)), np.ones(n))


def test_delta_example():
    assert pv.delta_value(0.01, 0.5, 1.0, 8) == pytest.approx(0.31565, abs=1e-4)
    rep = pv.delta_bound(0.01, 0.5, 1.0, 8)
    assert rep.feasible and rep.delta == pytest.approx(0.31565, abs=1e-4)


def test_delta_hypothesis_violation_reported():
    rep = pv.delta_bound(1.0, 0.5, 1.0, 10)
    assert not rep.feasible and "violated" in rep.reason


def test_adjacency():
    E = np.array([[3.0, -4.0], [5.0, 6.0]])
    F = E.copy()
    assert not pv.is_adjacent(E, F, 1.0, 4)  # zero differing entries
    F[0, 1] = -4.3
    assert pv.is_adjacent(E, F, 0.5, 4) and not pv.is_adjacent(E, F, 0.2, 4)
    assert pv.differing_slot(E, F) == (0, 1)
    G = F.copy()
    G[1, 1] = 6.1
    assert not pv.is_adjacent(E, G, 1.0, 4) and pv.differing_slot(E, G) is None


def test_opposite_sign_offsets():
    E = np.array([16.0])
    assert pv.is_adjacent(E, np.array([-16.0]), 0.1, 4, "formula")      # offset 32
    assert not pv.is_adjacent(E, np.array([-16.0]), 0.1, 4, "prose")     # offset 16
    assert pv.is_adjacent(np.array([8.0]), np.array([-8.0]), 0.1, 4, "prose")
    with pytest.raises(ValidationError):
        pv.is_adjacent(E, E, 0.1, 4, "other")


def test_exact_tv_against_rational_oracle():
    s = scen(w=6)
    for x, b, bp in [(0.3, 3.0, 3.2), (-0.7, -4.0, -3.9), (0.0, 5.0, 6.0), (0.9, 2.6, 2.7)]:
        c = pv.verify_dp_exact(x, b, bp, s)
        y, yp = (Fraction(float(fold(Fraction(math.exp(x / v))))) for v in (b, bp))
        assert c.gap == pytest.approx(float(tv(rounding_law(y, 6), rounding_law(yp, 6))), abs=1e-12)


def test_bound_chain_on_random_pairs():
    rng = stream(41)
    for _ in range(300):
        w = int(rng.integers(2, 11))
        alpha = float(rng.uniform(0.05, min(1.0, 0.99 - 2.0 ** -(w - 1))))
        s = scen(w=w, alpha=alpha, xbar=float(rng.uniform(0.2, 3.0)))
        zeta = float(rng.uniform(0, 0.5))
        b, bp = pv.random_same_sign_pair(rng, 4, alpha, s.xbar[0], zeta)
        c = pv.verify_dp_exact(float(rng.uniform(-1, 1)) * s.xbar[0] * 0.999, b, bp, s, zeta=zeta)
        assert c.chain_holds, c


def test_g_is_not_one_lipschitz():
    # Below 1 the fold 2 - 1/v has slope 1/v^2 > 1, so |g(v) - g(v')| can
    # exceed |v - v'|; the chain only needs the key-space derivative bound.
    s = scen(w=8)
    c = pv.verify_dp_exact(-0.9, 2.5, 2.6, s)
    assert c.g_gap_bound / 2.0 ** 7 > c.v_gap
    assert c.chain_holds


def test_opposite_sign_pair_breaks_bound():
    s = scen(w=8, xbar=4.0)
    assert pv.opposite_sign_adjacency_possible(0.1, 4, 0.5, 4.0)
    assert pv.is_adjacent(np.array([16.0]), np.array([-16.0]), 0.1, 4)
    c = pv.verify_dp_exact(3.9, 16.0, -16.0, s, zeta=0.1)
    assert c.gap > c.delta


def test_domain_where_opposite_signs_cannot_meet():
    assert not pv.opposite_sign_adjacency_possible(0.5, 4, 0.5, 1.0)
    assert pv.opposite_sign_adjacency_possible(0.5, 4, 0.5, 1.0, "prose")


def test_max_aggregator_can_be_violated():
    s = QuantizedScenario(8, 4, 0.5, [0.5, 2.0], [1.0, 1.0])
    loose = pv.delta_bound(0.05, 0.5, s.xbar, 8, "max").delta
    safe = pv.delta_bound(0.05, 0.5, s.xbar, 8, "min").delta
    rng = stream(42)
    gaps = []
    for _ in range(3000):
        b, bp = pv.random_same_sign_pair(rng, 4, 0.5, 0.5, 0.05)
        gaps.append(pv.verify_dp_exact(float(rng.uniform(-0.5, 0.5)), b, bp, s, 0, 0.05).gap)
    assert max(gaps) > loose
    assert max(gaps) <= safe


def test_two_step_trajectory_tv():
    s = scen(w=4, n=1)
    xs = np.array([[0.4], [-0.6]])
    E = np.array([[3.0], [3.0]])
    Ep = np.array([[3.0], [3.1]])
    joint = pv.trajectory_tv(xs, E, Ep, s)
    single = pv.verify_dp_exact(-0.6, 3.0, 3.1, s).gap
    # only the second word's law changes, so the joint gap equals its gap
    assert joint == pytest.approx(single, abs=1e-15)
    assert len(pv.joint_atoms([[("a", 0.5), ("b", 0.5)]] * 2)) == 4


def test_measured_gap_below_delta():
    s = scen(w=10)
    gap = pv.max_measured_gap(0.001, s, 300, stream(43))
    assert 0 < gap <= pv.delta_value(0.001, 0.5, 1.0, 10)


def test_choose_params_example_corrected():
    r = pv.choose_params(0.1, 0.1, 0.5, 3, 63, 1.0, 4)
    assert r.feasible and r.w_min == 27
    lo, hi = r.alpha_interval
    assert lo == pytest.approx(3.636e-5, rel=1e-3) and hi == pytest.approx(3.860e-5, rel=1e-3)
    terms = pv.tradeoff_terms(0.1, 0.1, 0.5, 3, 63, 1.0, 4, r.w_min)
    assert r.w_min >= max(terms.w_bits, terms.w_privacy_fixed)
    for a in np.linspace(lo, hi, 7):
        assert math.log1p(a) >= terms.alpha_lo_literal * (1 - 1e-12)
        assert math.sqrt(pv.worst_case_mse_bound(a, r.w_min, 4, [1.0] * 3, [63] * 3)) <= 0.1
        assert pv.delta_value(0.5, a, 1.0, r.w_min) <= 0.1 * (1 + 1e-12)


def test_choose_params_example_literal_is_empty():
    r = pv.choose_params(0.1, 0.1, 0.5, 3, 63, 1.0, 4, "literal")
    assert not r.feasible and r.w_min == 23
    lo, hi = r.alpha_interval
    assert lo > hi


def test_choose_params_no_privacy_target():
    r = pv.choose_params(0.1, math.inf, 0.5, 3, 63, 1.0, 4)
    assert r.feasible and r.reason == "no privacy target"
    t = pv.tradeoff_terms(0.1, math.inf, 0.5, 3, 63, 1.0, 4, r.w_min)
    assert t.alpha_hi == pytest.approx(math.expm1(1.0 / 8))
    assert pv.choose_params(0.1, math.inf, 0.5, 3, 63, 1.0, 4, "literal").reason == "bandwidth bound is infinite"


def test_tighter_error_target_raises_bandwidth():
    ws = [pv.choose_params(e, math.inf, 0.5, 3, 63, 1.0, 4).w_min for e in (0.5, 0.1, 0.01, 0.001)]
    assert ws == sorted(ws) and ws[0] < ws[-1]


def test_choose_params_validation():
    with pytest.raises(ValidationError):
        pv.choose_params(0.0, 1, 1, 1, 1, 1, 1)
    with pytest.raises(ValidationError):
        pv.choose_params(1, 1, 1, 1, 1, 1, 1, "loose")


def test_tradeoff_direction():
    alphas = np.linspace(0.05, 0.9, 12)
    deltas = [pv.delta_value(0.01, a, 1.0, 10) for a in alphas]
    mses = [pv.worst_case_mse_bound(a, 10, 4, [1.0] * 3, [63.0, 25.0, 1.0]) for a in alphas]
    assert np.all(np.diff(deltas) > 0) and np.all(np.diff(mses) < 0)
