import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_draws
from lifext.dynamics import (
    SocietyParams,
    basic_step,
    critical_wealths,
    extended_step,
    oracle_step,
    regime,
    step,
    tfloor,
)

FIG2 = SocietyParams(1.5, 0.5, 1.0)
FIG2_E = SocietyParams(1.5, 0.5, 1.0, 3.0)
TUNNEL = SocietyParams(2.0, 0.0, 2.0, 3.0)


def rel_close(a, b, tol=1e-12):
    return a == b or abs(a - b) <= tol * max(abs(a), abs(b))


# -- params -------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(gamma=0, alpha=0, child_cost=1),
        dict(gamma=1.5, alpha=-0.1, child_cost=1),
        dict(gamma=1.5, alpha=0, child_cost=0),
        dict(gamma=1.5, alpha=0, child_cost=1, extension_cost=0),
        dict(gamma=float("nan"), alpha=0, child_cost=1),
    ],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        SocietyParams(**kwargs)


def test_nontrivial_condition_warns():
    with pytest.warns(RuntimeWarning, match="m\\* is infinite"):
        SocietyParams(0.7, 0.5, 1.0)


# -- critical wealths ----------------------------------------------------------


def test_critical_wealths_fig2():
    cw = critical_wealths(FIG2_E)
    assert (cw.m_star, cw.m1, cw.m2) == (1.0, 2.0, 6.0)


def test_critical_wealths_tunnel_society():
    cw = critical_wealths(TUNNEL)
    assert cw.m_star == pytest.approx(2 / 3, rel=1e-15)
    assert (cw.m1, cw.m2) == (1.5, 3.0)


def test_critical_wealths_derived_by_regime_scan():
    # Locate the thresholds purely from step behaviour on a fine grid.
    grid = [i * 1e-3 for i in range(1, 10_000)]
    first_child = next(m for m in grid if basic_step(m, TUNNEL).k >= 1)
    first_ext = next(m for m in grid if step(m, TUNNEL).extended)
    first_immortal = next(m for m in grid if step(m, TUNNEL).extended and step(m, TUNNEL).m_prime >= m)
    cw = critical_wealths(TUNNEL)
    assert abs(first_child - cw.m_star) <= 1e-3
    assert abs(first_ext - cw.m1) <= 1e-3
    assert abs(first_immortal - cw.m2) <= 1e-3


def test_critical_wealths_infinite_mstar():
    with pytest.warns(RuntimeWarning):
        p = SocietyParams(0.7, 0.5, 1.0)
    cw = critical_wealths(p)
    assert math.isinf(cw.m_star) and cw.m1 is None and cw.m2 is None


def test_m2_infinite_without_growth():
    cw = critical_wealths(SocietyParams(1.0, 0.0, 1.0, 2.0))
    assert math.isinf(cw.m2) and cw.m1 == 2.0


# -- basic step ----------------------------------------------------------------


def test_basic_step_single_child():
    out = basic_step(1.0, FIG2)
    assert (out.k, out.m_prime, out.extended, out.pension_per_adult) == (1, 1.0, False, 0.5)


def test_basic_step_below_threshold_ends_lineage():
    out = basic_step(0.5, FIG2)
    assert (out.k, out.m_prime) == (0, 0.0)


def test_basic_step_two_children():
    out = basic_step(2.0, SocietyParams(2.0, 0.0, 2.0))
    assert (out.k, out.m_prime) == (2, 2.0)


def test_basic_step_ignores_extension_cost():
    assert basic_step(6.0, FIG2_E) == basic_step(6.0, FIG2)


def test_fig2_map_is_2m_minus_1():
    for i in range(1, 400):
        m = 1 + i * 0.05
        out = basic_step(m, FIG2)
        assert out.k == 1
        assert rel_close(out.m_prime, 2 * m - 1, 1e-14)


def test_negative_wealth_rejected():
    with pytest.raises(ValueError):
        step(-0.1, FIG2)
    with pytest.raises(ValueError):
        oracle_step(float("inf"), FIG2)


# -- extended step -------------------------------------------------------------


def test_extended_immortal_fixed_point():
    out = extended_step(6.0, FIG2_E)
    assert (out.k, out.m_prime, out.extended, out.pension_per_adult) == (0, 6.0, True, 0.0)


def test_extended_barrier_wealth_declines():
    out = extended_step(3.0, FIG2_E)
    assert (out.k, out.m_prime, out.extended) == (0, 1.5, True)
    # no child count keeps wealth
    assert oracle_step(3.0, FIG2_E).k == 0


def test_extended_immortal_with_child():
    out = extended_step(8.0, TUNNEL)
    assert (out.k, out.m_prime, out.extended) == (1, 8.0, True)


def test_extended_requires_extension_cost():
    with pytest.raises(ValueError):
        extended_step(1.0, FIG2)


def test_childless_immortal_map():
    for i in range(0, 200):
        m = 2 + i * 0.1
        out = step(m, FIG2_E)
        assert out.extended and out.k == 0
        assert rel_close(out.m_prime, 1.5 * m - 3, 1e-13) or abs(out.m_prime - (1.5 * m - 3)) < 1e-14


# -- dispatcher ----------------------------------------------------------------


def test_step_below_m1_is_mortal():
    out = step(1.0, TUNNEL)
    assert (out.k, out.m_prime, out.extended) == (1, 2.0, False)


def test_step_at_m1_buys_extension():
    out = step(2.0, FIG2_E)
    assert (out.k, out.m_prime, out.extended) == (0, 0.0, True)


@pytest.mark.parametrize("params", [FIG2, FIG2_E, TUNNEL])
def test_step_at_zero(params):
    out = step(0.0, params)
    assert (out.k, out.m_prime, out.extended) == (0, 0.0, False)


def test_tolerant_floor():
    assert tfloor(2.9999999999999996) == 3
    assert tfloor(2.999999) == 2
    assert tfloor(-0.5) == -1


def test_regime_labels():
    cw = critical_wealths(FIG2_E)
    assert [regime(m, cw) for m in (0.5, 1.0, 2.0, 5.99, 6.0)] == [
        "below_mstar",
        "mortal_fertile",
        "barrier",
        "barrier",
        "immortal",
    ]


# -- oracle --------------------------------------------------------------------


def test_oracle_examples():
    assert (oracle_step(1.0, FIG2).k, oracle_step(1.0, FIG2).m_prime) == (1, 1.0)
    assert (oracle_step(6.0, FIG2_E).k, oracle_step(6.0, FIG2_E).m_prime) == (0, 6.0)
    assert (oracle_step(8.0, TUNNEL).k, oracle_step(8.0, TUNNEL).m_prime) == (1, 8.0)
    assert (oracle_step(2.0, SocietyParams(2.0, 0.0, 2.0)).k) == 2


def test_oracle_agrees_with_step_on_random_draws():
    for m, p in random_draws(5000, seed=7):
        a, b = step(m, p), oracle_step(m, p)
        assert (a.k, a.extended) == (b.k, b.extended), (m, p)
        assert rel_close(a.m_prime, b.m_prime), (m, p)
        assert a.pension_per_adult == b.pension_per_adult


def test_oracle_agrees_at_exact_thresholds():
    for p in (FIG2_E, TUNNEL, SocietyParams(2.5, 0.0, 1.0, 1.0)):
        cw = critical_wealths(p)
        for m in (cw.m_star, cw.m1, cw.m2, 8.0, 1.5):
            a, b = step(m, p), oracle_step(m, p)
            assert (a.k, a.extended) == (b.k, b.extended), (m, p)


params_st = st.builds(
    lambda g, a, c, e, use_e: SocietyParams(g, a, c, e if use_e else None),
    st.floats(1.0001, 4.0),
    st.floats(0.0, 1.0),
    st.floats(0.01, 5.0),
    st.floats(0.01, 10.0),
    st.booleans(),
)


@settings(max_examples=300, deadline=None)
@given(m=st.floats(0.0, 100.0), p=params_st)
def test_properties(m, p):
    out = step(m, p)
    orc = oracle_step(m, p)
    assert (out.k, out.extended) == (orc.k, orc.extended)

    budget = 2 * p.gamma * m
    if out.extended:
        spent = 2 * p.extension_cost + out.k * p.child_cost + (out.k + 2) * out.m_prime
        assert abs(spent - budget) <= 1e-12 * budget
    elif out.k >= 1:
        spent = out.k * p.child_cost + out.k * out.m_prime + 2 * p.alpha * m
        assert abs(spent - budget) <= 1e-12 * budget

    if out.k >= 1:
        assert out.m_prime >= m * (1 - 1e-12)

    assert out.extended == (p.extension_cost is not None and p.gamma * m >= p.extension_cost)

    cw = critical_wealths(p)
    if p.extension_cost is not None:
        in_barrier = cw.m1 <= m < cw.m2
        assert (out.extended and out.m_prime < m) == in_barrier or abs(m - cw.m2) < 1e-9 * cw.m2
        if m >= cw.m2:
            assert out.m_prime >= cw.m2 * (1 - 1e-12)
        gate = p.gamma > 1.5 and m >= (p.child_cost + 2 * p.extension_cost) / (2 * p.gamma - 3)
        if abs(m * (2 * p.gamma - 3) - (p.child_cost + 2 * p.extension_cost)) > 1e-9 * (1 + m):
            assert (out.extended and out.k >= 1) == gate


@settings(max_examples=100, deadline=None)
@given(p=params_st)
def test_children_non_decreasing_within_branches(p):
    cw = critical_wealths(p)
    m1 = math.inf if cw.m1 is None else cw.m1
    prev_mortal = prev_ext = -1
    for i in range(1, 600):
        m = i * 0.1
        out = step(m, p)
        if m < m1:
            assert out.k >= prev_mortal
            prev_mortal = out.k
        else:
            assert out.k >= prev_ext
            prev_ext = out.k


def test_determinism_bit_identical():
    draws = random_draws(200, seed=3)
    a = [step(m, p) for m, p in draws]
    b = [step(m, p) for m, p in draws]
    assert a == b


def test_fertility_gate_example():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert step(7.99, TUNNEL).k == 0
        assert step(8.0, TUNNEL).k == 1
