import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homog_eig.errors import DimensionMismatch
from homog_eig.weights import (PeriodicWeight, TrigTerm, eval_scaled, eval_weight,
                               has_nontrivial_negative_part, has_nontrivial_positive_part,
                               scaled_box_average, weight_stats)

SIN = PeriodicWeight.sine()
STEP = PeriodicWeight.piecewise([1.0, -1.0])


def cell_lookup(values, y):
    """Oracle: index the cell containing frac(y) directly."""
    m = len(values)
    f = y - math.floor(y)
    return values[min(int(f * m), m - 1)]


# -- worked examples -------------------------------------------------------------

def test_eval_examples():
    assert eval_weight(SIN, 0.25) == pytest.approx(1.0, abs=1e-15)
    assert eval_weight(STEP, 0.75) == -1.0
    assert eval_weight(PeriodicWeight.sine(2.0), 1.25) == pytest.approx(3.0, abs=1e-14)


def test_eval_scaled_examples():
    assert eval_scaled(SIN, 0.5, 0.375) == pytest.approx(-1.0, abs=1e-14)
    for x in (0.1, 0.37, 0.9):
        assert eval_scaled(SIN, 1.0, x) == eval_weight(SIN, x)
    # 0.2 / 0.25 = 0.8 lies in the second half cell
    assert eval_scaled(STEP, 0.25, 0.2) == cell_lookup([1.0, -1.0], 0.8) == -1.0


def test_eval_scaled_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        eval_scaled(SIN, 0.0, 0.3)
    with pytest.raises(ValueError):
        eval_scaled(SIN, -1.0, 0.3)


def test_dimension_mismatch():
    w2 = PeriodicWeight.sine(0.0, 1.0, dim=2)
    with pytest.raises(DimensionMismatch):
        w2(np.array([0.1, 0.2, 0.3]))
    with pytest.raises(DimensionMismatch):
        PeriodicWeight.trig(0.0, [TrigTerm(1.0, (1,), "sin")], dim=2)


def test_stats_examples():
    s = weight_stats(SIN, 1024)
    assert s.mean == 0.0 and s.sign_class == "mean-zero"
    s = weight_stats(PeriodicWeight.sine(2.0), 1024)
    assert s.mean == 2.0 and s.sign_class == "mean-positive"
    s = weight_stats(STEP, 16)
    assert (s.mean, s.pos_mass, s.neg_mass) == (0.0, 0.5, 0.5)
    assert weight_stats(PeriodicWeight.sine(-2.0)).sign_class == "mean-negative"
    with pytest.raises(ValueError):
        weight_stats(SIN, 1)


def test_stats_mass_balance():
    for w in (SIN, PeriodicWeight.sine(0.3), PeriodicWeight.piecewise([2, -1, 0.5])):
        s = w.stats()
        assert s.pos_mass >= 0 and s.neg_mass >= 0
        assert s.mean == pytest.approx(s.pos_mass - s.neg_mass, abs=1e-6)
    # sin has ||rho^+||_1 = 1/pi
    # midpoint rule with 1024 points resolves the kinks of rho^+ to about 1e-6
    assert SIN.stats().pos_mass == pytest.approx(1 / math.pi, rel=1e-5)


def test_sign_part_queries():
    assert has_nontrivial_positive_part(SIN)
    assert not has_nontrivial_positive_part(PeriodicWeight.constant(-1.0))
    assert not has_nontrivial_positive_part(PeriodicWeight.sine(-2.0))
    assert has_nontrivial_negative_part(SIN)
    assert not has_nontrivial_negative_part(PeriodicWeight.sine(2.0))


def test_two_dimensional_piecewise_and_trig():
    w = PeriodicWeight.piecewise([[1.0, 2.0], [3.0, 4.0]])
    assert w(np.array([0.1, 0.7])) == 2.0
    assert w(np.array([1.6, -0.2])) == 4.0
    assert w.mean() == 2.5
    t = PeriodicWeight.trig(0.5, [TrigTerm(1.0, (1, 1), "cos")], dim=2)
    assert t(np.array([0.0, 0.0])) == pytest.approx(1.5)
    assert t.mean() == 0.5


def piecewise_interval_integral(values, a, b):
    """Oracle: sum value * overlap over every cell [n + j/m, n + (j+1)/m] meeting [a, b]."""
    m = len(values)
    total = 0.0
    for n in range(math.floor(a) - 1, math.ceil(b) + 1):
        for j, v in enumerate(values):
            lo, hi = max(a, n + j / m), min(b, n + (j + 1) / m)
            if hi > lo:
                total += v * (hi - lo)
    return total


def test_piecewise_box_integral_exact():
    rng = np.random.default_rng(4)
    vals = [1.0, -2.0, 0.5]
    w = PeriodicWeight.piecewise(vals)
    for _ in range(50):
        a, b = np.sort(rng.uniform(-3, 3, 2))
        assert w.box_integral(np.array([a]), np.array([b])) == pytest.approx(
            piecewise_interval_integral(vals, a, b), abs=1e-13)


def test_box_integral_matches_fine_quadrature():
    rng = np.random.default_rng(3)
    ws = [SIN, PeriodicWeight.trig(0.2, [TrigTerm(0.7, (3,), "cos"), TrigTerm(-0.4, (2,), "sin")])]
    for w in ws:
        for _ in range(10):
            a, b = np.sort(rng.uniform(-3, 3, 2))
            x = a + (np.arange(200_000) + 0.5) / 200_000 * (b - a)
            ref = np.mean(w(x)) * (b - a)
            assert w.box_integral(np.array([a]), np.array([b])) == pytest.approx(ref, abs=1e-6)


def test_box_integral_2d():
    w = PeriodicWeight.trig(0.1, [TrigTerm(1.0, (1, 2), "sin")], dim=2)
    lo, hi = np.array([0.1, 0.3]), np.array([0.7, 1.4])
    n = 800
    gx = lo[0] + (np.arange(n) + 0.5) / n * (hi[0] - lo[0])
    gy = lo[1] + (np.arange(n) + 0.5) / n * (hi[1] - lo[1])
    pts = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1)
    ref = w(pts).mean() * np.prod(hi - lo)
    assert w.box_integral(lo, hi) == pytest.approx(ref, abs=1e-6)
    p = PeriodicWeight.piecewise([[1.0, -1.0], [0.0, 2.0]])
    assert p.box_integral(np.array([0.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(0.5)


def test_scaled_box_average_examples():
    assert scaled_box_average(SIN, 1.0, np.array([[0.0]]), np.array([[0.5]]))[0] == \
        pytest.approx(2 / math.pi)
    assert scaled_box_average(STEP, 0.25, np.array([[0.0]]), np.array([[0.25]]))[0] == \
        pytest.approx(0.0, abs=1e-15)


def test_shifted_and_scaled():
    w = SIN.shifted(2.0)
    assert w.kind == "shifted"
    assert w(0.25) == pytest.approx(3.0)
    assert w.linf_bound == 3.0
    assert (-w)(0.25) == pytest.approx(-3.0)
    assert w.scaled(2.0)(0.25) == pytest.approx(6.0)
    assert STEP.shifted(1.0).mean() == 1.0
    assert PeriodicWeight.constant(3.0).is_constant and not SIN.is_constant


@pytest.mark.parametrize("w", [SIN, STEP, SIN.shifted(-0.5),
                               PeriodicWeight.trig(0, [TrigTerm(1.0, (1, 2), "cos")], 2)])
def test_serialization_round_trip(w):
    back = PeriodicWeight.from_dict(w.to_dict())
    x = np.random.default_rng(0).random((50, w.dim))
    assert np.array_equal(back(x), w(x))


def test_from_dict_constant_and_errors():
    c = PeriodicWeight.from_dict({"kind": "constant", "value": 2.5})
    assert c(0.3) == 2.5
    with pytest.raises(ValueError):
        PeriodicWeight.from_dict({"kind": "nope"})


# -- properties --------------------------------------------------------------------

weights = st.sampled_from([SIN, STEP, PeriodicWeight.sine(2.0), PeriodicWeight.piecewise([0.3, -1, 2, 0]),
                           PeriodicWeight.trig(0.1, [TrigTerm(0.5, (3,), "cos"),
                                                     TrigTerm(1.5, (1,), "sin")])])


@settings(max_examples=50, deadline=None)
@given(weights, st.integers(0, 2 ** 31))
def test_periodicity(w, seed):
    x = np.random.default_rng(seed).uniform(-10, 10, 100)
    assert np.max(np.abs(w(x) - w(x + 1.0))) <= 1e-12


def test_periodicity_2d():
    w = PeriodicWeight.trig(0.0, [TrigTerm(1.0, (2, 1), "sin")], dim=2)
    x = np.random.default_rng(1).uniform(-5, 5, (100, 2))
    for e in np.eye(2):
        assert np.max(np.abs(w(x) - w(x + e))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(weights, st.floats(1e-3, 10), st.floats(-5, 5))
def test_scaling_consistency(w, eps, y):
    assert eval_scaled(w, eps, eps * y) == pytest.approx(eval_weight(w, y), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(weights, st.floats(-3, 3))
def test_mean_linearity(w, c):
    assert weight_stats(w.shifted(c)).mean == pytest.approx(weight_stats(w).mean + c, abs=1e-12)


def test_linf_bound_respected():
    x = np.random.default_rng(2).uniform(-4, 4, 10_000)
    for w in [SIN, STEP, PeriodicWeight.sine(-2.0), PeriodicWeight.trig(
            0.1, [TrigTerm(0.5, (3,), "cos"), TrigTerm(1.5, (1,), "sin")])]:
        assert np.max(np.abs(w(x))) <= w.linf_bound
