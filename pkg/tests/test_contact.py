import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from omnikit.contact import (
    ComplianceTracker, EmaState, SideClassifier, Wrench, admittance_velocity, contact_offset, descent_velocity,
    ema_wrench, rate_limit, shift_torque_to_ee,
)
from omnikit.errors import InsufficientNormalForce

vec = st.lists(st.floats(-50, 50), min_size=3, max_size=3)


def test_torque_shift_worked_example():
    w = Wrench((0, 0, -10), (0, 0, 0))
    assert shift_torque_to_ee(w, (0.1, 0, 0)).tolist() == [0.0, -1.0, 0.0]


def test_torque_shift_zero_lever_and_parallel_force():
    w = Wrench((1, 2, 3), (0.4, 0.5, 0.6))
    assert shift_torque_to_ee(w, (0, 0, 0)).tolist() == [0.4, 0.5, 0.6]
    assert shift_torque_to_ee(w, (2, 4, 6)).tolist() == [0.4, 0.5, 0.6]


@given(vec, vec, vec)
def test_torque_shift_antisymmetric_in_lever(f, t, r):
    w = Wrench(f, t)
    plus = shift_torque_to_ee(w, r) - np.asarray(t)
    minus = shift_torque_to_ee(w, -np.asarray(r)) - np.asarray(t)
    assert np.allclose(plus, -minus, atol=1e-9)


def test_wrench_rejects_nan():
    with pytest.raises(ValueError):
        Wrench((math.nan, 0, 0))


def test_ema_step_sequence():
    s = EmaState()
    out = [ema_wrench(s, Wrench((10, 0, 0)), Wrench(), 0.2).force[0] for _ in range(3)]
    # hand iteration of f <- 0.2 * 10 + 0.8 * f
    assert out == pytest.approx([2.0, 3.6, 4.88], abs=1e-12)


def test_ema_baseline_and_unit_alpha():
    s = EmaState()
    base = Wrench((1, 2, 3), (4, 5, 6))
    for _ in range(5):
        assert ema_wrench(s, base, base, 0.3).vector().tolist() == [0.0] * 6
    s = EmaState(np.full(6, 9.0))
    assert ema_wrench(s, Wrench((3, 3, 3), (1, 1, 1)), base, 1.0).vector().tolist() == [2, 1, 0, -3, -4, -5]
    with pytest.raises(ValueError):
        ema_wrench(s, base, base, 0.0)


def test_contact_offset():
    assert contact_offset((0, 0, -10), (0, 0.1, 0)) == pytest.approx((-0.01, 0.0))
    assert contact_offset((0, 0, -10), (0, 0, 0)) == (0.0, 0.0)
    with pytest.raises(InsufficientNormalForce):
        contact_offset((0, 0, -1), (0.1, 0, 0))


def test_descent_profile():
    assert descent_velocity(0.0, 0.05, 0.5, 2.0, 0.4) == 0.0
    assert descent_velocity(0.25, 0.05, 0.5, 2.0, 0.4) == pytest.approx(-0.025)
    assert descent_velocity(1.0, 0.05, 0.5, 2.0, 0.4) == -0.05
    assert descent_velocity(2.4, 0.05, 0.5, 2.0, 0.4) == pytest.approx(0.0, abs=1e-15)
    assert descent_velocity(3.0, 0.05, 0.5, 2.0, 0.4) == 0.0


@given(st.floats(0.01, 1), st.floats(0.1, 1), st.floats(0.1, 1))
def test_descent_continuous_at_ramp_out(v_d, t_acc, t_dec):
    t_s = t_acc + 0.5
    left = descent_velocity(t_s - 1e-9, v_d, t_acc, t_s, t_dec)
    assert left == pytest.approx(descent_velocity(t_s, v_d, t_acc, t_s, t_dec), abs=1e-6)


def test_admittance_examples():
    assert admittance_velocity(1.0, 0.01, 0.01, 1.0, 3.0) == pytest.approx(0.01)
    assert admittance_velocity(5.0, 0.0, 0.01, 1.0, 3.0) == -0.02
    assert admittance_velocity(-5.0, 0.0, 0.01, 1.0, 3.0) == 0.02


@given(st.floats(-100, 100), st.floats(-1, 1))
def test_admittance_capped(F, e):
    assert abs(admittance_velocity(F, e, 0.05, 2.0, 3.0)) <= 0.02


def test_admittance_jump_at_deadband():
    # the law switches branch exactly at the threshold
    at = admittance_velocity(3.0, 0.01, 0.001, 1.0, 3.0)
    above = admittance_velocity(3.0 + 1e-9, 0.01, 0.001, 1.0, 3.0)
    assert at == pytest.approx(0.01) and above == pytest.approx(-0.003)


def test_rate_limit_examples():
    assert rate_limit([0.3], [0.3], 1.0, 0.001).tolist() == [0.3]
    assert rate_limit([1.0], [0.0], 1.0, 0.001).tolist() == [0.001]


@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from([0.5, 1.0, 2.0]))
def test_rate_limit_convergence_steps(v0, v1, a_lim):
    dt = 0.01
    v, n = np.array([v0]), 0
    while v[0] != v1:
        nxt = rate_limit([v1], v, a_lim, dt)
        assert abs(nxt[0] - v[0]) <= a_lim * dt + 1e-15
        v, n = nxt, n + 1
        assert n < 10_000
    assert n <= math.ceil(abs(v1 - v0) / (a_lim * dt)) + 1


def test_rate_limit_idempotent_when_close():
    v = rate_limit([0.1005], [0.1], 1.0, 0.001)
    assert v.tolist() == [0.1005]
    assert rate_limit([0.1005], v, 1.0, 0.001).tolist() == [0.1005]


def test_side_hysteresis():
    s = SideClassifier()
    assert s.update(0.01) == "left"
    for _ in range(4):
        assert s.update(-0.01) == "left"
    assert s.update(-0.01) == "right"
    s.update(0.01)
    s.update(-0.01)      # interruption resets the count
    for _ in range(4):
        assert s.update(0.01) == "right"


def test_compliance_exit():
    c = ComplianceTracker()
    steps = 0
    while c.step(2.0 ** -6, 0.125):
        steps += 1
    # 2^-9 m per step, exact in binary: 25 steps stay under 0.05, the 26th leaves
    assert steps == 25 and c.displacement == 26 * 2.0 ** -9
    assert not c.step(2.0 ** -6, 0.125)
