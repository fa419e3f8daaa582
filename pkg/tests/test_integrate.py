import math

import numpy as np
import pytest
from numba import njit

from lksim.integrate import (FreezeRule, IntegrationError, IntegratorSettings,
                             integrate, integrate_with_freeze, output_grid)


@njit(cache=True)
def _decay(t, y, args):
    return -args[0] * y


@njit(cache=True)
def _oscillator(t, y, args):
    out = np.empty(2)
    out[0] = y[1]
    out[1] = -y[0]
    return out


@njit(cache=True)
def _blowup(t, y, args):
    return y * y


@njit(cache=True)
def _drain(t, y, args):
    # two tanks draining at constant rates; the third component follows the first
    out = np.empty(3)
    out[0] = -1.0
    out[1] = -0.25
    out[2] = 2.0
    return out


def test_exponential_decay():
    tr = integrate(_decay, [1.0], 1.0, IntegratorSettings(rel_tol=1e-9, abs_tol=1e-12),
                   args=(1.0,))
    assert tr.status == "completed"
    assert abs(tr.final[0] - math.exp(-1.0)) < 1e-8


def test_python_and_compiled_routes_agree():
    s = IntegratorSettings(rel_tol=1e-9, abs_tol=1e-12, output_samples=11)
    a = integrate(_decay, [1.0], 2.0, s, args=(0.7,))
    b = integrate(lambda t, y, args: -args[0] * y, [1.0], 2.0, s, args=(0.7,))
    np.testing.assert_array_equal(a.states, b.states)
    assert a.stats == b.stats


def test_harmonic_energy_drift():
    t_final = 100 * 2 * math.pi
    tr = integrate(_oscillator, [1.0, 0.0], t_final,
                   IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12))
    energy = 0.5 * (tr.states[:, 0] ** 2 + tr.states[:, 1] ** 2)
    assert np.max(np.abs(energy - 0.5)) < 1e-6
    assert abs(tr.final[0] - 1.0) < 1e-6


def test_trajectory_time_grid():
    tr = integrate(_decay, [1.0], 3.0, IntegratorSettings(output_samples=50), args=(1.0,))
    assert tr.times[0] == 0.0 and tr.times[-1] == 3.0
    assert np.all(np.diff(tr.times) > 0)
    assert tr.states.shape == (50, 1)
    np.testing.assert_allclose(tr.times, output_grid(3.0, 50))


def test_dense_output_matches_reintegration():
    s = IntegratorSettings(rel_tol=1e-8, abs_tol=1e-12, output_samples=37)
    tr = integrate(_oscillator, [1.0, 0.0], 20.0, s)
    for k in (5, 17, 29):
        t_k = tr.times[k]
        direct = integrate(_oscillator, [1.0, 0.0], t_k, s).final
        np.testing.assert_allclose(tr.states[k], direct, rtol=0, atol=10 * s.rel_tol)


def test_self_convergence():
    coarse = IntegratorSettings(rel_tol=1e-7, abs_tol=1e-9)
    fine = IntegratorSettings(rel_tol=5e-8, abs_tol=5e-10)
    a = integrate(_oscillator, [1.0, 0.0], 10.0, coarse).final
    b = integrate(_oscillator, [1.0, 0.0], 10.0, fine).final
    assert np.max(np.abs(a - b)) < coarse.rel_tol


def test_deterministic():
    a = integrate(_oscillator, [0.3, -0.2], 50.0)
    b = integrate(_oscillator, [0.3, -0.2], 50.0)
    np.testing.assert_array_equal(a.states, b.states)


def test_max_steps_status():
    tr = integrate(_oscillator, [1.0, 0.0], 1000.0, IntegratorSettings(max_steps=10))
    assert tr.status == "max_steps"
    assert tr.t_end < 1000.0 and not tr.completed
    assert tr.times[-1] == tr.t_end


def test_step_underflow_on_blowup():
    tr = integrate(_blowup, [1.0], 2.0, IntegratorSettings(h_min=1e-6))
    assert tr.status == "step_underflow"
    assert tr.t_end < 1.0 + 1e-3


@pytest.mark.parametrize("kwargs", [dict(rel_tol=0.0), dict(abs_tol=-1.0),
                                    dict(h_min=1.0, h_max=0.5), dict(output_samples=1),
                                    dict(h_init=1e-20)])
def test_settings_validation(kwargs):
    with pytest.raises(IntegrationError):
        integrate(_decay, [1.0], 1.0, IntegratorSettings(**kwargs), args=(1.0,))


def test_rejects_nonpositive_horizon():
    with pytest.raises(IntegrationError):
        integrate(_decay, [1.0], 0.0, args=(1.0,))


# -- freezing --------------------------------------------------------------------------------

def _drain_rule(stop=False):
    return FreezeRule(watch=np.array([0, 1]), level=0.0, link=np.array([2, -1]),
                      group=np.array([0, 1]), snap=0.0, stop_when_group_frozen=stop)


def test_frozen_component_is_constant_afterwards():
    s = IntegratorSettings(output_samples=101)
    tr = integrate_with_freeze(_drain, _drain_rule(), [1.0, 2.0, 0.0], 5.0, s)
    assert tr.status == "completed"
    after = tr.times > 1.0 + 1e-9
    # watched component latched at its snap value, linked component held
    np.testing.assert_array_equal(tr.states[after, 0], 0.0)
    assert np.ptp(tr.states[after, 2]) == 0.0
    assert abs(tr.states[after, 2][0] - 2.0) < 1e-8
    # the unwatched drain keeps going until it reaches zero at t = 8 > 5
    np.testing.assert_allclose(tr.final[1], 2.0 - 0.25 * 5.0, atol=1e-9)
    assert tr.frozen[0] and tr.frozen[2] and not tr.frozen[1]


def test_no_freeze_matches_plain_integration_bitwise():
    s = IntegratorSettings(output_samples=64)
    rule = FreezeRule(watch=np.array([0]), level=-10.0)
    a = integrate_with_freeze(_oscillator, rule, [1.0, 0.0], 30.0, s)
    b = integrate(_oscillator, [1.0, 0.0], 30.0, s)
    np.testing.assert_array_equal(a.states, b.states)
    assert a.stats == b.stats


def test_stop_when_group_frozen():
    tr = integrate_with_freeze(_drain, _drain_rule(stop=True), [1.0, 2.0, 0.0], 5.0)
    assert tr.status == "extinct" and tr.completed
    assert abs(tr.t_end - 1.0) < 1e-9
    assert tr.times[-1] == tr.t_end


def test_freeze_crossing_lands_within_tolerance():
    s = IntegratorSettings(abs_tol=1e-10)
    tr = integrate_with_freeze(_drain, _drain_rule(stop=True), [0.7, 2.0, 0.0], 5.0, s)
    # the step that froze component 0 ended within abs_tol of the level
    assert abs(tr.t_end - 0.7) <= 2e-10


def test_freeze_index_validation():
    rule = FreezeRule(watch=np.array([5]), level=0.0)
    with pytest.raises(IntegrationError):
        integrate_with_freeze(_drain, rule, [1.0, 2.0, 0.0], 1.0)
