import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limbsim.actuator import (
    ActuatorParams,
    ActuatorState,
    InputMode,
    calibrate_current_model,
    current_for_load,
    make_trapezoid,
    sample_trapezoid,
    static_deflection,
    step_actuator,
)
from limbsim.errors import DegenerateFitError, DomainError, OverloadError, StateCorruptionError

PARAMS = ActuatorParams()


# --- current model ---------------------------------------------------------


def test_current_model_hits_both_calibration_points():
    assert current_for_load(13.5, PARAMS) == pytest.approx(2.0, abs=1e-9)
    assert current_for_load(73.0, PARAMS) == pytest.approx(8.0, abs=1e-9)


def test_current_model_interpolates_between_points():
    # affine fit: c1 = 6/59.5, c0 = 2 - 13.5*c1
    c1 = 6.0 / 59.5
    c0 = 2.0 - 13.5 * c1
    assert current_for_load(33.5, PARAMS) == pytest.approx(c0 + c1 * 33.5, abs=1e-12)
    assert current_for_load(33.5, PARAMS) == pytest.approx(4.017, abs=1e-3)


def test_current_model_monotone_over_full_range():
    loads = np.linspace(0.0, PARAMS.peak_torque, 500)
    currents = [current_for_load(t, PARAMS) for t in loads]
    assert all(b > a for a, b in zip(currents, currents[1:]))


def test_current_model_rejects_out_of_range_loads():
    with pytest.raises(OverloadError):
        current_for_load(PARAMS.peak_torque + 1.0, PARAMS)
    with pytest.raises(DomainError):
        current_for_load(-1.0, PARAMS)


def test_calibrate_current_model_two_point_fit():
    c0, c1 = calibrate_current_model((13.5, 2.0), (73.0, 8.0))
    assert c0 == pytest.approx(0.6386554621848739, abs=1e-12)
    assert c1 == pytest.approx(0.10084033613445378, abs=1e-12)
    # exact pass through both points
    assert c0 + c1 * 13.5 == pytest.approx(2.0, abs=1e-12)
    assert c0 + c1 * 73.0 == pytest.approx(8.0, abs=1e-12)


def test_calibrate_current_model_trivial_and_degenerate():
    assert calibrate_current_model((0.0, 0.0), (1.0, 1.0)) == (0.0, 1.0)
    with pytest.raises(DegenerateFitError):
        calibrate_current_model((10.0, 2.0), (10.0, 3.0))


# --- compliance ------------------------------------------------------------


def test_static_deflection_zero_and_calibrated_point():
    assert static_deflection(0.0, PARAMS) == 0.0
    assert static_deflection(44.1, PARAMS) == pytest.approx(0.05, abs=1e-12)
    assert static_deflection(22.05, PARAMS) == pytest.approx(0.025, abs=1e-12)


def test_static_deflection_overload():
    with pytest.raises(OverloadError):
        static_deflection(124.0, PARAMS)


# --- trapezoid planning ----------------------------------------------------


def test_trapezoid_zero_distance():
    prof = make_trapezoid(0.3, 0.3, 0.4333, 1.0)
    assert prof.duration == 0.0
    for t in (0.0, 0.5, 100.0):
        assert sample_trapezoid(prof, t) == (0.3, 0.0)


def test_trapezoid_long_move_matches_closed_form():
    v = 26.0 / 60.0
    prof = make_trapezoid(0.0, 1.0, v, 1.0)
    assert prof.t_cruise > 0
    assert prof.duration == pytest.approx(1.0 / v + v / 1.0, abs=1e-12)
    assert prof.duration == pytest.approx(2.741025641025641, abs=1e-9)


def test_triangle_short_move_matches_closed_form():
    v = 26.0 / 60.0
    prof = make_trapezoid(0.0, 0.1, v, 1.0)
    assert prof.t_cruise == 0.0
    assert prof.v_cruise == pytest.approx(math.sqrt(0.1), abs=1e-12)
    assert prof.duration == pytest.approx(2.0 * math.sqrt(0.1), abs=1e-12)


def test_sample_trapezoid_boundaries():
    v = 26.0 / 60.0
    prof = make_trapezoid(0.0, 1.0, v, 1.0)
    pos0, vel0 = sample_trapezoid(prof, 0.0)
    assert (pos0, vel0) == (0.0, 0.0)
    pos_a, vel_a = sample_trapezoid(prof, prof.t_accel)
    assert pos_a == pytest.approx(0.5 * 1.0 * prof.t_accel**2, abs=1e-12)
    assert vel_a == pytest.approx(v, abs=1e-12)
    pos_inf, vel_inf = sample_trapezoid(prof, 1e9)
    assert (pos_inf, vel_inf) == (1.0, 0.0)


def test_sample_trapezoid_end_position_exact():
    for goal in (1.0, -0.7, 0.05, -0.003):
        prof = make_trapezoid(0.1, 0.1 + goal, 0.4333, 1.3)
        pos, vel = sample_trapezoid(prof, prof.duration)
        assert abs(pos - prof.goal) < 1e-9
        assert vel == 0.0


@given(
    start=st.floats(-5, 5),
    delta=st.floats(-3, 3),
    v_max=st.floats(0.05, 2.0),
    a_max=st.floats(0.1, 5.0),
)
@settings(max_examples=200, deadline=None)
def test_trapezoid_velocity_integral_reproduces_distance(start, delta, v_max, a_max):
    """Quadrature oracle: integrating sampled velocity recovers goal - start."""
    prof = make_trapezoid(start, start + delta, v_max, a_max)
    if prof.duration == 0.0:
        return
    ts = np.linspace(0.0, prof.duration, 4001)
    # include the exact segment breakpoints so the trapezoid rule is exact
    ts = np.unique(np.concatenate([ts, [prof.t_accel, prof.t_accel + prof.t_cruise]]))
    vels = np.array([sample_trapezoid(prof, t)[1] for t in ts])
    integral = np.trapezoid(vels, ts)
    assert integral == pytest.approx(delta, abs=1e-6)


@given(
    delta=st.floats(-3, 3),
    v_max=st.floats(0.05, 2.0),
    a_max=st.floats(0.1, 5.0),
    frac=st.floats(0, 1.5),
)
@settings(max_examples=200, deadline=None)
def test_trapezoid_velocity_never_exceeds_cruise(delta, v_max, a_max, frac):
    prof = make_trapezoid(0.0, delta, v_max, a_max)
    _, vel = sample_trapezoid(prof, frac * (prof.duration or 1.0))
    assert abs(vel) <= prof.v_cruise + 1e-12
    assert prof.v_cruise <= v_max + 1e-12


# --- stepping --------------------------------------------------------------


def run_steps(state, params, n, load=0.0):
    dt = params.tick
    trace = []
    for _ in range(n):
        state = step_actuator(state, params, dt, load)
        trace.append(state)
    return state, trace


def test_zero_command_zero_load_is_fixed_point():
    state = ActuatorState.at_rest(PARAMS, position=0.25)
    stepped = step_actuator(state, PARAMS, PARAMS.tick, 0.0)
    assert stepped == state


def test_step_rejects_bad_inputs():
    state = ActuatorState.at_rest(PARAMS)
    with pytest.raises(StateCorruptionError):
        step_actuator(state, PARAMS, PARAMS.tick, float("nan"))
    with pytest.raises(DomainError):
        step_actuator(state, PARAMS, 0.0)
    with pytest.raises(DomainError):
        step_actuator(state, PARAMS, 10.0 / PARAMS.loop_rate)
    with pytest.raises(OverloadError):
        step_actuator(state, PARAMS, PARAMS.tick, PARAMS.peak_torque * 2)


def peak_velocity_for_mode(mode, step=0.5, seconds=6.0):
    state = ActuatorState.at_rest(PARAMS, position=0.0, mode=mode).with_command(step, mode, PARAMS)
    _, trace = run_steps(state, PARAMS, int(seconds / PARAMS.tick))
    return max(abs(s.velocity) for s in trace), trace


def test_input_mode_peak_velocity_ordering():
    peak_pass, _ = peak_velocity_for_mode(InputMode.PASSTHROUGH)
    peak_filter, _ = peak_velocity_for_mode(InputMode.POSITION_FILTER)
    peak_trap, _ = peak_velocity_for_mode(InputMode.TRAPEZOIDAL)
    assert peak_pass >= peak_filter - 1e-12
    assert peak_pass >= peak_trap - 1e-12


def test_velocity_clamped_in_every_mode():
    for mode in InputMode:
        _, trace = peak_velocity_for_mode(mode, step=2.0, seconds=8.0)
        assert all(abs(s.velocity) <= PARAMS.output_speed_limit + 1e-12 for s in trace)


def test_trapezoidal_settles_without_overshoot():
    step = 0.5
    state = ActuatorState.at_rest(PARAMS).with_command(step, InputMode.TRAPEZOIDAL, PARAMS)
    profile_time = state.active_profile.duration
    budget_ticks = int(math.ceil(profile_time / PARAMS.tick)) + 5
    final, trace = run_steps(state, PARAMS, budget_ticks)
    assert abs(final.position - step) <= 1e-3 * step
    overshoot = max((s.position - step) for s in trace)
    assert overshoot <= 1e-3 * step


def test_trapezoidal_response_monotone_between_setpoints():
    # monotone within the 0.1%-of-step band: never backtracks below the
    # running peak by more than the overshoot budget
    step = 0.5
    state = ActuatorState.at_rest(PARAMS).with_command(step, InputMode.TRAPEZOIDAL, PARAMS)
    _, trace = run_steps(state, PARAMS, int(4.0 / PARAMS.tick))
    band = 1e-3 * step
    peak = -math.inf
    for s in trace:
        assert s.position >= peak - band
        assert s.position <= step + band
        peak = max(peak, s.position)


@given(step=st.floats(0.05, 2.0))
@settings(max_examples=20, deadline=None)
def test_passthrough_peak_dominates_other_modes(step):
    peaks = {}
    for mode in InputMode:
        state = ActuatorState.at_rest(PARAMS, mode=mode).with_command(step, mode, PARAMS)
        _, trace = run_steps(state, PARAMS, int(7.0 / PARAMS.tick))
        peaks[mode] = max(abs(s.velocity) for s in trace)
    assert peaks[InputMode.PASSTHROUGH] >= peaks[InputMode.POSITION_FILTER] - 1e-12
    assert peaks[InputMode.PASSTHROUGH] >= peaks[InputMode.TRAPEZOIDAL] - 1e-12


def test_static_hold_deviation_matches_compliance_model():
    load = 44.1
    state = ActuatorState.at_rest(PARAMS, position=0.0)
    final, _ = run_steps(state, PARAMS, int(3.0 / PARAMS.tick), load=load)
    deviation = abs(final.setpoint - final.position)
    assert deviation == pytest.approx(static_deflection(load, PARAMS), abs=1e-6)
    assert deviation == pytest.approx(0.05, abs=1e-6)
    # holding current matches the calibrated model
    assert final.current == pytest.approx(current_for_load(load, PARAMS), abs=1e-6)


@given(load=st.floats(0.0, 123.0))
@settings(max_examples=30, deadline=None)
def test_static_hold_deviation_bounded_by_prediction(load):
    state = ActuatorState.at_rest(PARAMS)
    final, trace = run_steps(state, PARAMS, int(2.0 / PARAMS.tick), load=load)
    assert abs(final.setpoint - final.position) <= static_deflection(load, PARAMS) + 1e-9
    assert all(abs(s.current) <= PARAMS.peak_current + 1e-9 for s in trace)
    assert all(abs(s.velocity) <= PARAMS.output_speed_limit + 1e-12 for s in trace)
