"""Single-joint actuator simulation.

Models one geared joint drive as a cascaded position/velocity loop running at
a fixed control rate, with three setpoint-shaping input modes (passthrough,
critically damped position filter, trapezoidal trajectory), an affine
load-to-current model calibrated from bench data, and linear output
compliance under static load.

All positions/velocities are in output revolutions (rev, rev/s); torques in
Nm at the output shaft; currents in A on the motor bus.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .errors import DegenerateFitError, DomainError, OverloadError, StateCorruptionError

TWO_PI = 2.0 * math.pi

# Bench calibration: holding current at 13.5 Nm and 73 Nm static loads.
_CAL_LOW = (13.5, 2.0)
_CAL_HIGH = (73.0, 8.0)
CURRENT_SLOPE_DEFAULT = (_CAL_HIGH[1] - _CAL_LOW[1]) / (_CAL_HIGH[0] - _CAL_LOW[0])
CURRENT_OFFSET_DEFAULT = _CAL_LOW[1] - CURRENT_SLOPE_DEFAULT * _CAL_LOW[0]

# Output compliance: 0.05 rev observed at the 44.1 Nm static hold.
OUTPUT_STIFFNESS_DEFAULT = 44.1 / (0.05 * TWO_PI)  # Nm/rad

# Closed-loop shaping, expressed rate-independently so the step-response
# shape survives a change of loop_rate.
_POSITION_GAIN = 10.0  # 1/s, outer P loop
_VELOCITY_TC = 0.01  # s, inner loop time constant
_INTEGRAL_TC = 0.1  # s, inner loop integral time


class InputMode(enum.Enum):
    PASSTHROUGH = "passthrough"
    POSITION_FILTER = "position_filter"
    TRAPEZOIDAL = "trapezoidal"


@dataclass(frozen=True)
class ActuatorParams:
    """Static drive parameters; defaults follow the bench-calibrated unit."""

    gear_ratio: float = 160.0
    rated_torque: float = 47.0  # Nm
    peak_torque: float = 123.0  # Nm
    motor_peak_torque: float = 5.8  # Nm, motor side
    output_speed_limit: float = 26.0 / 60.0  # rev/s (26 rpm)
    current_offset: float = CURRENT_OFFSET_DEFAULT  # A
    current_slope: float = CURRENT_SLOPE_DEFAULT  # A/Nm
    output_stiffness: float = OUTPUT_STIFFNESS_DEFAULT  # Nm/rad
    loop_rate: float = 1000.0  # Hz
    accel_limit: float = 1.0  # rev/s^2 at peak torque
    filter_bandwidth: float = 0.5  # Hz, position-filter mode

    def __post_init__(self):
        if self.gear_ratio <= 0:
            raise DomainError("gear_ratio must be positive")
        if not (self.peak_torque >= self.rated_torque > 0):
            raise DomainError("need peak_torque >= rated_torque > 0")
        if self.motor_peak_torque * self.gear_ratio < self.peak_torque:
            raise DomainError("motor torque through the gear must cover peak_torque")
        if self.current_slope <= 0 or self.output_stiffness <= 0:
            raise DomainError("current_slope and output_stiffness must be positive")
        if self.output_speed_limit <= 0:
            raise DomainError("output_speed_limit must be positive")
        if self.loop_rate <= 0 or self.accel_limit <= 0 or self.filter_bandwidth <= 0:
            raise DomainError("loop_rate, accel_limit, filter_bandwidth must be positive")

    @property
    def tick(self) -> float:
        return 1.0 / self.loop_rate

    @property
    def peak_current(self) -> float:
        """Current implied by peak torque through the affine load model."""
        return self.current_offset + self.current_slope * self.peak_torque


def calibrate_current_model(
    point_a: Tuple[float, float], point_b: Tuple[float, float]
) -> Tuple[float, float]:
    """Fit current = c0 + c1 * torque exactly through two (Nm, A) points."""
    ta, ia = point_a
    tb, ib = point_b
    if ta == tb:
        raise DegenerateFitError(f"calibration torques must differ (both {ta} Nm)")
    c1 = (ib - ia) / (tb - ta)
    c0 = ia - c1 * ta
    return c0, c1


def current_for_load(torque: float, params: ActuatorParams) -> float:
    """Steady holding current for a static load torque."""
    if torque < 0:
        raise DomainError(f"load torque must be non-negative, got {torque}")
    if torque > params.peak_torque:
        raise OverloadError(f"{torque} Nm exceeds peak torque {params.peak_torque} Nm")
    return params.current_offset + params.current_slope * torque


def static_deflection(torque: float, params: ActuatorParams) -> float:
    """Output deflection (rev) under a static load, linear compliance."""
    if torque < 0:
        raise DomainError(f"load torque must be non-negative, got {torque}")
    if torque > params.peak_torque:
        raise OverloadError(f"{torque} Nm exceeds peak torque {params.peak_torque} Nm")
    return torque / (params.output_stiffness * TWO_PI)


# --- trapezoidal trajectory ----------------------------------------------


@dataclass(frozen=True)
class TrapezoidalProfile:
    start: float  # rev
    goal: float  # rev
    v_cruise: float  # rev/s, magnitude
    a_up: float  # rev/s^2, magnitude
    a_down: float  # rev/s^2, magnitude
    t_accel: float  # s
    t_cruise: float  # s
    t_decel: float  # s

    @property
    def duration(self) -> float:
        return self.t_accel + self.t_cruise + self.t_decel

    @property
    def direction(self) -> float:
        delta = self.goal - self.start
        return math.copysign(1.0, delta) if delta != 0.0 else 0.0


def make_trapezoid(start: float, goal: float, v_max: float, a_max: float) -> TrapezoidalProfile:
    """Plan a rest-to-rest profile; degenerates to a triangle for short moves."""
    if v_max <= 0 or a_max <= 0:
        raise DomainError("v_max and a_max must be positive")
    dist = abs(goal - start)
    if dist == 0.0:
        return TrapezoidalProfile(start, goal, 0.0, a_max, a_max, 0.0, 0.0, 0.0)
    if dist >= v_max * v_max / a_max:
        t_ramp = v_max / a_max
        t_cruise = (dist - v_max * v_max / a_max) / v_max
        return TrapezoidalProfile(start, goal, v_max, a_max, a_max, t_ramp, t_cruise, t_ramp)
    v_peak = math.sqrt(a_max * dist)
    t_ramp = math.sqrt(dist / a_max)
    return TrapezoidalProfile(start, goal, v_peak, a_max, a_max, t_ramp, 0.0, t_ramp)


def sample_trapezoid(profile: TrapezoidalProfile, t: float) -> Tuple[float, float]:
    """Position and velocity at time t; clamps to (goal, 0) past the end."""
    if t < 0:
        raise DomainError("sample time must be non-negative")
    sign = profile.direction
    if sign == 0.0 or t >= profile.duration:
        return profile.goal, 0.0
    if t < profile.t_accel:
        return (
            profile.start + sign * 0.5 * profile.a_up * t * t,
            sign * profile.a_up * t,
        )
    if t < profile.t_accel + profile.t_cruise:
        d_up = 0.5 * profile.a_up * profile.t_accel * profile.t_accel
        return (
            profile.start + sign * (d_up + profile.v_cruise * (t - profile.t_accel)),
            sign * profile.v_cruise,
        )
    remain = profile.duration - t
    return (
        profile.goal - sign * 0.5 * profile.a_down * remain * remain,
        sign * profile.a_down * remain,
    )


# --- actuator state and stepping -----------------------------------------


@dataclass(frozen=True)
class ActuatorState:
    """One joint's dynamic state.

    ``position`` is the measured output (includes compliance deflection under
    load); ``servo_position`` is the encoder-side controlled variable.
    ``ref_position``/``ref_velocity``/``effort_integral`` are loop-internal.
    """

    position: float = 0.0  # rev, measured output
    velocity: float = 0.0  # rev/s
    current: float = 0.0  # A
    setpoint: float = 0.0  # rev
    input_mode: InputMode = InputMode.TRAPEZOIDAL
    active_profile: Optional[TrapezoidalProfile] = None
    elapsed_in_profile: float = 0.0  # s
    servo_position: float = 0.0  # rev, encoder side
    ref_position: float = 0.0  # rev, shaped reference
    ref_velocity: float = 0.0  # rev/s
    effort_integral: float = 0.0  # rev/s^2 equivalent

    @classmethod
    def at_rest(
        cls,
        params: ActuatorParams,
        position: float = 0.0,
        mode: InputMode = InputMode.TRAPEZOIDAL,
    ) -> "ActuatorState":
        return cls(
            position=position,
            velocity=0.0,
            current=params.current_offset,
            setpoint=position,
            input_mode=mode,
            active_profile=None,
            elapsed_in_profile=0.0,
            servo_position=position,
            ref_position=position,
            ref_velocity=0.0,
            effort_integral=0.0,
        )

    def with_command(
        self,
        target: float,
        mode: InputMode,
        params: ActuatorParams,
        v_max: Optional[float] = None,
        a_max: Optional[float] = None,
    ) -> "ActuatorState":
        """Install a new position command, planning a profile if trapezoidal.

        Profiles are planned rest-to-rest from the current encoder position;
        commanding mid-motion restarts the reference from where the servo is.
        """
        profile = None
        if mode is InputMode.TRAPEZOIDAL:
            profile = make_trapezoid(
                self.servo_position,
                target,
                v_max if v_max is not None else params.output_speed_limit,
                a_max if a_max is not None else params.accel_limit,
            )
        return replace(
            self,
            setpoint=target,
            input_mode=mode,
            active_profile=profile,
            elapsed_in_profile=0.0,
        )


def _clamp(value: float, limit: float) -> float:
    if value > limit:
        return limit
    if value < -limit:
        return -limit
    return value


def step_actuator(
    state: ActuatorState,
    params: ActuatorParams,
    dt: float,
    external_load: float = 0.0,
) -> ActuatorState:
    """Advance one control tick.

    Shapes the setpoint per input mode, runs the cascaded P-position /
    PI-velocity loop with velocity clamped to the output speed limit and
    torque clamped to peak, and reports current as holding bias for the
    external load plus the dynamic effort.
    """
    if not all(map(math.isfinite, (state.position, state.velocity, state.setpoint, dt, external_load))):
        raise StateCorruptionError("non-finite actuator input")
    if dt <= 0 or dt > params.tick * (1.0 + 1e-9):
        raise DomainError(f"dt must be in (0, 1/loop_rate], got {dt}")
    if abs(external_load) > params.peak_torque:
        raise OverloadError(
            f"external load {external_load} Nm exceeds peak torque {params.peak_torque} Nm"
        )

    # Setpoint shaping: advance the reference one tick ahead of the state.
    elapsed = state.elapsed_in_profile
    if state.input_mode is InputMode.PASSTHROUGH:
        ref, ref_vel = state.setpoint, 0.0
    elif state.input_mode is InputMode.POSITION_FILTER:
        # Critically damped second order tracking the raw setpoint.
        omega = TWO_PI * params.filter_bandwidth
        acc = omega * omega * (state.setpoint - state.ref_position) - 2.0 * omega * state.ref_velocity
        ref_vel = state.ref_velocity + acc * dt
        ref = state.ref_position + ref_vel * dt
    else:  # TRAPEZOIDAL
        if state.active_profile is None:
            ref, ref_vel = state.setpoint, 0.0
        else:
            elapsed = elapsed + dt
            ref, ref_vel = sample_trapezoid(state.active_profile, elapsed)

    # Cascaded loops: P position with velocity feedforward, then a PI
    # velocity loop with discrete reference-acceleration feedforward.  The
    # feedback terms compare the state against the reference of the same
    # tick; only the feedforward spans old -> new.
    v_cmd = _clamp(
        state.ref_velocity + _POSITION_GAIN * (state.ref_position - state.servo_position),
        params.output_speed_limit,
    )
    accel_ff = (ref_vel - state.ref_velocity) / dt
    vel_err = v_cmd - state.velocity
    accel_des = accel_ff + vel_err / _VELOCITY_TC + state.effort_integral
    torque_cmd = accel_des * params.peak_torque / params.accel_limit + external_load
    torque_sat = _clamp(torque_cmd, params.peak_torque)
    integral = state.effort_integral
    if torque_sat == torque_cmd:  # anti-windup: hold integral while saturated
        integral = integral + vel_err * dt / (_VELOCITY_TC * _INTEGRAL_TC)

    torque_net = torque_sat - external_load
    accel = torque_net * params.accel_limit / params.peak_torque
    velocity = _clamp(state.velocity + accel * dt, params.output_speed_limit)
    servo = state.servo_position + 0.5 * (state.velocity + velocity) * dt

    # Measured output sags below the servo position by the elastic deflection.
    deflection = external_load / (params.output_stiffness * TWO_PI)
    position = servo - deflection

    current = current_for_load(abs(external_load), params) + params.current_slope * abs(torque_net)
    current = min(current, params.peak_current)

    return replace(
        state,
        position=position,
        velocity=velocity,
        current=current,
        elapsed_in_profile=elapsed,
        servo_position=servo,
        ref_position=ref,
        ref_velocity=ref_vel,
        effort_integral=integral,
    )
