"""Adaptive dual-camera streaming controller and battery ledger.

The back camera is duty-cycled by a timer with interval w: when the timer
fires the camera streams for exactly w, then turns off and re-arms the timer
w after the off instant (streaming in a single burst amortizes tail energy).
At each off transition the first and last frames of the window are compared;
if their SSIM falls below tau the interval halves (a dynamic scene), else it
grows by a fixed additive step - additive increase, multiplicative decrease.

A motion trigger runs alongside the timer: significant angular speed arms a
"moving" phase, and once the device has stayed still long enough the back
camera starts immediately (sharp frames only) and the timer restarts.

Transitions use exact logical times (on + w, off + w), so a whole run's
action log is a deterministic function of (params, frame stream, IMU stream).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .envmap import Frame

BACK_ON = "back_on"
BACK_OFF = "back_off"
MOTION_TRIGGER = "motion_trigger"
W_UPDATE = "w_update"

IDLE = "idle"
MOVING = "moving"
SETTLING = "settling"


@dataclass(frozen=True)
class PolicyParams:
    w_init_ms: float = 1000.0
    w_min_ms: float = 100.0
    w_max_ms: float = 10_000.0
    delta_ms: float = 500.0       # additive increase step
    tau_ssim: float = 0.90        # window SSIM below this counts as change
    theta_move_dps: float = 20.0  # enter "moving" above this angular speed
    theta_still_dps: float = 5.0  # count as still below this
    t_still_ms: float = 300.0     # stillness dwell before an early capture

    def __post_init__(self):
        if not self.w_min_ms <= self.w_init_ms <= self.w_max_ms:
            raise ValueError("need w_min <= w_init <= w_max")
        if self.w_init_ms <= 33.0:
            raise ValueError("w_init must exceed the 33 ms rendering interval")
        if self.delta_ms <= 0:
            raise ValueError("delta_ms must be positive")
        if not 0.0 < self.tau_ssim <= 1.0:
            raise ValueError("tau_ssim must be in (0, 1]")
        if self.theta_still_dps >= self.theta_move_dps:
            raise ValueError("theta_still must be below theta_move")


@dataclass
class PolicyAction:
    time_ms: float
    event: str
    w_ms: float
    ssim: float | None = None


@dataclass
class PolicyState:
    w_ms: float
    back_on: bool = False
    next_fire_ms: float = 0.0
    stream_until_ms: float = 0.0
    first_back_frame: Frame | None = None
    last_back_frame: Frame | None = None
    motion_phase: str = IDLE
    settle_since_ms: float = 0.0
    last_now_ms: float = float("-inf")

    @classmethod
    def initial(cls, params: PolicyParams, start_ms: float = 0.0) -> "PolicyState":
        # the first window fires immediately to bootstrap the environment map
        return cls(w_ms=params.w_init_ms, next_fire_ms=start_ms)


def change_score(a: Frame, b: Frame) -> dict:
    """{"ssim": float, "psnr_db": float} between two equally sized frames."""
    from . import metrics
    if a.pixels.shape != b.pixels.shape:
        raise ValueError("frames must have identical dimensions")
    return {"ssim": metrics.ssim(a.pixels, b.pixels),
            "psnr_db": metrics.psnr(a.pixels, b.pixels, max_val=1.0)}


def _close_window(state: PolicyState, params: PolicyParams,
                  off_ms: float, actions: list[PolicyAction]) -> None:
    state.back_on = False
    actions.append(PolicyAction(off_ms, BACK_OFF, state.w_ms))
    ssim_val = None
    if state.first_back_frame is not None and state.last_back_frame is not None:
        ssim_val = change_score(state.first_back_frame, state.last_back_frame)["ssim"]
    if ssim_val is not None and ssim_val < params.tau_ssim:
        state.w_ms = max(state.w_ms / 2.0, params.w_min_ms)
    else:
        state.w_ms = min(state.w_ms + params.delta_ms, params.w_max_ms)
    actions.append(PolicyAction(off_ms, W_UPDATE, state.w_ms, ssim=ssim_val))
    state.next_fire_ms = off_ms + state.w_ms
    state.first_back_frame = None
    state.last_back_frame = None


def _open_window(state: PolicyState, on_ms: float, actions: list[PolicyAction]) -> None:
    state.back_on = True
    state.stream_until_ms = on_ms + state.w_ms
    state.first_back_frame = None
    state.last_back_frame = None
    actions.append(PolicyAction(on_ms, BACK_ON, state.w_ms))


def policy_step(state: PolicyState, params: PolicyParams, now_ms: float,
                imu_dps: float, latest_back_frame: Frame | None = None
                ) -> tuple[PolicyState, list[PolicyAction]]:
    """Advance the controller to `now_ms`.

    `latest_back_frame` is the frame captured at this instant while the back
    camera was on (or None). Returns the new state plus the actions emitted,
    in order. Off/on transitions are logged at their exact scheduled times
    even when `now_ms` overshoots them by part of a tick.
    """
    if now_ms < state.last_now_ms:
        raise ValueError(f"time went backwards: {now_ms} < {state.last_now_ms}")
    state = replace(state)
    state.last_now_ms = now_ms
    actions: list[PolicyAction] = []

    # record this tick's captured frame into the open window
    if state.back_on and latest_back_frame is not None:
        if state.first_back_frame is None:
            state.first_back_frame = latest_back_frame
        state.last_back_frame = latest_back_frame

    # close the window at its scheduled end
    if state.back_on and now_ms >= state.stream_until_ms:
        _close_window(state, params, state.stream_until_ms, actions)

    # motion phases: moving -> settling -> (t_still elapsed) -> early capture
    if imu_dps > params.theta_move_dps:
        state.motion_phase = MOVING
    elif state.motion_phase == MOVING and imu_dps < params.theta_still_dps:
        state.motion_phase = SETTLING
        state.settle_since_ms = now_ms
    elif state.motion_phase == SETTLING:
        if imu_dps >= params.theta_still_dps:
            state.motion_phase = MOVING
        elif now_ms - state.settle_since_ms >= params.t_still_ms:
            state.motion_phase = IDLE
            if not state.back_on:
                actions.append(PolicyAction(now_ms, MOTION_TRIGGER, state.w_ms))
                _open_window(state, now_ms, actions)

    # regular timer fire; the logical on time is the scheduled fire time
    if not state.back_on and now_ms >= state.next_fire_ms:
        _open_window(state, state.next_fire_ms, actions)

    return state, actions


# ---------------------------------------------------------------------------
# Energy model and ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyModel:
    """Battery rates in percent per minute plus a per-activation tail cost."""

    idle_pct_per_min: float = 0.1
    front_pct_per_min: float = 0.1
    back_pct_per_min: float = 0.35
    tail_pct_per_activation: float = 0.02

    def __post_init__(self):
        if min(self.idle_pct_per_min, self.front_pct_per_min,
               self.back_pct_per_min, self.tail_pct_per_activation) < 0:
            raise ValueError("energy rates must be non-negative")


@dataclass(frozen=True)
class EnergyLedger:
    front_on_ms: float = 0.0
    back_on_ms: float = 0.0
    back_activations: int = 0
    battery_pct: float = 0.0


def charge(ledger: EnergyLedger, model: EnergyModel, dt_ms: float,
           front_on: bool, back_on: bool, activation_edge: bool = False
           ) -> EnergyLedger:
    """Accrue `dt_ms` of usage onto the ledger."""
    if dt_ms < 0:
        raise ValueError("dt_ms must be >= 0")
    dt_min = dt_ms / 60_000.0
    pct = model.idle_pct_per_min * dt_min
    if front_on:
        pct += model.front_pct_per_min * dt_min
    if back_on:
        pct += model.back_pct_per_min * dt_min
    if activation_edge:
        pct += model.tail_pct_per_activation
    return EnergyLedger(
        front_on_ms=ledger.front_on_ms + (dt_ms if front_on else 0.0),
        back_on_ms=ledger.back_on_ms + (dt_ms if back_on else 0.0),
        back_activations=ledger.back_activations + (1 if activation_edge else 0),
        battery_pct=ledger.battery_pct + pct)


# Measured 10-minute-session battery usage (front minutes, back minutes,
# battery percent); the idle-only session reported "<1%", encoded as 0.5.
BATTERY_TABLE = [
    (0.0, 0.0, 0.5),
    (10.0, 0.0, 2.0),
    (10.0, 1.0, 2.0),
    (10.0, 3.0, 3.0),
    (10.0, 5.0, 4.0),
    (10.0, 7.0, 5.0),
    (10.0, 10.0, 5.0),
]


class RankDeficientError(ValueError):
    """Raised when the calibration table cannot pin down the rate model."""


def fit_energy_model(rows, tail_from_activations: bool = False) -> EnergyModel:
    """Least-squares battery-rate fit.

    Rows are (front_min, back_min, battery_pct) or, with
    `tail_from_activations`, (front_min, back_min, activations, battery_pct).
    The model is battery ~= idle * max(front, back) + front_rate * front
    + back_rate * back [+ tail * activations].

    On the measurement table above, idle and front_rate only appear through
    their sum (the front camera runs for the whole session in every row), so
    the minimum-norm solution splits that sum evenly; predictions are
    unaffected for any session with the front camera always on.
    """
    rows = [tuple(float(x) for x in r) for r in rows]
    if len(rows) < 3:
        raise RankDeficientError(f"need at least 3 rows, got {len(rows)}")
    if tail_from_activations:
        a = np.array([[max(f, b), f, b, n] for f, b, n, _ in rows])
        y = np.array([r[3] for r in rows])
    else:
        a = np.array([[max(f, b), f, b] for f, b, _ in rows])
        y = np.array([r[2] for r in rows])
    coef, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    if rank < 2:
        raise RankDeficientError("calibration table is rank-deficient")
    coef = np.where(np.abs(coef) < 1e-12, 0.0, coef)
    if np.any(coef < 0):
        raise ValueError(f"fit produced negative rates: {coef}")
    tail = float(coef[3]) if tail_from_activations else 0.0
    return EnergyModel(idle_pct_per_min=float(coef[0]),
                       front_pct_per_min=float(coef[1]),
                       back_pct_per_min=float(coef[2]),
                       tail_pct_per_activation=tail)


def predict_battery_pct(model: EnergyModel, front_min: float, back_min: float,
                        activations: int = 0) -> float:
    """Battery percent for a session where the cameras run front_min/back_min
    minutes concurrently (session length = max of the two)."""
    return (model.idle_pct_per_min * max(front_min, back_min)
            + model.front_pct_per_min * front_min
            + model.back_pct_per_min * back_min
            + model.tail_pct_per_activation * activations)
