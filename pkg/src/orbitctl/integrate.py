"""Dormand-Prince 5(4) integrator with PI step-size control and dense output."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["IntegrationError", "Trajectory", "solve", "simulate"]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B_HAT = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B - B_HAT

# Shampine's free 4th-order interpolant: y(t + s h) = y + h * K.T @ (P @ [s, s^2, s^3, s^4])
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

# PI controller constants (Hairer, Norsett & Wanner, DOPRI5)
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


class IntegrationError(RuntimeError):
    """Step-size underflow or non-finite state; ``t_last`` is the last good time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(f"{message} (last good time t={t_last!r})")
        self.t_last = t_last


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    accepted: int
    rejected: int

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _error_norm(err, y0, y1, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(t0 + direction * h0, y0 + direction * h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def solve(rhs: Callable[[float, np.ndarray], np.ndarray], y0: Sequence[float],
          t0: float, t1: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
          t_eval: Sequence[float] | None = None, h0: float | None = None,
          max_steps: int = 1_000_000) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    Without ``t_eval`` the trajectory holds every accepted step; otherwise
    the states at ``t_eval`` (ascending, within ``[t0, t1]``) from the
    dense-output interpolant, with ``t1`` always hit exactly by stepping.
    """
    y = np.array(y0, dtype=float)
    if t1 <= t0:
        raise ValueError("t_end must exceed the initial time")
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite initial state", t0)
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(t_eval) < 0) or (t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t1)):
            raise ValueError("t_eval must be ascending and inside [t0, t1]")

    t = float(t0)
    f = np.asarray(rhs(t, y), dtype=float)
    h = abs(h0) if h0 else _initial_step(rhs, t, y, f, 1.0, rtol, atol)
    K = np.empty((7, y.size))
    out_t, out_y = [], []
    next_eval = 0
    if t_eval is None:
        out_t.append(t)
        out_y.append(y.copy())
    else:
        while next_eval < t_eval.size and t_eval[next_eval] == t:
            out_t.append(t)
            out_y.append(y.copy())
            next_eval += 1

    accepted = rejected = 0
    err_old = 1e-4
    last_rejected = False
    while t < t1:
        if accepted + rejected >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        h_min = 16 * np.spacing(t) if t else 1e-300
        if h < h_min:
            raise IntegrationError("step size underflow", t)
        if t + h >= t1 or t + 1.01 * h >= t1:
            h = t1 - t
        K[0] = f
        for s in range(1, 7):
            K[s] = rhs(t + C[s] * h, y + h * (np.dot(A[s], K[:s])))
        y_new = y + h * (B @ K)
        if not np.all(np.isfinite(y_new)):
            # treat as a failed step and shrink hard
            rejected += 1
            h *= 0.1
            last_rejected = True
            continue
        err = _error_norm(h * (E @ K), y, y_new, rtol, atol)

        if err <= 1.0:
            fac = err ** _EXPO / err_old ** _BETA if err > 0 else 0.0
            fac = min(1 / _FAC_MIN, max(1 / _FAC_MAX, fac / _SAFETY))
            h_next = h / fac
            if last_rejected:
                h_next = min(h_next, h)
            err_old = max(err, 1e-4)
            t_new = t1 if t + h >= t1 else t + h
            # FSAL: the seventh stage is f(t_new, y_new)
            f_new = K[6].copy()
            if t_eval is None:
                out_t.append(t_new)
                out_y.append(y_new.copy())
            else:
                Q = K.T @ P
                while next_eval < t_eval.size and t_eval[next_eval] <= t_new:
                    s = (t_eval[next_eval] - t) / h
                    powers = np.array([s, s * s, s ** 3, s ** 4])
                    out_t.append(float(t_eval[next_eval]))
                    out_y.append(y + h * (Q @ powers) if t_eval[next_eval] < t_new else y_new.copy())
                    next_eval += 1
            t, y, f = t_new, y_new, f_new
            h = h_next
            accepted += 1
            last_rejected = False
        else:
            rejected += 1
            h /= min(1 / _FAC_MIN, err ** _EXPO / _SAFETY)
            last_rejected = True

    return Trajectory(np.array(out_t), np.array(out_y), accepted, rejected)


def simulate(field: Callable[[Sequence[float]], Sequence[float]], x0: Sequence[float],
             t_end: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
             t_eval: Sequence[float] | None = None, t0: float = 0.0) -> Trajectory:
    """Integrate the autonomous system ``x' = field(x)`` from ``t0`` to ``t_end``."""

    def rhs(t, y):
        return np.asarray(field(y.tolist()), dtype=float)

    return solve(rhs, x0, t0, t_end, rtol=rtol, atol=atol, t_eval=t_eval)
