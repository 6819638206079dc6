"""Periodic orbits: parameterizations, checks, rate quadrature and distances."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import dual
from .dual import Dual
from .integrate import IntegrationError, Trajectory, simulate

__all__ = [
    "PeriodicOrbit",
    "PeriodicityReport",
    "Quadrature",
    "evaluate_orbit",
    "verify_periodicity",
    "rate_integral",
    "distance_to_orbit",
    "simulate",
    "Trajectory",
    "IntegrationError",
]

VectorField = Callable[[Sequence], Sequence]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """A T-periodic curve, either closed form or a uniform sample table.

    ``func(t)`` must accept dual-number ``t`` so that velocities are exact.
    ``source`` records how to rebuild the orbit (builtin name and parameters,
    or a CSV path) for serialization.
    """

    period: float
    dimension: int
    func: Callable | None = None
    times: np.ndarray | None = None
    states: np.ndarray | None = None
    source: dict = field(default_factory=dict)
    _spline: CubicSpline | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if (self.func is None) == (self.states is None):
            raise ValueError("give exactly one of func or a sample table")
        if self.states is not None:
            t = np.asarray(self.times, dtype=float)
            x = np.asarray(self.states, dtype=float)
            if t.ndim != 1 or x.shape != (t.size, self.dimension) or t.size < 4:
                raise ValueError("sample table must have at least 4 rows of dimension n")
            steps = np.diff(t)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, t[-1]):
                raise ValueError("sample times must be uniform and increasing")
            object.__setattr__(self, "times", t)
            object.__setattr__(self, "states", x)
            object.__setattr__(self, "_spline", CubicSpline(t, x, axis=0))

    @classmethod
    def closed_form(cls, func: Callable, period: float, dimension: int, **source) -> "PeriodicOrbit":
        return cls(period=period, dimension=dimension, func=func, source=dict(source))

    @classmethod
    def from_samples(cls, times, states, period: float | None = None, **source) -> "PeriodicOrbit":
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        if period is None:
            period = float(times[-1] - times[0])
        return cls(period=period, dimension=states.shape[1], times=times, states=states,
                   source=dict(source))

    @classmethod
    def from_csv(cls, path, period: float | None = None) -> "PeriodicOrbit":
        """Read a table with header ``t,x1,..,xn``."""
        path = Path(path)
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        header = [h.strip() for h in rows[0]]
        n = len(header) - 1
        if header[0] != "t" or header[1:] != [f"x{i}" for i in range(1, n + 1)]:
            raise ValueError(f"{path}: header must be t,x1..xn, got {','.join(header)}")
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        return cls.from_samples(data[:, 0], data[:, 1:], period=period, csv=str(path))

    @property
    def is_sampled(self) -> bool:
        return self.states is not None

    def raw(self, t):
        """Parameterization at ``t`` without reduction modulo the period."""
        if self.func is not None:
            return list(self.func(t))
        t = float(t)
        if not self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside the sample table")
        return self._spline(t).tolist()

    def __call__(self, t):
        return evaluate_orbit(self, t)

    def velocity(self, t) -> list[float]:
        """gamma'(t), exact for closed forms via a dual-number pass."""
        if self.func is not None:
            tag = dual.new_tag()
            return [float(dual.derivative_at(c, tag)) for c in self.raw(Dual(float(t), 1.0, tag))]
        return self._spline(_reduce(t, self.period), 1).tolist()

    def sample(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """``m + 1`` points at ``t_j = j T / m``, j = 0..m."""
        ts = np.linspace(0.0, self.period, m + 1)
        return ts, np.array([evaluate_orbit(self, t) for t in ts])


def _reduce(t, period):
    shift = math.floor(dual.real_part(t) / period) * period
    return t - shift if shift else t


def evaluate_orbit(orbit: PeriodicOrbit, t) -> list:
    """gamma(t) with t reduced modulo T (t may be a dual number)."""
    if orbit.is_sampled:
        t = _reduce(float(t), orbit.period)
        return orbit._spline(min(t, orbit.times[-1])).tolist()
    return orbit.raw(_reduce(t, orbit.period))


@dataclass(frozen=True)
class PeriodicityReport:
    closure: float
    max_residual: float
    tol: float  # residual tolerance actually applied
    reasons: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.reasons


def verify_periodicity(orbit: PeriodicOrbit, field: VectorField, m: int = 64,
                       tol: float = 1e-10) -> PeriodicityReport:
    """Check closure ``|gamma(T) - gamma(0)|`` and the ODE residual at m samples."""
    if m < 8:
        raise ValueError("need at least 8 samples")
    reasons = []
    start = np.asarray(orbit.raw(0.0) if not orbit.is_sampled else orbit.states[0], dtype=float)
    try:
        end = np.asarray(orbit.raw(orbit.period), dtype=float)
        closure = float(np.linalg.norm(end - start))
    except ValueError:
        closure = math.inf
    if not closure <= tol:
        reasons.append("closure")

    residual = 0.0
    residual_tol = tol
    if orbit.is_sampled:
        # centered differences on the table's own grid; their truncation error
        # dt^2/6 |x'''| (from third differences) widens the tolerance
        x = orbit.states
        dt = orbit.times[1] - orbit.times[0]
        third = np.abs(np.diff(x, 3, axis=0)).max() / dt ** 3
        residual_tol = tol + dt * dt / 3.0 * third * math.sqrt(orbit.dimension)
        idx = np.unique(np.linspace(1, len(x) - 2, min(m, len(x) - 2)).round().astype(int))
        for i in idx:
            deriv = (x[i + 1] - x[i - 1]) / (2 * dt)
            residual = max(residual, float(np.linalg.norm(deriv - np.asarray(field(x[i].tolist()), float))))
    else:
        for t in np.arange(m) * (orbit.period / m):
            point = orbit.raw(float(t))
            diff = np.asarray(orbit.velocity(t)) - np.asarray(field(point), dtype=float)
            residual = max(residual, float(np.linalg.norm(diff)))
    if not residual <= residual_tol:
        reasons.append("ode_residual")
    return PeriodicityReport(closure, residual, residual_tol, tuple(reasons))


@dataclass(frozen=True)
class Quadrature:
    value: float
    error: float  # Richardson estimate of the error of S_m: 16 |S_2m - S_m| / 15
    abs_value: float  # integral of |integrand|, a round-off scale


def _simpson(values: np.ndarray, step: float) -> float:
    return step / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def rate_integral(h: Callable[[Sequence], float], orbit: PeriodicOrbit, m: int = 256) -> Quadrature:
    """Composite Simpson integral of ``h(gamma(t))`` over one period."""
    if m < 16 or m % 2:
        raise ValueError("panels must be even and at least 16")
    _, pts = orbit.sample(2 * m)
    values = np.array([float(h(p.tolist())) for p in pts])
    step = orbit.period / m
    value = _simpson(values[::2], step)
    refined = _simpson(values, step / 2)
    return Quadrature(value, 16.0 * abs(refined - value) / 15.0, _simpson(np.abs(values[::2]), step))


def distance_to_orbit(x: Sequence[float], orbit: PeriodicOrbit, m: int = 256) -> float:
    """Distance from ``x`` to the orbit: sampled minimum plus golden-section refinement."""
    if m < 32:
        raise ValueError("need at least 32 samples")
    x = np.asarray(x, dtype=float)
    step = orbit.period / m
    ts = np.arange(m) * step
    pts = np.array([evaluate_orbit(orbit, t) for t in ts])
    d = np.linalg.norm(pts - x, axis=1)
    i = int(np.argmin(d))

    def dist(t):
        return float(np.linalg.norm(np.asarray(evaluate_orbit(orbit, t)) - x))

    a, b = ts[i] - step, ts[i] + step
    c, e = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fe = dist(c), dist(e)
    for _ in range(60):
        if b - a <= 1e-12 * max(1.0, orbit.period):
            break
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - _GOLDEN * (b - a)
            fc = dist(c)
        else:
            a, c, fc = c, e, fe
            e = a + _GOLDEN * (b - a)
            fe = dist(e)
    return min(float(d[i]), fc, fe)
