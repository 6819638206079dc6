"""Builtin scenarios: the 3D harmonic oscillator and Euler's rigid body.

Each builder returns ``(DissipativeSystem, PeriodicOrbit)`` in perturbation
mode: the completely integrable field is the base field and the control
field X0 is synthesized from the chosen conserved/dissipated split.

The ``*_closed_form_x0`` functions are hand-written control fields for the
same scenarios. They do not touch the exterior algebra and serve as an
independent check of the generic synthesis.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import dual
from .expr import ScalarField, parse
from .orbit import PeriodicOrbit
from .specfun import EllipticModulus, complete_K, jacobi
from .system import DissipativeSystem

__all__ = [
    "BUILTINS",
    "EulerParams",
    "harmonic_oscillator",
    "euler_rigid_body",
    "builtin",
    "circle_orbit",
    "euler_orbit",
    "harmonic_closed_form_x0",
    "euler_closed_form_x0",
]

BUILTINS = ("harmonic:zD", "harmonic:planar", "euler:energyI", "euler:momentumI")


def _num(v: float) -> str:
    text = repr(float(v))
    return f"({text})" if v < 0 else text


def _rate(u, n: int = 3) -> ScalarField:
    return parse(u, n) if isinstance(u, str) else u


def circle_orbit() -> PeriodicOrbit:
    """gamma(t) = (sin t, cos t, 0), T = 2 pi."""
    return PeriodicOrbit.closed_form(
        lambda t: [dual.sin(t), dual.cos(t), 0.0], 2 * math.pi, 3, builtin="circle")


def harmonic_oscillator(case: str = "zD", rate="-1") -> tuple[DissipativeSystem, PeriodicOrbit]:
    """X = y d/dx - x d/dy with I, D drawn from {x^2+y^2-1, z}.

    ``case="zD"``: I = x^2+y^2-1, D = z. ``case="planar"``: I = z,
    D = x^2+y^2-1 (undefined on the z-axis).
    """
    u = _rate(rate)
    circle, height = parse("x^2+y^2-1", 3), parse("z", 3)
    base = (parse("y", 3), parse("-x", 3), parse("0", 3))
    if case == "zD":
        conserved, dissipated, manifold = circle, height, "I⁻¹({0}) cylinder x^2+y^2=1"
    elif case == "planar":
        conserved, dissipated, manifold = height, circle, "I⁻¹({0}) plane z=0"
    else:
        raise ValueError(f"unknown harmonic case {case!r}; use 'zD' or 'planar'")
    sys = DissipativeSystem(3, (conserved,), (dissipated,), (u,), base_field=base, manifold=manifold)
    return sys, circle_orbit()


def harmonic_closed_form_x0(case: str, rate):
    u = _rate(rate)
    if case == "zD":
        return lambda p: [0.0, 0.0, p[2] * u(p)]

    def planar(p):
        x, y = p[0], p[1]
        r2 = x * x + y * y
        s = u(p) * (r2 - 1.0) / (2.0 * r2)
        return [s * x, s * y, 0.0]

    if case == "planar":
        return planar
    raise ValueError(f"unknown harmonic case {case!r}")


@dataclass(frozen=True)
class EulerParams:
    """Moments of inertia and the energy / momentum levels (h, c)."""

    I1: float = 3.0
    I2: float = 2.0
    I3: float = 1.0
    h: float = 1.0
    c: float = 1.5

    def __post_init__(self):
        I1, I2, I3, h, c = self.I1, self.I2, self.I3, self.h, self.c
        if not I1 > I2 > I3 > 0:
            raise ValueError(f"need I1 > I2 > I3 > 0, got ({I1}, {I2}, {I3})")
        if not h * I1 - c > 0:
            raise ValueError(f"need h*I1 - c > 0, got {h * I1 - c!r}")
        if not c - h * I3 > 0:
            raise ValueError(f"need c - h*I3 > 0, got {c - h * I3!r}")
        if not 0 <= self.k2 < 1:
            raise ValueError(f"need 0 <= k^2 < 1 (c < h*I2), got k^2 = {self.k2!r}")

    @property
    def k2(self) -> float:
        I1, I2, I3, h, c = self.I1, self.I2, self.I3, self.h, self.c
        return (h * I3 - c) * (I1 - I2) / ((h * I1 - c) * (I3 - I2))

    @property
    def frequency(self) -> float:
        I1, I2, I3 = self.I1, self.I2, self.I3
        return math.sqrt(2 * (I2 - I3) * (self.h * I1 - self.c) / (I1 * I2 * I3))

    @property
    def modulus(self) -> EllipticModulus:
        return EllipticModulus.from_parameter(self.k2)

    @property
    def period(self) -> float:
        I1, I2, I3 = self.I1, self.I2, self.I3
        return (4 * complete_K(self.modulus) * math.sqrt(I1 * I2 * I3)
                / math.sqrt(2 * (I2 - I3) * (self.h * I1 - self.c)))

    @property
    def amplitudes(self) -> tuple[float, float, float]:
        I1, I2, I3, h, c = self.I1, self.I2, self.I3, self.h, self.c
        return (math.sqrt(2 * I1 * (c - h * I3) / (I1 - I3)),
                math.sqrt(2 * I2 * (c - h * I3) / (I2 - I3)),
                math.sqrt(2 * I3 * (h * I1 - c) / (I1 - I3)))


def euler_orbit(params: EulerParams) -> PeriodicOrbit:
    a1, a2, a3 = params.amplitudes
    omega = params.frequency
    k = params.modulus

    def gamma(t):
        sn, cn, dn = jacobi(omega * t, k)
        return [a1 * cn, a2 * sn, -a3 * dn]

    return PeriodicOrbit.closed_form(gamma, params.period, 3, builtin="euler", params=asdict(params))


def _euler_fields(p: EulerParams):
    I1, I2, I3 = p.I1, p.I2, p.I3
    j1 = parse(f"0.5*(x^2/{_num(I1)}+y^2/{_num(I2)}+z^2/{_num(I3)})-{_num(p.h)}", 3)
    j2 = parse(f"0.5*(x^2+y^2+z^2)-{_num(p.c)}", 3)
    base = (parse(f"{_num(1 / I3 - 1 / I2)}*y*z", 3),
            parse(f"{_num(1 / I1 - 1 / I3)}*z*x", 3),
            parse(f"{_num(1 / I2 - 1 / I1)}*x*y", 3))
    return j1, j2, base


def euler_rigid_body(params: EulerParams | None = None, rate="-1",
                     case: str = "energyI") -> tuple[DissipativeSystem, PeriodicOrbit]:
    """Euler's equations for the free rigid body, perturbed along one integral.

    ``case="energyI"`` conserves the energy level J1 and dissipates the
    momentum level J2; ``case="momentumI"`` swaps them.
    """
    params = params or EulerParams()
    u = _rate(rate)
    j1, j2, base = _euler_fields(params)
    if case == "energyI":
        conserved, dissipated = j1, j2
        manifold = f"I⁻¹({{0}}) ellipsoid F1={params.h!r}"
    elif case == "momentumI":
        conserved, dissipated = j2, j1
        manifold = f"I⁻¹({{0}}) sphere F2={params.c!r}"
    else:
        raise ValueError(f"unknown Euler case {case!r}; use 'energyI' or 'momentumI'")
    sys = DissipativeSystem(3, (conserved,), (dissipated,), (u,), base_field=base, manifold=manifold)
    return sys, euler_orbit(params)


def euler_closed_form_x0(params: EulerParams, rate, case: str = "energyI"):
    """Control field written out componentwise for the rigid body."""
    u = _rate(rate)
    a, b, c3 = 1 / params.I1, 1 / params.I2, 1 / params.I3

    def field(p):
        x, y, z = p
        den = (x * y * (a - b)) ** 2 + (y * z * (b - c3)) ** 2 + (x * z * (a - c3)) ** 2
        if case == "energyI":
            level = 0.5 * (x * x + y * y + z * z) - params.c
            comps = [x * (b * (b - a) * y * y + c3 * (c3 - a) * z * z),
                     y * (a * (a - b) * x * x + c3 * (c3 - b) * z * z),
                     z * (a * (a - c3) * x * x + b * (b - c3) * y * y)]
        elif case == "momentumI":
            level = 0.5 * (a * x * x + b * y * y + c3 * z * z) - params.h
            comps = [x * ((a - b) * y * y + (a - c3) * z * z),
                     y * ((b - a) * x * x + (b - c3) * z * z),
                     z * ((c3 - a) * x * x + (c3 - b) * y * y)]
        else:
            raise ValueError(f"unknown Euler case {case!r}")
        s = u(p) * level / den
        return [s * q for q in comps]

    return field


def builtin(name: str, rate="-1", params: EulerParams | None = None):
    """Resolve one of :data:`BUILTINS` to ``(system, orbit)``."""
    family, _, case = name.partition(":")
    if family == "harmonic":
        return harmonic_oscillator(case, rate)
    if family == "euler":
        return euler_rigid_body(params, rate, case)
    raise ValueError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
