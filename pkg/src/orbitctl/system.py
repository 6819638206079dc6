"""Codimension-one dissipative vector fields built from their invariants.

Given conserved functions I_1..I_k, dissipated functions D_1..D_p and rates
h_1..h_p on R^n with k + p = n - 1, every field satisfying

    L_X I_l = 0,    L_X D_i = h_i D_i

is ``X0 + nu * *(dD_1 ^ .. ^ dD_p ^ dI_1 ^ .. ^ dI_k)`` where

    X0 = |W|^-2 * sum_i (-1)^(n-i) h_i D_i Theta_i,
    Theta_i = *( ^_{j != i} dD_j ^ ^_l dI_l ^ *W ),   W = ^_j dD_j ^ ^_l dI_l.

All evaluations accept dual-number points, so Jacobians of the synthesized
fields are exact (see :func:`jacobian`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import dual, expr
from .dual import Dual
from .exterior import hodge_star, wedge, wedge_all
from .expr import BinOp, Neg, Num, Pow, ScalarField

__all__ = [
    "CodimensionError",
    "SingularPoint",
    "DissipativeSystem",
    "wedge_norm_squared",
    "homogeneous_field",
    "theta",
    "control_field_X0",
    "full_field",
    "vector_field",
    "jacobian",
    "divergence",
    "lie_residuals",
    "rate_template",
    "RegularityReport",
    "regularity_report",
]

SINGULAR_EPS = 1e-12
MEMBERSHIP_TOL = 1e-8
MARGIN_TOL = 1e-6


class CodimensionError(ValueError):
    """The data does not satisfy k + p = n - 1 (or rates do not match D)."""


class SingularPoint(ArithmeticError):
    """The gradients are (nearly) dependent, so X0 is undefined here."""

    def __init__(self, point, norm_squared):
        super().__init__(f"|W|^2 = {norm_squared:.3e} at {list(point)}: gradients are dependent")
        self.point = list(point)
        self.norm_squared = norm_squared


@dataclass(frozen=True, eq=False)
class DissipativeSystem:
    n: int
    conserved: tuple[ScalarField, ...]
    dissipated: tuple[ScalarField, ...]
    rates: tuple[ScalarField, ...]
    rescale: ScalarField | None = None
    base_field: tuple[ScalarField, ...] | None = None
    singular_eps: float = SINGULAR_EPS
    orientation: int = 1
    manifold: str | None = None  # human-readable label for I^-1({0})

    def __post_init__(self):
        for name in ("conserved", "dissipated", "rates"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.base_field is not None:
            object.__setattr__(self, "base_field", tuple(self.base_field))
            if len(self.base_field) != self.n:
                raise CodimensionError(f"base field needs {self.n} components, got {len(self.base_field)}")
        if self.k + self.p != self.n - 1:
            raise CodimensionError(f"k + p = {self.k} + {self.p} must equal n - 1 = {self.n - 1}")
        if len(self.rates) != self.p:
            raise CodimensionError(f"{self.p} dissipated functions but {len(self.rates)} rates")
        fields = [*self.conserved, *self.dissipated, *self.rates, *(self.base_field or ())]
        if self.rescale is not None:
            fields.append(self.rescale)
        for f in fields:
            if f.arity != self.n:
                raise CodimensionError(f"field {f} has arity {f.arity}, expected {self.n}")

    @property
    def k(self) -> int:
        return len(self.conserved)

    @property
    def p(self) -> int:
        return len(self.dissipated)

    @property
    def perturbation_mode(self) -> bool:
        return self.base_field is not None

    def with_rates(self, rates: Sequence[ScalarField]) -> "DissipativeSystem":
        return replace(self, rates=tuple(rates))


def _gradients(sys: DissipativeSystem, point):
    """D-gradients first, then I-gradients (the wedge order of W)."""
    d = [expr.gradient(f, point) for f in sys.dissipated]
    i = [expr.gradient(f, point) for f in sys.conserved]
    return d, i


def wedge_norm_squared(sys: DissipativeSystem, point: Sequence[float]) -> float:
    """|dD_1 ^ .. ^ dD_p ^ dI_1 ^ .. ^ dI_k|^2; X0 is singular where it vanishes."""
    d, i = _gradients(sys, point)
    return float(wedge_all(d + i, sys.n).norm_squared())


def homogeneous_field(sys: DissipativeSystem, point: Sequence) -> list:
    """*(dD_1 ^ .. ^ dD_p ^ dI_1 ^ .. ^ dI_k) at ``point``."""
    d, i = _gradients(sys, point)
    return hodge_star(wedge_all(d + i, sys.n), sys.orientation).to_vector()


def _theta(sys, d_grads, i_grads, star_w, i):
    rest = [g for j, g in enumerate(d_grads) if j != i] + i_grads
    inner = wedge(wedge_all(rest, sys.n), star_w)
    return hodge_star(inner, sys.orientation).to_vector()


def theta(sys: DissipativeSystem, i: int, point: Sequence) -> list:
    """Theta_i (1-based ``i``) at ``point``."""
    if not 1 <= i <= sys.p:
        raise IndexError(f"theta index {i} outside 1..{sys.p}")
    d, g = _gradients(sys, point)
    star_w = hodge_star(wedge_all(d + g, sys.n), sys.orientation)
    return _theta(sys, d, g, star_w, i - 1)


def control_field_X0(sys: DissipativeSystem, point: Sequence) -> list:
    n = sys.n
    if sys.p == 0:
        return [0.0] * n
    d_values, d = zip(*[expr.value_and_gradient(f, point) for f in sys.dissipated])
    d = list(d)
    g = [expr.gradient(f, point) for f in sys.conserved]
    w = wedge_all(d + g, n)
    norm2 = w.norm_squared()
    if dual.real_part(norm2) <= sys.singular_eps:
        raise SingularPoint([dual.real_part(c) for c in point], dual.real_part(norm2))
    star_w = hodge_star(w, sys.orientation)
    total = [0.0] * n
    for i in range(sys.p):
        # i is 0-based, so the sign (-1)^(n - (i+1))
        coef = sys.rates[i](point) * d_values[i]
        if (n - i - 1) % 2:
            coef = -coef
        th = _theta(sys, d, g, star_w, i)
        total = [a + coef * b for a, b in zip(total, th)]
    return [c / norm2 for c in total]


def full_field(sys: DissipativeSystem, point: Sequence) -> list:
    """X + X0 in perturbation mode, X0 + nu * homogeneous field otherwise."""
    x0 = control_field_X0(sys, point)
    if sys.base_field is not None:
        return [f(point) + c for f, c in zip(sys.base_field, x0)]
    if sys.rescale is None or (sys.rescale.is_constant and sys.rescale(point) == 0.0):
        return x0
    nu = sys.rescale(point)
    return [a + nu * b for a, b in zip(x0, homogeneous_field(sys, point))]


def vector_field(sys: DissipativeSystem) -> Callable[[Sequence], list]:
    return lambda point: full_field(sys, point)


def jacobian(field: Callable[[Sequence], Sequence], point: Sequence[float]):
    """Value and exact Jacobian of ``field`` at ``point`` (one dual pass per column)."""
    n = len(point)
    tag = dual.new_tag()
    jac = np.empty((n, n))
    value = None
    for j in range(n):
        seeded = [Dual(float(p), 1.0 if m == j else 0.0, tag) for m, p in enumerate(point)]
        out = field(seeded)
        jac[:, j] = [float(dual.derivative_at(c, tag)) for c in out]
        if value is None:
            value = np.array([float(dual.value_at(c, tag)) for c in out])
    return value, jac


def divergence(field: Callable[[Sequence], Sequence], point: Sequence[float]) -> float:
    return float(np.trace(jacobian(field, point)[1]))


def lie_residuals(field: Callable[[Sequence], Sequence], sys: DissipativeSystem,
                  point: Sequence[float]) -> np.ndarray:
    """(<X, dI_l>, ..., <X, dD_i> - h_i D_i, ...) at ``point``."""
    x = np.asarray(field(list(point)), dtype=float)
    out = [float(np.dot(x, expr.gradient(f, point))) for f in sys.conserved]
    for f, h in zip(sys.dissipated, sys.rates):
        value, grad = expr.value_and_gradient(f, point)
        out.append(float(np.dot(x, grad)) - h(point) * value)
    return np.array(out)


def rate_template(kind: str, psi: ScalarField, c: float) -> ScalarField:
    """Rates with a guaranteed integral sign: -(psi^2 + c) or psi^2 + c."""
    if not c > 0:
        raise ValueError(f"template constant must be positive, got {c!r}")
    body = BinOp("+", Pow(psi.ast, 2), Num(float(c)))
    if kind == "stabilizing":
        return ScalarField(psi.arity, Neg(body))
    if kind == "destabilizing":
        return ScalarField(psi.arity, body)
    raise ValueError(f"unknown rate kind {kind!r}")


@dataclass(frozen=True)
class RegularityReport:
    membership: float  # max |I_l(gamma)|, |D_i(gamma)| over samples
    independence_margin: float  # min singular value of [dI; dD; X]
    regular_value_margin: float  # min singular value of [dI; dD]
    conserved_margin: float  # min singular value of [dI]; inf when k = 0
    thresholds: dict
    failures: tuple[tuple[str, float], ...] = field(default=())  # (reason, t)

    @property
    def reasons(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(r for r, _ in self.failures))

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def regular_value_I(self) -> bool:
        return self.conserved_margin > self.thresholds["margin"]


def _min_singular(rows) -> float:
    if len(rows) == 0:
        return float("inf")
    return float(np.linalg.svd(np.asarray(rows, dtype=float), compute_uv=False)[-1])


def regularity_report(sys: DissipativeSystem, orbit, samples: int = 64,
                      membership_tol: float = MEMBERSHIP_TOL,
                      margin_tol: float = MARGIN_TOL) -> RegularityReport:
    """Sample-based check of the hypotheses on the orbit.

    At ``samples`` points of the orbit: the orbit lies in the zero set of all
    I and D, the gradients together with the field are independent, and the
    gradients alone are independent (0 is a regular value).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    from .orbit import evaluate_orbit

    membership = 0.0
    indep = regular = conserved = float("inf")
    failures = []
    for t in np.arange(samples) * (orbit.period / samples):
        x = [float(c) for c in evaluate_orbit(orbit, t)]
        values = [abs(f(x)) for f in (*sys.conserved, *sys.dissipated)]
        m = max(values, default=0.0)
        membership = max(membership, m)
        grads_i = [expr.gradient(f, x) for f in sys.conserved]
        grads_d = [expr.gradient(f, x) for f in sys.dissipated]
        try:
            xv = full_field(sys, x)
        except SingularPoint:
            xv = [0.0] * sys.n
        s_ind = _min_singular(grads_i + grads_d + [xv])
        s_reg = _min_singular(grads_i + grads_d)
        s_con = _min_singular(grads_i)
        indep, regular, conserved = min(indep, s_ind), min(regular, s_reg), min(conserved, s_con)
        if m > membership_tol:
            failures.append(("membership", float(t)))
        if not s_ind > margin_tol:
            failures.append(("independence", float(t)))
        if not s_reg > margin_tol:
            failures.append(("regular_value", float(t)))
    return RegularityReport(membership, indep, regular, conserved,
                            {"membership": membership_tol, "margin": margin_tol},
                            tuple(failures))
