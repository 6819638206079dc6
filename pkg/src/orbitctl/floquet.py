"""Characteristic multipliers of periodic orbits and stability verdicts.

Three routes to the multipliers of a periodic orbit of a codimension-one
dissipative system:

* numeric: eigenvalues of the monodromy matrix of the full variational
  equation ``u' = DX(gamma(t)) u``;
* reduced: eigenvalues of the fundamental matrix of the (n-1)-dimensional
  system ``v' = blockdiag(0_k, diag(h(gamma(t)))) v``, plus the trivial 1;
* analytic: ``1`` (k+1 times) and ``exp(int_0^T h_i(gamma))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import ScalarField
from .integrate import DEFAULT_ATOL, DEFAULT_RTOL, solve
from .orbit import PeriodicOrbit, evaluate_orbit, rate_integral, verify_periodicity
from .system import DissipativeSystem, SingularPoint, jacobian, regularity_report, vector_field

__all__ = [
    "ConvergenceError",
    "HypothesisError",
    "Outcome",
    "MultiplierReport",
    "StabilityVerdict",
    "eigenvalues",
    "monodromy",
    "reduced_monodromy",
    "analytic_multipliers",
    "pair_spectra",
    "classify",
    "liouville_check",
]

UNIT_CLUSTER_TOL = 1e-4
PERIODICITY_TOL = 1e-8
_EPS = np.finfo(float).eps


class ConvergenceError(ArithmeticError):
    """QR iteration did not converge within the iteration cap."""


class HypothesisError(ValueError):
    """An orbit or system hypothesis failed; ``reasons`` lists the checks."""

    def __init__(self, reasons: Sequence[str], report=None):
        super().__init__("hypothesis check failed: " + ", ".join(reasons))
        self.reasons = tuple(reasons)
        self.report = report


# --- eigenvalues ----------------------------------------------------------

def _balance(a: np.ndarray) -> None:
    """Parlett-Reinsch balancing with power-of-two scaling (in place)."""
    radix, sqrdx = 2.0, 4.0
    n = a.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g, f, s = r / radix, 1.0, c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f


def _hessenberg(a: np.ndarray) -> None:
    """Householder reduction to upper Hessenberg form (in place)."""
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        a[k + 1:, :] -= 2.0 * np.outer(v, v @ a[k + 1:, :])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        a[k + 2:, k] = 0.0


def _hqr(a: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only."""
    n = a.shape[0]
    w = np.zeros(n, dtype=complex)
    anorm = sum(abs(a[i, j]) for i in range(n) for j in range(max(i - 1, 0), n))
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            # look for a single small subdiagonal element
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= _EPS * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                w[nn] = x + t
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            ww = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                # 2x2 block: real pair or complex conjugate pair
                p = 0.5 * (y - x)
                q = p * p + ww
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    w[nn - 1] = w[nn] = x + z
                    if z != 0.0:
                        w[nn] = x - ww / z
                else:
                    w[nn] = complex(x + p, -z)
                    w[nn - 1] = complex(x + p, z)
                nn -= 2
                break
            if its == max_iter:
                raise ConvergenceError(f"no convergence after {max_iter} QR sweeps")
            if its in (10, 20):
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                ww = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - ww) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p, q, r = p / s, q / s, r / s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= _EPS * v:
                    break
                m -= 1
            for i in range(m, nn - 1):
                a[i + 2, i] = 0.0
                if i != m:
                    a[i + 2, i - 1] = 0.0
            # double-shift QR step on rows/columns l..nn
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k + 1 != nn else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p, q, r = p / x, q / x, r / x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x, y, z = p / s, q / s, r / s
                q, r = q / p, r / p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k + 1 != nn:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k + 1 != nn:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    return w


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a real square matrix, sorted by decreasing modulus."""
    a = np.array(M, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.shape[0] > 16:
        raise ValueError("matrices larger than 16x16 are not supported")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    _balance(a)
    _hessenberg(a)
    w = _hqr(a)
    order = sorted(range(len(w)), key=lambda i: (-abs(w[i]), -w[i].real, -w[i].imag))
    return w[order]


# --- monodromy -------------------------------------------------------------

def _as_field(field) -> Callable:
    if callable(field):
        return field
    comps = tuple(field)
    if not all(isinstance(c, ScalarField) for c in comps):
        raise TypeError("field must be callable or a sequence of ScalarFields")
    return lambda p: [c(p) for c in comps]


def monodromy(field, orbit: PeriodicOrbit, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL) -> np.ndarray:
    """u(T) for ``u' = DX(x(t)) u``, ``u(0) = I``, integrated with the state.

    The state starts at gamma(0) and is integrated alongside the
    variational matrix, so Jacobians are evaluated on the computed
    trajectory with exact (dual-number) derivatives.
    """
    f = _as_field(field)
    n = orbit.dimension
    x0 = np.asarray(evaluate_orbit(orbit, 0.0), dtype=float)

    def rhs(t, y):
        value, jac = jacobian(f, y[:n].tolist())
        return np.concatenate([value, (jac @ y[n:].reshape(n, n)).ravel()])

    y0 = np.concatenate([x0, np.eye(n).ravel()])
    traj = solve(rhs, y0, 0.0, orbit.period, rtol=rtol, atol=atol)
    return traj.final[n:].reshape(n, n)


def _rate_block(sys: DissipativeSystem, x) -> np.ndarray:
    return np.array([0.0] * sys.k + [float(h(x)) for h in sys.rates])


def reduced_monodromy(sys: DissipativeSystem, orbit: PeriodicOrbit, mode: str = "analytic",
                      panels: int = 256, rtol: float = DEFAULT_RTOL,
                      atol: float = DEFAULT_ATOL) -> np.ndarray:
    """v(T) for ``v' = blockdiag(0_k, diag(h_1..h_p))(gamma(t)) v``, ``v(0) = I``."""
    m = sys.n - 1
    if mode == "analytic":
        integrals = [rate_integral(h, orbit, panels).value for h in sys.rates]
        return np.diag([1.0] * sys.k + [math.exp(s) for s in integrals])
    if mode != "numeric":
        raise ValueError(f"mode must be 'analytic' or 'numeric', got {mode!r}")

    def rhs(t, y):
        x = [float(c) for c in evaluate_orbit(orbit, t)]
        return (_rate_block(sys, x)[:, None] * y.reshape(m, m)).ravel()

    traj = solve(rhs, np.eye(m).ravel(), 0.0, orbit.period, rtol=rtol, atol=atol)
    return traj.final.reshape(m, m)


# --- reports -----------------------------------------------------------------

def pair_spectra(analytic: Sequence[complex], numeric: Sequence[complex]):
    """Greedy minimal-gap matching; returns ``[(analytic, numeric, gap)]``."""
    left = list(enumerate(analytic))
    right = list(enumerate(numeric))
    pairs = []
    while left and right:
        gap, ia, ib = min((abs(a - b), ia, ib) for ia, (_, a) in enumerate(left)
                          for ib, (_, b) in enumerate(right))
        pairs.append((complex(left[ia][1]), complex(right[ib][1]), float(gap)))
        left.pop(ia)
        right.pop(ib)
    return pairs


@dataclass(frozen=True)
class MultiplierReport:
    k: int
    p: int
    period: float
    integrals: tuple[float, ...]
    integral_errors: tuple[float, ...]
    margins: tuple[float, ...]  # |integral| must exceed this for a sign decision
    analytic: tuple[complex, ...]
    numeric: tuple[complex, ...] | None = None
    reduced: tuple[complex, ...] | None = None
    pairing: tuple[tuple[complex, complex, float], ...] = ()
    manifold: str = "I⁻¹({0})"
    regular_value_I: bool = True

    @property
    def max_gap(self) -> float:
        return max((g for _, _, g in self.pairing), default=0.0)

    def unit_cluster(self, values=None, tol: float = UNIT_CLUSTER_TOL) -> int:
        values = self.numeric if values is None else values
        return sum(1 for v in values if abs(v - 1.0) <= tol)


def _margin(q) -> float:
    # 10x the quadrature error, floored at a round-off scale of the integrand
    return max(10.0 * q.error, 1e3 * _EPS * q.abs_value)


def _manifold(sys: DissipativeSystem) -> str:
    if sys.manifold:
        return sys.manifold
    if sys.k == 0:
        return f"I⁻¹({{0}}) = R^{sys.n}"
    return "I⁻¹({0}) = {" + ", ".join(f"{f} = 0" for f in sys.conserved) + "}"


def analytic_multipliers(sys: DissipativeSystem, orbit: PeriodicOrbit, panels: int = 256,
                         numeric: bool = True, reduced: bool = True, check: bool = True,
                         samples: int = 64, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                         periodicity_tol: float = PERIODICITY_TOL) -> MultiplierReport:
    """Multipliers from the closed formula, optionally with numeric cross-checks.

    With ``check`` the orbit is verified against the system's field and the
    regularity hypotheses are sampled first; failures raise
    :class:`HypothesisError`.
    """
    regularity = regularity_report(sys, orbit, samples)
    if check:
        try:
            per = verify_periodicity(orbit, vector_field(sys), m=samples, tol=periodicity_tol)
            reasons = per.reasons + regularity.reasons
        except SingularPoint:
            per, reasons = None, ("singular",) + regularity.reasons
        if reasons:
            raise HypothesisError(reasons, (per, regularity))

    quads = [rate_integral(h, orbit, panels) for h in sys.rates]
    integrals = tuple(q.value for q in quads)
    analytic = tuple([1.0 + 0j] * (sys.k + 1) + [complex(math.exp(s)) for s in integrals])

    num = red = None
    pairing = ()
    if numeric:
        num = tuple(complex(v) for v in eigenvalues(monodromy(vector_field(sys), orbit, rtol, atol)))
        pairing = tuple(pair_spectra(analytic, num))
    if reduced:
        v = reduced_monodromy(sys, orbit, "numeric", panels, rtol, atol)
        red = tuple([1.0 + 0j] + [complex(x) for x in eigenvalues(v)])
    return MultiplierReport(
        k=sys.k, p=sys.p, period=orbit.period, integrals=integrals,
        integral_errors=tuple(q.error for q in quads), margins=tuple(_margin(q) for q in quads),
        analytic=analytic, numeric=num, reduced=red, pairing=pairing,
        manifold=_manifold(sys), regular_value_I=regularity.regular_value_I)


class Outcome(str, enum.Enum):
    STABLE_ON_MANIFOLD = "StableOnManifold"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class StabilityVerdict:
    outcome: Outcome
    witness: dict = field(default_factory=dict)
    manifold: str = ""


def classify(report: MultiplierReport, regular_value_I: bool | None = None) -> StabilityVerdict:
    """Decide stability from the signs of the rate integrals.

    Any integral above its margin makes the orbit unstable, whatever the
    regularity of I. All integrals below minus their margins, with 0 a
    regular value of I, give stability along I^-1({0}). Anything else is
    inconclusive.
    """
    if regular_value_I is None:
        regular_value_I = report.regular_value_I
    for i, (s, m) in enumerate(zip(report.integrals, report.margins), start=1):
        if s > m:
            return StabilityVerdict(Outcome.UNSTABLE, {"index": i, "integral": float(s)}, report.manifold)
    if report.p and all(s < -m for s, m in zip(report.integrals, report.margins)):
        if regular_value_I:
            return StabilityVerdict(Outcome.STABLE_ON_MANIFOLD,
                                    {"integrals": [float(s) for s in report.integrals]}, report.manifold)
        reason = "0 is not a regular value of I"
    elif report.p == 0:
        reason = "no dissipated directions; all multipliers equal one"
    else:
        reason = "some rate integral is within its margin of zero"
    return StabilityVerdict(Outcome.INCONCLUSIVE, {"reason": reason}, report.manifold)


def liouville_check(field, orbit: PeriodicOrbit, M: np.ndarray, panels: int = 256):
    """Return ``(det M, exp(int_0^T div X(gamma)))`` for comparison."""
    f = _as_field(field)
    div = lambda x: float(np.trace(jacobian(f, x)[1]))
    return float(np.linalg.det(M)), math.exp(rate_integral(div, orbit, panels).value)
