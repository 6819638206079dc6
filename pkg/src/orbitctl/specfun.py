"""Complete elliptic integral K(k) and Jacobi elliptic functions.

Both are computed from the arithmetic-geometric mean. ``jacobi`` accepts a
dual-number argument and propagates derivatives through the identities
``sn' = cn dn``, ``cn' = -sn dn``, ``dn' = -k^2 sn cn``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .dual import Dual

__all__ = ["EllipticModulus", "agm", "complete_K", "jacobi"]

_AGM_RTOL = 1e-16
_AGM_MAXITER = 40
_K2_CEILING = 1.0 - 1e-12


@dataclass(frozen=True)
class EllipticModulus:
    """Elliptic modulus ``k`` with ``0 <= k < 1``."""

    k: float

    def __post_init__(self):
        if not (0.0 <= self.k < 1.0) or math.isnan(self.k):
            raise ValueError(f"elliptic modulus must satisfy 0 <= k < 1, got {self.k!r}")

    @classmethod
    def from_parameter(cls, k2: float) -> "EllipticModulus":
        """Build from ``k^2`` computed by a formula that may suffer round-off.

        Values slightly outside ``[0, 1 - 1e-12]`` are clamped; a warning is
        issued when the clamp exceeds 1e-12.
        """
        if k2 < 0.0:
            if k2 < -1e-12:
                warnings.warn(f"k^2 = {k2!r} is negative; clamping to 0", RuntimeWarning, stacklevel=2)
            k2 = 0.0
        elif k2 > _K2_CEILING:
            if k2 >= 1.0:
                raise ValueError(f"k^2 = {k2!r} is not below 1")
            warnings.warn(f"k^2 = {k2!r} clamped to {_K2_CEILING!r}", RuntimeWarning, stacklevel=2)
            k2 = _K2_CEILING
        return cls(math.sqrt(k2))

    @property
    def k2(self) -> float:
        return self.k * self.k


def _as_modulus(k) -> float:
    if isinstance(k, EllipticModulus):
        return k.k
    return EllipticModulus(float(k)).k


def _agm_sequence(a: float, b: float):
    """AGM iterates (a_n, b_n, c_n) until |a_n - b_n| <= 1e-16 a_n."""
    seq = [(a, b, 0.0)]
    gap = math.inf
    for _ in range(_AGM_MAXITER):
        # second test: a and b may straddle one ulp forever
        if abs(a - b) <= _AGM_RTOL * a or abs(a - b) >= gap:
            return seq
        gap = abs(a - b)
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        seq.append((a, b, c))
    raise ArithmeticError("AGM failed to converge")


def agm(a: float, b: float) -> float:
    return _agm_sequence(a, b)[-1][0]


def complete_K(k) -> float:
    """K(k) = pi / (2 agm(1, sqrt(1 - k^2)))."""
    k = _as_modulus(k)
    return math.pi / (2.0 * agm(1.0, math.sqrt((1.0 - k) * (1.0 + k))))


def _jacobi_float(u: float, k: float):
    if k == 0.0:
        return math.sin(u), math.cos(u), 1.0
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    seq = _agm_sequence(1.0, kp)
    seq[0] = (1.0, kp, k)
    n = len(seq) - 1
    phi = (2.0 ** n) * seq[n][0] * u
    for j in range(n, 0, -1):
        a_j, _, c_j = seq[j]
        phi = 0.5 * (phi + math.asin(c_j / a_j * math.sin(phi)))
    sn, cn = math.sin(phi), math.cos(phi)
    # cn / cos(phi_1 - phi_0) is 0/0 at u = K; dn > 0 for k < 1
    dn = math.sqrt((1.0 - k * sn) * (1.0 + k * sn))
    return sn, cn, dn


def jacobi(u, k):
    """Return ``(sn(u;k), cn(u;k), dn(u;k))``.

    ``u`` may be a float or a :class:`~orbitctl.dual.Dual`.
    """
    k = _as_modulus(k)
    if isinstance(u, Dual):
        s, c, d = jacobi(u.re, k)
        k2 = k * k
        return (Dual(s, c * d * u.du, u.tag),
                Dual(c, -s * d * u.du, u.tag),
                Dual(d, -k2 * s * c * u.du, u.tag))
    return _jacobi_float(float(u), k)
