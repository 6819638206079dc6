"""Exterior algebra of R^n with the standard inner product.

Multivectors are stored densely as maps from strictly increasing 1-based
index tuples to coefficients. Coefficients may be floats or dual numbers, so
every operation here is differentiable end to end.

Orientation is fixed by ``e1 ^ ... ^ en``; :func:`hodge_star` accepts
``orientation=-1`` to use the opposite one.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache, reduce
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MultiVector",
    "GradeError",
    "basis_blades",
    "blade",
    "scalar",
    "vector",
    "wedge",
    "wedge_all",
    "hodge_star",
    "inner",
    "decomposable_norm",
]


class GradeError(ValueError):
    """Dimension mismatch or grade overflow."""


def basis_blades(n: int, r: int) -> list[tuple[int, ...]]:
    """Canonical (lexicographic) basis of grade ``r`` in dimension ``n``."""
    return list(itertools.combinations(range(1, n + 1), r))


def _inversions(first: Sequence[int], second: Sequence[int]) -> int:
    return sum(1 for i in first for j in second if i > j)


@lru_cache(maxsize=4096)
def _merge(ka: tuple, kb: tuple):
    """(sorted key, sign) of e_ka ^ e_kb, or None when an index repeats."""
    if set(ka).intersection(kb):
        return None
    return tuple(sorted(ka + kb)), -1 if _inversions(ka, kb) % 2 else 1


@lru_cache(maxsize=4096)
def _complement(n: int, key: tuple):
    """(complementary key, sign) with e_key ^ e_comp = sign * vol."""
    comp = tuple(i for i in range(1, n + 1) if i not in key)
    return comp, -1 if _inversions(key, comp) % 2 else 1


class MultiVector:
    """Homogeneous element of the ``grade``-th exterior power of R^n."""

    __slots__ = ("dimension", "grade", "_coeffs")

    def __init__(self, dimension: int, grade: int,
                 coefficients: Mapping[tuple[int, ...], object] | None = None,
                 prune_eps: float = 0.0):
        if dimension < 1:
            raise GradeError("dimension must be positive")
        if not 0 <= grade <= dimension:
            raise GradeError(f"grade {grade} outside [0, {dimension}]")
        coeffs = {}
        for key, value in (coefficients or {}).items():
            key = tuple(key)
            if len(key) != grade:
                raise GradeError(f"index tuple {key} does not have grade {grade}")
            if any(a >= b for a, b in zip(key, key[1:])):
                raise GradeError(f"index tuple {key} is not strictly increasing")
            if key and not (1 <= key[0] and key[-1] <= dimension):
                raise GradeError(f"index tuple {key} outside [1, {dimension}]")
            if prune_eps > 0.0 and isinstance(value, (int, float)) and abs(value) < prune_eps:
                continue
            coeffs[key] = coeffs.get(key, 0.0) + value
        self.dimension = dimension
        self.grade = grade
        self._coeffs = MappingProxyType(coeffs)

    @classmethod
    def _trusted(cls, dimension: int, grade: int, coeffs: dict) -> "MultiVector":
        # internal results already have canonical keys; skip validation
        out = object.__new__(cls)
        out.dimension = dimension
        out.grade = grade
        out._coeffs = MappingProxyType(coeffs)
        return out

    @property
    def coefficients(self) -> Mapping[tuple[int, ...], object]:
        return self._coeffs

    def __getitem__(self, key) -> object:
        return self._coeffs.get(tuple(key), 0.0)

    def components(self) -> list:
        """Coefficients in canonical basis order (zeros filled in)."""
        return [self[key] for key in basis_blades(self.dimension, self.grade)]

    def to_vector(self) -> list:
        if self.grade != 1:
            raise GradeError(f"expected a 1-vector, got grade {self.grade}")
        return self.components()

    def norm_squared(self):
        return sum((c * c for c in self._coeffs.values()), 0.0)

    def _check(self, other: "MultiVector"):
        if other.dimension != self.dimension:
            raise GradeError(f"dimension mismatch: {self.dimension} vs {other.dimension}")

    def __add__(self, other: "MultiVector") -> "MultiVector":
        self._check(other)
        if other.grade != self.grade:
            raise GradeError("only homogeneous multivectors of equal grade can be added")
        coeffs = dict(self._coeffs)
        for key, value in other._coeffs.items():
            coeffs[key] = coeffs.get(key, 0.0) + value
        return MultiVector._trusted(self.dimension, self.grade, coeffs)

    def __neg__(self) -> "MultiVector":
        return self * -1.0

    def __sub__(self, other: "MultiVector") -> "MultiVector":
        return self + (-other)

    def __mul__(self, factor) -> "MultiVector":
        if isinstance(factor, MultiVector):
            return NotImplemented
        return MultiVector._trusted(self.dimension, self.grade,
                                    {k: v * factor for k, v in self._coeffs.items()})

    __rmul__ = __mul__

    def __xor__(self, other: "MultiVector") -> "MultiVector":
        return wedge(self, other)

    def allclose(self, other: "MultiVector", atol: float = 1e-12) -> bool:
        if (self.dimension, self.grade) != (other.dimension, other.grade):
            return False
        keys = set(self._coeffs) | set(other._coeffs)
        return all(abs(float(self[k]) - float(other[k])) <= atol for k in keys)

    def __repr__(self):
        terms = " + ".join(f"{v!r}*e{''.join(map(str, k)) or '0'}" for k, v in self._coeffs.items())
        return f"MultiVector(n={self.dimension}, r={self.grade}: {terms or '0'})"


def scalar(n: int, value=1.0) -> MultiVector:
    return MultiVector(n, 0, {(): value})


def vector(components: Sequence) -> MultiVector:
    n = len(components)
    if n < 1:
        raise GradeError("dimension must be positive")
    return MultiVector._trusted(n, 1, {(i + 1,): c for i, c in enumerate(components)})


def blade(n: int, *indices: int) -> MultiVector:
    """``e_{i1} ^ e_{i2} ^ ...`` for arbitrary (1-based) index order."""
    out = scalar(n)
    for i in indices:
        out = wedge(out, MultiVector(n, 1, {(i,): 1.0}))
    return out


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    a._check(b)
    n = a.dimension
    r = a.grade + b.grade
    if r > n:
        raise GradeError(f"grade overflow: {a.grade} + {b.grade} > {n}")
    out: dict[tuple[int, ...], object] = {}
    for ka, ca in a.coefficients.items():
        for kb, cb in b.coefficients.items():
            merged = _merge(ka, kb)
            if merged is None:
                continue
            key, sign = merged
            term = ca * cb if sign > 0 else -(ca * cb)
            out[key] = out[key] + term if key in out else term
    return MultiVector._trusted(n, r, out)


def wedge_all(vectors: Iterable[Sequence], n: int | None = None) -> MultiVector:
    """Wedge of a list of n-vectors, left to right. Empty list gives 1."""
    vectors = [vector(v) for v in vectors]
    if not vectors:
        if n is None:
            raise ValueError("dimension needed for an empty wedge")
        return scalar(n)
    return reduce(wedge, vectors)


def hodge_star(a: MultiVector, orientation: int = 1) -> MultiVector:
    """Hodge dual, characterised by ``alpha ^ *beta = <alpha, beta> vol``."""
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    n = a.dimension
    out = {}
    for key, c in a.coefficients.items():
        comp, sign = _complement(n, key)
        out[comp] = c if sign * orientation > 0 else -c
    return MultiVector._trusted(n, n - a.grade, out)


def inner(a: MultiVector, b: MultiVector):
    a._check(b)
    if a.grade != b.grade:
        return 0.0
    return sum((c * b[k] for k, c in a.coefficients.items()), 0.0)


def decomposable_norm(vectors: Sequence[Sequence[float]]) -> float:
    """Norm of ``v1 ^ ... ^ vr``, computed as sqrt(det Gram)."""
    if len(vectors) == 0:
        raise ValueError("need at least one vector")
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[0] > v.shape[1]:
        raise GradeError(f"expected between 1 and n vectors of dimension n, got shape {v.shape}")
    det = float(np.linalg.det(v @ v.T))
    return math.sqrt(max(det, 0.0))
