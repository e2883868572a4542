"""Quadruple comparison oracle: the only view of the metric reconstruction gets."""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Distortion:
    """A strictly increasing map ``l`` on [0, 1] with ``l(0) = 0``."""

    name: str
    param: float = 1.0

    def __post_init__(self):
        if self.name not in ("identity", "sqrt", "x/(1+x)", "scale"):
            raise ValueError(f"unknown distortion {self.name!r}")
        if self.name == "scale" and not self.param > 0:
            raise ValueError("scale factor must be positive")

    def __call__(self, d: np.ndarray) -> np.ndarray:
        if self.name == "sqrt":
            return np.sqrt(d)
        if self.name == "x/(1+x)":
            return d / (1.0 + d)
        if self.name == "scale":
            return d * self.param
        return d

    def __str__(self):
        return f"scale({self.param:g})" if self.name == "scale" else self.name

    @classmethod
    def parse(cls, text: str) -> "Distortion":
        text = text.strip()
        m = re.fullmatch(r"scale\(\s*([0-9.eE+-]+)\s*\)", text)
        if m:
            return cls("scale", float(m.group(1)))
        return cls(text)


class OrdinalOracle:
    """Answers ``d(p, q) <= d(r, s)`` for point ids, and nothing else.

    The distance matrix is held privately; there is deliberately no accessor
    for it. Every answered comparison increments :attr:`queries`.
    """

    def __init__(self, distances, distortion: Distortion | None = None):
        d = np.array(distances, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        self.__base = d
        self.__distortion = distortion
        self.__d = d if distortion is None else distortion(d)
        self.__flat = self.__d.ravel()
        self._n = d.shape[0]
        self._queries = 0
        self._lock = threading.Lock()

    @classmethod
    def from_sample(cls, smp, distortion: Distortion | None = None) -> "OrdinalOracle":
        return cls(smp.distance_matrix(), distortion)

    @property
    def n(self) -> int:
        return self._n

    @property
    def distortion(self) -> Distortion | None:
        return self.__distortion

    @property
    def queries(self) -> int:
        return self._queries

    def _count(self, k: int):
        with self._lock:
            self._queries += k

    def _check(self, *ids):
        for i in ids:
            if not 0 <= i < self._n:
                raise IndexError(f"point id {i} out of range 0..{self._n - 1}")

    def compare(self, pq, rs) -> bool:
        """True iff d(pq) <= d(rs)."""
        p, q = pq
        r, s = rs
        self._check(p, q, r, s)
        self._count(1)
        n = self._n
        return bool(self.__flat[p * n + q] <= self.__flat[r * n + s])

    def compare_many(self, p, q, r, s) -> np.ndarray:
        """Vectorized :meth:`compare`; each element counts as one query."""
        p, q, r, s = (np.asarray(a, dtype=np.int64) for a in (p, q, r, s))
        p, q, r, s = np.broadcast_arrays(p, q, r, s)
        if p.size == 0:
            return np.zeros(p.shape, dtype=bool)
        for a in (p, q, r, s):
            if a.min() < 0 or a.max() >= self._n:
                raise IndexError(f"point id out of range 0..{self._n - 1}")
        self._count(p.size)
        n = self._n
        return self.__flat[p * n + q] <= self.__flat[r * n + s]

    def with_distortion(self, distortion: Distortion | str) -> "OrdinalOracle":
        """A fresh oracle answering through ``l(d)``; its query count starts at 0."""
        if isinstance(distortion, str):
            distortion = Distortion.parse(distortion)
        if self.__distortion is not None:
            distortion = _Composed(self.__distortion, distortion)
        return OrdinalOracle(self.__base, distortion)


@dataclass(frozen=True)
class _Composed:
    inner: Distortion
    outer: Distortion

    def __call__(self, d):
        return self.outer(self.inner(d))

    def __str__(self):
        return f"{self.outer}∘{self.inner}"


def compare(oracle, pq, rs) -> bool:
    return oracle.compare(pq, rs)


def with_distortion(oracle: OrdinalOracle, distortion) -> OrdinalOracle:
    return oracle.with_distortion(distortion)


def query_count(oracle) -> int:
    return oracle.queries


def _larger_side(oracle, a, b, z):
    """The pair among (a, z), (b, z) with the larger distance.

    Skips the query when one side is known to be zero from its ids.
    """
    if a == b or z == a:
        return (b, z)
    if z == b:
        return (a, z)
    return (b, z) if oracle.compare((a, z), (b, z)) else (a, z)


def compare_max(oracle, a1, b1, z1, a2, b2, z2) -> bool:
    """True iff max(d(a1,z1), d(b1,z1)) <= max(d(a2,z2), d(b2,z2)).

    One query resolves the larger side of each max, one compares the winners.
    """
    for i in (a1, b1, z1, a2, b2, z2):
        if not 0 <= i < oracle.n:
            raise IndexError(f"point id {i} out of range 0..{oracle.n - 1}")
    left = _larger_side(oracle, a1, b1, z1)
    right = _larger_side(oracle, a2, b2, z2)
    return oracle.compare(left, right)

