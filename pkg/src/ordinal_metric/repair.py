"""Turning an estimated distance matrix into a genuine metric."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-12


@dataclass
class MetricMatrix:
    values: np.ndarray
    shift: float = 0.0
    # off-diagonal pairs left at zero because there was nothing to add
    zero_pairs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.values)


def _validate(m, tol=DEFAULT_TOL):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if np.any(np.abs(m - m.T) > tol):
        raise ValueError("matrix is not symmetric")
    if np.any(np.abs(np.diag(m)) > tol):
        raise ValueError("matrix has a nonzero diagonal")
    return m


def max_triangle_violation(estimate) -> float:
    """max over (u, w, v) of M[u,v] - M[u,w] - M[w,v], clamped at 0."""
    m = _validate(estimate)
    worst = 0.0
    for w in range(len(m)):
        worst = max(worst, float(np.max(m - m[:, w, None] - m[None, w, :])))
    return worst


def repair_additive(estimate) -> MetricMatrix:
    """Add the worst triangle violation to every off-diagonal entry.

    The result is a metric whose sup-distance to ``estimate`` is exactly that
    violation. Unlike a shortest-path closure, errors cannot pile up along
    long paths.
    """
    m = _validate(estimate)
    t = max_triangle_violation(m)
    out = m + t
    np.fill_diagonal(out, 0.0)
    u, v = np.nonzero(np.triu(out == 0, k=1))
    return MetricMatrix(out, t, list(zip(u.tolist(), v.tolist())))


def is_metric(matrix, tol: float = DEFAULT_TOL) -> tuple[bool, str | None]:
    """Check the metric axioms; returns (ok, description of the first violation)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False, "not a square matrix"
    n = len(m)
    asym = np.argwhere(np.abs(m - m.T) > tol)
    if len(asym):
        u, v = asym[0]
        return False, f"asymmetric at ({u}, {v}): {m[u, v]} != {m[v, u]}"
    diag = np.nonzero(np.abs(np.diag(m)) > tol)[0]
    if len(diag):
        return False, f"nonzero diagonal at {diag[0]}: {m[diag[0], diag[0]]}"
    neg = np.argwhere(m < -tol)
    if len(neg):
        u, v = neg[0]
        return False, f"negative entry at ({u}, {v}): {m[u, v]}"
    for w in range(n):
        excess = m - m[:, w, None] - m[None, w, :]
        if excess.max() <= tol:
            continue
        u, v = np.argwhere(excess > tol)[0]
        return False, (f"triangle violated for (u={u}, w={w}, v={v}): "
                       f"{m[u, v]} > {m[u, w]} + {m[w, v]}")
    return True, None
