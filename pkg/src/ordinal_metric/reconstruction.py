"""Metric reconstruction from quadruple comparisons only.

The pipeline anchors a chain at the sample's diameter pair, refines it by
repeatedly inserting approximate midpoints, and reads every distance off the
deepest chain whose dyadic ruler is self-consistent. All access to the sample
goes through ``oracle.compare`` and ``oracle.compare_many``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Any, Sequence

import numpy as np

from .oracle import compare_max


class DegenerateSampleError(ValueError):
    """All sample points coincide."""


class ReconstructionFailed(RuntimeError):
    """No chain level satisfies the bracket-equality condition."""


@dataclass(frozen=True)
class Chain:
    level: int
    members: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) != 2 ** self.level + 1:
            raise ValueError(
                f"level-{self.level} chain needs {2 ** self.level + 1} members, got {len(self.members)}")

    def __len__(self):
        return len(self.members)


@dataclass
class BracketMatrix:
    level: int
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class LevelDiagnostic:
    p: int
    exists: bool
    equality_on_chain: bool


@dataclass
class ReconstructionResult:
    p_n: int
    chains: list[Chain]
    level_diagnostics: list[LevelDiagnostic]
    queries: int
    brackets: BracketMatrix | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def diameter_pair(self) -> tuple[int, int]:
        return self.chains[0].members

    @property
    def estimated_distance(self) -> np.ndarray:
        return self.brackets.upper

    @property
    def chain(self) -> Chain:
        return self.chains[self.p_n]

    def to_json(self) -> dict[str, Any]:
        out = {
            "p_n": self.p_n,
            "diameter_pair": list(self.diameter_pair),
            "chains": [list(c.members) for c in self.chains],
            "d_plus": self.brackets.upper.tolist(),
            "d_minus": self.brackets.lower.tolist(),
            "queries": self.queries,
            "level_diagnostics": [
                {"p": d.p, "exists": d.exists, "equality_on_chain": d.equality_on_chain}
                for d in self.level_diagnostics
            ],
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ReconstructionResult":
        chains = [Chain(p, tuple(int(i) for i in ids)) for p, ids in enumerate(obj["chains"])]
        p_n = int(obj["p_n"])
        brackets = BracketMatrix(p_n, np.array(obj["d_minus"], dtype=float),
                                 np.array(obj["d_plus"], dtype=float))
        diags = [LevelDiagnostic(int(d["p"]), bool(d["exists"]), bool(d["equality_on_chain"]))
                 for d in obj["level_diagnostics"]]
        known = {"p_n", "diameter_pair", "chains", "d_plus", "d_minus", "queries", "level_diagnostics"}
        extra = {k: v for k, v in obj.items() if k not in known}
        return cls(p_n, chains, diags, int(obj["queries"]), brackets, extra)


def default_p_cap(n: int) -> int:
    return math.ceil(math.log2(n)) + 2


def _upper_pairs(n):
    u, v = np.triu_indices(n, k=1)
    return u.astype(np.int64), v.astype(np.int64)


def diameter_pair(oracle, n: int | None = None) -> tuple[int, int]:
    """Lexicographically first pair of maximal distance.

    A knockout tournament over pairs listed in lexicographic order, where the
    left entrant wins ties: ``n(n-1)/2 - 1`` comparisons, plus one more to
    reject a sample whose points all coincide.
    """
    n = oracle.n if n is None else n
    if n < 2:
        raise ValueError("need at least two points")
    p, q = _upper_pairs(n)
    while len(p) > 1:
        half = len(p) // 2
        lp, lq = p[0:2 * half:2], q[0:2 * half:2]
        rp, rq = p[1:2 * half:2], q[1:2 * half:2]
        right_wins = ~oracle.compare_many(rp, rq, lp, lq)
        wp = np.where(right_wins, rp, lp)
        wq = np.where(right_wins, rq, lq)
        if len(p) % 2:
            wp = np.append(wp, p[-1])
            wq = np.append(wq, q[-1])
        p, q = wp, wq
    best = (int(p[0]), int(q[0]))
    if oracle.compare(best, (0, 0)):
        raise DegenerateSampleError("all sample points coincide")
    return best


def midpoint_candidates(oracle, a: int, b: int, n: int | None = None) -> list[int]:
    """Ids z outside {a, b} with max(d(a,z), d(b,z)) <= d(a,b), ascending."""
    n = oracle.n if n is None else n
    if a == b:
        raise ValueError("midpoint candidates need a != b")
    z = np.array([i for i in range(n) if i != a and i != b], dtype=np.int64)
    if not len(z):
        return []
    ok = oracle.compare_many(a, z, a, b)
    z = z[ok]
    ok = oracle.compare_many(b, z, a, b)
    return [int(i) for i in z[ok]]


def approx_midpoint(oracle, a: int, b: int, n: int | None = None) -> int | None:
    """Candidate minimizing max(d(a,z), d(b,z)); smallest id on ties."""
    best = None
    for z in midpoint_candidates(oracle, a, b, n):
        if best is None or not compare_max(oracle, a, b, best, a, b, z):
            best = z
    return best


def refine_chain(oracle, chain: Chain, n: int | None = None) -> Chain | None:
    """Insert a midpoint between every adjacent pair, or None if one is missing."""
    members = [chain.members[0]]
    for a, b in zip(chain.members, chain.members[1:]):
        m = approx_midpoint(oracle, a, b, n)
        if m is None:
            return None
        members += [m, b]
    return Chain(chain.level + 1, tuple(members))


def chain_pseudo_distance(chain: Chain, i: int, j: int) -> float:
    m = len(chain)
    if not (0 <= i < m and 0 <= j < m):
        raise IndexError(f"chain positions must lie in 0..{m - 1}")
    return abs(i - j) * 2.0 ** -chain.level


class ChainRanking:
    """Chain position pairs sorted by distance, for O(log m) bracket lookups.

    Holds every pair i < j plus a single (0, 0) pair standing in for all the
    zero-length i = j pairs. The sort uses one comparison per step and is
    stable, so distance ties keep lexicographic position order.
    """

    def __init__(self, oracle, chain: Chain):
        self.chain = chain
        ids = np.array(chain.members, dtype=np.int64)
        m = len(ids)
        iu, ju = np.triu_indices(m, k=1)
        pos_i = np.concatenate([[0], iu]).astype(np.int64)
        pos_j = np.concatenate([[0], ju]).astype(np.int64)
        pairs = list(zip(ids[pos_i].tolist(), ids[pos_j].tolist()))

        def cmp(x, y):
            return 0 if oracle.compare(pairs[y], pairs[x]) else -1

        order = np.array(sorted(range(len(pairs)), key=cmp_to_key(cmp)), dtype=np.int64)
        self.p = ids[pos_i][order]
        self.q = ids[pos_j][order]
        self.pos_i = pos_i[order]
        self.pos_j = pos_j[order]
        step = 2.0 ** -chain.level
        self.c = (self.pos_j - self.pos_i) * step
        self.prefix_max = np.maximum.accumulate(self.c)
        self.suffix_min = np.minimum.accumulate(self.c[::-1])[::-1]

    def __len__(self):
        return len(self.c)

    def brackets(self, oracle, u, v) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (lower, upper) brackets for id pairs (u, v)."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        k = len(self.c)

        # first rank whose distance is >= d(u, v); the last rank is the
        # diameter pair, so it always qualifies
        lo = np.zeros(u.shape, dtype=np.int64)
        hi = np.full(u.shape, k - 1, dtype=np.int64)
        while True:
            act = np.nonzero(lo < hi)[0]
            if not len(act):
                break
            mid = (lo[act] + hi[act]) // 2
            ok = oracle.compare_many(u[act], v[act], self.p[mid], self.q[mid])
            hi[act] = np.where(ok, mid, hi[act])
            lo[act] = np.where(ok, lo[act], mid + 1)
        upper = self.suffix_min[lo]

        # last rank whose distance is <= d(u, v); rank 0 has distance 0
        lo = np.zeros(u.shape, dtype=np.int64)
        hi = np.full(u.shape, k - 1, dtype=np.int64)
        while True:
            act = np.nonzero(lo < hi)[0]
            if not len(act):
                break
            mid = (lo[act] + hi[act] + 1) // 2
            ok = oracle.compare_many(self.p[mid], self.q[mid], u[act], v[act])
            lo[act] = np.where(ok, mid, lo[act])
            hi[act] = np.where(ok, hi[act], mid - 1)
        lower = self.prefix_max[lo]
        return lower, upper

    def chain_equality(self, oracle) -> bool:
        """Whether d+ = d- on every pair of chain positions."""
        ids = np.array(self.chain.members, dtype=np.int64)
        i, j = np.triu_indices(len(ids), k=1)
        pairs = np.unique(np.stack([ids[i], ids[j]], axis=1), axis=0)
        lower, upper = self.brackets(oracle, pairs[:, 0], pairs[:, 1])
        return bool(np.all(lower == upper))


def bracket_estimates(oracle, chain: Chain, u: int, v: int,
                      ranking: ChainRanking | None = None) -> tuple[float, float]:
    """(d-, d+) of the pair (u, v) against the dyadic ruler of ``chain``."""
    if ranking is None:
        ranking = ChainRanking(oracle, chain)
    lower, upper = ranking.brackets(oracle, [u], [v])
    return float(lower[0]), float(upper[0])


def naive_bracket_estimates(oracle, chain: Chain, u: int, v: int) -> tuple[float, float]:
    """Direct min/max scan over all chain position pairs, i = j included."""
    step = 2.0 ** -chain.level
    lower, upper = 0.0, math.inf
    members = chain.members
    for i, a in enumerate(members):
        for j, b in enumerate(members):
            c = abs(i - j) * step
            if oracle.compare((a, b), (u, v)):
                lower = max(lower, c)
            if oracle.compare((u, v), (a, b)):
                upper = min(upper, c)
    return lower, upper


def bracket_matrix(oracle, ranking: ChainRanking, n: int | None = None) -> BracketMatrix:
    """Brackets for every pair of sample points against one chain."""
    n = oracle.n if n is None else n
    u, v = _upper_pairs(n)
    lo, up = ranking.brackets(oracle, u, v)
    lower = np.zeros((n, n))
    upper = np.zeros((n, n))
    lower[u, v] = lo
    lower[v, u] = lo
    upper[u, v] = up
    upper[v, u] = up
    return BracketMatrix(ranking.chain.level, lower, upper)


def build_chains(oracle, n: int | None = None, p_cap: int | None = None) -> list[Chain]:
    """Chains from level 0 up to the first missing level or ``p_cap``."""
    n = oracle.n if n is None else n
    p_cap = default_p_cap(n) if p_cap is None else p_cap
    chains = [Chain(0, diameter_pair(oracle, n))]
    while chains[-1].level < p_cap:
        nxt = refine_chain(oracle, chains[-1], n)
        if nxt is None:
            break
        chains.append(nxt)
    return chains


def select_level(oracle, n: int | None = None, p_cap: int | None = None) -> ReconstructionResult:
    """Build the chains and pick the deepest self-consistent level.

    Every existing level is checked because the condition need not be
    monotone in the level.
    """
    n = oracle.n if n is None else n
    p_cap = default_p_cap(n) if p_cap is None else p_cap
    if p_cap < 1:
        raise ValueError("p_cap must be at least 1")
    start = oracle.queries
    chains = [Chain(0, diameter_pair(oracle, n))]
    diags = []
    best, best_ranking = None, None
    for p in range(1, p_cap + 1):
        nxt = refine_chain(oracle, chains[-1], n)
        if nxt is None:
            diags.append(LevelDiagnostic(p, False, False))
            break
        chains.append(nxt)
        ranking = ChainRanking(oracle, nxt)
        ok = ranking.chain_equality(oracle)
        diags.append(LevelDiagnostic(p, True, ok))
        if ok:
            best, best_ranking = p, ranking
    if best is None:
        raise ReconstructionFailed(
            f"no chain level in 1..{p_cap} is self-consistent "
            f"(deepest chain: level {chains[-1].level}); the sample is too sparse")
    result = ReconstructionResult(best, chains, diags, oracle.queries - start)
    result.extra["_ranking"] = best_ranking
    return result


@dataclass(frozen=True)
class ReconstructConfig:
    p_cap: int | None = None


def reconstruct(oracle, n: int | None = None, config: ReconstructConfig | None = None) -> ReconstructionResult:
    """Full pipeline: diameter pair, chains, level selection, all-pairs brackets."""
    n = oracle.n if n is None else n
    config = config or ReconstructConfig()
    if n < 2:
        raise ValueError("need at least two points")
    start = oracle.queries
    result = select_level(oracle, n, config.p_cap)
    ranking = result.extra.pop("_ranking")
    result.brackets = bracket_matrix(oracle, ranking, n)
    result.queries = oracle.queries - start
    return result


def predicted_level_lower_bound(d_h: float) -> int:
    """Guaranteed minimum selected level given the sample's Hausdorff distance.

    Evaluates floor((-log(C d_h) - log(log(e / d_h))) / log 2) with
    C = 12 / log 2, clamped at 0. A value below 1 guarantees nothing.
    """
    if not 0 < d_h <= 1:
        raise ValueError(f"Hausdorff distance must lie in (0, 1], got {d_h}")
    c0 = 12 / math.log(2)
    raw = (-math.log(c0 * d_h) - math.log(math.log(math.e / d_h))) / math.log(2)
    return max(0, math.floor(raw))


def level_brackets(oracle, chains: Sequence[Chain], n: int | None = None) -> list[BracketMatrix]:
    """Bracket matrices at each of ``chains``; used for cross-level checks."""
    return [bracket_matrix(oracle, ChainRanking(oracle, c), n) for c in chains]
