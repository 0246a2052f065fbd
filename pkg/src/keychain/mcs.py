"""Maximum common edge subgraph of two graphs on the same vertex set.

``M(G1, G2)`` is the largest number of edges that ``G1`` and ``G2`` can share
after relabelling ``G2`` by a bijection ``pi``: ``|E(G1) & pi(E(G2))|``.
A witness ``pi`` is stored as a tuple with ``pi[a - 1]`` the image of vertex
``a`` of ``G2``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityError, ParameterError
from .graph import Graph, sample_gnp
from .seeding import derive_seed, make_rng

EXACT_LIMIT = 8


@dataclass(frozen=True)
class McsResult:
    M: int
    pi: tuple[int, ...]
    mode: str

    def to_dict(self) -> dict:
        return {"M": self.M, "pi": list(self.pi), "mode": self.mode}


def common_edges(G1: Graph, G2: Graph, pi: Sequence[int]) -> int:
    """``|E(G1) & pi(E(G2))|``, recomputed edge by edge."""
    if sorted(pi) != list(range(1, G1.n + 1)):
        raise ParameterError("witness is not a bijection of 1..n")
    return sum(1 for a, b in G2.edges() if G1.has_edge(pi[a - 1], pi[b - 1]))


def _check_pair(G1: Graph, G2: Graph) -> int:
    if G1.n != G2.n:
        raise ParameterError(f"graphs have {G1.n} and {G2.n} vertices")
    return G1.n


def _adjacency(G: Graph) -> np.ndarray:
    A = np.zeros((G.n, G.n), dtype=np.int64)
    for u, v in G.edges():
        A[u - 1, v - 1] = A[v - 1, u - 1] = 1
    return A


def mces_exact(G1: Graph, G2: Graph) -> McsResult:
    """Best bijection over all ``n!``; ties go to the lexicographically first."""
    n = _check_pair(G1, G2)
    if n > EXACT_LIMIT:
        raise CapacityError(f"exact MCES is limited to n <= {EXACT_LIMIT}, got n = {n}")
    if n == 0:
        return McsResult(0, (), "exact")
    A1 = _adjacency(G1)
    P = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    score = np.zeros(len(P), dtype=np.int64)
    for a, b in G2.edges():
        score += A1[P[:, a - 1], P[:, b - 1]]
    best = int(np.argmax(score))
    return McsResult(int(score[best]), tuple(int(x) + 1 for x in P[best]), "exact")


def _swap_deltas(A2: np.ndarray, M: np.ndarray) -> np.ndarray:
    # gain of exchanging the images of a and b, for all pairs at once
    X = A2 @ M.T
    d = np.diag(X)
    return X + X.T - d[:, None] - d[None, :] + 2 * A2 * M


def mces_heuristic(G1: Graph, G2: Graph, seed: int | None = 0, restarts: int = 4) -> McsResult:
    """Degree-aligned start and best-improvement pairwise swaps; a lower bound on ``M``.

    The first start sorts both vertex sets by degree with ties by index; later
    starts break degree ties at random.
    """
    n = _check_pair(G1, G2)
    if n == 0:
        return McsResult(0, (), "heuristic")
    A1, A2 = _adjacency(G1), _adjacency(G2)
    d1, d2 = A1.sum(axis=1), A2.sum(axis=1)
    rng = make_rng(seed)
    best_val, best_pi = -1, None
    for r in range(max(1, restarts)):
        if r == 0:
            t1, t2 = np.arange(n), np.arange(n)
        else:
            t1, t2 = rng.permutation(n), rng.permutation(n)
        o1 = np.lexsort((t1, -d1))
        o2 = np.lexsort((t2, -d2))
        pi = np.empty(n, dtype=np.int64)
        pi[o2] = o1
        while True:
            M = A1[np.ix_(pi, pi)]
            D = _swap_deltas(A2, M)
            a, b = np.unravel_index(int(np.argmax(D)), D.shape)
            if D[a, b] <= 0:
                break
            pi[a], pi[b] = pi[b], pi[a]
        val = int((A2 * A1[np.ix_(pi, pi)]).sum() // 2)
        if val > best_val:
            best_val, best_pi = val, pi.copy()
    return McsResult(best_val, tuple(int(x) + 1 for x in best_pi), "heuristic")


# -- union bound ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnionBound:
    """Log of ``C(C(n,2), m) * n! * p^(2m)`` with ``m = ceil((1 + eps) n)``.

    ``middle_log`` and ``simplified_log`` are the logs of the two relaxations
    ``((e n p^2 / (2(1+eps)))^(1+eps) * n)^n`` and ``(2 n^((-1+2 delta)(1+eps)+1))^n``;
    the latter is only defined when ``delta`` is given.
    """

    n: int
    eps: float
    delta: float | None
    p: float
    m: int
    log_bound: float
    middle_log: float
    simplified_log: float | None
    log_threshold: float = 0.0

    @property
    def certifies(self) -> bool:
        return self.log_bound < self.log_threshold

    @property
    def signs_agree(self) -> bool | None:
        if self.simplified_log is None:
            return None
        return (self.log_bound < 0) == (self.simplified_log < 0)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "eps": self.eps, "delta": self.delta, "p": self.p, "m": self.m,
            "log_bound": self.log_bound, "middle_log": self.middle_log,
            "simplified_log": self.simplified_log, "certifies": self.certifies,
            "signs_agree": self.signs_agree,
        }


def log_binomial(N: int, k: int) -> float:
    if k < 0 or k > N:
        return -math.inf
    return math.lgamma(N + 1) - math.lgamma(k + 1) - math.lgamma(N - k + 1)


def union_bound_eval(
    n: int, eps: float, delta: float | None = None, p: float | None = None, threshold: float = 1.0
) -> UnionBound:
    """Evaluate the union bound on ``Pr(M(G1, G2) >= m)`` in log space.

    ``p`` defaults to ``n^(-1 + delta)``.  The bound certifies when it is below
    ``threshold``.
    """
    if n <= 0:
        raise ParameterError(f"n must be positive, got {n}")
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if p is None:
        if delta is None:
            raise ParameterError("give p or delta")
        p = float(n) ** (-1 + delta)
    if not 0 < p <= 1:
        raise ParameterError(f"p must lie in (0, 1], got {p}")
    if threshold <= 0:
        raise ParameterError(f"threshold must be positive, got {threshold}")
    # round before ceil so that e.g. 1.5 * 10**6 is not pushed up by float noise
    m = math.ceil(round((1 + eps) * n, 9))
    N = n * (n - 1) // 2
    ln = math.log
    log_bound = log_binomial(N, m) + math.lgamma(n + 1) + 2 * m * ln(p)
    middle = n * ((1 + eps) * (1 + ln(n) + 2 * ln(p) - ln(2 * (1 + eps))) + ln(n))
    simplified = None
    if delta is not None:
        simplified = n * (ln(2) + ((-1 + 2 * delta) * (1 + eps) + 1) * ln(n))
    return UnionBound(n, eps, delta, p, m, log_bound, middle, simplified, ln(threshold))


# -- experiment ----------------------------------------------------------------------------


@dataclass
class McsTrial:
    trial: int
    M: int
    mode: str
    seed: int
    pi: tuple[int, ...] = ()

    def row(self) -> dict:
        return {"trial": self.trial, "M": self.M, "mode": self.mode, "seed": self.seed}


@dataclass
class McsSummary:
    n: int
    p: float
    trials: list[McsTrial] = field(default_factory=list)
    eps: tuple[float, ...] = (0.5,)

    @property
    def values(self) -> list[int]:
        return [t.M for t in self.trials]

    def to_dict(self) -> dict:
        vals = self.values
        out = {"n": self.n, "p": self.p, "trials": len(vals)}
        if vals:
            out.update(min=min(vals), max=max(vals), mean=float(np.mean(vals)))
        out["within"] = {
            str(e): (sum(v <= (1 + e) * self.n for v in vals) / len(vals) if vals else None) for e in self.eps
        }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["trial", "M", "mode", "seed"], lineterminator="\n")
        w.writeheader()
        for t in self.trials:
            w.writerow(t.row())
        return buf.getvalue()


def mcs_experiment(
    n: int,
    p: float,
    trials: int,
    seed: int = 0,
    mode: str = "auto",
    eps: Sequence[float] = (0.5,),
    restarts: int = 4,
) -> McsSummary:
    """``M`` for ``trials`` independent pairs ``G1, G2 ~ G(n, p)``.

    ``mode`` is ``exact``, ``heuristic`` or ``auto`` (exact when ``n <= 8``).
    Trial ``i`` draws both graphs from ``derive_seed(seed, "mcs", i)``.
    """
    if mode not in ("auto", "exact", "heuristic"):
        raise ParameterError(f"unknown mode {mode!r}")
    if trials < 0:
        raise ParameterError(f"trials must be non-negative, got {trials}")
    use_exact = mode == "exact" or (mode == "auto" and n <= EXACT_LIMIT)
    out = McsSummary(n, p, eps=tuple(eps))
    for i in range(trials):
        s = derive_seed(seed, "mcs", i)
        G1 = sample_gnp(n, p, derive_seed(s, "g1"))
        G2 = sample_gnp(n, p, derive_seed(s, "g2"))
        r = mces_exact(G1, G2) if use_exact else mces_heuristic(G1, G2, derive_seed(s, "search"), restarts)
        out.trials.append(McsTrial(i, r.M, r.mode, s, r.pi))
    return out
