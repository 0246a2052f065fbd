"""Graph representation, G(n, p) sampling, KeyChain templates and parameters.

Vertices are the integers ``1..n``.  A :class:`Graph` is immutable once built;
operations that "modify" a graph return a new one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import OverlapError, ParameterError, ParseError
from .seeding import make_rng

Edge = tuple[int, int]


def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """Simple undirected graph on ``1..n`` with per-vertex neighbour sets."""

    __slots__ = ("n", "_adj", "_m", "_masks")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        if n < 0:
            raise ParameterError(f"vertex count must be non-negative, got {n}")
        self.n = int(n)
        adj: list[set[int]] = [set() for _ in range(self.n + 1)]
        m = 0
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ParameterError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ParameterError(f"edge {{{u},{v}}} out of range 1..{self.n}")
            if v not in adj[u]:
                adj[u].add(v)
                adj[v].add(u)
                m += 1
        self._adj = tuple(frozenset(s) for s in adj)
        self._m = m
        self._masks = None

    @classmethod
    def _from_adjacency(cls, adj: Sequence[Iterable[int]]) -> "Graph":
        g = cls.__new__(cls)
        g.n = len(adj) - 1
        g._adj = tuple(frozenset(s) for s in adj)
        g._m = sum(len(s) for s in g._adj) // 2
        g._masks = None
        return g

    # -- basic queries -------------------------------------------------------

    @property
    def m(self) -> int:
        return self._m

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def degrees(self) -> list[int]:
        """Degree list indexed by vertex (entry 0 is unused and zero)."""
        return [len(s) for s in self._adj]

    def has_edge(self, u: int, v: int) -> bool:
        return 1 <= u <= self.n and v in self._adj[u]

    def edges(self) -> list[Edge]:
        """All edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return [(u, v) for u in range(1, self.n + 1) for v in sorted(self._adj[u]) if u < v]

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges())

    def max_degree(self) -> int:
        return max((len(s) for s in self._adj[1:]), default=0)

    def min_degree(self) -> int:
        return min((len(s) for s in self._adj[1:]), default=0)

    def __iter__(self) -> Iterator[int]:
        return iter(range(1, self.n + 1))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self.n, self._adj))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    # -- derived graphs ------------------------------------------------------

    def with_edges(self, extra: Iterable[Sequence[int]]) -> "Graph":
        adj = [set(s) for s in self._adj]
        for u, v in extra:
            if u == v:
                raise ParameterError(f"self-loop at vertex {u}")
            adj[u].add(v)
            adj[v].add(u)
        return Graph._from_adjacency(adj)

    def without_edges(self, removed: Iterable[Sequence[int]]) -> "Graph":
        adj = [set(s) for s in self._adj]
        for u, v in removed:
            adj[u].discard(v)
            adj[v].discard(u)
        return Graph._from_adjacency(adj)

    def restricted(self, W: Iterable[int]) -> "Graph":
        """``G[W]`` keeping the original labels; vertices outside W become isolated."""
        Ws = set(W)
        adj = [set() for _ in range(self.n + 1)]
        for v in Ws:
            adj[v] = self._adj[v] & Ws
        return Graph._from_adjacency(adj)

    def relabeled(self, order: Sequence[int]) -> tuple["Graph", dict[int, int]]:
        """Compact ``G[order]`` onto ``1..len(order)``; returns the graph and old->new map."""
        index = {v: i + 1 for i, v in enumerate(order)}
        adj = [set() for _ in range(len(order) + 1)]
        for v, i in index.items():
            adj[i] = {index[u] for u in self._adj[v] if u in index}
        return Graph._from_adjacency(adj), index

    def neighbor_masks(self) -> list[int]:
        """Bitmask adjacency: bit ``u-1`` of entry ``v-1`` is set iff ``uv`` is an edge."""
        if self._masks is None:
            self._masks = [sum(1 << (u - 1) for u in self._adj[v]) for v in range(1, self.n + 1)]
        return self._masks

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        return len(bfs_distances(self, [1])) == self.n


def bfs_distances(
    G: Graph, sources: Iterable[int], allowed: set[int] | frozenset[int] | None = None, limit: int | None = None
) -> dict[int, int]:
    """Multi-source BFS distances, optionally inside ``allowed`` and up to depth ``limit``."""
    dist = {s: 0 for s in sources}
    frontier = list(dist)
    d = 0
    while frontier and (limit is None or d < limit):
        d += 1
        nxt = []
        for u in frontier:
            for w in G.neighbors(u):
                if w not in dist and (allowed is None or w in allowed):
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


# -- sampling ----------------------------------------------------------------


def sample_gnp(n: int, p: float, seed: int | np.random.Generator | None = 0) -> Graph:
    """Binomial random graph G(n, p), deterministic for fixed ``(n, p, seed)``."""
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ParameterError(f"edge probability must lie in [0, 1], got {p}")
    rng = make_rng(seed)
    adj: list[set[int]] = [set() for _ in range(n + 1)]
    for u in range(1, n):
        hits = np.flatnonzero(rng.random(n - u) < p)
        for off in hits.tolist():
            v = u + 1 + off
            adj[u].add(v)
            adj[v].add(u)
    return Graph._from_adjacency(adj)


# -- KeyChain parameters and template ----------------------------------------


@dataclass(frozen=True)
class KeyChainParams:
    """Parameters ``(n, t, ell)`` of KC(n, t, ell) and the layer-size sequence.

    ``a_seq`` holds ``a_1..a_j0`` when the parameters came out of
    :func:`compute_parameters`; hand-built parameters may leave it empty.
    """

    n: int
    t: int
    ell: int
    a_seq: tuple[int, ...] = ()
    j0: int | None = None
    growth: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "a_seq", tuple(int(a) for a in self.a_seq))

    def problems(self) -> list[str]:
        n, t, ell = self.n, self.t, self.ell
        out = []
        if t < 0:
            out.append(f"t >= 0 (t={t})")
        if ell < 1:
            out.append(f"ell >= 1 (ell={ell})")
        if n - t < 3:
            out.append(f"n - t >= 3 so the cycle is simple (n={n}, t={t})")
        if t * (ell + 1) > n:
            out.append(f"t*(ell+1) <= n ({t}*{ell + 1} > {n})")
        if t * ell > n - t:
            out.append(f"t*ell <= n-t ({t}*{ell} > {n - t})")
        if self.a_seq:
            a = self.a_seq
            if a[0] != 1:
                out.append("a_1 = 1")
            if any(x >= y for x, y in zip(a, a[1:])):
                out.append("a_seq strictly increasing")
            if self.j0 is not None and (self.j0 != len(a) or ell != 2 * self.j0):
                out.append(f"ell = 2*j0 with j0 = len(a_seq) (ell={ell}, j0={self.j0}, len={len(a)})")
        return out

    def validate(self) -> "KeyChainParams":
        bad = self.problems()
        if bad:
            raise ParameterError("invalid KeyChain parameters, violated: " + "; ".join(bad))
        return self

    def key_position(self, i: int) -> int:
        """Cycle vertex of the template to which key ``i`` (1-based) is attached."""
        return i * self.ell

    def to_dict(self) -> dict:
        return {"n": self.n, "t": self.t, "ell": self.ell, "j0": self.j0, "a_seq": list(self.a_seq)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "KeyChainParams":
        return cls(
            n=int(data["n"]),
            t=int(data["t"]),
            ell=int(data["ell"]),
            a_seq=tuple(data.get("a_seq") or ()),
            j0=data.get("j0"),
        )

    @classmethod
    def from_json(cls, text: str) -> "KeyChainParams":
        return cls.from_dict(json.loads(text))


def keychain_template(params: KeyChainParams) -> Graph:
    """The graph KC(n, t, ell): a cycle on ``1..n-t`` plus key ``n-t+i`` hung at ``i*ell``."""
    params.validate()
    n, t, ell = params.n, params.t, params.ell
    c = n - t
    edges = [(i, i + 1) for i in range(1, c)]
    edges.append((c, 1))
    edges.extend((i * ell, c + i) for i in range(1, t + 1))
    return Graph(n, edges)


def _ln_decimal(n: int, prec: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = prec
        return Decimal(n).ln()


def compute_parameters(
    n: int, profile: str = "paper", growth: float | None = None, check_comb_fits: bool | None = None
) -> KeyChainParams:
    """Derive ``t = floor(ln n)``, the sequence ``a_j`` and ``ell = 2*j0``.

    ``profile="paper"`` uses growth ``ln n / 100``; ``profile="desk"`` uses the
    given ``growth`` (default ``max(ln n / 100, 2)``).  All ceilings are exact:
    the logarithm is evaluated in decimal arithmetic with enough digits to
    cover ``n``.
    """
    n = int(n)
    if n < 3:
        raise ParameterError(f"n must be at least 3, got {n}")
    prec = len(str(n)) + 40
    ln_n = _ln_decimal(n, prec)
    with localcontext() as ctx:
        ctx.prec = prec
        if profile == "paper":
            if growth is not None:
                raise ParameterError("profile 'paper' fixes growth = ln n / 100")
            g = ln_n / 100
        elif profile == "desk":
            g = max(ln_n / 100, Decimal(2)) if growth is None else Decimal(repr(float(growth)))
        else:
            raise ParameterError(f"unknown profile {profile!r}")
        if g <= 1:
            raise ParameterError(
                f"growth factor {float(g):.6g} <= 1: the recurrence a_(j+1) = ceil(a_j * g) makes no progress"
            )
        target = 10 * Decimal(n) / ln_n
        a = [1]
        while Decimal(a[-1]) < target:
            a.append(int((Decimal(a[-1]) * g).to_integral_value(rounding=ROUND_CEILING)))
        t = int(ln_n.to_integral_value(rounding=ROUND_FLOOR))
    j0 = len(a)
    params = KeyChainParams(n=n, t=t, ell=2 * j0, a_seq=tuple(a), j0=j0, growth=float(g))
    bad = params.problems()
    if bad:
        raise ParameterError(f"infeasible parameters for n={n}: " + "; ".join(bad))
    if check_comb_fits is None:
        check_comb_fits = profile == "desk"
    if check_comb_fits and 2 * t * (params.ell + 1) > n:
        raise ParameterError(
            f"infeasible parameters for n={n}: comb size t*(ell+1) = {t * (params.ell + 1)} exceeds n/2"
        )
    return params


# -- degree classes and set statistics ----------------------------------------


def small_threshold(n: int) -> int:
    """Default degree threshold of the Small set: ``floor(ln n / 10)``."""
    return int(math.floor(math.log(n) / 10)) if n > 1 else 0


@dataclass(frozen=True)
class DegreeClasses:
    classes: dict[int, frozenset[int]]
    threshold: int
    small: frozenset[int] = field(default_factory=frozenset)

    def D(self, i: int) -> frozenset[int]:
        return self.classes.get(i, frozenset())

    def at_most(self, i: int) -> frozenset[int]:
        return frozenset().union(*(s for d, s in self.classes.items() if d <= i))

    def sizes(self) -> dict[int, int]:
        return {d: len(s) for d, s in sorted(self.classes.items())}


def degree_classes(G: Graph, threshold: int | None = None) -> DegreeClasses:
    if threshold is None:
        threshold = small_threshold(G.n)
    buckets: dict[int, set[int]] = {}
    for v in G:
        buckets.setdefault(G.degree(v), set()).add(v)
    classes = {d: frozenset(s) for d, s in sorted(buckets.items())}
    small = frozenset(v for d, s in classes.items() if d <= threshold for v in s)
    return DegreeClasses(classes=classes, threshold=threshold, small=small)


@dataclass(frozen=True)
class SetStats:
    e_U: int
    e_UW: int
    N_U: frozenset[int]
    common: frozenset[int]


def external_neighborhood(G: Graph, U: Iterable[int]) -> set[int]:
    Us = set(U)
    out: set[int] = set()
    for u in Us:
        out |= G.neighbors(u)
    return out - Us


def edges_within(G: Graph, U: Iterable[int]) -> int:
    Us = set(U)
    return sum(len(G.neighbors(u) & Us) for u in Us) // 2


def edges_between(G: Graph, U: Iterable[int], W: Iterable[int]) -> int:
    Ws = set(W)
    return sum(len(G.neighbors(u) & Ws) for u in set(U))


def set_stats(G: Graph, U: Iterable[int], W: Iterable[int] = ()) -> SetStats:
    """``e(U)``, ``e(U, W)``, ``N(U)`` and ``N(U) & N(W)`` for disjoint U, W."""
    Us, Ws = set(U), set(W)
    for v in Us | Ws:
        if not 1 <= v <= G.n:
            raise ParameterError(f"vertex {v} out of range 1..{G.n}")
    if Us & Ws:
        raise OverlapError(f"U and W must be disjoint, share {sorted(Us & Ws)[:5]}")
    N_U = external_neighborhood(G, Us)
    N_W = external_neighborhood(G, Ws)
    return SetStats(
        e_U=edges_within(G, Us),
        e_UW=edges_between(G, Us, Ws),
        N_U=frozenset(N_U),
        common=frozenset(N_U & N_W),
    )


# -- edge-list text format -----------------------------------------------------


def serialize(G: Graph) -> str:
    lines = [f"{G.n} {G.m}"]
    lines.extend(f"{u} {v}" for u, v in G.edges())
    return "\n".join(lines) + "\n"


def parse(text: str) -> Graph:
    """Parse the ``"n m"`` header + ``m`` edge lines format."""
    rows = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, toks) for i, toks in rows if toks]
    if not rows:
        raise ParseError("empty input: expected header 'n m'", None)
    hline, header = rows[0]
    if len(header) != 2:
        raise ParseError(f"header must be 'n m', got {' '.join(header)!r}", hline)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(f"non-integer header {' '.join(header)!r}", hline) from None
    if n < 0 or m < 0:
        raise ParseError("n and m must be non-negative", hline)
    seen: set[Edge] = set()
    for lineno, toks in rows[1:]:
        if len(toks) != 2:
            raise ParseError(f"expected 'u v', got {' '.join(toks)!r}", lineno)
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            raise ParseError(f"non-integer vertex in {' '.join(toks)!r}", lineno) from None
        if not (1 <= u <= n and 1 <= v <= n):
            raise ParseError(f"vertex out of range 1..{n} in edge {u} {v}", lineno)
        if u == v:
            raise ParseError(f"self-loop {u} {v}", lineno)
        e = _norm(u, v)
        if e in seen:
            raise ParseError(f"duplicate edge {e[0]} {e[1]}", lineno)
        seen.add(e)
    if len(seen) != m:
        raise ParseError(f"header declares {m} edges but {len(seen)} were given", hline)
    return Graph(n, seen)


def read_graph(path) -> Graph:
    with open(path, encoding="ascii") as fh:
        return parse(fh.read())


def write_graph(G: Graph, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(serialize(G))
