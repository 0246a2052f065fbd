"""Embedding KC(n, t, ell) into a host graph.

The pipeline runs four stages: pick the keys, set aside two reservoirs,
build a comb of exact-length paths between the keys' attachment vertices,
and close the chain with a Hamilton path through everything else.  Its output
is an explicit vertex map that :func:`verify_embedding` checks from scratch.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import posa
from .constants import Constants, profile_constants
from .errors import InfeasibleError, ParameterError
from .graph import Graph, KeyChainParams, bfs_distances, compute_parameters, degree_classes
from .seeding import derive_seed, make_rng

INF = float("inf")


# -- keys --------------------------------------------------------------------------------


def _conflicts(G: Graph, x: int, chosen: Iterable[int]) -> int | None:
    """A chosen key that ``x`` is adjacent to or shares a neighbour with."""
    Nx = G.neighbors(x)
    for k in chosen:
        if k in Nx or Nx & G.neighbors(k):
            return k
    return None


def _viable(G: Graph, x: int) -> bool:
    # as a pendant key, x removes one edge from each neighbour; all of them must stay on the cycle
    return all(G.degree(u) >= 3 for u in G.neighbors(x))


def _cycle_possible(n: int, vertices: list[int], edges: list[tuple[int, int]], rounds: int = 1) -> bool:
    """False only when the graph on ``vertices`` provably has no Hamilton cycle.

    A quick extension-rotation run settles most cases; the integer program
    (a bare 2-factor when ``rounds`` is 1) handles the rest.
    """
    if len(vertices) >= 3:
        cyc, _ = posa.hamilton_cycle_heuristic(Graph(n, edges), vertices, seed=0, restarts=2)
        if cyc is not None:
            return True
    cyc, decided = posa.cycle_milp(vertices, edges, max_rounds=rounds, time_limit=10.0)
    return cyc is not None or not decided


def _two_factor_after(G: Graph, removed: set[int]) -> bool:
    """False only when ``G - removed`` provably has no 2-factor (so no Hamilton cycle)."""
    R = sorted(set(G.vertices) - removed)
    edges = [(u, v) for u in R for v in G.neighbors(u) if u < v and v not in removed]
    return _cycle_possible(G.n, R, edges)


def select_keys(
    G: Graph,
    t: int,
    strategy: str = "paper",
    seed: int | np.random.Generator | None = None,
    check: bool = False,
) -> list[int]:
    """``t`` pairwise non-adjacent keys with disjoint neighbourhoods, all of ``D_1`` included.

    ``paper`` fills up from ``D_2`` by smallest index; ``lowest-degree`` takes
    vertices in order of degree, preferring within a degree those whose
    neighbours all have degree at least 3.  Candidates that conflict with keys
    already taken are skipped.  With a seed, ties are broken at random.  With
    ``check``, the first pass of ``lowest-degree`` also skips candidates after
    which ``G - K`` has no 2-factor, since ``G - K`` must carry the cycle.
    """
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t}")
    dc = degree_classes(G)
    d0, d1 = sorted(dc.D(0)), sorted(dc.D(1))
    if d0 and G.n > 1:
        raise InfeasibleError("isolated-vertex", f"vertex {d0[0]} is isolated", vertex=d0[0])
    if len(d1) > t:
        raise InfeasibleError("too-many-leaves", f"|D_1| = {len(d1)} exceeds t = {t}", D1=d1, t=t)
    tie = {v: v for v in G}
    if seed is not None:
        rng = make_rng(seed)
        tie = dict(zip(G.vertices, (rng.permutation(G.n) + 1).tolist()))
    if strategy == "paper":
        pool = sorted(dc.D(2), key=lambda v: tie[v])
        if len(d1) + len(pool) < t:
            raise InfeasibleError("not-enough-candidates", f"|D_<=2| = {len(d1) + len(pool)} < t = {t}")
    elif strategy == "lowest-degree":
        rest = [v for v in G if G.degree(v) >= 2]
        pool = sorted(rest, key=lambda v: (G.degree(v), not _viable(G, v), tie[v]))
    else:
        raise ParameterError(f"unknown key strategy {strategy!r}")
    keys: list[int] = []
    for x in d1:
        k = _conflicts(G, x, keys)
        if k is not None:
            raise InfeasibleError("key-conflict", f"degree-1 vertices {k} and {x} conflict", pair=[k, x])
        keys.append(x)
    # rem[v]: neighbours of v that are not keys; every non-key vertex should keep two of them
    rem = {v: G.degree(v) for v in G}
    for x in keys:
        for u in G.neighbors(x):
            rem[u] -= 1
    passes = (True, False) if strategy == "lowest-degree" else (False,)
    for careful in passes:
        for x in pool:
            if len(keys) == t:
                break
            if x in keys or _conflicts(G, x, keys) is not None:
                continue
            if careful and any(rem[u] < 3 for u in G.neighbors(x)):
                continue
            if careful and check and not _two_factor_after(G, set(keys) | {x}):
                continue
            keys.append(x)
            for u in G.neighbors(x):
                rem[u] -= 1
    if len(keys) < t:
        raise InfeasibleError("not-enough-candidates", f"only {len(keys)} conflict-free keys, need {t}", keys=keys)
    return sorted(keys)


# -- reservoirs ------------------------------------------------------------------------


@dataclass
class Partition:
    K: tuple[int, ...]
    U1: frozenset[int]
    U2: frozenset[int]
    Vprime: frozenset[int]
    small: frozenset[int] = frozenset()
    blobs: list[list[int]] = field(default_factory=list)
    pairs: list[tuple[int, int]] = field(default_factory=list)
    resamples: int = 0
    reservoirs: bool = True

    def to_dict(self) -> dict:
        return {
            "K": list(self.K),
            "U1": sorted(self.U1),
            "U2": sorted(self.U2),
            "resamples": self.resamples,
            "reservoirs": self.reservoirs,
        }


def trivial_partition(G: Graph, K: Iterable[int]) -> Partition:
    """No reservoirs: ``V' = V``."""
    return Partition(tuple(sorted(K)), frozenset(), frozenset(), frozenset(G.vertices), reservoirs=False)


def partition_violations(G: Graph, part: Partition, constants: Constants) -> list[tuple[str, int]]:
    """Every failed invariant as ``(tag, vertex)``; tags are ``a``, ``b``, ``c-U1``, ``c-U2``, ``c-V'``, ``d``."""
    out = []
    K, U1, U2, Vp = set(part.K), part.U1, part.U2, part.Vprime
    if K & (U1 | U2) or U1 & U2 or not K <= Vp:
        out.extend(("a", v) for v in sorted((K & (U1 | U2)) | (U1 & U2)))
    for x in sorted(K):
        if not G.neighbors(x) <= Vp - K:
            out.append(("b", x))
    if not part.reservoirs:
        return out
    low, high, vprime = constants.reservoir_bounds(G.n)
    for v in G:
        if v in part.small:
            continue
        Nv = G.neighbors(v)
        a, b = len(Nv & U1), len(Nv & U2)
        if not low <= a <= high:
            out.append(("c-U1", v))
        if not low <= b <= high:
            out.append(("c-U2", v))
        if len(Nv & Vp) < vprime:
            out.append(("c-V'", v))
    for v in sorted(part.small - K):
        if v not in U1 or not G.neighbors(v) <= U1:
            out.append(("d", v))
    return out


def partition_vertices(
    G: Graph,
    K: Iterable[int],
    constants: Constants | None = None,
    seed: int | np.random.Generator | None = 0,
    max_resamples: int = 100,
) -> Partition:
    """Blob partition with one random pair per blob, corrected and resampled until the invariants hold.

    The corrections are ``U1 = (U1' | S+) - K+`` and ``U2 = U2' - (S+ | K+)``
    with ``K+ = K | N(K)`` and ``S+ = Small | N(Small)``.  Violated degree
    bounds trigger resampling of the blobs meeting the violating vertices'
    neighbourhoods.
    """
    c = constants or Constants.desk()
    gamma = c.gamma
    if not 0 < gamma < 0.5:
        raise ParameterError(f"gamma must lie in (0, 1/2), got {gamma}")
    n = G.n
    s = math.ceil(1 / gamma - 1e-12)
    if s > n:
        raise ParameterError(f"blob size s = {s} exceeds n = {n}")
    rng = make_rng(seed)
    K = tuple(sorted(K))
    Kset = set(K)
    small = degree_classes(G, c.small_cutoff(n)).small
    Kplus = Kset.union(*(G.neighbors(x) for x in K)) if K else set()
    Splus = set(small).union(*(G.neighbors(v) for v in small)) if small else set()

    order = (rng.permutation(n) + 1).tolist()
    r = n // s
    blobs = [order[j * s : (j + 1) * s] for j in range(r)]
    blob_of = {v: j for j, A in enumerate(blobs) for v in A}

    def draw(j):
        a, b = rng.choice(s, 2, replace=False).tolist()
        return blobs[j][a], blobs[j][b]

    pairs = [draw(j) for j in range(r)]
    resamples = 0
    while True:
        U1p = {p[0] for p in pairs}
        U2p = {p[1] for p in pairs}
        U1 = frozenset((U1p | Splus) - Kplus)
        U2 = frozenset(U2p - Splus - Kplus)
        Vp = frozenset(set(G.vertices) - U1 - U2)
        part = Partition(K, U1, U2, Vp, frozenset(small), blobs, list(pairs), resamples, True)
        bad = partition_violations(G, part, c)
        if not bad:
            return part
        structural = [b for b in bad if b[0] in ("a", "b", "d")]
        if structural:
            raise InfeasibleError(
                "partition-structure", f"{len(structural)} structural violations", violations=structural[:20]
            )
        if resamples >= max_resamples:
            raise InfeasibleError(
                "partition-resamples", f"resample budget {max_resamples} exhausted", violations=bad[:20]
            )
        touched = sorted({blob_of[u] for _, v in bad for u in G.neighbors(v) if u in blob_of})
        if not touched:
            raise InfeasibleError("partition-stuck", "violations not influenced by any blob", violations=bad[:20])
        for j in touched:
            pairs[j] = draw(j)
        resamples += 1


# -- comb -------------------------------------------------------------------------------


@dataclass
class Comb:
    keys: list[int]
    attach: list[int]
    paths: list[list[int]]
    Y: dict[int, list[int]] = field(default_factory=dict)
    Z: dict[int, list[int]] = field(default_factory=dict)
    methods: list[str] = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.keys)

    @property
    def vertices(self) -> set[int]:
        X = set(self.keys) | set(self.attach)
        for P in self.paths:
            X.update(P)
        return X

    def to_dict(self) -> dict:
        return {"keys": self.keys, "attach": self.attach, "paths": self.paths, "methods": self.methods}


def comb_problems(G: Graph, comb: Comb, ell: int, Vprime: Iterable[int] | None = None) -> list[str]:
    """Invariant audit: key edges, path lengths and endpoints, and the disjointness pattern."""
    out = []
    Vp = None if Vprime is None else set(Vprime)
    t = comb.t
    if len(set(comb.attach)) != t:
        out.append("attachments not distinct")
    for x, w in zip(comb.keys, comb.attach):
        if not G.has_edge(x, w):
            out.append(f"key {x} not adjacent to attachment {w}")
    if len(comb.paths) != max(0, t - 1):
        out.append(f"expected {max(0, t - 1)} paths, got {len(comb.paths)}")
    for i, P in enumerate(comb.paths):
        if len(P) != ell + 1:
            out.append(f"P_{i + 1} has length {len(P) - 1}, not {ell}")
        if P[0] != comb.attach[i] or P[-1] != comb.attach[i + 1]:
            out.append(f"P_{i + 1} does not join w_{i + 1} and w_{i + 2}")
        why = posa.path_problem(G, P, Vp)
        if why:
            out.append(f"P_{i + 1}: {why}")
        if set(P) & set(comb.keys):
            out.append(f"P_{i + 1} uses a key")
    for i in range(len(comb.paths)):
        for j in range(i + 1, len(comb.paths)):
            common = set(comb.paths[i]) & set(comb.paths[j])
            expect = {comb.attach[i + 1]} if j == i + 1 else set()
            if common != expect:
                out.append(f"P_{i + 1} and P_{j + 1} share {sorted(common)}")
    return out


def length_paths(
    G: Graph,
    allowed: set[int],
    s: int,
    target: int,
    L: int,
    budget: int = 200_000,
    rng: np.random.Generator | None = None,
    guard: tuple[dict[int, int], set[int]] | None = None,
    accept: Callable[[list[int]], bool] | None = None,
) -> Iterator[list[int]]:
    """Paths with exactly ``L`` edges from ``s`` to ``target`` inside ``allowed``, by pruned DFS.

    Complete paths rejected by ``accept`` are skipped and the search goes on;
    the search stops for good after ``budget`` steps.

    ``guard = (free, soft)`` forbids interior vertices whose removal would leave a
    vertex ``u`` in ``free`` with fewer than 2 remaining free neighbours (1 if
    ``u`` is in ``soft``); ``free[u]`` is the current count.
    """
    if L == 0:
        if s == target:
            yield [s]
        return
    if s == target:
        return
    room = set(allowed) | {s, target}
    dist = bfs_distances(G, [target], allowed=room)
    if dist.get(s, INF) > L:
        return
    noise = {}

    def order(v, rem):
        nb = [u for u in G.neighbors(v) if u in room]
        if rng is not None:
            for u in nb:
                if u not in noise:
                    noise[u] = float(rng.random())
            return iter(sorted(nb, key=lambda u: (abs(dist.get(u, INF) - (rem - 1)), noise[u])))
        return iter(sorted(nb, key=lambda u: (abs(dist.get(u, INF) - (rem - 1)), u)))

    hits: dict[int, int] = {}

    def deficient(v):
        """Neighbours of ``v`` left short once ``v`` joins the path (``None`` if more than one)."""
        free, soft = guard
        short = []
        for u in G.neighbors(v):
            if u in free and u not in on and u != target:
                if free[u] - hits.get(u, 0) < (1 if u in soft else 2):
                    short.append(u)
        return short if len(short) <= 1 else None

    def mark(v, d):
        for u in G.neighbors(v):
            hits[u] = hits.get(u, 0) + d

    # a frame is (neighbour iterator, vertex the next step must take or None)
    path = [s]
    on = {s}
    stack = [(order(s, L), None)]
    steps = 0
    while stack:
        steps += 1
        if steps > budget:
            return
        it, must = stack[-1]
        v = next(it, None)
        if v is None:
            stack.pop()
            u = path.pop()
            on.discard(u)
            if guard is not None and path:
                mark(u, -1)
            continue
        rem = L - len(path)
        if v == target:
            if rem == 0 and must is None and (accept is None or accept(path + [target])):
                yield path + [target]
            continue
        if v in on or rem <= 0 or dist.get(v, INF) > rem or (must is not None and v != must):
            continue
        nxt = None
        if guard is not None:
            mark(v, 1)
            on.add(v)
            short = deficient(v)
            on.discard(v)
            if short is None or (short and rem == 1):
                mark(v, -1)
                continue
            nxt = short[0] if short else None
        path.append(v)
        on.add(v)
        stack.append((order(v, rem), nxt))


def exact_length_path(
    G: Graph,
    allowed: set[int],
    s: int,
    target: int,
    L: int,
    budget: int = 200_000,
    rng: np.random.Generator | None = None,
    guard: tuple[dict[int, int], set[int]] | None = None,
    accept: Callable[[list[int]], bool] | None = None,
) -> list[int] | None:
    """The first path found by :func:`length_paths`, or None."""
    return next(length_paths(G, allowed, s, target, L, budget, rng, guard, accept), None)


def _key_order(G: Graph, keys: list[int], attach: dict[int, int], avail: set[int], ell: int, budget: int = 50_000):
    """Lexicographically least ordering whose consecutive attachments lie within distance ``ell``."""
    t = len(keys)
    if t <= 2:
        return list(keys)
    near = {}
    for x in keys:
        d = bfs_distances(G, [attach[x]], allowed=avail | {attach[y] for y in keys}, limit=ell)
        near[x] = {y for y in keys if y != x and attach[y] in d}
    steps = 0

    def dfs(order, seen):
        nonlocal steps
        steps += 1
        if len(order) == t:
            return order
        if steps > budget:
            return None
        for y in keys:
            if y not in seen and (not order or y in near[order[-1]]):
                got = dfs(order + [y], seen | {y})
                if got:
                    return got
        return None

    return dfs([], set()) or list(keys)


def _respects_guard(G: Graph, P: Sequence[int], guard: tuple[dict[int, int], set[int]]) -> bool:
    free, soft = guard
    inner = set(P[1:-1])
    lost: dict[int, int] = {}
    for v in inner:
        for u in G.neighbors(v):
            lost[u] = lost.get(u, 0) + 1
    for u, k in lost.items():
        if u in free and u not in inner and free[u] - k < (1 if u in soft else 2):
            return False
    return True


def _closable_after(G: Graph, taken: set[int], W: list[int], i: int, budget: dict) -> Callable[[list[int]], bool]:
    """Acceptance test for ``P_i``: can the rest still be closed up?

    After ``P_i`` the remaining chain must run from ``w_(i+1)`` through every
    vertex outside the comb so far (and through ``w_(i+2) .. w_t``) to a
    neighbour of ``w_1``.  A virtual vertex joined to ``w_(i+1)`` and to
    ``N(w_1)`` turns this into a Hamilton cycle.  Before the last path only a
    2-factor is asked for, so the test is a relaxation there; for the last path
    it is exact.  After ``budget`` calls every path is accepted.
    """
    later = set(W[i + 2 :])
    w1, nxt = W[0], W[i + 1]
    virtual = G.n + 1

    def accept(P: list[int]) -> bool:
        budget["left"] -= 1
        if budget["left"] < 0:
            return True
        R = (set(G.vertices) - taken - set(P)) | later | {nxt}
        ends = (G.neighbors(w1) & R) - later - {nxt}
        if not ends:
            return False
        edges = [(u, v) for u in R for v in G.neighbors(u) if u < v and v in R]
        edges += [(nxt, virtual)] + [(z, virtual) for z in ends]
        # the last path leaves exactly the closure problem, so solve it in full
        rounds = posa.MILP_ROUNDS if not later else 1
        return _cycle_possible(virtual, sorted(R) + [virtual], edges, rounds)

    return accept


def build_comb(
    G: Graph,
    part: Partition,
    params: KeyChainParams,
    seed: int | None = 0,
    layer_cap: int | None = None,
    dfs_budget: int = 200_000,
    order_keys: bool = True,
    check_budget: int | None = None,
    branch: int = 10,
    search_nodes: int | None = None,
) -> Comb:
    """Keys, attachments and paths ``P_1 .. P_(t-1)`` of length exactly ``ell`` inside ``V'``.

    Each path is first sought by growing layers ``S_j`` from ``w_i`` and
    ``T_j`` from ``w_(i+1)`` and meeting in the middle; layer sizes are
    ``min(a_j, layer_cap)`` (the sequence outgrows ``n`` at desk scale).  If the
    layers starve, an exact-length depth-first search takes over.
    """
    rng = None if seed is None else make_rng(seed)
    ell = params.ell
    keys = list(part.K)
    t = len(keys)
    Vp = set(part.Vprime)
    Kset = set(keys)
    avail = Vp - Kset
    a = list(params.a_seq) if params.a_seq else [1]
    a2 = a[1] if len(a) > 1 else 1
    if layer_cap is None:
        layer_cap = max(a2, len(avail) // max(1, 2 * ell))

    # attachments: smallest index, preferring vertices with room for both path sides and the closure
    attach: dict[int, int] = {}
    used_w: set[int] = set()
    rem = {v: len(G.neighbors(v) - Kset) for v in G if v not in Kset}
    for x in keys:
        cand = sorted(G.neighbors(x) & avail - used_w)
        if not cand:
            raise InfeasibleError("no-attachment", f"key {x} has no neighbour in V' - K", key=x)
        tie = (lambda u: u) if rng is None else (lambda u: float(rng.random()))
        # cost: neighbours that would drop below two usable neighbours once u leaves the pool
        cost = {u: sum(1 for y in G.neighbors(u) if y in rem and y not in used_w and rem[y] < 3) for u in cand}
        cand.sort(key=lambda u: (cost[u], len(G.neighbors(u) & avail) < 3, tie(u)))
        w = cand[0]
        attach[x] = w
        used_w.add(w)
        for y in G.neighbors(w):
            if y in rem:
                rem[y] -= 1
    if t >= 2 and order_keys:
        keys = _key_order(G, keys, attach, avail, ell) if rng is None else _key_order(
            G, [keys[i] for i in rng.permutation(t)], attach, avail, ell
        )
    W = [attach[x] for x in keys]
    comb = Comb(keys=keys, attach=W, paths=[])
    if t <= 1:
        return comb
    Q = set(W)
    inner = avail - Q

    # reserved starts Y_i (toward w_(i+1)) and Z_i (toward w_(i-1))
    taken: set[int] = set()
    for i in range(t):
        nb = sorted(G.neighbors(W[i]) & inner - taken)
        if i + 1 < t:
            d = bfs_distances(G, [W[i + 1]], allowed=inner | {W[i + 1]})
            nb.sort(key=lambda u: (d.get(u, INF), u))
            k = min(a2, max(1, len(nb) // 2) if i > 0 else len(nb))
            comb.Y[i] = nb[:k]
            taken.update(nb[:k])
            nb = nb[k:]
        if i > 0:
            d = bfs_distances(G, [W[i - 1]], allowed=inner | {W[i - 1]})
            nb.sort(key=lambda u: (d.get(u, INF), u))
            comb.Z[i] = nb[:a2]
            taken.update(nb[:a2])
    reserved = set(taken)

    # keep a free neighbour of w_1 and w_t for the closure
    spare = set()
    for i in (0, t - 1):
        nb = sorted(G.neighbors(W[i]) - Kset - Q - reserved)
        if nb:
            spare.add(nb[0])

    soft = (set(G.neighbors(W[0])) | set(G.neighbors(W[-1]))) - Kset - Q
    # closability checks and search nodes get smaller budgets as each check grows with n
    scaled = max(60, 200_000 // max(1, G.n))
    checks = {"left": scaled if check_budget is None else check_budget}
    nodes = {"left": scaled if search_nodes is None else search_nodes}

    def candidates(i: int, used: set[int]) -> Iterator[tuple[list[int], str]]:
        X_now = Kset | Q | used
        free = {v: len(G.neighbors(v) - X_now) for v in G if v not in X_now}
        ends = {W[i], W[i + 1]}
        block = (used | Q | Kset | spare) - ends
        room = avail - block - (reserved - set(comb.Y.get(i, [])) - set(comb.Z.get(i + 1, [])))
        accept = _closable_after(G, Kset | Q | used, W, i, checks) if checks["left"] > 0 else None
        LP = _layered_path(G, avail, block, reserved, comb.Y.get(i, []), comb.Z.get(i + 1, []), W[i], W[i + 1], ell, a, layer_cap)
        seen: set[tuple[int, ...]] = set()
        # guards from strict to none: every outside vertex keeps two free neighbours, then
        # neighbours of w_1 / w_t may keep one, then no guard at all
        for label, g in (("", (free, set())), ("", (free, soft)), ("-unguarded", None)):
            if LP is not None and tuple(LP) not in seen and (g is None or _respects_guard(G, LP, g)):
                seen.add(tuple(LP))
                if accept is None or accept(LP):
                    yield LP, "layers" + label
            for allowed in (room, avail - block):
                for P in length_paths(G, allowed, W[i], W[i + 1], ell, dfs_budget, rng, g, accept):
                    if tuple(P) not in seen:
                        seen.add(tuple(P))
                        yield P, "dfs" + label

    def search(i: int, used: set[int]) -> list[tuple[list[int], str]] | None:
        # depth-first over segments; a segment with no good path sends the search back one step
        if i == t - 1:
            return []
        for k, (P, how) in enumerate(candidates(i, used)):
            if k >= branch or nodes["left"] <= 0:
                break
            nodes["left"] -= 1
            rest = search(i + 1, used | set(P))
            if rest is not None:
                return [(P, how)] + rest
        if i == 0 or nodes["left"] <= 0:
            deepest = i
            raise InfeasibleError("comb", f"no path of length {ell} between w_{deepest + 1} and w_{deepest + 2}", i=deepest + 1)
        return None

    for P, how in search(0, set()):
        comb.paths.append(P)
        comb.methods.append(how)
    return comb


def _layered_path(G, avail, block, reserved, Y, Z, w_s, w_t, ell, a, cap):
    """Grow layers from both ends, meet in the middle, and trace predecessors back."""
    if ell == 1:
        return [w_s, w_t] if G.has_edge(w_s, w_t) else None
    A, B = (ell + 1) // 2, ell // 2
    forbid = block | (reserved - set(Y) - set(Z))
    layered: set[int] = {w_s, w_t}
    predS: dict[int, int | None] = {w_s: None}
    predT: dict[int, int | None] = {w_t: None}
    S, T = [w_s], [w_t]

    def size(j):
        return min(a[j - 1] if j - 1 < len(a) else a[-1], cap)

    def grow(prev, pred, j, start):
        if j == 2:
            cand = [u for u in start if u not in forbid and u not in layered and G.has_edge(u, prev[0])]
        else:
            cand = sorted({u for v in prev for u in G.neighbors(v)} & avail - forbid - layered)
        cand = sorted(cand)[: size(j)]
        if not cand:
            return None
        prevset = set(prev)
        for u in cand:
            pred[u] = min(G.neighbors(u) & prevset)
        layered.update(cand)
        return cand

    for j in range(2, max(A, B) + 1):
        if j <= A:
            S = grow(S, predS, j, Y)
            if S is None:
                return None
        if j <= B:
            T = grow(T, predT, j, Z)
            if T is None:
                return None
    meet = ({u for v in S for u in G.neighbors(v)} & {u for v in T for u in G.neighbors(v)}) & avail - forbid - layered
    if not meet:
        return None
    m = min(meet)
    left = [min(G.neighbors(m) & set(S))]
    while predS[left[-1]] is not None:
        left.append(predS[left[-1]])
    right = [min(G.neighbors(m) & set(T))]
    while predT[right[-1]] is not None:
        right.append(predT[right[-1]])
    return left[::-1] + [m] + right


# -- closing the chain --------------------------------------------------------------------


@dataclass
class Embedding:
    params: KeyChainParams
    phi: list[int]  # phi[a - 1] = host vertex of template vertex a

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "phi": list(self.phi)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "Embedding":
        return cls(KeyChainParams.from_dict(data["params"]), [int(v) for v in data["phi"]])

    @classmethod
    def from_json(cls, text: str) -> "Embedding":
        return cls.from_dict(json.loads(text))


def assemble(params: KeyChainParams, keys: Sequence[int], cycle: Sequence[int]) -> Embedding:
    """Map the cycle (starting at ``w_1``) and the keys onto template labels."""
    n, t, ell = params.n, params.t, params.ell
    L = n - t
    if len(cycle) != L or len(keys) != t:
        raise InfeasibleError("assembly", f"cycle of length {len(cycle)} and {len(keys)} keys do not fit KC({n},{t},{ell})")
    phi = [0] * n
    shift = ell - 1 if t >= 1 else 0
    for j, v in enumerate(cycle):
        phi[(shift + j) % L] = v
    for i, x in enumerate(keys, start=1):
        phi[L + i - 1] = x
    return Embedding(params, phi)


def _split_halves(G: Graph, Vpp: set[int], U1: set[int], U2: set[int], w1: int, wt: int) -> tuple[set[int], set[int]]:
    room = Vpp | U1 | U2
    d1 = bfs_distances(G, [w1], allowed=room | {w1})
    d2 = bfs_distances(G, [wt], allowed=room | {wt})
    order = sorted(Vpp, key=lambda v: (d1.get(v, INF) - d2.get(v, INF), v))
    h = (len(order) + 1) // 2
    A, B = set(order[:h]), set(order[h:])
    for _ in range(3):
        moved = False
        for v in sorted(Vpp):
            here, there = (A, B) if v in A else (B, A)
            Uh, Ut = (U1, U2) if v in A else (U2, U1)
            if len(G.neighbors(v) & (here | Uh)) < 2 and len(G.neighbors(v) & (there | Ut)) >= 2:
                here.discard(v)
                there.add(v)
                moved = True
        if not moved:
            break
    return A, B


def _closure_paper(G, part, comb, seed):
    X = comb.vertices
    w1, wt = comb.attach[0], comb.attach[-1]
    Vpp = set(part.Vprime) - X
    A, B = _split_halves(G, Vpp, set(part.U1), set(part.U2), w1, wt)
    W1, W2 = A | set(part.U1), B | set(part.U2)
    z1s = sorted(G.neighbors(w1) & W1)
    zts = sorted(G.neighbors(wt) & W2)
    if not z1s or not zts:
        raise InfeasibleError("no-z", "an extreme attachment has no neighbour in its half", w1=w1, wt=wt)
    E1 = posa.hamilton_path_endpoints(G, W1, z1s[0], seed=derive_seed(seed, "ham", 1))
    E2 = posa.hamilton_path_endpoints(G, W2, zts[0], seed=derive_seed(seed, "ham", 2))
    R2 = E2.endpoints
    for y1 in sorted(E1.endpoints):
        hit = sorted(G.neighbors(y1) & R2)
        if hit:
            return E1.path_to(y1) + E2.path_to(hit[0])[::-1]
    raise InfeasibleError("no-bridge", "no edge between the two endpoint sets", R1=len(E1.endpoints), R2=len(R2))


def _closure_direct(G, F, w1, wt, seed, restarts=20, milp_time=60.0):
    """Hamilton path of ``G[F]`` from a neighbour of ``w1`` to a neighbour of ``wt``.

    The end constraints become a forced virtual path s1-s2-s3 with s1 joined to
    N(w1) and s3 joined to N(wt), so a Hamilton cycle through F + {s1, s2, s3}
    is exactly such a path.
    """
    if not F:
        return []
    A = sorted(G.neighbors(w1) & F)
    B = sorted(G.neighbors(wt) & F)
    if not A or not B:
        raise InfeasibleError("no-z", "an extreme attachment has no neighbour outside the comb", w1=w1, wt=wt)
    s1, s2, s3 = G.n + 1, G.n + 2, G.n + 3
    extra = [(a, s1) for a in A] + [(b, s3) for b in B] + [(s1, s2), (s2, s3)]
    Gs = Graph(G.n + 3, G.edges() + extra)
    Wg = sorted(F | {s1, s2, s3})
    cyc, _ = posa.hamilton_cycle_heuristic(Gs, Wg, seed=seed, restarts=restarts)
    if cyc is None:
        cyc, _ = posa.hamilton_cycle_milp(Gs, Wg, time_limit=milp_time)
    if cyc is None:
        raise InfeasibleError("hamilton-path", "no Hamilton path through the vertices outside the comb", size=len(F))
    i = cyc.index(s2)
    cyc = cyc[i:] + cyc[:i]
    if cyc[1] != s1:
        cyc = [cyc[0]] + cyc[:0:-1]
    return cyc[2:-1]


def close_chain(
    G: Graph, part: Partition, comb: Comb, params: KeyChainParams, seed: int = 0, route: str = "auto"
) -> Embedding:
    """Close the comb into KC(n, t, ell) with a Hamilton path through ``V - X``."""
    n, t = G.n, params.t
    if t != comb.t:
        raise ParameterError(f"comb has {comb.t} keys but params ask for t = {t}")
    if t == 0:
        cyc = posa.hamiltonize(G, seed=seed)
        if isinstance(cyc, posa.HamiltonFailure):
            raise InfeasibleError("hamilton-cycle", "no Hamilton cycle found", report=cyc.to_dict())
        return assemble(params, [], cyc.cycle)
    X = comb.vertices
    F = set(G.vertices) - X
    w1, wt = comb.attach[0], comb.attach[-1]
    if t == 1:
        W = F | {w1}
        cyc, _ = posa.hamilton_cycle_heuristic(G, sorted(W), seed=seed)
        if cyc is None:
            raise InfeasibleError("hamilton-cycle", "no Hamilton cycle through the non-key vertices")
        i = cyc.index(w1)
        return assemble(params, comb.keys, cyc[i:] + cyc[:i])
    if not F:
        if not G.has_edge(wt, w1):
            raise InfeasibleError("no-closing-edge", f"comb covers everything but {wt}-{w1} is not an edge")
        tail: list[int] = []
    else:
        tail = None
        errors = []
        if route in ("auto", "paper") and part.reservoirs and 2 * len(X) <= n:
            try:
                tail = _closure_paper(G, part, comb, seed)
            except InfeasibleError as e:
                errors.append(e)
                if route == "paper":
                    raise
        if tail is None:
            tail = _closure_direct(G, F, w1, wt, derive_seed(seed, "direct"))
    cycle = list(comb.paths[0])
    for P in comb.paths[1:]:
        cycle.extend(P[1:])
    cycle.extend(reversed(tail))
    return assemble(params, comb.keys, cycle)


# -- verification -------------------------------------------------------------------------


def verify_embedding(G: Graph, e: Embedding) -> tuple[bool, str]:
    """Check that ``e.phi`` maps KC(n, t, ell) injectively onto ``V(G)`` along edges of ``G``.

    The template edge list is rebuilt here from the definition.
    """
    n, t, ell = e.params.n, e.params.t, e.params.ell
    phi = list(e.phi)
    if n != G.n:
        return False, f"template has {n} vertices, host has {G.n}"
    if len(phi) != n:
        return False, f"map has {len(phi)} entries, expected {n}"
    if any(not (1 <= v <= n) for v in phi):
        return False, "map leaves the host vertex range"
    if len(set(phi)) != n:
        seen, dup = set(), None
        for v in phi:
            if v in seen:
                dup = v
                break
            seen.add(v)
        return False, f"map is not injective: host vertex {dup} used twice"
    L = n - t
    if t < 0 or L < 1 or t * ell > L:
        return False, f"invalid parameters (n={n}, t={t}, ell={ell})"
    tmpl = [(i, i + 1) for i in range(1, L)]
    if L >= 3:
        tmpl.append((L, 1))
    tmpl.extend((i * ell, L + i) for i in range(1, t + 1))
    for a, b in tmpl:
        u, v = phi[a - 1], phi[b - 1]
        if u == v or v not in G.neighbors(u):
            return False, f"template edge {a}-{b} maps to {u}-{v}, which is not an edge of the host"
    return True, "ok"


# -- orchestration ---------------------------------------------------------------------------


@dataclass
class EmbedConfig:
    profile: str = "desk"
    gamma: float | None = None
    growth: float | None = None
    strategy: str = "lowest-degree"
    params: KeyChainParams | None = None
    constants: Constants | None = None
    seed: int = 0
    attempts: int = 6
    max_resamples: int = 100
    reservoirs: str = "auto"  # "auto" | "on" | "off"
    route: str = "auto"
    layer_cap: int | None = None
    dfs_budget: int = 200_000

    def resolve_constants(self) -> Constants:
        if self.constants is not None:
            return self.constants
        return profile_constants(self.profile, self.gamma)


@dataclass
class PipelineTrace:
    params: dict | None = None
    stages: list[dict] = field(default_factory=list)
    success: bool = False
    failure: dict | None = None

    def record(self, stage: str, attempt: int, ok: bool, seconds: float, **detail) -> None:
        self.stages.append({"stage": stage, "attempt": attempt, "ok": ok, "seconds": seconds, **detail})

    def to_dict(self, timings: bool = False) -> dict:
        stages = [s if timings else {k: v for k, v in s.items() if k != "seconds"} for s in self.stages]
        return {"params": self.params, "success": self.success, "failure": self.failure, "stages": stages}

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), separators=(",", ":"), sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if isinstance(o, np.integer):
        return int(o)
    return str(o)


@dataclass
class EmbedResult:
    embedding: Embedding | None
    trace: PipelineTrace

    @property
    def ok(self) -> bool:
        return self.embedding is not None


def _use_reservoirs(G: Graph, K, c: Constants, mode: str) -> bool:
    if mode == "on":
        return True
    if mode == "off":
        return False
    n = G.n
    if math.ceil(1 / c.gamma) > n:
        return False
    small = degree_classes(G, c.small_cutoff(n)).small
    splus = set(small).union(*(G.neighbors(v) for v in small)) if small else set()
    return len(splus) <= n**c.p4_exponent


def _require_hamiltonian_rest(G: Graph, keys: list[int], seed: int) -> None:
    """Reject a key set whose removal leaves no Hamilton cycle for the chain to use."""
    rest = sorted(set(G.vertices) - set(keys))
    if len(rest) < 3:
        return
    cyc, _ = posa.hamilton_cycle_heuristic(G, rest, seed=seed, restarts=4)
    if cyc is not None:
        return
    cyc, decided = posa.hamilton_cycle_milp(G, rest, time_limit=30.0)
    if cyc is None and decided:
        raise InfeasibleError("keys-not-hamiltonian", "removing the keys leaves no Hamilton cycle", keys=keys)


def embed_keychain(G: Graph, config: EmbedConfig | None = None) -> EmbedResult:
    """Run keys, partition, comb and closure with per-stage retries; only verified embeddings are returned."""
    cfg = config or EmbedConfig()
    c = cfg.resolve_constants()
    trace = PipelineTrace()
    try:
        if cfg.params is not None:
            params = cfg.params.validate()
        else:
            params = compute_parameters(G.n, cfg.profile, cfg.growth)
    except ParameterError as e:
        trace.failure = {"stage": "params", "error": str(e)}
        return EmbedResult(None, trace)
    if params.n != G.n:
        trace.failure = {"stage": "params", "error": f"params are for n={params.n}, host has n={G.n}"}
        return EmbedResult(None, trace)
    trace.params = params.to_dict()
    last = None
    for attempt in range(cfg.attempts):
        aseed = derive_seed(cfg.seed, "attempt", attempt)
        stage = "keys"
        t0 = time.perf_counter()
        try:
            keys = select_keys(G, params.t, cfg.strategy, None if attempt == 0 else derive_seed(aseed, "keys"), check=True)
            _require_hamiltonian_rest(G, keys, derive_seed(aseed, "rest"))
            trace.record("keys", attempt, True, time.perf_counter() - t0, keys=keys)

            stage = "partition"
            t0 = time.perf_counter()
            fallback = None
            if _use_reservoirs(G, keys, c, cfg.reservoirs):
                try:
                    part = partition_vertices(G, keys, c, derive_seed(aseed, "partition"), cfg.max_resamples)
                except InfeasibleError as e:
                    # in auto mode the direct closure does without reservoirs
                    if cfg.reservoirs != "auto":
                        raise
                    part, fallback = trivial_partition(G, keys), e.obstruction
            else:
                part = trivial_partition(G, keys)
            extra = {} if fallback is None else {"fallback": fallback}
            trace.record("partition", attempt, True, time.perf_counter() - t0, reservoirs=part.reservoirs,
                         resamples=part.resamples, U1=len(part.U1), U2=len(part.U2), **extra)

            stage = "comb"
            t0 = time.perf_counter()
            comb = build_comb(
                G, part, params, None if attempt == 0 else derive_seed(aseed, "comb"), cfg.layer_cap, cfg.dfs_budget
            )
            trace.record("comb", attempt, True, time.perf_counter() - t0, methods=comb.methods)

            stage = "closure"
            t0 = time.perf_counter()
            emb = close_chain(G, part, comb, params, derive_seed(aseed, "closure"), cfg.route)
            ok, why = verify_embedding(G, emb)
            trace.record("closure", attempt, ok, time.perf_counter() - t0, verify=why)
            if ok:
                trace.success = True
                return EmbedResult(emb, trace)
            last = {"stage": "verify", "error": why}
        except InfeasibleError as e:
            last = {"stage": stage, "obstruction": e.obstruction, "error": str(e)}
            trace.record(stage, attempt, False, time.perf_counter() - t0, obstruction=e.obstruction, error=str(e))
            if e.obstruction in ("isolated-vertex", "too-many-leaves", "key-conflict") and stage == "keys":
                break
    trace.failure = last
    return EmbedResult(None, trace)
