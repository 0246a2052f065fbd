"""Rotation-extension machinery: closures, boosters, expander certificates and Hamilton cycles.

Paths are vertex lists ``[v0, ..., vk]``.  A rotation keeps ``v0`` fixed: if
the end ``vk`` is adjacent to ``vi`` with ``i < k - 1``, the path
``v0 .. vi, vk, v(k-1), .., v(i+1)`` spans the same vertices and ends at
``v(i+1)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from . import bitsets
from .errors import CapacityError, InfeasibleError, InputError, ParameterError
from .graph import Graph, bfs_distances
from .seeding import derive_seed, make_rng

EXACT_PATH_LIMIT = 20
EXACT_BOOSTER_LIMIT = 18
DIRECT_CERT_LIMIT = 20


# -- paths and cycles ----------------------------------------------------------------


def path_problem(G: Graph, P: Sequence[int], W: Iterable[int] | None = None) -> str | None:
    """Why ``P`` is not a path of ``G`` (inside ``W`` if given), or ``None``."""
    if len(P) == 0:
        return "empty path"
    if len(set(P)) != len(P):
        return "repeated vertex"
    Ws = None if W is None else set(W)
    for v in P:
        if not 1 <= v <= G.n:
            return f"vertex {v} out of range"
        if Ws is not None and v not in Ws:
            return f"vertex {v} outside the allowed set"
    for a, b in zip(P, P[1:]):
        if not G.has_edge(a, b):
            return f"{a}-{b} is not an edge"
    return None


def is_path(G: Graph, P: Sequence[int], W: Iterable[int] | None = None) -> bool:
    return path_problem(G, P, W) is None


def is_hamilton_cycle(G: Graph, C: Sequence[int], W: Iterable[int] | None = None) -> bool:
    Ws = set(G.vertices if W is None else W)
    return len(C) >= 3 and set(C) == Ws and len(C) == len(Ws) and is_path(G, C) and G.has_edge(C[-1], C[0])


def validate_path(G: Graph, P: Sequence[int]) -> list[int]:
    why = path_problem(G, P)
    if why is not None:
        raise InputError(f"not a path: {why}")
    return list(P)


def rotate(p: Sequence[int], i: int) -> list[int]:
    """Rotate ``p`` at pivot index ``i``: the end is joined to ``p[i]`` and ``p[i+1]`` becomes the end."""
    return list(p[: i + 1]) + list(p[:i:-1])


# -- rotation closure -------------------------------------------------------------------


@dataclass
class RotationClosure:
    """All endpoints reachable from ``path`` by rotations keeping ``path[0]`` fixed.

    ``parent[y] = (x, pivot)`` means the path ending at ``y`` came from the
    path ending at ``x`` by joining ``x`` to ``pivot``.
    """

    path: list[int]
    parent: dict[int, tuple[int, int] | None]
    complete: bool = True

    @property
    def start(self) -> int:
        return self.path[0]

    @property
    def endpoints(self) -> set[int]:
        return set(self.parent)

    def __len__(self) -> int:
        return len(self.parent)

    def __contains__(self, y: int) -> bool:
        return y in self.parent

    def path_to(self, y: int) -> list[int]:
        chain = []
        while self.parent[y] is not None:
            x, pivot = self.parent[y]
            chain.append(pivot)
            y = x
        p = list(self.path)
        for pivot in reversed(chain):
            p = rotate(p, p.index(pivot))
        return p


def rotation_closure(G: Graph, P: Sequence[int], limit: int | None = None, validate: bool = True) -> RotationClosure:
    """Breadth-first closure of ``P``'s end under rotations, ``P[0]`` fixed."""
    P = validate_path(G, P) if validate else list(P)
    parent: dict[int, tuple[int, int] | None] = {P[-1]: None}
    queue = deque([P])
    complete = True
    while queue:
        q = queue.popleft()
        end = q[-1]
        pos = {v: i for i, v in enumerate(q)}
        for x in sorted(G.neighbors(end)):
            i = pos.get(x)
            if i is None or i >= len(q) - 2:
                continue
            y = q[i + 1]
            if y in parent:
                continue
            if limit is not None and len(parent) >= limit:
                complete = False
                queue.clear()
                break
            parent[y] = (end, x)
            queue.append(rotate(q, i))
    return RotationClosure(path=P, parent=parent, complete=complete)


def rotation_search(
    G: Graph, p: Sequence[int], goal: Callable[[int], bool], budget: int = 200, pivots: set[int] | None = None
) -> list[int] | None:
    """First rotation of ``p`` (start fixed) whose end satisfies ``goal``; ``None`` if the budget runs out."""
    p = list(p)
    if goal(p[-1]):
        return p
    seen = {p[-1]}
    queue = deque([p])
    expanded = 0
    while queue and expanded < budget:
        q = queue.popleft()
        expanded += 1
        end = q[-1]
        pos = {v: i for i, v in enumerate(q)}
        for x in sorted(G.neighbors(end)):
            i = pos.get(x)
            if i is None or i >= len(q) - 2 or (pivots is not None and x not in pivots):
                continue
            y = q[i + 1]
            if y in seen:
                continue
            seen.add(y)
            r = rotate(q, i)
            if goal(y):
                return r
            queue.append(r)
    return None


# -- exact kernels ------------------------------------------------------------------


def _local(G: Graph, W: Iterable[int] | None, limit: int, what: str):
    labels, nb = bitsets.compact(G, W)
    if len(labels) > limit:
        raise CapacityError(f"{what}: exact computation supports at most {limit} vertices, got {len(labels)}")
    return labels, nb


def longest_path_exact(G: Graph, W: Iterable[int] | None = None) -> list[int]:
    labels, nb = _local(G, W, EXACT_PATH_LIMIT, "longest path")
    return [labels[i] for i in bitsets.longest_path_local(nb)]


def hamilton_cycle_exact(G: Graph, W: Iterable[int] | None = None) -> list[int] | None:
    labels, nb = _local(G, W, EXACT_PATH_LIMIT, "Hamilton cycle")
    cyc = bitsets.hamilton_cycle_local(nb)
    return None if cyc is None else [labels[i] for i in cyc]


def exact_endpoint_set(G: Graph, P: Sequence[int]) -> set[int]:
    """Every ``y`` such that some path on exactly ``V(P)`` runs from ``P[0]`` to ``y``."""
    P = validate_path(G, P)
    labels, nb = _local(G, P, EXACT_PATH_LIMIT, "endpoint set")
    start = labels.index(P[0])
    dp = bitsets.path_dp(nb, starts=[start])
    ends = int(dp[(1 << len(labels)) - 1])
    return {labels[i] for i in bitsets.mask_members(ends)}


# -- boosters --------------------------------------------------------------------------


def _candidate_pairs(G: Graph | None, H: Graph, W: list[int]) -> list[tuple[int, int]]:
    Ws = set(W)
    out = []
    for u in W:
        pool = (G.neighbors(u) & Ws) if G is not None else Ws
        out.extend((u, v) for v in pool if v > u and not H.has_edge(u, v))
    out.sort()
    return out


def _subset_max(f: np.ndarray, k: int) -> np.ndarray:
    """``g[S] = max f[T]`` over ``T`` subset of ``S`` (zeta transform with max)."""
    g = f.copy()
    for b in range(k):
        view = g.reshape(-1, 2, 1 << b)
        np.maximum(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
    return g


def _exact_boosters(H: Graph, W: list[int], pairs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    labels, nb = _local(H, W, EXACT_BOOSTER_LIMIT, "exact boosters")
    k = len(labels)
    if k < 2 or not pairs:
        return []
    if k >= 3 and bitsets.hamilton_cycle_local(nb) is not None:
        return []
    index = {v: i for i, v in enumerate(labels)}
    full = (1 << k) - 1
    masks = np.arange(1 << k, dtype=np.int64)
    size = bitsets.popcount(masks.astype(np.uint32)).astype(np.int32)
    dps = {}
    best = 0
    for u in sorted({index[a] for pr in pairs for a in pr}):
        dp = bitsets.path_dp(nb, starts=[u])
        reach = dp != 0
        dps[u] = (dp, reach, _subset_max(np.where(reach, size, -1), k))
        best = max(best, int(size[reach].max()))
    # the longest path of H is the max over all starts, so include the rest
    for u in range(k):
        if u not in dps:
            dp = bitsets.path_dp(nb, starts=[u])
            best = max(best, int(size[dp != 0].max()))
    out = []
    for a, b in pairs:
        u, v = index[a], index[b]
        dp_u, reach_u, _ = dps[u]
        if k >= 3 and (int(dp_u[full]) >> v) & 1:
            out.append((a, b))
            continue
        A = masks[reach_u]
        f_v = dps[v][2]
        if int((size[A] + f_v[full ^ A]).max()) >= best + 1:
            out.append((a, b))
    return out


def _rotation_boosters(
    H: Graph, W: list[int], P: list[int], allowed: set[tuple[int, int]] | None, first: bool
) -> list[tuple[int, int]]:
    """Closing pairs ``{y, z}`` of rotation-reachable endpoints, and extension pairs ``{y, u}``, u outside ``P``."""
    on_path = set(P)
    outside = sorted(set(W) - on_path)
    found: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()

    def offer(a, b):
        e = (min(a, b), max(a, b))
        if a == b or e in seen or H.has_edge(*e):
            return False
        seen.add(e)
        if allowed is None or e in allowed:
            found.append(e)
            return first
        return False

    HW = H.restricted(W) if len(W) != H.n else H
    outer = rotation_closure(HW, P, validate=False)
    ends_all = set(outer.endpoints) | {P[0]}
    # closing V(P) into a cycle only helps if the cycle is Hamiltonian or can be left
    closing = not outside or any(HW.neighbors(v) - on_path for v in P)
    for y in sorted(outer.endpoints):
        inner = rotation_closure(HW, outer.path_to(y)[::-1], validate=False)
        ends_all |= inner.endpoints
        if not closing:
            continue
        for z in sorted(inner.endpoints):
            if offer(y, z):
                return found
    for y in sorted(ends_all):
        for u in outside:
            if offer(y, u):
                return found
    return sorted(found)


def find_boosters(
    G: Graph | None, H: Graph, mode: str = "exact", W: Iterable[int] | None = None, path: Sequence[int] | None = None
) -> list[tuple[int, int]]:
    """Boosters of ``H[W]``, restricted to ``E(G[W]) - E(H)`` (all non-edges when ``G`` is ``None``).

    ``exact`` decides the definition literally; ``rotation`` reports closing and
    extension pairs found from rotation closures of a longest path, which is
    sound whenever that path really is longest.  Already-Hamiltonian input has
    no boosters.
    """
    Wl = sorted(H.vertices if W is None else W)
    pairs = _candidate_pairs(G, H, Wl)
    if mode == "exact":
        return _exact_boosters(H, Wl, pairs)
    if mode == "rotation":
        HW = H.restricted(Wl)
        if len(Wl) <= EXACT_PATH_LIMIT:
            if len(Wl) >= 3 and hamilton_cycle_exact(HW, Wl) is not None:
                return []
            P = longest_path_exact(HW, Wl) if path is None else list(path)
        else:
            P = list(path) if path is not None else grow_path(HW, Wl, seed=0)
        return _rotation_boosters(H, Wl, P, set(pairs), first=False)
    raise ParameterError(f"booster mode must be 'exact' or 'rotation', got {mode!r}")


# -- expander certification ------------------------------------------------------------


@dataclass
class ExpanderCertificate:
    k: float
    alpha: float
    accepted: bool
    method: str
    scope: str = "exact"
    condition: str | None = None
    witness: dict | None = None
    m: int | None = None
    d: int | None = None

    def to_dict(self) -> dict:
        out = {"k": self.k, "alpha": self.alpha, "accepted": self.accepted, "method": self.method, "scope": self.scope}
        if self.method == "lemma-2.6":
            out.update(m=self.m, d=self.d)
        if not self.accepted:
            out.update(condition=self.condition, witness=self.witness)
        return out


def _greedy_sets(H: Graph, W: list[int], max_size: int, rng, trials: int, dense: bool):
    """Candidate sets grown greedily: densest (``dense``) or least-expanding."""
    Ws = set(W)
    for _ in range(trials):
        start = W[int(rng.integers(len(W)))]
        U = [start]
        Us = {start}
        N = set(H.neighbors(start)) & Ws
        yield list(U)
        while len(U) < max_size:
            pool = sorted(N - Us) if N - Us else sorted(Ws - Us)
            if not pool:
                break
            if len(pool) > 48:
                pool = [pool[i] for i in sorted(rng.choice(len(pool), 48, replace=False))]
            if dense:
                best = max(pool, key=lambda x: (len(H.neighbors(x) & Us), -x))
            else:
                best = min(pool, key=lambda x: (len((N | H.neighbors(x)) & Ws - Us - {x}), x))
            U.append(best)
            Us.add(best)
            N = (N | H.neighbors(best)) & Ws
            yield list(U)


def certify_expander(
    H: Graph,
    k: float,
    alpha: float = 2.0,
    method: str = "direct",
    m: int | None = None,
    d: int | None = None,
    W: Iterable[int] | None = None,
    trials: int = 200,
    seed: int = 0,
) -> ExpanderCertificate:
    """Check that ``H[W]`` is a ``(k, alpha)``-expander.

    ``direct`` enumerates every ``U`` with ``|U| <= k`` (up to 20 vertices;
    beyond that it probes greedy sets and says so in ``scope``).  ``lemma-2.6``
    checks the four sufficient conditions for an ``(h/4, 2)``-expander.
    """
    Wl = sorted(H.vertices if W is None else W)
    Ws = set(Wl)
    h = len(Wl)
    rng = make_rng(seed)

    if method == "direct":
        kmax = min(h, math.floor(k + 1e-12))
        if h <= DIRECT_CERT_LIMIT:
            labels, nb = bitsets.compact(H, Wl)
            T = bitsets.subset_tables(nb)
            bad = (T.size >= 1) & (T.size <= kmax) & (T.ext_size < alpha * T.size)
            masks = np.flatnonzero(bad)
            if masks.size:
                w = bitsets.pick_witness(masks, T.size, h)
                U = [labels[i] for i in bitsets.mask_members(w)]
                return ExpanderCertificate(k, alpha, False, "direct", "exact", "expansion", {"U": U, "N": int(T.ext_size[w])})
            return ExpanderCertificate(k, alpha, True, "direct", "exact")
        for U in _greedy_sets(H, Wl, kmax, rng, trials, dense=False):
            N = set().union(*(H.neighbors(u) for u in U)) & Ws - set(U)
            if len(N) < alpha * len(U):
                return ExpanderCertificate(k, alpha, False, "direct", "sampled", "expansion", {"U": sorted(U), "N": len(N)})
        return ExpanderCertificate(k, alpha, True, "direct", "sampled")

    if method != "lemma-2.6":
        raise ParameterError(f"certification method must be 'direct' or 'lemma-2.6', got {method!r}")
    if m is None or d is None or m < 1 or d < 1:
        raise ParameterError("lemma-2.6 certification needs integers m, d >= 1")
    if h < 4 * m:
        raise ParameterError(f"lemma-2.6 certification needs h >= 4m, got h={h}, m={m}")
    k, alpha = h / 4, 2.0

    def reject(cond, witness, scope="exact"):
        return ExpanderCertificate(k, alpha, False, "lemma-2.6", scope, cond, witness, m, d)

    deg = {v: len(H.neighbors(v) & Ws) for v in Wl}
    # 1. minimum degree
    low = min(Wl, key=lambda v: (deg[v], v))
    if deg[low] < 2:
        return reject("min-degree", {"vertex": low, "degree": deg[low]})
    # 2. low-degree vertices avoid short cycles and each other
    lows = [v for v in Wl if deg[v] < d]
    lowset = set(lows)
    for v in lows:
        nbrs = sorted(H.neighbors(v) & Ws)
        for a_i, a in enumerate(nbrs):
            for b in nbrs[a_i + 1 :]:
                if H.has_edge(a, b):
                    return reject("short-cycle", {"vertex": v, "cycle": [v, a, b]})
                common = (H.neighbors(a) & H.neighbors(b) & Ws) - {v}
                if common:
                    return reject("short-cycle", {"vertex": v, "cycle": [v, a, min(common), b]})
        near = bfs_distances(H, [v], allowed=Ws, limit=4)
        close = sorted(u for u in near if u != v and u in lowset)
        if close:
            return reject("low-degree-distance", {"pair": [v, close[0]], "distance": near[close[0]]})
    # 3. sets of size <= 5m are sparse
    fmax = min(h, 5 * m)
    scope = "exact" if h <= DIRECT_CERT_LIMIT else "sampled"
    if scope == "exact":
        labels, nb = bitsets.compact(H, Wl)
        T = bitsets.subset_tables(nb)
        bad = (T.size >= 1) & (T.size <= fmax) & (10 * T.e_in > d * T.size)
        masks = np.flatnonzero(bad)
        if masks.size:
            w = bitsets.pick_witness(masks, T.size, h)
            return reject("local-sparsity", {"F": [labels[i] for i in bitsets.mask_members(w)], "edges": int(T.e_in[w])})
    else:
        if fmax >= 2 and d < 5:
            for v in Wl:
                for u in sorted(H.neighbors(v) & Ws):
                    if u > v:
                        return reject("local-sparsity", {"F": [v, u], "edges": 1})
        for F in _greedy_sets(H, Wl, fmax, rng, trials, dense=True):
            e = sum(len(H.neighbors(x) & set(F)) for x in F) // 2
            if 10 * e > d * len(F):
                return reject("local-sparsity", {"F": sorted(F), "edges": e}, "sampled")
    # 4. an edge between any two disjoint m-sets: no m-set misses m further vertices
    if scope == "exact":
        bad = (T.size == m) & (h - T.size - T.ext_size >= m)
        masks = np.flatnonzero(bad)
        if masks.size:
            w = int(masks[0])
            F1 = [labels[i] for i in bitsets.mask_members(w)]
            rest = sorted(Ws - set(F1) - set().union(*(H.neighbors(x) for x in F1)))
            return reject("pair-edge", {"F1": F1, "F2": rest[:m]})
    else:
        for F1 in _greedy_sets(H, Wl, m, rng, trials, dense=False):
            if len(F1) != m:
                continue
            rest = sorted(Ws - set(F1) - set().union(*(H.neighbors(x) for x in F1)))
            if len(rest) >= m:
                return reject("pair-edge", {"F1": sorted(F1), "F2": rest[:m]}, "sampled")
    return ExpanderCertificate(k, alpha, True, "lemma-2.6", scope, m=m, d=d)


# -- sparsification ------------------------------------------------------------------


def sparsify(G: Graph, W: Iterable[int], d0: int, seed: int | np.random.Generator | None = 0) -> Graph:
    """Each ``v`` in ``W`` keeps all its ``W``-edges if it has at most ``d0``, else a uniform ``d0``-subset."""
    if d0 < 0:
        raise ParameterError(f"d0 must be non-negative, got {d0}")
    rng = make_rng(seed)
    Wl = sorted(W)
    Ws = set(Wl)
    edges = set()
    for v in Wl:
        nbrs = sorted(G.neighbors(v) & Ws)
        if len(nbrs) > d0:
            nbrs = [nbrs[i] for i in sorted(rng.choice(len(nbrs), d0, replace=False).tolist())]
        edges.update((min(u, v), max(u, v)) for u in nbrs)
    return Graph(G.n, sorted(edges))


# -- heuristic path growth ------------------------------------------------------------


MILP_ROUNDS = 400


def hamilton_cycle_milp(
    G: Graph, W: Iterable[int] | None = None, max_rounds: int = MILP_ROUNDS, time_limit: float | None = None
) -> tuple[list[int] | None, bool]:
    """Hamilton cycle of ``G[W]`` from a 2-factor integer program with lazy subtour cuts.

    Returns ``(cycle, decided)``.  ``decided`` is False when the round or time
    limit ran out before the program settled; a ``None`` cycle with
    ``decided`` True means ``G[W]`` has no Hamilton cycle.
    """
    Wl = sorted(G.vertices if W is None else W)
    Ws = set(Wl)
    edges = [(u, v) for u in Wl for v in G.neighbors(u) if v in Ws and u < v]
    return cycle_milp(Wl, edges, max_rounds, time_limit)


def cycle_milp(
    vertices: Sequence[int], edges: Sequence[tuple[int, int]], max_rounds: int = MILP_ROUNDS,
    time_limit: float | None = None,
) -> tuple[list[int] | None, bool]:
    """:func:`hamilton_cycle_milp` on an explicit vertex and edge list."""
    Wl = list(vertices)
    h, m = len(Wl), len(edges)
    if h < 3:
        return None, True
    idx = {v: i for i, v in enumerate(Wl)}
    eu = np.array([idx[u] for u, _ in edges], dtype=np.int64)
    ev = np.array([idx[v] for _, v in edges], dtype=np.int64)
    if np.any(np.bincount(np.concatenate([eu, ev]), minlength=h) < 2):
        return None, True
    cols = np.arange(m)
    inc = sparse.csr_matrix(
        (np.ones(2 * m), (np.concatenate([eu, ev]), np.concatenate([cols, cols]))), shape=(h, m)
    )
    cons = [LinearConstraint(inc, 2, 2)]
    opts = {} if time_limit is None else {"time_limit": time_limit}
    for _ in range(max_rounds):
        res = milp(np.zeros(m), integrality=np.ones(m), bounds=Bounds(0, 1), constraints=cons, options=opts)
        if res.status == 2:
            return None, True
        if res.x is None:
            return None, False
        adj: list[list[int]] = [[] for _ in range(h)]
        for j in np.flatnonzero(res.x > 0.5):
            adj[eu[j]].append(ev[j])
            adj[ev[j]].append(eu[j])
        seen = np.zeros(h, dtype=bool)
        tours = []
        for v in range(h):
            if seen[v]:
                continue
            tour, prev, cur = [v], -1, v
            seen[v] = True
            while True:
                a, b = adj[cur]
                nxt = b if a == prev else a
                if nxt == v:
                    break
                tour.append(nxt)
                seen[nxt] = True
                prev, cur = cur, nxt
            tours.append(tour)
        if len(tours) == 1:
            return [Wl[i] for i in tours[0]], True
        # each subtour must be left along at least two edges
        comp = np.empty(h, dtype=np.int64)
        for c, tour in enumerate(tours):
            comp[tour] = c
        cu, cv = comp[eu], comp[ev]
        for c in range(len(tours)):
            cut = ((cu == c) != (cv == c)).astype(float)
            cons.append(LinearConstraint(cut.reshape(1, -1), 2, np.inf))
    return None, False


def grow_path(
    G: Graph,
    W: Iterable[int] | None = None,
    start: int | None = None,
    fixed_start: bool = False,
    seed: int | np.random.Generator | None = None,
    path: Sequence[int] | None = None,
    budget: int = 60,
) -> list[int]:
    """A long path in ``G[W]`` by Posa extension-rotation.

    Extension takes the unvisited neighbour with the fewest unvisited
    neighbours.  When both ends are stuck, a breadth-first rotation search
    looks for an end with an unvisited neighbour; failing that, if an end can be
    closed into a cycle, the cycle is reopened next to an unvisited vertex.
    With ``seed=None`` ties break by smallest index, otherwise by a random
    priority.
    """
    Wl = sorted(G.vertices if W is None else W)
    Ws = set(Wl)
    if not Wl:
        return []
    prio = None
    if seed is not None:
        rng = make_rng(seed)
        prio = dict(zip(Wl, rng.permutation(len(Wl)).tolist()))
    key = (lambda v: v) if prio is None else prio.__getitem__

    if path:
        p = list(path)
    else:
        p = [start if start is not None else min(Wl, key=lambda v: (len(G.neighbors(v) & Ws), key(v)))]
    on = set(p)
    free = {v: len(G.neighbors(v) & Ws) for v in Wl}
    for v in p:
        for u in G.neighbors(v):
            if u in free:
                free[u] -= 1

    def unvisited(v):
        return [u for u in G.neighbors(v) if u in Ws and u not in on]

    def extend_end():
        grew = False
        while True:
            cand = unvisited(p[-1])
            if not cand:
                return grew
            u = min(cand, key=lambda x: (free[x], key(x)))
            p.append(u)
            on.add(u)
            for x in G.neighbors(u):
                if x in free:
                    free[x] -= 1
            grew = True

    while len(p) < len(Ws):
        extend_end()
        if len(p) == len(Ws):
            break
        if not fixed_start:
            p.reverse()
            if extend_end():
                continue
            p.reverse()
        # rotate the free end until it sees an unvisited vertex
        r = rotation_search(G, p, lambda y: bool(unvisited(y)), budget)
        if r is None and not fixed_start:
            r = rotation_search(G, p[::-1], lambda y: bool(unvisited(y)), budget)
        if r is not None:
            p[:] = r
            continue
        if fixed_start:
            break
        # close a cycle and reopen it beside an unvisited vertex
        first = p[0]
        r = rotation_search(G, p, lambda y: G.has_edge(y, first), budget)
        if r is None:
            break
        exits = [(key(c), j) for j, c in enumerate(r) if unvisited(c)]
        if not exits:
            break
        _, j = min(exits)
        p[:] = r[j + 1 :] + r[: j + 1]
    return p


def close_cycle(G: Graph, p: Sequence[int], budget: int = 400) -> list[int] | None:
    """Turn a Hamilton path of ``G[V(p)]`` into a cycle by rotations from either end."""
    if len(p) < 3:
        return None
    first, last = p[0], p[-1]
    r = rotation_search(G, p, lambda y: G.has_edge(y, first), budget)
    if r is None:
        r = rotation_search(G, p[::-1], lambda y: G.has_edge(y, last), budget)
    return r


def hamilton_cycle_heuristic(
    G: Graph, W: Iterable[int] | None = None, seed: int = 0, restarts: int = 8, budget: int = 400
) -> tuple[list[int] | None, list[int]]:
    """``(cycle, longest path seen)`` from repeated extension-rotation runs."""
    Wl = sorted(G.vertices if W is None else W)
    best: list[int] = []
    for attempt in range(restarts):
        p = grow_path(G, Wl, seed=None if attempt == 0 else derive_seed(seed, "grow", attempt))
        if len(p) > len(best):
            best = p
        if len(p) == len(Wl):
            c = close_cycle(G, p, budget)
            if c is not None:
                return c, best
    return None, best


# -- hamiltonize ----------------------------------------------------------------------


@dataclass
class HamiltonFailure:
    stage: str
    longest_path_len: int
    rounds: int
    path: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"stage": self.stage, "longest_path_len": self.longest_path_len, "rounds": self.rounds}


@dataclass
class HamiltonResult:
    cycle: list[int]
    rounds: int
    certificate: ExpanderCertificate | None
    fallback: bool
    boosters: list[tuple[int, int]] = field(default_factory=list)
    edge_counts: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "rounds": self.rounds,
            "fallback": self.fallback,
            "boosters": [list(e) for e in self.boosters],
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
        }


def default_d0(n: int, gamma: float = 1e-4) -> int:
    """``beta ln n`` with ``beta = gamma/100``, raised to at least 3 so the subgraph is not a forest."""
    return max(3, math.ceil(gamma / 100 * math.log(max(n, 2))))


def hamiltonize(
    G: Graph,
    W: Iterable[int] | None = None,
    d0: int | None = None,
    seed: int = 0,
    max_rounds: int | None = None,
    certify: bool = True,
    m: int | None = None,
    exact_fallback: bool = True,
) -> HamiltonResult | HamiltonFailure:
    """Hamilton cycle of ``G[W]`` via sparsify, certify, then booster augmentation.

    ``H_0`` is a sparsified subgraph when it certifies as an ``(|W|/4, 2)``-expander
    and ``G[W]`` otherwise.  Each round adds one booster of ``H_i`` taken from
    ``E(G[W]) - E(H_i)``, found by rotations (and, up to 18 vertices, by the
    exact definition when rotations find none).  The output cycle is checked
    edge by edge against ``G``; failure is returned as a value.
    """
    Wl = sorted(G.vertices if W is None else W)
    h = len(Wl)
    if h < 3:
        raise ParameterError(f"hamiltonize needs |W| >= 3, got {h}")
    d0 = default_d0(G.n) if d0 is None else d0
    max_rounds = h if max_rounds is None else max_rounds
    GW = G.restricted(Wl)
    cert = None
    fallback = True
    H = GW
    if certify:
        H0 = sparsify(G, Wl, d0, derive_seed(seed, "sparsify"))
        if h <= DIRECT_CERT_LIMIT:
            cert = certify_expander(H0, h / 4, 2.0, "direct", W=Wl)
        else:
            mm = m if m is not None else max(1, h // 250)
            cert = certify_expander(H0, h / 4, 2.0, "lemma-2.6", m=mm, d=d0, W=Wl, seed=derive_seed(seed, "certify"))
        if cert.accepted:
            H, fallback = H0, False
    exact = h <= EXACT_BOOSTER_LIMIT
    boosters: list[tuple[int, int]] = []
    counts = [H.m]
    path: list[int] = []
    rounds = 0
    while True:
        if exact:
            cyc = hamilton_cycle_exact(H, Wl)
            if cyc is None:
                path = longest_path_exact(H, Wl)
        else:
            cyc, path = hamilton_cycle_heuristic(H, Wl, seed=derive_seed(seed, "grow", rounds))
        if cyc is not None:
            if not is_hamilton_cycle(G, cyc, Wl):  # pragma: no cover - guarded by construction
                raise AssertionError("hamiltonize produced an invalid cycle")
            return HamiltonResult(cyc, rounds, cert, fallback, boosters, counts)
        if rounds >= max_rounds:
            return HamiltonFailure("max-rounds", len(path) - 1, rounds, path)
        allowed = set(_candidate_pairs(GW, H, Wl))
        found = _rotation_boosters(H, Wl, path, allowed, first=True) if allowed else []
        if not found and exact and exact_fallback and allowed:
            found = _exact_boosters(H, Wl, sorted(allowed))[:1]
        if not found:
            return HamiltonFailure("booster-exhausted", len(path) - 1, rounds, path)
        e = found[0]
        H = H.with_edges([e])
        boosters.append(e)
        counts.append(H.m)
        rounds += 1


# -- Hamilton paths with many endpoints --------------------------------------------------


@dataclass
class EndpointSet:
    start: int
    closure: RotationClosure
    hamilton: HamiltonResult

    @property
    def endpoints(self) -> set[int]:
        return self.closure.endpoints

    def path_to(self, y: int) -> list[int]:
        return self.closure.path_to(y)


def hamilton_path_endpoints(
    G: Graph, W: Iterable[int], w: int, seed: int = 0, limit: int | None = None, **kwargs
) -> EndpointSet:
    """Hamilton paths of ``G[W]`` from ``w``: open a Hamilton cycle at ``w`` and close under rotations."""
    Wl = sorted(W)
    if w not in set(Wl):
        raise ParameterError(f"start vertex {w} is not in W")
    res = hamiltonize(G, Wl, seed=seed, **kwargs)
    if isinstance(res, HamiltonFailure):
        raise InfeasibleError("hamiltonize", f"no Hamilton cycle found in G[W] ({res.stage})", report=res.to_dict())
    c = res.cycle
    i = c.index(w)
    P = c[i:] + c[:i]
    closure = rotation_closure(G.restricted(Wl), P, limit=limit, validate=False)
    return EndpointSet(w, closure, res)


def hamilton_path_to(
    G: Graph,
    W: Iterable[int],
    start: int,
    targets: Iterable[int],
    seed: int = 0,
    restarts: int = 12,
    budget: int = 2000,
) -> list[int] | None:
    """A Hamilton path of ``G[W]`` from ``start`` ending in ``targets``, by fixed-start extension-rotation."""
    Wl = sorted(W)
    T = set(targets)
    for attempt in range(restarts):
        p = grow_path(G, Wl, start=start, fixed_start=True, seed=None if attempt == 0 else derive_seed(seed, "fixed", attempt))
        if len(p) != len(Wl):
            continue
        r = rotation_search(G, p, lambda y: y in T, budget)
        if r is not None:
            return r
    return None
