"""Checkers for the typical-graph properties P1-P8 on concrete graphs.

P1-P4 are decided exactly in polynomial time.  P5-P8 quantify over vertex
sets: ``mode="exact"`` enumerates every set (small graphs only) and
``mode="sampled"`` tries random and greedy-adversarial candidates, returning
``unknown`` when none of them violates the property.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from . import bitsets
from .constants import Constants
from .errors import CapacityError, ParameterError
from .graph import Graph, bfs_distances, degree_classes, edges_between, edges_within, external_neighborhood
from .seeding import make_rng
from .tails import TailBoundQuery, log_tail_bound, tail_bound_eval  # noqa: F401  (re-exported)

HOLDS, VIOLATED, UNKNOWN = "holds", "violated", "unknown"
SET_PROPERTIES = ("P5", "P6", "P7", "P8")
EXACT_LIMIT = 20
PAIR_BUDGET = 200_000_000


@dataclass
class PropertyReport:
    property: str
    verdict: str
    witness: dict | None = None
    mode: dict = field(default_factory=lambda: {"kind": "exact"})
    params: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @property
    def violated(self) -> bool:
        return self.verdict == VIOLATED

    def to_dict(self) -> dict:
        out = {"property": self.property, "verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = self.witness
        out["mode"] = self.mode
        if self.params:
            out["params"] = self.params
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=False)


def _ln(n: int) -> float:
    return math.log(n) if n > 1 else 0.0


# -- P1, P2 ---------------------------------------------------------------------


def check_degree_properties(G: Graph, constants: Constants | None = None) -> tuple[PropertyReport, PropertyReport]:
    c = constants or Constants()
    n, ln = G.n, _ln(G.n)
    bound = c.maxdeg * ln
    degs = G.degrees()
    if n == 0:
        return PropertyReport("P1", HOLDS), PropertyReport("P2", VIOLATED, {"D1": [], "D2": []})
    delta = max(degs[1:])
    if delta <= bound:
        p1 = PropertyReport("P1", HOLDS, params={"max_degree": delta, "bound": bound})
    else:
        v = degs.index(delta, 1)
        p1 = PropertyReport("P1", VIOLATED, {"vertex": v, "degree": delta}, params={"bound": bound})

    dc = degree_classes(G)
    d1, d2 = sorted(dc.D(1)), sorted(dc.D(2))
    info = {"n1": len(d1), "n2": len(d2), "ln_n": ln}
    if len(d1) <= ln <= len(d2):
        p2 = PropertyReport("P2", HOLDS, params=info)
    else:
        side = "D1" if len(d1) > ln else "D2"
        p2 = PropertyReport("P2", VIOLATED, {"side": side, "D1": d1, "D2": d2}, params=info)
    return p1, p2


# -- P3, P4 ---------------------------------------------------------------------


def p3_length(n: int, constants: Constants | None = None) -> int | None:
    """Path-length horizon ``max(1, floor(c ln n / ln ln n))``; ``None`` when ln ln n <= 0."""
    c = constants or Constants()
    if n < 3:
        return None
    lnln = math.log(math.log(n))
    if lnln <= 0:
        return None
    return max(1, math.floor(c.p3_factor * math.log(n) / lnln))


def _short_cycle_through(G: Graph, v: int, limit: int) -> list[int] | None:
    """A shortest cycle through ``v`` of length <= limit, as a closed vertex list."""
    parent = {v: None}
    branch = {}
    dist = {v: 0}
    frontier = [v]
    best = None
    d = 0
    while frontier and 2 * d + 1 <= limit:
        nxt = []
        for a in frontier:
            for b in sorted(G.neighbors(a)):
                if b == parent[a]:
                    continue
                if b in dist:
                    if b != v and a != v and branch[a] != branch[b]:
                        length = dist[a] + dist[b] + 1
                        if length <= limit and (best is None or length < best[0]):
                            best = (length, a, b)
                    continue
                dist[b] = d + 1
                parent[b] = a
                branch[b] = b if a == v else branch[a]
                nxt.append(b)
        frontier = nxt
        d += 1
        if best is not None and best[0] <= 2 * d:
            break
    if best is None:
        return None
    _, a, b = best

    def up(x):
        out = []
        while x is not None:
            out.append(x)
            x = parent[x]
        return out

    left = up(a)[::-1]  # v ... a
    right = up(b)  # b ... v
    return left + right


def _shortest_path(G: Graph, s: int, targets: set[int], limit: int) -> list[int] | None:
    parent = {s: None}
    frontier = [s]
    for _ in range(limit):
        nxt = []
        for a in frontier:
            for b in sorted(G.neighbors(a)):
                if b in parent:
                    continue
                parent[b] = a
                if b in targets:
                    path = [b]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    return path[::-1]
                nxt.append(b)
        frontier = nxt
    return None


def check_small_structure(G: Graph, constants: Constants | None = None) -> tuple[PropertyReport, PropertyReport]:
    c = constants or Constants()
    n = G.n
    small = degree_classes(G, c.small_cutoff(n) if n > 1 else 0).small
    L = p3_length(n, c)

    if L is None:
        p3 = PropertyReport("P3", UNKNOWN, params={"reason": "ln ln n undefined or non-positive"})
    elif not small:
        p3 = PropertyReport("P3", HOLDS, params={"L": L, "small": 0})
    else:
        witness = None
        for v in sorted(small):
            path = _shortest_path(G, v, set(small) - {v}, L)
            if path is not None:
                witness = {"path": path, "closed": False}
                break
            cyc = _short_cycle_through(G, v, L)
            if cyc is not None:
                witness = {"path": cyc, "closed": True}
                break
        if witness is None:
            p3 = PropertyReport("P3", HOLDS, params={"L": L, "small": len(small)})
        else:
            p3 = PropertyReport("P3", VIOLATED, witness, params={"L": L, "small": len(small)})

    closure = set(small) | external_neighborhood(G, small)
    bound = n**c.p4_exponent
    info = {"size": len(closure), "bound": bound}
    if len(closure) <= bound:
        p4 = PropertyReport("P4", HOLDS, params=info)
    else:
        p4 = PropertyReport("P4", VIOLATED, {"set": sorted(closure)}, params=info)
    return p3, p4


# -- P5-P8: size ranges and direct predicates --------------------------------------


@dataclass(frozen=True)
class SetRanges:
    p5_max: int
    p6_max: int
    p7_min: int
    p7_max: int
    p8_min: int


def set_ranges(n: int, c: Constants) -> SetRanges:
    ln = _ln(n)
    big = n if ln == 0 else None
    return SetRanges(
        p5_max=min(n, big if big is not None else math.floor(c.p5_size * n / ln + 1e-12)),
        p6_max=min(n, math.floor(c.gamma * n / c.p6_size_div + 1e-12)),
        p7_min=max(1, math.ceil((n if ln == 0 else c.p7_low * n / ln) - 1e-12)),
        p7_max=min(n, math.floor(n / c.p7_high_div + 1e-12)),
        p8_min=max(1, math.ceil(c.gamma * n / c.p8_size_div - 1e-12)),
    )


def _p5_bad(n, c, size, e_out, n_size):
    ln = _ln(n)
    return (e_out >= size * ln / c.p5_edge_div) & (n_size <= size * ln / c.p5_nbr_div)


def _p6_bad(n, c, size, e_in):
    return e_in > c.gamma * _ln(n) * size / c.p6_edge_div


def _p7_bad(n, c, common):
    return common < n / c.p7_target_div


def _p8_bad(n, c, su, sw, e_uw):
    return e_uw < c.p8_factor * su * sw * _ln(n) / n


# -- exact enumeration ---------------------------------------------------------


def _exact(G: Graph, which: str, c: Constants) -> dict | None:
    n = G.n
    labels, nb = bitsets.compact(G)
    T = bitsets.subset_tables(nb)
    R = set_ranges(n, c)
    masks = np.arange(1 << n, dtype=np.int64)
    members = lambda mask: [labels[i] for i in bitsets.mask_members(int(mask))]  # noqa: E731

    if which == "P5":
        ok = (T.size >= 1) & (T.size <= R.p5_max)
        bad = ok & _p5_bad(n, c, T.size, T.e_out, T.ext_size)
        w = bitsets.pick_witness(masks[bad], T.size, n)
        return None if w is None else {"U": members(w)}

    if which == "P6":
        ok = (T.size >= 1) & (T.size <= R.p6_max)
        bad = ok & _p6_bad(n, c, T.size, T.e_in)
        w = bitsets.pick_witness(masks[bad], T.size, n)
        return None if w is None else {"U": members(w)}

    if which == "P7":
        if R.p7_min > R.p7_max:
            return None
        cand = masks[(T.size >= R.p7_min) & (T.size <= R.p7_max)]
        if cand.size * cand.size > PAIR_BUDGET:
            raise CapacityError(f"P7 exact: {cand.size}^2 set pairs exceed the enumeration budget")
        ext_c = T.ext[cand]
        for U in cand.tolist():
            disjoint = (cand & U) == 0
            common = bitsets.popcount(ext_c & T.ext[U])
            hit = np.flatnonzero(disjoint & _p7_bad(n, c, common))
            if hit.size:
                W = int(cand[hit[0]])
                return {"U": members(U), "W": members(W), "common": int(common[hit[0]])}
        return None

    if which == "P8":
        # for fixed U and |W| = s the minimum of e(U, W) is the sum of the s smallest d(v, U), v outside U
        cand = masks[T.size >= R.p8_min]
        if cand.size == 0:
            return None
        d = np.stack([bitsets.popcount((cand & nb[v]).astype(np.uint32)) for v in range(n)], axis=1).astype(np.int32)
        inside = np.stack([((cand >> v) & 1).astype(bool) for v in range(n)], axis=1)
        d = np.where(inside, np.iinfo(np.int32).max // (2 * n + 2), d)
        order = np.argsort(d, axis=1, kind="stable")
        prefix = np.cumsum(np.take_along_axis(d, order, axis=1), axis=1)
        su = T.size[cand][:, None]
        sw = np.arange(1, n + 1)[None, :]
        feasible = (sw >= R.p8_min) & (sw <= n - su)
        bad = feasible & _p8_bad(n, c, su, sw, prefix)
        rows = np.flatnonzero(bad.any(axis=1))
        if rows.size == 0:
            return None
        r = int(rows[0])
        s = int(np.flatnonzero(bad[r])[0]) + 1
        U = int(cand[r])
        W = [labels[i] for i in sorted(order[r, :s].tolist())]
        return {"U": members(U), "W": W, "e_UW": int(prefix[r, s - 1])}

    raise ParameterError(f"unknown set property {which!r}")


# -- sampled search ------------------------------------------------------------------


def _stats_p5(G, U):
    Us = set(U)
    e_out = sum(G.degree(u) for u in Us) - 2 * edges_within(G, Us)
    return e_out, len(external_neighborhood(G, Us))


def _greedy_low_expansion(G, start, max_size, rng):
    """Grow U from ``start`` always adding the vertex that keeps N(U) smallest."""
    U = [start]
    Us = {start}
    N = set(G.neighbors(start))
    yield list(U)
    while len(U) < max_size:
        pool = sorted(N) if N else sorted(set(G.vertices) - Us)
        if not pool:
            return
        if len(pool) > 64:
            pool = [pool[i] for i in rng.choice(len(pool), 64, replace=False)]
        best = min(pool, key=lambda u: (len((N | G.neighbors(u)) - Us - {u}), u))
        U.append(best)
        Us.add(best)
        N = (N | G.neighbors(best)) - Us
        yield list(U)


def _greedy_dense(G, start, max_size):
    U = [start]
    Us = {start}
    yield list(U)
    while len(U) < max_size:
        pool = set().union(*(G.neighbors(u) for u in Us)) - Us
        if not pool:
            return
        best = max(sorted(pool), key=lambda u: len(G.neighbors(u) & Us))
        U.append(best)
        Us.add(best)
        yield list(U)


def _sampled(G: Graph, which: str, c: Constants, trials: int, rng) -> dict | None:
    n = G.n
    R = set_ranges(n, c)
    V = np.arange(1, n + 1)

    def rand_set(lo, hi, exclude=()):
        pool = np.setdiff1d(V, np.asarray(list(exclude), dtype=np.int64)) if exclude else V
        hi = min(hi, pool.size)
        if lo > hi:
            return None
        k = int(rng.integers(lo, hi + 1))
        return sorted(int(x) for x in rng.choice(pool, k, replace=False))

    if which == "P5":
        if R.p5_max < 1:
            return None
        ln = _ln(n)
        for _ in range(trials):
            start = int(rng.integers(1, n + 1))
            for U in _greedy_low_expansion(G, start, R.p5_max, rng):
                e_out, ns = _stats_p5(G, U)
                if _p5_bad(n, c, len(U), e_out, ns):
                    return {"U": sorted(U)}
            U = rand_set(1, R.p5_max)
            if U is not None:
                e_out, ns = _stats_p5(G, U)
                if _p5_bad(n, c, len(U), e_out, ns):
                    return {"U": U}
        del ln
        return None

    if which == "P6":
        if R.p6_max < 1:
            return None
        for _ in range(trials):
            start = int(rng.integers(1, n + 1))
            for U in _greedy_dense(G, start, R.p6_max):
                if _p6_bad(n, c, len(U), edges_within(G, U)):
                    return {"U": sorted(U)}
            U = rand_set(1, R.p6_max)
            if U is not None and _p6_bad(n, c, len(U), edges_within(G, U)):
                return {"U": U}
        return None

    if which == "P7":
        if R.p7_min > R.p7_max or 2 * R.p7_min > n:
            return None
        for _ in range(trials):
            start = int(rng.integers(1, n + 1))
            U = None
            for cand in _greedy_low_expansion(G, start, R.p7_max, rng):
                if len(cand) >= R.p7_min:
                    U = cand
                    if rng.random() < 0.5:
                        break
            if U is None:
                U = rand_set(R.p7_min, R.p7_max)
            if U is None:
                continue
            Us = set(U)
            NU = external_neighborhood(G, Us)
            # W greedily avoids N(U): prefer vertices whose neighbourhoods miss N(U)
            rest = sorted(set(G.vertices) - Us, key=lambda v: (len(G.neighbors(v) & NU), v))
            size = int(rng.integers(R.p7_min, min(R.p7_max, len(rest)) + 1)) if len(rest) >= R.p7_min else 0
            for W in ([rest[:size]] if size else []) + [rand_set(R.p7_min, R.p7_max, Us) or []]:
                if len(W) < R.p7_min:
                    continue
                common = NU & external_neighborhood(G, W)
                if _p7_bad(n, c, len(common)):
                    return {"U": sorted(U), "W": sorted(W), "common": len(common)}
        return None

    if which == "P8":
        if 2 * R.p8_min > n:
            return None
        for _ in range(trials):
            U = rand_set(R.p8_min, n - R.p8_min)
            if rng.random() < 0.5:
                start = int(rng.integers(1, n + 1))
                k = int(rng.integers(R.p8_min, n - R.p8_min + 1))
                U = sorted(bfs_ball(G, start, k))
            if U is None or len(U) < R.p8_min:
                continue
            Us = set(U)
            rest = sorted(set(G.vertices) - Us, key=lambda v: (len(G.neighbors(v) & Us), v))
            acc = 0
            for s, v in enumerate(rest, start=1):
                acc += len(G.neighbors(v) & Us)
                if s >= R.p8_min and _p8_bad(n, c, len(U), s, acc):
                    return {"U": sorted(U), "W": sorted(rest[:s]), "e_UW": acc}
        return None

    raise ParameterError(f"unknown set property {which!r}")


def bfs_ball(G: Graph, start: int, k: int) -> list[int]:
    out = [start]
    seen = {start}
    i = 0
    while len(out) < k and i < len(out):
        for u in sorted(G.neighbors(out[i])):
            if u not in seen and len(out) < k:
                seen.add(u)
                out.append(u)
        i += 1
    if len(out) < k:
        out.extend(v for v in G.vertices if v not in seen)
    return out[:k]


def check_set_expansion(
    G: Graph,
    which: str,
    mode: str = "exact",
    constants: Constants | None = None,
    trials: int = 200,
    seed: int = 0,
    exact_limit: int = EXACT_LIMIT,
) -> PropertyReport:
    """Decide (exact) or probe (sampled) one of P5-P8 on ``G``."""
    c = constants or Constants()
    if which not in SET_PROPERTIES:
        raise ParameterError(f"{which!r} is not one of {SET_PROPERTIES}")
    R = set_ranges(G.n, c)
    params = {"gamma": c.gamma, **R.__dict__}
    if mode == "exact":
        if G.n > exact_limit:
            raise CapacityError(f"exact mode supports n <= {exact_limit}, got n = {G.n}")
        if G.n < 2:
            return PropertyReport(which, HOLDS, params=params)
        w = _exact(G, which, c)
        return PropertyReport(which, HOLDS if w is None else VIOLATED, w, {"kind": "exact"}, params)
    if mode == "sampled":
        rng = make_rng(seed)
        w = _sampled(G, which, c, trials, rng) if G.n >= 2 else None
        m = {"kind": "sampled", "trials": trials, "seed": seed}
        return PropertyReport(which, UNKNOWN if w is None else VIOLATED, w, m, params)
    raise ParameterError(f"mode must be 'exact' or 'sampled', got {mode!r}")


def check_all(
    G: Graph, constants: Constants | None = None, mode: str = "sampled", trials: int = 100, seed: int = 0
) -> list[PropertyReport]:
    out = [*check_degree_properties(G, constants), *check_small_structure(G, constants)]
    for which in SET_PROPERTIES:
        out.append(check_set_expansion(G, which, mode, constants, trials, seed))
    return out


# -- witness confirmation ------------------------------------------------------------


def confirm_violation(G: Graph, report: PropertyReport, constants: Constants | None = None) -> bool:
    """Recheck a ``violated`` report's witness directly against the property's definition."""
    c = constants or Constants()
    if report.verdict != VIOLATED or report.witness is None:
        return False
    n, ln, w = G.n, _ln(G.n), report.witness
    p = report.property
    if p == "P1":
        return G.degree(w["vertex"]) > c.maxdeg * ln
    if p == "P2":
        n1 = sum(1 for v in G if G.degree(v) == 1)
        n2 = sum(1 for v in G if G.degree(v) == 2)
        return not (n1 <= ln <= n2)
    if p == "P3":
        path = w["path"]
        L = p3_length(n, c)
        small = {v for v in G if G.degree(v) <= c.small_cutoff(n)}
        if L is None or not all(G.has_edge(a, b) for a, b in zip(path, path[1:])):
            return False
        inner = path[:-1] if w.get("closed") else path
        if len(set(inner)) != len(inner):
            return False
        if w.get("closed") and (path[0] != path[-1] or len(path) < 4):
            return False
        return 1 <= len(path) - 1 <= L and path[0] in small and path[-1] in small
    if p == "P4":
        small = {v for v in G if G.degree(v) <= c.small_cutoff(n)}
        closure = small | {u for v in small for u in G.neighbors(v)}
        return len(closure) > n**c.p4_exponent
    R = set_ranges(n, c)
    U = set(w["U"])
    if p == "P5":
        e_out = sum(1 for u in U for x in G.neighbors(u) if x not in U)
        N = {x for u in U for x in G.neighbors(u)} - U
        return 1 <= len(U) <= R.p5_max and e_out >= len(U) * ln / c.p5_edge_div and len(N) <= len(U) * ln / c.p5_nbr_div
    if p == "P6":
        e = sum(1 for a, b in combinations(sorted(U), 2) if G.has_edge(a, b))
        return 1 <= len(U) <= R.p6_max and e > c.gamma * ln * len(U) / c.p6_edge_div
    Wset = set(w["W"])
    if U & Wset:
        return False
    if p == "P7":
        NU = {x for u in U for x in G.neighbors(u)} - U
        NW = {x for u in Wset for x in G.neighbors(u)} - Wset
        sizes_ok = all(R.p7_min <= len(s) <= R.p7_max for s in (U, Wset))
        return sizes_ok and len(NU & NW) < n / c.p7_target_div
    if p == "P8":
        e = edges_between(G, U, Wset)
        return min(len(U), len(Wset)) >= R.p8_min and e < c.p8_factor * len(U) * len(Wset) * ln / n
    return False


def confirm_all(G: Graph, reports: Iterable[PropertyReport], constants: Constants | None = None) -> bool:
    return all(confirm_violation(G, r, constants) for r in reports if r.violated)
