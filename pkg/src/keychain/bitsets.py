"""Subset-enumeration and path-DP kernels over bitmask adjacency.

Everything here works on a compact graph with local vertices ``0..k-1``,
described by ``nb`` where bit ``u`` of ``nb[v]`` is set iff ``uv`` is an edge.
Tables are indexed by subset mask, so they have ``2**k`` entries; callers are
expected to keep ``k`` around 20 or below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_TABLE_BITS = 24


def compact(G, W=None) -> tuple[list[int], list[int]]:
    """Local bitmask adjacency for ``G[W]``: returns ``(labels, nb)``."""
    labels = sorted(G.vertices if W is None else W)
    index = {v: i for i, v in enumerate(labels)}
    nb = []
    for v in labels:
        mask = 0
        for u in G.neighbors(v):
            j = index.get(u)
            if j is not None:
                mask |= 1 << j
        nb.append(mask)
    return labels, nb


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


@dataclass
class SubsetTables:
    """Per-subset statistics for every mask of a ``k``-vertex graph."""

    k: int
    size: np.ndarray  # |U|
    nbr_or: np.ndarray  # union of neighbourhoods of U (may intersect U)
    ext: np.ndarray  # external neighbourhood N(U) as a mask
    ext_size: np.ndarray  # |N(U)|
    e_in: np.ndarray  # edges spanned by U
    deg_sum: np.ndarray  # sum of degrees over U

    @property
    def e_out(self) -> np.ndarray:
        return self.deg_sum - 2 * self.e_in


def subset_tables(nb: Sequence[int], k: int | None = None) -> SubsetTables:
    k = len(nb) if k is None else k
    if k > MAX_TABLE_BITS:
        raise ValueError(f"subset tables limited to {MAX_TABLE_BITS} vertices, got {k}")
    nbr_or = np.zeros(1, dtype=np.uint32)
    e_in = np.zeros(1, dtype=np.int32)
    deg_sum = np.zeros(1, dtype=np.int32)
    for b in range(k):
        low = np.arange(1 << b, dtype=np.uint32)
        nbb = np.uint32(nb[b])
        inside = popcount(low & nbb).astype(np.int32)
        nbr_or = np.concatenate([nbr_or, nbr_or | nbb])
        e_in = np.concatenate([e_in, e_in + inside])
        deg_sum = np.concatenate([deg_sum, deg_sum + int(nb[b]).bit_count()])
    masks = np.arange(1 << k, dtype=np.uint32)
    ext = nbr_or & ~masks
    return SubsetTables(
        k=k,
        size=popcount(masks).astype(np.int32),
        nbr_or=nbr_or,
        ext=ext,
        ext_size=popcount(ext).astype(np.int32),
        e_in=e_in,
        deg_sum=deg_sum,
    )


def mask_members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def first_lex(masks: np.ndarray, k: int) -> int:
    """Among equal-size masks, the one whose sorted member tuple is lexicographically least."""
    rev = np.zeros(masks.shape, dtype=np.int64)
    m = masks.astype(np.int64)
    for b in range(k):
        rev |= ((m >> b) & 1) << (k - 1 - b)
    return int(masks[int(np.argmax(rev))])


def pick_witness(violating: np.ndarray, sizes: np.ndarray, k: int) -> int | None:
    """Smallest violating set, ties broken lexicographically; ``None`` if there is none."""
    if violating.size == 0:
        return None
    s = sizes[violating]
    smallest = violating[s == s.min()]
    return first_lex(smallest, k)


# -- Hamiltonian path dynamic programme ----------------------------------------


def path_dp(nb: Sequence[int], starts: Sequence[int] | None = None) -> np.ndarray:
    """``dp[mask]`` = bitmask of vertices ``v`` such that some path visits exactly ``mask``,
    starts in ``starts`` (all vertices if ``None``) and ends at ``v``."""
    k = len(nb)
    if k > MAX_TABLE_BITS:
        raise ValueError(f"path DP limited to {MAX_TABLE_BITS} vertices, got {k}")
    N = 1 << k
    dp = np.zeros(N, dtype=np.uint32)
    for s in range(k) if starts is None else starts:
        dp[1 << s] |= np.uint32(1 << s)
    if k <= 1:
        return dp
    masks = np.arange(N, dtype=np.int64)
    pc = popcount(masks.astype(np.uint32))
    order = np.argsort(pc, kind="stable")
    bounds = np.searchsorted(pc[order], np.arange(k + 2))
    nbr_lists = [mask_members(nb[v]) for v in range(k)]
    for c in range(1, k):
        layer = order[bounds[c] : bounds[c + 1]]
        vals = dp[layer]
        keep = vals != 0
        layer, vals = layer[keep], vals[keep]
        if layer.size == 0:
            break
        for v in range(k):
            sel = layer[((vals >> np.uint32(v)) & np.uint32(1)).astype(bool)]
            if sel.size == 0:
                continue
            for u in nbr_lists[v]:
                tgt = sel[((sel >> u) & 1) == 0]
                if tgt.size:
                    dp[tgt | (1 << u)] |= np.uint32(1 << u)
    return dp


def reconstruct(dp: np.ndarray, nb: Sequence[int], mask: int, end: int) -> list[int]:
    """Recover one path (as local indices, start first) from a filled ``path_dp`` table."""
    assert int(dp[mask]) >> end & 1
    path = [end]
    while mask & (mask - 1):
        prev = mask ^ (1 << end)
        cand = int(dp[prev]) & nb[end]
        u = (cand & -cand).bit_length() - 1
        path.append(u)
        mask, end = prev, u
    path.reverse()
    return path


def longest_path_local(nb: Sequence[int]) -> list[int]:
    k = len(nb)
    if k == 0:
        return []
    dp = path_dp(nb)
    masks = np.flatnonzero(dp)
    sizes = popcount(masks.astype(np.uint32))
    best = int(sizes.max())
    mask = int(masks[sizes == best].min())
    endset = int(dp[mask])
    end = (endset & -endset).bit_length() - 1
    return reconstruct(dp, nb, mask, end)


def hamilton_cycle_local(nb: Sequence[int]) -> list[int] | None:
    k = len(nb)
    if k < 3:
        return None
    dp = path_dp(nb, starts=[0])
    full = (1 << k) - 1
    closing = int(dp[full]) & nb[0]
    if not closing:
        return None
    end = (closing & -closing).bit_length() - 1
    return reconstruct(dp, nb, full, end)
