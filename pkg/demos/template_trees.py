"""Draw-free look at KC(n, t, ell): degrees, the cycle, and unlabelled spanning trees."""

import argparse
import math

from keychain import KeyChainParams, keychain_template


def tree_code(adj, root, parent=0):
    return "(" + "".join(sorted(tree_code(adj, c, root) for c in adj[root] if c != parent)) + ")"


def canonical(adj):
    # root at the centre (both centres for a bicentral tree, keep the smaller code)
    leaves = [v for v in adj if len(adj[v]) <= 1]
    deg = {v: len(adj[v]) for v in adj}
    left = len(adj)
    while left > 2:
        left -= len(leaves)
        nxt = []
        for v in leaves:
            for u in adj[v]:
                deg[u] -= 1
                if deg[u] == 1:
                    nxt.append(u)
        leaves = nxt
    return min(tree_code(adj, c) for c in leaves)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=24)
    ap.add_argument("--t", type=int, default=5)
    ap.add_argument("--ell", type=int, default=3)
    a = ap.parse_args()
    T = keychain_template(KeyChainParams(a.n, a.t, a.ell))
    degs = sorted(T.degree(v) for v in T.vertices)
    print(f"KC({a.n},{a.t},{a.ell}): {T.n} vertices, {T.m} edges, degrees {[degs.count(d) for d in (1, 2, 3)]} of 1/2/3")
    L = a.n - a.t
    forms = set()
    for i in range(1, L + 1):
        e = tuple(sorted((i, i % L + 1)))
        S = T.without_edges([e])
        forms.add(canonical({v: S.neighbors(v) for v in S.vertices}))
    print(f"cycle length {L}; {len(forms)} unlabelled spanning trees; ceil(L/2) = {math.ceil(L / 2)}")


if __name__ == "__main__":
    main()
