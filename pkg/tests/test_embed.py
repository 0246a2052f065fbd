import itertools
import json
import math

import pytest

import oracles
from keychain import (
    EmbedConfig,
    Embedding,
    Graph,
    InfeasibleError,
    KeyChainParams,
    build_comb,
    close_chain,
    derive_seed,
    embed_keychain,
    keychain_template,
    partition_vertices,
    sample_gnp,
    select_keys,
    verify_embedding,
)
from keychain.constants import Constants
from keychain.embed import comb_problems, partition_violations, trivial_partition


def clique_with_pendants(k, pendants):
    edges = list(itertools.combinations(range(1, k + 1), 2))
    edges += [(i, k + i) for i in range(1, pendants + 1)]
    return Graph(k + pendants, edges)


def audit_comb(G, comb, ell):
    """Independent re-check of the comb invariants."""
    adj = oracles.adjacency(G)
    for x, w in zip(comb.keys, comb.attach):
        assert w in adj[x]
    assert len(set(comb.attach)) == len(comb.attach)
    for i, P in enumerate(comb.paths):
        assert len(P) == ell + 1 and len(set(P)) == ell + 1
        assert P[0] == comb.attach[i] and P[-1] == comb.attach[i + 1]
        assert all(b in adj[a] for a, b in zip(P, P[1:]))
        assert not set(P) & set(comb.keys)
    for i, j in itertools.combinations(range(len(comb.paths)), 2):
        shared = set(comb.paths[i]) & set(comb.paths[j])
        assert shared == ({comb.attach[j]} if j == i + 1 else set())


# -- keys ---------------------------------------------------------------------------------


def test_keys_are_the_leaves():
    G = clique_with_pendants(10, 3)
    assert select_keys(G, 3, "paper") == [11, 12, 13]


def test_too_many_leaves():
    with pytest.raises(InfeasibleError) as exc:
        select_keys(clique_with_pendants(10, 4), 3, "paper")
    assert exc.value.obstruction == "too-many-leaves"


def test_isolated_vertex_is_an_obstruction():
    G = Graph(6, [(1, 2), (2, 3), (3, 4), (4, 1)])
    with pytest.raises(InfeasibleError) as exc:
        select_keys(G, 1, "lowest-degree")
    assert exc.value.obstruction == "isolated-vertex"


def test_keys_at_3000():
    n = 3000
    G = sample_gnp(n, (math.log(n) + 2) / n, derive_seed(0, "graph"))
    if G.min_degree() == 0:
        pytest.skip("sample has an isolated vertex")
    K = select_keys(G, 8, "lowest-degree", check=True)
    assert len(set(K)) == 8
    for a, b in itertools.combinations(K, 2):
        assert not G.has_edge(a, b)
        assert not G.neighbors(a) & G.neighbors(b)


# -- partition ------------------------------------------------------------------------------


def test_partition_complete_graph():
    n = 60
    G = sample_gnp(n, 1.0, 0)
    c = Constants.desk(gamma=0.1)
    part = partition_vertices(G, [], c, seed=3)
    assert part.resamples == 0 and not partition_violations(G, part, c)
    s = math.ceil(1 / 0.1)
    assert len(part.U1) == len(part.U2) == n // s
    assert not part.U1 & part.U2


def test_partition_vertex_seeing_only_keys():
    # vertex 30 is adjacent only to the key 29; nothing can put reservoir vertices next to it
    n = 30
    edges = [(i, j) for i in range(1, 29) for j in range(i + 1, 29)] + [(29, 30), (29, 1), (29, 2)]
    G = Graph(n, edges)
    c = Constants(gamma=0.1, part_low=10.0, part_high=100.0, part_vprime=0.0, small_threshold=0)
    with pytest.raises(InfeasibleError) as exc:
        partition_vertices(G, [30], c, seed=0, max_resamples=5)
    flagged = {v for _, v in exc.value.details["violations"]}
    assert exc.value.obstruction.startswith("partition")
    assert flagged


def test_partition_invariants_on_random_graph():
    n = 2000
    G = sample_gnp(n, (math.log(n) + 3) / n, 4)
    c = Constants.desk()
    K = select_keys(G, 7, "lowest-degree")
    try:
        part = partition_vertices(G, K, c, seed=1)
    except InfeasibleError:
        pytest.skip("no valid partition for this sample")
    assert not partition_violations(G, part, c)
    assert set(K) <= part.Vprime and not set(K) & (part.U1 | part.U2)
    for x in K:
        assert G.neighbors(x) <= part.Vprime - set(K)


# -- comb -------------------------------------------------------------------------------------


def test_comb_single_key():
    G = clique_with_pendants(8, 1)
    part = trivial_partition(G, [9])
    comb = build_comb(G, part, KeyChainParams(9, 1, 2))
    assert comb.paths == [] and comb.keys == [9] and comb.attach == [1]


def test_comb_unique_path():
    # keys 1, 2 hang from w1 = 3 and w2 = 4; the only 3-4 path of length 4 is 3-5-6-7-4,
    # and 4-8-9-10-11-3 (length 5) closes the chain
    edges = [(1, 3), (2, 4), (3, 5), (5, 6), (6, 7), (7, 4), (4, 8), (8, 9), (9, 10), (10, 11), (11, 3)]
    G = Graph(11, edges)
    adj = oracles.adjacency(G)
    exhaustive = [p for p in itertools.permutations(range(5, 12), 3)
                  if all(b in adj[a] for a, b in zip((3, *p, 4), (*p, 4)))]
    assert exhaustive == [(5, 6, 7)]
    params = KeyChainParams(11, 2, 4)
    part = trivial_partition(G, [1, 2])
    comb = build_comb(G, part, params)
    assert comb.paths[0] in ([3, 5, 6, 7, 4], [4, 7, 6, 5, 3])
    assert verify_embedding(G, close_chain(G, part, comb, params))[0]


def test_comb_at_3000_desk():
    n = 3000
    G = sample_gnp(n, (math.log(n) + 2) / n, derive_seed(1, "graph"))
    res = embed_keychain(G, EmbedConfig(seed=1))
    assert res.ok
    comb_stage = [s for s in res.trace.stages if s["stage"] == "comb" and s["ok"]]
    assert comb_stage
    ell = res.embedding.params.ell
    phi = res.embedding.phi
    t = res.embedding.params.t
    L = n - t
    # rebuild the comb from the certificate: w_i = phi(i * ell), P_i the cycle stretch between them
    attach = [phi[i * ell - 1] for i in range(1, t + 1)]
    paths = [[phi[j - 1] for j in range(i * ell, (i + 1) * ell + 1)] for i in range(1, t)]
    keys = [phi[L + i - 1] for i in range(1, t + 1)]

    class C:
        pass

    comb = C()
    comb.keys, comb.attach, comb.paths = keys, attach, paths
    audit_comb(G, comb, ell)


# -- closure and verification ---------------------------------------------------------------


def test_close_chain_on_template():
    params = KeyChainParams(60, 3, 6)
    G = keychain_template(params)
    keys = select_keys(G, 3, "paper")
    part = trivial_partition(G, keys)
    comb = build_comb(G, part, params)
    assert not comb_problems(G, comb, 6)
    e = close_chain(G, part, comb, params)
    assert verify_embedding(G, e) == (True, "ok")


def test_close_chain_complete_host():
    params = KeyChainParams(40, 3, 5)
    G = clique_with_pendants(37, 3)
    keys = select_keys(G, 3, "lowest-degree")
    part = trivial_partition(G, keys)
    comb = build_comb(G, part, params)
    audit_comb(G, comb, 5)
    e = close_chain(G, part, comb, params)
    assert verify_embedding(G, e)[0]


def test_verify_identity_and_missing_edge():
    params = KeyChainParams(24, 5, 3)
    T = keychain_template(params)
    e = Embedding(params, list(range(1, 25)))
    assert verify_embedding(T, e) == (True, "ok")
    ok, why = verify_embedding(T.without_edges([(6, 21)]), e)
    assert not ok and "6-21" in why


def test_verify_rejects_bad_maps():
    params = KeyChainParams(24, 5, 3)
    T = keychain_template(params)
    assert not verify_embedding(T, Embedding(params, [1] * 24))[0]
    assert not verify_embedding(T, Embedding(params, list(range(1, 24))))[0]
    assert not verify_embedding(T, Embedding(params, list(range(0, 24))))[0]
    assert not verify_embedding(sample_gnp(25, 1.0, 0), Embedding(params, list(range(1, 25))))[0]


def test_embedding_json_round_trip():
    params = KeyChainParams(24, 5, 3)
    e = Embedding(params, list(range(24, 0, -1)))
    f = Embedding.from_json(e.to_json())
    assert f.phi == e.phi and (f.params.n, f.params.t, f.params.ell) == (24, 5, 3)
    assert json.loads(e.to_json())["phi"][0] == 24


# -- pipeline -------------------------------------------------------------------------------


def test_pipeline_planted():
    params = KeyChainParams(100, 4, 8)
    T = keychain_template(params)
    G = T.with_edges((u, u + 37) for u in range(1, 60, 3))
    r = embed_keychain(G, EmbedConfig(params=params, seed=2))
    assert r.ok and verify_embedding(G, r.embedding)[0]


def test_pipeline_two_cliques_fails():
    G = Graph(40, list(itertools.combinations(range(1, 21), 2)) + list(itertools.combinations(range(21, 41), 2)))
    r = embed_keychain(G, EmbedConfig(params=KeyChainParams(40, 2, 4), attempts=2))
    assert not r.ok and r.embedding is None
    assert r.trace.failure and r.trace.failure["stage"] in ("keys", "comb", "closure")
    assert r.trace.to_json()


def test_pipeline_rejects_params_for_other_n():
    r = embed_keychain(sample_gnp(50, 0.5, 0), EmbedConfig(params=KeyChainParams(60, 2, 4)))
    assert not r.ok and r.trace.failure["stage"] == "params"


def test_pipeline_deterministic():
    n = 400
    G = sample_gnp(n, (math.log(n) + 3) / n, 11)
    a = embed_keychain(G, EmbedConfig(seed=5))
    b = embed_keychain(G, EmbedConfig(seed=5))
    assert a.trace.to_json() == b.trace.to_json()
    assert (a.embedding is None) == (b.embedding is None)
    if a.ok:
        assert a.embedding.phi == b.embedding.phi and verify_embedding(G, a.embedding)[0]
