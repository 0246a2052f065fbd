import math
import re

import mpmath
import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from keychain import (
    Graph,
    KeyChainParams,
    OverlapError,
    ParameterError,
    ParseError,
    compute_parameters,
    degree_classes,
    keychain_template,
    parse,
    read_graph,
    sample_gnp,
    serialize,
    write_graph,
)
from keychain.graph import set_stats


def test_gnp_extremes():
    assert sample_gnp(4, 1.0, 123).m == 6
    assert sample_gnp(5, 0.0, 123).m == 0
    assert sample_gnp(1, 0.5, 0).m == 0


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_gnp_rejects_bad_probability(p):
    with pytest.raises(ParameterError):
        sample_gnp(10, p, 0)


def test_gnp_edge_count_concentration():
    mean = 4995 * 0.01
    sd = math.sqrt(4995 * 0.01 * 0.99)
    counts = [sample_gnp(100, 0.01, seed).m for seed in range(100)]
    assert all(abs(c - mean) <= 4 * sd for c in counts)
    assert abs(np.mean(counts) - mean) <= 4 * sd / 10


def test_gnp_deterministic_per_seed():
    assert sample_gnp(60, 0.1, 42).edges() == sample_gnp(60, 0.1, 42).edges()
    assert sample_gnp(60, 0.1, 42).edges() != sample_gnp(60, 0.1, 43).edges()


def test_template_fig1():
    T = keychain_template(KeyChainParams(24, 5, 3))
    assert T.n == 24 and T.m == 24
    keys = {(3, 20), (6, 21), (9, 22), (12, 23), (15, 24)}
    cycle = {(i, i + 1) for i in range(1, 19)} | {(1, 19)}
    assert T.edge_set() == frozenset(keys | cycle)


def test_template_t0_is_cycle():
    T = keychain_template(KeyChainParams(9, 0, 4))
    assert sorted(T.degree(v) for v in T.vertices) == [2] * 9
    assert T.is_connected()


def test_template_12_2_3():
    T = keychain_template(KeyChainParams(12, 2, 3))
    assert sorted(T.degree(v) for v in T.vertices) == [1, 1] + [2] * 8 + [3, 3]
    g = nx.Graph(T.edges())
    assert nx.is_connected(g) and len(nx.cycle_basis(g)) == 1


@pytest.mark.parametrize("n,t,ell,needle", [(10, 3, 3, "t*(ell+1) <= n"), (4, 2, 1, "n - t >= 3"), (10, 1, 0, "ell >= 1")])
def test_template_names_violated_constraint(n, t, ell, needle):
    with pytest.raises(ParameterError, match=re.escape(needle)):
        keychain_template(KeyChainParams(n, t, ell))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 20))
def test_template_shape(t, ell, extra):
    n = t * (ell + 1) + 3 + extra
    T = keychain_template(KeyChainParams(n, t, ell))
    degs = sorted(T.degree(v) for v in T.vertices)
    assert T.m == n and T.is_connected()
    assert degs.count(1) == t and degs.count(3) == t and degs.count(2) == n - 2 * t
    cycles = nx.cycle_basis(nx.Graph(T.edges()))
    assert len(cycles) == 1 and len(cycles[0]) == n - t


def test_spanning_tree_orbits_all_small_triples():
    # one tree per orbit of cycle edges under the reflection of the template, once the
    # long arc without keys rules out accidental isomorphisms
    for n in range(5, 31):
        for t in range(1, 5):
            for ell in range(1, 8):
                if KeyChainParams(n, t, ell).problems() or n < 2 * t * (ell + 1):
                    continue
                T = keychain_template(KeyChainParams(n, t, ell))
                L = n - t
                forms = {
                    oracles.tree_canonical_form(oracles.adjacency(T.without_edges([tuple(sorted((i, i % L + 1)))])))
                    for i in range(1, L + 1)
                }
                fixed_pair = L % 2 == 0 and (t + 1) * ell % 2 == 1
                assert len(forms) == math.ceil(L / 2) + fixed_pair, (n, t, ell)


def test_parameters_1024_desk():
    p = compute_parameters(1024, "desk", growth=2)
    assert p.t == 6
    assert p.a_seq == tuple(2**i for i in range(12))
    assert p.j0 == 12 and p.ell == 24


def test_parameters_3000_desk():
    p = compute_parameters(3000, "desk")
    assert (p.t, p.ell, p.j0) == (8, 26, 13)


def test_parameters_paper_stalls_below_e100():
    with pytest.raises(ParameterError, match="no progress"):
        compute_parameters(int(math.exp(50)), "paper")


def test_parameters_desk_rejects_slow_growth():
    with pytest.raises(ParameterError):
        compute_parameters(5000, "desk", growth=1.0)


def test_parameters_big_n_matches_bigint_oracle():
    n = 2**400
    p = compute_parameters(n, "paper")
    mpmath.mp.dps = 300
    ln = mpmath.log(mpmath.mpf(n))
    g = ln / 100
    target = 10 * mpmath.mpf(n) / ln
    a = [1]
    while a[-1] < target:
        a.append(int(mpmath.ceil(a[-1] * g)))
    assert p.j0 == len(a) and list(p.a_seq) == a
    assert p.t == int(mpmath.floor(ln)) and p.ell == 2 * len(a)
    assert all(x < y for x, y in zip(p.a_seq, p.a_seq[1:]))


def test_parameters_json_round_trip():
    p = compute_parameters(1024, "desk", growth=2)
    q = KeyChainParams.from_json(p.to_json())
    assert (q.n, q.t, q.ell, q.j0, q.a_seq) == (p.n, p.t, p.ell, p.j0, p.a_seq)


def test_degree_classes_examples():
    C5 = Graph(5, [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])
    dc = degree_classes(C5, 1)
    assert dc.sizes() == {2: 5} and not dc.small
    star = Graph(5, [(1, 2), (1, 3), (1, 4), (1, 5)])
    dc = degree_classes(star, 1)
    assert dc.sizes() == {1: 4, 4: 1} and dc.small == frozenset({2, 3, 4, 5})


def test_degree_classes_recount():
    G = sample_gnp(100, 0.05, 5)
    dc = degree_classes(G)
    adj = oracles.adjacency(G)
    assert sum(dc.sizes().values()) == 100
    for d, size in dc.sizes().items():
        assert size == sum(1 for v in adj if len(adj[v]) == d)


def test_set_stats_k4():
    K4 = sample_gnp(4, 1.0, 0)
    s = set_stats(K4, {1, 2}, {3, 4})
    assert (s.e_U, s.e_UW, set(s.N_U)) == (1, 4, {3, 4})
    e = set_stats(K4, set())
    assert e.e_U == 0 and not e.N_U


def test_set_stats_overlap():
    with pytest.raises(OverlapError):
        set_stats(sample_gnp(6, 0.5, 0), {1, 2}, {2, 3})


def test_set_stats_edge_partition():
    G = sample_gnp(50, 0.2, 8)
    rng = np.random.default_rng(0)
    perm = rng.permutation(50) + 1
    U, W = set(perm[:12].tolist()), set(perm[12:25].tolist())
    rest = set(range(1, 51)) - U - W
    s = set_stats(G, U, W)
    eW = set_stats(G, W).e_U
    touching_rest = sum(1 for a, b in G.edges() if a in rest or b in rest)
    assert s.e_U + eW + s.e_UW + touching_rest == G.m
    adj = oracles.adjacency(G)
    assert set(s.N_U) == oracles.nbhd(adj, U)
    assert set(s.common) == oracles.nbhd(adj, U) & oracles.nbhd(adj, W)


def test_serialize_k3():
    assert serialize(sample_gnp(3, 1.0, 0)) == "3 3\n1 2\n1 3\n2 3\n"


@pytest.mark.parametrize(
    "text,line",
    [
        ("5 1\n0 5\n", 2),
        ("3 2\n1 2\n1 2\n", 3),
        ("3 1\n1 1\n", 2),
        ("3 1\n1 x\n", 2),
        ("3 1\n1 2 3\n", 2),
        ("3\n", 1),
        ("3 2\n1 2\n", 1),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert exc.value.line == line


def test_parse_empty():
    with pytest.raises(ParseError):
        parse("")


def test_round_trip_sampled(tmp_path):
    for seed in range(100):
        G = sample_gnp(30, 0.15, seed)
        assert parse(serialize(G)).edge_set() == G.edge_set()
    write_graph(G, tmp_path / "g.txt")
    assert read_graph(tmp_path / "g.txt").edge_set() == G.edge_set()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 12).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(1, max(n, 1)), st.integers(1, max(n, 1)))))))
def test_round_trip_property(data):
    n, pairs = data
    edges = {(min(a, b), max(a, b)) for a, b in pairs if a != b and n >= 2}
    G = Graph(n, edges)
    H = parse(serialize(G))
    assert H.n == n and H.edge_set() == G.edge_set()
