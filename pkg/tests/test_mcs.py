import csv
import io
import itertools
import json
import math

import mpmath
import numpy as np
import pytest

import oracles
from keychain import CapacityError, Graph, ParameterError, derive_seed, sample_gnp
from keychain.mcs import (
    common_edges,
    log_binomial,
    mces_exact,
    mces_heuristic,
    mcs_experiment,
    union_bound_eval,
)


def complete(n):
    return Graph(n, itertools.combinations(range(1, n + 1), 2))


def test_exact_k3_with_itself():
    r = mces_exact(complete(3), complete(3))
    assert r.M == 3 and r.mode == "exact"


def test_exact_path_into_triangle():
    assert mces_exact(Graph(3, [(1, 2), (2, 3)]), complete(3)).M == 2


def test_exact_star_against_path():
    star = Graph(4, [(1, 2), (1, 3), (1, 4)])
    path = Graph(4, [(1, 2), (2, 3), (3, 4)])
    r = mces_exact(star, path)
    assert r.M == 2 == oracles.mces_brute(4, star.edges(), path.edges())
    assert common_edges(star, path, r.pi) == 2


def test_exact_matches_brute_force():
    for i in range(40):
        n = 3 + i % 4
        G1 = sample_gnp(n, 0.5, derive_seed(0, "mcs-a", i))
        G2 = sample_gnp(n, 0.5, derive_seed(0, "mcs-b", i))
        r = mces_exact(G1, G2)
        assert r.M == oracles.mces_brute(n, G1.edges(), G2.edges())
        assert common_edges(G1, G2, r.pi) == r.M


def test_exact_capacity_and_mismatch():
    with pytest.raises(CapacityError):
        mces_exact(complete(9), complete(9))
    with pytest.raises(ParameterError):
        mces_exact(complete(4), complete(5))
    with pytest.raises(ParameterError):
        mces_heuristic(complete(4), complete(5))


def test_empty_graphs():
    assert mces_exact(Graph(0, []), Graph(0, [])).M == 0
    assert mces_heuristic(Graph(5, []), complete(5)).M == 0


def test_common_edges_rejects_non_bijection():
    with pytest.raises(ParameterError):
        common_edges(complete(3), complete(3), (1, 1, 2))


def test_heuristic_identical_graphs():
    for i in range(10):
        G = sample_gnp(15, 0.3, derive_seed(1, "same", i))
        assert mces_heuristic(G, G, seed=i).M == G.m


def test_heuristic_below_exact():
    for i in range(100):
        n = 4 + i % 4
        G1 = sample_gnp(n, 0.4, derive_seed(2, "ha", i))
        G2 = sample_gnp(n, 0.4, derive_seed(2, "hb", i))
        h = mces_heuristic(G1, G2, seed=i)
        assert h.M <= mces_exact(G1, G2).M
        assert common_edges(G1, G2, h.pi) == h.M


def test_heuristic_witness_at_40():
    n = 40
    p = n ** (-1 + 0.2)
    G1, G2 = sample_gnp(n, p, 1), sample_gnp(n, p, 2)
    h = mces_heuristic(G1, G2, seed=3, restarts=3)
    assert h.mode == "heuristic" and common_edges(G1, G2, h.pi) == h.M
    assert h == mces_heuristic(G1, G2, seed=3, restarts=3)


# -- union bound -----------------------------------------------------------------------------


def test_bound_at_p_one_does_not_certify():
    n, eps = 30, 0.5
    b = union_bound_eval(n, eps, p=1.0)
    assert b.m == 45
    assert b.log_bound == pytest.approx(log_binomial(435, 45) + math.lgamma(31))
    assert b.log_bound >= 0 and not b.certifies


def test_bound_matches_mpmath():
    mpmath.mp.dps = 50
    for n, eps, delta in [(50, 0.5, 0.1), (1000, 0.3, 0.05), (10**6, 0.5, 0.5 / 3)]:
        b = union_bound_eval(n, eps, delta)
        m = math.ceil((1 + eps) * n - 1e-9)
        p = mpmath.mpf(n) ** (-1 + mpmath.mpf(delta))
        ref = mpmath.log(mpmath.binomial(n * (n - 1) // 2, m)) + mpmath.log(mpmath.factorial(n)) + 2 * m * mpmath.log(p)
        assert b.m == m
        # lgamma terms near N = C(n, 2) carry absolute rounding of about N ln N * 2^-52
        N = n * (n - 1) // 2
        assert b.log_bound == pytest.approx(float(ref), abs=1e-6 + 1e-15 * N * math.log(N))


def test_bound_certifies_at_a_million():
    b = union_bound_eval(10**6, 0.5, 0.5 / 3)
    assert b.m == 1_500_000 and b.log_bound < 0 and b.certifies


def test_middle_relaxation_dominates():
    for n in (100, 10**4, 10**6):
        for p in (n ** -0.9, n ** -0.5, 0.5):
            b = union_bound_eval(n, 0.5, p=p)
            assert b.middle_log >= b.log_bound - 1e-6 * abs(b.log_bound)


def test_bound_monotone_in_p_and_m():
    n = 500
    for eps in (0.2, 0.5, 1.0):
        vals = [union_bound_eval(n, eps, p=p).log_bound for p in np.linspace(0.001, 0.05, 30)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
    # m grows with eps; the bound grows with m while C(N, m) still increases faster than p^2 shrinks
    vals = [union_bound_eval(n, e, p=1.0).log_bound for e in (0.1, 0.5, 1.0, 2.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_m_rounds_up():
    assert union_bound_eval(10, 0.25, p=0.5).m == 13
    assert union_bound_eval(10, 0.5, p=0.5).m == 15


@pytest.mark.parametrize("kw", [dict(n=0, eps=0.5, p=0.1), dict(n=10, eps=0.0, p=0.1), dict(n=10, eps=-1, p=0.1),
                                dict(n=10, eps=0.5, p=0.0), dict(n=10, eps=0.5, p=1.5), dict(n=10, eps=0.5)])
def test_bound_domain_errors(kw):
    with pytest.raises(ParameterError):
        union_bound_eval(**kw)


def test_bound_json():
    d = union_bound_eval(100, 0.5, 0.1).to_dict()
    assert json.loads(json.dumps(d)) == d
    assert d["simplified_log"] is not None and d["signs_agree"] in (True, False)
    assert union_bound_eval(100, 0.5, p=0.1).to_dict()["signs_agree"] is None


# -- experiment ------------------------------------------------------------------------------


def test_experiment_p0_and_p1():
    assert mcs_experiment(6, 0.0, 5, seed=1).values == [0] * 5
    assert mcs_experiment(7, 1.0, 3, seed=1).values == [21] * 3


def test_experiment_n7_audit():
    s = mcs_experiment(7, 0.3, 200, seed=4)
    assert len(s.trials) == 200 and all(t.mode == "exact" for t in s.trials)
    for t in s.trials[:50]:
        G1 = sample_gnp(7, 0.3, derive_seed(t.seed, "g1"))
        G2 = sample_gnp(7, 0.3, derive_seed(t.seed, "g2"))
        assert common_edges(G1, G2, t.pi) == t.M == oracles.mces_brute(7, G1.edges(), G2.edges())
    d = s.to_dict()
    assert d["max"] == max(s.values) and d["trials"] == 200
    assert 0 <= d["within"]["0.5"] <= 1


def test_experiment_heuristic_mode_for_large_n():
    s = mcs_experiment(20, 0.2, 4, seed=2)
    assert {t.mode for t in s.trials} == {"heuristic"}
    with pytest.raises(CapacityError):
        mcs_experiment(9, 0.5, 1, mode="exact")
    with pytest.raises(ParameterError):
        mcs_experiment(5, 0.5, 1, mode="greedy")


def test_experiment_deterministic_and_csv():
    a = mcs_experiment(6, 0.4, 20, seed=9)
    b = mcs_experiment(6, 0.4, 20, seed=9)
    assert a.to_csv() == b.to_csv() and a.to_dict() == b.to_dict()
    rows = list(csv.reader(io.StringIO(a.to_csv())))
    assert rows[0] == ["trial", "M", "mode", "seed"] and len(rows) == 21
    assert mcs_experiment(6, 0.4, 0).to_csv() == "trial,M,mode,seed\n"
    assert mcs_experiment(6, 0.4, 0).to_dict()["within"] == {"0.5": None}
