import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from keychain import CapacityError, Graph, ParameterError, check_set_expansion, derive_seed, sample_gnp
from keychain.constants import Constants, profile_constants
from keychain.properties import (
    check_all,
    check_degree_properties,
    check_small_structure,
    confirm_all,
    confirm_violation,
)
from keychain.tails import TailBoundQuery, binomial_upper, chernoff_lower, log_tail_bound, tail_bound_eval


def star(m):
    return Graph(m + 1, [(1, i) for i in range(2, m + 2)])


def test_p1_empty_graph_holds():
    p1, _ = check_degree_properties(Graph(10, []))
    assert p1.holds


def test_p1_star_violated_at_centre():
    m = 60
    assert m > 10 * math.log(m + 1)
    p1, _ = check_degree_properties(star(m))
    assert p1.violated and p1.witness["vertex"] == 1
    assert confirm_violation(star(m), p1)


def test_p2_six_cycle_holds():
    C6 = Graph(6, [(i, i % 6 + 1) for i in range(1, 7)])
    _, p2 = check_degree_properties(C6)
    assert p2.holds


def test_p3_isolated_edge():
    n = 20
    G = Graph(n, [(1, 2)] + [(i, j) for i in range(3, n + 1) for j in range(i + 1, n + 1)])
    c = Constants.desk()
    p3, _ = check_small_structure(G, c)
    assert p3.violated and sorted(p3.witness["path"]) == [1, 2]
    assert confirm_violation(G, p3, c)


def test_p4_clique_plus_isolated():
    n = 40
    G = Graph(n, [(i, j) for i in range(1, n) for j in range(i + 1, n)])
    _, p4 = check_small_structure(G, Constants.desk())
    assert p4.holds


def test_p3_p4_vacuous_without_small_vertices():
    G = sample_gnp(30, 1.0, 0)
    p3, p4 = check_small_structure(G, Constants.desk())
    assert p3.holds and p4.holds


def test_p3_unknown_below_three():
    p3, _ = check_small_structure(Graph(2, [(1, 2)]), Constants.desk())
    assert p3.verdict == "unknown"


def test_p6_empty_graph_holds():
    c = Constants(gamma=0.5, p6_size_div=1.0, p6_edge_div=1.0)
    assert check_set_expansion(Graph(10, []), "P6", "exact", c).holds


def test_p8_complete_graph_holds():
    assert check_set_expansion(sample_gnp(12, 1.0, 0), "P8", "exact", Constants.desk()).holds


def test_p5_biclique_funnel():
    # K_{4,2} on 1..4 x 5..6, padding vertices 7..16 isolated
    G = Graph(16, [(a, b) for a in range(1, 5) for b in (5, 6)])
    c = Constants.desk()
    r = check_set_expansion(G, "P5", "exact", c)
    assert r.violated and r.witness["U"] == [1, 2, 3, 4]
    assert oracles.violates(G, "P5", c, r.witness["U"])
    assert not oracles.set_property_holds(G, "P5", c)


def test_exact_mode_refuses_large_graphs():
    with pytest.raises(CapacityError):
        check_set_expansion(sample_gnp(25, 0.3, 0), "P5", "exact")


def test_unknown_property_and_mode():
    G = sample_gnp(8, 0.5, 0)
    with pytest.raises(ParameterError):
        check_set_expansion(G, "P9")
    with pytest.raises(ParameterError):
        check_set_expansion(G, "P5", "fast")


def test_report_json_shape():
    G = Graph(16, [(a, b) for a in range(1, 5) for b in (5, 6)])
    data = json.loads(check_set_expansion(G, "P5", "exact", Constants.desk()).to_json())
    assert data["property"] == "P5" and data["verdict"] == "violated"
    assert data["witness"]["U"] == [1, 2, 3, 4] and data["mode"] == {"kind": "exact"}


TIGHT = Constants(
    gamma=0.5, p5_nbr_div=4.5, p6_size_div=1.0, p6_edge_div=1.0,
    p7_low=0.5, p7_high_div=3.0, p7_target_div=3.0, p8_size_div=2.5,
)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.floats(0.05, 0.95), st.integers(0, 2**32))
def test_sampled_mode_is_sound(n, p, seed):
    G = sample_gnp(n, p, seed)
    for which in ("P5", "P6", "P7", "P8"):
        s = check_set_expansion(G, which, "sampled", TIGHT, trials=30, seed=seed)
        assert s.verdict in ("violated", "unknown")
        if s.violated:
            assert not check_set_expansion(G, which, "exact", TIGHT).holds
            assert oracles.violates(G, which, TIGHT, s.witness["U"], s.witness.get("W", ()))


def test_sampled_mode_finds_funnel():
    G = Graph(16, [(a, b) for a in range(1, 5) for b in (5, 6)])
    r = check_set_expansion(G, "P5", "sampled", Constants.desk(), trials=100, seed=1)
    assert r.violated and confirm_violation(G, r, Constants.desk())


def test_check_all_witnesses_revalidate():
    c = Constants.desk()
    for seed in range(5):
        G = sample_gnp(300, (math.log(300) - 1) / 300, seed)
        reports = check_all(G, c, "sampled", trials=30, seed=seed)
        assert [r.property for r in reports] == [f"P{i}" for i in range(1, 9)]
        assert confirm_all(G, reports, c)


def test_profile_constants():
    assert profile_constants("paper").gamma == 1e-4
    assert profile_constants("desk").gamma == 0.01
    assert profile_constants("desk", 0.05).gamma == 0.05
    with pytest.raises(ParameterError):
        profile_constants("lab")


# -- tail bounds -----------------------------------------------------------------------------


def test_chernoff_hand_values():
    assert chernoff_lower(10, 0.5) == pytest.approx(math.exp(-1.5342640972002735), abs=1e-12)
    assert chernoff_lower(10, 1.0) == 1.0
    assert chernoff_lower(10, 0.999999) == pytest.approx(1.0, abs=1e-9)


def test_claim_at_k_equals_enp_is_one():
    n, p = 100, 0.05
    assert binomial_upper(n, p, math.e * n * p) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "q",
    [
        TailBoundQuery("chernoff_lower", mu=5, ratio=0.0),
        TailBoundQuery("chernoff_lower", mu=5, ratio=1.5),
        TailBoundQuery("chernoff_upper", mu=5, ratio=0.5),
        TailBoundQuery("binomial_upper", n=10, p=0.5, k=0),
        TailBoundQuery("binomial_upper", n=10, p=0.5, k=11),
        TailBoundQuery("binomial_lower", n=10, p=0.2, k=3),
        TailBoundQuery("poisson", mu=1, ratio=1),
    ],
)
def test_out_of_domain_queries(q):
    with pytest.raises(ParameterError):
        tail_bound_eval(q)


def test_log_space_survives_underflow():
    lb = log_tail_bound(TailBoundQuery("chernoff_lower", mu=1e6, ratio=0.1))
    assert lb == pytest.approx(-1e6 * (0.1 * math.log(0.1) - 0.1 + 1))
    assert tail_bound_eval(TailBoundQuery("chernoff_lower", mu=1e6, ratio=0.1)) == 0.0


def test_degree_tails_from_sampled_graphs():
    # the degree of vertex 1 in G(n, p) is Bin(n - 1, p)
    n, p, trials = 60, 0.1, 10_000
    degs = np.array([sample_gnp(n, p, derive_seed(0, "deg", i)).degree(1) for i in range(trials)])
    mu = (n - 1) * p
    for k in (10, 12, 15):
        b = binomial_upper(n - 1, p, k)
        freq = np.mean(degs >= k)
        assert freq <= b + 4 * math.sqrt(max(b * (1 - b), 1 / trials) / trials)
    for a in (0.3, 0.6):
        b = chernoff_lower(mu, a)
        assert np.mean(degs <= a * mu) <= b + 4 * math.sqrt(max(b * (1 - b), 1 / trials) / trials)
