from fractions import Fraction

import pytest

from selfsim.freegroup import Word
from selfsim.machine import (BudgetExceeded, enriched_dual, is_identity, is_trivial, level_tuples, load_fixture,
                             power)
from selfsim.orbital import (HYPOTHESES_SATISFIED, HYPOTHESES_VIOLATED, OrbitalGraph, absorption_probability,
                             build_orbital, chi_exact, first_level_orbits, is_self_similar,
                             level_transitive_up_to, sink_coaccessible, sink_coaccessible_per_orbit,
                             verdict)


def seeds(m, text):
    return [m.word(w) for w in text.split(",")]


def chi_by_edges(m, W, level):
    """T(m) from the power transducer: count (u, w) with u o w trivial."""
    t = enriched_dual(m)
    tl = power(t, level)
    count = 0
    for w in W:
        for i in range(len(tl.vertices)):
            _, out = tl.walk(i, w.letters)
            count += is_trivial(t, out)
    return count


def test_grigorchuk_orbital(grigorchuk):
    g = build_orbital(grigorchuk, seeds(grigorchuk, "a,b,c,d"))
    assert g.names() == ["a", "b", "c", "d", "1"]
    assert g.identity_vertex == 4
    b = 1
    assert g.edges[b] == [0, 2]  # b -0-> a, b -1-> c
    assert g.seeds == [0, 1, 2, 3]
    assert sink_coaccessible(g)


def test_aleshin_orbital(aleshin):
    g = build_orbital(aleshin, aleshin.states.generators())
    assert len(g) == 3 and g.identity_vertex is None
    assert not sink_coaccessible(g)


def test_aleshin_sink_orbital():
    m = load_fixture("aleshin_sink")
    g = build_orbital(m, m.states.generators())
    assert g.identity_vertex is not None and not sink_coaccessible(g)
    h = absorption_probability(g)
    assert h[g.identity_vertex] == 1
    assert all(h[v] == 0 for v in range(len(g)) if v != g.identity_vertex)


def test_identity_machine_orbital():
    m = load_fixture("identity")
    g = build_orbital(m, [m.word("e")])
    assert len(g) == 1 and g.identity_vertex == 0
    rep = chi_exact(g, 5)
    assert rep.chi == [Fraction(1)] * 5


def test_orbital_merges_equal_elements(grigorchuk):
    g = build_orbital(grigorchuk, seeds(grigorchuk, "b,c d,a a b"))
    assert g.seeds[0] == g.seeds[1] == g.seeds[2]


def test_orbital_budget(grigorchuk):
    with pytest.raises(BudgetExceeded):
        build_orbital(grigorchuk, seeds(grigorchuk, "a b,b a"), budget=1)


def test_orbital_size_bound(fixture_machine):
    _, m = fixture_machine
    W = [Word(m.states, (1, 2)) if len(m.states) > 1 else Word(m.states, (1,)), Word(m.states, (-1,))]
    g = build_orbital(m, W)
    assert len(g) <= (2 * len(m.states)) ** 2


def test_grigorchuk_chi(grigorchuk):
    g = build_orbital(grigorchuk, seeds(grigorchuk, "a,b,c,d"))
    rep = chi_exact(g, 12)
    assert rep.chi[0] == Fraction(3, 8) and rep.chi[1] == Fraction(11, 16)
    assert rep.T_counts[:2] == [3, 11]
    assert rep.chi[11] >= Fraction(15, 16)
    assert rep.chi_limit == 1
    for m_, T, E in zip(rep.m_values, rep.T_counts, rep.E_counts):
        assert T + E == 4 * 2**m_
    for i in range(len(rep.chi) - 1):
        assert rep.T_counts[i] * 2 <= rep.T_counts[i + 1]
        assert rep.chi[i] <= rep.chi[i + 1]


def test_aleshin_chi_zero(aleshin):
    g = build_orbital(aleshin, aleshin.states.generators())
    rep = chi_exact(g, 8)
    assert rep.chi == [Fraction(0)] * 8 and rep.chi_limit == 0


@pytest.mark.parametrize("name,W", [("grigorchuk", "a,b,c,d"), ("adding", "a"), ("aleshin", "a,b,c"),
                                    ("aleshin_sink_nontransitive", "a,b,c"), ("fig1", "a,b"),
                                    ("grigorchuk", "a b,c a d")])
def test_chi_matrix_vs_edge_classification(name, W):
    m = load_fixture(name)
    ws = seeds(m, W)
    rep = chi_exact(build_orbital(m, ws), 3)
    for level in (1, 2, 3):
        assert rep.T_counts[level - 1] == chi_by_edges(m, ws, level)


@pytest.mark.parametrize("name", ["grigorchuk", "adding", "aleshin_sink", "aleshin_sink_nontransitive"])
def test_count_identities_to_level_6(name):
    m = load_fixture(name)
    g = build_orbital(m, m.states.generators())
    rep = chi_exact(g, 6)
    A = len(m.letters)
    for i, mm in enumerate(rep.m_values):
        assert rep.T_counts[i] + rep.E_counts[i] == len(g.seeds) * A**mm
        if i:
            assert rep.T_counts[i - 1] * A <= rep.T_counts[i]


def test_absorption_grigorchuk(grigorchuk):
    g = build_orbital(grigorchuk, seeds(grigorchuk, "a,b,c,d"))
    h = absorption_probability(g)
    assert all(h[s] == 1 for s in g.seeds)


def test_absorption_needs_sink(aleshin):
    g = build_orbital(aleshin, aleshin.states.generators())
    with pytest.raises(ValueError):
        absorption_probability(g)


def test_absorption_partial():
    # vertex 0 loops forever on letter 0 and reaches the sink on letter 1
    g = OrbitalGraph(["0", "1"], [None, None, None], [[0, 2], [1, 1], [2, 2]], 2, [0, 1])
    h = absorption_probability(g)
    assert h == [Fraction(1), Fraction(0), Fraction(1)]
    # two of three letters lead to the sink, the third to a trap
    g = OrbitalGraph(["0", "1", "2"], [None, None, None], [[1, 2, 2], [1, 1, 1], [2, 2, 2]], 2, [0])
    assert absorption_probability(g)[0] == Fraction(2, 3)
    # a detour through a transient vertex does not lose mass
    g = OrbitalGraph(["0", "1"], [None, None, None], [[1, 2], [0, 1], [2, 2]], 2, [0])
    assert absorption_probability(g)[0] == 1


def test_orbit_accessibility():
    m = load_fixture("aleshin_sink_nontransitive")
    g = build_orbital(m, m.states.generators())
    orbits = first_level_orbits(m)
    assert orbits == [[0, 1], [2]]
    assert sink_coaccessible(g)
    assert sink_coaccessible_per_orbit(g, orbits) == [False, True]


def test_verdict_grigorchuk(grigorchuk):
    rep = verdict(grigorchuk)
    assert rep["verdict"] == HYPOTHESES_SATISFIED
    assert rep["theorem"] == 'Corollary "main sink"'
    assert rep["conclusion"] == "cyclic or not free"


def test_verdict_aleshin_sink():
    rep = verdict(load_fixture("aleshin_sink"))
    assert rep["verdict"] == HYPOTHESES_VIOLATED
    assert rep["failing_hypothesis"] == "sink not co-accessible"


def test_verdict_nontransitive():
    rep = verdict(load_fixture("aleshin_sink_nontransitive"))
    assert rep["verdict"] == HYPOTHESES_VIOLATED
    assert rep["first_level_orbits"] == [["0", "1"], ["2"]]
    assert "first level not transitive" in rep["failing_hypothesis"]


def test_verdict_subgroup(grigorchuk):
    # <a, b, c, d> written without the sink is still self-similar
    ws = seeds(grigorchuk, "a,b,c,d")
    assert is_self_similar(grigorchuk, ws)
    assert verdict(grigorchuk, ws)["verdict"] == HYPOTHESES_SATISFIED
    # <b> is not transitive on the first level and not self-similar
    ws = seeds(grigorchuk, "b")
    assert not is_self_similar(grigorchuk, ws)
    assert verdict(grigorchuk, ws)["verdict"] == HYPOTHESES_VIOLATED


def test_level_transitivity():
    m = load_fixture("adding")
    assert level_transitive_up_to(m, [m.word("a")], 6) == 6
    g = load_fixture("grigorchuk")
    assert level_transitive_up_to(g, seeds(g, "a,b,c,d"), 6) == 6


def test_dot_export(grigorchuk):
    dot = build_orbital(grigorchuk, seeds(grigorchuk, "a,b,c,d")).to_dot()
    assert "doublecircle" in dot and "lightgray" in dot
