"""Acceptance criteria 1-5, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 -m tests.test_acceptance``.
"""

import itertools
import random
import sys
import time
import zlib
from fractions import Fraction

import pytest

from selfsim.analysis import (CERTIFIED_NOT_FREE, INCONCLUSIVE, circuit_test, component_stabilizer,
                              global_stabilizer, intersect_all, rank_test)
from selfsim.cli import RunConfig, enumerate_machines, summarize
from selfsim.freegroup import Alphabet, Word, commutator, reduce_letters
from selfsim.machine import (FIXTURES, components, enriched_dual, is_identity, is_trivial, load_fixture,
                             power, validate)
from selfsim.orbital import (HYPOTHESES_VIOLATED, absorption_probability, build_orbital, chi_exact,
                             first_level_orbits, verdict)
from selfsim.reversibility import CYCLIC_OR_NOT_FREE, find_nonbireversibility_witness, reversibility_verdict
from selfsim.stallings import flower, fold

RESULTS = {}


def line(n, ok, seconds, limit, detail):
    ok = ok and seconds < limit
    text = f"{'PASS' if ok else 'FAIL'}  criterion {n}  {seconds:6.2f}s (< {limit}s)  {detail}"
    RESULTS[n] = text
    return ok, text


def _emit(text, capsys=None):
    if capsys is not None:
        with capsys.disabled():
            print("\n" + text)
    else:
        print(text)


def freeness(m):
    rep = rank_test(m)
    if rep.verdict != CERTIFIED_NOT_FREE:
        alt = circuit_test(m)
        if alt.verdict == CERTIFIED_NOT_FREE:
            return alt
    return rep


def criterion_1():
    t0 = time.perf_counter()
    cfg = RunConfig("enumerate")
    hits = []
    for m in enumerate_machines(2, 2):
        item = summarize(m, "rank-drop", cfg)
        if item is not None:
            hits.append(item)
    paper = [h for h in hits if h["ranks"] == [[3, 2]]]
    fig1 = load_fixture("fig1")
    x = fig1.word("a^-1 b a^-1 b^-1")
    y = fig1.word("b a^-1 b a^-1 b^-2")
    paper_ok = is_identity(fig1, commutator(x, y))
    rep = freeness(fig1)
    rel_ok = (rep.verdict == CERTIFIED_NOT_FREE and rep.relation is not None and bool(rep.relation.letters)
              and is_identity(fig1, rep.relation))
    c = rep.per_component[0]
    ranks_ok = (c.witness_vertex, c.stab_rank, c.image_rank) == (0, 3, 2)
    ok = bool(paper) and paper_ok and rel_ok and ranks_ok
    return line(1, ok, time.perf_counter() - t0, 10,
                f"{len(hits)} rank-drop machines, {len(paper)} with ranks 3/2; paper word trivial={paper_ok}; "
                f"fig1 relation {rep.relation}")


def criterion_2():
    t0 = time.perf_counter()
    m = load_fixture("grigorchuk")
    checks = {}
    checks["sink co-accessible"] = validate(m)["sink_coaccessible"]
    checks["verdict cites main sink"] = 'Corollary "main sink"' in (verdict(m)["theorem"] or "")
    seeds = [m.word(s) for s in "abcd"]
    g = build_orbital(m, seeds)
    rep = chi_exact(g, 12)
    checks["chi(1)=3/8"] = rep.chi[0] == Fraction(3, 8)
    checks["chi(2)=11/16"] = rep.chi[1] == Fraction(11, 16)
    checks["chi(12)>=15/16"] = rep.chi[11] >= Fraction(15, 16)
    h = absorption_probability(g)
    checks["absorption 1"] = all(h[s] == 1 for s in g.seeds) and len(g.seeds) == 4
    checks["relations"] = all(is_identity(m, m.word(w)) for w in ("a a", "b b", "c c", "d d", "b c d"))
    checks["ab nontrivial"] = not is_identity(m, m.word("a b"))
    failed = [k for k, v in checks.items() if not v]
    return line(2, not failed, time.perf_counter() - t0, 10,
                f"chi(1..2)={rep.chi[0]},{rep.chi[1]} chi(12)={rep.chi[11]}" + (f" failed: {failed}" if failed else ""))


def criterion_3():
    t0 = time.perf_counter()
    m = load_fixture("aleshin")
    checks = {}
    checks["bireversible"] = validate(m)["bireversible"]
    t = enriched_dual(m)
    comps = components(t)
    rev = reversibility_verdict(m)
    checks["dual connected and bireversible"] = len(comps) == 1 and all(c.bireversible for c in rev.dual_components)
    rep = chi_exact(build_orbital(m, m.states.generators()), 8)
    checks["chi = 0 to m=8"] = all(c == 0 for c in rep.chi)
    checks["freeness inconclusive"] = freeness(m).verdict == INCONCLUSIVE
    vs = verdict(load_fixture("aleshin_sink"))
    checks["sink variant violated"] = (vs["verdict"] == HYPOTHESES_VIOLATED
                                       and vs["failing_hypothesis"] == "sink not co-accessible")
    vn = verdict(load_fixture("aleshin_sink_nontransitive"))
    checks["nontransitive orbits"] = (vn["verdict"] == HYPOTHESES_VIOLATED
                                      and vn["first_level_orbits"] == [["0", "1"], ["2"]])
    failed = [k for k, v in checks.items() if not v]
    return line(3, not failed, time.perf_counter() - t0, 30,
                "aleshin INCONCLUSIVE, sink variants violated" + (f" failed: {failed}" if failed else ""))


def criterion_4():
    t0 = time.perf_counter()
    first = None
    count = 0
    for m in enumerate_machines(3, 2):
        if reversibility_verdict(m).verdict == CYCLIC_OR_NOT_FREE:
            count += 1
            if first is None:
                first = m
    ok = first is not None
    detail = f"{count} reversible-not-bireversible machines"
    if first is not None:
        rep = reversibility_verdict(first)
        ok = ok and rep.verdict == CYCLIC_OR_NOT_FREE
        if rep.relation is not None:
            ok = ok and bool(rep.relation.letters) and is_identity(first, rep.relation)
        detail += f"; first member relation {rep.relation}"
    degenerate = []
    for name in FIXTURES:
        fm = load_fixture(name)
        if not validate(fm)["bireversible"]:
            continue
        t = enriched_dual(fm)
        for comp in components(t):
            wit = find_nonbireversibility_witness(t, comp, 3)
            if wit is not None and not wit.flagged:
                ok = False
            elif wit is not None:
                degenerate.append(name)
    if degenerate:
        detail += f"; only flagged (equal-input) pairs on {sorted(set(degenerate))}"
    return line(4, ok, time.perf_counter() - t0, 60, detail)


def criterion_5():
    from .test_freegroup import scan_reduce
    from .test_machine import brute_identity
    from .test_orbital import chi_by_edges

    t0 = time.perf_counter()
    checks = {}
    rng = random.Random(5)
    checks["reduction"] = all(
        reduce_letters(raw) == scan_reduce(raw)
        for raw in ([rng.choice((1, -1)) * rng.randint(1, 3) for _ in range(rng.randint(0, 30))] for _ in range(1000)))
    abc = Alphabet("abc")
    ok = True
    for _ in range(200):
        ws = [Word(abc, tuple(rng.choice((1, -1)) * rng.randint(1, 3) for _ in range(rng.randint(1, 7))))
              for _ in range(rng.randint(1, 4))]
        g = flower(ws, abc)
        order = list(range(len(g.edges)))
        rng.shuffle(order)
        ok = ok and fold(g) == fold(g, order)
    checks["fold confluence"] = ok
    ok = True
    for name in FIXTURES:
        m = load_fixture(name)
        r = random.Random(zlib.crc32(name.encode()))
        max_len = 8 if len(m.letters) == 2 else 6
        for _ in range(500):
            w = Word(m.states, tuple(r.choice((1, -1)) * r.randint(1, len(m.states))
                                     for _ in range(r.randint(0, max_len))))
            ok = ok and is_identity(m, w) == brute_identity(m, w)
    checks["word problem vs brute force"] = ok
    ok = True
    for name, W in (("grigorchuk", "abcd"), ("adding", "a"), ("aleshin", "abc"), ("fig1", "ab"),
                    ("aleshin_sink_nontransitive", "abc")):
        m = load_fixture(name)
        ws = [m.word(s) for s in W]
        rep = chi_exact(build_orbital(m, ws), 6)
        ok = ok and all(rep.T_counts[k - 1] == chi_by_edges(m, ws, k) for k in (1, 2, 3))
        A = len(m.letters)
        ok = ok and all(rep.T_counts[i] + rep.E_counts[i] == len(ws) * A ** (i + 1) for i in range(6))
        ok = ok and all(rep.T_counts[i] * A <= rep.T_counts[i + 1] for i in range(5))
    checks["chi counting"] = ok
    ok = True
    for name in FIXTURES:
        t = enriched_dual(load_fixture(name))
        ok = ok and global_stabilizer(t) == intersect_all([component_stabilizer(t, c, a)
                                                           for c in components(t) for a in c])
    checks["global stabilizer"] = ok
    failed = [k for k, v in checks.items() if not v]
    return line(5, not failed, time.perf_counter() - t0, 300,
                f"{len(checks)} oracle suites" + (f" failed: {failed}" if failed else ""))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 6)])
def test_acceptance(criterion, capsys):
    ok, text = criterion()
    _emit(text, capsys)
    assert ok, text


if __name__ == "__main__":
    failures = 0
    for c in CRITERIA:
        ok, text = c()
        _emit(text)
        failures += not ok
    sys.exit(1 if failures else 0)
