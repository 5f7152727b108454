"""Orbital graphs of automaton groups, walk counting and absorption.

The orbital graph of a set of group elements has the sections of those
elements as vertices and an edge ``g --a--> g|a`` for each letter ``a``.
For automaton groups sections never lengthen a word, so the graph is
finite.  A simple random walk on it is an absorbing Markov chain when the
identity is reachable from everywhere.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .freegroup import Word, invert_letters, reduce_letters
from .machine import (DEFAULT_CLOSURE_BUDGET, BudgetExceeded, Machine, Transducer, components,
                      enriched_dual, is_trivial, level_tuples)

DEFAULT_ORBIT_BUDGET = 10**5
DEFAULT_TRANSITIVITY_LEVEL = 6

HYPOTHESES_SATISFIED = "HYPOTHESES_SATISFIED"
HYPOTHESES_VIOLATED = "HYPOTHESES_VIOLATED"

MAIN_SINK = 'Corollary "main sink"'
SELF_SIMILAR = 'Theorem "self similar co-accessible"'
SPHERICAL = 'Theorem "spherically transitive"'


class _Oracle:
    """Memoized equality of state words, pre-filtered by the action on a few levels."""

    def __init__(self, t: Transducer, budget: int = DEFAULT_CLOSURE_BUDGET, levels: int = 3):
        self.t = t
        self.budget = budget
        n = len(t.vertices)
        depth = 1
        while depth < levels and n ** (depth + 1) <= 512:
            depth += 1
        self.tuples = [level_tuples(n, k) for k in range(1, depth + 1)]
        self._eq: dict[frozenset, bool] = {}
        self._triv: dict[tuple[int, ...], bool] = {}

    def fingerprint(self, w: tuple[int, ...]):
        return tuple(tuple(self.t.thread(u, w)[0] for u in level) for level in self.tuples)

    def trivial(self, w: tuple[int, ...]) -> bool:
        if w not in self._triv:
            self._triv[w] = is_trivial(self.t, w, self.budget)
        return self._triv[w]

    def equal(self, u: tuple[int, ...], v: tuple[int, ...]) -> bool:
        if u == v:
            return True
        key = frozenset((u, v))
        if key not in self._eq:
            self._eq[key] = self.trivial(reduce_letters(u + invert_letters(v)))
        return self._eq[key]


@dataclass
class OrbitalGraph:
    letters: list[str]
    vertices: list[Word]
    edges: list[list[int]]
    identity_vertex: int | None
    seeds: list[int]

    def __len__(self):
        return len(self.vertices)

    def names(self) -> list[str]:
        return [str(w) for w in self.vertices]

    def to_json(self) -> dict:
        names = self.names()
        return {
            "format": 1,
            "letters": self.letters,
            "vertices": names,
            "identity_vertex": None if self.identity_vertex is None else names[self.identity_vertex],
            "seeds": [names[s] for s in self.seeds],
            "edges": [{"from": names[v], "letter": self.letters[a], "to": names[w]}
                      for v, row in enumerate(self.edges) for a, w in enumerate(row)],
        }

    def to_dot(self, name: str = "orbital") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        seeds = set(self.seeds)
        for v, w in enumerate(self.vertices):
            attrs = [f'label="{w}"']
            if v == self.identity_vertex:
                attrs.append("shape=doublecircle")
            if v in seeds:
                attrs.append('style=filled fillcolor="lightgray"')
            lines.append(f"  v{v} [{' '.join(attrs)}];")
        for v, row in enumerate(self.edges):
            grouped: dict[int, list[str]] = {}
            for a, w in enumerate(row):
                grouped.setdefault(w, []).append(self.letters[a])
            for w, labels in grouped.items():
                lines.append(f'  v{v} -> v{w} [label="{",".join(labels)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_orbital(m: Machine, W: Sequence[Word], budget: int = DEFAULT_ORBIT_BUDGET,
                  closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> OrbitalGraph:
    """Close ``W`` under sections, merging words that define the same element."""
    m.require_invertible()
    if not W:
        raise ValueError("need at least one seed word")
    t = enriched_dual(m)
    oracle = _Oracle(t, closure_budget)
    reps: list[tuple[int, ...]] = []
    buckets: dict = {}
    lookup: dict[tuple[int, ...], int] = {}
    identity = None

    def classify(w: tuple[int, ...]) -> tuple[int, bool]:
        nonlocal identity
        if w in lookup:
            return lookup[w], False
        if oracle.trivial(w):
            if identity is None:
                identity = len(reps)
                reps.append(())
                lookup[()] = identity
                lookup[w] = identity
                return identity, True
            lookup[w] = identity
            return identity, False
        fp = oracle.fingerprint(w)
        for v in buckets.get(fp, []):
            if oracle.equal(reps[v], w):
                lookup[w] = v
                return v, False
        v = len(reps)
        if v >= budget:
            raise BudgetExceeded(f"orbital graph exceeded {budget} vertices")
        reps.append(w)
        buckets.setdefault(fp, []).append(v)
        lookup[w] = v
        return v, True

    seeds = []
    queue: deque[int] = deque()
    for w in W:
        if w.alphabet != m.states:
            raise ValueError("seed words must be over the machine states")
        v, new = classify(w.letters)
        seeds.append(v)
        if new:
            queue.append(v)
    edges: dict[int, list[int]] = {}
    while queue:
        v = queue.popleft()
        row = []
        for a in range(len(m.letters)):
            section = t.walk(a, reps[v])[1]
            u, new = classify(section)
            row.append(u)
            if new:
                queue.append(u)
        edges[v] = row
    vertices = [Word(m.states, w) for w in reps]
    return OrbitalGraph(list(m.letters), vertices, [edges[v] for v in range(len(reps))], identity, seeds)


def first_level_orbits(m: Machine, W: Sequence[Word] | None = None) -> list[list[int]]:
    """Orbits of the letters under the states, or under the words ``W``."""
    t = enriched_dual(m)
    if W is None:
        return components(t)
    from .machine import restrict

    return components(restrict(t, list(W)))


def _reaches(g: OrbitalGraph, target: int, letters: Sequence[int]) -> set[int]:
    preds: list[list[int]] = [[] for _ in range(len(g))]
    for v, row in enumerate(g.edges):
        for a in letters:
            preds[row[a]].append(v)
    seen = {target}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def sink_coaccessible(g: OrbitalGraph, letters: Sequence[int] | None = None) -> bool:
    """Every vertex can walk to the identity, optionally using only ``letters``."""
    if g.identity_vertex is None:
        return False
    if letters is None:
        letters = range(len(g.letters))
    return len(_reaches(g, g.identity_vertex, list(letters))) == len(g)


def sink_coaccessible_per_orbit(g: OrbitalGraph, orbits: Sequence[Sequence[int]]) -> list[bool]:
    return [sink_coaccessible(g, orbit) for orbit in orbits]


@dataclass
class ChiReport:
    m_values: list[int]
    T_counts: list[int]
    E_counts: list[int]
    chi: list[Fraction]
    chi_limit: Fraction | None = None
    per_component: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        def frac(x):
            return None if x is None else f"{x.numerator}/{x.denominator}"

        return {
            "format": 1,
            "m": self.m_values,
            "T": self.T_counts,
            "E": self.E_counts,
            "chi": [frac(c) for c in self.chi],
            "chi_limit": frac(self.chi_limit),
            "per_component": [
                {"letters": c["letters"], "T": c["T"], "E": c["E"],
                 "chi": [frac(x) for x in c["chi"]], "chi_limit": frac(c["chi_limit"])}
                for c in self.per_component
            ],
        }


def _walk_counts(g: OrbitalGraph, letters: Sequence[int], m_max: int) -> list[int]:
    counts = [0] * len(g)
    for s in g.seeds:
        counts[s] += 1
    out = []
    for _ in range(m_max):
        nxt = [0] * len(g)
        for v, c in enumerate(counts):
            if c:
                row = g.edges[v]
                for a in letters:
                    nxt[row[a]] += c
        counts = nxt
        out.append(counts[g.identity_vertex] if g.identity_vertex is not None else 0)
    return out


def _limit(g: OrbitalGraph, letters: Sequence[int]) -> Fraction:
    if g.identity_vertex is None:
        return Fraction(0)
    h = absorption_probability(g, letters)
    return sum((h[s] for s in g.seeds), Fraction(0)) / len(g.seeds)


def chi_exact(g: OrbitalGraph, m_max: int, orbits: Sequence[Sequence[int]] | None = None) -> ChiReport:
    """T(m), E(m) and chi(m) = T(m) / (|W| |A|^m) for m = 1..m_max, exactly."""
    if not g.seeds:
        raise ValueError("no seeds")
    nw, na = len(g.seeds), len(g.letters)
    T = _walk_counts(g, range(na), m_max)
    ms = list(range(1, m_max + 1))
    E = [nw * na**m - T[m - 1] for m in ms]
    chi = [Fraction(T[m - 1], nw * na**m) for m in ms]
    report = ChiReport(ms, T, E, chi, _limit(g, range(na)))
    for orbit in orbits or []:
        Ti = _walk_counts(g, orbit, m_max)
        k = len(orbit)
        report.per_component.append({
            "letters": [g.letters[a] for a in orbit],
            "T": Ti,
            "E": [nw * k**m - Ti[m - 1] for m in ms],
            "chi": [Fraction(Ti[m - 1], nw * k**m) for m in ms],
            "chi_limit": _limit(g, orbit),
        })
    return report


def absorption_probability(g: OrbitalGraph, letters: Sequence[int] | None = None) -> list[Fraction]:
    """Probability that a uniform random walk from each vertex hits the identity."""
    if g.identity_vertex is None:
        raise ValueError("orbital graph has no identity vertex")
    if letters is None:
        letters = list(range(len(g.letters)))
    letters = list(letters)
    sink = g.identity_vertex
    live = sorted(_reaches(g, sink, letters) - {sink})
    col = {v: i for i, v in enumerate(live)}
    n = len(live)
    p = Fraction(1, len(letters))
    # rows: h(v) - p * sum h(next) = p * #(letters leading to the sink)
    rows = []
    for v in live:
        row = [Fraction(0)] * (n + 1)
        row[col[v]] += 1
        for a in letters:
            w = g.edges[v][a]
            if w == sink:
                row[n] += p
            elif w in col:
                row[col[w]] -= p
        rows.append(row)
    for i in range(n):
        pivot = next(r for r in range(i, n) if rows[r][i] != 0)
        rows[i], rows[pivot] = rows[pivot], rows[i]
        inv = 1 / rows[i][i]
        rows[i] = [x * inv for x in rows[i]]
        for r in range(n):
            if r != i and rows[r][i] != 0:
                f = rows[r][i]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[i])]
    h = [Fraction(0)] * len(g)
    h[sink] = Fraction(1)
    for v in live:
        h[v] = rows[col[v]][n]
    return h


def is_self_similar(m: Machine, W: Sequence[Word], depth: int = 3,
                    closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> bool:
    """Every first-level section of every word in ``W`` equals a word of length <= depth over ``W``."""
    t = enriched_dual(m)
    oracle = _Oracle(t, closure_budget)
    gens = [w.letters for w in W] + [invert_letters(w.letters) for w in W]
    pool = {(): ()}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for g in gens:
                w = reduce_letters(u + g)
                if w not in pool:
                    pool[w] = w
                    nxt.append(w)
        frontier = nxt
    by_fp: dict = {}
    for w in pool:
        by_fp.setdefault(oracle.fingerprint(w), []).append(w)
    for w in W:
        for a in range(len(m.letters)):
            s = t.walk(a, w.letters)[1]
            if not any(oracle.equal(s, c) for c in by_fp.get(oracle.fingerprint(s), [])):
                return False
    return True


def level_transitive_up_to(m: Machine, W: Sequence[Word], level: int) -> int:
    """Largest k <= level such that ``<W>`` is transitive on every level up to k."""
    t = enriched_dual(m)
    n = len(m.letters)
    for k in range(1, level + 1):
        start = (0,) * k
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in W:
                for letters in (w.letters, invert_letters(w.letters)):
                    v = t.thread(u, letters)[0]
                    if v not in seen:
                        seen.add(v)
                        queue.append(v)
        if len(seen) != n**k:
            return k - 1
    return level


def verdict(m: Machine, subgroup_words: Sequence[Word] | None = None,
            max_level: int = DEFAULT_TRANSITIVITY_LEVEL, self_similar_depth: int = 3,
            budget: int = DEFAULT_ORBIT_BUDGET) -> dict:
    """Check mechanically whether the sink theorems apply to ``<subgroup_words>``.

    Satisfied hypotheses only give "cyclic or not free"; nothing stronger.
    """
    m.require_invertible()
    states = m.states.generators()
    W = list(subgroup_words) if subgroup_words else states
    g = build_orbital(m, states, budget)
    orbits = first_level_orbits(m)
    names = list(m.letters)
    report: dict = {
        "format": 1,
        "subgroup": [str(w) for w in W],
        "orbital_vertices": len(g),
        "sink_present": g.identity_vertex is not None,
        "sink_coaccessible": sink_coaccessible(g),
        "first_level_orbits": [[names[a] for a in o] for o in first_level_orbits(m, W)],
        "conclusion": None,
        "theorem": None,
        "failing_hypothesis": None,
    }

    def violated(reason):
        report["verdict"] = HYPOTHESES_VIOLATED
        report["failing_hypothesis"] = reason
        return report

    def satisfied(theorem, via):
        report["verdict"] = HYPOTHESES_SATISFIED
        report["conclusion"] = "cyclic or not free"
        report["theorem"] = theorem
        report["via"] = via
        return report

    if g.identity_vertex is None:
        return violated("no sink: no state word acts trivially")
    if not report["sink_coaccessible"]:
        return violated("sink not co-accessible")
    sub_orbits = first_level_orbits(m, W)
    self_similar = subgroup_words is None or is_self_similar(m, W, self_similar_depth)
    report["self_similar"] = self_similar
    if len(sub_orbits) == 1 and self_similar:
        return satisfied(MAIN_SINK, "self-similar and transitive on the first level")
    accessible = sink_coaccessible_per_orbit(g, orbits)
    report["orbit_accessible"] = accessible
    if self_similar and all(accessible) and all(
            any(set(o) == set(p) for p in orbits) for o in sub_orbits):
        return satisfied(MAIN_SINK + " (orbit-wise accessibility)",
                         "sink accessible within every first-level orbit")
    depth = level_transitive_up_to(m, W, max_level)
    report["level_transitive_up_to"] = depth
    if depth == max_level:
        return satisfied(MAIN_SINK + " / " + SPHERICAL,
                         f"level-transitive, verified up to level {max_level}")
    return violated("first level not transitive, orbits " + " and ".join(
        "{" + ",".join(names[a] for a in o) + "}" for o in sub_orbits)
        if len(sub_orbits) > 1 else "not level-transitive beyond level " + str(depth))
