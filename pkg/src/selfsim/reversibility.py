"""Reversible automata that are not bireversible.

If a reduced reversible machine has no bireversible dual component, two
distinct inputs at some vertex produce the same output.  Extending both
walks by edges whose outputs are powers of a fixed generator ``s`` gives two
rho-shaped walks, and the words ``g_n`` built from them have trivial output.
These are turned into relations with the machinery of :mod:`analysis`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .analysis import extract_relation
from .freegroup import Word, invert_letters, reduce_letters
from .machine import (DEFAULT_CLOSURE_BUDGET, Machine, Transducer, components, enriched_dual,
                      is_trivial, level_tuples, power, reduce_machine, validate)
from .stallings import letter_order

CYCLIC_OR_NOT_FREE = "CYCLIC_OR_NOT_FREE"
NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class Witness:
    """Two distinct inputs at ``vertex`` (a level-``level`` tuple) with equal outputs."""

    level: int
    vertex: tuple[int, ...]
    x1: tuple[int, ...]
    z1: tuple[int, ...]
    output: tuple[int, ...]
    flagged: bool = False


@dataclass(frozen=True)
class RhoWitness:
    witness: Witness
    s: int
    x2: tuple[int, ...]
    x3: tuple[int, ...]
    z2: tuple[int, ...]
    z3: tuple[int, ...]
    k: int
    p: int

    def transcript(self, t: Transducer) -> dict:
        def w(letters):
            return Word(t.gens, letters).tokens()

        return {"level": self.witness.level, "vertex": list(self.witness.vertex),
                "x1": w(self.witness.x1), "z1": w(self.witness.z1),
                "r": w(self.witness.output), "s": t.gens.name(self.s),
                "x2": w(self.x2), "x3": w(self.x3), "z2": w(self.z2), "z3": w(self.z3),
                "k": self.k, "p": self.p}


@dataclass
class GnResult:
    n: int | None
    circuit: Word | None
    relation: Word | None = None
    torsion: str | None = None
    note: str | None = None


@dataclass
class ComponentReport:
    vertices: list[int]
    bireversible: bool
    witness: tuple | None = None


@dataclass
class ReversibilityReport:
    reversible: bool
    reduced: bool
    dual_components: list[ComponentReport]
    verdict: str
    failing_hypothesis: str | None = None
    relation: Word | None = None
    transcripts: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json(self, m: Machine) -> dict:
        letters = list(m.letters)
        return {
            "format": 1,
            "reversible": self.reversible,
            "reduced": self.reduced,
            "verdict": self.verdict,
            "failing_hypothesis": self.failing_hypothesis,
            "dual_components": [
                {"vertices": [letters[a] for a in c.vertices], "bireversible": c.bireversible,
                 "witness": None if c.witness is None else
                 [{"from": letters[s], "state": m.states.symbols[x], "output": m.states.symbols[y],
                   "to": letters[b]} for s, x, y, b in c.witness]}
                for c in self.dual_components
            ],
            "relation": None if self.relation is None else self.relation.tokens(),
            "walks": self.transcripts,
            "notes": self.notes,
        }


def dual_component_witness(m: Machine, component: Sequence[int]) -> tuple | None:
    """Two dual edges ``a --x|y--> b`` sharing target and output, if any."""
    seen: dict[tuple[int, int], tuple[int, int, int, int]] = {}
    for a in sorted(component):
        for x in range(len(m.states)):
            b, y = m.out[x][a], m.next[x][a]
            edge = (a, x, y, b)
            if (b, y) in seen:
                return seen[b, y], edge
            seen[b, y] = edge
    return None


def _single_letters(t: Transducer) -> list[int]:
    return letter_order(t.gens)


def find_nonbireversibility_witness(t: Transducer, component: Sequence[int], max_level: int = 3,
                                   closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> Witness | None:
    """Level-major, then lexicographic, search for two inputs with equal output.

    Pairs whose inputs are themselves equal in the group (a repeated or
    trivial state, or an involution read both ways) are only returned,
    flagged, when no genuine pair exists up to ``max_level``.
    """
    letters = _single_letters(t)
    members = sorted(component)
    fallback = None
    for level in range(1, max_level + 1):
        for u in (tuple(c) for c in level_tuples(len(members), level)):
            u = tuple(members[i] for i in u)
            outs = [(x, t.thread(u, (x,))[1]) for x in letters]
            for i in range(len(outs)):
                for j in range(i + 1, len(outs)):
                    (x, ox), (z, oz) = outs[i], outs[j]
                    if ox == oz or is_trivial(t, reduce_letters(ox + invert_letters(oz)), closure_budget):
                        x1, z1 = _strip_prefix((x,), (z,))
                        if not is_trivial(t, reduce_letters(invert_letters(x1) + z1), closure_budget):
                            return Witness(level, u, x1, z1, ox)
                        if fallback is None:
                            fallback = Witness(level, u, x1, z1, ox, flagged=True)
    return fallback


def _strip_prefix(x: tuple[int, ...], z: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    i = 0
    while i < min(len(x), len(z)) and x[i] == z[i]:
        i += 1
    return x[i:], z[i:]


def choose_s(t: Transducer, r: Sequence[int]) -> int:
    """A positive generator other than the last letter of ``r`` (up to inversion)."""
    last = abs(r[-1]) if r else 0
    for x in range(1, len(t.gens) + 1):
        if x != last:
            return x
    return 1


def _rho(t: Transducer, start: tuple[int, ...], s: int, budget: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    path: list[int] = []
    visited = {start: 0}
    u = start
    for _ in range(budget):
        step = None
        for x in range(1, len(t.gens) + 1):
            v, out = t.thread(u, (x,))
            if out == (s,):
                step = (x, v)
                break
        if step is None:
            raise ValueError(f"no edge with output {t.gens.name(s)} at {u}: machine is not reversible")
        path.append(step[0])
        u = step[1]
        if u in visited:
            i = visited[u]
            return tuple(path[:i]), tuple(path[i:])
        visited[u] = len(path)
    raise ValueError("rho search exceeded its edge budget")


def harmonize(k1: int, k2: int, p1: int, p2: int) -> tuple[int, int]:
    return max(k1, k2), math.lcm(p1, p2)


def _stretch(tail: tuple[int, ...], cycle: tuple[int, ...], k: int, p: int):
    extra = k - len(tail)
    cyc = cycle * (extra // len(cycle) + 1)
    tail = tail + cyc[:extra]
    rot = extra % len(cycle)
    cycle = cycle[rot:] + cycle[:rot]
    return tail, cycle * (p // len(cycle))


def rho_extend(t: Transducer, witness: Witness, s: int | None = None) -> RhoWitness:
    """Follow ``s``-output edges from both witness endpoints until they cycle."""
    if s is None:
        s = choose_s(t, witness.output)
    budget = len(t.vertices) ** witness.level * len(t.gens) + 1
    u = witness.vertex
    v1 = t.thread(u, witness.x1)[0]
    v2 = t.thread(u, witness.z1)[0]
    x2, x3 = _rho(t, v1, s, budget)
    z2, z3 = _rho(t, v2, s, budget)
    k, p = harmonize(len(x2), len(z2), len(x3), len(z3))
    x2, x3 = _stretch(x2, x3, k, p)
    z2, z3 = _stretch(z2, z3, k, p)
    return RhoWitness(witness, s, x2, x3, z2, z3, k, p)


def g_n(rho: RhoWitness, n: int) -> tuple[int, ...]:
    x1, z1 = rho.witness.x1, rho.witness.z1
    left = x1 + rho.x2 + rho.x3 * n
    right = z1 + rho.z2 + invert_letters(rho.z3) * n
    return reduce_letters(left + invert_letters(x1 + rho.x2) + right + invert_letters(z1 + rho.z2))


def g_n_relation(t: Transducer, rho: RhoWitness, n_max: int | None = None,
                 closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> GnResult:
    """First ``g_n`` that is a nontrivial output-trivial circuit at the witness vertex.

    When ``t`` is connected at the witness level the circuit is promoted to a
    relation; otherwise only the circuit is returned.
    """
    if not reduce_letters(rho.x3):
        return GnResult(None, None, torsion=f"{t.gens.name(rho.s)}^{rho.p} = 1")
    level = rho.witness.level
    if n_max is None:
        n_max = 2 * len(t.vertices) ** level
    tl = power(t, level)
    index = {u: i for i, u in enumerate(level_tuples(len(t.vertices), level))}
    u = rho.witness.vertex
    for n in range(1, n_max + 1):
        w = g_n(rho, n)
        if not w:
            continue
        end, out = t.thread(u, w)
        if end != u:
            raise RuntimeError("g_n is not a circuit; the rho walks are inconsistent")
        if out and not is_trivial(t, out, closure_budget):
            continue
        result = GnResult(n, Word(t.gens, w))
        if len(components(tl)) == 1:
            result.relation = extract_relation(tl, {0: (index[u], result.circuit)}, closure_budget)
        return result
    return GnResult(None, None, note="every g_n reduces to the empty word (r^-1 = s^l h case)")


def reversibility_verdict(m: Machine, closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> ReversibilityReport:
    m.require_invertible()
    info = validate(m)
    reduced = len(reduce_machine(m)[0].states) == len(m.states)
    t = enriched_dual(m)
    comps = []
    for comp in components(t):
        w = dual_component_witness(m, comp)
        comps.append(ComponentReport(comp, w is None, w))
    report = ReversibilityReport(info["reversible"], reduced, comps, NOT_APPLICABLE)
    if not reduced:
        report.failing_hypothesis = "not reduced"
    elif not info["reversible"]:
        report.failing_hypothesis = "not reversible"
    elif any(c.bireversible for c in comps):
        report.failing_hypothesis = "dual component bireversible"
    if report.failing_hypothesis:
        return report
    report.verdict = CYCLIC_OR_NOT_FREE
    kernels = {}
    for i, c in enumerate(comps):
        wit = find_nonbireversibility_witness(t, c.vertices, 1, closure_budget)
        if wit is None:
            report.notes.append(f"component {i}: no level-1 witness")
            continue
        if wit.flagged:
            report.notes.append(f"component {i}: witness inputs are equal in the group")
        rho = rho_extend(t, wit)
        report.transcripts.append(rho.transcript(t))
        res = g_n_relation(t, rho, closure_budget=closure_budget)
        if res.torsion:
            report.notes.append(f"component {i}: torsion witness {res.torsion}")
        elif res.circuit is None:
            report.notes.append(f"component {i}: {res.note}")
        else:
            kernels[i] = (wit.vertex[0], res.circuit)
    if len(kernels) == len(comps):
        report.relation = extract_relation(t, kernels, closure_budget)
    return report
