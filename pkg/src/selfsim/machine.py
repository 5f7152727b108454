"""Mealy machines, groupal transducers and the section-closure word problem.

Conventions.  A machine state ``x`` reading letter ``a`` writes
``out(x, a)`` and moves to ``next(x, a)``; a word ``x1 x2 ...`` of states
acts on the tree first by ``x1`` then by ``x2`` (a right action).  The
enriched dual turns this into a :class:`Transducer` whose vertices are the
letters and whose generators are the states: ``a --x | next(x, a)--> out(x, a)``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .freegroup import Alphabet, Word, invert_letters, reduce_letters

DEFAULT_POWER_BUDGET = 10**6
DEFAULT_CLOSURE_BUDGET = 2 * 10**6

FORMAT_VERSION = 1


class BudgetExceeded(RuntimeError):
    """A configurable size limit was hit."""


class NotInvertible(ValueError):
    pass


@dataclass(frozen=True)
class Machine:
    """A complete deterministic letter-to-letter transducer."""

    states: Alphabet
    letters: Alphabet
    next: tuple[tuple[int, ...], ...]
    out: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        ns, nl = len(self.states), len(self.letters)
        if len(self.next) != ns or len(self.out) != ns:
            raise ValueError("transition tables must have one row per state")
        for x in range(ns):
            if len(self.next[x]) != nl or len(self.out[x]) != nl:
                raise ValueError(f"state {self.states.symbols[x]!r} has an incomplete row")
            for a in range(nl):
                if not 0 <= self.next[x][a] < ns or not 0 <= self.out[x][a] < nl:
                    raise ValueError(f"transition ({self.states.symbols[x]}, {self.letters.symbols[a]}) out of range")

    @classmethod
    def from_table(cls, states: Sequence[str], letters: Sequence[str],
                   table: dict[str, dict[str, tuple[str, str]]]) -> Machine:
        """Build from ``table[state][letter] = (next_state, out_letter)``."""
        S, L = Alphabet(states), Alphabet(letters)
        nxt, out = [], []
        for x in S:
            row = table[x]
            nxt.append(tuple(S.index(row[a][0]) for a in L))
            out.append(tuple(L.index(row[a][1]) for a in L))
        return cls(S, L, tuple(nxt), tuple(out))

    @classmethod
    def from_wreath(cls, letters: Sequence[str], recursion: dict[str, tuple[Sequence[str], Sequence[str]]]) -> Machine:
        """Build from ``state -> (sections by letter, images by letter)``."""
        states = list(recursion)
        table = {x: {a: (secs[i], imgs[i]) for i, a in enumerate(letters)}
                 for x, (secs, imgs) in recursion.items()}
        return cls.from_table(states, letters, table)

    def is_invertible(self) -> bool:
        n = len(self.letters)
        return all(len(set(row)) == n for row in self.out)

    def require_invertible(self):
        if not self.is_invertible():
            bad = [self.states.symbols[x] for x, row in enumerate(self.out) if len(set(row)) != len(row)]
            raise NotInvertible(f"machine is not invertible: states {bad} do not permute the letters")

    def permutation(self, x: int) -> tuple[int, ...]:
        return self.out[x]

    def word(self, text: str | Sequence[str]) -> Word:
        return Word.parse(self.states, text)

    def act(self, w: Word, u: Sequence[int]) -> tuple[int, ...]:
        """Image of the letter sequence ``u`` under the state word ``w``."""
        result = list(u)
        for x in w.letters:
            result = self._act_letter(x, result)
        return tuple(result)

    def _act_letter(self, x: int, u: list[int]) -> list[int]:
        s = abs(x) - 1
        res = []
        if x > 0:
            for a in u:
                res.append(self.out[s][a])
                s = self.next[s][a]
        else:
            for b in u:
                a = self._inv_out[s][b]
                res.append(a)
                s = self.next[s][a]
        return res

    @cached_property
    def _inv_out(self):
        inv = []
        for row in self.out:
            r = [0] * len(row)
            for a, b in enumerate(row):
                r[b] = a
            inv.append(tuple(r))
        return tuple(inv)

    @cached_property
    def dual_transducer(self) -> Transducer:
        return enriched_dual(self)

    def to_json(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "states": list(self.states),
            "letters": list(self.letters),
            "transitions": [
                {"state": self.states.symbols[x], "letter": self.letters.symbols[a],
                 "next": self.states.symbols[self.next[x][a]], "out": self.letters.symbols[self.out[x][a]]}
                for x in range(len(self.states)) for a in range(len(self.letters))
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> Machine:
        for key in ("states", "letters", "transitions"):
            if key not in data:
                raise ValueError(f"machine file is missing the {key!r} field")
        S, L = Alphabet(data["states"]), Alphabet(data["letters"])
        table: dict[tuple[int, int], tuple[int, int]] = {}
        for i, tr in enumerate(data["transitions"]):
            for key in ("state", "letter", "next", "out"):
                if key not in tr:
                    raise ValueError(f"transition #{i} is missing the {key!r} field")
            try:
                k = (S.index(tr["state"]), L.index(tr["letter"]))
                v = (S.index(tr["next"]), L.index(tr["out"]))
            except KeyError as e:
                raise ValueError(f"transition #{i}: {e.args[0]}") from None
            if k in table and table[k] != v:
                raise ValueError(f"transition #{i}: ({tr['state']}, {tr['letter']}) is nondeterministic")
            table[k] = v
        for x in range(len(S)):
            for a in range(len(L)):
                if (x, a) not in table:
                    raise ValueError(f"missing transition for state {S.symbols[x]!r} on letter {L.symbols[a]!r}")
        nxt = tuple(tuple(table[x, a][0] for a in range(len(L))) for x in range(len(S)))
        out = tuple(tuple(table[x, a][1] for a in range(len(L))) for x in range(len(S)))
        return cls(S, L, nxt, out)


def load_machine(path: str | Path) -> Machine:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: line {e.lineno}: {e.msg}") from None
    return Machine.from_json(data)


FIXTURES = ("identity", "adding", "grigorchuk", "aleshin", "aleshin_sink",
            "aleshin_sink_nontransitive", "fig1")


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("selfsim") / "fixtures" / f"{name}.json"))


def load_fixture(name: str) -> Machine:
    return load_machine(fixture_path(name))


@dataclass(frozen=True)
class Transducer:
    """A finite inverse transducer over a free basis.

    ``edges[v][x] = (target, output letters)`` for each vertex ``v`` and
    positive generator ``x``; edges for ``x^-1`` are derived.
    """

    vertices: Alphabet
    gens: Alphabet
    out_gens: Alphabet
    edges: tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]

    def __post_init__(self):
        nv, ng = len(self.vertices), len(self.gens)
        if len(self.edges) != nv:
            raise ValueError("need one edge row per vertex")
        for v, row in enumerate(self.edges):
            if len(row) != ng:
                raise ValueError(f"vertex {self.vertices.symbols[v]!r} is missing generators")
        for x in range(ng):
            targets = {self.edges[v][x][0] for v in range(nv)}
            if len(targets) != nv:
                raise ValueError(f"generator {self.gens.symbols[x]!r} does not permute the vertices")

    @cached_property
    def _tables(self):
        nv, ng = len(self.vertices), len(self.gens)
        fwd = [[None] * (ng + 1) for _ in range(nv)]
        bwd = [[None] * (ng + 1) for _ in range(nv)]
        for v in range(nv):
            for x in range(ng):
                t, y = self.edges[v][x]
                fwd[v][x + 1] = (t, tuple(y))
                bwd[t][x + 1] = (v, invert_letters(y))
        return fwd, bwd

    def step(self, v: int, letter: int) -> tuple[int, tuple[int, ...]]:
        fwd, bwd = self._tables
        return fwd[v][letter] if letter > 0 else bwd[v][-letter]

    def walk(self, v: int, letters: Iterable[int]) -> tuple[int, tuple[int, ...]]:
        """End vertex and reduced output of the walk reading ``letters`` from ``v``."""
        fwd, bwd = self._tables
        stack: list[int] = []
        for x in letters:
            v, y = fwd[v][x] if x > 0 else bwd[v][-x]
            for c in y:
                if stack and stack[-1] == -c:
                    stack.pop()
                else:
                    stack.append(c)
        return v, tuple(stack)

    def action(self, v: int, letters: Iterable[int]) -> int:
        fwd, bwd = self._tables
        for x in letters:
            v = (fwd[v][x] if x > 0 else bwd[v][-x])[0]
        return v

    def thread(self, u: Sequence[int], letters: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Walk on the power transducer: feed the output of each coordinate to the next."""
        if not self.self_composable:
            raise ValueError("outputs are not over the input generators")
        ends = []
        word = tuple(letters)
        for a in u:
            b, word = self.walk(a, word)
            ends.append(b)
        return tuple(ends), word

    @property
    def self_composable(self) -> bool:
        return self.out_gens == self.gens

    def output_word(self, letters: Sequence[int]) -> Word:
        return Word(self.out_gens, tuple(letters))

    def to_json(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "vertices": list(self.vertices),
            "gens": list(self.gens),
            "output_gens": list(self.out_gens),
            "transitions": [
                {"vertex": self.vertices.symbols[v], "gen": self.gens.symbols[x],
                 "next": self.vertices.symbols[self.edges[v][x][0]],
                 "output": Word(self.out_gens, self.edges[v][x][1]).tokens()}
                for v in range(len(self.vertices)) for x in range(len(self.gens))
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> Transducer:
        V, G = Alphabet(data["vertices"]), Alphabet(data["gens"])
        O = Alphabet(data.get("output_gens", data["gens"]))
        table = {}
        for tr in data["transitions"]:
            table[V.index(tr["vertex"]), G.index(tr["gen"])] = (
                V.index(tr["next"]), Word.parse(O, tr["output"]).letters)
        edges = []
        for v in range(len(V)):
            row = []
            for x in range(len(G)):
                if (v, x) not in table:
                    raise ValueError(f"missing edge for vertex {V.symbols[v]!r} and generator {G.symbols[x]!r}")
                row.append(table[v, x])
            edges.append(tuple(row))
        return cls(V, G, O, tuple(edges))


def validate(m: Machine) -> dict:
    """Structural report; sink fields describe states acting trivially."""
    ns, nl = len(m.states), len(m.letters)
    reversible = all(len({m.next[x][a] for x in range(ns)}) == ns for a in range(nl))
    bireversible = reversible and all(
        len({m.next[x][m._inv_out[x][b]] for x in range(ns)}) == ns for b in range(nl)
    ) if m.is_invertible() else False
    report = {
        "deterministic": True,
        "complete": True,
        "invertible": m.is_invertible(),
        "reversible": reversible,
        "bireversible": bireversible,
        "reduced": None,
        "sink_states": [],
        "sink_coaccessible": False,
    }
    if report["invertible"]:
        reduced, classes = reduce_machine(m)
        report["reduced"] = len(reduced.states) == ns
        sinks = [x for x in range(ns) if is_identity(m, Word(m.states, (x + 1,)))]
        report["sink_states"] = [m.states.symbols[x] for x in sinks]
        report["sink_coaccessible"] = bool(sinks) and _all_reach(m, set(sinks))
    return report


def _all_reach(m: Machine, targets: set[int]) -> bool:
    rev: dict[int, set[int]] = {}
    for x in range(len(m.states)):
        for y in m.next[x]:
            rev.setdefault(y, set()).add(x)
    seen = set(targets)
    stack = list(targets)
    while stack:
        y = stack.pop()
        for x in rev.get(y, ()):
            if x not in seen:
                seen.add(x)
                stack.append(x)
    return len(seen) == len(m.states)


def dual(m: Machine) -> Machine:
    """Swap states and letters: ``s --a|b--> t`` iff ``a --s|t--> b``."""
    nxt = tuple(tuple(m.out[a][s] for a in range(len(m.states))) for s in range(len(m.letters)))
    out = tuple(tuple(m.next[a][s] for a in range(len(m.states))) for s in range(len(m.letters)))
    return Machine(m.letters, m.states, nxt, out)


def inverse_machine(m: Machine) -> Machine:
    m.require_invertible()
    states = Alphabet([inverse_name(x) for x in m.states])
    nxt, out = [], []
    for x in range(len(m.states)):
        inv = m._inv_out[x]
        nxt.append(tuple(m.next[x][inv[s]] for s in range(len(m.letters))))
        out.append(inv)
    return Machine(states, m.letters, tuple(nxt), tuple(out))


def inverse_name(name: str) -> str:
    return name[:-3] if name.endswith("^-1") else name + "^-1"


def enriched_dual(m: Machine) -> Transducer:
    """The dual with derived inverse edges, acting on letters by state words."""
    m.require_invertible()
    edges = tuple(
        tuple((m.out[x][a], (m.next[x][a] + 1,)) for x in range(len(m.states)))
        for a in range(len(m.letters))
    )
    return Transducer(m.letters, m.states, m.states, edges)


def _tuple_name(vertices: Alphabet, u: Sequence[int]) -> str:
    names = [vertices.symbols[a] for a in u]
    sep = "" if all(len(n) == 1 for n in vertices.symbols) else "."
    return sep.join(names)


def level_tuples(n: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(n), repeat=k))


def power(t: Transducer, k: int, budget: int = DEFAULT_POWER_BUDGET) -> Transducer:
    """Sequential ``k``-th power; vertices are ordered tuples in row-major order."""
    if k < 1:
        raise ValueError("power exponent must be positive")
    if not t.self_composable:
        raise ValueError("cannot take powers: outputs are not over the input generators")
    n = len(t.vertices)
    if n**k > budget:
        raise BudgetExceeded(f"power would have {n}^{k} vertices (budget {budget})")
    if k == 1:
        return t
    tuples = level_tuples(n, k)
    index = {u: i for i, u in enumerate(tuples)}
    edges = []
    for u in tuples:
        row = []
        for x in range(len(t.gens)):
            ends, y = t.thread(u, (x + 1,))
            row.append((index[ends], y))
        edges.append(tuple(row))
    vertices = Alphabet([_tuple_name(t.vertices, u) for u in tuples])
    return Transducer(vertices, t.gens, t.out_gens, tuple(edges))


def restrict(t: Transducer, ws: Sequence[Word], names: Sequence[str] | None = None) -> Transducer:
    """Transducer whose generators read the words ``ws`` as single edges."""
    for w in ws:
        if w.alphabet != t.gens:
            raise ValueError("restriction words must be over the transducer generators")
    if names is None:
        names = [f"y{i}" for i in range(len(ws))]
    edges = tuple(tuple(t.walk(v, w.letters) for w in ws) for v in range(len(t.vertices)))
    return Transducer(t.vertices, Alphabet(names), t.out_gens, edges)


def components(t: Transducer) -> list[list[int]]:
    """Orbits of the vertices under the generator action, ordered by least member."""
    n = len(t.vertices)
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for v in range(n):
        for x in range(len(t.gens)):
            a, b = find(v), find(t.edges[v][x][0])
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def reduce_machine(m: Machine) -> tuple[Machine, list[int]]:
    """Merge states defining the same tree automorphism (Moore refinement)."""
    m.require_invertible()
    ns, nl = len(m.states), len(m.letters)
    keys = [m.out[x] for x in range(ns)]
    classes = _number(keys)
    while True:
        keys = [(classes[x],) + tuple(classes[m.next[x][a]] for a in range(nl)) for x in range(ns)]
        refined = _number(keys)
        if len(set(refined)) == len(set(classes)):
            classes = refined
            break
        classes = refined
    k = len(set(classes))
    reps = [classes.index(c) for c in range(k)]
    states = Alphabet([m.states.symbols[r] for r in reps])
    nxt = tuple(tuple(classes[m.next[r][a]] for a in range(nl)) for r in reps)
    out = tuple(m.out[r] for r in reps)
    return Machine(states, m.letters, nxt, out), classes


def _number(keys: list) -> list[int]:
    ids: dict = {}
    return [ids.setdefault(key, len(ids)) for key in keys]


def is_trivial(t: Transducer, letters: Sequence[int], budget: int = DEFAULT_CLOSURE_BUDGET) -> bool:
    """Word problem for the group defined by a self-composable transducer.

    A word is trivial iff every section reachable from it fixes every
    vertex; the set of reduced sections is explored breadth-first.
    """
    start = reduce_letters(letters)
    if not start:
        return True
    fwd, bwd = t._tables
    nv = len(t.vertices)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for w in frontier:
            for v in range(nv):
                u = v
                stack: list[int] = []
                for x in w:
                    u, y = fwd[u][x] if x > 0 else bwd[u][-x]
                    for c in y:
                        if stack and stack[-1] == -c:
                            stack.pop()
                        else:
                            stack.append(c)
                if u != v:
                    return False
                if stack:
                    s = tuple(stack)
                    if s not in seen:
                        seen.add(s)
                        nxt.append(s)
        if len(seen) > budget:
            raise BudgetExceeded(f"section closure exceeded {budget} words")
        frontier = nxt
    return True


def is_identity(m: Machine, w: Word, budget: int = DEFAULT_CLOSURE_BUDGET) -> bool:
    """True iff the state word ``w`` acts trivially on every level of the tree."""
    if w.alphabet != m.states:
        raise ValueError("word must be over the machine states")
    return is_trivial(m.dual_transducer, w.letters, budget)


def level_permutation(t: Transducer, letters: Sequence[int], level: int,
                      budget: int = DEFAULT_POWER_BUDGET) -> list[int]:
    n = len(t.vertices)
    if n**level > budget:
        raise BudgetExceeded(f"level {level} has {n}^{level} vertices (budget {budget})")
    tuples = level_tuples(n, level)
    index = {u: i for i, u in enumerate(tuples)}
    return [index[t.thread(u, letters)[0]] for u in tuples]


def perm_order(t: Transducer, w: Word, level: int = 1) -> int:
    """Order of the permutation that ``w`` induces on the level-``level`` vertices."""
    if w.alphabet != t.gens:
        raise ValueError("word must be over the transducer generators")
    perm = level_permutation(t, w.letters, level) if level > 1 else [t.action(v, w.letters) for v in range(len(t.vertices))]
    seen = [False] * len(perm)
    order = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        order = math.lcm(order, length)
    return order
