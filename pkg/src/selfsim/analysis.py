"""Connecting homomorphisms, the rank certificate for non-free presentations,
and the construction of explicit defining relations.

A component of a transducer is an orbit of vertices; the words reading a
closed walk at a vertex ``a`` form its stabilizer, a finite-index subgroup
of the free group on the generators.  Reading a stabilizing word from ``a``
yields an output word, and this assignment is a homomorphism.  If it drops
rank, some nontrivial stabilizing word has trivial output, and such words
can be combined into a relation of the group.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .freegroup import Word, commutator, invert_letters, reduce_letters
from .machine import (DEFAULT_CLOSURE_BUDGET, DEFAULT_POWER_BUDGET, Machine, Transducer,
                      components, enriched_dual, is_trivial, perm_order, power)
from .stallings import (LabeledGraph, Subgroup, commutation_breaker, hom_kernel_element,
                        intersect, loop_basis)

CERTIFIED_NOT_FREE = "CERTIFIED_NOT_FREE"
INCONCLUSIVE = "INCONCLUSIVE"


class RelationError(RuntimeError):
    """A constructed relation failed verification; this is a bug, not bad input."""


@dataclass(frozen=True)
class ConnectingHom:
    at: int
    domain_basis: tuple[Word, ...]
    images: tuple[Word, ...]

    def __post_init__(self):
        if len(self.domain_basis) != len(self.images):
            raise ValueError("basis and images differ in length")


@dataclass
class ComponentResult:
    component: list[int]
    witness_vertex: int
    stab_rank: int
    image_rank: int
    kernel_word: Word | None = None


@dataclass
class FreenessReport:
    per_component: list[ComponentResult]
    verdict: str
    relation: Word | None = None
    level: int = 1
    source: str = "rank"
    names: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "format": 1,
            "verdict": self.verdict,
            "level": self.level,
            "source": self.source,
            "relation": self.relation.tokens() if self.relation is not None else None,
            "components": [
                {
                    "vertices": [self.names[v] if self.names else v for v in c.component],
                    "witness_vertex": self.names[c.witness_vertex] if self.names else c.witness_vertex,
                    "stab_rank": c.stab_rank,
                    "image_rank": c.image_rank,
                    "kernel_word": c.kernel_word.tokens() if c.kernel_word is not None else None,
                }
                for c in self.per_component
            ],
        }


def _check_component(t: Transducer, component: Sequence[int], a: int):
    if a not in component:
        raise ValueError(f"vertex {a} is not in the component")
    members = set(component)
    for v in component:
        for x in range(len(t.gens)):
            if t.edges[v][x][0] not in members:
                raise ValueError("vertex set is not closed under the action")


def component_stabilizer(t: Transducer, component: Sequence[int], a: int) -> Subgroup:
    """St(a): the Schreier graph of the component, based at ``a``."""
    _check_component(t, component, a)
    local = {v: i for i, v in enumerate(component)}
    edges = tuple((local[v], x, local[t.edges[v][x][0]])
                  for v in component for x in range(len(t.gens)))
    return Subgroup.from_graph(LabeledGraph(t.gens, len(component), edges, local[a]))


def global_stabilizer(t: Transducer) -> Subgroup:
    """Words fixing every vertex, from the diagonal action on the full vertex tuple."""
    n = len(t.vertices)
    start = tuple(range(n))
    index = {start: 0}
    queue = deque([start])
    edges = []
    while queue:
        u = queue.popleft()
        for x in range(len(t.gens)):
            w = tuple(t.edges[v][x][0] for v in u)
            if w not in index:
                index[w] = len(index)
                queue.append(w)
            edges.append((index[u], x, index[w]))
    return Subgroup.from_graph(LabeledGraph(t.gens, len(index), tuple(edges), 0))


def intersect_all(subgroups: Sequence[Subgroup]) -> Subgroup:
    s = subgroups[0]
    for other in subgroups[1:]:
        s = intersect(s, other)
    return s


def connecting_hom(t: Transducer, s: Subgroup, a: int) -> ConnectingHom:
    basis = loop_basis(s)
    images = []
    for w in basis:
        end, out = t.walk(a, w.letters)
        if end != a:
            raise ValueError(f"basis word {w} does not stabilize vertex {a}")
        images.append(Word(t.out_gens, out))
    return ConnectingHom(a, tuple(basis), tuple(images))


def _rank_at(t: Transducer, component: Sequence[int], a: int) -> tuple[int, int, ConnectingHom]:
    st = component_stabilizer(t, component, a)
    phi = connecting_hom(t, st, a)
    image = Subgroup.generated_by(list(phi.images), t.out_gens)
    return st.rank, image.rank, phi


def scan_component(t: Transducer, component: Sequence[int]) -> ComponentResult:
    """First vertex of the component whose connecting hom drops rank."""
    first = None
    for a in component:
        r_st, r_im, phi = _rank_at(t, component, a)
        if r_im < r_st:
            kernel = hom_kernel_element(phi.domain_basis, phi.images, t.out_gens)
            return ComponentResult(list(component), a, r_st, r_im, kernel)
        if first is None:
            first = ComponentResult(list(component), a, r_st, r_im)
    return first


def rank_test(m: Machine, max_level: int = 3, power_budget: int = DEFAULT_POWER_BUDGET,
              closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> FreenessReport:
    """Certify that the states do not freely generate the group, if the ranks allow it.

    Level 1 is the enriched dual; when some component has no rank-dropping
    vertex the test moves to the next sequential power, up to ``max_level``.
    """
    m.require_invertible()
    base = enriched_dual(m)
    report = None
    for level in range(1, max_level + 1):
        t = power(base, level, power_budget)
        results = [scan_component(t, c) for c in components(t)]
        report = FreenessReport(results, INCONCLUSIVE, level=level, names=list(t.vertices))
        if all(r.kernel_word is not None for r in results):
            kernels = {i: (r.witness_vertex, r.kernel_word) for i, r in enumerate(results)}
            report.relation = extract_relation(t, kernels, closure_budget=closure_budget)
            report.verdict = CERTIFIED_NOT_FREE
            return report
    return report


def shortest_walks(t: Transducer, a: int) -> dict[int, tuple[int, ...]]:
    """BFS-shortest input words from ``a`` to every vertex of its component."""
    paths = {a: ()}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        for x in range(len(t.gens)):
            for letter in (x + 1, -(x + 1)):
                w = t.step(v, letter)[0]
                if w not in paths:
                    paths[w] = paths[v] + (letter,)
                    queue.append(w)
    return paths


def _trivial_output(t: Transducer, v: int, letters: Sequence[int], budget: int) -> bool:
    out = t.walk(v, letters)[1]
    if not out:
        return True
    return t.self_composable and is_trivial(t, out, budget)


def extract_relation(t: Transducer, kernel_words: dict, closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> Word:
    """Combine per-component kernel words into a word acting trivially everywhere.

    ``kernel_words`` maps a component key to ``(vertex, word)``; the word must
    stabilize the vertex with output trivial in the group.  Each is conjugated
    to every vertex of its component, raised to its permutation order so that
    it fixes all vertices, and the results are merged by nested commutators
    ``[v^k z v^-k, w]`` that cannot collapse in the free group.
    """
    candidates: list[tuple[int, tuple[int, ...]]] = []
    for a, w in kernel_words.values():
        if not w.letters:
            raise ValueError("kernel words must be nontrivial")
        end, _ = t.walk(a, w.letters)
        if end != a or not _trivial_output(t, a, w.letters, closure_budget):
            raise ValueError(f"{w} is not a kernel word at vertex {a}")
        for b, h in sorted(shortest_walks(t, a).items()):
            z = reduce_letters(invert_letters(h) + w.letters + h)
            k = perm_order(t, Word(t.gens, z))
            candidates.append((b, reduce_letters(z * k)))

    def covered(letters):
        return {v for v in range(len(t.vertices)) if _trivial_output(t, v, letters, closure_budget)}

    relation: tuple[int, ...] | None = None
    done: set[int] = set()
    for b, z in candidates:
        if b in done:
            continue
        if relation is None:
            relation = z
        else:
            zw, rw = Word(t.gens, z), Word(t.gens, relation)
            v = commutation_breaker(zw, rw)
            if v.letters:
                v = v ** perm_order(t, v)
            relation = commutator(v * zw * ~v, rw).letters
        done = covered(relation)
    result = Word(t.gens, relation)
    if not result.letters:
        raise RelationError("combined relation collapsed to the empty word")
    if len(done) != len(t.vertices) or not is_trivial(t, result.letters, closure_budget):
        raise RelationError(f"relation {result} does not act trivially")
    return result


def output_trivial_circuit(t: Transducer, m: int, oracle: Callable[[tuple[int, ...]], bool],
                           within: Sequence[int] | None = None,
                           power_budget: int = DEFAULT_POWER_BUDGET) -> tuple[int, Word] | None:
    """A closed walk at level ``m`` whose every edge has output trivial under ``oracle``.

    Returns ``(vertex index in power(t, m), input word)`` for the first cycle
    in the graph of output-trivial edges, or ``None`` if that graph is a forest.
    ``within`` restricts to a set of level-``m`` vertex indices.
    """
    tm = power(t, m, power_budget)
    allowed = set(range(len(tm.vertices))) if within is None else set(within)
    parent = {v: v for v in allowed}
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in allowed}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for v in sorted(allowed):
        for x in range(len(tm.gens)):
            w, out = tm.edges[v][x]
            if w not in allowed or not oracle(out):
                continue
            if find(v) == find(w):
                # v -x-> w closes a cycle: walk back from w to v in the forest
                path = _forest_path(adj, w, v)
                return v, Word(t.gens, reduce_letters((x + 1,) + path))
            parent[find(v)] = find(w)
            adj[v].append((w, x + 1))
            adj[w].append((v, -(x + 1)))
    return None


def _forest_path(adj, src: int, dst: int) -> tuple[int, ...]:
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for w, letter in adj[u]:
            if w not in prev:
                prev[w] = (u, letter)
                queue.append(w)
    letters = []
    u = dst
    while prev[u] is not None:
        u, letter = prev[u]
        letters.append(letter)
    return tuple(reversed(letters))


def circuit_test(m: Machine, max_level: int = 3, power_budget: int = DEFAULT_POWER_BUDGET,
                 closure_budget: int = DEFAULT_CLOSURE_BUDGET) -> FreenessReport:
    """Relation from output-trivial circuits, one per component of some level."""
    m.require_invertible()
    base = enriched_dual(m)
    cache: dict[tuple[int, ...], bool] = {}

    def oracle(letters):
        if letters not in cache:
            cache[letters] = is_trivial(base, letters, closure_budget)
        return cache[letters]

    report = None
    for level in range(1, max_level + 1):
        t = power(base, level, power_budget)
        results, kernels = [], {}
        for i, comp in enumerate(components(t)):
            found = output_trivial_circuit(base, level, oracle, within=comp, power_budget=power_budget)
            r_st = component_stabilizer(t, comp, comp[0]).rank
            if found is None:
                results.append(ComponentResult(comp, comp[0], r_st, r_st))
            else:
                results.append(ComponentResult(comp, found[0], r_st, r_st, found[1]))
                kernels[i] = found
        report = FreenessReport(results, INCONCLUSIVE, level=level, source="circuit",
                                names=list(t.vertices))
        if len(kernels) == len(results):
            report.relation = extract_relation(t, kernels, closure_budget=closure_budget)
            report.verdict = CERTIFIED_NOT_FREE
            return report
    return report
