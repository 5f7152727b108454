"""Finitely generated subgroups of free groups as folded Stallings core graphs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .freegroup import Alphabet, Word, invert_letters, reduce_letters


@dataclass(frozen=True)
class LabeledGraph:
    """A graph with positive edge labels ``(source, generator index, target)``.

    Inverse edges are implicit: an edge ``s -x-> t`` is read backwards as
    ``t -x^-1-> s``.
    """

    alphabet: Alphabet
    n_vertices: int
    edges: tuple[tuple[int, int, int], ...]
    base: int | None = 0

    @cached_property
    def out_map(self) -> list[dict[int, int]]:
        out: list[dict[int, int]] = [{} for _ in range(self.n_vertices)]
        for s, x, t in self.edges:
            out[s].setdefault(x, t)
        return out

    @cached_property
    def in_map(self) -> list[dict[int, int]]:
        inn: list[dict[int, int]] = [{} for _ in range(self.n_vertices)]
        for s, x, t in self.edges:
            inn[t].setdefault(x, s)
        return inn

    def is_folded(self) -> bool:
        seen_out, seen_in = set(), set()
        for s, x, t in self.edges:
            if (s, x) in seen_out or (t, x) in seen_in:
                return False
            seen_out.add((s, x))
            seen_in.add((t, x))
        return True

    def step(self, v: int, letter: int) -> int | None:
        """Follow the signed letter from ``v`` in a folded graph."""
        if letter > 0:
            return self.out_map[v].get(letter - 1)
        return self.in_map[v].get(-letter - 1)

    def read(self, letters: Iterable[int], start: int | None = None) -> int | None:
        v = self.base if start is None else start
        for x in letters:
            v = self.step(v, x)
            if v is None:
                return None
        return v

    def degree(self, v: int) -> int:
        return sum((s == v) + (t == v) for s, _, t in self.edges)

    def to_dot(self, name: str = "core") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for v in range(self.n_vertices):
            shape = "doublecircle" if v == self.base else "circle"
            lines.append(f'  {v} [shape={shape}];')
        for s, x, t in self.edges:
            lines.append(f'  {s} -> {t} [label="{self.alphabet.symbols[x]}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def flower(words: Sequence[Word], alphabet: Alphabet | None = None) -> LabeledGraph:
    """Bouquet of petals at vertex 0, one closed path per word."""
    if alphabet is None:
        if not words:
            raise ValueError("alphabet required for an empty flower")
        alphabet = words[0].alphabet
    n = 1
    edges: list[tuple[int, int, int]] = []
    for w in words:
        if w.alphabet != alphabet:
            raise ValueError("all petals must share one alphabet")
        x = w.letters
        if not x:
            continue
        prev = 0
        for i, letter in enumerate(x):
            if i == len(x) - 1:
                nxt = 0
            else:
                nxt = n
                n += 1
            if letter > 0:
                edges.append((prev, letter - 1, nxt))
            else:
                edges.append((nxt, -letter - 1, prev))
            prev = nxt
    return LabeledGraph(alphabet, n, tuple(edges), 0)


def fold(g: LabeledGraph, order: Sequence[int] | None = None) -> LabeledGraph:
    """Stallings folding by union-find with a worklist of label conflicts.

    ``order`` optionally permutes the initial edge worklist; the result is
    independent of it up to based isomorphism.  Vertices are renumbered
    canonically (breadth-first from the base) but not pruned.
    """
    n = g.n_vertices
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    base = g.base
    out: list[dict | None] = [{} for _ in range(n)]
    inn: list[dict | None] = [{} for _ in range(n)]
    edges = list(g.edges) if order is None else [g.edges[i] for i in order]
    pending = deque(edges)
    merges: list[tuple[int, int]] = []

    while pending or merges:
        if merges:
            u, v = merges.pop()
            u, v = find(u), find(v)
            if u == v:
                continue
            if base is not None and v == find(base):
                u, v = v, u
            elif len(out[u]) + len(inn[u]) < len(out[v]) + len(inn[v]) and (base is None or u != find(base)):
                u, v = v, u
            parent[v] = u
            for x, w in list(out[v].items()):
                if inn[w].get(x) == v:
                    del inn[w][x]
                pending.append((u, x, w))
            for x, w in list(inn[v].items()):
                if out[w] is not None and out[w].get(x) == v:
                    del out[w][x]
                pending.append((w, x, u))
            out[v] = inn[v] = None
            continue
        s, x, t = pending.popleft()
        s, t = find(s), find(t)
        a = out[s].get(x)
        b = inn[t].get(x)
        if a is not None:
            if a != t:
                merges.append((a, t))
        elif b is not None:
            if b != s:
                merges.append((b, s))
        else:
            out[s][x] = t
            inn[t][x] = s

    roots = [v for v in range(n) if parent[v] == v]
    edge_list = [(s, x, t) for s in roots for x, t in out[s].items()]
    start = find(base) if base is not None else (roots[0] if roots else None)
    return _canonical(g.alphabet, roots, edge_list, start)


def _canonical(alphabet, vertices, edges, base) -> LabeledGraph:
    """Renumber vertices breadth-first from the base; unreachable vertices follow."""
    out: dict[int, dict[int, int]] = {v: {} for v in vertices}
    inn: dict[int, dict[int, int]] = {v: {} for v in vertices}
    for s, x, t in edges:
        out[s][x] = t
        inn[t][x] = s
    order: dict[int, int] = {}
    starts = ([base] if base is not None else []) + sorted(vertices)
    for st in starts:
        if st in order:
            continue
        order[st] = len(order)
        queue = deque([st])
        while queue:
            v = queue.popleft()
            for x in range(len(alphabet)):
                for w in (out[v].get(x), inn[v].get(x)):
                    if w is not None and w not in order:
                        order[w] = len(order)
                        queue.append(w)
    new_edges = tuple(sorted((order[s], x, order[t]) for s, x, t in edges))
    return LabeledGraph(alphabet, len(order), new_edges, 0 if base is not None else None)


def prune(g: LabeledGraph) -> LabeledGraph:
    """Keep the base component and strip hanging trees off it."""
    if g.base is None:
        raise ValueError("pruning needs a base vertex")
    adj: dict[int, set[int]] = {}
    for s, _, t in g.edges:
        adj.setdefault(s, set()).add(t)
        adj.setdefault(t, set()).add(s)
    comp = {g.base}
    queue = deque([g.base])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w not in comp:
                comp.add(w)
                queue.append(w)
    edges = [e for e in g.edges if e[0] in comp]
    alive = set(comp)
    while True:
        deg = {v: 0 for v in alive}
        for s, _, t in edges:
            deg[s] += 1
            deg[t] += 1
        dead = {v for v, d in deg.items() if d <= 1 and v != g.base}
        if not dead:
            break
        alive -= dead
        edges = [e for e in edges if e[0] in alive and e[2] in alive]
    return _canonical(g.alphabet, sorted(alive), edges, g.base)


@dataclass(frozen=True)
class Subgroup:
    """A subgroup given by its pruned, folded, canonically numbered core graph."""

    core: LabeledGraph

    @property
    def ambient(self) -> Alphabet:
        return self.core.alphabet

    @classmethod
    def from_graph(cls, g: LabeledGraph) -> Subgroup:
        return cls(prune(fold(g)))

    @classmethod
    def generated_by(cls, words: Sequence[Word], alphabet: Alphabet | None = None) -> Subgroup:
        return cls.from_graph(flower(words, alphabet))

    @classmethod
    def whole(cls, alphabet: Alphabet) -> Subgroup:
        return cls.generated_by(alphabet.generators(), alphabet)

    def __contains__(self, w: Word) -> bool:
        return contains(self, w)

    @property
    def rank(self) -> int:
        return rank(self)

    def is_complete(self) -> bool:
        k = len(self.ambient)
        return all(len(self.core.out_map[v]) == k and len(self.core.in_map[v]) == k
                   for v in range(self.core.n_vertices))

    def index(self) -> int | None:
        """Index in the ambient free group, or ``None`` when infinite."""
        return self.core.n_vertices if self.is_complete() else None


def rank(s: Subgroup) -> int:
    return len(s.core.edges) - s.core.n_vertices + 1


def contains(s: Subgroup, w: Word) -> bool:
    if w.alphabet != s.ambient:
        raise ValueError("word is not over the ambient alphabet")
    return s.core.read(w.letters) == s.core.base


def intersect(s1: Subgroup, s2: Subgroup) -> Subgroup:
    """Core of the fiber product of two cores, based at the pair of bases."""
    if s1.ambient != s2.ambient:
        raise ValueError("subgroups live in different free groups")
    g1, g2 = s1.core, s2.core
    start = (g1.base, g2.base)
    index = {start: 0}
    queue = deque([start])
    edges = []
    while queue:
        p = queue.popleft()
        v1, v2 = p
        for x in range(len(s1.ambient)):
            for forward in (True, False):
                if forward:
                    w1, w2 = g1.out_map[v1].get(x), g2.out_map[v2].get(x)
                else:
                    w1, w2 = g1.in_map[v1].get(x), g2.in_map[v2].get(x)
                if w1 is None or w2 is None:
                    continue
                q = (w1, w2)
                if q not in index:
                    index[q] = len(index)
                    queue.append(q)
                if forward:
                    edges.append((index[p], x, index[q]))
    g = LabeledGraph(s1.ambient, len(index), tuple(sorted(set(edges))), 0)
    return Subgroup(prune(g))


def _bfs_tree(g: LabeledGraph):
    """Spanning tree paths from the base and the set of tree edges."""
    paths: dict[int, tuple[int, ...]] = {g.base: ()}
    tree: set[tuple[int, int, int]] = set()
    queue = deque([g.base])
    while queue:
        v = queue.popleft()
        for x in range(len(g.alphabet)):
            for sign in (1, -1):
                w = g.step(v, sign * (x + 1))
                if w is None or w in paths:
                    continue
                paths[w] = paths[v] + (sign * (x + 1),)
                tree.add((v, x, w) if sign > 0 else (w, x, v))
                queue.append(w)
    return paths, tree


def loop_basis(s: Subgroup) -> list[Word]:
    """Free basis of ``s`` read off the non-tree edges of a BFS spanning tree."""
    g = s.core
    paths, tree = _bfs_tree(g)
    basis = []
    for e in sorted(g.edges):
        if e in tree:
            continue
        src, x, tgt = e
        letters = paths[src] + (x + 1,) + invert_letters(paths[tgt])
        basis.append(Word(g.alphabet, letters))
    return basis


def letter_order(alphabet: Alphabet) -> list[int]:
    """Positive generators in index order, then their inverses."""
    k = len(alphabet)
    return [i + 1 for i in range(k)] + [-(i + 1) for i in range(k)]


def find_escaping_word(s: Subgroup) -> Word:
    """Shortest reduced word that cannot be read from the base of the core."""
    g = s.core
    order = letter_order(g.alphabet)
    level = [((), g.base)]
    seen_depth = 0
    while level:
        nxt = []
        for word, v in level:
            for y in order:
                if word and word[-1] == -y:
                    continue
                w = g.step(v, y)
                if w is None:
                    return Word(g.alphabet, word + (y,))
                nxt.append((word + (y,), w))
        level = nxt
        seen_depth += 1
        if seen_depth > 4 * g.n_vertices + 4:
            break
    raise ValueError("no escaping word: the core is complete (finite index subgroup)")


def commutation_breaker(y1: Word, y2: Word) -> Word:
    """A word ``v`` with ``[v^m y1 v^-m, y2] != 1`` for every ``m != 0``."""
    from .freegroup import commutator, primitive_root

    if not y1.letters or not y2.letters:
        raise ValueError("both elements must be nontrivial")
    if len(y1.alphabet) < 2:
        raise ValueError("ambient free group must have rank > 1")
    if commutator(y1, y2).letters:
        return Word(y1.alphabet)
    root, _ = primitive_root(y1)
    return find_escaping_word(Subgroup.generated_by([root]))


def petal_alphabet(n: int) -> Alphabet:
    return Alphabet([f"p{i}" for i in range(n)])


def kernel_petal_word(images: Sequence[Word], target: Alphabet | None = None) -> Word | None:
    """Nontrivial word over petal generators ``p0..p(n-1)`` mapping to 1, if any.

    Folds the flower of ``images`` while every edge carries a petal-group
    label; the first time two parallel edges with different labels are
    identified their label quotient is a kernel element.
    """
    n = len(images)
    petals = petal_alphabet(n)
    if target is None:
        if not images:
            return None
        target = images[0].alphabet
    for i, w in enumerate(images):
        if not w.letters:
            return Word(petals, (i + 1,))

    # edges: id -> [src, gen, tgt, label(letters over petals)]
    edges: dict[int, list] = {}
    nv = 1
    for i, w in enumerate(images):
        prev = 0
        for j, letter in enumerate(w.letters):
            nxt = 0 if j == len(w) - 1 else nv
            if nxt:
                nv += 1
            label = (i + 1,) if j == 0 else ()
            if letter > 0:
                edges[len(edges)] = [prev, letter - 1, nxt, label]
            else:
                edges[len(edges)] = [nxt, -letter - 1, prev, invert_letters(label)]
            prev = nxt

    def path_label(v: int) -> tuple[int, ...]:
        # BFS over current edges from the base
        seen = {0: ()}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            if u == v:
                break
            for s, _, t, lab in edges.values():
                if s == u and t not in seen:
                    seen[t] = reduce_letters(seen[u] + lab)
                    queue.append(t)
                elif t == u and s not in seen:
                    seen[s] = reduce_letters(seen[u] + invert_letters(lab))
                    queue.append(s)
        return seen[v]

    while True:
        conflict = None
        buckets: dict[tuple, int] = {}
        for eid in sorted(edges):
            s, x, t, _ = edges[eid]
            for key in (("o", s, x), ("i", t, x)):
                if key in buckets:
                    conflict = (key, buckets[key], eid)
                    break
                buckets[key] = eid
            if conflict:
                break
        if conflict is None:
            return None
        key, e1, e2 = conflict
        s1, x, t1, g1 = edges[e1]
        s2, _, t2, g2 = edges[e2]
        if s1 == s2 and t1 == t2:
            loop = reduce_letters(g1 + invert_letters(g2))
            if loop:
                p = path_label(s1)
                return Word(petals, p + loop + invert_letters(p))
            del edges[e2]
            continue
        # identify the two far endpoints, moving the non-base one
        # shift the label potential at `gone` by h so that e2 carries g1
        if key[0] == "o":
            keep, gone = t1, t2
            h = reduce_letters(invert_letters(g1) + g2)
        else:
            keep, gone = s1, s2
            h = reduce_letters(g1 + invert_letters(g2))
        if gone == 0:
            keep, gone = gone, keep
            h = invert_letters(h)
        for eid, (s, xx, t, lab) in list(edges.items()):
            if s == gone:
                lab = reduce_letters(h + lab)
                s = keep
            if t == gone:
                lab = reduce_letters(lab + invert_letters(h))
                t = keep
            edges[eid] = [s, xx, t, lab]


def hom_kernel_element(basis: Sequence[Word], images: Sequence[Word],
                       target: Alphabet | None = None) -> Word | None:
    """A nontrivial element of ``<basis>`` sent to 1 by ``basis[i] -> images[i]``.

    Returns ``None`` when the images freely generate a subgroup of rank
    ``len(basis)``, i.e. the map is injective.
    """
    if len(basis) != len(images):
        raise ValueError(f"{len(basis)} basis words but {len(images)} images")
    if not basis:
        return None
    petal = kernel_petal_word(images, target)
    if petal is None:
        return None
    from .freegroup import substitute

    return substitute(petal, list(basis), basis[0].alphabet)
