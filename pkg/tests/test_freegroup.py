import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfsim.freegroup import (Alphabet, Word, commutator, concat, cyclic_reduce, invert, power,
                               primitive_root, reduce, reduce_letters, substitute)

from .conftest import AB, ABC, letters, random_letters, words


def scan_reduce(seq):
    # repeated-scan oracle: delete the first cancelling pair until none is left
    seq = list(seq)
    changed = True
    while changed:
        changed = False
        for i in range(len(seq) - 1):
            if seq[i] == -seq[i + 1]:
                del seq[i:i + 2]
                changed = True
                break
    return tuple(seq)


def test_reduce_matches_scan_oracle_on_1000_words():
    rng = random.Random(7)
    for _ in range(1000):
        raw = random_letters(rng, 3, rng.randint(0, 30))
        assert reduce_letters(raw) == scan_reduce(raw)


@given(letters(3, 40))
def test_reduce_idempotent(raw):
    r = reduce_letters(raw)
    assert reduce_letters(r) == r
    assert all(r[i] != -r[i + 1] for i in range(len(r) - 1))


def test_parse_and_print():
    w = Word.parse(AB, "a b^-1 a^3")
    assert w.letters == (1, -2, 1, 1, 1)
    assert str(w) == "a b^-1 a a a"
    assert str(Word(AB)) == "1"
    assert Word.parse(AB, "1").letters == ()
    assert Word.parse(AB, ["a", "a^-1"]).letters == ()


def test_parse_rejects_unknown_symbol():
    with pytest.raises(ValueError):
        Word.parse(AB, "a z")


def test_multichar_names():
    al = Alphabet(["x1", "x2"])
    assert Word.parse(al, "x1 x2^-1").tokens() == ["x1", "x2^-1"]


def test_alphabet_validation():
    with pytest.raises(ValueError):
        Alphabet(["a", "a"])
    with pytest.raises(ValueError):
        Alphabet(["a b"])


@given(words(ABC), words(ABC))
def test_group_laws(u, v):
    assert (u * ~u).is_identity
    assert ~(u * v) == ~v * ~u
    assert concat(u, v) == u * v
    assert invert(invert(u)) == u


def test_power_and_commutator():
    a, b = AB.generators()
    assert power(a, 3) == Word.parse(AB, "a a a")
    assert power(a * b, -1) == ~b * ~a
    assert str(commutator(a, b)) == "a b a^-1 b^-1"
    assert commutator(a, a).is_identity


def test_cyclic_reduce():
    w = Word.parse(AB, "b a a b^-1")
    core, conj = cyclic_reduce(w)
    assert str(core) == "a a" and str(conj) == "b"
    assert conj * core * ~conj == w


@given(words(AB, 8), st.integers(1, 4))
def test_primitive_root(w, k):
    if not w.letters:
        return
    root, e = primitive_root(w ** k)
    assert root ** e == w ** k
    # the root of w divides into w as well
    r2, e2 = primitive_root(w)
    assert r2 == root and e == e2 * k


def test_primitive_root_examples():
    assert primitive_root(Word.parse(AB, "a b a b a b")) == (Word.parse(AB, "a b"), 3)
    with pytest.raises(ValueError):
        primitive_root(Word(AB))


def test_substitute():
    P = Alphabet(["p", "q"])
    w = Word.parse(P, "p q p^-1")
    out = substitute(w, [Word.parse(AB, "a b"), Word.parse(AB, "b")], AB)
    assert str(out) == "a b a^-1"


def test_reduce_signed():
    assert reduce(AB, [(0, 1), (1, 1), (1, -1)]).letters == (1,)
