"""Exact arithmetic in finitely generated free groups.

Letters are stored as nonzero signed integers: generator ``i`` is ``i + 1``
and its formal inverse is ``-(i + 1)``.  Every :class:`Word` is kept freely
reduced, so equality of group elements is equality of letter tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence


class Alphabet:
    """An ordered, immutable list of distinct generator names."""

    __slots__ = ("symbols", "_index")

    def __init__(self, symbols: Iterable[str]):
        symbols = tuple(str(s) for s in symbols)
        for s in symbols:
            if not s or any(c.isspace() for c in s):
                raise ValueError(f"invalid generator name {s!r}")
        index = {s: i for i, s in enumerate(symbols)}
        if len(index) != len(symbols):
            raise ValueError(f"duplicate generator names in {symbols}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", index)

    def __setattr__(self, name, value):
        raise AttributeError("Alphabet is immutable")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, name):
        return name in self._index

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __repr__(self):
        return f"Alphabet({list(self.symbols)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown generator {name!r}; alphabet is {list(self.symbols)}") from None

    def letter(self, name: str, sign: int = 1) -> int:
        return sign * (self.index(name) + 1)

    def name(self, letter: int) -> str:
        """Text token for a signed letter, e.g. ``a`` or ``a^-1``."""
        s = self.symbols[abs(letter) - 1]
        return s if letter > 0 else s + "^-1"

    def generators(self) -> list[Word]:
        return [Word(self, (i + 1,)) for i in range(len(self))]


class SignedGen(NamedTuple):
    index: int
    sign: int

    def to_letter(self) -> int:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        return self.sign * (self.index + 1)


def reduce_letters(letters: Iterable[int]) -> tuple[int, ...]:
    """Free reduction in one left-to-right pass using a stack."""
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def invert_letters(letters: Sequence[int]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(letters))


@dataclass(frozen=True)
class Word:
    """A freely reduced word over an :class:`Alphabet`."""

    alphabet: Alphabet
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        n = len(self.alphabet)
        letters = tuple(self.letters)
        for x in letters:
            if not isinstance(x, int) or x == 0 or abs(x) > n:
                raise ValueError(f"letter {x!r} out of range for alphabet of size {n}")
        object.__setattr__(self, "letters", reduce_letters(letters))

    @classmethod
    def from_signed(cls, alphabet: Alphabet, raw: Iterable[SignedGen | tuple[int, int]]) -> Word:
        return cls(alphabet, tuple(SignedGen(*g).to_letter() for g in raw))

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str | Sequence[str]) -> Word:
        """Parse whitespace separated tokens ``name``, ``name^-1`` or ``name^k``."""
        tokens = text.split() if isinstance(text, str) else list(text)
        letters: list[int] = []
        if tokens == ["1"] and "1" not in alphabet:
            tokens = []
        for tok in tokens:
            if tok in alphabet:
                name, k = tok, 1
            else:
                name, _, exp = tok.rpartition("^")
                if not name:
                    name, k = exp, 1
                else:
                    try:
                        k = int(exp)
                    except ValueError:
                        raise ValueError(f"bad token {tok!r}") from None
            if name not in alphabet:
                raise ValueError(f"unknown generator {name!r} in token {tok!r}")
            x = alphabet.letter(name)
            letters.extend([x if k > 0 else -x] * abs(k))
        return cls(alphabet, tuple(letters))

    def signed(self) -> list[SignedGen]:
        return [SignedGen(abs(x) - 1, 1 if x > 0 else -1) for x in self.letters]

    def tokens(self) -> list[str]:
        return [self.alphabet.name(x) for x in self.letters]

    def __str__(self):
        return " ".join(self.tokens()) if self.letters else "1"

    def __repr__(self):
        return f"Word({str(self)!r})"

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __mul__(self, other: Word) -> Word:
        return concat(self, other)

    def __invert__(self) -> Word:
        return invert(self)

    def __pow__(self, k: int) -> Word:
        return power(self, k)

    @property
    def is_identity(self) -> bool:
        return not self.letters


def reduce(alphabet: Alphabet, raw: Iterable[SignedGen | tuple[int, int]]) -> Word:
    return Word.from_signed(alphabet, raw)


def invert(w: Word) -> Word:
    return Word(w.alphabet, invert_letters(w.letters))


def _check_same(u: Word, v: Word):
    if u.alphabet != v.alphabet:
        raise ValueError(f"alphabet mismatch: {u.alphabet} vs {v.alphabet}")


def concat(u: Word, v: Word) -> Word:
    _check_same(u, v)
    return Word(u.alphabet, u.letters + v.letters)


def power(w: Word, k: int) -> Word:
    base = w.letters if k >= 0 else invert_letters(w.letters)
    return Word(w.alphabet, base * abs(k))


def commutator(u: Word, v: Word) -> Word:
    """``u v u^-1 v^-1``."""
    _check_same(u, v)
    return Word(u.alphabet, u.letters + v.letters + invert_letters(u.letters) + invert_letters(v.letters))


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return ``(core, conjugator)`` with ``w = conjugator core conjugator^-1``."""
    x = w.letters
    i, j = 0, len(x)
    while j - i >= 2 and x[i] == -x[j - 1]:
        i += 1
        j -= 1
    return Word(w.alphabet, x[i:j]), Word(w.alphabet, x[:i])


def _smallest_period(seq: Sequence[int]) -> int:
    n = len(seq)
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and seq[i] != seq[k]:
            k = fail[k - 1]
        if seq[i] == seq[k]:
            k += 1
        fail[i] = k
    p = n - fail[-1]
    return p if n % p == 0 else n


def primitive_root(w: Word) -> tuple[Word, int]:
    """Return ``(root, e)`` with ``w = root^e`` and ``e`` maximal."""
    if not w.letters:
        raise ValueError("the empty word has no primitive root")
    core, conj = cyclic_reduce(w)
    p = _smallest_period(core.letters)
    root = Word(w.alphabet, conj.letters + core.letters[:p] + invert_letters(conj.letters))
    return root, len(core) // p


def substitute(w: Word, images: Sequence[Word], target: Alphabet | None = None) -> Word:
    """Apply the homomorphism sending generator ``i`` of ``w`` to ``images[i]``."""
    if len(images) != len(w.alphabet):
        raise ValueError("need one image per generator")
    if target is None:
        if not images:
            raise ValueError("target alphabet required for an empty substitution")
        target = images[0].alphabet
    out: list[int] = []
    for x in w.letters:
        img = images[abs(x) - 1].letters
        out.extend(img if x > 0 else invert_letters(img))
    return Word(target, tuple(out))
