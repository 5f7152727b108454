import random

import pytest
from hypothesis import strategies as st

from selfsim.freegroup import Alphabet, Word
from selfsim.machine import FIXTURES, load_fixture

AB = Alphabet("ab")
ABC = Alphabet("abc")


def letters(k: int, max_size: int = 12):
    gen = st.integers(1, k).flatmap(lambda x: st.sampled_from([x, -x]))
    return st.lists(gen, max_size=max_size)


def words(alphabet: Alphabet, max_size: int = 12):
    return letters(len(alphabet), max_size).map(lambda ls: Word(alphabet, tuple(ls)))


def random_letters(rng: random.Random, k: int, n: int) -> list[int]:
    return [rng.choice((1, -1)) * rng.randint(1, k) for _ in range(n)]


@pytest.fixture(params=FIXTURES)
def fixture_machine(request):
    return request.param, load_fixture(request.param)


@pytest.fixture
def grigorchuk():
    return load_fixture("grigorchuk")


@pytest.fixture
def aleshin():
    return load_fixture("aleshin")


@pytest.fixture
def fig1():
    return load_fixture("fig1")
