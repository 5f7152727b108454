"""Automaton groups, groupal transducers and freeness certificates."""

from .freegroup import Alphabet, Word
from .machine import Machine, Transducer, load_fixture, load_machine

__version__ = "0.1.0"

__all__ = ["Alphabet", "Word", "Machine", "Transducer", "load_fixture", "load_machine"]
