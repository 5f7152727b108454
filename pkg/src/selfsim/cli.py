"""Command line front end: ``selfsim <command> [flags] <file>``."""

from __future__ import annotations

import argparse
import itertools
import json
import os
import string
import sys
from dataclasses import dataclass
from typing import Iterator, Sequence

from .analysis import CERTIFIED_NOT_FREE, circuit_test, rank_test
from .freegroup import Alphabet, Word
from .machine import (DEFAULT_CLOSURE_BUDGET, DEFAULT_POWER_BUDGET, BudgetExceeded, Machine,
                      NotInvertible, Transducer, dual, enriched_dual, is_identity, load_machine,
                      power, reduce_machine, validate)
from .orbital import (DEFAULT_ORBIT_BUDGET, HYPOTHESES_SATISFIED, absorption_probability,
                      build_orbital, chi_exact, first_level_orbits, verdict)
from .reversibility import CYCLIC_OR_NOT_FREE, reversibility_verdict

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_INCONCLUSIVE = 10

COMMANDS = ("validate", "dual", "power", "reduce", "freeness", "orbital", "chi", "verdict",
            "reversibility", "enumerate", "export-dot")
FILTERS = ("any", "rank-drop", "reversible-not-bireversible", "sink-coaccessible")


@dataclass
class RunConfig:
    command: str
    path: str | None = None
    max_level: int = 3
    orbit_budget: int = DEFAULT_ORBIT_BUDGET
    power_budget: int = DEFAULT_POWER_BUDGET
    closure_budget: int = DEFAULT_CLOSURE_BUDGET
    output: str = "json"
    seeds: list[str] | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        for name in ("max_level", "orbit_budget", "power_budget", "closure_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


class InputError(Exception):
    pass


def _frac(x) -> str:
    return f"{x.numerator}/{x.denominator}"


def emit(obj) -> None:
    if isinstance(obj, str):
        sys.stdout.write(obj)
    else:
        sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def parse_seeds(m: Machine, seeds: Sequence[str] | None, drop_trivial: bool = True) -> list[Word]:
    """Seed words; by default the states that do not act trivially."""
    if seeds:
        return [Word.parse(m.states, s) for s in seeds]
    words = m.states.generators()
    if drop_trivial:
        kept = [w for w in words if not is_identity(m, w)]
        return kept or words
    return words


def machine_dot(m: Machine, name: str = "machine") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for x, s in enumerate(m.states):
        lines.append(f'  s{x} [label="{s}"];')
    for x in range(len(m.states)):
        grouped: dict[int, list[str]] = {}
        for a in range(len(m.letters)):
            grouped.setdefault(m.next[x][a], []).append(f"{m.letters.symbols[a]}|{m.letters.symbols[m.out[x][a]]}")
        for y, labels in grouped.items():
            lines.append(f'  s{x} -> s{y} [label="{", ".join(labels)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def transducer_dot(t: Transducer, name: str = "transducer") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for v, s in enumerate(t.vertices):
        lines.append(f'  v{v} [label="{s}"];')
    for v in range(len(t.vertices)):
        for x in range(len(t.gens)):
            w, y = t.edges[v][x]
            lines.append(f'  v{v} -> v{w} [label="{t.gens.symbols[x]}|{Word(t.out_gens, y)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- enumeration -------------------------------------------------------------

def state_names(n: int) -> list[str]:
    if n <= 26:
        return list(string.ascii_lowercase[:n])
    return [f"q{i}" for i in range(n)]


def enumerate_machines(n_states: int, n_letters: int, budget: int = DEFAULT_POWER_BUDGET) -> Iterator[Machine]:
    """All invertible machines, lexicographic in the table of (next, out) pairs.

    The table lists, for each state and then each letter, the pair
    ``(next state, output letter)``.
    """
    rows_per_state = [
        (nxt, out)
        for nxt in itertools.product(range(n_states), repeat=n_letters)
        for out in itertools.product(range(n_letters), repeat=n_letters)
        if len(set(out)) == n_letters
    ]
    # sort rows by their interleaved (next, out) pairs
    rows_per_state.sort(key=lambda r: tuple(itertools.chain.from_iterable(zip(r[0], r[1]))))
    total = len(rows_per_state) ** n_states
    if total > budget:
        raise BudgetExceeded(f"{total} candidate machines exceed the budget {budget}")
    states = Alphabet(state_names(n_states))
    letters = Alphabet([str(i) for i in range(n_letters)])
    for rows in itertools.product(rows_per_state, repeat=n_states):
        yield Machine(states, letters, tuple(r[0] for r in rows), tuple(r[1] for r in rows))


def table_key(m: Machine) -> tuple:
    return tuple((m.next[x][a], m.out[x][a]) for x in range(len(m.states)) for a in range(len(m.letters)))


def canonical_key(m: Machine) -> tuple:
    """Smallest table over all renamings of states and letters."""
    ns, nl = len(m.states), len(m.letters)
    best = None
    for sp in itertools.permutations(range(ns)):
        for lp in itertools.permutations(range(nl)):
            # sp, lp map old -> new
            sinv = [0] * ns
            linv = [0] * nl
            for i, j in enumerate(sp):
                sinv[j] = i
            for i, j in enumerate(lp):
                linv[j] = i
            key = tuple((sp[m.next[sinv[x]][linv[a]]], lp[m.out[sinv[x]][linv[a]]])
                        for x in range(ns) for a in range(nl))
            if best is None or key < best:
                best = key
    return best


def summarize(m: Machine, flt: str, cfg: RunConfig) -> dict | None:
    """One-line analysis, or None when the machine fails the filter."""
    item: dict = {"table": [[m.states.symbols[n], m.letters.symbols[o]] for n, o in
                            ((m.next[x][a], m.out[x][a]) for x in range(len(m.states))
                             for a in range(len(m.letters)))]}
    if flt == "rank-drop":
        rep = rank_test(m, max_level=1, power_budget=cfg.power_budget, closure_budget=cfg.closure_budget)
        if rep.verdict != CERTIFIED_NOT_FREE:
            return None
        item["ranks"] = [[c.stab_rank, c.image_rank] for c in rep.per_component]
        item["relation"] = rep.relation.tokens()
    elif flt == "reversible-not-bireversible":
        rep = reversibility_verdict(m, cfg.closure_budget)
        if rep.verdict != CYCLIC_OR_NOT_FREE:
            return None
        item["relation"] = rep.relation.tokens() if rep.relation is not None else None
    elif flt == "sink-coaccessible":
        info = validate(m)
        if not info["sink_coaccessible"]:
            return None
        item["sink_states"] = info["sink_states"]
    return item


# -- commands ----------------------------------------------------------------

def _load(cfg: RunConfig) -> Machine:
    if cfg.path is None:
        raise InputError("missing machine file")
    try:
        return load_machine(cfg.path)
    except FileNotFoundError:
        raise InputError(f"{cfg.path}: no such file")
    except json.JSONDecodeError as e:
        raise InputError(f"{cfg.path}: line {e.lineno}: {e.msg}")
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{cfg.path}: {e}")


def cmd_validate(cfg: RunConfig) -> int:
    m = _load(cfg)
    emit({"format": 1, **validate(m)})
    return EXIT_OK


def cmd_dual(cfg: RunConfig) -> int:
    d = dual(_load(cfg))
    emit(machine_dot(d, "dual") if cfg.output == "dot" else d.to_json())
    return EXIT_OK


def cmd_power(cfg: RunConfig, level: int) -> int:
    t = power(enriched_dual(_load(cfg)), level, cfg.power_budget)
    emit(transducer_dot(t, "power") if cfg.output == "dot" else t.to_json())
    return EXIT_OK


def cmd_reduce(cfg: RunConfig) -> int:
    m = _load(cfg)
    r, classes = reduce_machine(m)
    out = r.to_json()
    out["classes"] = {m.states.symbols[x]: r.states.symbols[c] for x, c in enumerate(classes)}
    emit(out)
    return EXIT_OK


def cmd_freeness(cfg: RunConfig) -> int:
    m = _load(cfg)
    rep = rank_test(m, cfg.max_level, cfg.power_budget, cfg.closure_budget)
    if rep.verdict != CERTIFIED_NOT_FREE:
        alt = circuit_test(m, cfg.max_level, cfg.power_budget, cfg.closure_budget)
        if alt.verdict == CERTIFIED_NOT_FREE:
            rep = alt
    if cfg.output == "text":
        lines = [f"verdict: {rep.verdict} (level {rep.level}, {rep.source})"]
        for c in rep.per_component:
            lines.append(f"  component {[rep.names[v] for v in c.component]}: "
                         f"rank {c.stab_rank} -> {c.image_rank} at {rep.names[c.witness_vertex]}")
        if rep.relation is not None:
            lines.append(f"relation: {rep.relation}")
        emit("\n".join(lines) + "\n")
    else:
        emit(rep.to_json())
    return EXIT_OK if rep.verdict == CERTIFIED_NOT_FREE else EXIT_INCONCLUSIVE


def cmd_orbital(cfg: RunConfig) -> int:
    m = _load(cfg)
    g = build_orbital(m, parse_seeds(m, cfg.seeds), cfg.orbit_budget, cfg.closure_budget)
    emit(g.to_dot() if cfg.output == "dot" else g.to_json())
    return EXIT_OK


def cmd_chi(cfg: RunConfig, m_max: int) -> int:
    m = _load(cfg)
    g = build_orbital(m, parse_seeds(m, cfg.seeds), cfg.orbit_budget, cfg.closure_budget)
    rep = chi_exact(g, m_max, first_level_orbits(m))
    if cfg.output == "text":
        lines = [f"{'m':>3} {'T(m)':>12} {'E(m)':>12}  chi(m)"]
        for i, mm in enumerate(rep.m_values):
            lines.append(f"{mm:>3} {rep.T_counts[i]:>12} {rep.E_counts[i]:>12}  {_frac(rep.chi[i])}")
        lines.append(f"limit: {_frac(rep.chi_limit)}")
        emit("\n".join(lines) + "\n")
    else:
        out = rep.to_json()
        out["seeds"] = [str(g.vertices[s]) for s in g.seeds]
        if g.identity_vertex is not None:
            h = absorption_probability(g)
            out["absorption"] = {str(g.vertices[s]): _frac(h[s]) for s in g.seeds}
        emit(out)
    return EXIT_OK


def cmd_verdict(cfg: RunConfig) -> int:
    m = _load(cfg)
    words = [Word.parse(m.states, s) for s in cfg.seeds] if cfg.seeds else None
    rep = verdict(m, words, budget=cfg.orbit_budget)
    emit(rep)
    return EXIT_OK if rep["verdict"] == HYPOTHESES_SATISFIED else EXIT_INCONCLUSIVE


def cmd_reversibility(cfg: RunConfig) -> int:
    m = _load(cfg)
    rep = reversibility_verdict(m, cfg.closure_budget)
    emit(rep.to_json(m))
    return EXIT_OK if rep.verdict == CYCLIC_OR_NOT_FREE else EXIT_INCONCLUSIVE


def cmd_enumerate(cfg: RunConfig, n_states: int, n_letters: int, flt: str, canonical: bool,
                  limit: int | None) -> int:
    if flt not in FILTERS:
        raise InputError(f"unknown filter {flt!r}; choose from {', '.join(FILTERS)}")
    count = 0
    for m in enumerate_machines(n_states, n_letters, cfg.power_budget):
        if canonical and canonical_key(m) != table_key(m):
            continue
        item = summarize(m, flt, cfg)
        if item is None:
            continue
        count += 1
        sys.stdout.write(json.dumps(item, ensure_ascii=False) + "\n")
        if limit is not None and count >= limit:
            break
    print(f"{count} machines", file=sys.stderr)
    return EXIT_OK if count else EXIT_INCONCLUSIVE


def cmd_export_dot(cfg: RunConfig, what: str, level: int) -> int:
    m = _load(cfg)
    if what == "machine":
        emit(machine_dot(m))
    elif what == "dual":
        emit(transducer_dot(enriched_dual(m), "dual"))
    elif what == "power":
        emit(transducer_dot(power(enriched_dual(m), level, cfg.power_budget), "power"))
    elif what == "orbital":
        emit(build_orbital(m, parse_seeds(m, cfg.seeds), cfg.orbit_budget).to_dot())
    else:
        raise InputError(f"cannot export {what!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selfsim", description="Automaton group analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help, file=True):
        sp = sub.add_parser(name, help=help)
        if file:
            sp.add_argument("file")
        sp.add_argument("--format", dest="output", choices=("json", "dot", "text"), default="json")
        sp.add_argument("--max-level", type=int, default=3)
        sp.add_argument("--orbit-budget", type=int, default=DEFAULT_ORBIT_BUDGET)
        sp.add_argument("--power-budget", type=int, default=DEFAULT_POWER_BUDGET)
        sp.add_argument("--seed", dest="seeds", action="append",
                        help="seed word over the states, e.g. 'a b^-1'; repeatable")
        return sp

    add("validate", "structural checks")
    add("dual", "dual machine")
    add("power", "power of the enriched dual").add_argument("--level", type=int, default=2)
    add("reduce", "merge equal states")
    add("freeness", "certify a non-free presentation")
    add("orbital", "orbital graph of the seed words")
    add("chi", "exact walk probabilities").add_argument("--m-max", type=int, default=12)
    add("verdict", "check the sink theorems")
    add("reversibility", "reversible, not bireversible analysis")
    en = add("enumerate", "exhaustive search over small machines", file=False)
    en.add_argument("states", type=int)
    en.add_argument("letters", type=int)
    en.add_argument("--filter", default="any")
    en.add_argument("--canonical", action="store_true", help="skip machines isomorphic to an earlier one")
    en.add_argument("--limit", type=int)
    dot = add("export-dot", "graphviz output")
    dot.add_argument("--what", choices=("machine", "dual", "power", "orbital"), default="machine")
    dot.add_argument("--level", type=int, default=2)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    env = os.environ.get("SELFSIM_BUDGET")
    try:
        cfg = RunConfig(args.command, getattr(args, "file", None), args.max_level,
                        args.orbit_budget, args.power_budget, DEFAULT_CLOSURE_BUDGET,
                        args.output, args.seeds)
        if env:
            b = int(env)
            cfg.orbit_budget = cfg.power_budget = cfg.closure_budget = b
            cfg.__post_init__()
        c = args.command
        if c == "validate":
            return cmd_validate(cfg)
        if c == "dual":
            return cmd_dual(cfg)
        if c == "power":
            return cmd_power(cfg, args.level)
        if c == "reduce":
            return cmd_reduce(cfg)
        if c == "freeness":
            return cmd_freeness(cfg)
        if c == "orbital":
            return cmd_orbital(cfg)
        if c == "chi":
            return cmd_chi(cfg, args.m_max)
        if c == "verdict":
            return cmd_verdict(cfg)
        if c == "reversibility":
            return cmd_reversibility(cfg)
        if c == "enumerate":
            return cmd_enumerate(cfg, args.states, args.letters, args.filter, args.canonical, args.limit)
        return cmd_export_dot(cfg, args.what, args.level)
    except BudgetExceeded as e:
        print(f"selfsim: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, NotInvertible) as e:
        print(f"selfsim: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"selfsim: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
