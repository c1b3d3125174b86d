"""Brute-force symbolic reasoner over ground atoms.

Ground truth for the tensor engine's equivalence tests.  Nothing here is
indexed or clever on purpose; universes are a dozen symbols or so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .kb import AT, PRECEDES, Proposition, time_name
from .query import NEXT, Query, Var, normalize
from .symbols import NULL

INVERSE = {"n": "s", "s": "n", "e": "w", "w": "e"}
DIRECTIONS = ("n", "s", "e", "w")


@dataclass(frozen=True)
class Axioms:
    persistence: bool = True
    transitivity: bool = True
    precedence: bool = True
    persistent_preds: frozenset = frozenset({AT})
    transitive_preds: frozenset = frozenset({AT})

    @classmethod
    def none(cls) -> "Axioms":
        return cls(persistence=False, transitivity=False, precedence=False)


@dataclass
class GroundKB:
    facts: set = field(default_factory=set)       # (pred, a1, a2, a3) tuples
    universe: tuple = ()
    times: tuple = ()

    def holds(self, key) -> bool:
        return tuple(key) in self.facts


def _transitive_naive(facts: set, preds, t) -> set:
    facts = set(facts)
    while True:
        new = set()
        for p, x, y, t1 in facts:
            if p not in preds or t1 != t:
                continue
            for q, y2, z, t2 in facts:
                if q == p and y2 == y and t2 == t:
                    new.add((p, x, z, t))
        if new <= facts:
            return facts
        facts |= new


def _transitive_seminaive(facts: set, preds, t) -> set:
    facts = set(facts)
    delta = {f for f in facts if f[0] in preds and f[3] == t}
    while delta:
        layer = {f for f in facts if f[0] in preds and f[3] == t}
        new = set()
        for p, x, y, _ in delta:
            for q, a, b, _ in layer:
                if q != p:
                    continue
                if a == y:
                    new.add((p, x, b, t))
                if b == x:
                    new.add((p, a, y, t))
        delta = new - facts
        facts |= delta
    return facts


def closure(story: Sequence[Sequence[Proposition]], axioms: Axioms = Axioms(),
            method: str = "naive") -> GroundKB:
    """Least fixed point of the selected axioms, sentence by sentence.

    At sentence ``i``: persist facts from ``t_{i-1}``, record
    ``<(t_{i-1}, t_i)``, apply the sentence (a negated atom removes its
    positive counterpart), then close under transitivity at ``t_i``.
    """
    trans = {"naive": _transitive_naive, "seminaive": _transitive_seminaive}[method]
    facts = set()
    symbols = set()
    for i, sentence in enumerate(story, start=1):
        now, prev = time_name(i), time_name(i - 1)
        if i >= 2 and axioms.persistence:
            facts |= {(p, x, y, now) for p, x, y, t in facts
                      if p in axioms.persistent_preds and t == prev}
        if i >= 2 and axioms.precedence:
            facts.add((PRECEDES, prev, now, NULL))
        for prop in sentence:
            symbols.update(prop.key)
            if prop.sign > 0:
                facts.add(prop.key)
            else:
                facts.discard(prop.key)
        if axioms.transitivity:
            facts = trans(facts, axioms.transitive_preds, now)
    times = tuple(time_name(i) for i in range(1, len(story) + 1))
    symbols.update(times)
    for f in facts:
        symbols.update(f)
    return GroundKB(facts=facts, universe=tuple(sorted(symbols)), times=times)


def answer(kb: GroundKB, q: Query, universe: Iterable[str] | None = None) -> set:
    """All query-variable tuples with a witnessing assignment of every variable."""
    q = normalize(q)
    universe = tuple(universe) if universe is not None else kb.universe
    variables = list(q.query_vars) + list(q.exist_vars)
    excl = q.exclusions
    restr = q.restrictions
    succ = {kb.times[i]: kb.times[i + 1] for i in range(len(kb.times) - 1)}
    found = set()
    for values in product(universe, repeat=len(variables)):
        env = dict(zip(variables, values))
        if any(env[v] in excl.get(v, ()) for v in q.query_vars):
            continue
        if any(v in restr and env[v] not in restr[v] for v in q.query_vars):
            continue
        if not _satisfied(q, env, kb, succ):
            continue
        found.add(tuple(env[v] for v in q.query_vars))
    return found


def _satisfied(q: Query, env: dict, kb: GroundKB, succ: dict) -> bool:
    slots = []
    for atom in q.atoms:
        args = tuple(env[a.name] if isinstance(a, Var) else a for a in atom.args)
        slots.append(args)
        if atom.pred == NEXT:
            if succ.get(args[0]) != args[1]:
                return False
        elif (atom.pred,) + args not in kb.facts:
            return False
    for (k1, i1), (k2, i2) in q.equalities:
        if slots[k1][i1] != slots[k2][i2]:
            return False
    return True


# -- path finding ---------------------------------------------------------


def path_closure(direction_facts: Iterable[tuple], max_len: int = 2) -> set:
    """Facts ``(word, x, y)``: the path ``word`` leads to ``x`` from ``y``.

    ``word`` lists directions last-step-first, as in ``p[d_n, ..., d_1]``.
    Starts from the stated ``d(x, y)``, adds the inverse facts, the
    single-step paths, and then all compositions up to ``max_len`` steps.
    """
    base = set()
    for d, x, y in direction_facts:
        base.add((d, x, y))
        base.add((INVERSE[d], y, x))
    paths = {((d,), x, y) for d, x, y in base}
    while True:
        new = set()
        for w1, z, y in paths:
            for w2, y2, x in paths:
                if y2 == y and len(w1) + len(w2) <= max_len:
                    new.add((w1 + w2, z, x))
        if new <= paths:
            break
        paths |= new
    return paths


def answer_path(paths: set, start: str, goal: str, max_len: int = 2,
                allow_backtrack: bool = False) -> list:
    """Paths from ``start`` to ``goal``, shortest first then in n, s, e, w order."""
    found = [list(w) for w, z, x in paths if z == goal and x == start and len(w) <= max_len]
    if not allow_backtrack:
        found = [w for w in found if not _backtracks(w)]
    if start == goal:
        found.append([])
    rank = {d: k for k, d in enumerate(DIRECTIONS)}
    found.sort(key=lambda w: (len(w), [rank[d] for d in w]))
    return found


def _backtracks(word) -> bool:
    return any(INVERSE[a] == b for a, b in zip(word, word[1:]))
