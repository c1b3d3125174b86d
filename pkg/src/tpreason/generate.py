"""Seeded random stories and queries for equivalence testing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kb import AT, PRECEDES, Proposition, time_name
from .query import NEXT, Atom, Query, Var
from .symbols import NULL

# symbols every story needs besides its entities and time codes
FIXED_SYMBOLS = (AT, PRECEDES, NULL)


@dataclass(frozen=True)
class RandomStory:
    entities: tuple
    locations: tuple
    sentences: tuple              # one tuple of propositions per timestep

    @property
    def m(self) -> int:
        return len(self.sentences)

    def story(self) -> list:
        return [list(s) for s in self.sentences]

    def symbols(self) -> list:
        times = [time_name(i) for i in range(1, self.m + 1)]
        return list(FIXED_SYMBOLS) + list(self.entities) + times


def random_story(rng: np.random.Generator, max_sentences: int = 8, max_entities: int = 6,
                 d: int = 16) -> RandomStory:
    """Actors move between locations and pick up or drop objects.

    The sizes are trimmed so entities, time codes and the fixed symbols fit
    in ``d`` orthonormal codes.
    """
    n_ent = int(rng.integers(3, max_entities + 1))
    m = int(rng.integers(2, max_sentences + 1))
    while n_ent + m + len(FIXED_SYMBOLS) > d:
        if m > 2:
            m -= 1
        else:
            n_ent -= 1
    entities = tuple("abcdefghijklm"[:n_ent])
    n_loc = max(1, n_ent // 3)
    locations = entities[-n_loc:]
    movers = entities[:-n_loc]
    holding = set()
    sentences = []
    for i in range(1, m + 1):
        t = time_name(i)
        props = []
        for _ in range(int(rng.integers(1, 3))):
            r = rng.random()
            x = str(rng.choice(movers))
            if r < 0.4:
                props.append(Proposition(AT, (x, str(rng.choice(locations)), t)))
            elif r < 0.75 or not holding:
                y = str(rng.choice([e for e in movers if e != x] or locations))
                props.append(Proposition(AT, (y, x, t)))
                holding.add((y, x))
            else:
                y, x = sorted(holding)[int(rng.integers(len(holding)))]
                props.append(Proposition(AT, (y, x, t), sign=-1))
                holding.discard((y, x))
        sentences.append(tuple(props))
    return RandomStory(entities, locations, tuple(sentences))


def random_queries(rng: np.random.Generator, rs: RandomStory, k: int) -> list:
    """``k`` queries drawn from a few shapes that exercise joins, exclusions and NEXT."""
    out = []
    times = [time_name(i) for i in range(1, rs.m + 1)]
    for _ in range(k):
        shape = int(rng.integers(6))
        c = str(rng.choice(rs.entities))
        c2 = str(rng.choice(rs.entities))
        t = str(rng.choice(times))
        if shape == 0:
            q = Query(("x",), (), (Atom(AT, (c, "?x", t)),))
        elif shape == 1:
            q = Query(("x",), ("t", "u"),
                      (Atom(AT, (c, c2, "?u")), Atom(AT, (c, "?x", "?t")), Atom(PRECEDES, ("?t", "?u"))),
                      exclude={"x": (c2,)}, restrict={"x": rs.locations})
        elif shape == 2:
            q = Query(("x",), ("t", "u"),
                      (Atom(AT, (c, c2, "?u")), Atom(AT, (c, "?x", "?t")), Atom(NEXT, ("?t", "?u"))),
                      exclude={"x": (c2,)})
        elif shape == 3:
            q = Query(("x", "y"), (), (Atom(AT, ("?x", "?y", t)),))
        elif shape == 4:
            q = Query(("x",), ("y",), (Atom(AT, ("?x", "?y")), Atom(AT, ("?y", c))))
        else:
            q = Query(("t",), (), (Atom(AT, (c, c2, "?t")),))
        out.append(q)
    return out
