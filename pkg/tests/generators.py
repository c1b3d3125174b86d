"""Random test inputs: small knowledge bases, conjunctive queries, two-place stories, room maps."""

import numpy as np

from tpreason.kb import AT, KnowledgeBase, Proposition
from tpreason.query import Atom, Query, Var
from tpreason.symbols import SymbolSpace

PREDS = ("p", "q")


def random_kb(rng, d=4, repr="factored"):
    """A KB over ``d`` symbols (two of them predicates) with a handful of facts."""
    names = list(PREDS) + ["a", "b", "c"][: d - len(PREDS)]
    space = SymbolSpace.build(names, d, seed=int(rng.integers(1 << 30)))
    kb = KnowledgeBase.empty(space, repr=repr)
    for _ in range(int(rng.integers(1, 9))):
        pred = str(rng.choice(PREDS))
        args = tuple(str(x) for x in rng.choice(names, 3))
        kb = kb.tell(Proposition(pred, args))
    return kb


def random_query(rng, names, max_atoms=3, max_query_vars=2, max_exist_vars=3):
    n_atoms = int(rng.integers(1, max_atoms + 1))
    n_q = int(rng.integers(0, max_query_vars + 1))
    n_e = int(rng.integers(0, max_exist_vars + 1))
    qv = [f"x{i}" for i in range(n_q)]
    ev = [f"e{i}" for i in range(n_e)]
    pool = qv + ev
    slots = []
    for _ in range(n_atoms * 3):
        if pool and rng.random() < 0.6:
            slots.append("?" + str(rng.choice(pool)))
        else:
            slots.append(str(rng.choice(names)))
    # every declared variable must fill some slot
    free = [k for k in range(len(slots)) if not slots[k].startswith("?")]
    for v in pool:
        if ("?" + v) not in slots:
            if not free:
                break
            slots[free.pop(int(rng.integers(len(free))))] = "?" + v
    used = {s[1:] for s in slots if s.startswith("?")}
    qv = [v for v in qv if v in used]
    ev = [v for v in ev if v in used]
    atoms = tuple(Atom(str(rng.choice(PREDS)), tuple(slots[3 * k: 3 * k + 3])) for k in range(n_atoms))
    exclude = {}
    if qv and rng.random() < 0.3:
        exclude = {qv[0]: (str(rng.choice(names)),)}
    return Query(tuple(qv), tuple(ev), atoms, exclude=exclude)


def var_slots(q):
    return [(k, i) for k, a in enumerate(q.atoms) for i, x in enumerate(a.args) if isinstance(x, Var)]


def random_two_place_story(rng, names, m):
    story = []
    for i in range(1, m + 1):
        props = []
        for _ in range(int(rng.integers(1, 3))):
            x, y = rng.choice(names, 2, replace=False)
            sign = -1 if rng.random() < 0.2 else 1
            props.append(Proposition(AT, (str(x), str(y), f"t{i}"), sign=sign))
        story.append(props)
    return story


def random_tree_placement(rng, side=3):
    """A random spanning tree of a random subset of grid cells, as direction facts."""
    cells = [(r, c) for r in range(side) for c in range(side)]
    start = cells[int(rng.integers(len(cells)))]
    placed, facts = {start}, []
    target = int(rng.integers(2, len(cells) + 1))
    while len(placed) < target:
        frontier = []
        for r, c in placed:
            for d, (dr, dc) in {"n": (1, 0), "s": (-1, 0), "e": (0, 1), "w": (0, -1)}.items():
                nb = (r + dr, c + dc)
                if nb in cells and nb not in placed:
                    frontier.append((d, nb, (r, c)))
        d, x, y = frontier[int(rng.integers(len(frontier)))]
        placed.add(x)
        facts.append((d, f"c{x[0]}{x[1]}", f"c{y[0]}{y[1]}"))
    return facts
