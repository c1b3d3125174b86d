import numpy as np
import pytest

from tpreason import oracle
from tpreason.generate import random_story
from tpreason.kb import AT, Proposition
from tpreason.lf import load_story
from tpreason.query import NEXT, Atom, Query
from tpreason.symbols import NULL

P = Proposition.of


@pytest.fixture
def apple(stories_dir):
    return load_story(stories_dir / "apple.lf")


def at_facts(g, t):
    return {f for f in g.facts if f[0] == AT and f[3] == t}


def test_story_closure(apple):
    g = oracle.closure(apple.story())
    assert at_facts(g, "t1") == {(AT, "a", "j", "t1")}
    assert {(AT, "a", "j", "t2"), (AT, "a", "f", "t2")} <= at_facts(g, "t2")
    assert {(AT, "a", "j", "t3"), (AT, "a", "k", "t3")} <= at_facts(g, "t3")
    assert (AT, "a", "k", "t4") in g.facts
    assert (AT, "a", "j", "t4") not in g.facts
    assert {f for f in g.facts if f[0] == "<"} == {("<", "t1", "t2", NULL), ("<", "t2", "t3", NULL),
                                                     ("<", "t3", "t4", NULL)}


def test_no_axioms_is_identity(apple):
    g = oracle.closure(apple.story(), oracle.Axioms.none())
    assert g.facts == {(AT, "a", "j", "t1"), (AT, "j", "f", "t2"), (AT, "j", "k", "t3")}


@pytest.mark.parametrize("seed", range(30))
def test_naive_and_seminaive_agree(seed):
    rs = random_story(np.random.default_rng(seed), max_entities=6)
    a = oracle.closure(rs.story(), method="naive")
    b = oracle.closure(rs.story(), method="seminaive")
    assert a.facts == b.facts


def test_closure_idempotent():
    story = [[P(AT, "a", "b", "t1"), P(AT, "b", "c", "t1"), P(AT, "c", "d", "t1")]]
    g = oracle.closure(story)
    again = oracle.closure([[Proposition(f[0], f[1:]) for f in sorted(g.facts)]])
    assert again.facts == g.facts


def test_before_query_answer(apple):
    g = oracle.closure(apple.story())
    q = Query(("x",), ("t", "u"),
              (Atom(AT, ("a", "k", "?u")), Atom(AT, ("a", "?x", "?t")), Atom("<", ("?t", "?u"))),
              exclude={"x": ("k",)}, restrict={"x": ("f", "k")})
    assert oracle.answer(g, q) == {("f",)}
    qn = Query(("x",), ("t", "u"),
               (Atom(AT, ("a", "k", "?u")), Atom(AT, ("a", "?x", "?t")), Atom(NEXT, ("?t", "?u"))),
               exclude={"x": ("k",)}, restrict={"x": ("f", "k")})
    assert oracle.answer(g, qn) == {("f",)}


def test_unsatisfiable_is_empty(apple):
    g = oracle.closure(apple.story())
    assert oracle.answer(g, Query(("x",), (), (Atom(AT, ("k", "?x", "t1")),))) == set()
    assert oracle.answer(g, Query((), (), (Atom(AT, ("a", "k", "t4")),))) == {()}


ROOMS = [("s", "b", "h"), ("e", "a", "o"), ("w", "k", "g"), ("s", "g", "o"), ("s", "o", "b")]


def test_path_garden_to_bedroom():
    paths = oracle.path_closure(ROOMS, max_len=2)
    assert oracle.answer_path(paths, "g", "b") == [["n", "n"]]
    assert ["s", "n"] in oracle.answer_path(paths, "g", "g", allow_backtrack=True)
    assert oracle.answer_path(paths, "g", "g")[0] == []


def test_path_closure_contains_stated_and_inverse():
    paths = oracle.path_closure(ROOMS, max_len=1)
    for d, x, y in ROOMS:
        assert ((d,), x, y) in paths
        assert ((oracle.INVERSE[d],), y, x) in paths
    assert all(len(w) == 1 for w, _, _ in paths)
