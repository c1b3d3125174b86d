import numpy as np
import pytest

from tpreason import oracle
from tpreason.errors import DimensionError, InconsistentModelError, UnknownSymbolError
from tpreason.inference import run_story
from tpreason.kb import AT, Proposition
from tpreason.simplified import (
    INVERSE,
    Combiner,
    DirectionFact,
    MatrixMemory,
    actor_score,
    bind_event,
    build_path_model,
    find_paths,
    random_orthogonal,
    reduced_words,
    simplified_transitive,
    test_path as check_path,
)
from tpreason.symbols import NULL, SymbolSpace
from tpreason.tensor import Tensor, inner

from generators import random_tree_placement, random_two_place_story

P = Proposition.of
ROOMS = [DirectionFact("s", "b", "h"), DirectionFact("e", "a", "o"), DirectionFact("w", "k", "g"),
         DirectionFact("s", "g", "o"), DirectionFact("s", "o", "b")]


def at_slice(kb, i):
    sp = kb.space
    s = inner(kb.B, Tensor.rank1(sp.dual(AT)), [(0, 0)])
    return inner(s, Tensor.rank1(sp.dual(f"t{i}")), [(2, 0)]).to_array()


def test_transitive_matrix_product():
    sp = SymbolSpace.build(["f", "m", "g"], 8, seed=0)
    f, m, g = (sp.vector(n) for n in "fmg")
    np.testing.assert_allclose(simplified_transitive(np.outer(f, m), np.outer(m, g)), np.outer(f, g),
                               atol=1e-12)


def test_random_orthogonal():
    Q = random_orthogonal(6, np.random.default_rng(0))
    np.testing.assert_allclose(Q.T @ Q, np.eye(6), atol=1e-12)


def test_matrix_memory_matches_full_slices():
    rng = np.random.default_rng(5)
    ents = ["a", "b", "c", "d", "e"]
    for _ in range(25):
        m = int(rng.integers(1, 6))
        names = [AT, "<", NULL] + ents + [f"t{i}" for i in range(1, m + 1)]
        sp = SymbolSpace.build(names, 16, seed=int(rng.integers(1000)))
        story = random_two_place_story(rng, ents, m)
        mem = MatrixMemory.run(story, sp)
        kb = run_story(story, sp)
        for i in range(1, m + 1):
            np.testing.assert_allclose(mem.slots[i - 1], at_slice(kb, i), atol=1e-9)
        back = mem.to_kb(kb.timeline)
        assert back.facts() == kb.facts()


def test_matrix_memory_rejects_other_predicates():
    sp = SymbolSpace.build([AT, "in", "a", "b", "t1"], 8)
    with pytest.raises(ValueError):
        MatrixMemory(space=sp).step([P("in", "a", "b", "t1")])


def test_matrix_memory_holds():
    sp = SymbolSpace.build([AT, "a", "j", "f"], 6, seed=1)
    mem = MatrixMemory.run([[P(AT, "a", "j")], [P(AT, "j", "f")]], sp)
    assert mem.holds(2, "a", "f") == pytest.approx(1.0)
    assert mem.holds(1, "a", "f") == pytest.approx(0.0, abs=1e-12)


def test_combiner_round_trip():
    rng = np.random.default_rng(7)
    E = random_orthogonal(16, rng)[:, :6]
    c = Combiner.build(E, seed=1)
    worst = 0.0
    for _ in range(100):
        i, j = rng.integers(6, size=2)
        g, k = c.split(c.combine(E[:, i], E[:, j]))
        worst = max(worst, np.abs(g - E[:, i]).max(), np.abs(k - E[:, j]).max())
    assert worst < 1e-9


def test_combiner_non_orthogonal_entities():
    rng = np.random.default_rng(8)
    E = rng.standard_normal((10, 4))
    c = Combiner.build(E, seed=3)
    g, k = c.split(c.combine(E[:, 0] + 2 * E[:, 1], E[:, 3]))
    np.testing.assert_allclose(g, E[:, 0] + 2 * E[:, 1], atol=1e-9)
    np.testing.assert_allclose(k, E[:, 3], atol=1e-9)


def test_combiner_dimension_errors():
    with pytest.raises(DimensionError):
        Combiner.build(np.eye(8)[:, :5])
    with pytest.raises(DimensionError):
        Combiner.build(np.eye(7)[:, :2])
    with pytest.raises(DimensionError):
        Combiner.build(np.ones((8, 2)))


def test_actor_score():
    rng = np.random.default_rng(9)
    Q = random_orthogonal(16, rng)
    people, things = Q[:, :3], Q[:, 3:9]
    c = Combiner.build(things, seed=2)
    v = c.combine(things[:, 0], things[:, 4])
    M = bind_event(people[:, 0], v)
    assert actor_score(M, people[:, 0], v) == pytest.approx(1.0, abs=1e-9)
    assert actor_score(M, people[:, 1], v) == pytest.approx(0.0, abs=1e-9)


# -- path model -----------------------------------------------------------


def test_room_model_validates_facts():
    model = build_path_model(ROOMS, 16, seed=0)
    for f in ROOMS:
        ok, res = check_path(model, [f.direction], f.y, f.x)
        assert ok and res < 1e-9
    assert find_paths(model, "g", "b") == [["n", "n"]]
    assert find_paths(model, "k", "o") == [["n", "e"]]
    assert find_paths(model, "g", "g") == [[]]


def test_accepts_propositions_and_tuples():
    m1 = build_path_model([P("s", "b", "h")], 4, seed=1)
    m2 = build_path_model([("s", "b", "h")], 4, seed=1)
    np.testing.assert_allclose(m1.vector("b"), m2.vector("b"))


def test_path_model_errors():
    with pytest.raises(InconsistentModelError):
        build_path_model([("n", "x", "y"), ("n", "y", "x")], 8)
    with pytest.raises(DimensionError):
        build_path_model(ROOMS, 10)
    with pytest.raises(ValueError):
        DirectionFact("up", "a", "b")
    model = build_path_model(ROOMS, 16)
    with pytest.raises(UnknownSymbolError):
        find_paths(model, "g", "zz")


def test_commuting_model_closes_a_square():
    square = [("e", "b", "a"), ("n", "c", "b"), ("w", "d", "c"), ("s", "a", "d")]
    with pytest.raises(InconsistentModelError):
        build_path_model(square, 16, seed=0)
    model = build_path_model(square, 16, seed=0, commuting=True)
    assert ["n", "e"] in find_paths(model, "a", "c")
    assert ["e", "n"] in find_paths(model, "a", "c")


def test_reduced_words():
    words = list(reduced_words(2))
    assert words[0] == ()
    assert len(words) == 1 + 4 + 12
    assert ("n", "s") not in words


@pytest.mark.parametrize("seed", range(20))
def test_paths_match_symbolic_closure(seed):
    rng = np.random.default_rng(seed)
    facts = random_tree_placement(rng)
    model = build_path_model(facts, 20, seed=seed)
    closure = oracle.path_closure(facts, 2)
    for u in model.locations:
        for v in model.locations:
            assert find_paths(model, u, v) == oracle.answer_path(closure, u, v)


@pytest.mark.parametrize("seed", range(10))
def test_inverse_and_composition(seed):
    rng = np.random.default_rng(100 + seed)
    facts = random_tree_placement(rng)
    model = build_path_model(facts, 20, seed=seed)
    for d, x, y in facts:
        assert check_path(model, [INVERSE[d]], x, y)[0]
        np.testing.assert_allclose(model.matrix(INVERSE[d]) @ model.matrix(d), np.eye(20), atol=1e-9)
    for d1, y, z in facts:
        for d2, x, y2 in facts:
            if y2 == y:
                assert check_path(model, [d2, d1], z, x)[0]


def test_range_check_is_opt_in():
    # y is north of x1 and east of x2, so N x1 = E x2
    facts = [("n", "y", "x1"), ("e", "y", "x2")]
    build_path_model(facts, 8, seed=0)
    with pytest.raises(DimensionError):
        build_path_model(facts, 8, seed=0, check_ranges=True)
    build_path_model([("n", "y", "x")], 8, seed=0, check_ranges=True)
