import numpy as np
import pytest

from tpreason.errors import UnknownSymbolError
from tpreason.kb import AT, KnowledgeBase, Proposition, build_time_operator, merge
from tpreason.symbols import NULL, Mode, SymbolSpace
from tpreason.tensor import DENSE, FACTORED, Tensor, inner

NAMES = [AT, "<", NULL, "a", "j", "f", "k", "t1", "t2", "t3", "t4"]
P = Proposition.of


@pytest.fixture(params=[FACTORED, DENSE])
def repr(request):
    return request.param


@pytest.fixture
def space():
    return SymbolSpace.build(NAMES, 16, seed=0)


def test_proposition_validation():
    assert P(AT, "a", "j").args == ("a", "j", NULL)
    with pytest.raises(ValueError):
        Proposition(AT, ("a", "j"))
    with pytest.raises(ValueError):
        Proposition(AT, (NULL, "j", "t1"))
    with pytest.raises(ValueError):
        Proposition(AT, ("a", "j", "t1"), sign=0)
    assert str(P(AT, "a", "j", "t4", sign=-1)) == "~@(a, j, t4)"


def test_unbinding_recovers_third_argument(space, repr):
    kb = KnowledgeBase.empty(space, repr=repr)
    for p in [P(AT, "a", "j", "t1"), P(AT, "j", "f", "t2"), P(AT, "a", "f", "t3")]:
        kb = kb.add(p)
    probe = Tensor.rank1(space.dual(AT), space.dual("j"), space.dual("f"))
    x = inner(kb.B, probe, [(0, 0), (1, 1), (2, 2)])
    np.testing.assert_allclose(x.to_array(), space.vector("t2"), atol=1e-12)


def test_tell_is_set_valued(space, repr):
    kb = KnowledgeBase.empty(space, repr=repr)
    p = P(AT, "a", "j", "t1")
    kb = kb.tell(p).tell(p)
    assert kb.holds(p) == pytest.approx(1.0)
    kb = kb.tell(p.negated())
    assert abs(kb.holds(p)) < 1e-12
    assert kb.B.norm() < 1e-12
    # denying an absent fact is a no-op
    kb2 = kb.tell(P(AT, "j", "k", "t1", sign=-1))
    assert kb2.B.norm() < 1e-12


def test_add_superposes(space, repr):
    kb = KnowledgeBase.empty(space, repr=repr)
    p = P(AT, "a", "j", "t1")
    kb = kb.add(p).add(p)
    assert kb.holds(p) == pytest.approx(2.0)
    kb = kb.add(p.negated()).add(p.negated()).add(p.negated())
    assert kb.holds(p) == pytest.approx(-1.0)
    assert kb.shadow[p.key] == -1


def test_holds_matches_shadow_entries(space, repr):
    kb = KnowledgeBase.empty(space, repr=repr)
    facts = [P(AT, "a", "j", "t1"), P(AT, "j", "f", "t2"), P("<", "t1", "t2")]
    for p in facts:
        kb = kb.tell(p)
    assert kb.B.allclose(kb.shadow_tensor(), atol=1e-12)
    assert kb.facts() == set(facts)
    assert kb.holds(P(AT, "a", "f", "t2")) == pytest.approx(0.0, abs=1e-12)


def test_unknown_symbol_rejected(space):
    with pytest.raises(UnknownSymbolError):
        KnowledgeBase.empty(space).tell(P(AT, "zed", "j", "t1"))


def test_time_operator(space):
    tl = build_time_operator(["t1", "t2", "t3", "t4"], space)
    for i in range(3):
        np.testing.assert_allclose(tl.Tmat @ space.vector(f"t{i + 1}"), space.vector(f"t{i + 2}"), atol=1e-12)
        np.testing.assert_allclose(tl.Tinv @ space.vector(f"t{i + 2}"), space.vector(f"t{i + 1}"), atol=1e-12)
    np.testing.assert_allclose(tl.Tmat @ space.vector("t4"), 0.0, atol=1e-12)
    np.testing.assert_allclose(tl.Tmat @ space.vector("a"), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        build_time_operator(["t1"], space)


def test_time_operator_independent_codes():
    sp = SymbolSpace.build(NAMES, 14, mode=Mode.INDEPENDENT, seed=2)
    tl = build_time_operator(["t1", "t2", "t3"], sp)
    np.testing.assert_allclose(tl.Tmat @ sp.vector("t2"), sp.vector("t3"), atol=1e-10)


def test_merge_adds_tensors(space):
    a = KnowledgeBase.empty(space).tell(P(AT, "a", "j", "t1"))
    b = KnowledgeBase.empty(space).tell(P(AT, "j", "f", "t1"))
    m = merge(a, b)
    assert m.B.allclose(a.B + b.B)
    assert set(m.shadow) == set(a.shadow) | set(b.shadow)
    with pytest.raises(ValueError):
        merge(a, KnowledgeBase.empty(SymbolSpace.build(NAMES, 16, seed=1)))


def test_independent_codes_holds():
    sp = SymbolSpace.build(NAMES, 12, mode=Mode.INDEPENDENT, seed=3)
    kb = KnowledgeBase.empty(sp)
    kb = kb.tell(P(AT, "a", "j", "t1")).tell(P(AT, "a", "f", "t1"))
    assert kb.holds(P(AT, "a", "j", "t1")) == pytest.approx(1.0)
    assert abs(kb.holds(P(AT, "a", "k", "t1"))) < 1e-9
