import numpy as np
import pytest

from tpreason import oracle
from tpreason.errors import FixpointError
from tpreason.generate import random_story
from tpreason.inference import (
    AxiomConfig,
    persistence_step,
    run_story,
    step,
    timeline_for,
    transitivity_step,
)
from tpreason.kb import AT, KnowledgeBase, Proposition
from tpreason.lf import load_story
from tpreason.symbols import NULL, SymbolSpace
from tpreason.tensor import DENSE, FACTORED

P = Proposition.of
NAMES = [AT, "<", NULL, "a", "b", "c", "d", "j", "f", "k", "t1", "t2", "t3", "t4"]


@pytest.fixture(params=[FACTORED, DENSE])
def repr(request):
    return request.param


@pytest.fixture
def space():
    return SymbolSpace.build(NAMES, 16, seed=0)


def kb_of(space, facts, m=4, repr=FACTORED):
    kb = KnowledgeBase.empty(space, timeline_for(m, space), repr)
    for p in facts:
        kb = kb.tell(p)
    return kb


def test_persistence_copies_previous_time(space, repr):
    kb = persistence_step(kb_of(space, [P(AT, "a", "j", "t1")], repr=repr), 2)
    assert kb.holds(P(AT, "a", "j", "t2")) == pytest.approx(1.0)
    assert kb.holds(P(AT, "a", "j", "t1")) == pytest.approx(1.0)


def test_precedence_does_not_persist(space, repr):
    kb = kb_of(space, [P("<", "t1", "t2")], repr=repr)
    after = persistence_step(kb, 2)
    assert after.B.allclose(kb.B, atol=1e-12)


def test_negation_cancels_persisted_copy(space, repr):
    kb = kb_of(space, [P(AT, "a", "j", "t3")], repr=repr)
    kb = step(kb, 4, [P(AT, "a", "j", "t4", sign=-1)])
    assert abs(kb.holds(P(AT, "a", "j", "t4"))) < 1e-9


def test_transitivity_worked_example(space, repr):
    kb = kb_of(space, [P(AT, "a", "j", "t1"), P(AT, "a", "j", "t2"), P(AT, "j", "k", "t2")], repr=repr)
    out, _ = transitivity_step(kb, 2)
    want = kb_of(space, [P(AT, "a", "j", "t1"), P(AT, "a", "j", "t2"), P(AT, "j", "k", "t2"),
                         P(AT, "a", "k", "t2")], repr=repr)
    assert np.linalg.norm(out.B.to_array() - want.B.to_array()) < 1e-9


def test_no_shared_middle_adds_nothing(space):
    kb = kb_of(space, [P(AT, "a", "j", "t2"), P(AT, "f", "k", "t2")])
    out, delta = transitivity_step(kb, 2)
    assert delta.norm() < 1e-12
    assert out.B.allclose(kb.B)


def test_chain_takes_two_rounds(space):
    kb = kb_of(space, [P(AT, "a", "b", "t1"), P(AT, "b", "c", "t1"), P(AT, "c", "d", "t1")])
    kb1, _ = transitivity_step(kb, 1)
    assert kb1.facts() - kb.facts() == {P(AT, "a", "c", "t1"), P(AT, "b", "d", "t1")}
    kb2, _ = transitivity_step(kb1, 1)
    assert kb2.facts() - kb1.facts() == {P(AT, "a", "d", "t1")}
    kb3, delta = transitivity_step(kb2, 1)
    assert delta.norm() < 1e-12


def test_fixpoint_cap():
    sp = SymbolSpace.build(NAMES, 16)
    chain = [[P(AT, "a", "b", "t1"), P(AT, "b", "c", "t1"), P(AT, "c", "d", "t1")]]
    cfg = AxiomConfig(max_fixpoint_iters=2)
    with pytest.raises(FixpointError) as err:
        run_story(chain, sp, cfg, strict=True)
    assert err.value.args
    kb = run_story(chain, sp, cfg)        # non-strict: logged, KB still returned
    assert kb.holds(P(AT, "a", "d", "t1")) == pytest.approx(1.0)


def test_empty_story(space):
    kb = run_story([], space)
    assert kb.B.norm() == 0.0 and not kb.facts()


def test_story_trace_columns(stories_dir, repr):
    story = load_story(stories_dir / "apple.lf")
    sp = SymbolSpace.build(story.symbols(), 16, seed=3)
    kb = run_story(story.story(), sp, repr=repr)
    inferences = {
        2: {P(AT, "a", "j", "t2"), P(AT, "a", "f", "t2")},
        3: {P(AT, "a", "j", "t3"), P(AT, "a", "k", "t3")},
        4: {P(AT, "a", "k", "t4")},
    }
    for tr in kb.history:
        got = tr.persisted | tr.derived
        assert inferences.get(tr.i, set()) <= got
        want_prec = {P("<", f"t{tr.i - 1}", f"t{tr.i}")} if tr.i > 1 else set()
        assert tr.precedence == want_prec
    assert P(AT, "a", "j", "t4") not in kb.facts()
    assert abs(kb.holds(P(AT, "a", "j", "t4"))) < 1e-9


def test_idempotent_at_fixpoint(space):
    story = [[P(AT, "a", "j", "t1")], [P(AT, "j", "f", "t2")], [P(AT, "j", "k", "t3")]]
    kb = run_story(story, space)
    again, _ = transitivity_step(kb, 3)
    assert np.linalg.norm(again.B.to_array() - kb.B.to_array()) < 1e-9


def test_two_transitive_predicates():
    names = NAMES + ["in"]
    sp = SymbolSpace.build(names, 16)
    story = [[P(AT, "a", "b", "t1"), P(AT, "b", "c", "t1"), P("in", "a", "b", "t1"), P("in", "b", "d", "t1")]]
    cfg = AxiomConfig(transitive_preds={AT, "in"})
    kb = run_story(story, sp, cfg)
    g = oracle.closure(story, oracle.Axioms(transitive_preds={AT, "in"}))
    assert kb.facts() == {Proposition(k[0], k[1:]) for k in g.facts}


@pytest.mark.parametrize("seed", range(40))
def test_random_story_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    rs = random_story(rng)
    sp = SymbolSpace.build(rs.symbols(), 16, seed=seed)
    kb = run_story(rs.story(), sp, repr=FACTORED if seed % 2 else DENSE)
    assert all(t.iterations < 16 for t in kb.history)
    g = oracle.closure(rs.story())
    assert kb.facts() == {Proposition(k[0], k[1:]) for k in g.facts}
    assert kb.B.order == 4
