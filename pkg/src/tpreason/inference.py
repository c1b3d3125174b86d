"""Persistence and transitivity as tensor operations, and the story loop.

Per sentence ``i`` the loop runs: persistence from ``t_{i-1}`` to ``t_i``,
the precedence update, the sentence's own propositions, then transitive
inference at ``t_i`` until nothing new is derived.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import FixpointError
from .kb import AT, KnowledgeBase, Proposition, Timeline, build_time_operator, time_name
from .symbols import SymbolSpace
from .tensor import FACTORED, Tensor, inner, outer

log = logging.getLogger(__name__)

# norm of the per-iteration update below which B is considered unchanged
FIXPOINT_TOL = 1e-9


@dataclass(frozen=True)
class AxiomConfig:
    persistent_preds: frozenset = frozenset({AT})
    transitive_preds: frozenset = frozenset({AT})
    max_fixpoint_iters: int = 16
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "persistent_preds", frozenset(self.persistent_preds))
        object.__setattr__(self, "transitive_preds", frozenset(self.transitive_preds))


@dataclass(frozen=True)
class StepTrace:
    """Shadow differences recorded while processing one sentence."""

    i: int
    persisted: frozenset
    precedence: frozenset
    stated: tuple
    derived: frozenset
    iterations: int


def _slice(B: Tensor, pred_dual, time_dual) -> Tensor:
    """Contract the predicate and time modes: the (arg1, arg2) matrix of one predicate at one time."""
    s = inner(B, Tensor.rank1(pred_dual).as_repr(B.repr), [(0, 0)])
    return inner(s, Tensor.rank1(time_dual).as_repr(B.repr), [(2, 0)])


def persistence_step(kb: KnowledgeBase, i: int, config: AxiomConfig = AxiomConfig()) -> KnowledgeBase:
    """``B <- (1 + P(t_i)) B``: copy persistent facts at ``t_{i-1}`` to ``t_i``."""
    if i < 2:
        return kb
    space = kb.space
    t_i = space.vector(time_name(i))
    # the time code selected by P(t_i) is T^{-1} t_i
    prev = space.dualize(kb.timeline.Tinv @ t_i)
    delta = Tensor.zeros((space.d,) * 4, kb.repr)
    for p in sorted(config.persistent_preds):
        s = _slice(kb.B, space.dual(p), prev)
        delta = delta + outer(outer(Tensor.rank1(space.vector(p)).as_repr(kb.repr), s),
                              Tensor.rank1(t_i).as_repr(kb.repr))
    shadow = Counter(kb.shadow)
    prev_name, now = time_name(i - 1), time_name(i)
    for key, c in kb.shadow.items():
        if key[0] in config.persistent_preds and key[3] == prev_name:
            shadow[key[:3] + (now,)] += c
            if shadow[key[:3] + (now,)] == 0:
                del shadow[key[:3] + (now,)]
    return kb._with(delta, shadow)


def transitive_candidates(kb: KnowledgeBase, i: int, config: AxiomConfig = AxiomConfig()) -> Tensor:
    """``V[B, B; t_i]`` summed over the transitive predicates.

    For predicate ``p``: take the (arg1, arg2) slice of ``B`` at ``p`` and
    ``t_i``, join arg2 of one copy to arg1 of the other, and re-attach ``p``
    and ``t_i``.  Only the two slices are ever multiplied.
    """
    space = kb.space
    t_i = space.vector(time_name(i))
    out = Tensor.zeros((space.d,) * 4, kb.repr)
    for p in sorted(config.transitive_preds):
        s = _slice(kb.B, space.dual(p), space.dual(time_name(i)))
        joined = inner(s, s, [(1, 0)])
        out = out + outer(outer(Tensor.rank1(space.vector(p)).as_repr(kb.repr), joined),
                          Tensor.rank1(t_i).as_repr(kb.repr))
    return out.compress()


def transitivity_step(kb: KnowledgeBase, i: int, config: AxiomConfig = AxiomConfig()):
    """One round of transitive inference at ``t_i``.

    Returns ``(kb, delta)``.  A candidate is added (with coefficient 1) only
    when it scores above threshold in ``V`` and is absent from ``B``, so the
    stored tensor stays the TPR of a set and a repeat at the fixpoint is a no-op.
    """
    space = kb.space
    cand = space.coordinates(transitive_candidates(kb, i, config))
    current = space.coordinates(kb.B)
    new = {}
    for key, score in cand.items():
        have = current.get(key, 0.0)
        if score > config.threshold and have < config.threshold:
            new[key] = 1.0 - have
    delta = space.from_coordinates(new, 4, kb.repr)
    shadow = Counter(kb.shadow)
    for key in new:
        shadow[tuple(space.names[k] for k in key)] = 1
    return kb._with(delta, shadow), delta


def close_transitive(kb: KnowledgeBase, i: int, config: AxiomConfig = AxiomConfig(),
                     strict: bool = False):
    """Repeat :func:`transitivity_step` until no change; returns ``(kb, iterations)``."""
    for it in range(1, config.max_fixpoint_iters + 1):
        before = kb.shadow
        kb, delta = transitivity_step(kb, i, config)
        if kb.shadow == before and delta.norm() < FIXPOINT_TOL:
            return kb, it
    msg = f"transitive closure at t{i} not reached after {config.max_fixpoint_iters} iterations"
    if strict:
        raise FixpointError(msg, kb)
    log.warning(msg)
    return kb, config.max_fixpoint_iters


def step(kb: KnowledgeBase, i: int, sentence: Sequence[Proposition],
         config: AxiomConfig = AxiomConfig(), strict: bool = False) -> KnowledgeBase:
    """Process sentence ``i`` (1-based) against ``B(t_{i-1})``."""
    s0 = kb.shadow
    kb = persistence_step(kb, i, config)
    s1 = kb.shadow
    kb = kb.update_precedence(i)
    s2 = kb.shadow
    for p in sentence:
        kb = kb.tell(p)
    s3 = kb.shadow
    kb, iters = close_transitive(kb, i, config, strict)
    assert kb.B.order == 4
    trace = StepTrace(
        i=i,
        persisted=_gained(s0, s1),
        precedence=_gained(s1, s2),
        stated=tuple(sentence),
        derived=_gained(s3, kb.shadow),
        iterations=iters,
    )
    return replace(kb, history=kb.history + (trace,))


def _gained(before, after) -> frozenset:
    return frozenset(
        Proposition(k[0], k[1:]) for k, c in after.items() if c > 0 and before.get(k, 0) <= 0
    )


def run_story(story: Sequence[Sequence[Proposition]], space: SymbolSpace,
              config: AxiomConfig = AxiomConfig(), repr: str = FACTORED,
              strict: bool = False) -> KnowledgeBase:
    """Build ``B(t_m)`` for a story given as one list of propositions per sentence."""
    kb = KnowledgeBase.empty(space, timeline_for(len(story), space), repr)
    for i, sentence in enumerate(story, start=1):
        kb = step(kb, i, sentence, config, strict)
    return kb


def timeline_for(m: int, space: SymbolSpace) -> Timeline | None:
    if m < 2:
        return None
    return build_time_operator([time_name(i) for i in range(1, m + 1)], space)
