"""The order-4 knowledge-base tensor, its symbolic shadow, and the timeline.

Modes of ``B`` are (predicate, first argument, second argument, third
argument).  Timed facts carry their time symbol in the last mode; the
precedence relation ``<`` is padded with the dummy symbol ``∅``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import UnknownSymbolError
from .symbols import NULL, SymbolSpace
from .tensor import FACTORED, Tensor, inner

AT = "@"
PRECEDES = "<"


def time_name(i: int) -> str:
    return f"t{i}"


@dataclass(frozen=True, order=True)
class Proposition:
    """``pred(arg1, arg2, arg3)`` with sign +1 (asserted) or -1 (negated)."""

    pred: str
    args: tuple
    sign: int = 1

    def __post_init__(self):
        args = tuple(self.args)
        if len(args) != 3:
            raise ValueError(f"propositions have exactly 3 arguments, got {len(args)}")
        if NULL in args[:2]:
            raise ValueError(f"{NULL} may only appear as the third argument")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "args", args)

    @classmethod
    def of(cls, pred: str, *args: str, sign: int = 1) -> "Proposition":
        args = tuple(args) + (NULL,) * (3 - len(args))
        return cls(pred, args, sign)

    @property
    def key(self) -> tuple:
        return (self.pred,) + self.args

    def positive(self) -> "Proposition":
        return replace(self, sign=1) if self.sign < 0 else self

    def negated(self) -> "Proposition":
        return replace(self, sign=-self.sign)

    def __str__(self):
        neg = "~" if self.sign < 0 else ""
        return f"{neg}{self.pred}({', '.join(self.args)})"


def encode_prop(p: Proposition, space: SymbolSpace, repr: str = FACTORED) -> Tensor:
    """``sign * pred (x) arg1 (x) arg2 (x) arg3``."""
    return space.encode(*p.key, coef=float(p.sign), repr=repr)


@dataclass(frozen=True, eq=False)
class Timeline:
    """Time codes and the increment operator ``Tmat`` (``Tmat @ t_i = t_{i+1}``).

    ``Tmat`` is zero on the complement of the span of the time codes and
    ``Tinv`` inverts it on that span.
    """

    names: tuple
    tvecs: np.ndarray
    Tmat: np.ndarray
    Tinv: np.ndarray

    def index(self, name: str) -> int:
        return self.names.index(name)


def build_time_operator(names: Iterable[str], space: SymbolSpace) -> Timeline:
    names = tuple(names)
    if len(names) < 2:
        raise ValueError("a time-increment operator needs at least 2 time symbols")
    tv = np.array([space.vector(n) for n in names])
    td = np.array([space.dual(n) for n in names])
    T = sum(np.outer(tv[i + 1], td[i]) for i in range(len(names) - 1))
    Tinv = sum(np.outer(tv[i], td[i + 1]) for i in range(len(names) - 1))
    for a in (tv, T, Tinv):
        a.setflags(write=False)
    return Timeline(names=names, tvecs=tv, Tmat=T, Tinv=Tinv)


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    """``B`` plus the multiset of signed propositions it was built from.

    The shadow maps a proposition key to its net coefficient.  It is kept for
    bookkeeping and cross-checks; answers are always read off ``B``.
    """

    space: SymbolSpace
    B: Tensor
    shadow: Counter = field(default_factory=Counter)
    timeline: Timeline | None = None
    repr: str = FACTORED
    history: tuple = ()

    @classmethod
    def empty(cls, space: SymbolSpace, timeline: Timeline | None = None,
              repr: str = FACTORED) -> "KnowledgeBase":
        return cls(space=space, B=Tensor.zeros((space.d,) * 4, repr), timeline=timeline, repr=repr)

    def encode(self, p: Proposition) -> Tensor:
        return encode_prop(p, self.space, self.repr)

    def _with(self, delta: Tensor, shadow: Counter, **kw) -> "KnowledgeBase":
        B = (self.B + delta.as_repr(self.repr)).compress()
        return replace(self, B=B, shadow=shadow, **kw)

    def add(self, p: Proposition) -> "KnowledgeBase":
        """``B += sign * encoding``.  A -1 cancels a +1 entry or is recorded."""
        self._check(p)
        shadow = Counter(self.shadow)
        shadow[p.key] += p.sign
        if shadow[p.key] == 0:
            del shadow[p.key]
        return self._with(self.encode(p), shadow)

    def tell(self, p: Proposition) -> "KnowledgeBase":
        """Set-valued update: afterwards ``holds(p)`` is 1 (sign +1) or 0 (sign -1).

        Adds ``(target - holds(p))`` copies of the encoding, so asserting a
        present fact or denying an absent one leaves ``B`` unchanged.
        """
        self._check(p)
        target = 1.0 if p.sign > 0 else 0.0
        delta = target - self.holds(p)
        if abs(delta) < 1e-12:
            return self
        shadow = Counter(self.shadow)
        if target:
            shadow[p.key] = 1
        else:
            shadow.pop(p.key, None)
        return self._with(self.encode(p.positive()) * delta, shadow)

    def holds(self, p: Proposition) -> float:
        """Raw truth score of ``|p|``: ~1 present, ~0 absent, ~-1 negated only."""
        self._check(p)
        probe = self.space.unbinder(*p.key, repr=self.repr)
        return inner(self.B, probe, [(m, m) for m in range(4)]).item()

    def facts(self, threshold: float = 0.5) -> set:
        """Every proposition whose score in ``B`` exceeds ``threshold``."""
        names = self.space.names
        out = set()
        for key, val in self.space.coordinates(self.B).items():
            if val > threshold:
                k = [names[i] for i in key]
                out.add(Proposition(k[0], tuple(k[1:])))
        return out

    def shadow_tensor(self) -> Tensor:
        t = Tensor.zeros((self.space.d,) * 4, self.repr)
        for key, c in self.shadow.items():
            t = t + self.space.encode(*key, coef=float(c), repr=self.repr)
        return t

    def update_precedence(self, i: int) -> "KnowledgeBase":
        """Add ``<(t_{i-1}, t_i, ∅)``; a no-op for ``i == 1``."""
        if i < 2:
            return self
        return self.tell(Proposition(PRECEDES, (time_name(i - 1), time_name(i), NULL)))

    def _check(self, p: Proposition) -> None:
        for name in p.key:
            if name not in self.space:
                raise UnknownSymbolError(name)


def merge(a: KnowledgeBase, b: KnowledgeBase) -> KnowledgeBase:
    """Superpose two knowledge bases over the same SymbolSpace."""
    if a.space is not b.space:
        raise ValueError("knowledge bases must share a SymbolSpace")
    shadow = Counter(a.shadow)
    for key, c in b.shadow.items():
        shadow[key] += c
        if shadow[key] == 0:
            del shadow[key]
    return replace(a, B=(a.B + b.B.as_repr(a.repr)).compress(), shadow=shadow)
