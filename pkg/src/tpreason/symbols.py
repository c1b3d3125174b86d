"""Distributed symbol encodings and their unbinding duals."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, UnknownSymbolError
from .tensor import DENSE, FACTORED, Tensor

NULL = "∅"
DEFAULT_THRESHOLD = 0.5
# a vector with a component this large is considered local rather than distributed
MAX_COMPONENT = 0.95


class Mode(str, enum.Enum):
    ORTHONORMAL = "orthonormal"
    INDEPENDENT = "independent"


@dataclass(frozen=True, eq=False)
class SymbolSpace:
    """Named symbols with encoding matrix ``F`` (one column per symbol).

    ``duals`` holds the unbinding vectors as rows, so ``duals @ F`` is the
    identity in both modes.
    """

    d: int
    names: tuple
    F: np.ndarray
    duals: np.ndarray
    mode: Mode = Mode.ORTHONORMAL
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n: k for k, n in enumerate(self.names)})

    @classmethod
    def build(cls, names: Iterable[str], d: int, mode=Mode.ORTHONORMAL, seed: int = 0,
              max_tries: int = 100) -> "SymbolSpace":
        names = tuple(dict.fromkeys(names))
        mode = Mode(mode)
        n = len(names)
        if n > d:
            raise DimensionError(f"{n} symbols do not fit in dimension {d}")
        rng = np.random.default_rng(seed)
        for _ in range(max_tries):
            g = rng.standard_normal((d, n))
            if mode is Mode.ORTHONORMAL:
                F, _ = np.linalg.qr(g)
            else:
                F = g / np.linalg.norm(g, axis=0, keepdims=True)
            F = _sign_fix(F)
            if n == 0 or np.abs(F).max() < MAX_COMPONENT:
                break
        else:
            raise DimensionError(f"could not draw distributed codes for {n} symbols in dimension {d}")
        if mode is Mode.ORTHONORMAL:
            duals = F.T.copy()
        else:
            if n and np.linalg.matrix_rank(F) < n:
                raise DimensionError("symbol codes are not linearly independent")
            duals = np.linalg.pinv(F)
        F.setflags(write=False)
        duals.setflags(write=False)
        return cls(d=d, names=names, F=F, duals=duals, mode=mode)

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSymbolError(name) from None

    def vector(self, name: str) -> np.ndarray:
        return self.F[:, self.index(name)]

    def dual(self, name: str) -> np.ndarray:
        return self.duals[self.index(name)]

    def dualize(self, v) -> np.ndarray:
        """Map a vector in the span of the codes to the matching dual combination."""
        return self.duals.T @ (self.duals @ np.asarray(v, dtype=np.float64))

    def encode(self, *names: str, coef: float = 1.0, repr: str = FACTORED) -> Tensor:
        """``coef * f(name0) (x) f(name1) (x) ...``."""
        t = Tensor.rank1(*(self.vector(n) for n in names), coef=coef)
        return t if repr == FACTORED else t.densify()

    def unbinder(self, *names: str, repr: str = FACTORED) -> Tensor:
        """Rank-1 tensor of duals, for reading a binding back out."""
        t = Tensor.rank1(*(self.dual(n) for n in names))
        return t if repr == FACTORED else t.densify()

    def projector(self, names: Iterable[str]) -> np.ndarray:
        """``sum f f+^T`` over ``names``: oblique projector onto their span."""
        idx = [self.index(n) for n in names]
        if not idx:
            return np.zeros((self.d, self.d))
        return self.F[:, idx] @ self.duals[idx]

    def coordinates(self, t: Tensor, tol: float = 1e-9) -> dict:
        """Coefficients of ``t`` in the symbol product basis.

        Returns ``{(k0, k1, ...): value}`` for entries with ``|value| > tol``;
        components of ``t`` outside the span of the codes are ignored.
        """
        if t.order == 0:
            v = t.item()
            return {(): v} if abs(v) > tol else {}
        if not t.is_factored:
            a = t.to_array()
            for _ in range(t.order):
                a = np.tensordot(a, self.duals, axes=([0], [1]))
            idx = np.argwhere(np.abs(a) > tol)
            return {tuple(int(i) for i in row): float(a[tuple(row)]) for row in idx}
        proj = [f @ self.duals.T for f in t.factors]
        out = {}
        for term, c in enumerate(t.coefs):
            parts = []
            for p in proj:
                row = p[term]
                nz = np.flatnonzero(np.abs(row) > 1e-12)
                parts.append([(int(k), row[k]) for k in nz])
            for combo in _product(parts):
                key = tuple(k for k, _ in combo)
                val = c
                for _, x in combo:
                    val *= x
                out[key] = out.get(key, 0.0) + float(val)
        return {k: v for k, v in out.items() if abs(v) > tol}

    def from_coordinates(self, coords: dict, order: int, repr: str = FACTORED) -> Tensor:
        """Inverse of :meth:`coordinates`: ``sum value * f(k0) (x) f(k1) ...``."""
        keys = list(coords)
        if not keys:
            return Tensor.zeros((self.d,) * order, repr)
        idx = np.array(keys, dtype=int).reshape(len(keys), order)
        t = Tensor.factored(
            [coords[k] for k in keys],
            [self.F[:, idx[:, m]].T for m in range(order)],
            dims=(self.d,) * order,
        )
        return t if repr == FACTORED else t.densify()


def _sign_fix(F: np.ndarray) -> np.ndarray:
    F = np.array(F)
    for k in range(F.shape[1]):
        nz = np.flatnonzero(np.abs(F[:, k]) > 1e-12)
        if len(nz) and F[nz[0], k] < 0:
            F[:, k] = -F[:, k]
    return F


def _product(parts):
    if not parts:
        yield ()
        return
    for head in parts[0]:
        for rest in _product(parts[1:]):
            yield (head,) + rest


def decode(v, space: SymbolSpace, threshold: float = DEFAULT_THRESHOLD,
           candidates: Sequence[str] | None = None) -> list[tuple[str, float]]:
    """Rank symbols by ``duals @ v``; scores under ``threshold`` are dropped.

    An empty list means no symbol is present.
    """
    if isinstance(v, Tensor):
        if v.order != 1:
            raise ValueError(f"decode needs an order-1 tensor, got order {v.order}")
        v = v.to_array()
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (space.d,):
        raise DimensionError(f"vector of shape {v.shape} does not live in R^{space.d}")
    scores = space.duals @ v
    names = space.names if candidates is None else list(candidates)
    ranked = [(n, float(scores[space.index(n)])) for n in names]
    ranked = [r for r in ranked if r[1] >= threshold]
    ranked.sort(key=lambda r: (-r[1], space.index(r[0])))
    return ranked


__all__ = ["SymbolSpace", "Mode", "decode", "NULL", "DEFAULT_THRESHOLD", "DENSE", "FACTORED"]
