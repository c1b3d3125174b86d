"""Reduced encodings: matrix memory, contracted three-place binding, path model.

* ``MatrixMemory`` drops the ``@`` factor and replaces time codes by memory
  slots; slot ``i`` is a d x d matrix and transitive inference is a matrix
  product.
* ``Combiner`` packs two entity vectors into one, ``g o k = R0 g + R1 k``,
  with exact unbinding maps on the entity subspace.
* ``PathModel`` encodes ``d(x, y)`` as ``x = D y`` with direction matrices,
  so the inverse and composition rules hold by linear algebra.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InconsistentModelError, UnknownSymbolError
from .kb import AT, PRECEDES, KnowledgeBase, Proposition, time_name
from .symbols import NULL, SymbolSpace
from .tensor import FACTORED, Tensor

DIRECTIONS = ("n", "s", "e", "w")
INVERSE = {"n": "s", "s": "n", "e": "w", "w": "e"}
PATH_TOL = 1e-6


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, signs fixed by R's diagonal)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def simplified_transitive(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``X Y``: from ``x m^T`` and ``m y^T`` derive ``x y^T``."""
    return np.asarray(X) @ np.asarray(Y)


# -- matrix memory --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixMemory:
    """One d x d matrix per sentence; ``slots[i-1]`` holds the facts at ``t_i``.

    Entries are read in symbol coordinates: ``x+ . M . y+`` is the truth
    of ``@(x, y)`` in that slot.
    """

    space: SymbolSpace
    slots: tuple = ()
    threshold: float = 0.5
    max_fixpoint_iters: int = 16

    def _entry(self, M, x, y) -> float:
        return float(self.space.dual(x) @ M @ self.space.dual(y))

    def holds(self, i: int, x: str, y: str) -> float:
        return self._entry(self.slots[i - 1], x, y)

    def _tell(self, M, p: Proposition) -> np.ndarray:
        x, y = p.args[0], p.args[1]
        target = 1.0 if p.sign > 0 else 0.0
        delta = target - self._entry(M, x, y)
        return M + delta * np.outer(self.space.vector(x), self.space.vector(y))

    def _close(self, M) -> np.ndarray:
        F, D = self.space.F, self.space.duals
        for _ in range(self.max_fixpoint_iters):
            cand = D @ simplified_transitive(M, M) @ D.T
            have = D @ M @ D.T
            add = np.where((cand > self.threshold) & (have < self.threshold), 1.0 - have, 0.0)
            if not add.any():
                return M
            M = M + F @ add @ F.T
        raise RuntimeError("matrix-memory closure did not converge")

    def step(self, sentence: Sequence[Proposition]) -> "MatrixMemory":
        """Append slot ``t_i``: copy ``t_{i-1}``, apply the sentence, close transitively."""
        d = self.space.d
        M = self.slots[-1].copy() if self.slots else np.zeros((d, d))
        for p in sentence:
            if p.pred != AT:
                raise ValueError(f"matrix memory stores only {AT} facts, got {p}")
            M = self._tell(M, p)
        M = self._close(M)
        M.setflags(write=False)
        return replace(self, slots=self.slots + (M,))

    @classmethod
    def run(cls, story: Sequence[Sequence[Proposition]], space: SymbolSpace,
            threshold: float = 0.5) -> "MatrixMemory":
        mem = cls(space=space, threshold=threshold)
        for sentence in story:
            mem = mem.step(sentence)
        return mem

    def to_kb(self, timeline=None, repr: str = FACTORED) -> KnowledgeBase:
        """Re-attach ``@`` and the time codes: the full order-4 knowledge base."""
        from .inference import timeline_for

        sp = self.space
        m = len(self.slots)
        if timeline is None:
            timeline = timeline_for(m, sp)
        kb = KnowledgeBase.empty(sp, timeline, repr)
        D = sp.duals
        coords = {}
        for i, M in enumerate(self.slots, start=1):
            c = D @ M @ D.T
            ti = sp.index(time_name(i))
            for x, y in np.argwhere(np.abs(c) > 1e-9):
                coords[(sp.index(AT), int(x), int(y), ti)] = float(c[x, y])
            if i >= 2:
                coords[(sp.index(PRECEDES), sp.index(time_name(i - 1)), ti, sp.index(NULL))] = 1.0
        B = sp.from_coordinates(coords, 4, repr)
        shadow = Counter({tuple(sp.names[k] for k in key): 1 for key, v in coords.items() if v > 0.5})
        return replace(kb, B=B.compress(), shadow=shadow)


# -- contracted three-place binding --------------------------------------


@dataclass(frozen=True, eq=False)
class Combiner:
    """``g o k = R0 g + R1 k`` on the span ``E`` of ``n <= d/2`` entity vectors.

    ``R0`` sends entity ``l`` to column ``l`` of a random orthogonal matrix
    and ``R1`` sends it to column ``m + l``, so the two images are jointly
    orthonormal.  ``R0plus`` maps column ``l`` back to entity ``l`` and kills
    the ``R1`` block, and vice versa.
    """

    d: int
    entities: np.ndarray       # d x n, one column per entity
    R0: np.ndarray
    R1: np.ndarray
    R0plus: np.ndarray
    R1plus: np.ndarray

    @classmethod
    def build(cls, entities: np.ndarray, seed: int = 0) -> "Combiner":
        E = np.asarray(entities, dtype=np.float64)
        d, n = E.shape
        if d % 2:
            raise DimensionError(f"dimension must be even, got {d}")
        m = d // 2
        if n > m:
            raise DimensionError(f"{n} entities need d >= {2 * n}, got {d}")
        if np.linalg.matrix_rank(E) < n:
            raise DimensionError("entity vectors are not linearly independent")
        Q = random_orthogonal(d, np.random.default_rng(seed))
        Epinv = np.linalg.pinv(E)
        R0 = Q[:, :n] @ Epinv
        R1 = Q[:, m:m + n] @ Epinv
        R0plus = E @ Q[:, :n].T
        R1plus = E @ Q[:, m:m + n].T
        c = cls(d=d, entities=E, R0=R0, R1=R1, R0plus=R0plus, R1plus=R1plus)
        c._check_generic()
        return c

    def _check_generic(self) -> None:
        n = self.entities.shape[1]
        images = np.hstack([self.R0 @ self.entities, self.R1 @ self.entities])
        if np.linalg.matrix_rank(self.R0 @ self.entities) < n or \
                np.linalg.matrix_rank(self.R1 @ self.entities) < n:
            raise DimensionError("role maps are singular on the entity subspace")
        if np.linalg.matrix_rank(images) < 2 * n:
            raise DimensionError("role images of the entities are not jointly independent")

    def combine(self, g, k) -> np.ndarray:
        return self.R0 @ np.asarray(g, dtype=np.float64) + self.R1 @ np.asarray(k, dtype=np.float64)

    def split(self, v) -> tuple:
        v = np.asarray(v, dtype=np.float64)
        return self.R0plus @ v, self.R1plus @ v


def bind_event(actor, combined) -> np.ndarray:
    """``a (g o k)^T``: an actor bound to a packed pair of fillers."""
    return np.outer(actor, combined)


def unbind_actor(M: np.ndarray, probe) -> np.ndarray:
    """``probe^T M``; for ``M = m v^T`` this is ``(probe . m) v``."""
    return np.asarray(probe) @ M


def actor_score(M: np.ndarray, probe, combined) -> float:
    """Scalar factor left after unbinding: 1 for the bound actor, 0 for an orthogonal one."""
    v = np.asarray(combined, dtype=np.float64)
    return float(unbind_actor(M, probe) @ v / (v @ v))


# -- path model -----------------------------------------------------------


@dataclass(frozen=True)
class DirectionFact:
    """``direction(x, y)``: ``x`` is one step in ``direction`` from ``y``."""

    direction: str
    x: str
    y: str

    def __post_init__(self):
        if self.direction not in INVERSE:
            raise ValueError(f"unknown direction {self.direction!r}")

    def __str__(self):
        return f"{self.direction}({self.x}, {self.y})"


@dataclass(frozen=True, eq=False)
class PathModel:
    loc_vecs: dict
    N: np.ndarray
    E: np.ndarray
    S: np.ndarray
    W: np.ndarray
    facts: tuple = ()

    def matrix(self, direction: str) -> np.ndarray:
        return {"n": self.N, "s": self.S, "e": self.E, "w": self.W}[direction]

    def path_matrix(self, path: Sequence[str]) -> np.ndarray:
        """``D_n ... D_1`` for ``path = [d_n, ..., d_1]``; the last entry is the first step."""
        d = self.N.shape[0]
        P = np.eye(d)
        for step in path:
            P = P @ self.matrix(step)
        return P

    def vector(self, loc: str) -> np.ndarray:
        try:
            return self.loc_vecs[loc]
        except KeyError:
            raise UnknownSymbolError(loc) from None

    @property
    def locations(self) -> tuple:
        return tuple(self.loc_vecs)


def _as_fact(f) -> DirectionFact:
    if isinstance(f, DirectionFact):
        return f
    if isinstance(f, Proposition):
        return DirectionFact(f.pred, f.args[0], f.args[1])
    return DirectionFact(*f)


def _commuting_rotations(d: int, rng) -> tuple:
    Q = random_orthogonal(d, rng)
    mats = []
    for _ in range(2):
        R = np.zeros((d, d))
        for k in range(0, d - 1, 2):
            a = rng.uniform(0.3, np.pi - 0.3)
            R[k:k + 2, k:k + 2] = [[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]
        if d % 2:
            R[-1, -1] = 1.0
        mats.append(Q @ R @ Q.T)
    return tuple(mats)


def build_path_model(facts: Iterable, d: int, seed: int = 0,
                     commuting: bool = False, check_ranges: bool = False) -> PathModel:
    """Place every location so each stated ``D(x, y)`` reads ``x = D y``.

    Each connected component starts from a random unit root and is filled
    in breadth-first.  By default N and E are independent random orthogonal
    matrices, so only fact graphs without cycles are consistent; with
    ``commuting=True`` they are rotations in shared planes, which makes
    grid-shaped maps consistent.

    ``check_ranges`` also demands that ``N L`` and ``E L`` span independent
    subspaces.  That fails as soon as one room is both north of one room and
    east of another, so it is off by default.
    """
    facts = tuple(_as_fact(f) for f in facts)
    locs = list(dict.fromkeys(loc for f in facts for loc in (f.x, f.y)))
    if 2 * len(locs) > d:
        raise DimensionError(f"{len(locs)} locations need d >= {2 * len(locs)}, got {d}")
    rng = np.random.default_rng(seed)
    if commuting:
        N, E = _commuting_rotations(d, rng)
    else:
        N = random_orthogonal(d, rng)
        E = random_orthogonal(d, rng)
    mats = {"n": N, "s": N.T, "e": E, "w": E.T}

    # x = D y and y = D^-1 x for every fact
    edges = {loc: [] for loc in locs}
    for f in facts:
        edges[f.y].append((f.x, f.direction))
        edges[f.x].append((f.y, INVERSE[f.direction]))

    vecs = {}
    for root in locs:
        if root in vecs:
            continue
        r = rng.standard_normal(d)
        vecs[root] = r / np.linalg.norm(r)
        queue = deque([root])
        while queue:
            y = queue.popleft()
            for x, direction in edges[y]:
                v = mats[direction] @ vecs[y]
                if x in vecs:
                    gap = np.linalg.norm(vecs[x] - v)
                    if gap > PATH_TOL:
                        raise InconsistentModelError(
                            f"{direction}({x}, {y}) conflicts with an earlier placement (gap {gap:.3g})")
                else:
                    vecs[x] = v
                    queue.append(x)

    for v in vecs.values():
        v.setflags(write=False)
    model = PathModel(loc_vecs=vecs, N=N, E=E, S=N.T, W=E.T, facts=facts)
    if check_ranges and locs:
        X = np.column_stack([vecs[loc] for loc in locs])
        if np.linalg.matrix_rank(np.hstack([N @ X, E @ X]), tol=1e-8) < 2 * len(locs):
            raise DimensionError("north and east images of the locations are not independent")
    return model


def test_path(model: PathModel, path: Sequence[str], u: str, v: str) -> tuple:
    """Does ``path`` lead to ``v`` from ``u``?  Returns ``(ok, residual)``."""
    res = float(np.linalg.norm(model.vector(v) - model.path_matrix(path) @ model.vector(u)))
    return res < PATH_TOL, res


test_path.__test__ = False  # not a pytest test


def reduced_words(max_len: int):
    """Direction words up to ``max_len`` with no step undone by the next, shortest first."""
    yield ()
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for dname in DIRECTIONS:
                if w and INVERSE[w[-1]] == dname:
                    continue
                nxt.append(w + (dname,))
        yield from nxt
        layer = nxt


def find_paths(model: PathModel, u: str, v: str, max_len: int = 2) -> list:
    """Every non-backtracking path of length <= ``max_len`` from ``u`` to ``v``.

    Paths are written last-step first, like ``p[d_n, ..., d_1]``, and sorted
    shortest first, then in n, s, e, w order.  A word and its reverse share
    a backtracking pair iff either does, so the filter is order-independent.
    """
    model.vector(u), model.vector(v)
    return [list(w) for w in reduced_words(max_len) if test_path(model, w, u, v)[0]]
