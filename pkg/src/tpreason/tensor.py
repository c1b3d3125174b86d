"""Order-n tensors over R^d, stored densely or as a sum of rank-1 terms.

A factored tensor stands for

    sum_t coefs[t] * factors[0][t] (x) factors[1][t] (x) ... (x) factors[n-1][t]

where ``factors[k]`` is an array of shape ``(n_terms, dims[k])``.  Every
operation accepts either representation and the results agree within
floating-point tolerance; factored operands are never expanded unless the
caller asks for ``to_array``.

Mode indices are 0-based throughout.
"""

from __future__ import annotations

import string
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import ModeIndexError, ModeMismatchError

DENSE = "dense"
FACTORED = "factored"
REPRS = (DENSE, FACTORED)

# a term is dropped when its magnitude is below this fraction of the largest term
DROP_RTOL = 1e-13

_LETTERS = string.ascii_letters


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class Tensor:
    """Immutable order-n tensor value.  Build with the classmethods."""

    __slots__ = ("dims", "_data", "_coefs", "_factors")

    def __init__(self, dims, data=None, coefs=None, factors=None):
        self.dims = tuple(int(x) for x in dims)
        if data is not None:
            data = _frozen(data)
            if data.shape != self.dims:
                raise ModeMismatchError(f"value array has shape {data.shape}, expected {self.dims}")
            self._data = data
            self._coefs = None
            self._factors = None
        else:
            coefs = _frozen(coefs if coefs is not None else []).reshape(-1)
            factors = list(factors)
            if len(factors) != len(self.dims):
                raise ModeMismatchError(
                    f"factored tensor of order {len(self.dims)} needs {len(self.dims)} factor arrays"
                )
            factors = tuple(_frozen(f).reshape(len(coefs), d) for f, d in zip(factors, self.dims))
            self._data = None
            self._coefs = coefs
            self._factors = factors

    # -- construction -----------------------------------------------------

    @classmethod
    def dense(cls, array) -> "Tensor":
        array = np.asarray(array, dtype=np.float64)
        return cls(array.shape, data=array)

    @classmethod
    def factored(cls, coefs, factors, dims=None) -> "Tensor":
        factors = [np.asarray(f, dtype=np.float64) for f in factors]
        coefs = np.asarray(coefs, dtype=np.float64).reshape(-1)
        if dims is None:
            dims = [f.shape[-1] for f in factors]
        for f, d in zip(factors, dims):
            if f.ndim != 2 or f.shape != (len(coefs), d):
                raise ModeMismatchError(
                    f"factor array has shape {f.shape}, expected {(len(coefs), d)}"
                )
        return cls(dims, coefs=coefs, factors=factors)

    @classmethod
    def rank1(cls, *vectors, coef: float = 1.0) -> "Tensor":
        """``coef * v0 (x) v1 (x) ...`` as a single factored term."""
        vecs = [np.asarray(v, dtype=np.float64).reshape(1, -1) for v in vectors]
        return cls([v.shape[1] for v in vecs], coefs=[coef], factors=vecs)

    @classmethod
    def scalar(cls, value: float, repr: str = DENSE) -> "Tensor":
        if repr == FACTORED:
            return cls((), coefs=[value], factors=[])
        return cls((), data=np.float64(value))

    @classmethod
    def zeros(cls, dims, repr: str = DENSE) -> "Tensor":
        dims = tuple(dims)
        if repr == FACTORED:
            return cls(dims, coefs=[], factors=[np.zeros((0, d)) for d in dims])
        return cls(dims, data=np.zeros(dims))

    # -- inspection -------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def repr(self) -> str:
        return DENSE if self._data is not None else FACTORED

    @property
    def is_factored(self) -> bool:
        return self._data is None

    @property
    def n_terms(self) -> int:
        if self._data is not None:
            raise TypeError("dense tensors have no term list")
        return len(self._coefs)

    @property
    def coefs(self) -> np.ndarray:
        if self._coefs is None:
            raise TypeError("dense tensors have no term list")
        return self._coefs

    @property
    def factors(self) -> tuple:
        if self._factors is None:
            raise TypeError("dense tensors have no term list")
        return self._factors

    def __repr__(self):
        if self.is_factored:
            return f"Tensor(factored, dims={self.dims}, terms={self.n_terms})"
        return f"Tensor(dense, dims={self.dims})"

    # -- conversion -------------------------------------------------------

    def to_array(self) -> np.ndarray:
        """Dense value array (a read-only copy for factored tensors)."""
        if self._data is not None:
            return self._data
        if self.order == 0:
            return np.float64(self._coefs.sum())
        letters = _LETTERS[1: self.order + 1]
        spec = "a," + ",".join("a" + c for c in letters) + "->" + letters
        return np.einsum(spec, self._coefs, *self._factors)

    def densify(self) -> "Tensor":
        if self._data is not None:
            return self
        return Tensor(self.dims, data=self.to_array())

    def to_factored(self, rtol: float = 1e-14) -> "Tensor":
        """Exact factored form of a dense tensor.

        Order 0-1 give one term, order 2 uses the SVD, higher orders fall back
        to one term per nonzero entry (only sensible at small sizes).
        """
        if self.is_factored:
            return self
        a = self._data
        if self.order == 0:
            return Tensor((), coefs=[float(a)], factors=[])
        if self.order == 1:
            return Tensor(self.dims, coefs=[1.0], factors=[a.reshape(1, -1)])
        if self.order == 2:
            u, s, vt = np.linalg.svd(a, full_matrices=False)
            keep = s > rtol * max(s.max(initial=0.0), 1e-300)
            return Tensor(self.dims, coefs=s[keep], factors=[u[:, keep].T, vt[keep]])
        idx = np.argwhere(a != 0)
        factors = []
        for k, d in enumerate(self.dims):
            f = np.zeros((len(idx), d))
            f[np.arange(len(idx)), idx[:, k]] = 1.0
            factors.append(f)
        return Tensor(self.dims, coefs=a[tuple(idx.T)], factors=factors)

    def as_repr(self, repr: str) -> "Tensor":
        if repr == DENSE:
            return self.densify()
        if repr == FACTORED:
            return self.to_factored()
        raise ValueError(f"unknown representation {repr!r}")

    def compress(self) -> "Tensor":
        """Merge terms with identical factors and drop negligible ones."""
        if not self.is_factored:
            return self
        if self.order == 0:
            return Tensor((), coefs=[self._coefs.sum()], factors=[])
        if self.n_terms == 0:
            return self
        key = np.hstack(self._factors)
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        coefs = np.zeros(len(uniq))
        np.add.at(coefs, inverse.reshape(-1), self._coefs)
        splits = np.cumsum(self.dims)[:-1]
        factors = np.split(uniq, splits, axis=1)
        return _drop_small(Tensor(self.dims, coefs=coefs, factors=factors))

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "Tensor") -> "Tensor":
        if not isinstance(other, Tensor):
            return NotImplemented
        if self.dims != other.dims:
            raise ModeMismatchError(f"cannot add tensors of dims {self.dims} and {other.dims}")
        if self.is_factored and other.is_factored:
            return Tensor(
                self.dims,
                coefs=np.concatenate([self._coefs, other._coefs]),
                factors=[np.vstack([a, b]) for a, b in zip(self._factors, other._factors)],
            )
        return Tensor(self.dims, data=self.to_array() + other.to_array())

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self + (-other)

    def __mul__(self, scale) -> "Tensor":
        if isinstance(scale, Tensor):
            return NotImplemented
        scale = float(scale)
        if self.is_factored:
            return Tensor(self.dims, coefs=self._coefs * scale, factors=self._factors)
        return Tensor(self.dims, data=self._data * scale)

    __rmul__ = __mul__

    def __truediv__(self, scale) -> "Tensor":
        return self * (1.0 / float(scale))

    def item(self) -> float:
        if self.order != 0:
            raise ValueError(f"item() needs an order-0 tensor, got order {self.order}")
        return float(self.to_array())

    def norm(self) -> float:
        """Frobenius norm; factored tensors use the term Gram matrix."""
        if not self.is_factored:
            return float(np.linalg.norm(self._data))
        if self.n_terms == 0:
            return 0.0
        gram = np.ones((self.n_terms, self.n_terms))
        for f in self._factors:
            gram *= f @ f.T
        val = float(self._coefs @ gram @ self._coefs)
        return float(np.sqrt(max(val, 0.0)))

    def allclose(self, other: "Tensor", atol: float = 1e-9) -> bool:
        if self.dims != other.dims:
            return False
        return bool(np.allclose(self.to_array(), other.to_array(), rtol=0.0, atol=atol))

    def mode_product(self, mode: int, matrix) -> "Tensor":
        """Apply ``matrix`` along one mode: ``out[.., i, ..] = sum_j M[i, j] T[.., j, ..]``."""
        _check_mode(self, mode)
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != self.dims[mode]:
            raise ModeMismatchError(f"matrix of shape {m.shape} cannot act on mode of size {self.dims[mode]}")
        dims = list(self.dims)
        dims[mode] = m.shape[0]
        if self.is_factored:
            factors = list(self._factors)
            factors[mode] = factors[mode] @ m.T
            return Tensor(dims, coefs=self._coefs, factors=factors)
        out = np.tensordot(m, self._data, axes=([1], [mode]))
        return Tensor(dims, data=np.moveaxis(out, 0, mode))

    def transpose(self, perm: Sequence[int]) -> "Tensor":
        perm = list(perm)
        if sorted(perm) != list(range(self.order)):
            raise ModeIndexError(f"{perm} is not a permutation of {self.order} modes")
        dims = [self.dims[p] for p in perm]
        if self.is_factored:
            return Tensor(dims, coefs=self._coefs, factors=[self._factors[p] for p in perm])
        return Tensor(dims, data=np.transpose(self._data, perm))


def _check_mode(t: Tensor, mode: int) -> None:
    if not 0 <= mode < t.order:
        raise ModeIndexError(f"mode {mode} out of range for order-{t.order} tensor")


def _drop_small(t: Tensor) -> Tensor:
    if t.order == 0 or t.n_terms == 0:
        return t
    mag = np.abs(t.coefs).copy()
    for f in t.factors:
        mag *= np.linalg.norm(f, axis=1)
    top = mag.max()
    keep = mag > DROP_RTOL * top if top > 0 else np.zeros(len(mag), dtype=bool)
    if keep.all():
        return t
    return Tensor(t.dims, coefs=t.coefs[keep], factors=[f[keep] for f in t.factors])


# -- the three primitive operations ---------------------------------------


def outer(u: Tensor, v: Tensor) -> Tensor:
    """Tensor product; factored inputs give a factored result."""
    dims = u.dims + v.dims
    if u.is_factored and v.is_factored:
        nu, nv = u.n_terms, v.n_terms
        coefs = np.outer(u.coefs, v.coefs).reshape(-1)
        factors = [np.repeat(f, nv, axis=0) for f in u.factors]
        factors += [np.tile(f, (nu, 1)) for f in v.factors]
        return Tensor(dims, coefs=coefs, factors=factors)
    return Tensor(dims, data=np.multiply.outer(u.to_array(), v.to_array()))


def contract(t: Tensor, j: int, k: int) -> Tensor:
    """Sum over the diagonal of modes ``j`` and ``k``; both modes are removed."""
    if t.order < 2:
        raise ModeIndexError("contraction needs a tensor of order >= 2")
    _check_mode(t, j)
    _check_mode(t, k)
    if j == k:
        raise ModeIndexError("cannot contract a mode with itself")
    if t.dims[j] != t.dims[k]:
        raise ModeMismatchError(f"modes {j} and {k} have sizes {t.dims[j]} and {t.dims[k]}")
    labels = list(range(t.order))
    labels[k] = labels[j]
    output = [lab for m, lab in enumerate(labels) if m not in (j, k)]
    return contract_network([t], [labels], output)


def inner(u: Tensor, v: Tensor, pairs: Iterable[tuple[int, int]]) -> Tensor:
    """Contract ``outer(u, v)`` over every ``(mode of u, mode of v)`` pair.

    The outer product is never formed.  Remaining modes of ``u`` come first,
    then the remaining modes of ``v``, each in their original order.
    """
    pairs = [(int(a), int(b)) for a, b in pairs]
    seen_u, seen_v = set(), set()
    for a, b in pairs:
        _check_mode(u, a)
        _check_mode(v, b)
        if a in seen_u or b in seen_v:
            raise ModeIndexError(f"mode repeated in pairs {pairs}")
        seen_u.add(a)
        seen_v.add(b)
        if u.dims[a] != v.dims[b]:
            raise ModeMismatchError(f"paired modes ({a}, {b}) have sizes {u.dims[a]} and {v.dims[b]}")
    lu = list(range(u.order))
    lv = list(range(u.order, u.order + v.order))
    for a, b in pairs:
        lv[b] = lu[a]
    output = [lab for m, lab in enumerate(lu) if m not in seen_u]
    output += [lab for m, lab in enumerate(lv) if m not in seen_v]
    return _contract_pair(u, lu, v, lv, set(output))[0]


# -- label-based networks (einsum) -----------------------------------------


def einsum(subscripts: str, *operands: Tensor, path=None) -> Tensor:
    """``numpy.einsum``-style contraction over :class:`Tensor` operands."""
    subscripts = subscripts.replace(" ", "")
    if "->" in subscripts:
        lhs, out = subscripts.split("->")
    else:
        lhs = subscripts
        counts = {}
        for c in lhs.replace(",", ""):
            counts[c] = counts.get(c, 0) + 1
        out = "".join(sorted(c for c, n in counts.items() if n == 1))
    terms = lhs.split(",")
    if len(terms) != len(operands):
        raise ValueError(f"{len(terms)} subscript groups for {len(operands)} operands")
    return contract_network(list(operands), [list(t) for t in terms], list(out), path=path)


def greedy_path(labels: Sequence[Sequence[Hashable]], output: Sequence[Hashable],
                sizes: dict) -> list[tuple[int, int]]:
    """Pairwise contraction order, smallest intermediate first.

    Pairs sharing a label are preferred; disconnected operands are joined
    last.  Each step ``(i, j)`` removes operands ``i`` and ``j`` from the
    working list and appends their product at the end.
    """
    work = [list(x) for x in labels]
    out = set(output)
    path = []
    while len(work) > 1:
        best = None
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                shared = set(work[i]) & set(work[j])
                others = set()
                for k, lab in enumerate(work):
                    if k not in (i, j):
                        others.update(lab)
                keep = out | others
                res = [x for x in dict.fromkeys(work[i] + work[j]) if x in keep or x not in shared]
                cost = 1
                for x in res:
                    cost *= sizes[x]
                rank = (0 if shared else 1, cost, i, j)
                if best is None or rank < best[0]:
                    best = (rank, res)
        (_, _, i, j), res = best
        work = [w for k, w in enumerate(work) if k not in (i, j)] + [res]
        path.append((i, j))
    return path


def contract_network(operands: Sequence[Tensor], labels: Sequence[Sequence[Hashable]],
                     output: Sequence[Hashable], path=None) -> Tensor:
    """Contract a network in Einstein-summation form.

    A label shared by several modes sets those indices equal; labels absent
    from ``output`` are summed.  Contraction proceeds pairwise in ``path``
    order (default ``greedy_path``).
    """
    operands = list(operands)
    labels = [list(x) for x in labels]
    output = list(output)
    if len(operands) != len(labels):
        raise ValueError("one label list per operand required")
    if len(set(output)) != len(output):
        raise ModeIndexError(f"output labels repeated: {output}")
    sizes = {}
    for t, lab in zip(operands, labels):
        if len(lab) != t.order:
            raise ModeIndexError(f"{len(lab)} labels for an order-{t.order} tensor")
        for x, d in zip(lab, t.dims):
            if sizes.setdefault(x, d) != d:
                raise ModeMismatchError(f"label {x!r} used with sizes {sizes[x]} and {d}")
    for x in output:
        if x not in sizes:
            raise ModeIndexError(f"output label {x!r} does not occur in any operand")
    if not operands:
        return Tensor.scalar(1.0)

    out = set(output)

    def keep_for(k, work_labels):
        keep = set(out)
        for m, lab in enumerate(work_labels):
            if m != k:
                keep.update(lab)
        return keep

    work = []
    for k, (t, lab) in enumerate(zip(operands, labels)):
        work.append(_reduce_single(t, lab, keep_for(k, labels)))
    if path is None:
        path = greedy_path([w[1] for w in work], output, sizes)
    for i, j in path:
        (a, la), (b, lb) = work[i], work[j]
        rest = [w for k, w in enumerate(work) if k not in (i, j)]
        keep = set(out)
        for _, lab in rest:
            keep.update(lab)
        work = rest + [_contract_pair(a, la, b, lb, keep)]
    while len(work) > 1:
        (a, la), (b, lb) = work[0], work[1]
        work = [(outer(a, b), la + lb)] + work[2:]
    t, lab = _reduce_single(work[0][0], work[0][1], out)
    return t.transpose([lab.index(x) for x in output])


def _letters(*label_lists):
    table = {}
    for lab in label_lists:
        for x in lab:
            if x not in table:
                if len(table) >= len(_LETTERS):
                    raise ValueError("too many distinct labels for one contraction")
                table[x] = _LETTERS[len(table)]
    return table


def _reduce_single(t: Tensor, labels: list, keep: set):
    """Merge repeated labels of one operand and sum labels nobody else needs."""
    res = [x for x in dict.fromkeys(labels) if x in keep]
    if res == labels:
        return t, labels
    if not t.is_factored:
        table = _letters(labels)
        spec = "".join(table[x] for x in labels) + "->" + "".join(table[x] for x in res)
        return Tensor([t.dims[labels.index(x)] for x in res], data=np.einsum(spec, t.to_array())), res
    coefs = np.array(t.coefs)
    factors = []
    for x in dict.fromkeys(labels):
        cols = [t.factors[m] for m, y in enumerate(labels) if y == x]
        f = cols[0]
        for g in cols[1:]:
            f = f * g
        if x in keep:
            factors.append(f)
        else:
            coefs = coefs * f.sum(axis=1)
    dims = [f.shape[1] for f in factors]
    return _drop_small(Tensor(dims, coefs=coefs, factors=factors)), res


def _contract_pair(a: Tensor, la: list, b: Tensor, lb: list, keep: set):
    """Contract two operands; shared labels in ``keep`` survive as one mode."""
    shared = [x for x in la if x in lb]
    summed = [x for x in shared if x not in keep]
    res = [x for x in la if x not in summed] + [x for x in lb if x not in la]
    if a.is_factored != b.is_factored:
        if (b if a.is_factored else a).order <= 2:
            a, b = a.to_factored(), b.to_factored()
        else:
            a, b = a.densify(), b.densify()
    if not a.is_factored:
        table = _letters(la, lb)
        spec = ("".join(table[x] for x in la) + "," + "".join(table[x] for x in lb)
                + "->" + "".join(table[x] for x in res))
        data = np.einsum(spec, a.to_array(), b.to_array(), optimize=True)
        return Tensor([_size(x, a, la, b, lb) for x in res], data=data), res

    w = np.outer(a.coefs, b.coefs)
    for x in summed:
        w = w * (a.factors[la.index(x)] @ b.factors[lb.index(x)].T)
    # upper bound on each resulting term's magnitude, for dropping negligible terms
    mag = np.abs(w)
    for m, x in enumerate(la):
        if x not in summed:
            mag = mag * np.linalg.norm(a.factors[m], axis=1)[:, None]
    for m, x in enumerate(lb):
        if x not in summed:
            mag = mag * np.linalg.norm(b.factors[m], axis=1)[None, :]
    top = mag.max(initial=0.0)
    ii, jj = np.nonzero(mag > DROP_RTOL * top) if top > 0 else (np.array([], int), np.array([], int))
    factors = []
    for x in res:
        if x in la and x in lb:
            factors.append(a.factors[la.index(x)][ii] * b.factors[lb.index(x)][jj])
        elif x in la:
            factors.append(a.factors[la.index(x)][ii])
        else:
            factors.append(b.factors[lb.index(x)][jj])
    dims = [_size(x, a, la, b, lb) for x in res]
    return Tensor(dims, coefs=w[ii, jj], factors=factors), res


def _size(x, a, la, b, lb):
    if x in la:
        return a.dims[la.index(x)]
    return b.dims[lb.index(x)]
