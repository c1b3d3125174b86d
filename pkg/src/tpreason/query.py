"""Conjunctive queries compiled to contraction plans over copies of ``B``.

A query ``Ox1.. E e1.. . p1(v..) & p2(v..) & ... & [slot = slot] ...`` becomes
a tensor network: one copy of ``B`` per atom, the constant slots contracted
with their symbol duals, and every variable an index shared by the slots it
fills.  Free indices are the query variables; everything else is summed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import QueryError
from .kb import KnowledgeBase, Proposition
from .symbols import DEFAULT_THRESHOLD, NULL, Mode, SymbolSpace
from .tensor import FACTORED, Tensor, contract_network, greedy_path, inner

# pseudo-predicate for the time-increment operator: NEXT(t, u) holds iff u = T t
NEXT = "NEXT"
# predicates whose missing third argument is the dummy symbol
UNTIMED = frozenset({"<", "n", "s", "e", "w"})


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __post_init__(self):
        args = tuple(Var(a[1:]) if isinstance(a, str) and a.startswith("?") else a for a in self.args)
        object.__setattr__(self, "args", args)

    @property
    def variables(self):
        return [a.name for a in self.args if isinstance(a, Var)]

    def __str__(self):
        return f"{self.pred}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Query:
    """Query variables, existential variables, atoms, and slot equalities.

    A slot is ``(atom index, argument index)``, both 0-based.  ``exclude``
    and ``restrict`` map a query variable to symbol names it may not / must
    take; both are realized as projections of the answer.
    """

    query_vars: tuple
    exist_vars: tuple
    atoms: tuple
    equalities: tuple = ()
    exclude: tuple = ()
    restrict: tuple = ()

    def __post_init__(self):
        for name in ("query_vars", "exist_vars", "atoms", "equalities"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "exclude", _pairs(self.exclude))
        object.__setattr__(self, "restrict", _pairs(self.restrict))

    @property
    def exclusions(self) -> dict:
        return dict(self.exclude)

    @property
    def restrictions(self) -> dict:
        return dict(self.restrict)

    def with_exclusions(self, extra: dict) -> "Query":
        merged = dict(self.exclude)
        for v, names in extra.items():
            merged[v] = tuple(dict.fromkeys(tuple(merged.get(v, ())) + tuple(names)))
        return Query(self.query_vars, self.exist_vars, self.atoms, self.equalities,
                     merged, self.restrict)

    def __str__(self):
        s = ", ".join("?" + v for v in self.query_vars)
        if self.exist_vars:
            s += " : EXISTS " + ", ".join("?" + v for v in self.exist_vars)
        return s + " : " + " & ".join(str(a) for a in self.atoms)


def _pairs(mapping) -> tuple:
    if isinstance(mapping, dict):
        mapping = mapping.items()
    return tuple((v, tuple(names)) for v, names in mapping)


@dataclass(frozen=True)
class Operand:
    kind: str              # "B" (knowledge-base copy), "T" (time increment) or "COPY" (symbol copy tensor)
    constants: tuple       # (mode, symbol) pairs contracted with duals
    labels: tuple          # index label of each remaining mode


@dataclass(frozen=True)
class ContractionPlan:
    query: Query
    operands: tuple
    output: tuple
    path: tuple
    joins: tuple           # slot pairs tied by a shared index

    def describe(self) -> str:
        lines = []
        for k, op in enumerate(self.operands):
            consts = ", ".join(f"mode{m}={c}" for m, c in op.constants)
            lines.append(f"[{k}] {op.kind} consts({consts}) free{list(op.labels)}")
        lines.append(f"joins {list(self.joins)}")
        lines.append(f"path {list(self.path)} -> {list(self.output)}")
        return "\n".join(lines)


def normalize(q: Query) -> Query:
    """Pad 2-argument atoms: ``∅`` for untimed predicates, a fresh time variable otherwise."""
    atoms, extra = [], []
    for atom in q.atoms:
        if atom.pred == NEXT:
            if len(atom.args) != 2:
                raise QueryError(f"{NEXT} takes 2 arguments")
            atoms.append(atom)
            continue
        args = list(atom.args)
        if len(args) > 3 or len(args) < 2:
            raise QueryError(f"atom {atom} must have 2 or 3 arguments")
        if len(args) == 2:
            if atom.pred in UNTIMED:
                args.append(NULL)
            else:
                v = f"_t{len(atoms)}"
                extra.append(v)
                args.append(Var(v))
        atoms.append(Atom(atom.pred, tuple(args)))
    return Query(q.query_vars, tuple(q.exist_vars) + tuple(extra), tuple(atoms),
                 q.equalities, q.exclude, q.restrict)


def compile_query(q: Query) -> ContractionPlan:
    q = normalize(q)
    declared = set(q.query_vars) | set(q.exist_vars)
    if len(declared) != len(q.query_vars) + len(q.exist_vars):
        raise QueryError("a variable is declared twice")
    occurrences = {}
    for k, atom in enumerate(q.atoms):
        for i, a in enumerate(atom.args):
            if isinstance(a, Var):
                if a.name not in declared:
                    raise QueryError(f"unbound variable ?{a.name}")
                occurrences.setdefault(a.name, []).append((k, i))
    for v in declared:
        if v not in occurrences:
            raise QueryError(f"variable ?{v} occurs in no atom")
    for v in list(q.exclusions) + list(q.restrictions):
        if v not in q.query_vars:
            raise QueryError(f"constraint on ?{v}, which is not a query variable")

    parent = {}

    def find(s):
        while parent.setdefault(s, s) != s:
            s = parent[s]
        return s

    joins = []
    for v, occ in occurrences.items():
        for a, b in zip(occ, occ[1:]):
            joins.append((a, b))
    for a, b in q.equalities:
        for k, i in (a, b):
            if not (0 <= k < len(q.atoms)) or not (0 <= i < len(q.atoms[k].args)):
                raise QueryError(f"equality references missing slot {(k, i)}")
            if not isinstance(q.atoms[k].args[i], Var):
                raise QueryError(f"equality references constant slot {(k, i)}")
        joins.append((tuple(a), tuple(b)))
    for v, occ in occurrences.items():
        for s in occ:
            find(s)
    for a, b in joins:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    classes = {}
    for k, atom in enumerate(q.atoms):
        for i, a in enumerate(atom.args):
            if isinstance(a, Var):
                classes.setdefault(find((k, i)), []).append((k, i))

    output_of = {}
    for v in q.query_vars:
        root = find(occurrences[v][0])
        if root in output_of:
            raise QueryError(f"query variables tied together by an equality: ?{v}")
        output_of[root] = ("out", v)

    # A class joined in exactly two slots and summed is a plain shared index
    # (the pairwise delta join), and a query variable in a single slot is a
    # plain free index.  Any other class is tied through a copy tensor
    # sum_k f_k+ (x) ... (x) f_k+ (with f_k on its output mode), which
    # ranges over symbols rather than raw vector components.
    slot_label, copies = {}, []
    for root, slots in classes.items():
        out = output_of.get(root)
        if (out is None and len(slots) == 2) or (out is not None and len(slots) == 1):
            for s_ in slots:
                slot_label[s_] = root
            output_of[root] = root if out is not None else None
            continue
        for s_ in slots:
            slot_label[s_] = s_
        labels = tuple(slots) + ((out,) if out is not None else ())
        copies.append(Operand("COPY", (), labels))
    output = [output_of[find(occurrences[v][0])] for v in q.query_vars]

    operands = []
    for k, atom in enumerate(q.atoms):
        consts, labels = [], []
        if atom.pred == NEXT:
            # T[later, earlier]
            slots = [(1, atom.args[1]), (0, atom.args[0])]
            for mode, (i, a) in enumerate(slots):
                if isinstance(a, Var):
                    labels.append(slot_label[(k, i)])
                else:
                    consts.append((mode, a))
            operands.append(Operand("T", tuple(consts), tuple(labels)))
            continue
        consts.append((0, atom.pred))
        for i, a in enumerate(atom.args):
            if isinstance(a, Var):
                labels.append(slot_label[(k, i)])
            else:
                consts.append((i + 1, a))
        operands.append(Operand("B", tuple(consts), tuple(labels)))
    operands.extend(copies)

    # unit-free cost: every index counts the same, so fewer open indices wins
    sizes = {lab: 2 for op in operands for lab in op.labels}
    path = greedy_path([list(op.labels) for op in operands], output, sizes)
    return ContractionPlan(q, tuple(operands), tuple(output), tuple(path), tuple(joins))


def _operand_tensor(op: Operand, kb: KnowledgeBase) -> Tensor:
    space = kb.space
    if op.kind == "COPY":
        n, r = len(space), len(op.labels)
        factors = [space.duals] * r
        if op.labels and op.labels[-1][0] == "out":
            factors[-1] = space.F.T
        return Tensor.factored(np.ones(n), factors, dims=(space.d,) * r).as_repr(kb.repr)
    if op.kind == "B":
        t = kb.B
    else:
        if kb.timeline is None:
            mat = np.zeros((space.d, space.d))
        else:
            mat = kb.timeline.Tmat
        t = Tensor.dense(mat).as_repr(kb.repr)
    for mode, name in sorted(op.constants, reverse=True):
        t = inner(t, Tensor.rank1(space.dual(name)).as_repr(kb.repr), [(mode, 0)])
    return t


def execute(plan: ContractionPlan, kb: KnowledgeBase) -> Tensor:
    """Raw answer tensor: one mode per query variable, in declaration order."""
    if kb.space.mode is not Mode.ORTHONORMAL:
        raise QueryError("query joins need orthonormal symbol codes")
    tensors = [_operand_tensor(op, kb) for op in plan.operands]
    return contract_network(tensors, [list(op.labels) for op in plan.operands],
                            list(plan.output), path=list(plan.path))


def project_answer(ans: Tensor, q: Query, space: SymbolSpace) -> Tensor:
    """Apply the restrict / exclude projections to each query-variable mode."""
    eye = np.eye(space.d)
    for m, v in enumerate(q.query_vars):
        P = eye
        if v in q.restrictions:
            P = space.projector(q.restrictions[v]) @ P
        if v in q.exclusions:
            P = (eye - space.projector(q.exclusions[v])) @ P
        if P is not eye:
            ans = ans.mode_product(m, P)
    return ans


@dataclass
class Answer:
    query_vars: tuple
    bindings: list               # [(tuple of symbol names, score)], best first
    tensor: Tensor = field(repr=False)

    @property
    def truth(self) -> float:
        return self.tensor.item()

    def binding_set(self) -> set:
        return {b for b, _ in self.bindings}

    def best(self):
        return self.bindings[0] if self.bindings else None


def decode_answer(ans: Tensor, space: SymbolSpace, threshold: float = DEFAULT_THRESHOLD,
                  top_s: int | None = None) -> list:
    """Bindings scoring at least ``threshold``, best first.

    Reads every nonzero coordinate of the answer tensor in the symbol basis,
    so no binding is missed however many candidates a mode has.  ``top_s``
    optionally caps the number of bindings returned.
    """
    if ans.order == 0:
        val = ans.item()
        return [((), val)] if val >= threshold else []
    out = [(tuple(space.names[k] for k in key), score)
           for key, score in space.coordinates(ans).items() if score >= threshold]
    out.sort(key=lambda b: (-b[1], [space.index(n) for n in b[0]]))
    return out if top_s is None else out[:top_s]


def evaluate(kb: KnowledgeBase, q: Query, exclusions: dict | None = None,
             threshold: float = DEFAULT_THRESHOLD, top_s: int | None = None,
             plan: ContractionPlan | None = None) -> Answer:
    if exclusions:
        q = q.with_exclusions(exclusions)
    if plan is None:
        plan = compile_query(q)
    ans = project_answer(execute(plan, kb), q, kb.space)
    bindings = decode_answer(ans, kb.space, threshold, top_s)
    return Answer(tuple(q.query_vars), bindings, ans)


def truth_query(kb: KnowledgeBase, atom: Atom) -> float:
    """Truth score of a ground atom, through the same plan machinery."""
    return evaluate(kb, Query((), (), (atom,)), threshold=-np.inf).truth
