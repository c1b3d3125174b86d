"""Predicate-logic reasoning carried out on tensor product representations."""

from .errors import (
    DimensionError,
    FixpointError,
    InconsistentModelError,
    ModeIndexError,
    ModeMismatchError,
    ParseError,
    QueryError,
    TPRError,
    UnknownSymbolError,
)
from .inference import AxiomConfig, close_transitive, persistence_step, run_story, step, transitivity_step
from .kb import AT, PRECEDES, KnowledgeBase, Proposition, Timeline, build_time_operator, merge
from .lf import PathQuery, StoryFile, english_story, english_to_lf, parse_story, render
from .query import Atom, Query, compile_query, evaluate, truth_query
from .simplified import (
    Combiner,
    MatrixMemory,
    PathModel,
    build_path_model,
    find_paths,
    simplified_transitive,
    test_path,
)
from .symbols import NULL, Mode, SymbolSpace, decode
from .tensor import DENSE, FACTORED, Tensor, contract, contract_network, einsum, inner, outer

__version__ = "0.1.0"
