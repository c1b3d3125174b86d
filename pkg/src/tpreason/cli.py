"""``tpr``: run story files through the tensor engine, the simplified models, or the oracle."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import oracle
from .errors import DimensionError, InconsistentModelError, ParseError
from .inference import AxiomConfig, step, timeline_for
from .kb import AT, KnowledgeBase
from .lf import PathQuery, english_story, load_templates, parse_story, render, render_query
from .query import evaluate
from .simplified import DIRECTIONS, MatrixMemory, build_path_model, find_paths
from .symbols import SymbolSpace
from .tensor import DENSE, FACTORED

EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_CONFIG = 0, 1, 2, 3
MODES = ("full", "simplified", "pathfind", "oracle")
SCORE_DIGITS = 6


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    dim: int = 32
    seed: int = 0
    mode: str = "full"
    repr: str = FACTORED
    threshold: float = 0.5
    max_path_len: int = 2
    format: str = "text"
    check_oracle: bool = False
    english: bool = False
    templates: str | None = None
    collisions: str = "error"


@dataclass
class QueryResult:
    query_index: int
    text: str
    variables: list
    answers: list                 # [(binding tuple, score or None)]
    oracle_match: bool | None = None
    is_path: bool = False


# -- engines --------------------------------------------------------------


def _round(x):
    if x is None:
        return None
    x = round(float(x), SCORE_DIGITS)
    return 0.0 if x == 0 else x


def _direction_facts(story, upto):
    return [p for s in story.sentences[:upto] for p in s if p.pred in DIRECTIONS]


def _path_answers(story, item, cfg):
    facts = _direction_facts(story, item.at)
    q = item.query
    try:
        model = build_path_model(facts, cfg.dim, cfg.seed)
    except (DimensionError, InconsistentModelError) as e:
        raise ConfigError(str(e)) from None
    if q.start not in model.loc_vecs or q.goal not in model.loc_vecs:
        return []
    return [(tuple(p), None) for p in find_paths(model, q.start, q.goal, cfg.max_path_len)]


def _oracle_answers(story, item, space_names, cfg):
    q = item.query
    if isinstance(q, PathQuery):
        facts = [(p.pred, p.args[0], p.args[1]) for p in _direction_facts(story, item.at)]
        paths = oracle.path_closure(facts, cfg.max_path_len)
        return [(tuple(p), None) for p in oracle.answer_path(paths, q.start, q.goal, cfg.max_path_len)]
    g = oracle.closure(story.story(item.at))
    g.times = tuple(f"t{i}" for i in range(1, story.m + 1))
    found = oracle.answer(g, q, universe=space_names)
    return [(b, None) for b in sorted(found)]


def _space(story, cfg) -> SymbolSpace:
    names = story.symbols()
    if len(names) > cfg.dim:
        raise ConfigError(f"{len(names)} symbols need --dim >= {len(names)}, got {cfg.dim}")
    return SymbolSpace.build(names, cfg.dim, seed=cfg.seed)


def _snapshots(story, space, cfg, ats):
    """Knowledge bases after each timestep in ``ats``."""
    out = {}
    need = sorted(set(ats))
    if cfg.mode == "simplified":
        for p in (p for s in story.sentences for p in s):
            if p.pred != AT and p.pred not in DIRECTIONS:
                raise ConfigError(f"simplified mode stores only {AT} facts, got {p}")
        mem = MatrixMemory(space=space, threshold=cfg.threshold)
        timeline = timeline_for(story.m, space)
        for i in range(0, story.m + 1):
            if i:
                mem = mem.step([p for p in story.sentences[i - 1] if p.pred == AT])
            if i in need:
                out[i] = mem.to_kb(timeline, cfg.repr)
        return out
    kb = KnowledgeBase.empty(space, timeline_for(story.m, space), cfg.repr)
    axioms = AxiomConfig(threshold=cfg.threshold)
    for i in range(0, story.m + 1):
        if i:
            kb = step(kb, i, story.sentences[i - 1], axioms)
        if i in need:
            out[i] = kb
    return out


def run_story_file(story, cfg: RunConfig) -> list:
    """Answer every query of ``story``; returns a list of QueryResult."""
    results = []
    tensor_items = [it for it in story.queries if not isinstance(it.query, PathQuery)]
    needs_space = cfg.mode in ("full", "simplified") and bool(tensor_items)
    space = _space(story, cfg) if needs_space else None
    names = space.names if space is not None else story.symbols()
    if cfg.mode == "pathfind" and tensor_items:
        raise ConfigError("pathfind mode answers only PATH queries")
    snaps = _snapshots(story, space, cfg, [it.at for it in tensor_items]) if needs_space else {}
    for k, item in enumerate(story.queries):
        q = item.query
        if isinstance(q, PathQuery):
            variables = [q.var]
            if cfg.mode == "oracle":
                answers = _oracle_answers(story, item, names, cfg)
            else:
                answers = _path_answers(story, item, cfg)
        else:
            variables = list(q.query_vars)
            if cfg.mode == "oracle":
                answers = _oracle_answers(story, item, names, cfg)
            else:
                ans = evaluate(snaps[item.at], q, threshold=cfg.threshold)
                answers = [(b, s) for b, s in ans.bindings]
        res = QueryResult(k, render_query(q)[len("QUERY "):], variables, answers, is_path=isinstance(q, PathQuery))
        if cfg.check_oracle:
            expect = _oracle_answers(story, item, names, cfg)
            res.oracle_match = {b for b, _ in answers} == {b for b, _ in expect}
        results.append(res)
    return results


# -- output ---------------------------------------------------------------


def format_text(path, story, results) -> str:
    lines = [f"== {path}"]
    for r in results:
        lines.append(f"[{r.query_index}] QUERY {r.text}")
        if not r.answers:
            lines.append("  false" if not r.variables else "  no answer")
        for binding, score in r.answers:
            sc = "" if score is None else f" score={_round(score):.6f}"
            if r.is_path:
                lines.append(f"  {r.variables[0]} = [{', '.join(binding)}]")
                continue
            if not r.variables:
                lines.append(f"  true{sc}")
                continue
            parts = []
            for v, b in zip(r.variables, binding):
                g = story.gloss(b)
                parts.append(f"{v} = {b}" + (f" ({g})" if g else ""))
            lines.append("  " + ", ".join(parts) + sc)
        if r.oracle_match is not None:
            lines.append("  oracle: " + ("MATCH" if r.oracle_match else "MISMATCH"))
    return "\n".join(lines) + "\n"


def format_json(path, results) -> str:
    out = []
    for r in results:
        rec = {
            "query_index": r.query_index,
            "variables": r.variables,
            "answers": [{"binding": list(b), "score": _round(s)} for b, s in r.answers],
        }
        if r.oracle_match is not None:
            rec["oracle_match"] = r.oracle_match
        rec["story"] = str(path)
        out.append(json.dumps(rec, ensure_ascii=False))
    return "".join(line + "\n" for line in out)


# -- driver ---------------------------------------------------------------


def _load(path, cfg: RunConfig):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    if cfg.english:
        templates = None
        if cfg.templates:
            try:
                templates = load_templates(Path(cfg.templates).read_text(encoding="utf-8"))
            except OSError as e:
                raise ConfigError(f"cannot read {cfg.templates}: {e.strerror}") from None
        return english_story(text, templates, cfg.collisions)
    return parse_story(text)


def process(path, cfg: RunConfig) -> tuple:
    """``(exit code, report text, stderr text)`` for one story file."""
    try:
        story = _load(path, cfg)
        results = run_story_file(story, cfg)
    except ParseError as e:
        return EXIT_PARSE, "", f"{path}: {e}\n"
    except (ConfigError, DimensionError, InconsistentModelError) as e:
        return EXIT_CONFIG, "", f"{path}: {e}\n"
    report = format_json(path, results) if cfg.format == "json" else format_text(path, story, results)
    bad = any(r.oracle_match is False for r in results)
    return (EXIT_MISMATCH if bad else EXIT_OK), report, ""


def _process_star(args):
    return process(*args)


def build_parser() -> argparse.ArgumentParser:
    env_seed = os.environ.get("TPR_SEED")
    p = argparse.ArgumentParser(prog="tpr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="answer the queries in story files")
    r.add_argument("files", nargs="+")
    r.add_argument("--mode", choices=MODES, default="full")
    r.add_argument("--dim", type=int, default=32)
    r.add_argument("--seed", type=int, default=None,
                   help="symbol/model seed (default: $TPR_SEED, else 0)")
    r.add_argument("--repr", choices=(FACTORED, DENSE), default=FACTORED)
    r.add_argument("--threshold", type=float, default=0.5)
    r.add_argument("--max-path-len", type=int, default=2)
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.add_argument("--check-oracle", action="store_true")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--english", action="store_true", help="inputs are English, translated by templates")
    r.add_argument("--templates", default=None, help="template table file (with --english)")
    r.add_argument("--collisions", choices=("error", "next"), default="error")
    r.set_defaults(env_seed=env_seed)

    sub.add_parser("render", help="print a story file in canonical form").add_argument("file")
    t = sub.add_parser("translate", help="translate an English story to logical form")
    t.add_argument("file")
    t.add_argument("--templates", default=None)
    t.add_argument("--collisions", choices=("error", "next"), default="error")
    return p


def _config(args) -> RunConfig:
    seed = args.seed
    if seed is None:
        try:
            seed = int(args.env_seed) if args.env_seed is not None else 0
        except ValueError:
            raise ConfigError(f"TPR_SEED must be an integer, got {args.env_seed!r}") from None
    if args.dim < 1:
        raise ConfigError("--dim must be positive")
    if args.max_path_len < 0:
        raise ConfigError("--max-path-len must be non-negative")
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return RunConfig(dim=args.dim, seed=seed, mode=args.mode, repr=args.repr,
                     threshold=args.threshold, max_path_len=args.max_path_len,
                     format=args.format, check_oracle=args.check_oracle,
                     english=args.english, templates=args.templates,
                     collisions=args.collisions)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("render", "translate"):
        cfg = RunConfig(english=args.command == "translate",
                        templates=getattr(args, "templates", None),
                        collisions=getattr(args, "collisions", "error"))
        try:
            sys.stdout.write(render(_load(args.file, cfg)))
        except ParseError as e:
            sys.stderr.write(f"{args.file}: {e}\n")
            return EXIT_PARSE
        except ConfigError as e:
            sys.stderr.write(f"{e}\n")
            return EXIT_CONFIG
        return EXIT_OK
    try:
        cfg = _config(args)
    except ConfigError as e:
        sys.stderr.write(f"tpr: {e}\n")
        return EXIT_CONFIG
    jobs = [(f, cfg) for f in args.files]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_process_star, jobs))
    else:
        outcomes = [process(*j) for j in jobs]
    code = EXIT_OK
    for rc, out, err in outcomes:
        sys.stdout.write(out)
        sys.stderr.write(err)
        # the most severe outcome wins: config > parse > mismatch
        code = max(code, rc, key=lambda c: (EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_CONFIG).index(c))
    return code


if __name__ == "__main__":
    sys.exit(main())
