"""Line-oriented logical-form story files and a template English front end.

Story file lines (``#`` starts a comment)::

    SYMBOLS a=apple, j=john            glosses for output
    SORT location = f, k               a named set of symbols
    FACT @(a, j)                       next timestep; time argument implicit
    FACT ~@(a, j) @ t=4                explicit timestep
    QUERY ?x : EXISTS ?t, ?u : @(a, k, ?u) & @(a, ?x, ?t) & <(?t, ?u) WHERE ?x != k, ?x IN location
    QUERY ?P : PATH(g, b)

Each FACT line without ``@ t=K`` opens the next timestep.  A missing third
argument is the fact's own time symbol, or ``∅`` for the untimed
predicates.  Queries do not consume timesteps; a query is answered against
the story as it stands at the point where it appears.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import ParseError
from .kb import PRECEDES, Proposition, time_name
from .query import NEXT, UNTIMED, Atom, Query, Var
from .symbols import NULL

KEYWORDS = ("SYMBOLS", "SORT", "FACT", "QUERY")
DIRECTION_WORDS = {"north": "n", "south": "s", "east": "e", "west": "w"}
RESERVED = frozenset(DIRECTION_WORDS.values())

_TOKEN = re.compile(
    r"\s*(?:(?P<var>\?[A-Za-z_]\w*)|(?P<op>!=|[(),:&~={}])|(?P<ident>[^\s(),:&~={}?!#]+))"
)


@dataclass(frozen=True)
class PathQuery:
    """``O P. P(start, goal)``: directions that lead to ``goal`` from ``start``."""

    var: str
    start: str
    goal: str

    def __str__(self):
        return f"?{self.var} : PATH({self.start}, {self.goal})"


@dataclass(frozen=True)
class QueryItem:
    query: object                 # Query or PathQuery
    at: int                       # timesteps told before the query
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StoryFile:
    sentences: tuple = ()         # sentences[i - 1] holds the propositions of t_i
    queries: tuple = ()
    glosses: dict = field(default_factory=dict)
    sorts: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.sentences)

    def story(self, upto: int | None = None) -> list:
        return [list(s) for s in self.sentences[:upto]]

    def symbols(self) -> list:
        """Every symbol the story or its queries mention, plus time codes and ``∅``."""
        names = {NULL}
        names.update(time_name(i) for i in range(1, self.m + 1))
        if self.m >= 2:
            names.add(PRECEDES)
        for s in self.sentences:
            for p in s:
                names.update(p.key)
        for item in self.queries:
            q = item.query
            if isinstance(q, PathQuery):
                names.update((q.start, q.goal))
                continue
            for a in q.atoms:
                if a.pred != NEXT:
                    names.add(a.pred)
                names.update(x for x in a.args if not isinstance(x, Var))
            for _, vals in q.exclude + q.restrict:
                names.update(vals)
            if any(a.pred in UNTIMED for a in q.atoms):
                names.add(NULL)
        for vals in self.sorts.values():
            names.update(vals)
        names.update(self.glosses)
        return sorted(names)

    def gloss(self, name: str) -> str | None:
        return self.glosses.get(name)


# -- tokenizing -----------------------------------------------------------


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


class _Line:
    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.toks = []
        pos = 0
        text = text.rstrip("\n")
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                raise ParseError(f"unexpected character {text[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            if kind is None:
                break
            self.toks.append(_Tok(kind, m.group(kind), m.start(kind) + 1))
            pos = m.end()
        self.i = 0
        self.end_col = len(text) + 1

    def peek(self, text=None):
        if self.i >= len(self.toks):
            return None
        t = self.toks[self.i]
        if text is not None and t.text != text:
            return None
        return t

    def error(self, msg):
        col = self.toks[self.i].col if self.i < len(self.toks) else self.end_col
        return ParseError(msg, self.lineno, col)

    def take(self, kind=None, text=None) -> _Tok:
        t = self.peek()
        if t is None:
            want = text or kind or "token"
            raise self.error(f"expected {want!r}, got end of line")
        if (kind and t.kind != kind) or (text and t.text != text):
            raise self.error(f"expected {text or kind!r}, got {t.text!r}")
        self.i += 1
        return t

    def accept(self, text) -> bool:
        if self.peek(text):
            self.i += 1
            return True
        return False

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def expect_end(self):
        if not self.done():
            raise self.error(f"unexpected {self.toks[self.i].text!r}")


def _ident_list(ln: _Line) -> list:
    out = [ln.take("ident").text]
    while ln.accept(","):
        out.append(ln.take("ident").text)
    return out


def _var_list(ln: _Line) -> list:
    out = [ln.take("var").text[1:]]
    while ln.accept(","):
        out.append(ln.take("var").text[1:])
    return out


# -- parsing --------------------------------------------------------------


class _State:
    def __init__(self):
        self.sentences = {}
        self.queries = []
        self.glosses = {}
        self.sorts = {}
        self.clock = 0


def _parse_fact(ln: _Line, st: _State) -> None:
    sign = -1 if ln.accept("~") else 1
    pred_tok = ln.take("ident")
    ln.take(text="(")
    args = _ident_list(ln)
    close = ln.take(text=")")
    if len(args) > 3:
        raise ParseError(f"{pred_tok.text} has {len(args)} arguments; at most 3 allowed",
                         ln.lineno, pred_tok.col)
    if len(args) < 2:
        raise ParseError(f"{pred_tok.text} needs at least 2 arguments", ln.lineno, pred_tok.col)
    if ln.accept("@"):
        ln.take(text="t")
        ln.take(text="=")
        num = ln.take("ident")
        if not num.text.isdigit() or int(num.text) < 1:
            raise ParseError(f"bad timestep {num.text!r}", ln.lineno, num.col)
        t = int(num.text)
    else:
        t = st.clock + 1
    ln.expect_end()
    st.clock = max(st.clock, t)
    if len(args) == 2:
        args.append(NULL if pred_tok.text in UNTIMED else time_name(t))
    try:
        prop = Proposition(pred_tok.text, tuple(args), sign)
    except ValueError as e:
        raise ParseError(str(e), ln.lineno, close.col) from None
    st.sentences.setdefault(t, []).append(prop)


def _parse_atom(ln: _Line) -> Atom:
    pred = ln.take("ident")
    ln.take(text="(")
    args = []
    while True:
        t = ln.take()
        if t.kind == "var":
            args.append(Var(t.text[1:]))
        elif t.kind == "ident":
            args.append(t.text)
        else:
            raise ParseError(f"expected a term, got {t.text!r}", ln.lineno, t.col)
        if not ln.accept(","):
            break
    ln.take(text=")")
    if len(args) > 3:
        raise ParseError(f"{pred.text} has {len(args)} arguments; at most 3 allowed", ln.lineno, pred.col)
    if pred.text == NEXT and len(args) != 2:
        raise ParseError(f"{NEXT} takes exactly 2 arguments", ln.lineno, pred.col)
    if len(args) < 2:
        raise ParseError(f"{pred.text} needs at least 2 arguments", ln.lineno, pred.col)
    return Atom(pred.text, tuple(args))


def _parse_query(ln: _Line, st: _State) -> None:
    qvars = _var_list(ln) if ln.peek() is not None and ln.peek().kind == "var" else []
    ln.take(text=":")
    evars = []
    if ln.accept("EXISTS"):
        evars = _var_list(ln)
        ln.take(text=":")
    if ln.peek("PATH") and len(ln.toks) > ln.i + 1 and ln.toks[ln.i + 1].text == "(":
        ln.take(text="PATH")
        ln.take(text="(")
        a = ln.take("ident").text
        ln.take(text=",")
        b = ln.take("ident").text
        ln.take(text=")")
        ln.expect_end()
        if len(qvars) != 1 or evars:
            raise ParseError("a PATH query has exactly one query variable", ln.lineno, 1)
        st.queries.append(QueryItem(PathQuery(qvars[0], a, b), st.clock, ln.lineno))
        return
    atoms = [_parse_atom(ln)]
    while ln.accept("&"):
        atoms.append(_parse_atom(ln))
    exclude, restrict = {}, {}
    if ln.accept("WHERE"):
        while True:
            v = ln.take("var")
            name = v.text[1:]
            if name not in qvars:
                raise ParseError(f"?{name} is not a query variable", ln.lineno, v.col)
            if ln.accept("!="):
                exclude.setdefault(name, []).append(ln.take("ident").text)
            elif ln.accept("IN"):
                if ln.accept("{"):
                    vals = _ident_list(ln)
                    ln.take(text="}")
                else:
                    s = ln.take("ident")
                    if s.text not in st.sorts:
                        raise ParseError(f"unknown sort {s.text!r}", ln.lineno, s.col)
                    vals = list(st.sorts[s.text])
                if name in restrict:
                    vals = [x for x in restrict[name] if x in vals]
                restrict[name] = vals
            else:
                raise ln.error("expected '!=' or 'IN'")
            if not ln.accept(","):
                break
    ln.expect_end()
    declared = set(qvars) | set(evars)
    if len(declared) != len(qvars) + len(evars):
        raise ParseError("a variable is declared twice", ln.lineno, 1)
    used = set()
    for a in atoms:
        for v in a.variables:
            if v not in declared:
                raise ParseError(f"?{v} is not declared", ln.lineno, 1)
            used.add(v)
    unused = declared - used
    if unused:
        raise ParseError(f"?{sorted(unused)[0]} appears in no atom", ln.lineno, 1)
    q = Query(tuple(qvars), tuple(evars), tuple(atoms),
              exclude={k: tuple(v) for k, v in exclude.items()},
              restrict={k: tuple(v) for k, v in restrict.items()})
    st.queries.append(QueryItem(q, st.clock, ln.lineno))


def _parse_line(ln: _Line, st: _State) -> None:
    head = ln.take("ident")
    if head.text == "FACT":
        _parse_fact(ln, st)
    elif head.text == "QUERY":
        _parse_query(ln, st)
    elif head.text == "SYMBOLS":
        while True:
            sym = ln.take("ident").text
            ln.take(text="=")
            st.glosses[sym] = ln.take("ident").text
            if not ln.accept(","):
                break
        ln.expect_end()
    elif head.text == "SORT":
        name = ln.take("ident").text
        ln.take(text="=")
        st.sorts[name] = tuple(_ident_list(ln)) if not ln.done() else ()
        ln.expect_end()
    else:
        raise ParseError(f"unknown line type {head.text!r}; expected one of {', '.join(KEYWORDS)}",
                         ln.lineno, head.col)


def parse_story(text: str) -> StoryFile:
    st = _State()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        _parse_line(_Line(line, lineno), st)
    m = max(st.sentences, default=0)
    m = max(m, st.clock)
    sentences = tuple(tuple(st.sentences.get(i, ())) for i in range(1, m + 1))
    return StoryFile(sentences=sentences, queries=tuple(st.queries),
                     glosses=dict(st.glosses), sorts=dict(st.sorts))


def load_story(path) -> StoryFile:
    return parse_story(Path(path).read_text(encoding="utf-8"))


# -- rendering ------------------------------------------------------------


def _render_prop(p: Proposition, t: int) -> str:
    args = list(p.args)
    implicit = NULL if p.pred in UNTIMED else time_name(t)
    if args[2] == implicit:
        args = args[:2]
    neg = "~" if p.sign < 0 else ""
    return f"{neg}{p.pred}({', '.join(args)})"


def _render_term(a) -> str:
    return f"?{a.name}" if isinstance(a, Var) else a


def render_query(q) -> str:
    if isinstance(q, PathQuery):
        return f"QUERY ?{q.var} : PATH({q.start}, {q.goal})"
    s = "QUERY "
    if q.query_vars:
        s += ", ".join("?" + v for v in q.query_vars) + " "
    s += ": "
    if q.exist_vars:
        s += "EXISTS " + ", ".join("?" + v for v in q.exist_vars) + " : "
    s += " & ".join(f"{a.pred}({', '.join(_render_term(x) for x in a.args)})" for a in q.atoms)
    conds = []
    for v, names in q.exclude:
        conds.extend(f"?{v} != {n}" for n in names)
    for v, names in q.restrict:
        conds.append(f"?{v} IN {{{', '.join(names)}}}")
    if conds:
        s += " WHERE " + ", ".join(conds)
    return s


def render(story: StoryFile) -> str:
    """Canonical text for ``story``; ``parse_story(render(s)) == s``."""
    lines = []
    if story.glosses:
        lines.append("SYMBOLS " + ", ".join(f"{k}={v}" for k, v in story.glosses.items()))
    for name, vals in story.sorts.items():
        lines.append(f"SORT {name} = " + ", ".join(vals))
    by_time = {}
    for item in story.queries:
        by_time.setdefault(item.at, []).append(item.query)
    lines.extend(render_query(q) for q in by_time.get(0, []))
    clock = 0
    for t, sentence in enumerate(story.sentences, start=1):
        for p in sentence:
            body = "FACT " + _render_prop(p, t)
            if t != clock + 1:
                body += f" @ t={t}"
            clock = max(clock, t)
            lines.append(body)
        lines.extend(render_query(q) for q in by_time.get(t, []))
    return "\n".join(lines) + "\n"


# -- English templates ----------------------------------------------------

BUILTIN_TEMPLATES = """\
# pattern -> logical form; {X} is a noun slot, {X:sort} also files it under a sort
{X} picked up (a|an|the) {Y} -> FACT @({Y}, {X})
{X} got (a|an|the) {Y} -> FACT @({Y}, {X})
{X} went to the {Y:location} -> FACT @({X}, {Y})
{X} travelled to the {Y:location} -> FACT @({X}, {Y})
{X} moved to the {Y:location} -> FACT @({X}, {Y})
{X} journeyed to the {Y:location} -> FACT @({X}, {Y})
{X} dropped the {Y} -> FACT ~@({Y}, {X})
{X} put down the {Y} -> FACT ~@({Y}, {X})
The {X:location} is {D:direction} of the {Y:location} -> FACT {D}({X}, {Y})
Where was the {X} before the {Y:location}? -> QUERY ?x : EXISTS ?t, ?u : @({X}, {Y}, ?u) & @({X}, ?x, ?t) & <(?t, ?u) WHERE ?x != {Y}, ?x IN location
How do you go from the {X:location} to the {Y:location}? -> QUERY ?P : PATH({X}, {Y})
"""

_SLOT = re.compile(r"^\{(\w+)(?::(\w+))?\}$")
_ALT = re.compile(r"^\(([\w|]+)\)$")


@dataclass(frozen=True)
class Template:
    pattern: str
    lf: str
    regex: re.Pattern
    slots: tuple                  # (name, sort or None)

    @classmethod
    def compile(cls, pattern: str, lf: str) -> "Template":
        parts, slots = [], []
        for word in re.sub(r"[.?!]$", "", pattern.strip()).split():
            m = _SLOT.match(word)
            if m:
                parts.append(f"(?P<{m.group(1)}>[A-Za-z]+)")
                slots.append((m.group(1), m.group(2)))
                continue
            m = _ALT.match(word)
            if m:
                parts.append("(?:" + "|".join(re.escape(w) for w in m.group(1).split("|")) + ")")
            else:
                parts.append(re.escape(word))
        regex = re.compile(r"\s+".join(parts), re.IGNORECASE)
        return cls(pattern, lf.strip(), regex, tuple(slots))


def load_templates(text: str | None = None) -> list:
    """Parse a template table; ``None`` gives the built-ins."""
    text = BUILTIN_TEMPLATES if text is None else text
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ParseError("template rule needs 'pattern -> LF'", lineno, 1)
        pat, lf = line.split("->", 1)
        out.append(Template.compile(pat, lf))
    return out


class Lexicon:
    """Noun to symbol assignment: the noun's first letter, lowercased.

    ``collisions="error"`` refuses a letter that is taken or reserved for a
    direction; ``collisions="next"`` takes the next free letter instead.
    """

    def __init__(self, collisions: str = "error", glosses: dict | None = None):
        if collisions not in ("error", "next"):
            raise ValueError("collisions must be 'error' or 'next'")
        self.collisions = collisions
        self.symbols = {}
        self.glosses = {}
        self.sorts = {}
        for sym, word in (glosses or {}).items():
            self.symbols[word.lower()] = sym
            self.glosses[sym] = word.lower()

    def symbol(self, word: str) -> str:
        word = word.lower()
        if word in self.symbols:
            return self.symbols[word]
        taken = set(self.glosses) | RESERVED
        sym = word[0]
        if sym in taken:
            if self.collisions == "error":
                owner = self.glosses.get(sym, "a direction")
                raise ParseError(f"{word!r} would get symbol {sym!r}, already used by {owner!r}")
            sym = self._next_free(sym, taken)
        self.symbols[word] = sym
        self.glosses[sym] = word
        return sym

    @staticmethod
    def _next_free(start: str, taken: set) -> str:
        letters = "abcdefghijklmnopqrstuvwxyz"
        k = letters.index(start) if start in letters else 0
        for j in range(1, 27):
            c = letters[(k + j) % 26]
            if c not in taken:
                return c
        n = 2
        while f"{start}{n}" in taken:
            n += 1
        return f"{start}{n}"

    def add_sort(self, sort: str, sym: str) -> None:
        vals = self.sorts.setdefault(sort, [])
        if sym not in vals:
            vals.append(sym)


def _fill(template: Template, m: re.Match, lexicon: Lexicon) -> str:
    values = {}
    for name, sort in template.slots:
        word = m.group(name)
        if sort == "direction":
            if word.lower() not in DIRECTION_WORDS:
                return None
            values[name] = DIRECTION_WORDS[word.lower()]
            continue
        sym = lexicon.symbol(word)
        if sort:
            lexicon.add_sort(sort, sym)
        values[name] = sym
    return re.sub(r"\{(\w+)\}", lambda g: values.get(g.group(1), g.group(0)), template.lf)


def english_line_to_lf(line: str, templates=None, lexicon: Lexicon | None = None) -> str | None:
    """LF line for ``line`` from the first matching template, or ``None``."""
    templates = load_templates() if templates is None else templates
    lexicon = Lexicon() if lexicon is None else lexicon
    text = re.sub(r"[.?!]\s*$", "", line.strip())
    for t in templates:
        m = t.regex.fullmatch(text)
        if m:
            out = _fill(t, m, lexicon)
            if out is not None:
                return out
    return None


def english_to_lf(line: str, templates=None, lexicon: Lexicon | None = None, i: int = 1):
    """Proposition (at timestep ``i``), Query, PathQuery, or ``None`` for no match."""
    lexicon = Lexicon() if lexicon is None else lexicon
    lf = english_line_to_lf(line, templates, lexicon)
    if lf is None:
        return None
    head = [f"SORT {k} = " + ", ".join(v) for k, v in lexicon.sorts.items()]
    story = parse_story("\n".join(head + [lf +
                                          (f" @ t={i}" if lf.startswith("FACT") else "")]))
    if story.queries:
        return story.queries[0].query
    return story.sentences[i - 1][0]


def english_story(text: str, templates=None, collisions: str = "error") -> StoryFile:
    """Translate an English story line by line; LF lines pass through unchanged.

    A line that matches no template is an error, since guessing would
    silently change the story.
    """
    templates = load_templates() if templates is None else templates
    lines = text.splitlines()
    glosses = {}
    # SYMBOLS lines seed the lexicon before anything is translated
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("SYMBOLS"):
            st = _State()
            _parse_line(_Line(line, lineno), st)
            glosses.update(st.glosses)
    lexicon = Lexicon(collisions, glosses)
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.split()[0] in KEYWORDS:
            if not line.startswith("SYMBOLS"):
                out.append(line)
            continue
        try:
            lf = english_line_to_lf(line, templates, lexicon)
        except ParseError as e:
            raise ParseError(e.args[0], lineno, 1) from None
        if lf is None:
            raise ParseError(f"no template matches {line!r}", lineno, 1)
        out.append(lf)
    head = []
    if lexicon.glosses:
        head.append("SYMBOLS " + ", ".join(f"{k}={v}" for k, v in lexicon.glosses.items()))
    head.extend(f"SORT {k} = " + ", ".join(v) for k, v in lexicon.sorts.items())
    return parse_story("\n".join(head + out))
