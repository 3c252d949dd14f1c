"""MTL abstract syntax, concrete-syntax parser, NNF transform and horizon bounds.

Formulas are immutable trees of predicates and temporal/logical operators.
Temporal operators carry closed intervals in seconds; an interval with
``hi=None`` is unbounded (only legal on ``Globally``).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Literal, Optional

__all__ = [
    "Interval",
    "UNBOUNDED",
    "MTLFormula",
    "Pred",
    "Not",
    "And",
    "Or",
    "Implies",
    "Globally",
    "Eventually",
    "Until",
    "PredicateOccurrence",
    "MTLSyntaxError",
    "UnsupportedFragmentError",
    "HorizonError",
    "parse",
    "to_nnf",
    "horizon",
    "horizon_seconds",
    "classify_occurrences",
    "format_formula",
    "predicate_names",
    "is_globally_conjunction_fragment",
]


class MTLSyntaxError(ValueError):
    """Concrete-syntax error with 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedFragmentError(ValueError):
    """Raised for formulas outside the supported fragment (e.g. negated Until)."""


class HorizonError(ValueError):
    """Raised when a formula has no finite horizon bound."""


@dataclass(frozen=True)
class Interval:
    """Closed time interval [lo, hi] in seconds; ``hi=None`` means unbounded."""

    lo: float
    hi: Optional[float]

    def __post_init__(self) -> None:
        if self.lo < 0:
            raise ValueError(f"interval lower bound must be >= 0, got {self.lo}")
        if self.hi is not None and self.hi < self.lo:
            raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")

    @property
    def bounded(self) -> bool:
        return self.hi is not None

    def __str__(self) -> str:
        if self.hi is None:
            return f"[{self.lo:g},inf)"
        return f"[{self.lo:g},{self.hi:g}]"


UNBOUNDED = Interval(0.0, None)


class MTLFormula:
    """Base class for all formula nodes."""

    def children(self) -> tuple["MTLFormula", ...]:
        return ()


@dataclass(frozen=True)
class Pred(MTLFormula):
    name: str
    span: Optional[tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not(MTLFormula):
    child: MTLFormula

    def children(self) -> tuple[MTLFormula, ...]:
        return (self.child,)


@dataclass(frozen=True)
class And(MTLFormula):
    terms: tuple[MTLFormula, ...]

    def children(self) -> tuple[MTLFormula, ...]:
        return self.terms


@dataclass(frozen=True)
class Or(MTLFormula):
    terms: tuple[MTLFormula, ...]

    def children(self) -> tuple[MTLFormula, ...]:
        return self.terms


@dataclass(frozen=True)
class Implies(MTLFormula):
    lhs: MTLFormula
    rhs: MTLFormula

    def children(self) -> tuple[MTLFormula, ...]:
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Globally(MTLFormula):
    interval: Interval
    child: MTLFormula

    def children(self) -> tuple[MTLFormula, ...]:
        return (self.child,)


@dataclass(frozen=True)
class Eventually(MTLFormula):
    interval: Interval
    child: MTLFormula

    def children(self) -> tuple[MTLFormula, ...]:
        return (self.child,)


@dataclass(frozen=True)
class Until(MTLFormula):
    interval: Interval
    lhs: MTLFormula
    rhs: MTLFormula

    def children(self) -> tuple[MTLFormula, ...]:
        return (self.lhs, self.rhs)


Polarity = Literal["safe", "unsafe"]


@dataclass(frozen=True)
class PredicateOccurrence:
    """One predicate leaf of an NNF formula, numbered left to right."""

    name: str
    polarity: Polarity
    occurrence_id: int


# ---------------------------------------------------------------------------
# Parser
#
# formula  := implies
# implies  := or ("->" implies)?
# or       := and ("|" and)*
# and      := unary ("&" unary)*
# unary    := "!" unary | "G" interval? unary | "F" interval? unary
#           | "(" formula ("U" interval formula)? ")" | ident
# interval := "[" number "," number "]"
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<punct>[!&|()\[\],])
    """,
    re.VERBOSE,
)

_RESERVED = {"G", "F", "U"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "op" | "eof"
    text: str
    pos: int
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MTLSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        if m.lastgroup == "ws":
            line += m.group().count("\n")
            if "\n" in m.group():
                line_start = m.start() + m.group().rfind("\n") + 1
        else:
            kind = m.lastgroup if m.lastgroup in ("number", "ident") else "op"
            tokens.append(_Token(kind, m.group(), m.start(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text), line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, tok: Optional[_Token] = None) -> MTLSyntaxError:
        tok = tok or self.cur
        return MTLSyntaxError(message, tok.line, tok.column)

    def expect(self, text: str) -> _Token:
        if self.cur.text != text:
            raise self.error(f"expected {text!r}, found {self.cur.text or 'end of input'!r}")
        return self.advance()

    def parse_formula(self) -> MTLFormula:
        f = self.parse_implies()
        if self.cur.kind != "eof":
            raise self.error(f"unexpected trailing input {self.cur.text!r}")
        return f

    def parse_implies(self) -> MTLFormula:
        lhs = self.parse_or()
        if self.cur.text == "->":
            self.advance()
            rhs = self.parse_implies()  # right-associative
            return Implies(lhs, rhs)
        return lhs

    def parse_or(self) -> MTLFormula:
        terms = [self.parse_and()]
        while self.cur.text == "|":
            self.advance()
            terms.append(self.parse_and())
        return terms[0] if len(terms) == 1 else Or(tuple(terms))

    def parse_and(self) -> MTLFormula:
        terms = [self.parse_unary()]
        while self.cur.text == "&":
            self.advance()
            terms.append(self.parse_unary())
        return terms[0] if len(terms) == 1 else And(tuple(terms))

    def parse_unary(self) -> MTLFormula:
        tok = self.cur
        if tok.text == "!":
            self.advance()
            return Not(self.parse_unary())
        if tok.kind == "ident" and tok.text in ("G", "F"):
            self.advance()
            interval = self.parse_interval() if self.cur.text == "[" else UNBOUNDED
            child = self.parse_unary()
            return Globally(interval, child) if tok.text == "G" else Eventually(interval, child)
        if tok.text == "(":
            self.advance()
            lhs = self.parse_implies()
            if self.cur.kind == "ident" and self.cur.text == "U":
                self.advance()
                if self.cur.text != "[":
                    raise self.error("until operator requires a bounded interval [a,b]")
                interval = self.parse_interval()
                rhs = self.parse_implies()
                self.expect(")")
                return Until(interval, lhs, rhs)
            self.expect(")")
            return lhs
        if tok.kind == "ident":
            if tok.text in _RESERVED:
                raise self.error(f"{tok.text!r} is a reserved operator, not a predicate name")
            self.advance()
            return Pred(tok.text, span=(tok.pos, tok.pos + len(tok.text)))
        raise self.error(f"expected a formula, found {tok.text or 'end of input'!r}")

    def parse_interval(self) -> Interval:
        open_tok = self.expect("[")
        lo = self.parse_number()
        self.expect(",")
        hi = self.parse_number()
        self.expect("]")
        if hi < lo:
            raise self.error(f"inverted interval [{lo:g},{hi:g}]", open_tok)
        return Interval(lo, hi)

    def parse_number(self) -> float:
        if self.cur.kind != "number":
            raise self.error(f"expected a number, found {self.cur.text!r}")
        return float(self.advance().text)


def parse(text: str) -> MTLFormula:
    """Parse the ASCII concrete syntax into a formula tree.

    Raises :class:`MTLSyntaxError` with line/column on malformed input.
    """
    return _Parser(text).parse_formula()


# ---------------------------------------------------------------------------
# Negation normal form
# ---------------------------------------------------------------------------


def to_nnf(f: MTLFormula) -> MTLFormula:
    """Push negations down to predicate leaves.

    Uses the dualities not-G = F-not, not-F = G-not, De Morgan, and
    ``a -> b  ==  !a | b``. Negation above Until is rejected (no Release
    operator in the supported fragment).
    """
    return _nnf(f, negate=False)


def _nnf(f: MTLFormula, negate: bool) -> MTLFormula:
    if isinstance(f, Pred):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return _nnf(f.child, not negate)
    if isinstance(f, And):
        terms = tuple(_nnf(t, negate) for t in f.terms)
        return Or(terms) if negate else And(terms)
    if isinstance(f, Or):
        terms = tuple(_nnf(t, negate) for t in f.terms)
        return And(terms) if negate else Or(terms)
    if isinstance(f, Implies):
        # a -> b  ==  !a | b
        if negate:
            return And((_nnf(f.lhs, False), _nnf(f.rhs, True)))
        return Or((_nnf(f.lhs, True), _nnf(f.rhs, False)))
    if isinstance(f, Globally):
        child = _nnf(f.child, negate)
        return Eventually(f.interval, child) if negate else Globally(f.interval, child)
    if isinstance(f, Eventually):
        child = _nnf(f.child, negate)
        return Globally(f.interval, child) if negate else Eventually(f.interval, child)
    if isinstance(f, Until):
        if negate:
            raise UnsupportedFragmentError(
                "negation above until is outside the supported fragment"
            )
        return Until(f.interval, _nnf(f.lhs, False), _nnf(f.rhs, False))
    raise TypeError(f"unknown formula node {type(f).__name__}")


# ---------------------------------------------------------------------------
# Horizon
# ---------------------------------------------------------------------------

_EPS = 1e-9


def horizon_seconds(f: MTLFormula) -> float:
    """Maximum over root-to-leaf paths of the sum of interval upper bounds.

    Unbounded Globally contributes 0 (it is evaluated over the whole
    trajectory); unbounded Eventually/Until have no finite horizon.
    """
    if isinstance(f, Pred):
        return 0.0
    if isinstance(f, (Not,)):
        return horizon_seconds(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon_seconds(t) for t in f.terms)
    if isinstance(f, Implies):
        return max(horizon_seconds(f.lhs), horizon_seconds(f.rhs))
    if isinstance(f, Globally):
        upper = 0.0 if f.interval.hi is None else f.interval.hi
        return upper + horizon_seconds(f.child)
    if isinstance(f, Eventually):
        if f.interval.hi is None:
            raise HorizonError("unbounded eventually has no finite horizon")
        return f.interval.hi + horizon_seconds(f.child)
    if isinstance(f, Until):
        if f.interval.hi is None:
            raise HorizonError("unbounded until has no finite horizon")
        return f.interval.hi + max(horizon_seconds(f.lhs), horizon_seconds(f.rhs))
    raise TypeError(f"unknown formula node {type(f).__name__}")


def horizon(f: MTLFormula, dt: float) -> int:
    """Trajectory index count N = ceil(H / dt) implied by the formula."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return math.ceil(horizon_seconds(f) / dt - _EPS)


# ---------------------------------------------------------------------------
# Occurrence classification
# ---------------------------------------------------------------------------


def iter_leaves(f: MTLFormula) -> Iterator[tuple[MTLFormula, bool]]:
    """Yield (leaf predicate, negated) pairs of an NNF formula, left to right."""
    if isinstance(f, Pred):
        yield f, False
    elif isinstance(f, Not):
        if not isinstance(f.child, Pred):
            raise ValueError("formula is not in negation normal form")
        yield f.child, True
    else:
        for child in f.children():
            yield from iter_leaves(child)


def classify_occurrences(f: MTLFormula) -> list[PredicateOccurrence]:
    """List every predicate leaf of an NNF formula with its polarity.

    An occurrence is unsafe iff its leaf is negated; occurrence ids are
    assigned in left-to-right leaf order.
    """
    out = []
    for occ_id, (leaf, negated) in enumerate(iter_leaves(f)):
        polarity: Polarity = "unsafe" if negated else "safe"
        out.append(PredicateOccurrence(leaf.name, polarity, occ_id))
    return out


def predicate_names(f: MTLFormula) -> list[str]:
    """Distinct predicate names in leaf order."""
    seen: dict[str, None] = {}
    for leaf, _ in iter_leaves(to_nnf(f)):
        seen.setdefault(leaf.name, None)
    return list(seen)


def is_globally_conjunction_fragment(f: MTLFormula) -> bool:
    """True when an NNF formula uses only conjunction and Globally.

    This is the fragment for which lazy synthesis is complete and optimal.
    """
    if isinstance(f, Pred):
        return True
    if isinstance(f, Not):
        return isinstance(f.child, Pred)
    if isinstance(f, And):
        return all(is_globally_conjunction_fragment(t) for t in f.terms)
    if isinstance(f, Globally):
        return is_globally_conjunction_fragment(f.child)
    return False


def format_formula(f: MTLFormula) -> str:
    """Render a formula back to the concrete syntax."""
    if isinstance(f, Pred):
        return f.name
    if isinstance(f, Not):
        if isinstance(f.child, (And, Or, Implies)):
            return f"!({format_formula(f.child)})"
        return f"!{format_formula(f.child)}"
    if isinstance(f, And):
        return " & ".join(_fmt_nested(t, (And, Or, Implies, Until)) for t in f.terms)
    if isinstance(f, Or):
        return " | ".join(_fmt_nested(t, (Or, Implies, Until)) for t in f.terms)
    if isinstance(f, Implies):
        return f"{_fmt_nested(f.lhs, (Implies, Until))} -> {format_formula(f.rhs)}"
    if isinstance(f, (Globally, Eventually)):
        op = "G" if isinstance(f, Globally) else "F"
        iv = "" if f.interval == UNBOUNDED else _fmt_interval(f.interval)
        child = _fmt_nested(f.child, (And, Or, Implies, Until))
        return f"{op}{iv} {child}"
    if isinstance(f, Until):
        return (
            f"({format_formula(f.lhs)} U{_fmt_interval(f.interval)} "
            f"{format_formula(f.rhs)})"
        )
    raise TypeError(f"unknown formula node {type(f).__name__}")


def _fmt_interval(iv: Interval) -> str:
    return f"[{iv.lo:g},{iv.hi:g}]"


def _fmt_nested(f: MTLFormula, wrap_types: tuple[type, ...]) -> str:
    text = format_formula(f)
    if isinstance(f, wrap_types) and not isinstance(f, Until):
        return f"({text})"
    return text
