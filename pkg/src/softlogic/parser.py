"""Text syntax for formulas and axiom files.

Grammar, loosest binding first.  Connective precedence is
not > and > or > implies, with implication right associative:

    formula     := quantified
    quantified  := ("forall" | "exists") vars [p-annotation] ":" quantified
                 | implication
    implication := disjunction [ "->" implication ]
    disjunction := conjunction { "|" conjunction }
    conjunction := negation { "&" negation }
    negation    := "~" negation | atom
    atom        := "(" formula ")" | ident "(" term { "," term } ")"
    term        := ident [ "(" term { "," term } ")" ]
    vars        := ident { "," ident }

A quantifier body extends as far right as possible; parenthesize to stop
it early.  The optional annotation "p=<number>" fixes that quantifier's
aggregation exponent, e.g. "forall x p=6: P(x)".  Inside a quantifier
header the name p is read as a variable unless an "=" follows it.

Axiom files hold one formula per line.  Blank lines and "#" comments are
skipped.  A line may start with "<name>:" to name its axiom; unnamed
axioms are numbered ax01, ax02, ... in file order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .logic import And, Exists, Forall, Func, Implies, Not, Or, Pred, Sym

RESERVED = ("forall", "exists")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[(),:~&|=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    offset: int


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "number" | literal text for punctuation
    text: str
    span: SourceSpan


class ParseError(ValueError):
    def __init__(self, message, span: SourceSpan | None = None):
        if span is not None:
            message = f"line {span.line}, column {span.column}: {message}"
        super().__init__(message)
        self.span = span


def tokenize(text: str):
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(line, pos - line_start + 1, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        span = SourceSpan(line, pos - line_start + 1, pos)
        if m.lastgroup == "ws":
            chunk = m.group()
            n = chunk.count("\n")
            if n:
                line += n
                line_start = pos + chunk.rfind("\n") + 1
        elif m.lastgroup == "number":
            tokens.append(Token("number", m.group(), span))
        elif m.lastgroup == "ident":
            tokens.append(Token("ident", m.group(), span))
        else:  # arrow or single-char symbol
            tokens.append(Token(m.group(), m.group(), span))
        pos = m.end()
    tokens.append(Token("end", "", SourceSpan(line, pos - line_start + 1, pos)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "end":
            self.i += 1
        return t

    def expect(self, kind, what=None) -> Token:
        t = self.peek()
        if t.kind != kind:
            what = what or repr(kind)
            got = "end of input" if t.kind == "end" else repr(t.text)
            raise ParseError(f"expected {what}, got {got}", t.span)
        return self.next()

    # -- grammar -------------------------------------------------------------

    def formula(self):
        t = self.peek()
        if t.kind == "ident" and t.text in RESERVED:
            return self.quantified()
        return self.implication()

    def quantified(self):
        head = self.next()
        variables = [self.variable_name()]
        p = None
        while True:
            t = self.peek()
            if t.kind == "," :
                self.next()
                if self.peek().text == "p" and self.peek(1).kind == "=":
                    p = self.annotation()
                    break
                variables.append(self.variable_name())
                continue
            if t.kind == "ident" and t.text == "p" and self.peek(1).kind == "=":
                p = self.annotation()
            break
        self.expect(":", "':' after quantifier variables")
        body = self.formula()
        cls = Forall if head.text == "forall" else Exists
        try:
            return cls(tuple(variables), body, p=p)
        except ValueError as e:
            raise ParseError(str(e), head.span) from None

    def variable_name(self) -> str:
        t = self.expect("ident", "a variable name")
        if t.text in RESERVED:
            raise ParseError(f"{t.text!r} is reserved and cannot name a variable", t.span)
        return t.text

    def annotation(self) -> float:
        self.expect("ident")  # the p itself
        self.expect("=")
        t = self.expect("number", "a number after 'p='")
        value = float(t.text)
        if value < 1.0:
            raise ParseError(f"aggregation exponent must be >= 1, got {t.text}", t.span)
        return value

    def implication(self):
        left = self.disjunction()
        if self.peek().kind == "->":
            self.next()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        out = self.conjunction()
        while self.peek().kind == "|":
            self.next()
            out = Or(out, self.conjunction())
        return out

    def conjunction(self):
        out = self.negation()
        while self.peek().kind == "&":
            self.next()
            out = And(out, self.negation())
        return out

    def negation(self):
        if self.peek().kind == "~":
            self.next()
            return Not(self.negation())
        return self.atom()

    def atom(self):
        t = self.peek()
        if t.kind == "(":
            self.next()
            out = self.formula()
            self.expect(")", "')'")
            return out
        if t.kind == "ident":
            if t.text in RESERVED:
                raise ParseError(
                    f"quantifier {t.text!r} cannot start here; parenthesize it", t.span
                )
            name = self.next().text
            self.expect("(", "'(' to open the argument list")
            args = [self.term()]
            while self.peek().kind == ",":
                self.next()
                args.append(self.term())
            self.expect(")", "')'")
            return Pred(name, args)
        got = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"expected a predicate, '~', or '(', got {got}", t.span)

    def term(self):
        t = self.expect("ident", "a term")
        if t.text in RESERVED:
            raise ParseError(f"{t.text!r} is reserved and cannot be a term", t.span)
        if self.peek().kind == "(":
            self.next()
            args = [self.term()]
            while self.peek().kind == ",":
                self.next()
                args.append(self.term())
            self.expect(")", "')'")
            return Func(t.text, args)
        return Sym(t.text)


def parse_formula(text: str):
    """Parse one formula; raises ParseError on leftovers or bad syntax."""
    p = _Parser(tokenize(text))
    f = p.formula()
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"unexpected trailing input {t.text!r}", t.span)
    return f


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_LEVEL = {Forall: 0, Exists: 0, Implies: 1, Or: 2, And: 3, Not: 4, Pred: 5}


def _term_text(t) -> str:
    if isinstance(t, Sym):
        return t.name
    args = ", ".join(_term_text(a) for a in t.args)
    return f"{t.name}({args})"


def _fmt(f, floor: int) -> str:
    level = _LEVEL[type(f)]
    if isinstance(f, Pred):
        body = f"{f.name}({', '.join(_term_text(a) for a in f.args)})"
    elif isinstance(f, Not):
        body = "~" + _fmt(f.body, 4)
    elif isinstance(f, And):
        body = f"{_fmt(f.left, 3)} & {_fmt(f.right, 4)}"
    elif isinstance(f, Or):
        body = f"{_fmt(f.left, 2)} | {_fmt(f.right, 3)}"
    elif isinstance(f, Implies):
        body = f"{_fmt(f.left, 2)} -> {_fmt(f.right, 1)}"
    elif isinstance(f, (Forall, Exists)):
        word = "forall" if isinstance(f, Forall) else "exists"
        annot = "" if f.p is None else f" p={f.p:g}"
        body = f"{word} {', '.join(f.variables)}{annot}: {_fmt(f.body, 0)}"
    else:
        raise TypeError(f"not a formula: {f!r}")
    return f"({body})" if level < floor else body


def format_formula(f) -> str:
    """Render a formula with the fewest parentheses that parse back equal."""
    return _fmt(f, 0)


# ---------------------------------------------------------------------------
# axiom files
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:")


def parse_axioms(text: str):
    """Parse axiom-file text into an ordered {name: formula} dict."""
    out = {}
    counter = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        counter += 1
        name = None
        m = _NAME_RE.match(line)
        if m and m.group(1) not in RESERVED:
            name = m.group(1)
            line = line[m.end() :]
        if name is None:
            name = f"ax{counter:02d}"
        if name in out:
            raise ParseError(f"line {lineno}: duplicate axiom name {name!r}")
        try:
            out[name] = parse_formula(line)
        except ParseError as e:
            raise ParseError(f"axiom {name!r} (line {lineno}): {e}") from None
    return out


def parse_axiom_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_axioms(fh.read())


def format_axioms(axioms) -> str:
    """Inverse of parse_axioms for {name: formula} mappings."""
    return "\n".join(f"{name}: {format_formula(f)}" for name, f in axioms.items()) + "\n"
