"""Lexer and recursive-descent parser for rule text.

Grammar, loosest binding first::

    select  := or ("if" or "else" select)?        (right-associative)
    or      := and ("or" and)*
    and     := cmp ("and" cmp)*
    cmp     := unary (COMPARATOR unary)?           (comparisons do not chain)
    unary   := "not" unary | "-" NUMBER | atom
    atom    := "(" select ")" | NUMBER | "true" | "false" | IDENT

Identifiers match ``[A-Za-z_][A-Za-z0-9_.]*``; numbers are decimal with an
optional fraction and exponent. Comparators: ``< <= > >= == !=``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import RuleSyntaxError, UnknownOperatorError
from .nodes import (
    And,
    BoolLiteral,
    Comparison,
    Not,
    NumberLiteral,
    Or,
    RuleExpr,
    Select,
    VarRef,
)

_KEYWORDS = {"and", "or", "not", "if", "else", "true", "false"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<cmp><=|>=|==|!=|<|>)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<minus>-)
""",
    re.VERBOSE,
)

# Characters that look like operators from other languages; reported as
# unknown operators rather than generic syntax errors.
_OPERATOR_LIKE = re.compile(r"(&&|\|\||[&|!^%*/+=~])")


@dataclass(frozen=True)
class Token:
    kind: str  # 'number' | 'name' | keyword | comparator | '(' | ')' | '-' | 'end'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            column = pos - line_start + 1
            op = _OPERATOR_LIKE.match(text, pos)
            if op:
                hint = {"=": "use '=='", "!": "use 'not' or '!='"}.get(op.group(), "")
                message = f"unknown operator {op.group()!r}"
                if hint:
                    message += f", {hint}"
                raise UnknownOperatorError(message, line, column)
            raise RuleSyntaxError(
                f"unexpected character {text[pos]!r}",
                line,
                column,
                expected=("identifier", "number", "comparator", "'('"),
            )
        column = match.start() - line_start + 1
        kind = match.lastgroup
        value = match.group()
        if kind == "ws":
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = match.start() + value.rfind("\n") + 1
        elif kind == "number":
            tokens.append(Token("number", value, line, column))
        elif kind == "name":
            if value in _KEYWORDS:
                tokens.append(Token(value, value, line, column))
            else:
                tokens.append(Token("name", value, line, column))
        elif kind == "cmp":
            tokens.append(Token(value, value, line, column))
        elif kind == "lparen":
            tokens.append(Token("(", value, line, column))
        elif kind == "rparen":
            tokens.append(Token(")", value, line, column))
        elif kind == "minus":
            tokens.append(Token("-", value, line, column))
        pos = match.end()
    tokens.append(Token("end", "", line, len(text) - line_start + 1))
    return tokens


_COMPARATOR_KINDS = ("<", "<=", ">", ">=", "==", "!=")
_ATOM_EXPECTED = ("identifier", "number", "'('", "'not'", "'true'", "'false'")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    @property
    def current(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        token = self.current
        self._pos += 1
        return token

    def _accept(self, kind: str) -> Token | None:
        if self.current.kind == kind:
            return self._advance()
        return None

    def _fail(self, expected: tuple[str, ...]):
        token = self.current
        shown = token.text if token.kind != "end" else "end of input"
        raise RuleSyntaxError(
            f"unexpected {shown!r}", token.line, token.column, expected=expected
        )

    def parse_select(self) -> RuleExpr:
        value = self.parse_or()
        if self._accept("if"):
            condition = self.parse_or()
            if not self._accept("else"):
                self._fail(("'else'",))
            orelse = self.parse_select()
            return Select(value, condition, orelse)
        return value

    def parse_or(self) -> RuleExpr:
        expr = self.parse_and()
        while self._accept("or"):
            expr = Or(expr, self.parse_and())
        return expr

    def parse_and(self) -> RuleExpr:
        expr = self.parse_cmp()
        while self._accept("and"):
            expr = And(expr, self.parse_cmp())
        return expr

    def parse_cmp(self) -> RuleExpr:
        left = self.parse_unary()
        if self.current.kind in _COMPARATOR_KINDS:
            op = self._advance().kind
            right = self.parse_unary()
            return Comparison(left, op, right)
        return left

    def parse_unary(self) -> RuleExpr:
        if self._accept("not"):
            return Not(self.parse_unary())
        if self._accept("-"):
            number = self._accept("number")
            if number is None:
                self._fail(("number",))
            return NumberLiteral(-float(number.text))
        return self.parse_atom()

    def parse_atom(self) -> RuleExpr:
        token = self.current
        if token.kind == "(":
            self._advance()
            inner = self.parse_select()
            if not self._accept(")"):
                self._fail(("')'",))
            return inner
        if token.kind == "number":
            self._advance()
            return NumberLiteral(float(token.text))
        if token.kind == "true":
            self._advance()
            return BoolLiteral(True)
        if token.kind == "false":
            self._advance()
            return BoolLiteral(False)
        if token.kind == "name":
            self._advance()
            return VarRef(token.text)
        self._fail(_ATOM_EXPECTED)

    def expect_end(self):
        if self.current.kind != "end":
            self._fail(("end of input", "'and'", "'or'", "'if'"))


def parse_rule(text: str) -> RuleExpr:
    """Parse rule text into an AST; raises RuleSyntaxError with position info."""
    if text is None or not text.strip():
        raise RuleSyntaxError("empty rule text", 1, 1, expected=("expression",))
    parser = _Parser(tokenize(text))
    expr = parser.parse_select()
    parser.expect_end()
    return expr
