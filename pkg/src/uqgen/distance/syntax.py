"""Syntax-tree providers for CodeBLEU's structural component.

A provider turns source text into a tree of ``SyntaxNode(kind, children)`` or
raises ``ParseFailure``. Two ship built in:

* ``toy`` -- a small statement/expression language used by tests and the
  built-in judge (assignments, ``return``, ``if``/``while`` blocks, arithmetic
  and comparisons).
* ``python`` -- an adapter over the stdlib ``ast`` module.

Other grammars plug in through :func:`register_syntax_provider`.
"""

from __future__ import annotations

import ast
import keyword
import re
from dataclasses import dataclass
from typing import Any, Protocol

from ..errors import ConfigError, ParseFailure


@dataclass(frozen=True)
class SyntaxNode:
    kind: str
    children: tuple["SyntaxNode", ...] = ()
    value: Any = None

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


class SyntaxProvider(Protocol):
    lang: str
    keywords: frozenset[str]

    def parse(self, source: str) -> SyntaxNode: ...


_PROVIDERS: dict[str, SyntaxProvider] = {}


def register_syntax_provider(lang: str, provider: SyntaxProvider) -> None:
    _PROVIDERS[lang.lower()] = provider


def get_syntax_provider(lang: str) -> SyntaxProvider:
    try:
        return _PROVIDERS[lang.lower()]
    except KeyError:
        raise ConfigError(f"no syntax provider registered for language {lang!r}") from None


def registered_languages() -> list[str]:
    return sorted(_PROVIDERS)


def parses(lang: str, source: str) -> bool:
    try:
        get_syntax_provider(lang).parse(source)
    except ParseFailure:
        return False
    return True


# -- toy language ------------------------------------------------------------

TOY_KEYWORDS = frozenset({"return", "if", "then", "else", "end", "while", "do", "and", "or", "not"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op><=|>=|==|!=|[-+*/%<>=();])
  """,
    re.VERBOSE,
)

_CMP_OPS = {"<", ">", "<=", ">=", "==", "!="}


def _lex(source: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseFailure(f"unexpected character {source[pos]!r} at offset {pos}")
        pos = m.end()
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            continue
        if kind == "nl":
            tokens.append(("sep", text))
        elif kind == "name" and text in TOY_KEYWORDS:
            tokens.append(("kw", text))
        elif kind == "op" and text == ";":
            tokens.append(("sep", text))
        else:
            tokens.append((kind, text))
    tokens.append(("eof", ""))
    return tokens


class _ToyParser:
    def __init__(self, source: str):
        self.toks = _lex(source)
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def take(self, kind: str, text: str | None = None) -> str:
        k, t = self.toks[self.i]
        if k != kind or (text is not None and t != text):
            want = text or kind
            raise ParseFailure(f"expected {want!r}, found {t or k!r} at token {self.i}")
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        k, t = self.peek()
        return k == kind and (text is None or t == text)

    def at_any(self, stops) -> bool:
        return any(self.at(*stop) for stop in stops)

    def skip_seps(self):
        while self.at("sep"):
            self.i += 1

    def program(self) -> SyntaxNode:
        body = self.block(stop=(("eof", None),))
        self.take("eof")
        return SyntaxNode("program", body.children)

    def block(self, stop) -> SyntaxNode:
        stmts = []
        self.skip_seps()
        while not self.at_any(stop):
            stmts.append(self.statement())
            if not (self.at("sep") or self.at_any(stop)):
                k, t = self.peek()
                raise ParseFailure(f"expected statement separator, found {t or k!r}")
            self.skip_seps()
        return SyntaxNode("block", tuple(stmts))

    def statement(self) -> SyntaxNode:
        if self.at("kw", "return"):
            self.take("kw")
            return SyntaxNode("return", (self.expr(),))
        if self.at("kw", "if"):
            self.take("kw")
            cond = self.expr()
            self.take("kw", "then")
            then = self.block(stop=(("kw", "else"), ("kw", "end")))
            parts = [cond, then]
            if self.at("kw", "else"):
                self.take("kw")
                parts.append(self.block(stop=(("kw", "end"),)))
            self.take("kw", "end")
            return SyntaxNode("if", tuple(parts))
        if self.at("kw", "while"):
            self.take("kw")
            cond = self.expr()
            self.take("kw", "do")
            body = self.block(stop=(("kw", "end"),))
            self.take("kw", "end")
            return SyntaxNode("while", (cond, body))
        name = self.take("name")
        self.take("op", "=")
        return SyntaxNode("assign", (SyntaxNode("name", value=name), self.expr()))

    def expr(self) -> SyntaxNode:
        node = self.conj()
        while self.at("kw", "or"):
            self.take("kw")
            node = SyntaxNode("bool:or", (node, self.conj()))
        return node

    def conj(self) -> SyntaxNode:
        node = self.neg()
        while self.at("kw", "and"):
            self.take("kw")
            node = SyntaxNode("bool:and", (node, self.neg()))
        return node

    def neg(self) -> SyntaxNode:
        if self.at("kw", "not"):
            self.take("kw")
            return SyntaxNode("not", (self.neg(),))
        return self.comparison()

    def comparison(self) -> SyntaxNode:
        node = self.additive()
        k, t = self.peek()
        if k == "op" and t in _CMP_OPS:
            self.i += 1
            node = SyntaxNode(f"cmp:{t}", (node, self.additive()))
        return node

    def additive(self) -> SyntaxNode:
        node = self.term()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.take("op")
            node = SyntaxNode(f"binop:{op}", (node, self.term()))
        return node

    def term(self) -> SyntaxNode:
        node = self.unary()
        while self.at("op", "*") or self.at("op", "/") or self.at("op", "%"):
            op = self.take("op")
            node = SyntaxNode(f"binop:{op}", (node, self.unary()))
        return node

    def unary(self) -> SyntaxNode:
        if self.at("op", "-"):
            self.take("op")
            return SyntaxNode("neg", (self.unary(),))
        return self.atom()

    def atom(self) -> SyntaxNode:
        k, t = self.peek()
        if k == "num":
            self.i += 1
            return SyntaxNode("num", value=float(t) if "." in t else int(t))
        if k == "name":
            self.i += 1
            return SyntaxNode("name", value=t)
        if k == "op" and t == "(":
            self.i += 1
            node = self.expr()
            self.take("op", ")")
            return node
        raise ParseFailure(f"unexpected {t or k!r} in expression")


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def _truth(v) -> bool:
    return bool(v)


def run_toy(tree: SyntaxNode, env: dict[str, Any]) -> Any:
    """Execute a parsed toy program; returns the value of the first executed ``return``."""
    env = dict(env)

    def ev(n: SyntaxNode):
        kind = n.kind
        if kind == "num":
            return n.value
        if kind == "name":
            if n.value not in env:
                raise NameError(n.value)
            return env[n.value]
        if kind == "neg":
            return -ev(n.children[0])
        if kind == "not":
            return int(not _truth(ev(n.children[0])))
        if kind == "bool:and":
            return int(_truth(ev(n.children[0])) and _truth(ev(n.children[1])))
        if kind == "bool:or":
            return int(_truth(ev(n.children[0])) or _truth(ev(n.children[1])))
        a, b = ev(n.children[0]), ev(n.children[1])
        op = kind.split(":", 1)[1]
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        if op == "%":
            return a % b
        return int({"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b, "==": a == b, "!=": a != b}[op])

    def ex(stmts):
        for s in stmts:
            if s.kind == "assign":
                env[s.children[0].value] = ev(s.children[1])
            elif s.kind == "return":
                raise _Return(ev(s.children[0]))
            elif s.kind == "if":
                if _truth(ev(s.children[0])):
                    ex(s.children[1].children)
                elif len(s.children) > 2:
                    ex(s.children[2].children)
            elif s.kind == "while":
                while _truth(ev(s.children[0])):
                    ex(s.children[1].children)

    try:
        ex(tree.children)
    except _Return as r:
        return r.value
    return None


class ToySyntaxProvider:
    lang = "toy"
    keywords = TOY_KEYWORDS

    def parse(self, source: str) -> SyntaxNode:
        return _ToyParser(source).program()


# -- python adapter ------------------------------------------------------------


class PythonSyntaxProvider:
    lang = "python"
    keywords = frozenset(keyword.kwlist)

    def parse(self, source: str) -> SyntaxNode:
        try:
            tree = ast.parse(source)
        except (SyntaxError, ValueError) as exc:
            raise ParseFailure(str(exc)) from None
        return self._convert(tree)

    def _convert(self, node: ast.AST) -> SyntaxNode:
        children = tuple(
            self._convert(c) for c in ast.iter_child_nodes(node) if not isinstance(c, ast.expr_context)
        )
        return SyntaxNode(type(node).__name__, children)


register_syntax_provider("toy", ToySyntaxProvider())
register_syntax_provider("python", PythonSyntaxProvider())
