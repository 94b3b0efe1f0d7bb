"""A tiny arithmetic expression grammar for config files.

Grammar (infix, usual precedence, ``^`` is right-associative power)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | IDENT | FUNC "(" expr ("," expr)* ")" | "(" expr ")"

Identifiers are restricted to the spatial coordinates ``x`` and ``y``;
the only functions are ``abs``, ``min``, ``max``, ``exp``, ``sin``
(``min``/``max`` take exactly two arguments, the rest one).  Compiled
expressions evaluate vectorized over numpy arrays.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import EvaluationError

__all__ = ["Expression", "compile_expression"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_FUNCTIONS = {
    "abs": (1, np.abs),
    "exp": (1, np.exp),
    "sin": (1, np.sin),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}

_VARIABLES = ("x", "y")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise EvaluationError(f"unrecognized input near {rest[:10]!r} in {text!r}")
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num"))))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    tokens.append(("end", None))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op):
        kind, val = self.next()
        if kind != "op" or val != op:
            raise EvaluationError(f"expected {op!r} in {self.text!r}")

    def parse(self):
        node = self.expr()
        if self.peek() != ("end", None):
            raise EvaluationError(f"trailing input in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.next()
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.next()
            rhs = self.unary()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    def unary(self):
        if self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.next()
            node = self.unary()
            return node if op == "+" else ("neg", node)
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() == ("op", "^"):
            self.next()
            rhs = self.unary()  # right-associative
            node = ("pow", node, rhs)
        return node

    def atom(self):
        kind, val = self.next()
        if kind == "num":
            return ("const", val)
        if kind == "ident":
            if val in _FUNCTIONS:
                nargs, _ = _FUNCTIONS[val]
                self.expect_op("(")
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.next()
                    args.append(self.expr())
                self.expect_op(")")
                if len(args) != nargs:
                    raise EvaluationError(
                        f"{val} takes {nargs} argument(s), got {len(args)} in {self.text!r}"
                    )
                return ("call", val, args)
            if val in _VARIABLES:
                return ("var", val)
            raise EvaluationError(f"unknown identifier {val!r} in {self.text!r}")
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise EvaluationError(f"unexpected token in {self.text!r}")


def _free_variables(node, out):
    tag = node[0]
    if tag == "var":
        out.add(node[1])
    elif tag == "call":
        for child in node[2]:
            _free_variables(child, out)
    elif tag in ("add", "sub", "mul", "div", "pow"):
        _free_variables(node[1], out)
        _free_variables(node[2], out)
    elif tag == "neg":
        _free_variables(node[1], out)


def _evaluate(node, env):
    tag = node[0]
    if tag == "const":
        return node[1]
    if tag == "var":
        return env[node[1]]
    if tag == "neg":
        return -_evaluate(node[1], env)
    if tag == "call":
        _, fn = _FUNCTIONS[node[1]]
        return fn(*[_evaluate(a, env) for a in node[2]])
    a = _evaluate(node[1], env)
    b = _evaluate(node[2], env)
    if tag == "add":
        return a + b
    if tag == "sub":
        return a - b
    if tag == "mul":
        return a * b
    if tag == "div":
        return np.divide(a, b)
    if tag == "pow":
        return np.power(a, b)
    raise AssertionError(tag)


class Expression:
    """A compiled arithmetic expression over the coordinates ``x`` (and ``y``)."""

    def __init__(self, text):
        self.text = text.strip()
        self.ast = _Parser(self.text).parse()
        vars_ = set()
        _free_variables(self.ast, vars_)
        self.variables = frozenset(vars_)

    def __call__(self, x, y=None):
        env = {"x": np.asarray(x, dtype=float)}
        if y is not None:
            env["y"] = np.asarray(y, dtype=float)
        elif "y" in self.variables:
            raise EvaluationError(
                f"expression {self.text!r} uses y but only one coordinate was supplied"
            )
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            try:
                out = _evaluate(self.ast, env)
            except FloatingPointError as exc:
                raise EvaluationError(f"evaluating {self.text!r}: {exc}") from exc
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(env["x"])).copy()

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.text == other.text

    def __hash__(self):
        return hash(self.text)


def compile_expression(text):
    """Parse ``text`` and return an :class:`Expression` (raises EvaluationError)."""
    return Expression(text)
