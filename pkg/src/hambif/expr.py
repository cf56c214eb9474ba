"""Arithmetic expressions over named variables, evaluated on point batches.

The grammar is deliberately small: ``+ - * / ^`` (``**`` is accepted too),
parentheses, numeric literals and the declared variable names.  Parsing goes
through :mod:`ast` with a whitelist, and every expression compiles to a
closure that evaluates a whole ``(m, k)`` array of points at once.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["Expression", "ExpressionError", "compile_expression"]

_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


class ExpressionError(ValueError):
    """Bad expression; ``column`` is 1-based within the original text."""

    def __init__(self, message: str, text: str, column: int | None = None, line: int | None = None):
        self.message = message
        self.text = text
        self.column = column
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}: {text!r}")

    def at_line(self, line: int, column_offset: int) -> "ExpressionError":
        col = None if self.column is None else self.column + column_offset
        return ExpressionError(self.message, self.text, col, line)


@dataclass(frozen=True)
class Expression:
    text: str
    variables: tuple[str, ...]
    _fn: Callable

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.variables):
            raise ValueError(f"expected {len(self.variables)} columns, got {X.shape[1]}")
        out = self._fn(X)
        return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()


def _original_column(text: str, offset: int) -> int:
    """Map a 0-based offset in the ``^ -> **`` rewritten text back to ``text``."""
    pos = 0
    shifted = 0
    for ch in text:
        width = 2 if ch == "^" else 1
        if shifted + width > offset:
            break
        shifted += width
        pos += 1
    return pos + 1


def compile_expression(text: str, variables: Sequence[str]) -> Expression:
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression", str(text))
    source = text.replace("^", "**")
    stripped = source.lstrip()
    lead = len(source) - len(stripped)
    try:
        tree = ast.parse(stripped, mode="eval")
    except SyntaxError as exc:
        col = _original_column(text, (exc.offset or 1) - 1 + lead)
        raise ExpressionError(f"syntax error: {exc.msg}", text, col) from None
    index = {name: i for i, name in enumerate(variables)}

    def fail(node, why):
        raise ExpressionError(why, text, _original_column(text, node.col_offset + lead))

    def build(node) -> Callable:
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
            op = _BINARY[type(node.op)]
            left, right = build(node.left), build(node.right)
            return lambda X: op(left(X), right(X))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            op = _UNARY[type(node.op)]
            inner = build(node.operand)
            return lambda X: op(inner(X))
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                fail(node, f"unsupported literal {node.value!r}")
            value = float(node.value)
            return lambda X: value
        if isinstance(node, ast.Name):
            if node.id not in index:
                fail(node, f"unknown variable {node.id!r}")
            k = index[node.id]
            return lambda X: X[:, k]
        fail(node, f"unsupported syntax {type(node).__name__}")

    return Expression(text, tuple(variables), build(tree.body))
