"""Closed-form sequences as small serializable expression trees.

Every node maps an integer index array ``n`` (n >= 0) to a complex array.
The vocabulary is deliberately tiny::

    {"op": "const", "value": [re, im]}     c
    {"op": "pow", "exponent": p}           (n + 1) ** p
    {"op": "alt"}                          (-1) ** n
    {"op": "altblock", "period": N}        (-1) ** floor(n / N)
    {"op": "recip", "arg": e}              1 / e
    {"op": "imag", "arg": e}               i * e
    {"op": "sum", "args": [e, ...]}
    {"op": "prod", "args": [e, ...]}

Nodes support ``+``, ``*`` and unary ``-`` so models can be written inline,
e.g. ``1 + power(-1)`` for a_n = 1 + 1/(n+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np


def parse_complex(value) -> complex:
    """Accept ``3``, ``[re, im]`` or ``{"re": .., "im": ..}``."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    return complex(value)


def complex_to_json(value: complex):
    value = complex(value)
    if value.imag == 0.0:
        return value.real
    return [value.real, value.imag]


class Expr:
    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        return np.broadcast_to(self._eval(n), n.shape).astype(complex)

    def at(self, n: int) -> complex:
        return complex(self(np.array([n]))[0])

    def _eval(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, _lift(other)))

    __radd__ = __add__

    def __mul__(self, other):
        return Product((self, _lift(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return Product((Const(-1.0), self))

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) + (-self)


def _lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, Number):
        return Const(complex(value))
    raise TypeError(f"cannot build an expression from {value!r}")


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: complex

    def _eval(self, n):
        return np.full(n.shape, complex(self.value))

    def to_json(self):
        return {"op": "const", "value": complex_to_json(self.value)}


@dataclass(frozen=True)
class Power(Expr):
    exponent: float

    def _eval(self, n):
        return (n + 1.0) ** float(self.exponent) + 0j

    def to_json(self):
        return {"op": "pow", "exponent": float(self.exponent)}


@dataclass(frozen=True)
class Alternating(Expr):
    def _eval(self, n):
        return np.where(n % 2 == 0, 1.0, -1.0) + 0j

    def to_json(self):
        return {"op": "alt"}


@dataclass(frozen=True)
class BlockAlternating(Expr):
    period: int

    def _eval(self, n):
        return np.where((n // int(self.period)) % 2 == 0, 1.0, -1.0) + 0j

    def to_json(self):
        return {"op": "altblock", "period": int(self.period)}


@dataclass(frozen=True)
class Reciprocal(Expr):
    arg: Expr

    def _eval(self, n):
        return 1.0 / self.arg(n)

    def to_json(self):
        return {"op": "recip", "arg": self.arg.to_json()}


@dataclass(frozen=True)
class Imag(Expr):
    arg: Expr

    def _eval(self, n):
        return 1j * self.arg(n)

    def to_json(self):
        return {"op": "imag", "arg": self.arg.to_json()}


@dataclass(frozen=True)
class Sum(Expr):
    args: tuple

    def _eval(self, n):
        out = np.zeros(n.shape, dtype=complex)
        for arg in self.args:
            out = out + arg(n)
        return out

    def to_json(self):
        return {"op": "sum", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True)
class Product(Expr):
    args: tuple

    def _eval(self, n):
        out = np.ones(n.shape, dtype=complex)
        for arg in self.args:
            out = out * arg(n)
        return out

    def to_json(self):
        return {"op": "prod", "args": [a.to_json() for a in self.args]}


def const(value) -> Const:
    return Const(complex(value))


def power(exponent: float) -> Power:
    return Power(float(exponent))


def alt() -> Alternating:
    return Alternating()


def altblock(period: int) -> BlockAlternating:
    return BlockAlternating(int(period))


def recip(arg) -> Reciprocal:
    return Reciprocal(_lift(arg))


def imag(arg) -> Imag:
    return Imag(_lift(arg))


ZERO = Const(0j)


def from_json(node) -> Expr:
    """Build an expression from its JSON form; bare numbers become constants."""
    if not isinstance(node, dict):
        return Const(parse_complex(node))
    op = node.get("op")
    if op == "const":
        return Const(parse_complex(node["value"]))
    if op == "pow":
        return Power(float(node["exponent"]))
    if op == "alt":
        return Alternating()
    if op == "altblock":
        return BlockAlternating(int(node["period"]))
    if op == "recip":
        return Reciprocal(from_json(node["arg"]))
    if op == "imag":
        return Imag(from_json(node["arg"]))
    if op == "sum":
        return Sum(tuple(from_json(a) for a in node["args"]))
    if op == "prod":
        return Product(tuple(from_json(a) for a in node["args"]))
    raise ValueError(f"unknown expression op {op!r}")
