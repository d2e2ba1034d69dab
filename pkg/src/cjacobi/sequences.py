"""Coefficient models for complex Jacobi matrices.

A model produces the off-diagonal ``a_n`` and diagonal ``b_n`` entries.
Values are computed in vectorized chunks and cached in growable arrays, so
repeated access from transfer products and Turan traces is cheap.

Index ``-1`` is allowed for ``a`` only (it enters the first one-step
transfer matrix). Models built on a periodic pair use ``alpha[N-1]``;
explicit tables need ``a_minus1``.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as ex
from .errors import IndexOutOfTable, SlotOutOfRange, ZeroOffDiagonal
from .expr import Expr, complex_to_json, parse_complex


@dataclass(frozen=True)
class PeriodicPair:
    """N-periodic sequences alpha, beta indexed cyclically over all integers."""

    alpha: tuple
    beta: tuple

    def __post_init__(self):
        alpha = tuple(complex(v) for v in self.alpha)
        beta = tuple(complex(v) for v in self.beta)
        if not alpha or len(alpha) != len(beta):
            raise ValueError("alpha and beta must be non-empty and of equal length")
        if any(v == 0 for v in alpha):
            raise ValueError("every alpha entry must be nonzero")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def N(self) -> int:
        return len(self.alpha)

    def a(self, n: int) -> complex:
        return self.alpha[n % self.N]

    def b(self, n: int) -> complex:
        return self.beta[n % self.N]

    def alpha_at(self, n) -> np.ndarray:
        return np.asarray(self.alpha)[np.asarray(n) % self.N]

    def beta_at(self, n) -> np.ndarray:
        return np.asarray(self.beta)[np.asarray(n) % self.N]

    def to_json(self) -> dict:
        return {
            "period": self.N,
            "alpha": [complex_to_json(v) for v in self.alpha],
            "beta": [complex_to_json(v) for v in self.beta],
        }


class _Cache:
    __slots__ = ("lock", "a", "b", "first_zero")

    def __init__(self):
        self.lock = threading.Lock()
        self.a = np.empty(0, dtype=complex)
        self.b = np.empty(0, dtype=complex)
        self.first_zero = None


class CoefficientModel:
    """Common machinery: caching, index checks and the ``a_{-1}`` convention.

    Subclasses implement ``_evaluate(n)`` for an int array ``n >= 0``.
    """

    kind = "abstract"

    def _evaluate(self, n: np.ndarray):
        raise NotImplementedError

    @property
    def period(self) -> int:
        return 1

    @property
    def length(self):
        """Number of available indices, or None when unbounded."""
        return None

    def a_minus1(self) -> complex:
        raise NotImplementedError

    def evaluate(self, n):
        """Uncached evaluation at arbitrary non-negative indices."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        if n.size and n.min() < 0:
            raise IndexError("coefficient indices must be non-negative")
        if self.length is not None and n.size and n.max() >= self.length:
            raise IndexOutOfTable(f"index {int(n.max())} beyond table of length {self.length}")
        a, b = self._evaluate(n)
        a = np.asarray(a, dtype=complex)
        zero = np.flatnonzero(a == 0)
        if zero.size:
            raise ZeroOffDiagonal(int(n[zero[0]]))
        return a, np.asarray(b, dtype=complex)

    def _cache(self) -> _Cache:
        return self.__dict__.setdefault("_coeff_cache", _Cache())

    def _fill(self, stop: int) -> _Cache:
        cache = self._cache()
        if stop <= cache.a.size:
            return cache
        with cache.lock:
            have = cache.a.size
            if stop > have:
                want = max(stop, 2 * have, 64)
                if self.length is not None:
                    if stop > self.length:
                        raise IndexOutOfTable(
                            f"index {stop - 1} beyond table of length {self.length}"
                        )
                    want = min(want, self.length)
                n = np.arange(have, want, dtype=np.int64)
                a, b = self._evaluate(n)
                a = np.asarray(a, dtype=complex)
                b = np.asarray(b, dtype=complex)
                zero = np.flatnonzero(a == 0)
                if zero.size and cache.first_zero is None:
                    cache.first_zero = have + int(zero[0])
                new_a = np.concatenate([cache.a, a])
                new_b = np.concatenate([cache.b, b])
                # publish b before a: readers size-check against a
                cache.b = new_b
                cache.a = new_a
        return cache

    def coeff_range(self, start: int, stop: int):
        """Arrays ``a[start:stop]``, ``b[start:stop]``; ``start`` may be -1 (b_{-1} is nan)."""
        if stop <= start:
            return np.empty(0, dtype=complex), np.empty(0, dtype=complex)
        lead = start < 0
        if start < -1:
            raise IndexError("only index -1 is available below zero")
        cache = self._fill(stop)
        if cache.first_zero is not None and max(start, 0) <= cache.first_zero < stop:
            raise ZeroOffDiagonal(cache.first_zero)
        lo = max(start, 0)
        a = cache.a[lo:stop]
        b = cache.b[lo:stop]
        if lead:
            a = np.concatenate([[self.a_minus1()], a])
            b = np.concatenate([[np.nan + 0j], b])
        return a, b

    def coeff(self, n: int):
        if n < 0:
            raise IndexError("coefficient index must be non-negative")
        a, b = self.coeff_range(n, n + 1)
        return complex(a[0]), complex(b[0])

    def a_at(self, n: int) -> complex:
        if n == -1:
            return complex(self.a_minus1())
        return self.coeff(n)[0]

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ExplicitTable(CoefficientModel):
    a: tuple
    b: tuple
    a_minus1_value: complex | None = None

    kind = "ExplicitTable"

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-d of equal length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self):
        return self.a.size

    def _evaluate(self, n):
        return self.a[n], self.b[n]

    def a_minus1(self):
        if self.a_minus1_value is None:
            raise IndexOutOfTable("explicit table has no a_{-1}; supply a_minus1")
        if self.a_minus1_value == 0:
            raise ZeroOffDiagonal(-1)
        return complex(self.a_minus1_value)

    def to_json(self):
        out = {
            "kind": self.kind,
            "a": [complex_to_json(v) for v in self.a],
            "b": [complex_to_json(v) for v in self.b],
        }
        if self.a_minus1_value is not None:
            out["a_minus1"] = complex_to_json(self.a_minus1_value)
        return out


@dataclass(frozen=True, eq=False)
class AsymptoticallyPeriodic(CoefficientModel):
    """a_n = alpha_n + x_n, b_n = beta_n + y_n with decaying perturbations."""

    base: PeriodicPair
    perturb_a: Expr = ex.ZERO
    perturb_b: Expr = ex.ZERO

    kind = "AsymptoticallyPeriodic"

    @property
    def period(self):
        return self.base.N

    def _evaluate(self, n):
        return (
            self.base.alpha_at(n) + self.perturb_a(n),
            self.base.beta_at(n) + self.perturb_b(n),
        )

    def a_minus1(self):
        return self.base.a(-1)

    def to_json(self):
        return {
            "kind": self.kind,
            **self.base.to_json(),
            "perturb_a": self.perturb_a.to_json(),
            "perturb_b": self.perturb_b.to_json(),
        }


@dataclass(frozen=True, eq=False)
class PeriodicallyModulated(CoefficientModel):
    """a_n = alpha_n * m_n, b_n = beta_n * m_n with |m_n| -> infinity."""

    base: PeriodicPair
    modulator: Expr

    kind = "PeriodicallyModulated"

    @property
    def period(self):
        return self.base.N

    def _evaluate(self, n):
        m = self.modulator(n)
        return self.base.alpha_at(n) * m, self.base.beta_at(n) * m

    def a_minus1(self):
        return self.base.a(-1)

    def to_json(self):
        return {"kind": self.kind, **self.base.to_json(), "modulator": self.modulator.to_json()}


def perturbed_coeff(a, b, x, y, alternating: bool, n, period: int):
    """Additive perturbation of coefficient values at index ``n``.

    Plain mode gives ``(a + x, b + y)``; alternating mode gives
    ``(a + i e_n x, b + i e_n y)`` with ``e_n = (-1)**floor(n / period)``.
    Works elementwise on arrays.
    """
    if alternating:
        eps = np.where((np.asarray(n) // period) % 2 == 0, 1.0, -1.0)
        return a + 1j * eps * x, b + 1j * eps * y
    return a + x, b + y


@dataclass(frozen=True, eq=False)
class AdditivePerturbation(CoefficientModel):
    inner: CoefficientModel
    x: Expr = ex.ZERO
    y: Expr = ex.ZERO
    alternating: bool = False
    block: int | None = None

    kind = "AdditivePerturbation"

    @property
    def period(self):
        return self.inner.period

    @property
    def length(self):
        return self.inner.length

    @property
    def sign_period(self) -> int:
        return int(self.block) if self.block else self.inner.period

    def _evaluate(self, n):
        a, b = self.inner._evaluate(n)
        return perturbed_coeff(
            np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
            self.x(n), self.y(n), self.alternating, n, self.sign_period,
        )

    def a_minus1(self):
        return self.inner.a_minus1()

    def to_json(self):
        out = {
            "kind": self.kind,
            "inner": self.inner.to_json(),
            "x": self.x.to_json(),
            "y": self.y.to_json(),
            "alternating": bool(self.alternating),
        }
        if self.block:
            out["block"] = int(self.block)
        return out


def blend_coeff(base: PeriodicPair, c_tilde: Expr, d_tilde: Expr, k: int, i: int,
                perturb_a: Expr = ex.ZERO, perturb_b: Expr = ex.ZERO):
    """Entry ``(a, b)`` at slot ``i`` of block ``k`` of an N-periodic blend.

    Slots ``0..N-1`` carry the asymptotically periodic part at index kN+i,
    slot N carries ``(c_{2k}, d_{2k})`` and slot N+1 ``(c_{2k+1}, d_{2k+1})``.
    """
    N = base.N
    if not 0 <= i <= N + 1:
        raise SlotOutOfRange(f"slot {i} outside 0..{N + 1}")
    if i < N:
        m = k * N + i
        return base.a(m) + perturb_a.at(m), base.b(m) + perturb_b.at(m)
    m = 2 * k + (i - N)
    return c_tilde.at(m), d_tilde.at(m)


@dataclass(frozen=True, eq=False)
class Blend(CoefficientModel):
    """Blocks of length N+2: N asymptotically periodic entries, then two large ones."""

    base: PeriodicPair
    c_tilde: Expr
    d_tilde: Expr
    perturb_a: Expr = ex.ZERO
    perturb_b: Expr = ex.ZERO
    delta: complex | None = None

    kind = "Blend"

    @property
    def period(self):
        return self.base.N + 2

    def _evaluate(self, n):
        N = self.base.N
        k, i = np.divmod(n, N + 2)
        inner = k * N + np.minimum(i, N - 1)
        big = 2 * k + (i - N)
        small = i < N
        big_safe = np.where(small, 0, big)
        a = np.where(
            small,
            self.base.alpha_at(inner) + self.perturb_a(inner),
            self.c_tilde(big_safe),
        )
        b = np.where(
            small,
            self.base.beta_at(inner) + self.perturb_b(inner),
            self.d_tilde(big_safe),
        )
        return a, b

    def a_minus1(self):
        return self.base.a(-1)

    def limit_delta(self, n: int = 10**6) -> complex:
        """Limit of d_{2n}; taken from ``delta`` when given."""
        if self.delta is not None:
            return complex(self.delta)
        return self.d_tilde.at(2 * n)

    def to_json(self):
        out = {
            "kind": self.kind,
            **self.base.to_json(),
            "c_tilde": self.c_tilde.to_json(),
            "d_tilde": self.d_tilde.to_json(),
            "perturb_a": self.perturb_a.to_json(),
            "perturb_b": self.perturb_b.to_json(),
        }
        if self.delta is not None:
            out["delta"] = complex_to_json(self.delta)
        return out


@dataclass(frozen=True, eq=False)
class PowerLawExample(CoefficientModel):
    """a_n = alpha_n (n+1)^lam + i e_n (n+1)^mu, b_n = beta_n (n+1)^lam + i e_n (n+1)^mu.

    ``e_n = (-1)**floor(n/N)``. Requires ``0 <= mu < lam``.
    """

    base: PeriodicPair
    lam: float
    mu: float

    kind = "PowerLawExample"

    def __post_init__(self):
        if not 0 <= self.mu < self.lam:
            raise ValueError("need 0 <= mu < lam")

    @property
    def period(self):
        return self.base.N

    def _evaluate(self, n):
        grow = (n + 1.0) ** self.lam
        eps = np.where((n // self.base.N) % 2 == 0, 1.0, -1.0)
        twist = 1j * eps * (n + 1.0) ** self.mu
        return self.base.alpha_at(n) * grow + twist, self.base.beta_at(n) * grow + twist

    def a_minus1(self):
        return self.base.a(-1)

    def to_json(self):
        return {"kind": self.kind, **self.base.to_json(), "lambda": self.lam, "mu": self.mu}


def coeff(model: CoefficientModel, n: int):
    """``(a_n, b_n)`` for ``n >= 0``."""
    return model.coeff(n)


# convenience constructors ---------------------------------------------------

def free_jacobi() -> AsymptoticallyPeriodic:
    return AsymptoticallyPeriodic(PeriodicPair((1.0,), (0.0,)))


def periodic(alpha, beta) -> AsymptoticallyPeriodic:
    return AsymptoticallyPeriodic(PeriodicPair(tuple(alpha), tuple(beta)))


# JSON ------------------------------------------------------------------------

def _pair(node) -> PeriodicPair:
    alpha = [parse_complex(v) for v in node["alpha"]]
    beta = [parse_complex(v) for v in node.get("beta", [0.0] * len(alpha))]
    if "period" in node and int(node["period"]) != len(alpha):
        raise ValueError("period does not match the length of alpha")
    return PeriodicPair(tuple(alpha), tuple(beta))


def _expr(node, key):
    return ex.from_json(node[key]) if key in node else ex.ZERO


def model_from_json(node: dict) -> CoefficientModel:
    if "model" in node:
        node = node["model"]
    kind = node.get("kind")
    if kind == "ExplicitTable":
        am1 = node.get("a_minus1")
        return ExplicitTable(
            tuple(parse_complex(v) for v in node["a"]),
            tuple(parse_complex(v) for v in node["b"]),
            None if am1 is None else parse_complex(am1),
        )
    if kind == "AsymptoticallyPeriodic":
        return AsymptoticallyPeriodic(_pair(node), _expr(node, "perturb_a"), _expr(node, "perturb_b"))
    if kind == "PeriodicallyModulated":
        return PeriodicallyModulated(_pair(node), ex.from_json(node["modulator"]))
    if kind == "AdditivePerturbation":
        return AdditivePerturbation(
            model_from_json(node["inner"]),
            _expr(node, "x"),
            _expr(node, "y"),
            bool(node.get("alternating", False)),
            node.get("block"),
        )
    if kind == "Blend":
        delta = node.get("delta")
        return Blend(
            _pair(node),
            ex.from_json(node["c_tilde"]),
            ex.from_json(node.get("d_tilde", 0.0)),
            _expr(node, "perturb_a"),
            _expr(node, "perturb_b"),
            None if delta is None else parse_complex(delta),
        )
    if kind == "PowerLawExample":
        return PowerLawExample(_pair(node), float(node["lambda"]), float(node["mu"]))
    raise ValueError(f"unknown model kind {kind!r}")


def model_to_json(model: CoefficientModel) -> dict:
    return {"model": model.to_json()}


def load_model(path) -> CoefficientModel:
    with open(Path(path)) as f:
        return model_from_json(json.load(f))
