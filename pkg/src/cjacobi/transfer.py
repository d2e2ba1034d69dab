"""Transfer matrices, their limits for the standard model classes, and Lambda scans."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyRange, OffsetOutOfRange
from .sequences import (
    AdditivePerturbation,
    AsymptoticallyPeriodic,
    Blend,
    CoefficientModel,
    PeriodicallyModulated,
    PeriodicPair,
    PowerLawExample,
)


@dataclass(frozen=True)
class TransferMatrix:
    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def from_array(cls, arr) -> "TransferMatrix":
        arr = np.asarray(arr, dtype=complex)
        return cls(complex(arr[0, 0]), complex(arr[0, 1]), complex(arr[1, 0]), complex(arr[1, 1]))

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    def trace(self) -> complex:
        return self.m11 + self.m22

    def discr(self) -> complex:
        return self.trace() ** 2 - 4 * self.det()

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def __add__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(self.m11 + other.m11, self.m12 + other.m12,
                              self.m21 + other.m21, self.m22 + other.m22)

    def __sub__(self, other: "TransferMatrix") -> "TransferMatrix":
        return self + (-1.0) * other

    def __mul__(self, c) -> "TransferMatrix":
        c = complex(c)
        return TransferMatrix(c * self.m11, c * self.m12, c * self.m21, c * self.m22)

    __rmul__ = __mul__

    def conj(self) -> "TransferMatrix":
        return TransferMatrix(self.m11.conjugate(), self.m12.conjugate(),
                              self.m21.conjugate(), self.m22.conjugate())

    def adjoint(self) -> "TransferMatrix":
        return TransferMatrix(self.m11.conjugate(), self.m21.conjugate(),
                              self.m12.conjugate(), self.m22.conjugate())

    def inverse(self) -> "TransferMatrix":
        d = self.det()
        return TransferMatrix(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d)

    def apply(self, v):
        v1, v2 = v
        return (self.m11 * v1 + self.m12 * v2, self.m21 * v1 + self.m22 * v2)

    def frobenius(self) -> float:
        return math.sqrt(sum(abs(x) ** 2 for x in self.entries()))

    def norm1(self) -> float:
        return sum(abs(x) for x in self.entries())

    def norm(self) -> float:
        """Operator (spectral) norm: largest singular value, closed form."""
        f2 = sum(abs(x) ** 2 for x in self.entries())
        d = abs(self.det())
        return math.sqrt(max(0.5 * (f2 + math.sqrt(max(f2 * f2 - 4 * d * d, 0.0))), 0.0))

    def max_imag(self) -> float:
        return max(abs(x.imag) for x in self.entries())

    def entries(self):
        return (self.m11, self.m12, self.m21, self.m22)


E_MATRIX = TransferMatrix(0j, -1 + 0j, 1 + 0j, 0j)


def sym_part(M: TransferMatrix) -> TransferMatrix:
    """Hermitian symmetrisation (M + M*)/2; the result is exactly Hermitian."""
    s12 = 0.5 * (M.m12 + M.m21.conjugate())
    return TransferMatrix(
        complex(M.m11.real, 0.0),
        s12,
        s12.conjugate(),
        complex(M.m22.real, 0.0),
    )


def discriminant(M: TransferMatrix) -> complex:
    return M.discr()


def operator_norm(arr) -> np.ndarray:
    """Spectral norm of a stack of 2x2 matrices (shape (..., 2, 2))."""
    arr = np.asarray(arr, dtype=complex)
    f2 = np.sum(np.abs(arr) ** 2, axis=(-2, -1))
    d = np.abs(arr[..., 0, 0] * arr[..., 1, 1] - arr[..., 0, 1] * arr[..., 1, 0])
    return np.sqrt(0.5 * (f2 + np.sqrt(np.maximum(f2 * f2 - 4 * d * d, 0.0))))


# one step and N steps --------------------------------------------------------

def one_step(model: CoefficientModel, j: int, z: complex) -> TransferMatrix:
    """B_j(z) = [[0, 1], [-a_{j-1}/a_j, (z - b_j)/a_j]]."""
    a_prev = model.a_at(j - 1)
    a_j, b_j = model.coeff(j)
    return TransferMatrix(0j, 1 + 0j, -a_prev / a_j, (z - b_j) / a_j)


def n_step(model: CoefficientModel, n: int, N: int, z: complex) -> TransferMatrix:
    """X_n(z) = B_{n+N-1} ... B_n, mapping (u_{n-1}, u_n) to (u_{n+N-1}, u_{n+N})."""
    if n < 1:
        raise ValueError("n_step needs n >= 1")
    X = TransferMatrix.identity()
    for j in range(n, n + N):
        X = one_step(model, j, z) @ X
    return X


def one_step_batch(model: CoefficientModel, js, z) -> np.ndarray:
    """Stack of B_j(z) for an index array ``js`` (all >= 0); shape (len, 2, 2)."""
    js = np.asarray(js, dtype=np.int64)
    lo, hi = int(js.min()), int(js.max())
    a, b = model.coeff_range(lo - 1, hi + 1)
    k = js - (lo - 1)
    a_j, a_prev, b_j = a[k], a[k - 1], b[k]
    out = np.zeros(js.shape + (2, 2), dtype=complex)
    out[..., 0, 1] = 1.0
    out[..., 1, 0] = -a_prev / a_j
    out[..., 1, 1] = (z - b_j) / a_j
    return out


def n_step_batch(model: CoefficientModel, ns, N: int, z) -> np.ndarray:
    """Stack of X_n(z) for start indices ``ns`` (all >= 1)."""
    ns = np.asarray(ns, dtype=np.int64)
    X = np.broadcast_to(np.eye(2, dtype=complex), ns.shape + (2, 2)).copy()
    for k in range(N):
        X = one_step_batch(model, ns + k, z) @ X
    return X


# limits ----------------------------------------------------------------------

def periodic_one_step(base: PeriodicPair, j: int, x: complex) -> TransferMatrix:
    return TransferMatrix(0j, 1 + 0j, -base.a(j - 1) / base.a(j), (x - base.b(j)) / base.a(j))


def periodic_limit(base: PeriodicPair, i: int, x: complex) -> TransferMatrix:
    """Product of the periodic one-step matrices over j = i .. N+i-1 (latest on the left)."""
    X = TransferMatrix.identity()
    for j in range(i, i + base.N):
        X = periodic_one_step(base, j, x) @ X
    return X


def blend_center(base: PeriodicPair, delta: complex, z: complex) -> TransferMatrix:
    """Limit of the three-step product across the two large blend entries.

    The lower-left entry is +alpha_{N-1}/alpha_0: the determinant of the
    three-step product is a_{k-1}/a_{k+2} > 0 for every block.
    """
    a0, aN1, b0 = base.a(0), base.a(base.N - 1), base.b(0)
    return TransferMatrix(0j, -1 + 0j, aN1 / a0, -(2 * z - b0 - delta) / a0)


def blend_limit(base: PeriodicPair, delta: complex, i: int, z: complex) -> TransferMatrix:
    """Limit of X_{n(N+2)+i} for a blend, offsets i in 1..N."""
    N = base.N
    if not 1 <= i <= N:
        raise OffsetOutOfRange(f"blend offset {i} outside 1..{N}")
    left = TransferMatrix.identity()
    for j in range(1, i):
        left = periodic_one_step(base, j, z) @ left
    right = TransferMatrix.identity()
    for j in range(i, N):
        right = periodic_one_step(base, j, z) @ right
    return left @ blend_center(base, delta, z) @ right


def estimate_gamma(model: CoefficientModel, i: int, N: int, n: int = 10**6):
    """Estimate lim a_{nN+i-1}/|a_{nN+i-1}| at block ``n``; returns (gamma, drift over a decade)."""
    def phase(k):
        idx = k * N + i - 1
        if model.length is not None:
            idx = min(idx, model.length - 1)
            idx -= (idx - (i - 1)) % N
        if idx < 0:
            return complex(model.a_minus1()) / abs(model.a_minus1())
        a = complex(model.evaluate([idx])[0][0])
        return a / abs(a)

    g = phase(n)
    drift = abs(g - phase(max(n // 10, 1)))
    return g, drift


@dataclass
class LimitFamily:
    """Offset-indexed limits of the N-step transfer matrices for a model class."""

    kind: str
    period: int
    offsets: tuple
    provider: Callable[[int, complex], TransferMatrix]
    z_independent: bool = False
    model: CoefficientModel | None = field(default=None, repr=False)

    def matrix(self, i: int, z: complex) -> TransferMatrix:
        if i not in self.offsets:
            raise OffsetOutOfRange(f"offset {i} not in {self.offsets}")
        return self.provider(i, z)

    def gamma(self, i: int) -> complex:
        if self.model is None:
            return 1 + 0j
        g, _ = estimate_gamma(self.model, i, self.period)
        return g


def limit_family(model: CoefficientModel) -> LimitFamily | None:
    """Limit family of the model, or None for explicit tables."""
    if isinstance(model, AdditivePerturbation):
        inner = limit_family(model.inner)
        if inner is None:
            return None
        return LimitFamily(inner.kind, inner.period, inner.offsets, inner.provider,
                           inner.z_independent, model)
    if isinstance(model, AsymptoticallyPeriodic):
        base = model.base
        return LimitFamily("asymptotically_periodic", base.N, tuple(range(base.N)),
                           lambda i, z: periodic_limit(base, i, z), False, model)
    if isinstance(model, (PeriodicallyModulated, PowerLawExample)):
        base = model.base
        return LimitFamily("periodically_modulated", base.N, tuple(range(base.N)),
                           lambda i, z: periodic_limit(base, i, 0.0), True, model)
    if isinstance(model, Blend):
        base, delta = model.base, model.limit_delta()
        return LimitFamily("blend", base.N + 2, tuple(range(1, base.N + 1)),
                           lambda i, z: blend_limit(base, delta, i, z), False, model)
    return None


# Lambda scan -----------------------------------------------------------------

@dataclass
class LambdaScanResult:
    step: float
    gamma: complex
    t: np.ndarray
    tr: np.ndarray
    det: np.ndarray
    discr: np.ndarray
    inside: np.ndarray
    intervals: list
    isolated: list = field(default_factory=list)
    edge_samples: list = field(default_factory=list)
    offset: int | None = None

    def contains(self, t: float) -> bool:
        return any(lo < t < hi for lo, hi in self.intervals)

    def interior_points(self, count: int, margin: float = 0.1) -> list:
        """Evenly spaced t values inside the intervals, ``margin`` * length from each end."""
        pts = []
        lengths = [hi - lo for lo, hi in self.intervals]
        total = sum(lengths)
        if total <= 0 or count <= 0:
            return pts
        for (lo, hi), length in zip(self.intervals, lengths):
            k = max(1, round(count * length / total)) if len(self.intervals) > 1 else count
            a, b = lo + margin * length, hi - margin * length
            pts.extend(np.linspace(a, b, k).tolist() if k > 1 else [0.5 * (a + b)])
        return pts

    def to_json(self) -> dict:
        return {
            "offset": self.offset,
            "step": self.step,
            "gamma": [self.gamma.real, self.gamma.imag],
            "intervals": [[lo, hi] for lo, hi in self.intervals],
            "isolated": list(self.isolated),
            "edge_samples": list(self.edge_samples),
            "samples": [
                {
                    "t": float(t), "tr_re": float(tr.real), "tr_im": float(tr.imag),
                    "det_re": float(d.real), "det_im": float(d.imag),
                    "discr_re": float(dc.real),
                }
                for t, tr, d, dc in zip(self.t, self.tr, self.det, self.discr)
            ],
        }

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "tr_re", "tr_im", "det_re", "det_im", "discr_re", "in_lambda"])
        for t, tr, d, dc, ins in zip(self.t, self.tr, self.det, self.discr, self.inside):
            w.writerow([f"{t:.17g}", f"{tr.real:.17g}", f"{tr.imag:.17g}", f"{d.real:.17g}",
                        f"{d.imag:.17g}", f"{dc.real:.17g}", int(ins)])
        return buf.getvalue()

    @classmethod
    def from_json(cls, node: dict) -> "LambdaScanResult":
        samples = node.get("samples", [])
        t = np.array([s["t"] for s in samples], dtype=float)
        tr = np.array([complex(s["tr_re"], s["tr_im"]) for s in samples], dtype=complex)
        det = np.array([complex(s["det_re"], s["det_im"]) for s in samples], dtype=complex)
        discr = np.array([s["discr_re"] for s in samples], dtype=complex)
        g = node.get("gamma", [1.0, 0.0])
        return cls(
            step=float(node["step"]), gamma=complex(g[0], g[1]), t=t, tr=tr, det=det,
            discr=discr, inside=np.zeros(t.shape, dtype=bool),
            intervals=[tuple(iv) for iv in node["intervals"]],
            isolated=list(node.get("isolated", [])),
            edge_samples=list(node.get("edge_samples", [])),
            offset=node.get("offset"),
        )


def in_lambda(M: TransferMatrix, tol: float = 1e-8) -> bool:
    d = M.discr()
    return (M.max_imag() <= tol and abs(M.det()) > tol
            and abs(d.imag) <= tol and d.real < -tol)


def lambda_scan(provider: Callable[[complex], TransferMatrix], t0: float = -4.0,
                t1: float = 4.0, step: float = 1e-3, gamma: complex = 1.0,
                tol: float = 1e-8, offset: int | None = None) -> LambdaScanResult:
    """Sample z = gamma * t on a grid and collect the maximal runs inside Lambda.

    Interval endpoints are placed halfway between the last inside sample and
    the first outside one, clipped to [t0, t1]. Runs of a single sample are
    listed in ``isolated`` as well.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if not t1 > t0:
        raise EmptyRange(f"empty scan range [{t0}, {t1}]")
    gamma = complex(gamma)
    count = int(round((t1 - t0) / step)) + 1
    t = t0 + step * np.arange(count)
    t[-1] = min(t[-1], t1)
    mats = [provider(gamma * float(s)) for s in t]
    tr = np.array([M.trace() for M in mats])
    det = np.array([M.det() for M in mats])
    discr = np.array([M.discr() for M in mats])
    inside = np.array([in_lambda(M, tol) for M in mats], dtype=bool)
    edge = [float(s) for s, d in zip(t, discr) if abs(d) <= tol]

    intervals, isolated = [], []
    k = 0
    while k < count:
        if not inside[k]:
            k += 1
            continue
        start = k
        while k + 1 < count and inside[k + 1]:
            k += 1
        lo = t0 if start == 0 else 0.5 * (t[start - 1] + t[start])
        hi = t1 if k == count - 1 else 0.5 * (t[k] + t[k + 1])
        intervals.append((float(lo), float(hi)))
        if start == k:
            isolated.append(float(t[k]))
        k += 1
    return LambdaScanResult(step, gamma, t, tr, det, discr, inside, intervals,
                            isolated, edge, offset)


def scan_family(family: LimitFamily, offset: int, t0: float, t1: float, step: float,
                gamma: complex | None = None, tol: float = 1e-8) -> LambdaScanResult:
    if gamma is None:
        gamma = family.gamma(offset)
    return lambda_scan(lambda z: family.matrix(offset, z), t0, t1, step, gamma, tol, offset)


def default_scan_radius(model: CoefficientModel) -> float:
    """Radius enclosing every Lambda point of the model's limit family."""
    base = getattr(model, "base", None)
    if base is None and isinstance(model, AdditivePerturbation):
        return default_scan_radius(model.inner)
    if base is None:
        return 4.0
    r = max(abs(v) for v in base.beta) + 2 * max(abs(v) for v in base.alpha)
    if isinstance(model, Blend):
        r += abs(model.limit_delta())
    return float(r) + 1.0


def scan_to_json(scan: LambdaScanResult) -> str:
    return json.dumps(scan.to_json(), indent=2)
