"""Eigenvalues of finite sections via the scaled characteristic polynomial.

Roots are isolated with the argument principle on rectangles (quadrisection)
and polished with Newton's method. All boxes at one depth are processed
together as one vectorized batch.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, RootOnBoundary
from .sequences import CoefficientModel

MAX_DIM = 2000
SPLIT = 0.4713  # off-centre so that symmetric root sets avoid cell edges
_ALT_SPLITS = (0.5371, 0.4402, 0.5629)


@dataclass(frozen=True)
class CharPolyValue:
    mantissa: complex
    exponent: int

    @property
    def value(self) -> complex:
        try:
            return complex(math.ldexp(self.mantissa.real, self.exponent),
                           math.ldexp(self.mantissa.imag, self.exponent))
        except OverflowError:
            return complex(math.inf, math.inf)

    def __abs__(self):
        return abs(self.mantissa) * 2.0 ** self.exponent


@dataclass(frozen=True)
class Box:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box {self}")

    @classmethod
    def parse(cls, text: str) -> "Box":
        vals = [float(v) for v in text.replace(":", ",").split(",")]
        if len(vals) != 4:
            raise ValueError("box needs x0,x1,y0,y1")
        return cls(*vals)

    @property
    def size(self) -> float:
        return max(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (self.x0 - slack <= z.real <= self.x1 + slack
                and self.y0 - slack <= z.imag <= self.y1 + slack)

    def split(self, f: float = SPLIT):
        xm = self.x0 + f * (self.x1 - self.x0)
        ym = self.y0 + f * (self.y1 - self.y0)
        return (Box(self.x0, xm, self.y0, ym), Box(xm, self.x1, self.y0, ym),
                Box(self.x0, xm, ym, self.y1), Box(xm, self.x1, ym, self.y1))

    def corners(self):
        return (complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1))

    def to_json(self):
        return [self.x0, self.x1, self.y0, self.y1]


def _coefficients(model: CoefficientModel, dim: int):
    if dim < 1:
        raise ValueError("dim must be >= 1")
    a, b = model.coeff_range(0, dim)
    return a[: dim - 1] ** 2, b


def _recurrence(asq, b, z):
    """Scaled (p, p', exponent) of det(z - J) at every point of ``z``."""
    z = np.asarray(z, dtype=complex)
    p0 = np.ones_like(z)
    d0 = np.zeros_like(z)
    p1 = z - b[0]
    d1 = np.ones_like(z)
    exp = np.zeros(z.shape, dtype=np.int64)
    for k in range(1, b.size):
        c = z - b[k]
        s = asq[k - 1]
        p0, p1 = p1, c * p1 - s * p0
        d0, d1 = d1, p0 + c * d1 - s * d0
        if k & 3 == 0 or k == b.size - 1:
            m = np.maximum(np.maximum(np.abs(p0), np.abs(p1)), np.maximum(np.abs(d0), np.abs(d1)))
            _, e = np.frexp(np.where(m > 0, m, 1.0))
            e = e.astype(np.int64)
            p0, p1 = np.ldexp(p0.real, -e) + 1j * np.ldexp(p0.imag, -e), np.ldexp(p1.real, -e) + 1j * np.ldexp(p1.imag, -e)
            d0, d1 = np.ldexp(d0.real, -e) + 1j * np.ldexp(d0.imag, -e), np.ldexp(d1.real, -e) + 1j * np.ldexp(d1.imag, -e)
            exp += e
    return p1, d1, exp


def charpoly(model: CoefficientModel, dim: int, z: complex) -> CharPolyValue:
    """det(z Id - J_dim) as mantissa * 2**exponent with 0.5 <= |mantissa| < 2."""
    asq, b = _coefficients(model, dim)
    p, _, e = _recurrence(asq, b, np.array([z], dtype=complex))
    m = complex(p[0])
    if m == 0:
        return CharPolyValue(0j, 0)
    _, k = math.frexp(abs(m))
    return CharPolyValue(complex(math.ldexp(m.real, -k + 1), math.ldexp(m.imag, -k + 1)), int(e[0]) + k - 1)


def charpoly_derivative_ratio(model: CoefficientModel, dim: int, z) -> np.ndarray:
    """Newton step p(z)/p'(z), free of the overall scale."""
    asq, b = _coefficients(model, dim)
    p, d, _ = _recurrence(asq, b, np.atleast_1d(np.asarray(z, dtype=complex)))
    with np.errstate(divide="ignore", invalid="ignore"):
        return p / d


# argument principle -------------------------------------------------------------

class _Contour:
    """Adaptively sampled closed boundary of one box (last point repeats the first)."""

    def __init__(self, box: Box, per_side: int):
        c = box.corners() + (box.corners()[0],)
        t = np.linspace(0.0, 1.0, per_side, endpoint=False)
        self.z = np.concatenate([c[k] + (c[k + 1] - c[k]) * t for k in range(4)] + [np.array([c[0]])])
        self.phase = np.full(self.z.size, np.nan)
        self.rate = np.full(self.z.size, np.nan)
        self.box = box
        self.scale = 1.0 + max(abs(v) for v in c)

    def missing(self) -> np.ndarray:
        return np.flatnonzero(np.isnan(self.phase))

    def step(self):
        """Winding number, a RootOnBoundary, or None after inserting midpoints."""
        dphi = np.angle(np.exp(1j * np.diff(self.phase)))
        h = np.abs(np.diff(self.z))
        r = np.maximum(self.rate[:-1], self.rate[1:])
        bad = np.flatnonzero((np.abs(dphi) > math.pi / 2) | (h * r > 1.0))
        if bad.size == 0:
            return int(round(dphi.sum() / (2 * math.pi)))
        tiny = bad[h[bad] < 1e-12 * self.scale]
        if tiny.size:
            return RootOnBoundary(complex(self.z[tiny[0]]))
        mids = 0.5 * (self.z[bad] + self.z[bad + 1])
        self.z = np.insert(self.z, bad + 1, mids)
        self.phase = np.insert(self.phase, bad + 1, np.nan)
        self.rate = np.insert(self.rate, bad + 1, np.nan)
        return None


def _winding_batch(asq, b, boxes, per_side: int = 16, max_passes: int = 80):
    """Winding numbers for several boxes; entries are ints or RootOnBoundary."""
    contours = [_Contour(bx, per_side) for bx in boxes]
    out = [None] * len(contours)
    todo = list(range(len(contours)))
    for _ in range(max_passes):
        if not todo:
            break
        miss = [contours[k].missing() for k in todo]
        flat = np.concatenate([contours[k].z[m] for k, m in zip(todo, miss)])
        p, d, _ = _recurrence(asq, b, flat)
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.abs(p / d)
        pos = 0
        nxt = []
        for k, m in zip(todo, miss):
            c = contours[k]
            pk, dk = p[pos:pos + m.size], dist[pos:pos + m.size]
            pos += m.size
            hit = (pk == 0) | (dk < 1e-12 * c.scale)
            if hit.any():
                out[k] = RootOnBoundary(complex(c.z[m[np.argmax(hit)]]))
                continue
            c.phase[m] = np.angle(pk)
            c.rate[m] = 1.0 / dk
            res = c.step()
            if res is None:
                nxt.append(k)
            else:
                out[k] = res
        todo = nxt
    for k in todo:
        out[k] = RootOnBoundary(contours[k].box.center)
    return out


def winding_count(model: CoefficientModel, dim: int, box: Box) -> int:
    """Number of eigenvalues of the dim x dim section inside ``box``, with multiplicity."""
    if not isinstance(box, Box):
        box = Box(*box)
    asq, b = _coefficients(model, dim)
    res = _winding_batch(asq, b, [box])[0]
    if isinstance(res, Exception):
        raise res
    return res


# finite section ------------------------------------------------------------------

@dataclass
class Root:
    value: complex
    multiplicity: int
    residual: float

    def to_json(self):
        return {"re": self.value.real, "im": self.value.imag,
                "multiplicity": self.multiplicity, "residual": self.residual}


@dataclass
class SpectrumEstimate:
    dimension: int
    box: Box
    roots: list = field(default_factory=list)
    complete: bool = True
    unresolved: list = field(default_factory=list)
    evaluations: int = 0

    @property
    def count(self) -> int:
        return sum(r.multiplicity for r in self.roots)

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.roots for _ in range(r.multiplicity)], dtype=complex)

    def to_json(self):
        return {"dimension": self.dimension, "box": self.box.to_json(),
                "complete": self.complete, "count": self.count,
                "roots": [r.to_json() for r in self.roots],
                "unresolved": [[bx.to_json(), n] for bx, n in self.unresolved]}

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "multiplicity", "residual"])
        for r in sorted(self.roots, key=lambda r: (r.value.real, r.value.imag)):
            w.writerow([f"{r.value.real:.17g}", f"{r.value.imag:.17g}", r.multiplicity,
                        f"{r.residual:.17g}"])
        return buf.getvalue()


def _newton(asq, b, z0: np.ndarray, tol: float, iters: int = 60):
    z = z0.astype(complex)
    step = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(iters):
        if not active.any():
            break
        p, d, _ = _recurrence(asq, b, z[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(p == 0, 0, p / d)
        s = np.where(np.isfinite(s), s, np.nan)
        zi = z[active] - np.nan_to_num(s)
        z[active] = zi
        st = np.abs(s)
        step[active] = st
        idx = np.flatnonzero(active)
        done = ~(st > 1e-3 * tol * (1 + np.abs(zi)))  # NaN counts as done (failed)
        active[idx[done]] = False
    return z, step


def finite_section(model: CoefficientModel, dim: int, box: Box, tol: float = 1e-8,
                   budget: int = 200000, partial: bool = True) -> SpectrumEstimate:
    """All eigenvalues of the dim x dim section inside ``box``.

    Cells holding a single eigenvalue are polished by Newton's method as soon
    as they are found; cells narrower than ``tol`` holding several become one
    root with multiplicity. ``budget`` caps the number of winding counts; when
    it runs out the estimate is marked incomplete (or BudgetExceeded is
    raised if ``partial`` is false).
    """
    if dim > MAX_DIM:
        raise ValueError(f"dim {dim} exceeds the desk-scale limit {MAX_DIM}")
    if not isinstance(box, Box):
        box = Box(*box)
    asq, b = _coefficients(model, dim)
    top = _winding_batch(asq, b, [box])[0]
    if isinstance(top, Exception):
        raise top
    est = SpectrumEstimate(dim, box, evaluations=1)
    level = [(box, top)] if top > 0 else []
    while level:
        singles = [(bx, n) for bx, n in level if n == 1]
        rest = [(bx, n) for bx, n in level if n > 1]
        if singles:
            z, step = _newton(asq, b, np.array([bx.center for bx, _ in singles]), tol)
            for (bx, n), zr, st in zip(singles, z, step):
                if np.isfinite(st) and st <= tol and bx.contains(complex(zr), slack=tol):
                    est.roots.append(Root(complex(zr), 1, float(st)))
                else:
                    rest.append((bx, n))
        nxt = []
        for bx, n in rest:
            if bx.size < tol:
                est.roots.append(Root(bx.center, n, bx.size))
            else:
                nxt.append((bx, n))
        if not nxt:
            break
        if est.evaluations + 4 * len(nxt) > budget:
            est.complete = False
            est.unresolved = nxt
            if not partial:
                raise BudgetExceeded(f"{len(nxt)} cells left after {est.evaluations} counts")
            break
        level = []
        splits = {id(c): 0 for c in nxt}
        queue = nxt
        while queue:
            children = [(c, bx.split(SPLIT if splits[id(c)] == 0 else _ALT_SPLITS[splits[id(c)] - 1]))
                        for c in queue for bx in [c[0]]]
            flat = [q for _, kids in children for q in kids]
            counts = _winding_batch(asq, b, flat)
            est.evaluations += len(flat)
            retry = []
            for k, (parent, kids) in enumerate(children):
                cs = counts[4 * k: 4 * k + 4]
                ok = all(isinstance(v, int) for v in cs) and sum(cs) == parent[1]
                if ok:
                    level.extend((q, v) for q, v in zip(kids, cs) if v > 0)
                elif splits[id(parent)] < len(_ALT_SPLITS):
                    splits[id(parent)] += 1
                    retry.append(parent)
                else:
                    est.complete = False
                    est.unresolved.append(parent)
            queue = retry
    if est.unresolved and not partial:
        raise BudgetExceeded("cells could not be resolved consistently")
    return est
