"""Generalised eigenvectors, two-sided bound checks, Carleman sums and the
proper/improper classification.

Trajectories are stored as mantissa pairs with an integer power-of-two
exponent: the true pair is ``(prev, cur) * 2**exp``. Rescaling only ever
multiplies by powers of two, so ratios built from a trajectory are unaffected
by where the rescaling happened.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInitial, ZeroOffDiagonal
from .sequences import CoefficientModel
from .series import CONVERGING, DIVERGING, INCONCLUSIVE, SeriesVerdict, series_verdict
from .transfer import (
    LambdaScanResult,
    default_scan_radius,
    estimate_gamma,
    limit_family,
    scan_family,
)

LN2 = math.log(2.0)


@dataclass
class EigenvectorTrajectory:
    z: complex
    alpha: tuple
    n: np.ndarray      # sample index n; the pair is (u_{n-1}, u_n)
    prev: np.ndarray
    cur: np.ndarray
    exp: np.ndarray
    stride: int = 1

    def index_of(self, n: int) -> int:
        k, r = divmod(n - 1, self.stride)
        if r or not 0 <= k < self.n.size:
            raise KeyError(f"index {n} not recorded (stride {self.stride})")
        return k

    def pair(self, n: int):
        """Mantissas and exponent ``(u_{n-1}, u_n, e)`` at recorded index n."""
        k = self.index_of(n)
        return complex(self.prev[k]), complex(self.cur[k]), int(self.exp[k])

    def values(self) -> np.ndarray:
        """Unscaled u_0 .. u_{n_max} (stride 1 only); may overflow to inf."""
        if self.stride != 1:
            raise ValueError("values() needs a stride-1 trajectory")
        scale = np.ldexp(1.0, self.exp.astype(np.int64).clip(-1074, 1023))
        u = np.empty(self.n.size + 1, dtype=complex)
        u[0] = self.prev[0] * scale[0]
        with np.errstate(over="ignore", invalid="ignore"):
            u[1:] = self.cur * scale
        return u

    def log_abs2(self) -> np.ndarray:
        """ln |u_n|^2 for n = 0 .. n_max (stride 1 only)."""
        if self.stride != 1:
            raise ValueError("log_abs2() needs a stride-1 trajectory")
        with np.errstate(divide="ignore"):
            first = 2 * np.log(abs(self.prev[0])) + 2 * LN2 * self.exp[0]
            rest = 2 * np.log(np.abs(self.cur)) + 2 * LN2 * self.exp
        return np.concatenate([[first], rest])

    def log_pair_energy(self) -> np.ndarray:
        """ln(|u_{n-1}|^2 + |u_n|^2) at every recorded n."""
        with np.errstate(divide="ignore"):
            return (np.logaddexp(2 * np.log(np.abs(self.prev)), 2 * np.log(np.abs(self.cur)))
                    + 2 * LN2 * self.exp)

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "re_u", "im_u", "scale_exp"])
        for n, u, e in zip(self.n, self.cur, self.exp):
            w.writerow([int(n), f"{u.real:.17g}", f"{u.imag:.17g}", int(e)])
        return buf.getvalue()


def evolve(model: CoefficientModel, z: complex, alpha, n_max: int, stride: int = 1,
           low: int = -256, high: int = 256) -> EigenvectorTrajectory:
    """Run z u_n = a_n u_{n+1} + b_n u_n + a_{n-1} u_{n-1} from (u_0, u_1) = alpha.

    Pairs (u_{n-1}, u_n) are recorded for n = 1, 1 + stride, ... <= n_max.
    Whenever max(|u_{n-1}|, |u_n|) leaves [2**low, 2**high] both values are
    multiplied by a power of two and the exponent ledger absorbs it. The
    default window keeps squared mantissas (quadratic forms) finite.
    """
    u0, u1 = complex(alpha[0]), complex(alpha[1])
    if u0 == 0 and u1 == 0:
        raise DegenerateInitial("initial condition (u_0, u_1) must be nonzero")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    z = complex(z)
    a, b = model.coeff_range(0, max(n_max, 1))
    a = a.tolist()
    b = b.tolist()
    lo_t, hi_t = math.ldexp(1.0, low), math.ldexp(1.0, high)

    count = (n_max - 1) // stride + 1
    ns = 1 + stride * np.arange(count)
    prev = np.empty(count, dtype=complex)
    cur = np.empty(count, dtype=complex)
    exps = np.empty(count, dtype=np.int64)

    p, q, e = u0, u1, 0
    m = max(abs(p), abs(q))
    if m < lo_t or m > hi_t:
        s = math.frexp(m)[1]
        p, q, e = math.ldexp(p.real, -s) + 1j * math.ldexp(p.imag, -s), \
            math.ldexp(q.real, -s) + 1j * math.ldexp(q.imag, -s), s
    prev[0], cur[0], exps[0] = p, q, e
    k = 1
    for n in range(1, n_max):
        nxt = ((z - b[n]) * q - a[n - 1] * p) / a[n]
        p, q = q, nxt
        m = max(abs(p), abs(q))
        if m < lo_t or m > hi_t:
            if m == 0:
                raise DegenerateInitial("trajectory collapsed to zero")
            s = math.frexp(m)[1]
            p = complex(math.ldexp(p.real, -s), math.ldexp(p.imag, -s))
            q = complex(math.ldexp(q.real, -s), math.ldexp(q.imag, -s))
            e += s
        if n % stride == 0:
            prev[k], cur[k], exps[k] = p, q, e
            k += 1
    return EigenvectorTrajectory(z, (u0, u1), ns, prev, cur, exps, stride)


def eigen_seed(model: CoefficientModel, z: complex, u0: complex = 1.0):
    """Initial pair (u_0, (z - b_0) u_0 / a_0) of a candidate eigenvector of A."""
    if u0 == 0:
        raise DegenerateInitial("u_0 must be nonzero")
    a0, b0 = model.coeff(0)
    return (complex(u0), (z - b0) * u0 / a0)


# bound ratios ------------------------------------------------------------------

@dataclass
class RatioStats:
    alpha: tuple
    log_inf: float
    log_sup: float
    slope: float
    tail_log_inf: float
    tail_log_sup: float

    @property
    def inf(self):
        return _safe_exp(self.log_inf)

    @property
    def sup(self):
        return _safe_exp(self.log_sup)

    @property
    def ratio(self):
        return _safe_exp(self.log_sup - self.log_inf)

    @property
    def tail_ratio(self):
        return _safe_exp(self.tail_log_sup - self.tail_log_inf)

    def to_json(self):
        return {
            "alpha": [[complex(v).real, complex(v).imag] for v in self.alpha],
            "inf": self.inf, "sup": self.sup, "ratio": self.ratio,
            "tail_ratio": self.tail_ratio, "slope": self.slope,
        }


def _safe_exp(x):
    return math.exp(x) if x < 709 else math.inf


@dataclass
class BoundRatio:
    offset: int
    period: int
    z: complex
    per_alpha: list
    n: np.ndarray = field(repr=False)
    log_r: list = field(repr=False)

    @property
    def log_inf(self):
        return min(s.log_inf for s in self.per_alpha)

    @property
    def log_sup(self):
        return max(s.log_sup for s in self.per_alpha)

    @property
    def inf(self):
        return _safe_exp(self.log_inf)

    @property
    def sup(self):
        return _safe_exp(self.log_sup)

    @property
    def ratio(self):
        """Combined sup/inf over every basis initial condition (the constant c**2)."""
        return _safe_exp(self.log_sup - self.log_inf)

    @property
    def max_alpha_ratio(self):
        return max(s.ratio for s in self.per_alpha)

    @property
    def slope(self):
        return max((s.slope for s in self.per_alpha), key=abs)

    @property
    def tail_ratio(self):
        lo = min(s.tail_log_inf for s in self.per_alpha)
        hi = max(s.tail_log_sup for s in self.per_alpha)
        return _safe_exp(hi - lo)

    def to_json(self):
        return {
            "offset": self.offset, "period": self.period,
            "z": [self.z.real, self.z.imag],
            "inf": self.inf, "sup": self.sup, "ratio": self.ratio,
            "tail_ratio": self.tail_ratio, "slope": self.slope,
            "per_alpha": [s.to_json() for s in self.per_alpha],
        }


def log_bound_sequence(model, traj: EigenvectorTrajectory, i: int, N: int, n_min: int = 1):
    """Block indices n and ln r_n, r_n = |a_{nN+i-1}| (|u_{nN+i-1}|^2 + |u_{nN+i}|^2) / |alpha|^2."""
    n_max = int(traj.n[-1])
    first = max(n_min, 1 if i == 0 else 0)
    blocks = np.arange(first, (n_max - i) // N + 1)
    idx = blocks * N + i
    blocks, idx = blocks[idx >= 1], idx[idx >= 1]
    a, _ = model.coeff_range(-1, int(idx.max()))
    k = np.array([traj.index_of(int(m)) for m in idx]) if traj.stride != 1 else idx - 1
    norm = abs(traj.alpha[0]) ** 2 + abs(traj.alpha[1]) ** 2
    log_r = (np.log(np.abs(a[idx])) + traj.log_pair_energy()[k] - math.log(norm))
    return blocks, log_r


def _slope(n, log_r):
    sel = n >= n.max() / 10.0
    if sel.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(n[sel]), log_r[sel], 1)[0])


def bound_ratio(model: CoefficientModel, i: int, N: int, z: complex, n_max: int,
                n_min: int = 1, alphas=((1.0, 0.0), (0.0, 1.0)), **evolve_kw) -> BoundRatio:
    """Extremes and trend of r_n over blocks n_min <= n with nN+i <= n_max.

    Reported per initial condition and combined. The slope is the least-squares
    slope of ln r_n against ln n over the final decade of blocks; the tail
    extremes use blocks beyond a tenth of the last one.
    """
    if n_max < 10 * N:
        raise ValueError("n_max must be at least 10 N")
    stats, logs, blocks = [], [], None
    for alpha in alphas:
        traj = evolve(model, z, alpha, n_max, **evolve_kw)
        blocks, log_r = log_bound_sequence(model, traj, i, N, n_min)
        tail = blocks >= blocks.max() / 10.0
        stats.append(RatioStats(
            tuple(complex(v) for v in alpha), float(log_r.min()), float(log_r.max()),
            _slope(blocks, log_r), float(log_r[tail].min()), float(log_r[tail].max()),
        ))
        logs.append(log_r)
    return BoundRatio(i, N, complex(z), stats, blocks, logs)


# Carleman sums -------------------------------------------------------------------

@dataclass
class CarlemanReport:
    period: int
    n_max: int
    total: SeriesVerdict
    total_sum: float
    offsets: dict           # i -> SeriesVerdict
    offset_sums: dict       # i -> partial sum

    def to_json(self):
        return {
            "period": self.period, "n_max": self.n_max,
            "total": {**self.total.to_json(), "partial_sum": self.total_sum},
            "offsets": {
                str(i): {**v.to_json(), "partial_sum": self.offset_sums[i]}
                for i, v in self.offsets.items()
            },
        }


def carleman(model: CoefficientModel, N: int, n_max: int = 10**6, offsets=None,
             margin: float = 0.1) -> CarlemanReport:
    """Partial sums of 1/|a_n| in total and along each offset class 1/|a_{nN+i-1}|."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if model.length is not None:
        n_max = min(n_max, model.length)
    a, _ = model.coeff_range(0, n_max)
    terms = 1.0 / np.abs(a)
    idx = np.arange(n_max)
    total = series_verdict(idx + 1, np.log(terms), margin)
    if offsets is None:
        offsets = range(N)
    out, sums = {}, {}
    for i in offsets:
        blocks = np.arange(1, (n_max - i) // N + 1)
        sub = blocks * N + i - 1
        sub = sub[sub < n_max]
        blocks = blocks[: sub.size]
        out[i] = series_verdict(blocks, np.log(terms[sub]), margin)
        sums[i] = float(terms[sub].sum())
    return CarlemanReport(N, n_max, total, float(terms.sum()), out, sums)


# square summability --------------------------------------------------------------

@dataclass
class L2Tail:
    partial_sums: np.ndarray
    verdict: str            # "summable" | "not_summable" | "inconclusive"
    exponent: float

    @property
    def summable(self):
        return self.verdict == "summable"


_L2_NAMES = {CONVERGING: "summable", DIVERGING: "not_summable", INCONCLUSIVE: "inconclusive"}


def l2_tail(traj: EigenvectorTrajectory, margin: float = 0.1) -> L2Tail:
    """Partial sums of |u_n|^2 and a summability verdict from the tail decay."""
    lt = traj.log_abs2()
    n = np.arange(lt.size) + 1
    v = series_verdict(n, lt, margin)
    with np.errstate(over="ignore"):
        sums = np.cumsum(np.exp(lt))
    return L2Tail(sums, _L2_NAMES[v.verdict], v.exponent)


# classification ------------------------------------------------------------------

PROPER, IMPROPER, UNDECIDED = "Proper", "Improper", "Inconclusive"


@dataclass
class Claim:
    statement: str
    source: str
    evidence: str = "numerical"

    def to_json(self):
        return {"statement": self.statement, "source": self.source, "evidence": self.evidence}


@dataclass
class ClassificationReport:
    verdict: str
    carleman: CarlemanReport
    claims: list
    hypotheses: dict
    evidence: dict
    gamma: complex
    period: int

    def statements(self):
        return [c.statement for c in self.claims]

    def to_json(self):
        return {
            "verdict": self.verdict,
            "period": self.period,
            "gamma": [self.gamma.real, self.gamma.imag],
            "carleman": self.carleman.to_json(),
            "hypotheses": self.hypotheses,
            "claims": [c.to_json() for c in self.claims],
            "evidence": self.evidence,
        }


def _format_intervals(intervals, gamma):
    parts = [f"[{lo:.6g}, {hi:.6g}]" for lo, hi in intervals]
    g = "" if gamma == 1 else f"({gamma.real:.6g}{gamma.imag:+.6g}i)·"
    return g + " ∪ ".join(parts)


def classify(model: CoefficientModel, N: int | None = None, scan=None, n_max: int = 10**4,
             carleman_nmax: int = 10**6, evidence_points: int = 3,
             gamma_tol: float = 1e-2) -> ClassificationReport:
    """Combine Carleman verdicts with Lambda data into a proper/improper verdict.

    ``scan`` may be a LambdaScanResult used for every offset, a dict keyed by
    offset, or None to scan each offset of the model's limit family. The
    claims restate the spectral consequences under numerically checked
    hypotheses; they are evidence, not proofs.
    """
    family = limit_family(model)
    if N is None:
        N = family.period if family is not None else model.period
    offsets = tuple(family.offsets) if family is not None else tuple(range(N))
    carl = carleman(model, N, carleman_nmax, offsets=offsets)
    hypotheses, scans = {}, {}
    gamma0 = 1 + 0j

    if family is not None:
        for i in offsets:
            g, drift = estimate_gamma(model, i, N)
            if isinstance(scan, LambdaScanResult):
                sc = scan
            elif isinstance(scan, dict) and i in scan:
                sc = scan[i]
            else:
                r = default_scan_radius(model)
                sc = scan_family(family, i, -r, r, r / 2000.0, gamma=g)
            scans[i] = sc
            top = 10**6
            idx_a, idx_b = top * N + i - 1, (top + 1) * N + i - 1
            av, _ = model.evaluate([idx_a, idx_b])
            ratio_dev = abs(av[0] / av[1] - 1)
            hypotheses[i] = {
                "gamma": [g.real, g.imag],
                "gamma_drift": drift,
                "ratio_deviation": float(ratio_dev),
                "lambda_intervals": [list(iv) for iv in sc.intervals],
                "holds": bool(sc.intervals and drift < gamma_tol and ratio_dev < gamma_tol),
            }
        gamma0 = complex(*hypotheses[offsets[0]]["gamma"])

    claims, verdict, chosen = [], UNDECIDED, None
    good = [i for i in offsets if hypotheses.get(i, {}).get("holds")]
    diverging = [i for i in good if carl.offsets[i].verdict == DIVERGING]
    if diverging:
        chosen = diverging[0]
        verdict = PROPER
        src = (f"divergent sum of 1/|a_(nN+{chosen}-1)| with convergent, elliptic limit "
               f"transfer matrices at offset {chosen}")
        g = complex(*hypotheses[chosen]["gamma"])
        claims.append(Claim("A is proper", src))
        if family.z_independent:
            claims.append(Claim("γℝ ∩ σ_p(A) = ∅", src))
            claims.append(Claim("γℝ ⊂ σ(A)", src))
        else:
            k = _format_intervals(scans[chosen].intervals, g)
            claims.append(Claim(f"K ∩ σ_p(A) = ∅ for compact K ⊂ {k}", src))
            claims.append(Claim(f"K ⊂ σ(A) for compact K ⊂ {k}", src))
    elif (family is not None and carl.total.verdict == CONVERGING
          and len(good) == len(offsets) == N):
        verdict = IMPROPER
        chosen = offsets[0]
        src = "convergent sum of 1/|a_n| with the limit hypotheses holding at every offset"
        for s in ("A is improper", "σ_ess(A) = ∅", "σ(A) = ℂ", "σ_p(A_max) = ℂ"):
            claims.append(Claim(s, src))
    elif carl.total.verdict == DIVERGING and any(
            v.verdict == DIVERGING for v in carl.offsets.values()):
        verdict = PROPER
        claims.append(Claim("A is proper", "divergent Carleman sum of 1/|a_n|"))

    evidence = {"carleman_boundary": carl.total.boundary
                or any(v.boundary for v in carl.offsets.values())}
    if chosen is not None and chosen in scans and scans[chosen].intervals:
        g = complex(*hypotheses[chosen]["gamma"])
        pts = scans[chosen].interior_points(evidence_points)
        rows = []
        for t in pts:
            z = g * t
            br = bound_ratio(model, chosen, N, z, max(n_max, 10 * N))
            tails = [l2_tail(evolve(model, z, al, n_max)).verdict
                     for al in ((1.0, 0.0), (0.0, 1.0))]
            rows.append({"z": [z.real, z.imag], "ratio": br.ratio, "slope": br.slope,
                         "l2_tail": tails})
        evidence["bound_ratio"] = rows
    return ClassificationReport(verdict, carl, claims, hypotheses, evidence, gamma0, N)
