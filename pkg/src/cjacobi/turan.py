"""Shifted Turan determinants, their convergence diagnostics, and twisted total variation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenvectorTrajectory, evolve
from .errors import SignChange
from .sequences import CoefficientModel
from .series import CONVERGING, DIVERGING, INCONCLUSIVE, series_verdict
from .transfer import (
    E_MATRIX,
    TransferMatrix,
    estimate_gamma,
    n_step,
    n_step_batch,
    one_step_batch,
    operator_norm,
    sym_part,
)

_E = E_MATRIX.array


def hermitian_form(H: TransferMatrix, v) -> complex:
    """<H v, v> = sum_k (H v)_k conj(v_k)."""
    w = H.apply(v)
    return w[0] * complex(v[0]).conjugate() + w[1] * complex(v[1]).conjugate()


def form_matrix(model: CoefficientModel, n: int, N: int, gamma: complex, z: complex) -> TransferMatrix:
    """sym[(a_{n+N-1} / (gamma |a_{n+N-1}|)) E X_n(z)]."""
    a = model.a_at(n + N - 1)
    return sym_part((a / (gamma * abs(a))) * (E_MATRIX @ n_step(model, n, N, z)))


def form_tilde_matrix(model: CoefficientModel, n: int, N: int, gamma: complex, z: complex) -> TransferMatrix:
    """sym[(a_{n+N-1} / (gamma |a_{n+N-1}|)) conj(a_{n+N-1}/a_{n-1}) E conj(X_n(z))]."""
    a = model.a_at(n + N - 1)
    ratio = (a / model.a_at(n - 1)).conjugate()
    return sym_part((a / (gamma * abs(a))) * ratio * (E_MATRIX @ n_step(model, n, N, z).conj()))


def q_form(model, n, N, gamma, z, v) -> float:
    return hermitian_form(form_matrix(model, n, N, gamma, z), v).real


def q_tilde_form(model, n, N, gamma, z, v) -> float:
    return hermitian_form(form_tilde_matrix(model, n, N, gamma, z), v).real


def _norm_alpha(traj: EigenvectorTrajectory) -> float:
    return abs(traj.alpha[0]) ** 2 + abs(traj.alpha[1]) ** 2


def turan(model, n: int, N: int, gamma: complex, z: complex, traj: EigenvectorTrajectory) -> float:
    """S_n = |a_{n+N-1}| Q_n(u_{n-1}, u_n), normalized by |alpha|^2."""
    p, q, e = traj.pair(n)
    a = abs(model.a_at(n + N - 1))
    s = a * q_form(model, n, N, gamma, z, (p, q))
    return _ldexp(s, 2 * e) / _norm_alpha(traj)


def turan_intro(model, n: int, N: int, gamma: complex, traj: EigenvectorTrajectory) -> float:
    """Re(conj(gamma) a_{n+N-1} (conj(u_n) u_{n+N-1} - conj(u_{n-1}) u_{n+N})), normalized by |alpha|^2."""
    p0, q0, e0 = traj.pair(n)
    p1, q1, e1 = traj.pair(n + N)
    a = model.a_at(n + N - 1)
    val = (complex(gamma).conjugate() * a
           * (q0.conjugate() * p1 - p0.conjugate() * q1)).real
    return _ldexp(val, e0 + e1) / _norm_alpha(traj)


def _ldexp(x: float, e: int) -> float:
    try:
        return math.ldexp(x, e)
    except OverflowError:
        return math.copysign(math.inf, x)


def c_matrix(model: CoefficientModel, n: int, N: int, z: complex) -> TransferMatrix:
    """a_{n+2N-1} E X_{n+N}(z) - a_{n+N-1} conj(a_{n+N-1}/a_{n-1}) E conj(X_n(z))."""
    a2 = model.a_at(n + 2 * N - 1)
    a1 = model.a_at(n + N - 1)
    ratio = (a1 / model.a_at(n - 1)).conjugate()
    return a2 * (E_MATRIX @ n_step(model, n + N, N, z)) - (a1 * ratio) * (
        E_MATRIX @ n_step(model, n, N, z).conj())


def difference_bound_matrix(model, n: int, N: int, z: complex) -> TransferMatrix:
    """a_{n+2N-1} X_{n+N}(z) - a_{n+N-1} conj(a_{n+N-1}/a_{n-1}) conj(X_n(z))."""
    a2 = model.a_at(n + 2 * N - 1)
    a1 = model.a_at(n + N - 1)
    ratio = (a1 / model.a_at(n - 1)).conjugate()
    return a2 * n_step(model, n + N, N, z) - (a1 * ratio) * n_step(model, n, N, z).conj()


# batched evaluation along a trajectory -----------------------------------------

def _forms_batch(model, ms, N, gamma, z):
    """Stack of form matrices (Hermitian) for start indices ``ms``."""
    a, _ = model.coeff_range(0, int(ms.max()) + N)
    am = a[ms + N - 1]
    c = am / (gamma * np.abs(am))
    M = c[:, None, None] * (_E @ n_step_batch(model, ms, N, z))
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2))), np.abs(am)


def turan_batch(model, ms, N, gamma, z, traj: EigenvectorTrajectory):
    """S_m for every start index in ``ms`` plus the imaginary residues and form matrices."""
    ms = np.asarray(ms, dtype=np.int64)
    H, absa = _forms_batch(model, ms, N, gamma, z)
    k = ms - 1 if traj.stride == 1 else np.array([traj.index_of(int(m)) for m in ms])
    v = np.stack([traj.prev[k], traj.cur[k]], axis=-1)
    Hv = np.einsum("nij,nj->ni", H, v)
    val = absa * np.einsum("ni,ni->n", Hv, np.conj(v))
    e = 2 * traj.exp[k]
    with np.errstate(over="ignore", invalid="ignore"):
        S = np.ldexp(val.real, e.clip(-2000, 2000)) / _norm_alpha(traj)
        resid = np.abs(val.imag) * np.ldexp(1.0, e.clip(-2000, 2000)) / _norm_alpha(traj)
    return S, resid, H


@dataclass
class TuranTrace:
    offset: int
    period: int
    gamma: complex
    z: complex
    alpha: tuple
    n: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    imag_residue: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    g: float = float("nan")
    residual: float = float("nan")
    sign: int = 0
    burn_in: int = 0
    flattened: bool = False
    nondegenerate: bool = False
    sign_change: bool = False
    gamma_drift: float = 0.0
    min_form_det: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.flattened and self.nondegenerate and not self.sign_change and self.g != 0

    def summary(self) -> dict:
        return {
            "offset": self.offset, "period": self.period,
            "gamma": [self.gamma.real, self.gamma.imag],
            "z": [self.z.real, self.z.imag],
            "g": self.g, "sign": self.sign, "residual": self.residual,
            "burn_in": self.burn_in, "flattened": self.flattened,
            "nondegenerate": self.nondegenerate, "sign_change": self.sign_change,
            "converged": self.converged, "gamma_drift": self.gamma_drift,
            "min_form_det": self.min_form_det,
            "max_imag_residue": float(np.max(self.imag_residue)) if self.imag_residue.size else 0.0,
        }

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "S", "F", "imag_residue"])
        F = np.append(self.F, np.nan)
        for n, s, f, r in zip(self.n, self.S, F, self.imag_residue):
            w.writerow([int(n), f"{s:.17g}", f"{f:.17g}", f"{r:.17g}"])
        return buf.getvalue()


def turan_trace(model: CoefficientModel, i: int, N: int, z: complex, alpha=(1.0, 0.0),
                n_max: int = 10**4, gamma: complex | None = None, flat_tol: float = 1e-3,
                degeneracy_tol: float = 1e-6, residue_tol: float = 1e-6,
                strict: bool = False) -> TuranTrace:
    """Record S_{nN+i} for blocks n >= 1 with nN+i <= n_max and diagnose convergence.

    ``residual`` is the sum of |S_{(n+1)N+i} - S_{nN+i}| over the final decade
    of blocks; the trace counts as flattened when it is below ``flat_tol * |g|``.
    ``burn_in`` is the first block of the final run of constant sign; a sign
    change after a tenth of the last block is flagged (raised when ``strict``).
    """
    if n_max < 10:
        raise ValueError("n_max must be >= 10")
    drift = 0.0
    if gamma is None:
        gamma, drift = estimate_gamma(model, i, N)
    gamma = complex(gamma)
    traj = evolve(model, z, alpha, n_max)
    blocks = np.arange(1, (n_max - i) // N + 1)
    ms = blocks * N + i
    blocks, ms = blocks[ms >= 1], ms[ms >= 1]
    S, resid, H = turan_batch(model, ms, N, gamma, z, traj)
    scale = np.maximum(np.abs(S), 1e-300)
    if np.any(resid > residue_tol * np.maximum(scale, 1.0)):
        raise ValueError("Hermitian form left an imaginary residue; check gamma and z")
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.diff(S) / S[:-1]

    last = blocks[-1]
    tail = blocks >= last / 10.0
    dS = np.abs(np.diff(S))
    residual = float(dS[tail[1:]].sum())
    g = float(S[-1])
    signs = np.sign(S)
    change = np.flatnonzero(signs[1:] != signs[:-1])
    burn_in = int(blocks[change[-1] + 1]) if change.size else int(blocks[0])
    sign_change = bool(burn_in > last / 10.0) or bool(np.any(signs[tail] == 0))

    det = (H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]).real
    fro = np.sum(np.abs(H) ** 2, axis=(-2, -1))
    min_det = float(np.min(det[tail] / fro[tail]))
    trace = TuranTrace(
        offset=i, period=N, gamma=gamma, z=complex(z), alpha=tuple(complex(v) for v in alpha),
        n=blocks, S=S, imag_residue=resid, F=F, g=g, residual=residual,
        sign=int(np.sign(g)), burn_in=burn_in,
        flattened=bool(residual <= flat_tol * abs(g) and np.isfinite(g)),
        nondegenerate=bool(min_det > degeneracy_tol),
        sign_change=sign_change, gamma_drift=float(drift), min_form_det=min_det,
    )
    if strict and sign_change:
        raise SignChange(f"S changes sign after block {int(last // 10)} (burn-in {burn_in})")
    return trace


# twisted total variation -----------------------------------------------------------

_TV_NAMES = {CONVERGING: "summable", DIVERGING: "diverging", INCONCLUSIVE: "inconclusive"}


@dataclass
class TwistedVariationReport:
    offset: int
    period: int
    partial_sums: np.ndarray = field(repr=False)
    verdict: str = "inconclusive"
    exponent: float = float("nan")

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1]) if self.partial_sums.size else 0.0

    def to_json(self):
        return {"offset": self.offset, "period": self.period, "total": self.total,
                "verdict": self.verdict, "exponent": self.exponent}


def twisted_increments(x: np.ndarray) -> np.ndarray:
    """||x_{n+1} - conj(x_n)|| for a scalar or 2x2-matrix sequence."""
    x = np.asarray(x, dtype=complex)
    d = x[1:] - np.conj(x[:-1])
    if x.ndim == 1:
        return np.abs(d)
    return operator_norm(d)


def twisted_variation(sequence, i: int, N: int, n_max: int, margin: float = 0.1,
                      noise: float = 1e-13) -> TwistedVariationReport:
    """Twisted variation of the sub-sequence (x_{nN+i} : 1 <= n <= n_max).

    ``sequence`` is an array indexed by n (scalars or 2x2 matrices) or a
    callable taking an index array. Increments below ``noise`` times the
    largest tail magnitude are treated as exact zeros.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    idx = np.arange(1, n_max + 1) * N + i
    x = sequence(idx) if callable(sequence) else np.asarray(sequence)[idx]
    x = np.asarray(x, dtype=complex)
    inc = twisted_increments(x)
    mags = np.abs(x) if x.ndim == 1 else operator_norm(x)
    floor = noise * max(float(np.max(mags[len(mags) // 10:])), 1e-300)
    inc = np.where(inc <= floor, 0.0, inc)
    with np.errstate(divide="ignore"):
        v = series_verdict(np.arange(1, inc.size + 1), np.log(inc), margin)
    return TwistedVariationReport(i, N, np.cumsum(inc), _TV_NAMES[v.verdict], v.exponent)


SELECTORS = ("a", "b", "1/a", "b/a", "a_prev/a", "gamma/a", "B", "X", "rX")


def selector_values(model: CoefficientModel, selector: str, stop: int, N: int,
                    z: complex = 0.0, gamma: complex = 1.0) -> np.ndarray:
    """Values of a derived sequence at indices 0 .. stop-1 (NaN where undefined).

    ``B`` and ``X`` are the one-step and N-step transfer matrices at z;
    ``rX`` weights X_n by a_{n+N-1}/a_{n-1}.
    """
    if selector not in SELECTORS:
        raise KeyError(f"unknown selector {selector!r}; choose from {', '.join(SELECTORS)}")
    if selector in ("a", "b", "1/a", "b/a", "gamma/a"):
        a, b = model.coeff_range(0, stop)
        return {"a": a, "b": b, "1/a": 1 / a, "b/a": b / a, "gamma/a": gamma / a}[selector]
    if selector == "a_prev/a":
        a, _ = model.coeff_range(-1, stop)
        return a[:-1] / a[1:]
    ns = np.arange(stop)
    out = np.full((stop, 2, 2), np.nan, dtype=complex)
    if selector == "B":
        out[:] = one_step_batch(model, ns, z)
        return out
    valid = ns[1:]
    X = n_step_batch(model, valid, N, z)
    if selector == "rX":
        a, _ = model.coeff_range(0, stop + N)
        X = (a[valid + N - 1] / a[valid - 1])[:, None, None] * X
    out[1:] = X
    return out
