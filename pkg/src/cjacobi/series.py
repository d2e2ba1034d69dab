"""Heuristic summability verdicts for positive series from finitely many terms.

The decision looks at the last decade of indices: terms are averaged over
log-spaced bins and a least-squares line is fitted to log(term) vs log(n).
A fitted exponent below -1 - margin means summable, above -1 + margin means
divergent; in between the verdict is inconclusive unless the last two
decades contribute equal amounts, which is the logarithmic (harmonic)
divergence signature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONVERGING = "converging"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"


@dataclass
class SeriesVerdict:
    verdict: str
    exponent: float
    boundary: bool = False
    decade_ratio: float = float("nan")

    def to_json(self):
        return {
            "verdict": self.verdict,
            "exponent": self.exponent,
            "boundary": self.boundary,
            "decade_ratio": self.decade_ratio,
        }


def _logsumexp(x):
    m = np.max(x)
    if not np.isfinite(m):
        return m
    return m + np.log(np.sum(np.exp(x - m)))


def tail_exponent(n: np.ndarray, log_terms: np.ndarray, bins: int = 24) -> float:
    """Fitted power-law exponent of the terms over the last decade of ``n``."""
    n = np.asarray(n, dtype=float)
    log_terms = np.asarray(log_terms, dtype=float)
    top = n.max()
    sel = n >= top / 10.0
    n, lt = n[sel], log_terms[sel]
    if np.all(np.isneginf(lt)):
        return -np.inf
    edges = np.geomspace(n.min(), top * (1 + 1e-12), bins + 1)
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (n >= lo) & (n < hi)
        if not m.any():
            continue
        avg = _logsumexp(lt[m]) - np.log(m.sum())
        if np.isfinite(avg):
            xs.append(np.log(np.mean(n[m])))
            ys.append(avg)
    if len(xs) < 3:
        return float("nan")
    return float(np.polyfit(xs, ys, 1)[0])


def series_verdict(n, log_terms, margin: float = 0.1, zero_floor: float = -np.inf) -> SeriesVerdict:
    """Summability verdict for the series with terms exp(log_terms) at indices n.

    Terms whose log falls below ``zero_floor`` count as exact zeros.
    """
    n = np.asarray(n, dtype=float)
    lt = np.asarray(log_terms, dtype=float).copy()
    lt[lt < zero_floor] = -np.inf
    p = tail_exponent(n, lt)
    if p == -np.inf:
        return SeriesVerdict(CONVERGING, p)
    if np.isnan(p):
        return SeriesVerdict(INCONCLUSIVE, p)
    if p < -1 - margin:
        return SeriesVerdict(CONVERGING, p)
    if p > -1 + margin:
        return SeriesVerdict(DIVERGING, p)
    top = n.max()
    last = (n > top / 10) & (n <= top)
    prev = (n > top / 100) & (n <= top / 10)
    if top < 100 or not prev.any():
        return SeriesVerdict(INCONCLUSIVE, p, boundary=True)
    ratio = float(np.exp(_logsumexp(lt[last]) - _logsumexp(lt[prev])))
    if ratio >= 0.9:
        return SeriesVerdict(DIVERGING, p, boundary=True, decade_ratio=ratio)
    return SeriesVerdict(INCONCLUSIVE, p, boundary=True, decade_ratio=ratio)


def partial_sums_from_logs(log_terms) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.cumsum(np.exp(np.asarray(log_terms, dtype=float)))
