"""Acceptance gate: eleven end-to-end criteria, each printed as one PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly with
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from cjacobi import (  # noqa: E402
    AsymptoticallyPeriodic,
    PeriodicPair,
    PowerLawExample,
    free_jacobi,
    load_model,
    periodic,
)
from cjacobi.eigen import IMPROPER, PROPER, bound_ratio, classify, evolve  # noqa: E402
from cjacobi.expr import alt, imag, power  # noqa: E402
from cjacobi.spectrum import Box, finite_section, winding_count  # noqa: E402
from cjacobi.transfer import (  # noqa: E402
    E_MATRIX,
    discriminant,
    limit_family,
    operator_norm,
    scan_family,
    sym_part,
)
from cjacobi.turan import (  # noqa: E402
    c_matrix,
    q_form,
    q_tilde_form,
    selector_values,
    turan,
    turan_batch,
    turan_trace,
    twisted_increments,
    twisted_variation,
)

from helpers import random_matrix, random_table  # noqa: E402

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SEED = 20261016


def decaying_model():
    return AsymptoticallyPeriodic(PeriodicPair((1.0,), (0.0,)), power(-1), imag(alt() * power(-1)))


def free_lambda():
    scan = scan_family(limit_family(free_jacobi()), 0, -4, 4, 1e-3, 1.0)
    ok = len(scan.intervals) == 1 and all(
        abs(e - t) <= 2e-3 for e, t in zip(scan.intervals[0], (-2, 2)))
    return ok, f"intervals={[(round(lo, 4), round(hi, 4)) for lo, hi in scan.intervals]}", 1.0


def period_two_lambda():
    scan = scan_family(limit_family(periodic((1, 2), (0, 0))), 0, -4, 4, 1e-3, 1.0)
    target = [(-3, -1), (1, 3)]
    ok = len(scan.intervals) == 2 and all(
        abs(e - t) <= 2e-3 for iv, tv in zip(scan.intervals, target) for e, t in zip(iv, tv))
    return ok, f"intervals={[(round(lo, 4), round(hi, 4)) for lo, hi in scan.intervals]}", 1.0


def constant_real_models():
    rng = np.random.default_rng(SEED)
    n_max = 10**4
    worst_drift = worst_c = 0.0
    for _ in range(20):
        a0, b0 = float(rng.uniform(0.3, 3.0)), float(rng.uniform(-2, 2))
        m = periodic((a0,), (b0,))
        for x in rng.uniform(b0 - 1.8 * a0, b0 + 1.8 * a0, 10):
            traj = evolve(m, x, rng.normal(size=2), n_max)
            S, _, _ = turan_batch(m, np.arange(1, n_max + 1), 1, 1.0, x, traj)
            worst_drift = max(worst_drift, float(np.max(np.abs(S - S[0])) / abs(S[0])))
            for n in (1, 17, 999, n_max - 3):
                C = c_matrix(m, n, 1, x)
                worst_c = max(worst_c, float(np.max(np.abs(C.array))))
    ok = worst_drift <= 1e-8 and worst_c <= 1e-12
    return ok, f"max drift={worst_drift:.2e} max |C|={worst_c:.2e}", 10.0


def alternative_form_identity():
    rng = np.random.default_rng(SEED)
    worst, finite = 0.0, True
    for draw in range(1000):
        if draw % 10 == 0:
            N = int(rng.integers(1, 4))
            t = random_table(rng, 520)
            z = complex(*rng.normal(size=2))
            g = np.exp(1j * rng.uniform(0, 2 * np.pi))
            traj = evolve(t, z, rng.normal(size=2) + 1j * rng.normal(size=2), 520)
        n = int(rng.integers(1, 500))
        a = abs(t.a_at(n + N - 1))
        p0, p1, e0 = traj.pair(n)
        q0, q1, e1 = traj.pair(n + N)
        # both sides carry their own scale exponent; bring the later pair onto the earlier one
        lhs = a * q_form(t, n, N, g, z, (p0, p1))
        rhs = a * math.ldexp(q_tilde_form(t, n, N, g, z, (q0, q1)), 2 * (e1 - e0))
        gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
        finite = finite and bool(np.isfinite(gap))
        worst = max(worst, gap)
    return finite and worst <= 1e-10, f"max relative gap={worst:.2e} over 1000 draws (finite: {finite})", 10.0


def two_sided_bounds():
    m = decaying_model()
    zs = np.linspace(-1.6, 1.6, 9)
    worst_ratio = worst_slope = worst_combined = 0.0
    for z in zs:
        br = bound_ratio(m, 0, 1, z, 10**4, n_min=10)
        worst_ratio = max(worst_ratio, br.max_alpha_ratio)
        worst_combined = max(worst_combined, br.ratio)
        worst_slope = max(worst_slope, max(abs(s.slope) for s in br.per_alpha))
    outside = bound_ratio(m, 0, 1, 3.0, 10**4, n_min=10).slope
    ok = worst_ratio <= 10 and worst_slope <= 0.01 and outside > 0.5
    detail = (f"max sup/inf per alpha={worst_ratio:.3g} (both alphas combined {worst_combined:.3g}) "
              f"max |slope|={worst_slope:.2e} slope at z=3: {outside:.3g}")
    return ok, detail, 30.0


def turan_convergence():
    tr = turan_trace(decaying_model(), 0, 1, 0.0, n_max=10**4)
    ok = tr.residual <= 1e-3 * abs(tr.g) and not tr.sign_change and np.all(
        np.sign(tr.S[tr.n >= tr.burn_in]) == tr.sign)
    return ok, f"g={tr.g:.6g} last-decade residual={tr.residual:.2e} burn-in block={tr.burn_in}", math.inf


def dichotomy():
    base = PeriodicPair((1.0,), (0.0,))
    proper = classify(PowerLawExample(base, 0.7, 0.2))
    improper = classify(PowerLawExample(base, 1.5, 0.2))
    want_p = {"γℝ ∩ σ_p(A) = ∅", "γℝ ⊂ σ(A)"}
    want_i = {"σ_ess(A) = ∅", "σ(A) = ℂ", "σ_p(A_max) = ℂ"}
    rows = improper.evidence.get("bound_ratio", [])
    zs = {tuple(r["z"]) for r in rows}
    tails_ok = len(zs) >= 3 and all(v == "summable" for r in rows for v in r["l2_tail"])
    ok = (proper.verdict == PROPER and want_p <= set(proper.statements())
          and improper.verdict == IMPROPER and want_i <= set(improper.statements()) and tails_ok)
    return ok, f"0.7 -> {proper.verdict}, 1.5 -> {improper.verdict}, l2 tails summable at {len(zs)} z", 30.0


def twisted_variation_mechanics():
    n_max = 2 * 10**4
    verdicts = {}
    for name in ("alternating_imag", "plain_real", "constant_imag"):
        m = load_model(CONFIGS / f"{name}.json")
        values = selector_values(m, "b/a", n_max + 2, 1)
        rep = twisted_variation(values, 0, 1, n_max)
        verdicts[name] = (rep.verdict, rep.total)
    ok = (verdicts["alternating_imag"][0] == "summable" and verdicts["plain_real"][0] == "summable"
          and verdicts["constant_imag"][0] == "diverging")
    detail = " ".join(f"{k}={v[0]}({v[1]:.3g})" for k, v in verdicts.items())
    return ok, detail, 10.0


def finite_section_oracle():
    box = Box(-2.5, 2.5, -0.5, 0.5)
    est = finite_section(free_jacobi(), 100, box, 1e-8)
    ref = 2 * np.cos(np.arange(1, 101) * np.pi / 101)
    got = np.sort(est.values().real)
    err = float(np.max(np.abs(got - np.sort(ref)))) if got.size == 100 else math.inf
    err = max(err, float(np.max(np.abs(est.values().imag)))) if got.size else err
    whole = winding_count(free_jacobi(), 100, box)
    parts = [winding_count(free_jacobi(), 100, q) for q in box.split()]
    ok = est.complete and err <= 1e-8 and whole == sum(parts) == 100
    return ok, f"max root error={err:.2e} winding {whole} = {'+'.join(map(str, parts))}", 30.0


def blend_sanity():
    m = load_model(CONFIGS / "blend.json")
    fam = limit_family(m)
    scan = scan_family(fam, 1, -4, 4, 1e-3, 1.0)
    lam_ok = len(scan.intervals) == 1 and all(
        abs(e - t) <= 2e-3 for e, t in zip(scan.intervals[0], (-1, 1)))
    worst_ratio = worst_slope = worst_combined = 0.0
    for z in (-0.8, 0.0, 0.8):
        br = bound_ratio(m, 1, fam.period, z, 10**4)
        worst_ratio = max(worst_ratio, br.max_alpha_ratio)
        worst_combined = max(worst_combined, br.ratio)
        worst_slope = max(worst_slope, max(abs(s.slope) for s in br.per_alpha))
    ok = lam_ok and worst_ratio <= 10 and worst_slope <= 0.02
    detail = (f"intervals={[(round(lo, 4), round(hi, 4)) for lo, hi in scan.intervals]} "
              f"max sup/inf per alpha={worst_ratio:.3g} (both alphas combined {worst_combined:.3g}) "
              f"max |slope|={worst_slope:.2e}")
    return ok, detail, 30.0


def algebraic_invariants():
    rng = np.random.default_rng(SEED)
    tol = 1e-12
    fails = []
    draws = 100

    for _ in range(draws):
        M, Y = random_matrix(rng), random_matrix(rng)
        c = float(rng.normal())
        scale = 1 + M.norm() * Y.norm() ** 2
        if (Y.adjoint() @ sym_part(M) @ Y - sym_part(Y.adjoint() @ M @ Y)).norm() > tol * scale:
            fails.append("conjugation")
        if (sym_part(M * c + Y) - (sym_part(M) * c + sym_part(Y))).norm() > tol * (1 + M.norm() + Y.norm()):
            fails.append("linearity")
        if sym_part(M).norm() > M.norm() * (1 + tol):
            fails.append("contraction")
        if not M.norm() <= M.frobenius() * (1 + tol) <= M.norm1() * (1 + tol) ** 2:
            fails.append("norm chain")
        R = random_matrix(rng, real=True)
        d = discriminant(R)
        if abs(sym_part(E_MATRIX @ R).det() + 0.25 * d) > tol * (1 + abs(d)):
            fails.append("determinant")

    for _ in range(draws):
        x = rng.normal(size=40) + 1j * rng.normal(size=40)
        y = rng.normal(size=40) + 1j * rng.normal(size=40)
        vxy, vx, vy = (twisted_increments(s).cumsum() for s in (x + y, x, y))
        if np.any(vxy > vx + vy + tol * (1 + vx + vy)):
            fails.append("subadditivity")
        X = rng.normal(size=(20, 2, 2)) + 1j * rng.normal(size=(20, 2, 2)) + 3 * np.eye(2)
        Z = rng.normal(size=(20, 2, 2)) + 1j * rng.normal(size=(20, 2, 2)) + 3 * np.eye(2)
        sup = lambda A: operator_norm(A).max()  # noqa: E731
        vX, vZ = twisted_increments(X).sum(), twisted_increments(Z).sum()
        bound = sup(X) * vZ + sup(Z) * vX
        if twisted_increments(X @ Z).sum() > bound * (1 + tol):
            fails.append("product rule")
        Xi = np.linalg.inv(X)
        if twisted_increments(Xi).sum() > sup(Xi) ** 2 * vX * (1 + tol):
            fails.append("inverse rule")

    for _ in range(draws):
        t = random_table(rng, 40)
        al = rng.normal(size=2) + 1j * rng.normal(size=2)
        z = complex(*rng.normal(size=2))
        k = int(rng.integers(-20, 21))
        base = turan(t, 15, 1, 1.0, z, evolve(t, z, al, 40))
        scaled = turan(t, 15, 1, 1.0, z, evolve(t, z, al * 2.0**k, 40))
        if scaled != base:
            fails.append("homogeneity")
    detail = f"{draws} draws per identity, " + (f"failures: {sorted(set(fails))}" if fails else "no failures")
    return not fails, detail, 5.0


CRITERIA = [
    (1, "free Jacobi Lambda", free_lambda),
    (2, "period-2 Lambda", period_two_lambda),
    (3, "constant real models", constant_real_models),
    (4, "alternative form identity", alternative_form_identity),
    (5, "two-sided eigenvector bounds", two_sided_bounds),
    (6, "Turan determinant convergence", turan_convergence),
    (7, "proper/improper dichotomy", dichotomy),
    (8, "twisted variation selectors", twisted_variation_mechanics),
    (9, "finite-section oracle", finite_section_oracle),
    (10, "blend sanity", blend_sanity),
    (11, "algebraic invariants", algebraic_invariants),
]


def evaluate(fn):
    start = time.perf_counter()
    ok, detail, limit = fn()
    elapsed = time.perf_counter() - start
    in_time = elapsed < limit
    return ok and in_time, f"{detail}; {elapsed:.2f}s" + ("" if math.isinf(limit) else f" (limit {limit:g}s)")


@pytest.mark.acceptance
@pytest.mark.parametrize("number,name,fn", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, name, fn, capsys):
    ok, detail = evaluate(fn)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} ({name}): {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, name, fn in CRITERIA:
        ok, detail = evaluate(fn)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} criterion {number} ({name}): {detail}", flush=True)
    sys.exit(1 if failed else 0)
