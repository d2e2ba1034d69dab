import numpy as np
import pytest
from hypothesis import given

from cjacobi import AsymptoticallyPeriodic, ExplicitTable, PeriodicPair, PeriodicallyModulated, free_jacobi, periodic
from cjacobi.errors import BudgetExceeded, RootOnBoundary
from cjacobi.expr import alt, imag, power
from cjacobi.spectrum import Box, charpoly, charpoly_derivative_ratio, finite_section, winding_count

from helpers import random_table, seeds


def closed_form(dim):
    return np.sort(2 * np.cos(np.arange(1, dim + 1) * np.pi / (dim + 1)))


def decaying_model():
    return AsymptoticallyPeriodic(PeriodicPair((1.0,), (0.0,)), power(-1), imag(alt() * power(-1)))


class TestCharPoly:
    def test_dim_two(self):
        for z in (0.3, 1 + 2j, -4.0):
            assert charpoly(free_jacobi(), 2, z).value == pytest.approx(z * z - 1)

    def test_dim_one(self):
        t = ExplicitTable((2.0,), (0.5j,))
        assert charpoly(t, 1, 3.0).value == pytest.approx(3 - 0.5j)

    def test_mantissa_range(self):
        for z in (0.1, 10.0, 1e3j):
            v = charpoly(free_jacobi(), 300, z)
            assert 0.5 <= abs(v.mantissa) < 2

    def test_vanishes_at_closed_form_root(self):
        z0 = 2 * np.cos(np.pi / 101)
        at_root = abs(charpoly(free_jacobi(), 100, z0))
        near = [abs(charpoly(free_jacobi(), 100, z0 + d)) for d in (-1e-3, 1e-3)]
        assert at_root <= 1e-6 * min(near)

    @given(seeds)
    def test_matches_determinant(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(1, 12))
        t = random_table(rng, dim)
        a, b = t.coeff_range(0, dim)
        J = np.diag(b) + np.diag(a[:-1], 1) + np.diag(a[:-1], -1)
        z = complex(*rng.normal(size=2))
        ref = np.linalg.det(z * np.eye(dim) - J)
        assert charpoly(t, dim, z).value == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_large_dim_no_overflow(self):
        m = PeriodicallyModulated(PeriodicPair((1.0,), (0.0,)), power(1.5))
        v = charpoly(m, 2000, 5.0 + 1j)
        assert np.isfinite(v.mantissa) and v.exponent > 1024

    def test_newton_ratio(self):
        z = 0.7 + 0.2j
        assert charpoly_derivative_ratio(free_jacobi(), 2, z)[0] == pytest.approx((z * z - 1) / (2 * z))


class TestWinding:
    def test_all_roots(self):
        assert winding_count(free_jacobi(), 4, Box(-3, 3, -1, 1)) == 4

    def test_far_box(self):
        assert winding_count(free_jacobi(), 4, Box(10, 11, 0, 1)) == 0

    def test_positive_half(self):
        assert winding_count(free_jacobi(), 4, Box(0, 3, -1, 1)) == 2

    def test_root_on_boundary(self):
        with pytest.raises(RootOnBoundary):
            winding_count(free_jacobi(), 2, Box(1, 2, -1, 1))

    @given(seeds)
    def test_additivity(self, seed):
        rng = np.random.default_rng(seed)
        t = random_table(rng, 25)
        box = Box(-4, 4.1, -3.3, 3)
        total = winding_count(t, 25, box)
        f = float(rng.uniform(0.3, 0.7))
        try:
            parts = sum(winding_count(t, 25, q) for q in box.split(f))
        except RootOnBoundary:
            return
        assert parts == total

    def test_multiple_root(self):
        t = ExplicitTable((1e-300 + 0j, 1.0), (0.5, 0.5))
        # decoupled 1x1 blocks: double root at 0.5 (a_0 tiny but nonzero)
        assert winding_count(t, 2, Box(0, 1, -1, 1)) == 2


class TestFiniteSection:
    def test_free_closed_form(self):
        est = finite_section(free_jacobi(), 100, Box(-2.5, 2.5, -0.5, 0.5), 1e-8)
        assert est.complete and est.count == 100
        np.testing.assert_allclose(np.sort(est.values().real), closed_form(100), atol=1e-8)
        assert np.all(np.abs(est.values().imag) <= 1e-8)
        assert all(r.residual <= 1e-8 for r in est.roots)

    def test_dim_one(self):
        t = ExplicitTable((1.0,), (0.25 + 0.5j,))
        est = finite_section(t, 1, Box(-1, 1, -1, 1))
        assert len(est.roots) == 1
        assert est.roots[0].value == pytest.approx(0.25 + 0.5j)

    def test_roots_inside_box(self, rng):
        t = random_table(rng, 30)
        box = Box(-1, 1.5, -0.7, 1.2)
        est = finite_section(t, 30, box, 1e-9)
        assert est.count == winding_count(t, 30, box) <= 30
        assert all(box.contains(r.value, 1e-9) for r in est.roots)

    def test_conjugate_symmetry(self):
        m = periodic((1.0, 0.4, 2.0), (0.3, -1.0, 0.5))
        est = finite_section(m, 45, Box(-6, 6.1, -3, 3.1), 1e-9)
        v = np.sort_complex(est.values())
        np.testing.assert_allclose(np.sort_complex(v.conj()), v, atol=1e-8)

    def test_interlacing(self):
        m = periodic((1.0, 0.4, 2.0), (0.3, -1.0, 0.5))
        big = np.sort(finite_section(m, 30, Box(-6, 6.1, -1, 1.1), 1e-10).values().real)
        small = np.sort(finite_section(m, 29, Box(-6, 6.1, -1, 1.1), 1e-10).values().real)
        assert big.size == 30 and small.size == 29
        assert np.all(big[:-1] <= small + 1e-9) and np.all(small <= big[1:] + 1e-9)

    def test_decaying_model_densifies(self):
        box = Box(-2.6, 2.6, -0.6, 0.61)
        coarse = finite_section(decaying_model(), 200, box, 1e-9)
        fine = finite_section(decaying_model(), 400, box, 1e-9)
        assert fine.count > coarse.count
        re = np.sort(fine.values().real)
        assert re.min() < -1.9 and re.max() > 1.9
        bulk = re[np.abs(re) < 1.9]
        assert np.max(np.diff(bulk)) < 10 / 400 * np.pi
        assert np.max(np.abs(fine.values().imag)) <= np.max(np.abs(coarse.values().imag)) + 1e-9

    def test_budget(self):
        est = finite_section(free_jacobi(), 100, Box(-2.5, 2.5, -0.5, 0.5), 1e-8, budget=20)
        assert not est.complete and est.unresolved
        with pytest.raises(BudgetExceeded):
            finite_section(free_jacobi(), 100, Box(-2.5, 2.5, -0.5, 0.5), 1e-8, budget=20, partial=False)

    def test_dim_limit(self):
        with pytest.raises(ValueError):
            finite_section(free_jacobi(), 2001, Box(-1, 1, -1, 1))

    def test_exports(self):
        est = finite_section(free_jacobi(), 3, Box(-2, 2.1, -1, 1))
        assert est.to_csv().splitlines()[0] == "re,im,multiplicity,residual"
        assert est.to_json()["count"] == 3
