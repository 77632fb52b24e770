import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdnet.geometry import (Grid, RectDomain, apply_laplacian, eigenfunction,
                            first_eigenvalue, helmholtz_solve, l2_inner,
                            l2_norm, laplacian_matrix, poincare_cube_bound)


class TestRectDomain:
    def test_rejects_3d(self):
        with pytest.raises(ValueError):
            RectDomain((1.0, 1.0, 1.0))

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            RectDomain((1.0, 0.0))

    def test_measure(self):
        assert RectDomain((2.0, 3.0)).measure == 6.0


class TestFirstEigenvalue:
    # reference eigenvalues for the three benchmark squares, 1e-3 absolute
    @pytest.mark.parametrize("lengths, expected", [
        ((1.0, 1.0), 19.7392),
        ((1.3, 1.3), 11.68),
        ((1.5, 1.5), 8.7730),
    ])
    def test_benchmark_squares(self, lengths, expected):
        assert first_eigenvalue(RectDomain(lengths)) == pytest.approx(expected, abs=1e-3)

    def test_unit_interval(self):
        assert first_eigenvalue(RectDomain((1.0,))) == pytest.approx(math.pi**2, rel=1e-14)

    def test_runtime_under_1ms(self):
        domain = RectDomain((1.3, 1.3))
        first_eigenvalue(domain)  # warm up
        start = time.perf_counter()
        for _ in range(100):
            first_eigenvalue(domain)
        assert (time.perf_counter() - start) / 100 < 1e-3

    def test_poincare_cube_bound(self):
        assert poincare_cube_bound((2.0, 0.5)) == (0.25, 4.0)
        with pytest.raises(ValueError):
            poincare_cube_bound((1.0, -1.0))


class TestGrid:
    def test_spacing_excludes_boundary(self):
        g = Grid(RectDomain((1.0,)), (3,))
        assert g.spacing == (0.25,)
        np.testing.assert_allclose(g.axes()[0], [0.25, 0.5, 0.75])

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            Grid(RectDomain((1.0,)), (2,))

    def test_cell_volume_2d(self):
        g = Grid(RectDomain((1.0, 2.0)), (9, 19))
        assert g.cell_volume == pytest.approx(0.1 * 0.1)


class TestLaplacian:
    def test_symmetry_within_1e12(self):
        for counts in [(25,), (11, 13)]:
            domain = RectDomain((1.0,) * len(counts))
            L = laplacian_matrix(Grid(domain, counts)).toarray()
            assert np.max(np.abs(L - L.T)) <= 1e-12

    def test_eigenfunction_is_discrete_eigenvector(self):
        # sin(k pi x) is an exact eigenvector of the 3-point stencil
        g = Grid(RectDomain((1.0,)), (40,))
        h = g.spacing[0]
        phi, _ = eigenfunction(g.domain, (2,), g)
        lam_h = (2.0 / h**2) * (1.0 - math.cos(2 * math.pi * h))
        np.testing.assert_allclose(apply_laplacian(g, phi), -lam_h * phi,
                                   rtol=1e-11, atol=1e-11)

    def test_second_order_on_smooth_field(self):
        # truncation error drops by ~4 per refinement (second order)
        def error(nodes):
            g = Grid(RectDomain((1.0,)), (nodes,))
            x = g.axes()[0]
            u = np.sin(math.pi * x) * x**2
            exact = (-math.pi**2 * np.sin(math.pi * x) * x**2
                     + 4 * math.pi * np.cos(math.pi * x) * x
                     + 2 * np.sin(math.pi * x))
            return np.max(np.abs(apply_laplacian(g, u) - exact))

        ratio = error(49) / error(99)
        assert 3.2 < ratio < 4.8

    def test_shape_mismatch(self):
        g = Grid(RectDomain((1.0,)), (10,))
        with pytest.raises(ValueError):
            apply_laplacian(g, np.zeros(11))


class TestHelmholtz:
    def test_round_trip(self):
        g = Grid(RectDomain((1.0, 1.5)), (12, 17))
        rng = np.random.default_rng(7)
        rhs = rng.standard_normal(g.shape)
        for c in (0.0, 1.0, 37.5):
            u = helmholtz_solve(g, c, rhs)
            np.testing.assert_allclose(c * u - apply_laplacian(g, u), rhs,
                                       rtol=1e-10, atol=1e-10)

    def test_refinement_second_order(self):
        # manufactured solution u = sin(pi x): (c - Lap) u = (c + pi^2) u
        def error(nodes):
            g = Grid(RectDomain((1.0,)), (nodes,))
            x = g.axes()[0]
            exact = np.sin(math.pi * x)
            rhs = (2.0 + math.pi**2) * exact
            return np.max(np.abs(helmholtz_solve(g, 2.0, rhs) - exact))

        ratio = error(50) / error(101)
        assert 0.8 * 4 <= ratio <= 1.2 * 4

    def test_negative_c_rejected(self):
        g = Grid(RectDomain((1.0,)), (10,))
        with pytest.raises(ValueError):
            helmholtz_solve(g, -1.0, np.zeros(10))


class TestQuadrature:
    def test_eigenfunction_normalized(self):
        g = Grid(RectDomain((1.0, 1.3)), (30, 40))
        phi, ev = eigenfunction(g.domain, (1, 2), g)
        assert l2_norm(g, phi) == pytest.approx(1.0, rel=1e-13)
        assert ev == pytest.approx((math.pi / 1.0)**2 + (2 * math.pi / 1.3)**2)

    def test_eigenfunctions_orthogonal(self):
        g = Grid(RectDomain((1.0,)), (64,))
        phi1, _ = eigenfunction(g.domain, (1,), g)
        phi2, _ = eigenfunction(g.domain, (2,), g)
        assert abs(l2_inner(g, phi1, phi2)) < 1e-12

    def test_vector_field_inner(self):
        g = Grid(RectDomain((1.0,)), (10,))
        a = np.ones((2,) + g.shape)
        # two unit components integrate to 2 * interior measure
        assert l2_inner(g, a, a) == pytest.approx(2 * 10 * g.cell_volume)

    @given(st.floats(0.1, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_norm_scales_linearly(self, scale):
        g = Grid(RectDomain((1.0,)), (15,))
        u = np.sin(math.pi * g.axes()[0])
        assert l2_norm(g, scale * u) == pytest.approx(scale * l2_norm(g, u), rel=1e-12)
