import math

import numpy as np
import pytest

from degenbeam.spectral import (
    DomainSpec,
    analyze,
    as_coeffs,
    build_spectrum,
    fractional_norm,
    grid_shape,
    h_norm_sq,
    head_project,
    hs_norm_sq,
    make_grid,
    synthesize,
    tail_project,
)


class TestDomain:
    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            DomainSpec(3, (1.0, 1.0, 1.0))

    def test_rejects_length_count_mismatch(self):
        with pytest.raises(ValueError):
            DomainSpec(2, (1.0,))

    @pytest.mark.parametrize("L", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_nonpositive_length(self, L):
        with pytest.raises(ValueError):
            DomainSpec(1, (L,))

    def test_volume(self):
        assert DomainSpec(2, (2.0, 3.0)).volume == 6.0


class TestSpectrum:
    def test_interval_first_three(self, line):
        assert build_spectrum(line, 3).lam.tolist() == [1.0, 16.0, 81.0]

    def test_square_first(self, square):
        assert build_spectrum(square, 1).lam[0] == 4.0

    def test_long_interval_second_mode(self):
        spec = build_spectrum(DomainSpec(1, (2 * math.pi,)), 2)
        assert spec.lam[1] == pytest.approx(1.0, rel=1e-15)

    def test_rejects_zero_modes(self, line):
        with pytest.raises(ValueError):
            build_spectrum(line, 0)

    def test_sorted_with_lexicographic_ties(self, square):
        spec = build_spectrum(square, 12)
        assert np.all(np.diff(spec.lam) >= 0)
        # (1,2) and (2,1) tie at 25; lexicographic order puts (1,2) first
        assert spec.indices[1].tolist() == [1, 2] and spec.indices[2].tolist() == [2, 1]

    def test_rectangle_closed_form(self):
        dom = DomainSpec(2, (math.pi, 2.0))
        spec = build_spectrum(dom, 20)
        j, k = spec.indices[:, 0], spec.indices[:, 1]
        expected = ((j * np.pi / math.pi) ** 2 + (k * np.pi / 2.0) ** 2) ** 2
        np.testing.assert_allclose(spec.lam, expected, rtol=1e-15)

    def test_rectangle_keeps_smallest(self):
        # brute force over a much larger index box
        dom = DomainSpec(2, (1.0, 3.0))
        spec = build_spectrum(dom, 15)
        j, k = np.meshgrid(np.arange(1, 60), np.arange(1, 60))
        all_lam = np.sort((((j * np.pi) ** 2 + (k * np.pi / 3.0) ** 2) ** 2).ravel())
        np.testing.assert_allclose(spec.lam, all_lam[:15], rtol=1e-14)

    def test_arrays_read_only(self, line):
        spec = build_spectrum(line, 4)
        with pytest.raises(ValueError):
            spec.lam[0] = 2.0

    def test_eigenfunctions_orthonormal(self):
        # Gauss-Legendre is independent of the sine collocation rules
        dom = DomainSpec(2, (math.pi, 2.0))
        spec = build_spectrum(dom, 10)
        xg, wg = np.polynomial.legendre.leggauss(80)
        x = (xg + 1) * math.pi / 2
        y = xg + 1.0
        X, Y = np.meshgrid(x, y, indexing="ij")
        W = np.outer(wg * math.pi / 2, wg)
        vals = np.stack([spec.eigenfunction(n, X, Y) for n in range(spec.count)])
        gram = np.einsum("ixy,jxy,xy->ij", vals, vals, W)
        np.testing.assert_allclose(gram, np.eye(spec.count), atol=1e-12)

    def test_check_rejects_wrong_length(self, line):
        spec = build_spectrum(line, 4)
        with pytest.raises(ValueError):
            spec.check(np.zeros(3))


class TestNorms:
    def test_fractional_norm_examples(self, line):
        spec = build_spectrum(line, 3)
        assert fractional_norm([1, 0, 0], spec, 2) == 1.0
        assert fractional_norm([0, 1, 0], spec, 2) == 4.0
        spec2 = build_spectrum(line, 2)
        assert fractional_norm([3, 4], spec2, 0) == 5.0

    def test_h_norm_examples(self, line):
        spec = build_spectrum(line, 2)
        assert h_norm_sq([1, 0], [0, 0], spec) == 1.0
        assert h_norm_sq([0, 0], [2, 0], spec) == 4.0
        assert h_norm_sq([0, 0], [0, 0], spec) == 0.0

    def test_hs_reduces_to_h(self, line, rng):
        spec = build_spectrum(line, 8)
        a, b = rng.standard_normal((2, 8))
        assert hs_norm_sq(a, b, spec, 0.0) == pytest.approx(h_norm_sq(a, b, spec), rel=1e-15)

    def test_hs_components(self, line):
        spec = build_spectrum(line, 3)
        # ||u||_{2+s}^2 + ||v||_s^2 with s = 1: lam^1.5 a^2 + lam^0.5 b^2
        assert hs_norm_sq([0, 1, 0], [0, 0, 1], spec, 1.0) == pytest.approx(16**1.5 + 81**0.5)

    def test_batched(self, line, rng):
        spec = build_spectrum(line, 5)
        c = rng.standard_normal((4, 5))
        out = fractional_norm(c, spec, 1.0)
        assert out.shape == (4,)
        assert out[2] == pytest.approx(fractional_norm(c[2], spec, 1.0))


class TestProjectors:
    def test_examples(self):
        assert tail_project([1, 2, 3], 1).tolist() == [0, 2, 3]
        assert tail_project([1, 2, 3], 0).tolist() == [1, 2, 3]
        assert tail_project([1, 2, 0], 2).tolist() == [0, 0, 0]

    @pytest.mark.parametrize("m", [-1, 4])
    def test_out_of_range(self, m):
        with pytest.raises(ValueError):
            tail_project([1, 2, 3], m)

    def test_head_plus_tail(self, rng):
        c = rng.standard_normal(7)
        np.testing.assert_array_equal(head_project(c, 3) + tail_project(c, 3), c)

    def test_does_not_mutate(self):
        c = np.array([1.0, 2.0])
        tail_project(c, 1)
        assert c.tolist() == [1.0, 2.0]


class TestTransforms:
    def test_first_mode_roundtrip(self, line):
        spec = build_spectrum(line, 8)
        grid = make_grid(spec)
        vals = synthesize(as_coeffs([1.0], spec), spec, grid)
        np.testing.assert_allclose(vals, np.sqrt(2 / np.pi) * np.sin(grid.nodes[0]), atol=1e-15)
        out = analyze(vals, spec, grid)
        np.testing.assert_allclose(out, np.eye(8)[0], atol=1e-14)

    def test_zero_roundtrip(self, line):
        spec = build_spectrum(line, 6)
        grid = make_grid(spec)
        assert np.all(analyze(synthesize(np.zeros(6), spec, grid), spec, grid) == 0)

    @pytest.mark.parametrize("symmetric", [True, False])
    @pytest.mark.parametrize("dim", [1, 2])
    def test_random_roundtrip(self, rng, symmetric, dim):
        dom = DomainSpec(1, (2.5,)) if dim == 1 else DomainSpec(2, (1.0, 2.0))
        spec = build_spectrum(dom, 24)
        grid = make_grid(spec, factors=2 if symmetric else 3, symmetric=symmetric)
        c = rng.standard_normal(24)
        c /= np.linalg.norm(c)
        vals = synthesize(c, spec, grid)
        # direct summation oracle for the synthesis
        direct = np.array([
            sum(c[n] * spec.eigenfunction(n, *pt) for n in range(24))
            for pt in _points(grid, dim)
        ])
        np.testing.assert_allclose(vals, direct, atol=1e-13)
        assert np.max(np.abs(analyze(vals, spec, grid) - c)) <= 1e-12

    def test_grid_too_small(self, line):
        spec = build_spectrum(line, 8)
        small = make_grid(build_spectrum(line, 4))
        with pytest.raises(ValueError):
            synthesize(np.zeros(8), spec, small)

    def test_symmetric_needs_even_factors(self, line):
        with pytest.raises(ValueError):
            make_grid(build_spectrum(line, 4), factors=3, symmetric=True)

    def test_grid_sizes(self, line):
        spec = build_spectrum(line, 10)
        assert grid_shape(make_grid(spec, factors=4)) == (21,)  # ceil((40+1)/2)
        assert grid_shape(make_grid(spec, factors=3, symmetric=False)) == (61,)

    def test_full_period_rule_odd_products(self, line):
        # odd-parity products a symmetric rule cannot integrate
        spec = build_spectrum(line, 3)
        grid = make_grid(spec, factors=3, symmetric=False)
        x = grid.nodes[0]
        assert grid.integrate(np.sin(x) ** 3) == pytest.approx(4 / 3, abs=1e-14)
        assert grid.integrate(np.sin(x) * np.sin(3 * x) ** 2) == pytest.approx(36 / 35, abs=1e-14)
        assert grid.integrate(np.sin(x) * np.sin(2 * x) * np.sin(3 * x)) == pytest.approx(0, abs=1e-14)
        assert grid.integrate(np.sin(x)) == pytest.approx(2.0, abs=1e-14)


def _points(grid, dim):
    if dim == 1:
        return [(x,) for x in grid.nodes[0]]
    return [(x, y) for x in grid.nodes[0] for y in grid.nodes[1]]
