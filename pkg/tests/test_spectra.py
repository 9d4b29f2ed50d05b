import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import char_poly_coeffs
from toeplitz_spectra.assembly import AlgebraModel, assemble_block
from toeplitz_spectra.errors import SpectraError
from toeplitz_spectra.lattice import PartitionConfig
from toeplitz_spectra.spectra import (
    PlanarRegion,
    accumulation_check,
    berezin_sequence,
    block_eigenvalues,
    essential_spectrum_estimate,
    is_inverse_closed,
    point_spectrum,
    polynomial_hull_2d,
    spectrum_with_hull,
    SpectralContext,
)
from toeplitz_spectra.symbols import (
    QuasiRadialSymbol,
    constant_symbol,
    expression_symbol,
    profile_symbol,
)


class TestBlockEigenvalues:
    def test_diagonal_block(self):
        mat = np.diag([1.0, 1.0, 2.0]).astype(complex)
        e = block_eigenvalues(mat)
        assert np.allclose(e.distinct, [1.0, 2.0])
        assert list(e.multiplicities) == [2, 1]
        assert int(e.multiplicities.sum()) == 3

    def test_strictly_triangular_block_exact_zeros(self):
        mat = np.zeros((6, 6), dtype=complex)
        for i in range(5):
            mat[i, i + 1] = 0.3 + 0.1 * i
        e = block_eigenvalues(mat)
        assert e.n_distinct == 1
        assert e.distinct[0] == 0.0  # structural, not merely small

    def test_random_block_vs_characteristic_polynomial(self):
        rng = np.random.default_rng(17)
        mat = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        mat[0, 1] = 0.7  # ensure both triangles populated
        mat[1, 0] = -0.2
        e = block_eigenvalues(mat)
        roots = np.sort_complex(np.roots(char_poly_coeffs(mat)))
        assert np.max(np.abs(np.sort_complex(e.values) - roots)) < 1e-8

    def test_direct_sum_is_multiset_union(self):
        sym = profile_symbol(1, 2, "s1*s1 + 0.125")
        blocks = [assemble_block(sym, 1, d).mat for d in range(4)]
        direct = np.zeros((sum(b.shape[0] for b in blocks),) * 2, dtype=complex)
        at = 0
        union = []
        for b in blocks:
            direct[at : at + b.shape[0], at : at + b.shape[0]] = b
            union.extend(np.diag(b))
            at += b.shape[0]
        got = np.sort_complex(block_eigenvalues(direct).values)
        assert np.max(np.abs(got - np.sort_complex(np.array(union)))) < 1e-10

    def test_cluster_warning(self):
        mat = np.diag([0.0, 1e-9, 1.0]).astype(complex)
        e = block_eigenvalues(mat, tol=1e-10)
        assert e.warnings


class TestPointSpectrum:
    def test_constant_symbol(self):
        cfg = PartitionConfig(k=(2,))
        model = AlgebraModel(cfg=cfg, symbols={1: constant_symbol(1, 2, 1.0)})
        ps = point_spectrum(model, 1, 4)
        flat = ps.flat()
        assert np.allclose(flat, 1.0)

    def test_profile_diagonal_moments(self):
        # b(s) profiles produce the Dirichlet moments on the diagonal.
        cfg = PartitionConfig(k=(2,))
        model = AlgebraModel(cfg=cfg, symbols={1: profile_symbol(1, 2, "s1^2")})
        ps = point_spectrum(model, 1, 3)
        for d, e in ps.by_degree.items():
            want = sorted((a1 + 1) / (d + 2) for a1 in range(d + 1))
            assert np.allclose(np.sort(e.values.real), want)

    def test_quasi_homogeneous_all_zero(self, nilpotent_ctx):
        ps = nilpotent_ctx.point_spectrum(2, 5)
        assert all(
            e.n_distinct == 1 and e.distinct[0] == 0.0 for e in ps.by_degree.values()
        )


class TestPlanarRegion:
    def test_circle_hull_area(self):
        circle = np.exp(2j * np.pi * np.arange(1000) / 1000)
        region = PlanarRegion.from_curve(circle, 512)
        hull = polynomial_hull_2d(region)
        assert abs(hull.area() - math.pi) / math.pi < 0.01
        assert hull.count() > region.count()

    def test_finite_sets_are_polynomially_convex(self):
        pts = np.array([0.0, 1.0, 1j, -0.7 - 0.2j])
        region = PlanarRegion.from_points(pts, 256)
        hull = polynomial_hull_2d(region)
        assert np.array_equal(hull.occ, region.occ)

    def test_hull_idempotent_and_monotone(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        region = PlanarRegion.from_curve(pts, 256, closed=True)
        hull = polynomial_hull_2d(region)
        assert np.all(hull.occ >= region.occ)
        assert np.array_equal(polynomial_hull_2d(hull).occ, hull.occ)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_hull_star_shaped_vs_double_resolution(self, seed):
        rng = np.random.default_rng(seed)
        angles = np.sort(rng.uniform(0, 2 * np.pi, 24))
        radii = rng.uniform(0.5, 1.0, 24)
        curve = radii * np.exp(1j * angles)
        # the curve is closed and star-shaped around 0; hull area must be
        # stable under doubling the grid (within a perimeter-cell band)
        r1 = PlanarRegion.from_curve(curve, 256)
        r2 = PlanarRegion.from_curve(curve, 512)
        a1 = polynomial_hull_2d(r1).area()
        a2 = polynomial_hull_2d(r2).area()
        assert abs(a1 - a2) < 14 * r1.cell  # perimeter < ~2pi + slack

    def test_rigid_motion_invariance_up_to_cells(self):
        rng = np.random.default_rng(9)
        pts = np.exp(2j * np.pi * np.arange(300) / 300)
        shift = 0.37 - 0.81j
        rot = np.exp(0.6j)
        a = polynomial_hull_2d(PlanarRegion.from_curve(pts, 256)).area()
        b = polynomial_hull_2d(PlanarRegion.from_curve(rot * pts + shift, 256)).area()
        assert abs(a - b) / a < 0.02

    def test_empty_rejected(self):
        with pytest.raises(SpectraError):
            PlanarRegion.from_points([], 64)


class TestEssentialSpectrum:
    def test_constant(self):
        region = essential_spectrum_estimate(constant_symbol(1, 2, 1.0), 1, 256)
        assert region.contains_point(1.0 + 0j)
        assert region.count() < 60  # a dot, not a blob

    def test_profile_segment(self):
        # boundary image of s1^2 is the segment [0, 1]
        region = essential_spectrum_estimate(profile_symbol(1, 2, "s1^2"), 1, 1024)
        assert region.contains_point(0.0, 1)
        assert region.contains_point(0.5, 1)
        assert region.contains_point(1.0, 1)
        assert not region.contains_point(0.5 + 0.4j)
        hull = polynomial_hull_2d(region)
        assert hull.minus_count(region) == 0  # segments are polynomially convex

    def test_circle_image(self):
        sym = expression_symbol(1, 2, "exp(2*pi*i*s1^2)", boundary_continuous=True)
        region = essential_spectrum_estimate(sym, 1, 4096, resolution=512)
        for angle in np.linspace(0, 2 * np.pi, 17):
            assert region.contains_point(np.exp(1j * angle), 2)
        assert not region.contains_point(0.0, 2)

    def test_flag_required(self):
        sym = expression_symbol(1, 2, "s1^2", boundary_continuous=False)
        with pytest.raises(SpectraError):
            essential_spectrum_estimate(sym, 1, 64)


class TestBerezin:
    def test_constant_sequence(self):
        c = constant_symbol(1, 2, 1.0)
        probe = berezin_sequence(c, 1, (0.3, 0.4), [1, 5, 20])
        assert np.allclose(probe.values, 1.0)
        assert max(probe.norm_devs) < 1e-12

    def test_moduli_squared_limit(self):
        # c(z) = |z1|^2 as radial factor r^2 times angular profile s1^2.
        c = profile_symbol(1, 2, "s1^2")
        radial = QuasiRadialSymbol.from_expression(1, "r1^2")
        probe = berezin_sequence(c, 1, (0.3, 0.4), [50, 100, 200], radial_profile=radial)
        assert probe.boundary_value == pytest.approx(0.36)
        errs = [abs(v - 0.36) for v in probe.values]
        assert errs[1] < 0.02
        assert errs[2] < errs[0]
        # closed form (d x + 1) / (d + 3) for this probe
        for d, v in zip(probe.degrees, probe.values):
            assert v.real == pytest.approx((d * 0.36 + 1) / (d + 3), rel=1e-10)

    def test_degenerate_base_point(self):
        c = constant_symbol(1, 2, 1.0)
        with pytest.raises(SpectraError):
            berezin_sequence(c, 1, (0.0, 0.0), [3])
        with pytest.raises(SpectraError):
            berezin_sequence(c, 1, (1.0, 0.3), [3])


class TestSpectrumHull:
    def test_trivial(self):
        cfg = PartitionConfig(k=(2,))
        model = AlgebraModel(cfg=cfg, symbols={1: constant_symbol(1, 2, 1.0)})
        ctx = SpectralContext(model=model, hull_resolution=256)
        swh = spectrum_with_hull(ctx, 1, 3)
        assert swh.extra_cells == 0
        assert swh.sp_region.contains_point(1.0)

    def test_circle_symbol_fills(self):
        cfg = PartitionConfig(k=(2,))
        sym = expression_symbol(1, 2, "exp(2*pi*i*s1^2)", boundary_continuous=True)
        model = AlgebraModel(cfg=cfg, symbols={1: sym}, block_order=32, torus_grid=16)
        ctx = SpectralContext(model=model, hull_resolution=512)
        swh = spectrum_with_hull(ctx, 1, 4)
        assert swh.extra_cells > 100
        assert swh.hull_region.contains_point(0.0)

    def test_real_symbol_hull_equals_spectrum(self, diagonal_ctx):
        swh = spectrum_with_hull(diagonal_ctx, 2, 5)
        assert swh.extra_cells == 0


class TestAccumulation:
    def test_profile_accumulates_in_segment(self, diagonal_ctx):
        report = accumulation_check(diagonal_ctx, 2, 10)
        assert report.candidates  # the moments cluster inside [0,1]
        assert report.ok

    def test_constant_symbol_trivial(self):
        cfg = PartitionConfig(k=(2,))
        model = AlgebraModel(cfg=cfg, symbols={1: constant_symbol(1, 2, 1.0)})
        ctx = SpectralContext(model=model, hull_resolution=256)
        report = accumulation_check(ctx, 1, 8)
        assert report.ok
        for z in report.candidates:
            assert abs(z - 1.0) < 1e-9

    def test_nilpotent_zero_in_essential(self, nilpotent_ctx):
        report = accumulation_check(nilpotent_ctx, 2, 8)
        assert report.ok
        assert any(abs(z) < 1e-9 for z in report.candidates)


class TestInverseClosed:
    def test_real_family_true(self, diagonal_ctx):
        report = is_inverse_closed(diagonal_ctx, 5)
        assert report.inverse_closed

    def test_circle_family_false(self):
        cfg = PartitionConfig(k=(1, 2))
        sym = expression_symbol(2, 2, "exp(2*pi*i*s1^2)", boundary_continuous=True)
        model = AlgebraModel(cfg=cfg, symbols={2: sym}, block_order=32, torus_grid=16)
        ctx = SpectralContext(model=model, hull_resolution=512)
        report = is_inverse_closed(ctx, 4)
        assert not report.inverse_closed
        assert report.per_group[2]["extra_cells"] > 100
        assert report.per_group[1]["polynomially_convex"]

    def test_constants_true(self):
        cfg = PartitionConfig(k=(1, 1))
        model = AlgebraModel(
            cfg=cfg,
            symbols={1: constant_symbol(1, 1, 2.0), 2: constant_symbol(2, 1, 1j)},
        )
        ctx = SpectralContext(model=model, hull_resolution=256)
        assert is_inverse_closed(ctx, 4).inverse_closed
