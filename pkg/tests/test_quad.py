import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adaptive_dirichlet
from toeplitz_spectra.errors import QuadratureError
from toeplitz_spectra.quad import (
    FourierTable,
    SimplexRule,
    dirichlet_integral,
    dirichlet_probability_rule,
    jacobi_probability_rule_01,
    simplex_integrate,
    torus_fourier_coefficient,
)


def test_dirichlet_examples():
    assert dirichlet_integral((0, 0)) == pytest.approx(1.0)
    assert dirichlet_integral((1, 0)) == pytest.approx(0.5)
    with pytest.raises(QuadratureError):
        dirichlet_integral((-1.0, 0))


def test_dirichlet_vs_adaptive_oracle():
    a = (1.5, 0.5, 2.0)
    closed = dirichlet_integral(a)
    assert abs(adaptive_dirichlet(a) - closed) / closed < 1e-10


def test_simplex_rule_basic():
    rule = SimplexRule.plain(2, 20)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-12)  # simplex volume
    assert simplex_integrate(lambda s: np.ones(s.shape[0]), 2, 20).real == pytest.approx(0.5)
    assert simplex_integrate(lambda s: s[:, 0] * s[:, 1], 2, 20).real == pytest.approx(
        dirichlet_integral((1, 1, 0))
    )
    lam = 1.0
    got = simplex_integrate(lambda s: (1 - s[:, 0] - s[:, 1]) ** lam, 2, 20).real
    assert got == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_simplex_monomial_exactness_integer():
    # Plain rule is exact for polynomials up to its declared degree.
    rng = np.random.default_rng(11)
    for _ in range(25):
        k = int(rng.integers(2, 5))
        a = tuple(int(v) for v in rng.integers(0, 21, size=k))
        order = (sum(a) + 2) // 2 + 1

        def f(s, _a=a):
            out = np.ones(s.shape[0])
            for axis in range(len(_a) - 1):
                out = out * s[:, axis] ** _a[axis]
            return out * (1 - s.sum(axis=1)) ** _a[-1]

        got = simplex_integrate(f, k - 1, order).real
        want = dirichlet_integral(a)
        assert abs(got - want) / want < 1e-10


def test_simplex_absorbed_weight_half_integers():
    rng = np.random.default_rng(12)
    for _ in range(25):
        k = int(rng.integers(2, 5))
        a = tuple(float(v) for v in rng.choice(np.arange(0, 20.5, 0.5), size=k))
        got = simplex_integrate(lambda s: np.ones(s.shape[0]), k - 1, 40, weight=a).real
        want = dirichlet_integral(a)
        assert abs(got - want) / want < 1e-10


def test_simplex_rejects_nonfinite():
    with pytest.raises(QuadratureError):
        simplex_integrate(lambda s: np.full(s.shape[0], np.nan), 2, 8)


def test_probability_rule_moments():
    # Dirichlet expectations have Pochhammer closed forms.
    exps = (2.0, 0.0, 1.5)
    rule = dirichlet_probability_rule(exps, 40)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-13)
    a = np.array(exps) + 1.0
    total = a.sum()
    mean0 = float(np.sum(rule.weights * rule.nodes[:, 0]))
    assert mean0 == pytest.approx(a[0] / total, rel=1e-12)
    second = float(np.sum(rule.weights * rule.nodes[:, 1] ** 2))
    assert second == pytest.approx(a[1] * (a[1] + 1) / (total * (total + 1)), rel=1e-11)


def test_probability_rule_extreme_exponent():
    nodes, weights = jacobi_probability_rule_01(48, 10_000.0, 0.0)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert float(np.sum(weights * nodes)) == pytest.approx(10_001.0 / 10_002.0, rel=1e-12)


def test_torus_coefficient_characters():
    c = lambda s, t: t[..., 0] ** 2 * np.conj(t[..., 1]) ** 2
    s = (0.6, 0.8)
    assert torus_fourier_coefficient(c, (2, -2), s, 16) == pytest.approx(1.0, abs=1e-13)
    assert abs(torus_fourier_coefficient(c, (1, -1), s, 16)) < 1e-13
    with pytest.raises(QuadratureError):
        torus_fourier_coefficient(c, (9, -9), s, 8)


def test_torus_coefficient_examples():
    # c = s1 s2 (t1 conj(t2) + conj(t1) t2): mode (1,-1) recovers s1 s2.
    def c(s, t):
        return s[..., 0] * s[..., 1] * (
            t[..., 0] * np.conj(t[..., 1]) + np.conj(t[..., 0]) * t[..., 1]
        )

    rng = np.random.default_rng(5)
    for _ in range(5):
        raw = np.abs(rng.standard_normal(2)) + 0.1
        s = raw / np.linalg.norm(raw)
        got = torus_fourier_coefficient(c, (1, -1), tuple(s), 16)
        assert got == pytest.approx(s[0] * s[1], abs=1e-12)


def test_diagonal_invariant_symbol_vanishing_modes():
    # Invariant under the diagonal action: all |p| != 0 modes vanish.
    def c(s, t):
        ratio = t[..., 0] * np.conj(t[..., 1])
        return s[..., 0] + 0.3 * ratio + 0.3 * np.conj(ratio)

    s = (0.6, 0.8)
    for p in [(1, 0), (0, 1), (2, -1), (-1, -1), (1, 2)]:
        assert abs(torus_fourier_coefficient(c, p, s, 32)) < 1e-12


@given(
    p1=st.integers(-3, 3),
    p2=st.integers(-3, 3),
    sx=st.floats(0.1, 0.9),
)
@settings(max_examples=25, deadline=None)
def test_conjugate_symmetry_for_real_symbols(p1, p2, sx):
    def c(s, t):
        ratio = t[..., 0] * np.conj(t[..., 1])
        return (s[..., 0] ** 2) * (ratio + np.conj(ratio)).real

    s = (math.sqrt(sx), math.sqrt(1 - sx))
    plus = torus_fourier_coefficient(c, (p1, p2), s, 16)
    minus = torus_fourier_coefficient(c, (-p1, -p2), s, 16)
    assert np.conj(plus) == pytest.approx(minus, abs=1e-12)


def test_fourier_table_rejects_bad_mode():
    table = FourierTable(group=1, dim=2)
    table.declare((1, -1), lambda s: s[:, 0])
    with pytest.raises(QuadratureError):
        table.declare((1, 0), lambda s: s[:, 0])
    s = np.array([[0.6, 0.8]])
    assert table(s, (1, -1))[0] == pytest.approx(0.6)
    assert table(s, (2, -2))[0] == 0.0
