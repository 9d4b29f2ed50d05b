"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
All tolerances are pinned here, not configurable.
"""

import json
import math

import numpy as np
import pytest

from oracles import ball2_inner_product
from toeplitz_spectra.assembly import (
    AlgebraModel,
    assemble_block,
    cross_block_entry_bound,
    gamma_quasi_radial,
    orthogonalize_projections,
    projection,
)
from toeplitz_spectra.cli import main as cli_main
from toeplitz_spectra.gelfand import (
    DiagonalCoefficient,
    FiniteSum,
    assemble_finite_sum,
    evaluate_gelfand,
    sample_ideal_space,
)
from toeplitz_spectra.lattice import (
    GlobalBasis,
    PartitionConfig,
    enumerate_kappa,
    monomial_norm_sq,
)
from toeplitz_spectra.quad import dirichlet_integral, simplex_integrate
from toeplitz_spectra.radical import (
    decompose_by_division,
    is_semisimple,
    norm_constants,
    power_norm_sequence,
    radical_generator,
)
from toeplitz_spectra.spectra import (
    PlanarRegion,
    SpectralContext,
    berezin_sequence,
    is_inverse_closed,
    polynomial_hull_2d,
)
from toeplitz_spectra.symbols import (
    MonomialProfile,
    QuasiRadialSymbol,
    builtin_quasi_homogeneous,
    constant_symbol,
    expression_symbol,
    modes_symbol,
    profile_symbol,
)

CONFIG_KS = [(1, 1), (1, 2), (2, 2)]


def _report(number: int, passed: bool, detail: str):
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
    assert passed, f"criterion {number}: {detail}"


def _random_radial(rng, m):
    pool = ["1", "1 - r{j}^2", "exp(-r{j}^2)", "0.5 + 0.5*r{j}^2"]
    text = pool[int(rng.integers(len(pool)))].replace("{j}", str(int(rng.integers(1, m + 1))))
    return QuasiRadialSymbol.from_expression(m, text)


def _random_group_symbol(rng, group, kj):
    if kj == 1:
        return constant_symbol(group, 1, complex(rng.standard_normal(), rng.standard_normal()))
    roll = int(rng.integers(4))
    if roll == 0:
        return builtin_quasi_homogeneous(group, (1, -1) if rng.random() < 0.5 else (2, -2))
    if roll == 1:
        return profile_symbol(group, 2, "s1^2" if rng.random() < 0.5 else "s1*s2 + 0.3")
    if roll == 2:
        return modes_symbol(
            group,
            2,
            [
                ((0, 0), MonomialProfile((0, 0), 0.4)),
                ((1, -1), MonomialProfile((1, 1))),
                ((-1, 1), MonomialProfile((1, 1), 0.5)),
            ],
        )
    return expression_symbol(
        group, 2, "s1*s2*(t1*conj(t2) + conj(t1)*t2) + 0.25",
        boundary_continuous=True,
    )


@pytest.fixture(scope="module")
def product_models():
    """Five seeded invariant symbol products per partition config,
    alternating between the two weight parameters."""
    out = {}
    rng = np.random.default_rng(20240601)
    for k in CONFIG_KS:
        models = []
        for i in range(5):
            cfg = PartitionConfig(k=k, lam=0.0 if i % 2 == 0 else 1.5)
            a = _random_radial(rng, cfg.m)
            symbols = {
                j: _random_group_symbol(rng, j, cfg.k[j - 1])
                for j in range(1, cfg.m + 1)
            }
            models.append(
                AlgebraModel(
                    cfg=cfg, quasi_radial=a, symbols=symbols,
                    block_order=32, torus_grid=16,
                )
            )
        out[k] = models
    return out


@pytest.fixture(scope="module")
def nilpotent_demo():
    cfg = PartitionConfig(k=(1, 2), lam=0.0)
    model = AlgebraModel(cfg=cfg, symbols={2: builtin_quasi_homogeneous(2, (1, -1))})
    return SpectralContext(model=model)


@pytest.fixture(scope="module")
def diagonal_demo():
    cfg = PartitionConfig(k=(1, 2), lam=0.0)
    model = AlgebraModel(cfg=cfg, symbols={2: profile_symbol(2, 2, "s1^2")})
    return SpectralContext(model=model)


def test_criterion_01_quadrature_oracle():
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(2, 5))
        a = tuple(float(v) for v in rng.choice(np.arange(0.0, 20.5, 0.5), size=k))
        exact = dirichlet_integral(a)
        approx = simplex_integrate(
            lambda s: np.ones(s.shape[0]), k - 1, 40, weight=a
        ).real
        worst = max(worst, abs(approx - exact) / exact)
    _report(1, worst < 1e-10, f"dirichlet vs simplex, worst rel err {worst:.3e}")


def test_criterion_02_identity_symbol():
    worst_gamma = 0.0
    worst_block = 0.0
    for k in CONFIG_KS:
        for lam in (0.0, 1.5):
            cfg = PartitionConfig(k=k, lam=lam)
            one = QuasiRadialSymbol.one(cfg.m)
            for kappa in enumerate_kappa(cfg, 10):
                dev = abs(gamma_quasi_radial(one, cfg, kappa) - 1.0)
                worst_gamma = max(worst_gamma, dev)
        for kj in set(k):
            triv = constant_symbol(1, kj, 1.0)
            for d in range(11):
                b = assemble_block(triv, 1, d)
                worst_block = max(worst_block, float(np.max(np.abs(b.mat - np.eye(b.dim)))))
    ok = worst_gamma < 1e-10 and worst_block < 1e-12
    _report(2, ok, f"gamma dev {worst_gamma:.3e}, block dev {worst_block:.3e}")


def test_criterion_03_block_orthogonality(product_models):
    worst = 0.0
    for k, models in product_models.items():
        for model in models:
            worst = max(worst, cross_block_entry_bound(model, 6))
    _report(3, worst < 1e-10, f"cross-block entry bound {worst:.3e} on D=6 truncations")


def test_criterion_04_commutativity_and_product(product_models):
    worst_comm = 0.0
    worst_prod = 0.0
    for k, models in product_models.items():
        for model in models:
            D = 6
            t_rad = model.truncated_radial(D)
            gens = {j: model.truncated_generator(j, D) for j in model.symbols}
            for g in gens.values():
                worst_comm = max(worst_comm, t_rad.commutator_fro(g))
            assembled = t_rad
            for j in sorted(gens):
                assembled = assembled @ gens[j]
            worst_prod = max(worst_prod, (model.truncated_product(D) - assembled).fro())
    ok = worst_comm < 1e-9 and worst_prod < 1e-9
    _report(4, ok, f"commutator {worst_comm:.3e}, product identity {worst_prod:.3e}")


def test_criterion_05_brute_force_blocks():
    cfg = PartitionConfig(k=(1, 1), lam=0.0)
    cases = {
        "quasi-homogeneous": (
            builtin_quasi_homogeneous(1, (1, -1)),
            lambda z: z[..., 0]
            * np.conj(z[..., 1])
            / np.maximum(np.abs(z[..., 0]) ** 2 + np.abs(z[..., 1]) ** 2, 1e-300),
        ),
        "generic": (
            expression_symbol(
                1, 2, "s1*s2*(t1*conj(t2) + conj(t1)*t2) + 0.25",
                boundary_continuous=True,
            ),
            lambda z: (
                (
                    z[..., 0] * np.conj(z[..., 1])
                    + np.conj(z[..., 0]) * z[..., 1]
                )
                / np.maximum(
                    np.abs(z[..., 0]) ** 2 + np.abs(z[..., 1]) ** 2, 1e-300
                )
                + 0.25
            ),
        ),
    }
    worst = 0.0
    for name, (sym, ball_fn) in cases.items():
        for d in range(5):
            block = assemble_block(sym, 1, d, order=48, torus_grid=16)
            for col, alpha in enumerate(block.basis.indices):
                for row, beta in enumerate(block.basis.indices):
                    want = ball2_inner_product(ball_fn, alpha, beta, 0.0, n_rad=60, n_ang=16)
                    want /= math.sqrt(
                        monomial_norm_sq(alpha, cfg) * monomial_norm_sq(beta, cfg)
                    )
                    worst = max(worst, abs(block.mat[row, col] - want))
    _report(5, worst < 1e-6, f"block entries vs ball quadrature, worst {worst:.3e}")


def test_criterion_06_tensor_eigenvectors(product_models):
    worst = 0.0
    for k, models in product_models.items():
        model = models[0]
        basis = model.basis(4)
        gens = {j: model.truncated_generator(j, 4) for j in model.symbols}
        for kappa in basis.kappas:
            eigs = []
            vecs = []
            for j in range(1, model.cfg.m + 1):
                w, v = np.linalg.eig(model.block(j, kappa[j - 1]).mat)
                eigs.append(w)
                vecs.append(v)
            for combo in np.ndindex(*[len(w) for w in eigs]):
                g = vecs[0][:, combo[0]]
                for idx in range(1, model.cfg.m):
                    g = np.kron(g, vecs[idx][:, combo[idx]])
                g = g / np.linalg.norm(g)
                for j, gen in gens.items():
                    zeta = eigs[j - 1][combo[j - 1]]
                    res = np.linalg.norm(gen.block(kappa) @ g - zeta * g)
                    worst = max(worst, float(res))
    _report(6, worst < 1e-9, f"tensor eigenvector residual {worst:.3e} for |kappa| <= 4")


def test_criterion_07_berezin_limit():
    c = profile_symbol(1, 2, "s1^2")
    radial = QuasiRadialSymbol.from_expression(1, "r1^2")
    probe = berezin_sequence(c, 1, (0.3, 0.4), [50, 100, 200], radial_profile=radial)
    errs = {d: abs(v - 0.36) for d, v in zip(probe.degrees, probe.values)}
    ok = errs[100] < 0.02 and errs[200] < errs[50]
    _report(
        7,
        ok,
        "berezin |z1|^2 at w=(0.3,0.4): "
        + ", ".join(f"err(d={d})={e:.2e}" for d, e in errs.items()),
    )


def test_criterion_08_hull_correctness():
    circle = np.exp(2j * np.pi * np.arange(1000) / 1000)
    region = PlanarRegion.from_curve(circle, 512)
    hull = polynomial_hull_2d(region)
    area_err = abs(hull.area() - math.pi) / math.pi
    rng = np.random.default_rng(88)
    pts = rng.standard_normal(25) + 1j * rng.standard_normal(25)
    finite = PlanarRegion.from_points(pts, 512)
    fixed = np.array_equal(polynomial_hull_2d(finite).occ, finite.occ)
    idem = np.array_equal(polynomial_hull_2d(hull).occ, hull.occ)
    ok = area_err < 0.01 and fixed and idem
    _report(
        8,
        ok,
        f"circle hull area err {area_err:.4f}, finite fixed {fixed}, idempotent {idem}",
    )


def test_criterion_09_inverse_closed_classifier():
    cfg = PartitionConfig(k=(1, 2), lam=0.0)
    real_model = AlgebraModel(cfg=cfg, symbols={2: profile_symbol(2, 2, "s1^2")})
    real_verdict = is_inverse_closed(SpectralContext(model=real_model), 5)
    circ_model = AlgebraModel(
        cfg=cfg,
        symbols={2: expression_symbol(2, 2, "exp(2*pi*i*s1^2)", boundary_continuous=True)},
        block_order=32,
        torus_grid=16,
    )
    circ_verdict = is_inverse_closed(SpectralContext(model=circ_model), 5)
    extra = circ_verdict.per_group[2]["extra_cells"]
    ok = real_verdict.inverse_closed and not circ_verdict.inverse_closed and extra > 100
    _report(
        9,
        ok,
        f"real family closed={real_verdict.inverse_closed}, "
        f"circle family closed={circ_verdict.inverse_closed} (extra {extra} cells)",
    )


def test_criterion_10_semisimplicity(nilpotent_demo, diagonal_demo):
    diag = is_semisimple(diagonal_demo, 8)
    diag_half = is_semisimple(diagonal_demo, 8, tol=0.5e-10)
    nil = is_semisimple(nilpotent_demo, 8)
    nil_half = is_semisimple(nilpotent_demo, 8, tol=0.5e-10)
    ok = (
        diag.semisimple
        and not nil.semisimple
        and nil.witness == (2, 1)
        and diag.semisimple == diag_half.semisimple
        and nil.witness == nil_half.witness
    )
    _report(
        10,
        ok,
        f"profile family: {diag.describe()}; nilpotent family: {nil.describe()}",
    )


def test_criterion_11_radical_generators(nilpotent_demo):
    gamma = DiagonalCoefficient.from_callable(lambda kappa: 0.5 ** kappa[1], "0.5^k2")
    gen = radical_generator(nilpotent_demo, 2, gamma, 1, 8)
    points = sample_ideal_space(
        nilpotent_demo, 8, 1200, zeta_per_region=48
    )
    psi_max = max(abs(evaluate_gelfand(gen.finite_sum, p)) for p in points)
    norms = power_norm_sequence(gen.operator, 6)
    monotone = all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))
    ok = (
        len(points) >= 500
        and psi_max < 1e-8
        and gen.operator.fro() > 1e-6
        and monotone
    )
    _report(
        11,
        ok,
        f"{len(points)} functionals, sup|psi(G)|={psi_max:.2e}, "
        f"|G|_F={gen.operator.fro():.3f}, power norms monotone={monotone}",
    )


def test_criterion_12_division_reconstruction(diagonal_demo):
    rng = np.random.default_rng(1212)
    cfg = diagonal_demo.cfg
    worst_res = 0.0
    all_structural = True
    bound_ok = True
    nc = {d: norm_constants(diagonal_demo, 2, d) for d in range(4)}
    for trial in range(50):
        n_terms = int(rng.integers(1, 6))
        A = FiniteSum.zero(2)
        for _ in range(n_terms):
            rho = tuple(int(rng.integers(0, 3)) for _ in range(2))
            table = {
                kappa: complex(rng.standard_normal(), rng.standard_normal())
                for kappa in enumerate_kappa(cfg, 4)
            }
            A = A + FiniteSum.term(2, DiagonalCoefficient.from_table(table), rho)
        d = trial % 4
        parts = decompose_by_division(A, 2, d, diagonal_demo)
        all_structural = all_structural and parts.structurally_free_of_generator()
        worst_res = max(
            worst_res, parts.reconstruction_residual(diagonal_demo.model, 4)
        )
        a_norm = assemble_finite_sum(A, diagonal_demo.model, 4).opnorm()
        for level in range(parts.n):
            s_norm = assemble_finite_sum(
                parts.s_parts[level], diagonal_demo.model, 4
            ).opnorm()
            if s_norm > nc[d].values[level] * a_norm + 1e-9:
                bound_ok = False
    ok = worst_res < 1e-9 and all_structural and bound_ok
    _report(
        12,
        ok,
        f"50 sums: residual {worst_res:.2e}, generator-free parts {all_structural}, "
        f"norm bounds {bound_ok}",
    )


def test_criterion_13_projection_algebra():
    ok = True
    for k in CONFIG_KS:
        cfg = PartitionConfig(k=k, lam=0.0)
        basis = GlobalBasis(cfg, 5)
        for kappa in basis.kappas:
            masks = [
                projection("Q", (j, kappa[j - 1]), cfg, 5, basis)
                for j in range(1, cfg.m + 1)
            ]
            combined = masks[0]
            for msk in masks[1:]:
                combined = combined & msk
            ok = ok and np.array_equal(
                combined.diag, projection("P", kappa, cfg, 5, basis).diag
            )
        for j in range(1, cfg.m + 1):
            for d in range(6):
                acc = np.zeros(basis.dim, dtype=bool)
                for kappa in basis.kappas:
                    if kappa[j - 1] == d:
                        acc |= projection("P", kappa, cfg, 5, basis).diag
                ok = ok and np.array_equal(
                    acc, projection("Q", (j, d), cfg, 5, basis).diag
                )
        qtildes = [
            projection("Qtilde", (j, 2), cfg, 5, basis) for j in range(1, cfg.m + 1)
        ]
        orth = orthogonalize_projections(qtildes)
        union_in = np.zeros(basis.dim, dtype=bool)
        union_out = np.zeros(basis.dim, dtype=bool)
        for q, p in zip(qtildes, orth):
            union_in |= q.diag
            union_out |= p.diag
        ok = ok and np.array_equal(union_in, union_out)
        for x in range(len(orth)):
            for y in range(x + 1, len(orth)):
                ok = ok and not np.any(orth[x].diag & orth[y].diag)
    _report(13, ok, "P/Q/Qtilde mask identities and orthogonalization exact")


def test_criterion_14_determinism_across_threads(tmp_path):
    config = {
        "partition": {"k": [1, 2], "lambda": 0.0},
        "degree_cap": 3,
        "quasi_radial": {"kind": "expression", "text": "1 - r1^2*r2^2"},
        "symbols": [{"group": 2, "kind": "quasi_homogeneous", "p": [1, -1]}],
        "hull": {"resolution": 256, "ess_samples": 2048},
        "output_dir": str(tmp_path / "out"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    shas = []
    for threads in ("1", "4", "0"):
        assert cli_main(["verify", "--config", str(path), "--threads", threads]) == 0
        report = json.loads((tmp_path / "out" / "report_verify.json").read_text())
        shas.append(report["payload_sha256"])
    ok = len(set(shas)) == 1
    _report(14, ok, f"verify payload sha identical across threads 1/4/all: {ok}")
