"""Batch front end: config loading, command dispatch, block cache, reports.

All interaction is run-and-read: a command takes a JSON config, writes a
JSON report (plus CSV/SVG side files where a command has tabular or planar
output) and exits.  Exit codes are a stable contract:

    0  success
    1  configuration error
    2  numerical failure
    3  verification failure (cmd verify only)

Reports are reproducible: the payload depends only on the echoed config and
tool version (fixed seeds, fixed summation orders, thread-count independent).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__
from .assembly import (
    AlgebraModel,
    BlockCache,
    TruncatedOperator,
    cross_block_entry_bound,
    gamma_quasi_radial,
)
from .errors import ConfigError, ToeplitzError
from .gelfand import (
    DiagonalCoefficient,
    FiniteSum,
    assemble_finite_sum,
    evaluate_gelfand,
    sample_ideal_space,
    spectral_radius_estimate,
    validate_gelfand_point,
)
from .lattice import PartitionConfig, block_indices, enumerate_kappa
from .quad import dirichlet_integral, simplex_integrate
from .radical import (
    decompose_by_division,
    is_semisimple,
    norm_constants,
    power_norm_sequence,
    radical_generator,
)
from .spectra import (
    PlanarRegion,
    SpectralContext,
    accumulation_check,
    berezin_sequence,
    is_inverse_closed,
    polynomial_hull_2d,
    spectrum_with_hull,
)
from .symbols import (
    MonomialProfile,
    QuasiRadialSymbol,
    builtin_quasi_homogeneous,
    constant_symbol,
    expression_symbol,
    profile_symbol,
)

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["partition"],
    "additionalProperties": False,
    "properties": {
        "partition": {
            "type": "object",
            "required": ["k"],
            "additionalProperties": False,
            "properties": {
                "k": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "n": {"type": "integer", "minimum": 1},
                "lambda": {"type": "number", "exclusiveMinimum": -1},
            },
        },
        "degree_cap": {"type": "integer", "minimum": 0},
        "quasi_radial": {
            "type": ["object", "null"],
            "properties": {
                "kind": {"enum": ["one", "expression", "power"]},
                "text": {"type": "string"},
                "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
            "required": ["kind"],
        },
        "symbols": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["group", "kind"],
                "properties": {
                    "group": {"type": "integer", "minimum": 1},
                    "kind": {
                        "enum": [
                            "constant",
                            "quasi_homogeneous",
                            "profile",
                            "profile_monomial",
                            "expression",
                        ]
                    },
                    "value": {},
                    "p": {"type": "array", "items": {"type": "integer"}},
                    "text": {"type": "string"},
                    "powers": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "coeff": {},
                    "boundary_continuous": {"type": "boolean"},
                },
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "block_order": {"type": "integer", "minimum": 1},
                "gamma_order": {"type": "integer", "minimum": 1},
                "torus_grid": {"type": "integer", "minimum": 2},
            },
        },
        "hull": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "resolution": {"type": "integer", "minimum": 16},
                "ess_samples": {"type": "integer", "minimum": 16},
            },
        },
        "eig_tol": {"type": "number", "exclusiveMinimum": 0},
        "surrogate_kappa": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "berezin": {
            "type": "object",
            "required": ["group", "w", "degrees"],
            "properties": {
                "group": {"type": "integer", "minimum": 1},
                "w": {"type": "array"},
                "degrees": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "radial_expression": {"type": ["string", "null"]},
            },
        },
        "gelfand": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "budget": {"type": "integer", "minimum": 1},
                "zeta_per_region": {"type": "integer", "minimum": 1},
            },
        },
        "radical": {
            "type": "object",
            "properties": {
                "group": {"type": "integer", "minimum": 1},
                "level": {"type": "integer", "minimum": 1},
                "gamma": {"type": "object"},
            },
        },
        "output_dir": {"type": "string"},
    },
}

DEFAULTS = {
    "degree_cap": 6,
    "quasi_radial": None,
    "symbols": [],
    "quadrature": {"block_order": 48, "gamma_order": 48, "torus_grid": 64},
    "hull": {"resolution": 512, "ess_samples": 4096},
    "eig_tol": 1e-8,
    "surrogate_kappa": 10_000,
    "seed": 12345,
    "gelfand": {"budget": 600, "zeta_per_region": 8},
    "output_dir": "out",
}


def _complex_from_json(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"cannot read complex value from {v!r}")


def c2j(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _fill_defaults(raw: dict) -> dict:
    cfg = dict(raw)
    cfg.setdefault("quasi_radial", None)
    for key, val in DEFAULTS.items():
        if key in ("quadrature", "hull", "gelfand"):
            merged = dict(val)
            merged.update(cfg.get(key) or {})
            cfg[key] = merged
        elif key != "quasi_radial":
            cfg.setdefault(key, val)
    part = dict(cfg["partition"])
    part.setdefault("lambda", 0.0)
    cfg["partition"] = part
    return cfg


def load_config(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    if jsonschema is not None:
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config failed schema validation: {exc.message}")
    cfg = _fill_defaults(raw)
    part = cfg["partition"]
    k = tuple(part["k"])
    if "n" in part and part["n"] != sum(k):
        raise ConfigError(f"declared n={part['n']} but sum(k)={sum(k)}")
    m = len(k)
    seen = set()
    for spec in cfg["symbols"]:
        g = spec["group"]
        if not 1 <= g <= m:
            raise ConfigError(f"symbol group {g} outside 1..{m}")
        if g in seen:
            raise ConfigError(f"two symbols declared for group {g}")
        seen.add(g)
    return cfg


@dataclass(eq=False)
class Setup:
    config: dict
    cfg: PartitionConfig
    model: AlgebraModel
    ctx: SpectralContext
    out_dir: Path
    threads: int
    warnings: list[str]


def _build_quasi_radial(spec, m: int) -> QuasiRadialSymbol | None:
    if spec is None:
        return None
    kind = spec["kind"]
    if kind == "one":
        return QuasiRadialSymbol.one(m)
    if kind == "expression":
        return QuasiRadialSymbol.from_expression(m, spec["text"])
    if kind == "power":
        exps = spec["exponents"]
        if len(exps) != m:
            raise ConfigError(f"radial power needs {m} exponents, got {len(exps)}")
        return QuasiRadialSymbol.power(exps)
    raise ConfigError(f"unknown quasi-radial kind {kind!r}")


def _build_symbol(spec, cfg: PartitionConfig) -> PseudoHomogeneousSymbol:
    g = spec["group"]
    kj = cfg.k[g - 1]
    kind = spec["kind"]
    bc = spec.get("boundary_continuous", True)
    if kind == "constant":
        return constant_symbol(g, kj, _complex_from_json(spec.get("value", 1.0)))
    if kind == "quasi_homogeneous":
        p = spec["p"]
        if len(p) != kj:
            raise ConfigError(f"mode length {len(p)} != group size {kj}")
        return builtin_quasi_homogeneous(g, p)
    if kind == "profile":
        return profile_symbol(g, kj, spec["text"], boundary_continuous=bc)
    if kind == "profile_monomial":
        prof = MonomialProfile(
            tuple(spec["powers"]), _complex_from_json(spec.get("coeff", 1.0))
        )
        return profile_symbol(g, kj, prof, boundary_continuous=bc)
    if kind == "expression":
        return expression_symbol(
            g, kj, spec["text"], boundary_continuous=spec.get("boundary_continuous", False)
        )
    raise ConfigError(f"unknown symbol kind {kind!r}")


def build_setup(config: dict, *, threads: int = 0, no_cache: bool = False, out: str | None = None) -> Setup:
    cfg = PartitionConfig(k=tuple(config["partition"]["k"]), lam=float(config["partition"]["lambda"]))
    quasi = _build_quasi_radial(config["quasi_radial"], cfg.m)
    symbols = {spec["group"]: _build_symbol(spec, cfg) for spec in config["symbols"]}
    out_dir = Path(out or config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = None
    if not no_cache:
        cache_dir = os.environ.get("TOEPLITZ_SPECTRA_CACHE", str(out_dir / "cache"))
        cache = BlockCache(cache_dir)
    quad = config["quadrature"]
    model = AlgebraModel(
        cfg=cfg,
        quasi_radial=quasi,
        symbols=symbols,
        block_order=quad["block_order"],
        gamma_order=quad["gamma_order"],
        torus_grid=quad["torus_grid"],
        cache=cache,
    )
    ctx = SpectralContext(
        model=model,
        eig_tol=config["eig_tol"],
        hull_resolution=config["hull"]["resolution"],
        ess_samples=config["hull"]["ess_samples"],
    )
    nthreads = threads if threads > 0 else (os.cpu_count() or 1)
    return Setup(
        config=config, cfg=cfg, model=model, ctx=ctx,
        out_dir=out_dir, threads=nthreads, warnings=[],
    )


def _precompute_blocks(setup: Setup, Dmax: int):
    """Per-(j, d) block assembly, parallel but order-independent by collection."""
    jobs = [(j, d) for j in sorted(setup.model.symbols) for d in range(Dmax + 1)]
    if not jobs:
        return
    if setup.threads <= 1:
        for j, d in jobs:
            setup.model.block(j, d)
        return
    with concurrent.futures.ThreadPoolExecutor(max_workers=setup.threads) as pool:
        futures = {(j, d): pool.submit(setup.model.block, j, d) for j, d in jobs}
        for key in sorted(futures):
            futures[key].result()


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


def canonical_payload_bytes(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def write_report(setup: Setup, command: str, payload: dict, started: float) -> Path:
    # wall time and cache state live in the envelope: the payload is the
    # reproducible part (identical config + version => identical bytes).
    body = {
        "command": command,
        "config": setup.config,
        "payload": payload,
        "payload_sha256": hashlib.sha256(canonical_payload_bytes(payload)).hexdigest(),
        "tool_version": __version__,
        "wall_time_s": round(time.monotonic() - started, 3),
        "cache_hit": setup.model.cache_hits > 0,
        "warnings": list(setup.warnings),
    }
    path = setup.out_dir / f"report_{command}.json"
    path.write_text(json.dumps(body, sort_keys=True, indent=1))
    return path


def _write_spectra_csv(path: Path, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "j", "d", "multiplicity"])
        for row in rows:
            writer.writerow(row)


def _region_json(region: PlanarRegion) -> dict:
    return {
        "x0": region.x0,
        "y0": region.y0,
        "cell": region.cell,
        "resolution": region.resolution,
        "provenance": region.provenance,
        "rows": [[list(run) for run in row] for row in region.run_length_rows()],
    }


def _region_svg(region: PlanarRegion, points=None) -> str:
    res = region.resolution
    side = res * region.cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{region.x0} {region.y0} {side} {side}">'
    ]
    path_bits = []
    for iy, row in enumerate(region.run_length_rows()):
        y = region.y0 + iy * region.cell
        for start, length in row:
            x = region.x0 + start * region.cell
            w = length * region.cell
            path_bits.append(
                f"M{x:.6g} {y:.6g}h{w:.6g}v{region.cell:.6g}h{-w:.6g}Z"
            )
    parts.append(f'<path fill="#4477aa" stroke="none" d="{"".join(path_bits)}"/>')
    for z in points or []:
        parts.append(
            f'<circle cx="{z.real:.6g}" cy="{z.imag:.6g}" r="{2 * region.cell:.6g}" fill="#cc3311"/>'
        )
    parts.append("</svg>")
    return "".join(parts)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_assemble(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    op = setup.model.truncated_product(D)
    basis = setup.model.basis(D)
    blocks_info = []
    for j in sorted(setup.model.symbols):
        for d in range(D + 1):
            b = setup.model.block(j, d)
            blocks_info.append(
                {
                    "j": j,
                    "d": d,
                    "dim": b.dim,
                    "fro": float(np.linalg.norm(b.mat)),
                    "nnz": int(np.count_nonzero(np.abs(b.mat) > 1e-15)),
                }
            )
    ident = TruncatedOperator.identity(basis)
    payload = {
        "global_dim": basis.dim,
        "kappa_count": len(basis.kappas),
        "operator_fro": op.fro(),
        "identity_deviation_fro": (op - ident).fro(),
        "blocks": blocks_info,
    }
    return payload


def cmd_spectrum(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    per_group = {}
    csv_rows = []
    for j in range(1, setup.cfg.m + 1):
        degrees = {}
        for d in range(D + 1):
            e = setup.ctx.eigen(j, d)
            setup.warnings.extend(e.warnings)
            degrees[str(d)] = {
                "distinct": [c2j(z) for z in e.distinct],
                "multiplicities": [int(v) for v in e.multiplicities],
            }
            for z, mult in zip(e.distinct, e.multiplicities):
                csv_rows.append([float(z.real), float(z.imag), j, d, int(mult)])
        entry = {"by_degree": degrees}
        sym = setup.model.symbols.get(j)
        if sym is not None and sym.boundary_continuous:
            acc = accumulation_check(setup.ctx, j, D)
            entry["accumulation"] = {
                "candidates": [c2j(z) for z in acc.candidates],
                "violations": [c2j(z) for z in acc.violations],
                "ok": acc.ok,
            }
        per_group[str(j)] = entry
    _write_spectra_csv(setup.out_dir / "spectra.csv", csv_rows)
    return {"Dmax": D, "groups": per_group}


def cmd_hull(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    res = setup.ctx.hull_resolution
    payload = {"groups": {}}
    for j in range(1, setup.cfg.m + 1):
        swh = spectrum_with_hull(setup.ctx, j, D)
        (setup.out_dir / f"region_sp_{j}.json").write_text(
            json.dumps(_region_json(swh.sp_region), sort_keys=True)
        )
        (setup.out_dir / f"region_hull_{j}.json").write_text(
            json.dumps(_region_json(swh.hull_region), sort_keys=True)
        )
        (setup.out_dir / f"hull_{j}.svg").write_text(
            _region_svg(swh.hull_region, swh.point_values)
        )
        # Resolution-drift verification pass at twice the grid.
        swh2 = spectrum_with_hull(setup.ctx, j, D, resolution=2 * res)
        a1, a2 = swh.hull_region.area(), swh2.hull_region.area()
        payload["groups"][str(j)] = {
            "sp_cells": swh.sp_region.count(),
            "hull_cells": swh.hull_region.count(),
            "hull_area": a1,
            "hull_area_2x": a2,
            "area_drift_rel": abs(a1 - a2) / max(a1, 1e-300),
            "extra_cells": swh.extra_cells,
        }
    inv = is_inverse_closed(setup.ctx, D)
    payload["inverse_closed"] = inv.inverse_closed
    payload["inverse_closed_per_group"] = {
        str(j): rep for j, rep in inv.per_group.items()
    }
    return payload


def cmd_berezin(setup: Setup) -> dict:
    spec = setup.config.get("berezin")
    if not spec:
        raise ConfigError("berezin command needs a 'berezin' config section")
    j = spec["group"]
    sym = setup.model.symbols.get(j)
    if sym is None:
        raise ConfigError(f"group {j} has no symbol to probe")
    w = [_complex_from_json(v) for v in spec["w"]]
    radial = None
    if spec.get("radial_expression"):
        radial = QuasiRadialSymbol.from_expression(1, spec["radial_expression"])
    probe = berezin_sequence(
        sym, j, w, spec["degrees"], radial_profile=radial, model=setup.model
    )
    rows = []
    for d, v in zip(probe.degrees, probe.values):
        rows.append([d, float(v.real), float(v.imag), abs(v - probe.boundary_value)])
    with (setup.out_dir / "berezin.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "re", "im", "abs_err"])
        writer.writerows(rows)
    return {
        "group": j,
        "w": [c2j(v) for v in probe.w],
        "degrees": list(probe.degrees),
        "values": [c2j(v) for v in probe.values],
        "norm_devs": [float(v) for v in probe.norm_devs],
        "boundary_value": c2j(probe.boundary_value),
        "abs_errors": [row[3] for row in rows],
    }


def _product_element(setup: Setup) -> FiniteSum:
    """The element D_{gamma_a} T_1 ... T_m of the dense subalgebra."""
    m = setup.cfg.m
    gamma = DiagonalCoefficient.from_callable(
        lambda kappa: setup.model.gamma(kappa), label="gamma_a"
    )
    rho = tuple(1 if setup.model.symbols.get(i) is not None else 0 for i in range(1, m + 1))
    return FiniteSum.term(m, gamma, rho)


def cmd_gelfand(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    gconf = setup.config["gelfand"]
    points = sample_ideal_space(
        setup.ctx, D, gconf["budget"],
        K_sur=setup.config["surrogate_kappa"],
        zeta_per_region=gconf["zeta_per_region"],
    )
    element = _product_element(setup)
    records = []
    invalid = 0
    for p in points:
        if not validate_gelfand_point(setup.ctx, p):
            invalid += 1
        records.append(
            {
                "theta": list(p.theta),
                "kappa_theta": list(p.kappa_theta),
                "surrogate": p.surrogate,
                "zeta": [c2j(z) for z in p.zeta],
                "value": c2j(evaluate_gelfand(element, p)),
            }
        )
    (setup.out_dir / "gelfand_points.json").write_text(
        json.dumps(records, sort_keys=True)
    )
    radius = spectral_radius_estimate(element, points)
    op = assemble_finite_sum(element, setup.model, D)
    mat_radius = max(
        (float(np.max(np.abs(np.linalg.eigvals(b)))) for b in op.blocks.values() if b.size),
        default=0.0,
    )
    return {
        "n_points": len(points),
        "n_exact": sum(1 for p in points if not p.surrogate),
        "n_surrogate": sum(1 for p in points if p.surrogate),
        "invalid_points": invalid,
        "gelfand_radius": radius,
        "matrix_spectral_radius": mat_radius,
        "element": "D_gamma_a * T_1...T_m",
        "surrogate_note": "surrogate strata evaluate gamma at the finite directive "
        f"kappa_j = {setup.config['surrogate_kappa']}; they approximate genuine limits",
    }


def cmd_semisimple(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    verdict = is_semisimple(setup.ctx, D)
    halved = is_semisimple(setup.ctx, D, tol=0.5e-10)
    return {
        "semisimple": verdict.semisimple,
        "upto": verdict.upto,
        "witness": list(verdict.witness) if verdict.witness else None,
        "structural": verdict.structural,
        "description": verdict.describe(),
        "stable_under_tolerance_halving": verdict.semisimple == halved.semisimple
        and verdict.witness == halved.witness,
    }


def _radical_gamma(spec: dict, j: int) -> DiagonalCoefficient:
    kind = (spec or {}).get("kind", "indicator_degree")
    if kind == "indicator_degree":
        return DiagonalCoefficient.indicator_degree(j, int((spec or {}).get("d", 1)))
    if kind == "geometric_decay":
        rate = float((spec or {}).get("rate", 0.5))
        if not 0 <= rate < 1:
            raise ConfigError(f"decay rate must be in [0,1), got {rate}")
        return DiagonalCoefficient.from_callable(
            lambda kappa, _r=rate, _j=j: _r ** kappa[_j - 1], label=f"{rate}^k{j}"
        )
    raise ConfigError(f"unknown radical gamma kind {kind!r}")


def cmd_radical(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    rconf = setup.config.get("radical") or {}
    j = rconf.get("group")
    if j is None:
        j = min(setup.model.symbols) if setup.model.symbols else 1
    level = rconf.get("level", 1)
    gamma = _radical_gamma(rconf.get("gamma"), j)
    verdict = is_semisimple(setup.ctx, D)
    gen = radical_generator(
        setup.ctx, j, gamma, level, D, K_sur=setup.config["surrogate_kappa"]
    )
    points = sample_ideal_space(
        setup.ctx, D, setup.config["gelfand"]["budget"],
        K_sur=setup.config["surrogate_kappa"],
    )
    psi_max = max(
        (abs(evaluate_gelfand(gen.finite_sum, p)) for p in points), default=0.0
    )
    powers = power_norm_sequence(gen.operator, 6)
    rng = np.random.default_rng(setup.config["seed"])
    residuals = []
    for _ in range(3):
        A = _random_finite_sum(rng, setup.cfg.m, D)
        parts = decompose_by_division(A, j, min(2, D), setup.ctx)
        residuals.append(parts.reconstruction_residual(setup.model, D))
    nc = norm_constants(setup.ctx, j, min(2, D))
    return {
        "semisimple": verdict.semisimple,
        "verdict": verdict.describe(),
        "witness": list(verdict.witness) if verdict.witness else None,
        "generator": {
            "group": j,
            "level": level,
            "f_levels": list(gen.f_levels),
            "fro": gen.operator.fro(),
            "power_norms": powers,
            "gelfand_sup": psi_max,
            "sampled_points": len(points),
            "f_l_note": gen.f_l_note,
        },
        "reconstruction_residuals": residuals,
        "norm_constants": list(nc.values),
        "norm_constants_flagged": list(nc.flagged),
    }


def _random_finite_sum(rng, m: int, cap: int, n_terms: int = 4) -> FiniteSum:
    total = FiniteSum.zero(m)
    kappas = enumerate_kappa_cached(m, cap)
    for _ in range(n_terms):
        rho = tuple(int(rng.integers(0, 3)) for _ in range(m))
        table = {
            kappa: complex(rng.standard_normal(), rng.standard_normal())
            for kappa in kappas
        }
        gamma = DiagonalCoefficient.from_table(table, default=0.0)
        total = total + FiniteSum.term(m, gamma, rho)
    return total


def enumerate_kappa_cached(m: int, cap: int):
    out = []
    for deg in range(cap + 1):
        out.extend(block_indices(m, deg))
    return out


# ---------------------------------------------------------------------------
# Verify
# ---------------------------------------------------------------------------


def _dirichlet_poly_moment(a, q: int) -> float:
    """int (s_1+...+s_p)^q prod s^a (1-sum s)^{a_last} via the multinomial
    expansion into Dirichlet closed forms."""
    from itertools import product as iproduct

    p = len(a) - 1
    total = 0.0
    for gamma in iproduct(range(q + 1), repeat=p):
        if sum(gamma) != q:
            continue
        coef = math.factorial(q)
        for g in gamma:
            coef //= math.factorial(g)
        shifted = tuple(ai + gi for ai, gi in zip(a[:p], gamma)) + (a[p],)
        total += coef * dirichlet_integral(shifted)
    return total


def _check(name, passed, residual, tolerance, detail="") -> dict:
    return {
        "name": name,
        "passed": bool(passed),
        "residual": float(residual),
        "tolerance": float(tolerance),
        "detail": detail,
    }


def cmd_verify(setup: Setup) -> dict:
    D = setup.config["degree_cap"]
    _precompute_blocks(setup, D)
    checks = []
    rng = np.random.default_rng(setup.config["seed"])
    order = setup.config["quadrature"]["block_order"]

    # Dirichlet closed form vs absorbed-weight simplex rule, with a
    # nontrivial polynomial factor so the check is sensitive to the order.
    worst = 0.0
    for _ in range(60):
        k = int(rng.integers(2, 5))
        a = tuple(float(v) for v in rng.choice(np.arange(0.0, 20.5, 0.5), size=k))
        q = 4
        exact = _dirichlet_poly_moment(a, q)
        approx = simplex_integrate(
            lambda s: s.sum(axis=1) ** q, k - 1, order, weight=a
        ).real
        worst = max(worst, abs(approx - exact) / exact)
    checks.append(_check("dirichlet-vs-simplex", worst < 1e-10, worst, 1e-10))

    # gamma of the trivial symbol is one.
    one = QuasiRadialSymbol.one(setup.cfg.m)
    worst = max(
        abs(gamma_quasi_radial(one, setup.cfg, kappa, setup.model.gamma_order) - 1.0)
        for kappa in enumerate_kappa(setup.cfg, min(D + 2, 8))
    )
    checks.append(_check("gamma-identity", worst < 1e-10, worst, 1e-10))

    # Identity blocks.
    worst = 0.0
    for j in range(1, setup.cfg.m + 1):
        triv = constant_symbol(j, setup.cfg.k[j - 1], 1.0)
        from .assembly import assemble_block

        for d in range(min(D, 6) + 1):
            b = assemble_block(triv, j, d, order=order)
            worst = max(worst, float(np.max(np.abs(b.mat - np.eye(b.dim)))))
    checks.append(_check("identity-blocks", worst < 1e-12, worst, 1e-12))

    # Cross-block orthogonality bound.
    bound = cross_block_entry_bound(setup.model, min(D, 4))
    checks.append(_check("cross-block-orthogonality", bound < 1e-10, bound, 1e-10))

    # Commutativity and the product identity.
    t_prod = setup.model.truncated_product(D)
    t_rad = setup.model.truncated_radial(D)
    gens = {j: setup.model.truncated_generator(j, D) for j in sorted(setup.model.symbols)}
    worst_c = max(
        (t_rad.commutator_fro(g) for g in gens.values()), default=0.0
    )
    assembled = t_rad
    for j in sorted(gens):
        assembled = assembled @ gens[j]
    worst_p = (t_prod - assembled).fro()
    checks.append(_check("commutativity", worst_c < 1e-9, worst_c, 1e-9))
    checks.append(_check("product-identity", worst_p < 1e-9, worst_p, 1e-9))

    # Quadrature-order doubling (Richardson-style difference).
    drift = 0.0
    if setup.model.quasi_radial is not None:
        for kappa in enumerate_kappa(setup.cfg, min(D, 4)):
            g1 = gamma_quasi_radial(setup.model.quasi_radial, setup.cfg, kappa, setup.model.gamma_order)
            g2 = gamma_quasi_radial(setup.model.quasi_radial, setup.cfg, kappa, 2 * setup.model.gamma_order)
            drift = max(drift, abs(g1 - g2))
    for j in sorted(setup.model.symbols):
        from .assembly import assemble_block

        sym = setup.model.symbols[j]
        for d in (min(D, 3),):
            b1 = assemble_block(sym, j, d, order=order)
            b2 = assemble_block(sym, j, d, order=2 * order)
            drift = max(drift, float(np.max(np.abs(b1.mat - b2.mat))))
    checks.append(_check("quadrature-doubling", drift < 1e-9, drift, 1e-9))

    # Tensor eigenvectors realize joint spectra.
    worst = 0.0
    basis = setup.model.basis(min(D, 4))
    for kappa in basis.kappas:
        vecs = []
        vals = []
        degenerate = False
        for j in range(1, setup.cfg.m + 1):
            mat = setup.model.block(j, kappa[j - 1]).mat
            if mat.shape[0] == 0:
                degenerate = True
                break
            w, v = np.linalg.eig(mat)
            vecs.append(v)
            vals.append(w)
        if degenerate:
            continue
        for combo in np.ndindex(*[len(v) for v in vals]):
            g = vecs[0][:, combo[0]]
            for j in range(1, setup.cfg.m):
                g = np.kron(g, vecs[j][:, combo[j]])
            g = g / np.linalg.norm(g)
            for j in range(1, setup.cfg.m + 1):
                block = setup.model.kappa_matrix(
                    kappa, tuple(1 if i == j else 0 for i in range(1, setup.cfg.m + 1))
                )
                res = np.linalg.norm(block @ g - vals[j - 1][combo[j - 1]] * g)
                worst = max(worst, float(res))
    checks.append(_check("tensor-eigenvector", worst < 1e-9, worst, 1e-9))

    # Hull: circle fills to the disk, finite sets are fixed, idempotence.
    circle = np.exp(2j * np.pi * np.arange(1000) / 1000)
    region = PlanarRegion.from_curve(circle, setup.ctx.hull_resolution)
    hull = polynomial_hull_2d(region)
    area_err = abs(hull.area() - math.pi) / math.pi
    checks.append(_check("hull-circle-area", area_err < 0.01, area_err, 0.01))
    pts = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    finite_region = PlanarRegion.from_points(pts, 256)
    fixed = np.array_equal(polynomial_hull_2d(finite_region).occ, finite_region.occ)
    idem = np.array_equal(polynomial_hull_2d(hull).occ, hull.occ)
    checks.append(_check("hull-finite-fixed", fixed, 0.0 if fixed else 1.0, 0.5))
    checks.append(_check("hull-idempotent", idem, 0.0 if idem else 1.0, 0.5))

    # Projection mask identities, plus orthogonalization of overlapping masks.
    pbasis = setup.model.basis(min(D, 4))
    from .assembly import orthogonalize_projections, projection

    ok = True
    for kappa in pbasis.kappas:
        masks = [
            projection("Q", (j, kappa[j - 1]), setup.cfg, pbasis.cap, pbasis)
            for j in range(1, setup.cfg.m + 1)
        ]
        combined = masks[0]
        for msk in masks[1:]:
            combined = combined & msk
        pk = projection("P", kappa, setup.cfg, pbasis.cap, pbasis)
        ok = ok and np.array_equal(combined.diag, pk.diag)
    for j in range(1, setup.cfg.m + 1):
        for d in range(pbasis.cap + 1):
            qd = projection("Q", (j, d), setup.cfg, pbasis.cap, pbasis)
            acc = np.zeros_like(qd.diag)
            for kappa in pbasis.kappas:
                if kappa[j - 1] == d:
                    acc |= projection("P", kappa, setup.cfg, pbasis.cap, pbasis).diag
            ok = ok and np.array_equal(acc, qd.diag)
    qtildes = [
        projection("Qtilde", (j, min(1, pbasis.cap)), setup.cfg, pbasis.cap, pbasis)
        for j in range(1, setup.cfg.m + 1)
    ]
    orth = orthogonalize_projections(qtildes)
    union_in = np.zeros_like(qtildes[0].diag)
    union_out = np.zeros_like(qtildes[0].diag)
    for q, p in zip(qtildes, orth):
        union_in |= q.diag
        union_out |= p.diag
    ok = ok and np.array_equal(union_in, union_out)
    for x in range(len(orth)):
        for y in range(x + 1, len(orth)):
            ok = ok and not np.any(orth[x].diag & orth[y].diag)
    checks.append(_check("projection-identities", ok, 0.0 if ok else 1.0, 0.5))

    # Division reconstruction on random finite sums.
    worst = 0.0
    target_j = min(setup.model.symbols) if setup.model.symbols else 1
    for _ in range(5):
        A = _random_finite_sum(rng, setup.cfg.m, min(D, 3))
        parts = decompose_by_division(A, target_j, min(2, D), setup.ctx)
        worst = max(worst, parts.reconstruction_residual(setup.model, min(D, 3)))
        if not parts.structurally_free_of_generator():
            worst = max(worst, 1.0)
    checks.append(_check("division-reconstruction", worst < 1e-9, worst, 1e-9))

    # Radical generator vanishes on sampled functionals.
    gamma = DiagonalCoefficient.indicator_degree(target_j, min(1, D))
    gen = radical_generator(
        setup.ctx, target_j, gamma, 1, D, K_sur=setup.config["surrogate_kappa"]
    )
    points = sample_ideal_space(setup.ctx, min(D, 4), 400, K_sur=setup.config["surrogate_kappa"])
    psi_max = max((abs(evaluate_gelfand(gen.finite_sum, p)) for p in points), default=0.0)
    checks.append(_check("radical-gelfand-vanishing", psi_max < 1e-8, psi_max, 1e-8,
                         detail=f"{len(points)} functionals sampled"))

    all_ok = all(c["passed"] for c in checks)
    return {"checks": checks, "all_passed": all_ok}


def cmd_info(setup: Setup | None) -> dict:
    return {
        "tool": "toeplitz-spectra",
        "version": __version__,
        "defaults": DEFAULTS,
        "schema": CONFIG_SCHEMA,
        "commands": [
            "assemble", "spectrum", "hull", "berezin", "gelfand",
            "semisimple", "radical", "verify", "info",
        ],
    }


COMMANDS = {
    "assemble": cmd_assemble,
    "spectrum": cmd_spectrum,
    "hull": cmd_hull,
    "berezin": cmd_berezin,
    "gelfand": cmd_gelfand,
    "semisimple": cmd_semisimple,
    "radical": cmd_radical,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toeplitz-spectra",
        description="Finite-truncation laboratory for Toeplitz operator algebras "
        "on weighted Bergman spaces over the unit ball.",
    )
    parser.add_argument(
        "command", choices=sorted(list(COMMANDS) + ["info"]), help="what to run"
    )
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--threads", type=int, default=0, help="worker threads (0 = all cores)")
    parser.add_argument("--no-cache", action="store_true", help="bypass the block cache")
    parser.add_argument("--out", help="output directory (overrides config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    if args.command == "info":
        print(json.dumps(cmd_info(None), sort_keys=True, indent=1))
        return 0
    if not args.config:
        _emit_error("ConfigError", "--config FILE is required for this command")
        return 1
    try:
        config = load_config(args.config)
        setup = build_setup(
            config, threads=args.threads, no_cache=args.no_cache, out=args.out
        )
    except ToeplitzError as exc:
        # anything raised while building the setup is a configuration problem
        _emit_error(type(exc).__name__, str(exc))
        return 1
    try:
        payload = COMMANDS[args.command](setup)
    except ConfigError as exc:
        _emit_error("ConfigError", str(exc))
        return 1
    except ToeplitzError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except np.linalg.LinAlgError as exc:
        _emit_error("LinAlgError", str(exc))
        return 2
    path = write_report(setup, args.command, payload, started)
    print(f"report written to {path}")
    if args.command == "verify" and not payload["all_passed"]:
        failing = [c["name"] for c in payload["checks"] if not c["passed"]]
        _emit_error("VerificationFailure", f"failing checks: {', '.join(failing)}")
        return 3
    if args.command == "verify":
        for c in payload["checks"]:
            print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: "
                  f"residual {c['residual']:.3e} (tol {c['tolerance']:.3e})")
    return 0


def _emit_error(kind: str, message: str):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
