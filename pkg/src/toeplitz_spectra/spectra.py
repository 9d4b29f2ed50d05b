"""Spectra of the group blocks, planar polynomial hulls, Berezin probing,
and the spectral-invariance decision.

The point spectrum of a group factor is the union over degrees of its
block spectra; for boundary-continuous symbols the essential spectrum is
the boundary image of the symbol, sampled on the sphere.  In the plane the
polynomially convex hull of a compact set is the set together with the
bounded components of its complement, which a flood fill from the grid
boundary computes exactly at fixed resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .assembly import AlgebraModel, BlockMatrix, assemble_block
from .errors import SpectraError
from .lattice import block_indices
from .quad import jacobi_probability_rule_01
from .symbols import PseudoHomogeneousSymbol, QuasiRadialSymbol

from scipy.special import gammaln

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


# ---------------------------------------------------------------------------
# Block eigenvalues
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenData:
    """Eigenvalues of one block with clustering already applied."""

    group: int
    d: int
    values: np.ndarray  # all eigenvalues, sorted by (re, im)
    distinct: np.ndarray  # cluster representatives, same order
    multiplicities: np.ndarray  # int, sums to block dimension
    cluster_tol: float
    warnings: tuple[str, ...] = ()

    @property
    def n_distinct(self) -> int:
        return len(self.distinct)


def _sorted_complex(vals: np.ndarray) -> np.ndarray:
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def block_eigenvalues(
    block: BlockMatrix | np.ndarray, tol: float = 1e-8, *, group: int = 0, d: int = -1
) -> EigenData:
    """Eigenvalues of a block with deterministic order and clustering.

    Exactly triangular blocks (which includes every single-mode
    quasi-homogeneous block and every profile-only block) read their
    spectrum off the diagonal; everything else goes through the dense
    nonsymmetric solver.
    """
    if isinstance(block, BlockMatrix):
        mat = block.mat
        group = block.group
        d = block.d
    else:
        mat = np.asarray(block, dtype=complex)
    if mat.size and not np.all(np.isfinite(mat.real) & np.isfinite(mat.imag)):
        raise SpectraError("block has non-finite entries")
    nrm = float(np.linalg.norm(mat, 2)) if mat.size else 0.0
    if mat.shape[0] == 0:
        vals = np.zeros(0, dtype=complex)
    elif not np.any(np.tril(mat, -1)) or not np.any(np.triu(mat, 1)):
        vals = np.diag(mat).astype(complex)
    else:
        try:
            vals = np.linalg.eigvals(mat)
        except np.linalg.LinAlgError as exc:
            raise SpectraError(f"eigen solver failed on block ({group},{d}): {exc}")
    vals = _sorted_complex(vals)

    ctol = tol * (1.0 + nrm)
    distinct: list[complex] = []
    counts: list[int] = []
    sums: list[complex] = []
    for v in vals:
        if distinct and abs(v - sums[-1] / counts[-1]) <= ctol:
            sums[-1] += v
            counts[-1] += 1
        else:
            distinct.append(v)
            sums.append(v)
            counts.append(1)
    reps = np.array([s / c for s, c in zip(sums, counts)], dtype=complex)
    warnings = []
    for i in range(1, len(reps)):
        gap = abs(reps[i] - reps[i - 1])
        if gap < 10.0 * ctol:
            warnings.append(
                f"clusters {i - 1} and {i} of block ({group},{d}) are {gap:.3e} apart"
            )
    return EigenData(
        group=group,
        d=d,
        values=vals,
        distinct=reps,
        multiplicities=np.array(counts, dtype=int),
        cluster_tol=ctol,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True, eq=False)
class PointSpectrum:
    """Union over degrees of block spectra, per-degree provenance retained."""

    group: int
    by_degree: dict[int, EigenData]

    def all_values(self) -> list[tuple[int, complex]]:
        out = []
        for d in sorted(self.by_degree):
            for v in self.by_degree[d].distinct:
                out.append((d, complex(v)))
        return out

    def flat(self) -> np.ndarray:
        vals = [v for _, v in self.all_values()]
        return np.array(vals, dtype=complex) if vals else np.zeros(0, dtype=complex)


def point_spectrum(model: AlgebraModel, j: int, Dmax: int, tol: float = 1e-8) -> PointSpectrum:
    by_degree = {
        d: block_eigenvalues(model.block(j, d), tol) for d in range(Dmax + 1)
    }
    return PointSpectrum(group=j, by_degree=by_degree)


# ---------------------------------------------------------------------------
# Planar regions and hulls
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PlanarRegion:
    """Boolean occupancy grid over a padded square bounding box."""

    x0: float
    y0: float
    cell: float
    occ: np.ndarray  # bool (res, res), row = y index
    provenance: str
    samples: np.ndarray | None = None

    @property
    def resolution(self) -> int:
        return self.occ.shape[0]

    @staticmethod
    def _frame(points: np.ndarray, resolution: int, bbox=None):
        if bbox is not None:
            x0, x1, y0, y1 = bbox
        else:
            xs, ys = points.real, points.imag
            cx, cy = (xs.min() + xs.max()) / 2.0, (ys.min() + ys.max()) / 2.0
            half = max(xs.max() - xs.min(), ys.max() - ys.min()) / 2.0
            half = max(half, 1e-6)
            half *= 1.1
            x0, x1, y0, y1 = cx - half, cx + half, cy - half, cy + half
        cell = max(x1 - x0, y1 - y0) / resolution
        return x0, y0, cell

    def _indices(self, points: np.ndarray):
        ix = np.clip(((points.real - self.x0) / self.cell).astype(int), 0, self.resolution - 1)
        iy = np.clip(((points.imag - self.y0) / self.cell).astype(int), 0, self.resolution - 1)
        return iy, ix

    @classmethod
    def from_points(
        cls,
        points,
        resolution: int = 512,
        *,
        bbox=None,
        dilate: int = 0,
        provenance: str = "point cloud",
    ) -> "PlanarRegion":
        pts = np.asarray(points, dtype=complex).ravel()
        if pts.size == 0:
            raise SpectraError("cannot rasterize an empty point set")
        x0, y0, cell = cls._frame(pts, resolution, bbox)
        occ = np.zeros((resolution, resolution), dtype=bool)
        region = cls(x0=x0, y0=y0, cell=cell, occ=occ, provenance=provenance, samples=pts)
        iy, ix = region._indices(pts)
        occ[iy, ix] = True
        if dilate > 0:
            occ = ndimage.binary_dilation(occ, iterations=dilate)
            region.occ = occ
        return region

    @classmethod
    def empty(cls, bbox, resolution: int = 512, provenance: str = "empty") -> "PlanarRegion":
        x0, x1, y0, y1 = bbox
        cell = max(x1 - x0, y1 - y0) / resolution
        return cls(
            x0=x0, y0=y0, cell=cell,
            occ=np.zeros((resolution, resolution), dtype=bool),
            provenance=provenance,
        )

    def draw_polyline(self, points, closed: bool = False):
        """Mark every cell touched by the segments between consecutive samples."""
        pts = np.asarray(points, dtype=complex).ravel()
        if pts.size == 0:
            return
        if pts.size == 1:
            iy, ix = self._indices(pts)
            self.occ[iy, ix] = True
            return
        seq = np.concatenate([pts, pts[:1]]) if closed else pts
        for a, b in zip(seq[:-1], seq[1:]):
            steps = max(2, int(abs(b - a) / self.cell * 2) + 1)
            line = a + (b - a) * np.linspace(0.0, 1.0, steps)
            iy, ix = self._indices(line)
            self.occ[iy, ix] = True

    @classmethod
    def from_curve(
        cls,
        points,
        resolution: int = 512,
        *,
        bbox=None,
        closed: bool = True,
        provenance: str = "curve samples",
    ) -> "PlanarRegion":
        """Rasterize a sampled curve, connecting consecutive samples."""
        pts = np.asarray(points, dtype=complex).ravel()
        if pts.size < 2:
            return cls.from_points(pts, resolution, bbox=bbox, provenance=provenance)
        x0, y0, cell = cls._frame(pts, resolution, bbox)
        occ = np.zeros((resolution, resolution), dtype=bool)
        region = cls(x0=x0, y0=y0, cell=cell, occ=occ, provenance=provenance, samples=pts)
        region.draw_polyline(pts, closed=closed)
        return region

    def area(self) -> float:
        return float(self.occ.sum()) * self.cell * self.cell

    def count(self) -> int:
        return int(self.occ.sum())

    def same_grid(self, other: "PlanarRegion") -> bool:
        return (
            self.occ.shape == other.occ.shape
            and math.isclose(self.x0, other.x0, abs_tol=1e-12)
            and math.isclose(self.y0, other.y0, abs_tol=1e-12)
            and math.isclose(self.cell, other.cell, rel_tol=1e-12)
        )

    def union(self, other: "PlanarRegion") -> "PlanarRegion":
        if not self.same_grid(other):
            raise SpectraError("regions live on different grids")
        return PlanarRegion(
            self.x0, self.y0, self.cell, self.occ | other.occ,
            f"({self.provenance})|({other.provenance})", self.samples,
        )

    def minus_count(self, other: "PlanarRegion") -> int:
        if not self.same_grid(other):
            raise SpectraError("regions live on different grids")
        return int((self.occ & ~other.occ).sum())

    def contains_point(self, z: complex, slack_cells: int = 0) -> bool:
        occ = self.occ
        if slack_cells > 0:
            occ = ndimage.binary_dilation(self.occ, iterations=slack_cells)
        iy, ix = self._indices(np.array([z], dtype=complex))
        return bool(occ[iy[0], ix[0]])

    def occupied_cell_centers(self) -> np.ndarray:
        iy, ix = np.nonzero(self.occ)
        xs = self.x0 + (ix + 0.5) * self.cell
        ys = self.y0 + (iy + 0.5) * self.cell
        return xs + 1j * ys

    def run_length_rows(self) -> list[list[tuple[int, int]]]:
        """Per-row [start, length] runs of occupied cells (for JSON export)."""
        rows = []
        for row in self.occ:
            runs = []
            start = None
            for i, v in enumerate(row):
                if v and start is None:
                    start = i
                elif not v and start is not None:
                    runs.append((start, i - start))
                    start = None
            if start is not None:
                runs.append((start, len(row) - start))
            rows.append(runs)
        return rows


def polynomial_hull_2d(region: PlanarRegion) -> PlanarRegion:
    """Fill the bounded components of the complement (flood from the border).

    Idempotent at fixed grid and monotone: the input is contained in the
    output, finite point sets come back unchanged.
    """
    occ = region.occ
    padded = np.pad(occ, 1, constant_values=False)
    labels, nlab = ndimage.label(~padded, structure=_FOUR_CONNECTED)
    border_labels = set(labels[0, :]) | set(labels[-1, :]) | set(labels[:, 0]) | set(labels[:, -1])
    border_labels.discard(0)
    unbounded = np.isin(labels, sorted(border_labels))
    hull_occ = ~unbounded[1:-1, 1:-1]
    return PlanarRegion(
        x0=region.x0,
        y0=region.y0,
        cell=region.cell,
        occ=hull_occ | occ,
        provenance=f"hull({region.provenance})",
        samples=region.samples,
    )


# ---------------------------------------------------------------------------
# Essential spectrum from boundary sampling
# ---------------------------------------------------------------------------


def _boundary_grid_counts(k: int, samples: int) -> tuple[int, int]:
    """Sphere-direction and torus-direction sample counts for one group."""
    if k == 2:
        return max(64, samples // 16), 64
    per_axis = max(8, int(round(samples ** (1.0 / (2 * (k - 1))))))
    return per_axis, per_axis


def boundary_image_values(c: PseudoHomogeneousSymbol, samples: int = 4096) -> np.ndarray:
    """Symbol values over a quasi-uniform sample of the unit sphere.

    For k = 2 the parameter grid is (sigma, tau) with the last torus
    coordinate fixed to 1 by the diagonal invariance; the returned array has
    shape (n_sigma, n_tau).  Higher group sizes return a flat sample.
    """
    k = c.dim
    if k == 1:
        return np.asarray(c(np.ones((1, 1)), np.ones((1, 1), dtype=complex))).reshape(1, 1)
    n_sigma, n_tau = _boundary_grid_counts(k, samples)
    if k == 2:
        sigma = np.linspace(0.0, 1.0, n_sigma)
        s_full = np.sqrt(np.stack([sigma, 1.0 - sigma], axis=1))
        tau = np.exp(2j * np.pi * np.arange(n_tau) / n_tau)
        t_full = np.stack([tau, np.ones(n_tau, dtype=complex)], axis=1)
        s_b = np.repeat(s_full, n_tau, axis=0)
        t_b = np.tile(t_full, (n_sigma, 1))
        return np.asarray(c(s_b, t_b)).reshape(n_sigma, n_tau)
    grids = np.meshgrid(*([np.linspace(0.0, 1.0, n_sigma)] * (k - 1)), indexing="ij")
    sigma = np.stack([g.ravel() for g in grids], axis=1)
    sigma = sigma[sigma.sum(axis=1) <= 1.0 + 1e-12]
    s_full = np.sqrt(np.hstack([sigma, np.maximum(1.0 - sigma.sum(1, keepdims=True), 0.0)]))
    angles = np.meshgrid(
        *([np.linspace(0.0, 2.0 * np.pi, n_tau, endpoint=False)] * (k - 1)), indexing="ij"
    )
    tau = np.exp(1j * np.stack([g.ravel() for g in angles], axis=1))
    t_full = np.hstack([tau, np.ones((tau.shape[0], 1), dtype=complex)])
    s_b = np.repeat(s_full, t_full.shape[0], axis=0)
    t_b = np.tile(t_full, (s_full.shape[0], 1))
    return np.asarray(c(s_b, t_b)).reshape(s_full.shape[0], t_full.shape[0])


def boundary_image_samples(c: PseudoHomogeneousSymbol, samples: int = 4096) -> np.ndarray:
    return boundary_image_values(c, samples).ravel()


def essential_spectrum_estimate(
    c: PseudoHomogeneousSymbol,
    j: int | None = None,
    samples: int = 4096,
    *,
    resolution: int = 512,
    bbox=None,
) -> PlanarRegion:
    """Rasterized boundary image c(sphere); requires the continuity flag.

    The image is drawn as polylines along each parameter direction of the
    sphere sample, which is exactly what the declared continuity licenses;
    isolated-dot rasterization would leak through the flood fill.
    """
    if not c.boundary_continuous:
        raise SpectraError(
            f"symbol {c.label!r} does not declare a continuous boundary extension"
        )
    grid = boundary_image_values(c, samples)
    flat = grid.ravel()
    if bbox is None:
        x0, y0, cell = PlanarRegion._frame(flat, resolution)
        bbox = (x0, x0 + resolution * cell, y0, y0 + resolution * cell)
    region = PlanarRegion.empty(bbox, resolution, provenance="boundary image")
    region.samples = flat
    for row in grid:
        region.draw_polyline(row, closed=row.shape[0] > 2)
    for col in grid.T:
        region.draw_polyline(col)
    region.occ = ndimage.binary_dilation(region.occ)
    return region


# ---------------------------------------------------------------------------
# Berezin probing
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelProbe:
    """Berezin values against degree-d normalized reproducing kernels."""

    group: int
    w: tuple[complex, ...]
    degrees: tuple[int, ...]
    values: tuple[complex, ...]
    norm_devs: tuple[float, ...]
    boundary_value: complex


def _kernel_coefficients(w: np.ndarray, k: int, d: int) -> np.ndarray:
    """Coordinates of the normalized kernel k_d(., w) in the block basis.

    From the multinomial expansion, |coef_alpha|^2 is the multinomial
    probability d!/alpha! prod |w_l|^{2 alpha_l} / |w|^{2d}; computed in log
    scale so d in the hundreds is routine.
    """
    basis = block_indices(k, d)
    absw = np.abs(w)
    logw = np.where(absw > 0, np.log(np.maximum(absw, 1e-300)), -np.inf)
    phases = np.where(absw > 0, np.conj(w) / np.maximum(absw, 1e-300), 1.0)
    log_norm_k = 0.5 * (
        gammaln(k + d + 1) - gammaln(k + 1) - gammaln(d + 1)
    ) + d * math.log(float(np.linalg.norm(w)))
    coefs = np.zeros(len(basis), dtype=complex)
    for i, alpha in enumerate(basis):
        if any(a > 0 and absw[l] == 0.0 for l, a in enumerate(alpha)):
            continue
        logmag = 0.5 * (
            gammaln(k + d + 1) - gammaln(k + 1) - sum(gammaln(a + 1) for a in alpha)
        )
        logmag += sum(a * logw[l] for l, a in enumerate(alpha) if a > 0)
        phase = np.prod([phases[l] ** a for l, a in enumerate(alpha)])
        coefs[i] = phase * math.exp(logmag - log_norm_k)
    return coefs


def _radial_moment(profile, k: int, d: int, order: int = 64) -> complex:
    """(d+k) int_0^1 R^{d+k-1} f(sqrt(R)) dR for a separable radial factor."""
    if profile is None:
        return 1.0
    nodes, wts = jacobi_probability_rule_01(order, float(d + k - 1), 0.0)
    r = np.sqrt(nodes)
    if isinstance(profile, QuasiRadialSymbol):
        vals = profile(r[:, None])
    else:
        vals = np.asarray(profile(r), dtype=complex)
    return complex(np.sum(wts * vals))


def berezin_sequence(
    c: PseudoHomogeneousSymbol,
    j: int,
    w,
    d_list,
    *,
    radial_profile=None,
    order: int = 48,
    model: AlgebraModel | None = None,
) -> KernelProbe:
    """<T_c k_d(., w), k_d(., w)> for each degree in d_list.

    The probe symbol is f(r) * c(s, t) with an optional separable radial
    factor; its compression to the degree-d block is the radial moment times
    the block matrix, and the sequence converges to the boundary value of
    the symbol along the ray of w.
    """
    w = np.asarray(w, dtype=complex).ravel()
    k = c.dim
    if w.shape != (k,):
        raise SpectraError(f"base point must have {k} coordinates, got {w.shape}")
    absw = float(np.linalg.norm(w))
    if absw == 0.0:
        raise SpectraError("base point w = 0 is degenerate for the Berezin probe")
    if absw >= 1.0:
        raise SpectraError(f"base point must lie inside the ball, |w| = {absw:.4f}")

    values, norm_devs, degrees = [], [], []
    for d in d_list:
        block = model.block(j, d) if model is not None else assemble_block(c, j, d, order=order)
        coefs = _kernel_coefficients(w, k, d)
        norm_devs.append(abs(float(np.vdot(coefs, coefs).real) - 1.0))
        moment = _radial_moment(radial_profile, k, d)
        values.append(complex(moment * np.vdot(coefs, block.mat @ coefs)))
        degrees.append(int(d))

    s_dir = np.abs(w) / absw
    t_dir = np.where(np.abs(w) > 0, w / np.maximum(np.abs(w), 1e-300), 1.0)
    boundary = complex(np.asarray(c(s_dir[None, :], t_dir[None, :])).ravel()[0])
    if radial_profile is not None:
        if isinstance(radial_profile, QuasiRadialSymbol):
            boundary *= complex(radial_profile(np.array([[1.0]]))[0])
        else:
            boundary *= complex(np.asarray(radial_profile(np.array([1.0]))).ravel()[0])
    return KernelProbe(
        group=j,
        w=tuple(complex(v) for v in w),
        degrees=tuple(degrees),
        values=tuple(values),
        norm_devs=tuple(norm_devs),
        boundary_value=boundary,
    )


# ---------------------------------------------------------------------------
# Spectrum with hull, accumulation, inverse-closedness
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SpectralContext:
    """Memoized eigen and region data on top of a configured model."""

    model: AlgebraModel
    eig_tol: float = 1e-8
    hull_resolution: int = 512
    ess_samples: int = 4096

    def __post_init__(self):
        self._eigen: dict[tuple[int, int], EigenData] = {}
        self._ess: dict[tuple, PlanarRegion] = {}
        self._hulled: dict[tuple, PlanarRegion] = {}

    @property
    def cfg(self):
        return self.model.cfg

    def eigen(self, j: int, d: int) -> EigenData:
        key = (j, d)
        if key not in self._eigen:
            self._eigen[key] = block_eigenvalues(self.model.block(j, d), self.eig_tol)
        return self._eigen[key]

    def distinct(self, j: int, d: int) -> np.ndarray:
        return self.eigen(j, d).distinct

    def point_spectrum(self, j: int, Dmax: int) -> PointSpectrum:
        return PointSpectrum(
            group=j, by_degree={d: self.eigen(j, d) for d in range(Dmax + 1)}
        )

    def boundary_samples(self, j: int) -> np.ndarray:
        sym = self.model.symbols.get(j)
        if sym is None:
            return np.array([1.0 + 0.0j])
        if not sym.boundary_continuous:
            raise SpectraError(
                f"symbol {sym.label!r} does not declare a continuous boundary extension"
            )
        return boundary_image_samples(sym, self.ess_samples)

    def ess_region(self, j: int, *, bbox=None, resolution: int | None = None) -> PlanarRegion:
        res = resolution or self.hull_resolution
        key = (j, res)
        if bbox is None and key in self._ess:
            return self._ess[key]
        sym = self.model.symbols.get(j)
        if sym is None:
            region = PlanarRegion.from_points(
                np.array([1.0 + 0.0j]), res, bbox=bbox, dilate=1,
                provenance="boundary image",
            )
        else:
            region = essential_spectrum_estimate(
                sym, j, self.ess_samples, resolution=res, bbox=bbox
            )
        if bbox is None:
            self._ess[key] = region
        return region

    def hulled_ess_region(self, j: int, *, resolution: int | None = None) -> PlanarRegion:
        res = resolution or self.hull_resolution
        key = (j, res)
        if key not in self._hulled:
            self._hulled[key] = polynomial_hull_2d(self.ess_region(j, resolution=res))
        return self._hulled[key]


@dataclass(frozen=True, eq=False)
class SpectrumWithHull:
    group: int
    sp_region: PlanarRegion
    hull_region: PlanarRegion
    point_values: tuple[complex, ...]
    extra_cells: int  # hull minus spectrum, in grid cells


def spectrum_with_hull(
    ctx: SpectralContext, j: int, Dmax: int, *, resolution: int | None = None
) -> SpectrumWithHull:
    """sp = point spectrum union ess-sp; hull = point spectrum union hull(ess-sp)."""
    res = resolution or ctx.hull_resolution
    pts = ctx.point_spectrum(j, Dmax).flat()
    ess_vals = ctx.boundary_samples(j)
    allvals = np.concatenate([pts, ess_vals]) if pts.size else ess_vals
    x0, y0, cell = PlanarRegion._frame(allvals, res)
    bbox = (x0, x0 + res * cell, y0, y0 + res * cell)
    ess_region = ctx.ess_region(j, bbox=bbox, resolution=res)
    if pts.size:
        pt_region = PlanarRegion.from_points(pts, res, bbox=bbox, provenance="point spectrum")
        sp_region = ess_region.union(pt_region)
        hull_region = polynomial_hull_2d(ess_region).union(pt_region)
    else:
        sp_region = ess_region
        hull_region = polynomial_hull_2d(ess_region)
    return SpectrumWithHull(
        group=j,
        sp_region=sp_region,
        hull_region=hull_region,
        point_values=tuple(complex(v) for v in pts),
        extra_cells=hull_region.minus_count(sp_region),
    )


@dataclass(frozen=True)
class AccumulationReport:
    group: int
    candidates: tuple[complex, ...]
    violations: tuple[complex, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def accumulation_check(
    ctx: SpectralContext, j: int, Dmax: int, tol: float = 0.05, *, min_degrees: int = 5
) -> AccumulationReport:
    """Detected accumulation points of the point spectrum must sit inside
    (a tol-neighborhood of) the essential-spectrum estimate.

    A point is an accumulation candidate when eigenvalues from at least
    ``min_degrees`` distinct degrees fall within ten cluster tolerances.
    """
    pairs: list[tuple[int, complex]] = []
    radius = 0.0
    for d in range(Dmax + 1):
        e = ctx.eigen(j, d)
        radius = max(radius, 10.0 * e.cluster_tol)
        pairs.extend((d, complex(v)) for v in e.distinct)
    radius = max(radius, 1e-7)
    candidates: list[complex] = []
    for _, v in pairs:
        degrees_near = {d for d, u in pairs if abs(u - v) <= radius}
        if len(degrees_near) >= min_degrees:
            if not any(abs(v - c) <= radius for c in candidates):
                candidates.append(v)
    ess = ctx.ess_region(j)
    slack = max(1, int(math.ceil(tol / ess.cell)))
    violations = tuple(z for z in candidates if not ess.contains_point(z, slack_cells=slack))
    return AccumulationReport(group=j, candidates=tuple(candidates), violations=violations)


@dataclass(frozen=True)
class InverseClosedReport:
    inverse_closed: bool
    per_group: dict[int, dict]


def is_inverse_closed(
    ctx: SpectralContext, Dmax: int, *, tol_cells: int = 100
) -> InverseClosedReport:
    """Inverse-closedness holds iff every generator spectrum is polynomially
    convex: the grid difference hull(sp) minus sp stays below tolerance."""
    per_group = {}
    verdict = True
    for j in range(1, ctx.cfg.m + 1):
        swh = spectrum_with_hull(ctx, j, Dmax)
        extra = swh.extra_cells
        cell_area = swh.hull_region.cell ** 2
        ok = extra <= tol_cells
        verdict = verdict and ok
        per_group[j] = {
            "polynomially_convex": ok,
            "extra_cells": extra,
            "extra_area": extra * cell_area,
            "spectrum_cells": swh.sp_region.count(),
        }
    return InverseClosedReport(inverse_closed=verdict, per_group=per_group)
