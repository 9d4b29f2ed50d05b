"""Simplex and torus quadrature for the integrals behind every operator entry.

Two families of rules live here:

* Simplex rules over Delta_p = {u in R_+^p : sum(u) <= 1}, built by a
  Duffy-type collapse onto [0,1]^p with tensor Gauss-Jacobi factors.  A
  rule may absorb a Dirichlet-type weight prod u_l^{a_l} (1 - sum u)^{a_last}
  into its Jacobi parameters, which keeps half-integer and near-singular
  exponents (weight parameters close to -1) at full accuracy.
* Uniform product rules on the torus T^k for Fourier coefficients, exact
  for trigonometric polynomials below the grid bandwidth.

The closed-form Dirichlet integral doubles as the oracle against which the
simplex rules are cross-validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, roots_jacobi

from .errors import QuadratureError

Index = tuple[int, ...]


@lru_cache(maxsize=4096)
def jacobi_rule_01(npts: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0,1] for the weight x^a (1-x)^b.

    Exact for polynomial factors of degree <= 2*npts - 1 on top of the
    weight.  Weights are returned in true [0,1] scale, so they sum to the
    Beta integral B(a+1, b+1) as produced by the Golub-Welsch machinery.
    """
    if npts < 1:
        raise QuadratureError(f"rule needs at least one node, got {npts}")
    if a <= -1.0 or b <= -1.0:
        raise QuadratureError(f"Jacobi exponents must exceed -1, got ({a}, {b})")
    if a + b + 1.0 > 1000.0:
        raise QuadratureError(
            f"combined Jacobi exponent {a + b} too large for stable rescaling"
        )
    # scipy weight on [-1,1] is (1-x)^alpha (1+x)^beta; map x -> 2t - 1.
    x, w = roots_jacobi(npts, b, a)
    t = 0.5 * (x + 1.0)
    w01 = w / 2.0 ** (a + b + 1.0)
    return t, w01


@lru_cache(maxsize=4096)
def jacobi_probability_rule_01(npts: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0,1] and weights summing to one for the normalized measure
    x^a (1-x)^b dx / B(a+1, b+1).

    Golub-Welsch on the symmetric tridiagonal recurrence matrix, which is
    scale-free: exponents in the tens of thousands (surrogate functional
    directives) are as stable as small ones.
    """
    if npts < 1:
        raise QuadratureError(f"rule needs at least one node, got {npts}")
    if a <= -1.0 or b <= -1.0:
        raise QuadratureError(f"Jacobi exponents must exceed -1, got ({a}, {b})")
    # Recurrence for the weight (1-x)^alpha (1+x)^beta on [-1,1] with
    # alpha = b, beta = a (so that x near +1 maps to t near 1).
    alpha, beta = float(b), float(a)
    n = np.arange(npts, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (beta**2 - alpha**2) / ((2 * n + alpha + beta) * (2 * n + alpha + beta + 2))
    diag[0] = (beta - alpha) / (alpha + beta + 2.0)
    k = np.arange(1, npts, dtype=float)
    num = 4.0 * k * (k + alpha) * (k + beta) * (k + alpha + beta)
    den = (2 * k + alpha + beta) ** 2 * (2 * k + alpha + beta + 1) * (2 * k + alpha + beta - 1)
    offdiag = np.sqrt(num / den)
    vals, vecs = eigh_tridiagonal(diag, offdiag)
    weights = vecs[0, :] ** 2
    weights = weights / weights.sum()
    t = 0.5 * (vals + 1.0)
    return np.clip(t, 0.0, 1.0), weights


def dirichlet_integral(a) -> float:
    """Closed form of the Dirichlet integral over a simplex.

    For a = (a_1,...,a_k), all > -1:

        int_{Delta_{k-1}} prod_{l<k} s_l^{a_l} (1 - sum s)^{a_k} ds
            = prod_l Gamma(a_l + 1) / Gamma(k + sum a_l),

    computed in the log domain.
    """
    a = tuple(float(v) for v in a)
    if len(a) < 1:
        raise QuadratureError("need at least one exponent")
    if any(v <= -1.0 for v in a):
        raise QuadratureError(f"all exponents must exceed -1, got {a}")
    k = len(a)
    return float(math.exp(sum(gammaln(v + 1.0) for v in a) - gammaln(k + sum(a))))


@dataclass(frozen=True, eq=False)
class SimplexRule:
    """Tensor Gauss-Jacobi rule over the simplex Delta_p after Duffy collapse.

    When ``weight_exponents`` is set, the rule integrates
    f |-> int f(s) prod s^a (1 - sum s)^{a_last} ds with the weight absorbed
    into the node weights; otherwise the plain Lebesgue measure is used.
    """

    dim: int
    nodes: np.ndarray  # (N, dim)
    weights: np.ndarray  # (N,)
    degree: int
    weight_exponents: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dim > 0:
            # Positive up to underflow: far-out nodes of a sharply
            # concentrated weight may round to exactly zero.
            if np.any(self.weights < 0) or not np.sum(self.weights) > 0:
                raise QuadratureError("rule weights must be positive")
            sums = self.nodes.sum(axis=1)
            if np.any(self.nodes < -1e-14) or np.any(sums > 1 + 1e-12):
                raise QuadratureError("rule nodes left the closed simplex")

    @property
    def npoints(self) -> int:
        return len(self.weights)

    @property
    def nodes_closed(self) -> np.ndarray:
        """Nodes extended by the slack coordinate 1 - sum(s), shape (N, dim+1)."""
        slack = 1.0 - self.nodes.sum(axis=1, keepdims=True)
        return np.hstack([self.nodes, np.maximum(slack, 0.0)])

    @classmethod
    def plain(cls, p: int, order: int) -> "SimplexRule":
        return cls._build(p, order, None)

    @classmethod
    def weighted(cls, p: int, order: int, exponents) -> "SimplexRule":
        exponents = tuple(float(v) for v in exponents)
        if len(exponents) != p + 1:
            raise QuadratureError(
                f"need {p + 1} weight exponents for Delta_{p}, got {len(exponents)}"
            )
        if any(v <= -1.0 for v in exponents):
            raise QuadratureError(f"weight exponents must exceed -1: {exponents}")
        return cls._build(p, order, exponents)

    @classmethod
    def _build(cls, p: int, order: int, exponents) -> "SimplexRule":
        if p < 0:
            raise QuadratureError(f"simplex dimension must be >= 0, got {p}")
        if order < 1:
            raise QuadratureError(f"order must be >= 1, got {order}")
        if p == 0:
            return cls(
                dim=0,
                nodes=np.zeros((1, 0)),
                weights=np.ones(1),
                degree=10**9,
                weight_exponents=tuple(exponents) if exponents else None,
            )
        a = exponents if exponents is not None else (0.0,) * (p + 1)
        # Duffy collapse u_l = x_l prod_{i<l}(1 - x_i): level l picks up the
        # Jacobian power (p - l) plus every downstream exponent, slack included.
        axes = []
        for lvl in range(1, p + 1):
            xa = a[lvl - 1]
            xb = (p - lvl) + sum(a[lvl:])
            axes.append(jacobi_rule_01(order, xa, xb))
        u, w = _duffy_assemble(axes, p)
        return cls(
            dim=p,
            nodes=u,
            weights=w,
            degree=2 * order - 1,
            weight_exponents=tuple(a) if exponents is not None else None,
        )

    def integrate(self, f: Callable) -> complex:
        vals = _evaluate_on_nodes(f, self.nodes)
        if not np.all(np.isfinite(vals.real) & np.isfinite(vals.imag)):
            bad = int(np.sum(~np.isfinite(vals)))
            raise QuadratureError(f"integrand returned {bad} non-finite values")
        return complex(np.sum(self.weights * vals))


def _duffy_assemble(axes, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor the per-level 1-d rules and map back to simplex coordinates."""
    grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    wgrids = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    x = np.stack([g.ravel() for g in grids], axis=1)  # (N, p)
    w = np.ones(x.shape[0])
    for wg in wgrids:
        w = w * wg.ravel()
    u = np.empty_like(x)
    shrink = np.ones(x.shape[0])
    for lvl in range(p):
        u[:, lvl] = x[:, lvl] * shrink
        shrink = shrink * (1.0 - x[:, lvl])
    return u, w


def _evaluate_on_nodes(f: Callable, nodes: np.ndarray) -> np.ndarray:
    """Evaluate f on an (N, p) node array, tolerating scalar-only callables."""
    try:
        vals = np.asarray(f(nodes), dtype=complex)
        if vals.shape == (nodes.shape[0],):
            return vals
    except Exception:
        pass
    return np.array([complex(f(row)) for row in nodes])


def simplex_integrate(f: Callable, p: int, order: int, *, weight=None) -> complex:
    """Integrate f over Delta_p, optionally against an absorbed Dirichlet weight.

    With ``weight`` = (a_1,...,a_p, a_last) the returned value is
    int f(s) prod s^a (1 - sum s)^{a_last} ds and f only needs to supply the
    smooth remainder; without it the plain Lebesgue integral of f.
    """
    if weight is None:
        rule = SimplexRule.plain(p, order)
    else:
        rule = SimplexRule.weighted(p, order, weight)
    return rule.integrate(f)


@lru_cache(maxsize=4096)
def _dirichlet_rule_cached(exponents: tuple, order: int) -> SimplexRule:
    p = len(exponents) - 1
    if any(v <= -1.0 for v in exponents):
        raise QuadratureError(f"Dirichlet exponents must exceed -1: {exponents}")
    if p == 0:
        return SimplexRule(
            dim=0, nodes=np.zeros((1, 0)), weights=np.ones(1),
            degree=10**9, weight_exponents=exponents,
        )
    axes = []
    for lvl in range(1, p + 1):
        xa = exponents[lvl - 1]
        xb = (p - lvl) + sum(exponents[lvl:])
        axes.append(jacobi_probability_rule_01(order, xa, xb))
    u, w = _duffy_assemble(axes, p)
    return SimplexRule(
        dim=p, nodes=u, weights=w, degree=2 * order - 1, weight_exponents=exponents
    )


def dirichlet_probability_rule(exponents, order: int) -> SimplexRule:
    """Rule for the normalized Dirichlet measure with the given exponents.

    Weights sum to one (per-level Golub-Welsch normalization), so
    integrating a bounded function returns its expectation under
    Dirichlet(a + 1) without any Gamma prefactors; gamma-type eigenvalue
    integrals stay overflow-free at arbitrary degree.
    """
    return _dirichlet_rule_cached(tuple(float(v) for v in exponents), order)


def torus_grid(dim: int, grid: int) -> np.ndarray:
    """All points of the uniform product grid on T^dim, shape (grid^dim, dim)."""
    axis = np.exp(2j * np.pi * np.arange(grid) / grid)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def torus_fourier_coefficient(c: Callable, p, s, grid: int = 64) -> complex:
    """Fourier coefficient c_hat(s, p) = int_{T^k} c(s,t) t^{-p} dmu.

    Uses the uniform product rule; exact when c(s, .) is a trigonometric
    polynomial of per-axis bandwidth below grid/2.  Requires
    grid >= 2*max|p_l| + 1.
    """
    p = tuple(int(v) for v in p)
    k = len(p)
    if grid < 2 * max((abs(v) for v in p), default=0) + 1:
        raise QuadratureError(
            f"grid {grid} too small for mode {p}; need >= {2 * max(abs(v) for v in p) + 1}"
        )
    tpts = torus_grid(k, grid)
    phase = np.ones(tpts.shape[0], dtype=complex)
    for axis, power in enumerate(p):
        if power:
            phase = phase * tpts[:, axis] ** (-power)
    s_arr = np.asarray(s, dtype=float)
    try:
        vals = np.asarray(c(np.broadcast_to(s_arr, (tpts.shape[0],) + s_arr.shape), tpts))
        if vals.shape != (tpts.shape[0],):
            raise ValueError
    except Exception:
        vals = np.array([complex(c(s_arr, t)) for t in tpts])
    if not np.all(np.isfinite(vals.real) & np.isfinite(vals.imag)):
        raise QuadratureError("symbol returned non-finite torus samples")
    return complex(np.mean(vals * phase))


def fourier_on_points(
    fn: Callable, s_points: np.ndarray, p, grid: int = 64
) -> np.ndarray:
    """c_hat(s_i, p) for every row s_i of an (N, k) array, vectorized over the grid."""
    p = tuple(int(v) for v in p)
    k = len(p)
    if grid < 2 * max((abs(v) for v in p), default=0) + 1:
        raise QuadratureError(f"grid {grid} too small for mode {p}")
    tpts = torus_grid(k, grid)  # (M, k)
    phase = np.ones(tpts.shape[0], dtype=complex)
    for axis, power in enumerate(p):
        if power:
            phase = phase * tpts[:, axis] ** (-power)
    s_b = s_points[:, None, :]  # (N, 1, k)
    t_b = tpts[None, :, :]  # (1, M, k)
    vals = np.asarray(fn(s_b, t_b), dtype=complex)
    if vals.shape != (s_points.shape[0], tpts.shape[0]):
        vals = np.array(
            [[complex(fn(srow, trow)) for trow in tpts] for srow in s_points]
        )
    if not np.all(np.isfinite(vals.real) & np.isfinite(vals.imag)):
        raise QuadratureError("symbol returned non-finite torus samples")
    return (vals * phase[None, :]).mean(axis=1)


@dataclass
class FourierTable:
    """Per-group table of Fourier mode handles c_hat(s, p).

    Declared entries must satisfy |p| = 0; anything else contradicts the
    torus invariance of the symbol class and is rejected up front.
    """

    group: int
    dim: int
    entries: dict[Index, Callable] = field(default_factory=dict)

    def declare(self, p, handle: Callable):
        p = tuple(int(v) for v in p)
        if sum(p) != 0:
            raise QuadratureError(
                f"declared Fourier mode {p} has |p| != 0; invariant symbols cannot carry it"
            )
        self.entries[p] = handle

    def __contains__(self, p) -> bool:
        return tuple(p) in self.entries

    def __call__(self, s: np.ndarray, p) -> np.ndarray:
        p = tuple(int(v) for v in p)
        handle = self.entries.get(p)
        if handle is None:
            return np.zeros(s.shape[0], dtype=complex)
        return np.asarray(handle(s), dtype=complex)
