"""Partitioned multi-index bookkeeping for truncated Bergman-space bases.

The ambient dimension n is split into m groups of sizes k = (k_1,...,k_m).
A multi-index alpha in Z_+^n then carries a partition view
alpha_(1),...,alpha_(m) and a group-degree tuple
kappa = (|alpha_(1)|,...,|alpha_(m)|).  The finite-dimensional space
H_kappa is spanned by the normalized monomials whose group degrees equal
kappa, and the truncation at cap D is the orthogonal sum of all H_kappa
with |kappa| <= D.

Basis order is pinned for reproducibility: graded reverse lexicographic
within each group block, kappa tuples enumerated by total degree and then
grevlex, groups combined with group 1 as the slowest index (matching the
tensor-product convention of numpy.kron).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import gammaln

from .errors import LatticeError

Index = tuple[int, ...]


@dataclass(frozen=True)
class PartitionConfig:
    """Geometry of every computation: group sizes k and weight parameter.

    Invariants: k_1 <= ... <= k_m with all k_j >= 1, and lam > -1.
    The ambient dimension n and group count m are derived from k.
    """

    k: Index
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if len(self.k) == 0:
            raise LatticeError("partition needs at least one group")
        if any(v < 1 for v in self.k):
            raise LatticeError(f"group sizes must be positive, got {self.k}")
        if any(a > b for a, b in zip(self.k, self.k[1:])):
            raise LatticeError(f"group sizes must be nondecreasing, got {self.k}")
        if not self.lam > -1.0:
            raise LatticeError(f"weight parameter must exceed -1, got {self.lam}")

    @property
    def n(self) -> int:
        return sum(self.k)

    @property
    def m(self) -> int:
        return len(self.k)

    @property
    def group_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for kj in self.k:
            out.append(slice(start, start + kj))
            start += kj
        return tuple(out)

    def split(self, alpha: Index) -> tuple[Index, ...]:
        """Partition view (alpha_(1),...,alpha_(m)) of a full multi-index."""
        if len(alpha) != self.n:
            raise LatticeError(f"multi-index length {len(alpha)} != n={self.n}")
        return tuple(tuple(alpha[s]) for s in self.group_slices)

    def kappa_of(self, alpha: Index) -> Index:
        return tuple(sum(part) for part in self.split(alpha))

    def join(self, parts) -> Index:
        return tuple(v for part in parts for v in part)


@dataclass(frozen=True)
class MultiIndex:
    """A multi-index bound to a partition, with its group view."""

    entries: Index
    cfg: PartitionConfig

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(v) for v in self.entries))
        if any(v < 0 for v in self.entries):
            raise LatticeError(f"multi-index entries must be nonnegative: {self.entries}")
        if len(self.entries) != self.cfg.n:
            raise LatticeError(
                f"multi-index length {len(self.entries)} != n={self.cfg.n}"
            )

    @property
    def groups(self) -> tuple[Index, ...]:
        return self.cfg.split(self.entries)

    @property
    def kappa(self) -> Index:
        return self.cfg.kappa_of(self.entries)

    @property
    def degree(self) -> int:
        return sum(self.entries)


def _grevlex_key(alpha: Index) -> Index:
    # Within a fixed total degree, grevlex order is ascending lex on the
    # reversed tuple.
    return alpha[::-1]


@lru_cache(maxsize=None)
def block_indices(kj: int, d: int) -> tuple[Index, ...]:
    """All alpha in Z_+^kj with |alpha| = d, graded-reverse-lex ordered."""
    if kj < 1:
        raise LatticeError(f"group size must be >= 1, got {kj}")
    if d < 0:
        raise LatticeError(f"degree must be >= 0, got {d}")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return tuple(sorted(compositions(d, kj), key=_grevlex_key))


@dataclass(frozen=True)
class BlockBasis:
    """Ordered monomial basis of the degree-d homogeneous block in one group."""

    kj: int
    d: int
    indices: tuple[Index, ...]

    @property
    def dim(self) -> int:
        return len(self.indices)

    def index_of(self, alpha: Index) -> int:
        try:
            return self._lookup[tuple(alpha)]
        except KeyError:
            raise LatticeError(f"{alpha} is not in the degree-{self.d} block")

    @property
    def _lookup(self):
        # Built lazily; frozen dataclass, so stash via object.__setattr__.
        cached = self.__dict__.get("_lookup_cache")
        if cached is None:
            cached = {a: i for i, a in enumerate(self.indices)}
            object.__setattr__(self, "_lookup_cache", cached)
        return cached


def enumerate_block_indices(kj: int, d: int) -> BlockBasis:
    """Basis of the homogeneous degree-d block over a size-kj group.

    The length equals C(d + kj - 1, kj - 1); the order is deterministic.
    """
    return BlockBasis(kj=kj, d=d, indices=block_indices(kj, d))


def enumerate_kappa(cfg: PartitionConfig, total_cap: int) -> list[Index]:
    """All group-degree tuples kappa with |kappa| <= total_cap.

    Ordered by total degree, then grevlex; this order fixes the global
    basis layout of the truncation.
    """
    if total_cap < 0:
        raise LatticeError(f"cap must be >= 0, got {total_cap}")
    out: list[Index] = []
    for deg in range(total_cap + 1):
        out.extend(block_indices(cfg.m, deg))
    return out


def dim_h_kappa(cfg: PartitionConfig, kappa: Index) -> int:
    """dim H_kappa = prod_j C(kappa_j + k_j - 1, k_j - 1)."""
    if len(kappa) != cfg.m:
        raise LatticeError(f"kappa length {len(kappa)} != m={cfg.m}")
    return math.prod(math.comb(kj - 1 + kap, kj - 1) for kj, kap in zip(cfg.k, kappa))


def log_monomial_norm_sq(alpha: Index, cfg: PartitionConfig) -> float:
    """log of ||z^alpha||^2 in the weighted Bergman space over the ball.

    ||z^alpha||^2 = alpha! Gamma(n + lam + 1) / Gamma(n + |alpha| + lam + 1),
    evaluated as a log-Gamma difference so that degrees of several hundred
    stay representable.
    """
    n, lam = cfg.n, cfg.lam
    total = sum(alpha)
    return float(
        sum(gammaln(a + 1.0) for a in alpha)
        + gammaln(n + lam + 1.0)
        - gammaln(n + total + lam + 1.0)
    )


def monomial_norm_sq(
    alpha: Index, cfg: PartitionConfig, *, max_total_degree: int = 100_000
) -> float:
    """||z^alpha||^2, positive; equals 1 at alpha = 0.

    Raises when |alpha| exceeds the configured cap (the log-Gamma route is
    accurate far beyond any cap this artifact uses, but the cap keeps
    accidental runaway degrees visible).
    """
    if len(alpha) != cfg.n:
        raise LatticeError(f"multi-index length {len(alpha)} != n={cfg.n}")
    if any(a < 0 for a in alpha):
        raise LatticeError(f"multi-index entries must be nonnegative: {alpha}")
    if sum(alpha) > max_total_degree:
        raise LatticeError(
            f"|alpha| = {sum(alpha)} exceeds the configured cap {max_total_degree}"
        )
    return math.exp(log_monomial_norm_sq(alpha, cfg))


class GlobalBasis:
    """Ordered basis of the truncation ⊕_{|kappa| <= cap} H_kappa.

    Realizes the basis index map (the tensor-factorization unitary): within
    each kappa the basis is the cartesian product of the per-group block
    bases, group 1 slowest, so the slice of H_kappa carries exactly the
    kron-product index layout of the per-group blocks.
    """

    def __init__(self, cfg: PartitionConfig, cap: int):
        self.cfg = cfg
        self.cap = cap
        self.kappas: list[Index] = enumerate_kappa(cfg, cap)
        alphas: list[Index] = []
        offsets: dict[Index, tuple[int, int]] = {}
        for kappa in self.kappas:
            start = len(alphas)
            group_bases = [block_indices(kj, kap) for kj, kap in zip(cfg.k, kappa)]
            for combo in product(*group_bases):
                alphas.append(cfg.join(combo))
            offsets[kappa] = (start, len(alphas) - start)
        self.alphas: tuple[Index, ...] = tuple(alphas)
        self._offsets = offsets
        self._index = {a: i for i, a in enumerate(alphas)}

    @property
    def dim(self) -> int:
        return len(self.alphas)

    def alpha_at(self, i: int) -> Index:
        return self.alphas[i]

    def index_of(self, alpha: Index) -> int:
        try:
            return self._index[tuple(alpha)]
        except KeyError:
            raise LatticeError(f"{alpha} is not inside the cap-{self.cap} truncation")

    def slice_of(self, kappa: Index) -> slice:
        try:
            start, size = self._offsets[tuple(kappa)]
        except KeyError:
            raise LatticeError(f"kappa={kappa} outside the cap-{self.cap} truncation")
        return slice(start, start + size)

    def kappa_of_index(self, i: int) -> Index:
        return self.cfg.kappa_of(self.alphas[i])

    def kappa_array(self) -> np.ndarray:
        """(dim, m) integer array of group degrees per basis element."""
        return np.array([self.cfg.kappa_of(a) for a in self.alphas], dtype=int)
