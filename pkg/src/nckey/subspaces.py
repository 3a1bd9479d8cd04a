"""Subspace lattice over F_q^n: canonical subspaces, sum, intersection,
complements, uniform sampling, direct sums, and Grassmannian counting.

A subspace is represented by its unique RREF basis with zero rows dropped, so
equal subspaces compare (and hash) bit-identically.
"""

from __future__ import annotations

import itertools

import numpy as np

from .fieldmath import (
    FieldCtx,
    MatrixFq,
    mat_mul,
    random_matrix,
    rank,
    right_kernel,
    rref,
    vstack,
    zeros,
)


class Subspace:
    """A subspace of F_q^ambient_dim held as a canonical RREF basis."""

    __slots__ = ("ctx", "ambient_dim", "basis")

    def __init__(self, basis: MatrixFq, ambient_dim: int):
        if basis.cols != ambient_dim:
            raise ValueError(f"basis has {basis.cols} columns, ambient dim is {ambient_dim}")
        self.ctx = basis.ctx
        self.ambient_dim = ambient_dim
        self.basis = basis

    @property
    def dim(self) -> int:
        return self.basis.rows

    def contains(self, other: "Subspace") -> bool:
        _check_compatible(self, other)
        if other.dim == 0:
            return True
        return rank(vstack([self.basis, other.basis])) == self.dim

    def contains_vector(self, vec) -> bool:
        v = MatrixFq(np.atleast_2d(np.asarray(vec, dtype=np.int64)), self.ctx)
        return rank(vstack([self.basis, v])) == self.dim

    def __add__(self, other: "Subspace") -> "Subspace":
        _check_compatible(self, other)
        return span_of(vstack([self.basis, other.basis]))

    def intersect(self, other: "Subspace") -> "Subspace":
        """Intersection via the kernel method: left-null vectors of the
        stacked bases split into coordinates over each basis."""
        _check_compatible(self, other)
        if self.dim == 0 or other.dim == 0:
            return zero_subspace(self.ambient_dim, self.ctx)
        stacked = vstack([self.basis, MatrixFq((-other.basis.arr), self.ctx)])
        left_null = right_kernel(stacked.transpose())
        if left_null.rows == 0:
            return zero_subspace(self.ambient_dim, self.ctx)
        coeff_a = MatrixFq(left_null.arr[:, : self.dim], self.ctx)
        return span_of(mat_mul(coeff_a, self.basis))

    def complement(self, other: "Subspace", rng: np.random.Generator | None = None) -> "Subspace":
        """A subspace U with U <= self, U independent of (self ∩ other), and
        U + (self ∩ other) = self.

        The result is not unique.  With rng=None the choice is deterministic
        (pivot completion: keep the basis rows of self whose pivot columns are
        not pivot columns of the intersection).  With an rng the result is
        uniform over all valid complements, by rejection sampling.
        """
        inter = self.intersect(other)
        k = self.dim - inter.dim
        if k == 0:
            return zero_subspace(self.ambient_dim, self.ctx)
        if inter.dim == 0 and rng is None:
            return self
        if rng is None:
            # Pivots of a contained subspace's RREF are always a subset of the
            # container's pivots, so the completion below is well defined.
            _, _, piv_self = rref(self.basis)
            _, _, piv_inter = rref(inter.basis)
            keep = [i for i, p in enumerate(piv_self) if p not in set(piv_inter)]
            sel = MatrixFq(self.basis.arr[keep], self.ctx)
            return Subspace(sel, self.ambient_dim)
        while True:
            coeff = random_matrix(k, self.dim, self.ctx, rng)
            cand = mat_mul(coeff, self.basis)
            if rank(vstack([cand, inter.basis])) == k + inter.dim:
                return span_of(cand)

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim}, q={self.ctx.q})"


def _check_compatible(a: Subspace, b: Subspace):
    if a.ctx != b.ctx:
        raise ValueError(f"field mismatch: {a.ctx} vs {b.ctx}")
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"ambient mismatch: {a.ambient_dim} vs {b.ambient_dim}")


def span_of(m: MatrixFq) -> Subspace:
    """Row span of a matrix as a canonical subspace."""
    red, r, _ = rref(m)
    return Subspace(MatrixFq(red.arr[:r], m.ctx), m.cols)


def zero_subspace(ambient_dim: int, ctx: FieldCtx) -> Subspace:
    return Subspace(zeros(0, ambient_dim, ctx), ambient_dim)


def full_space(ambient_dim: int, ctx: FieldCtx) -> Subspace:
    return Subspace(MatrixFq(np.eye(ambient_dim, dtype=np.int64), ctx), ambient_dim)


def random_subspace(ambient_dim: int, dim: int, ctx: FieldCtx, rng: np.random.Generator) -> Subspace:
    """Uniformly random dim-dimensional subspace of F_q^ambient_dim.

    Draws dim x ambient matrices until full rank, then canonicalizes; this is
    uniform because every subspace has the same number of full-rank spanning
    matrices (see spanning_matrix_count).
    """
    if not 0 <= dim <= ambient_dim:
        raise ValueError(f"dim must lie in [0, {ambient_dim}], got {dim}")
    if dim == 0:
        return zero_subspace(ambient_dim, ctx)
    while True:
        m = random_matrix(dim, ambient_dim, ctx, rng)
        if rank(m) == dim:
            return span_of(m)


def direct_sum(a: Subspace, b: Subspace) -> Subspace:
    """External direct sum: block-diagonal bases in ambient dim a.ambient + b.ambient."""
    if a.ctx != b.ctx:
        raise ValueError(f"field mismatch: {a.ctx} vs {b.ctx}")
    amb = a.ambient_dim + b.ambient_dim
    out = np.zeros((a.dim + b.dim, amb), dtype=np.int64)
    out[: a.dim, : a.ambient_dim] = a.basis.arr
    out[a.dim :, a.ambient_dim :] = b.basis.arr
    # Block-diagonal stacking of RREF bases is already in RREF.
    return Subspace(MatrixFq(out, a.ctx), amb)


def spanning_matrix_count(n: int, d: int, ctx: FieldCtx) -> int:
    """Number of n-row matrices over F_q whose rows span a fixed d-dim subspace.

    Equals prod_{i=0}^{d-1} (q^n - q^i); independent of the ambient width.
    """
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got d={d}, n={n}")
    q = ctx.q
    out = 1
    for i in range(d):
        out *= q**n - q**i
    return out


def gaussian_binomial(n: int, k: int, ctx: FieldCtx) -> int:
    """Number of k-dimensional subspaces of F_q^n, exact."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    q = ctx.q
    num = den = 1
    for i in range(k):
        num *= q**n - q**i
        den *= q**k - q**i
    assert num % den == 0
    return num // den


def iter_subspaces(ambient_dim: int, dim: int, ctx: FieldCtx):
    """Yield every dim-dimensional subspace of F_q^ambient_dim once.

    Enumerates RREF bases directly: choose pivot columns, then fill the free
    positions (entries right of each pivot, outside pivot columns) with every
    field value.
    """
    if not 0 <= dim <= ambient_dim:
        raise ValueError(f"dim must lie in [0, {ambient_dim}], got {dim}")
    q = ctx.q
    if dim == 0:
        yield zero_subspace(ambient_dim, ctx)
        return
    for pivots in itertools.combinations(range(ambient_dim), dim):
        pivot_set = set(pivots)
        free = [
            (i, j)
            for i in range(dim)
            for j in range(pivots[i] + 1, ambient_dim)
            if j not in pivot_set
        ]
        base = np.zeros((dim, ambient_dim), dtype=np.int64)
        for i, p in enumerate(pivots):
            base[i, p] = 1
        for values in itertools.product(range(q), repeat=len(free)):
            m = base.copy()
            for (i, j), v in zip(free, values):
                m[i, j] = v
            yield Subspace(MatrixFq(m, ctx), ambient_dim)


def iter_all_subspaces(ambient_dim: int, ctx: FieldCtx, max_dim: int | None = None):
    """Yield every subspace of F_q^ambient_dim with dim <= max_dim."""
    top = ambient_dim if max_dim is None else min(max_dim, ambient_dim)
    for d in range(top + 1):
        yield from iter_subspaces(ambient_dim, d, ctx)


def subspaces_within(s: Subspace, max_dim: int | None = None):
    """Yield every subspace of ``s`` with dim <= max_dim, via its coordinate space."""
    top = s.dim if max_dim is None else min(max_dim, s.dim)
    for d in range(top + 1):
        for coords in iter_subspaces(s.dim, d, s.ctx):
            if d == 0:
                yield zero_subspace(s.ambient_dim, s.ctx)
            else:
                yield span_of(mat_mul(coords.basis, s.basis))


class SubspaceFamily:
    """Map from nonempty subsets of [1:m] (bitmasks over m <= 16 bits) to subspaces."""

    __slots__ = ("m", "members")

    def __init__(self, m: int, members: dict[int, Subspace]):
        if not 1 <= m <= 16:
            raise ValueError(f"terminal count must lie in [1, 16], got {m}")
        ambients = set()
        ctxs = set()
        for mask, sub in members.items():
            if not 1 <= mask < 2**m:
                raise ValueError(f"subset mask {mask} out of range for m={m}")
            ambients.add(sub.ambient_dim)
            ctxs.add(sub.ctx)
        if len(ambients) > 1 or len(ctxs) > 1:
            raise ValueError("family members must share ambient dimension and field")
        self.m = m
        self.members = dict(members)

    def __getitem__(self, mask: int) -> Subspace:
        return self.members[mask]

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self):
        return len(self.members)

    def masks(self) -> list[int]:
        return sorted(self.members)
