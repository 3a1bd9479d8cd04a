"""Exact dense linear algebra over prime fields F_q.

All matrices at play are small and dense (packet counts and packet lengths at
desk scale), so everything is plain Gauss-Jordan elimination on int64 numpy
arrays with multiply-then-reduce arithmetic.  q < 2**31 keeps every product of
two reduced scalars inside int64.  All randomness flows through caller-supplied
``numpy.random.Generator`` instances; nothing touches global RNG state.
"""

from __future__ import annotations

import numpy as np


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality check (adequate for n < 2**31)."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class FieldCtx:
    """Prime-field context: the modulus q shared by all arithmetic."""

    __slots__ = ("q",)

    def __init__(self, q: int):
        q = int(q)
        if not 2 <= q < 2**31:
            raise ValueError(f"field modulus must satisfy 2 <= q < 2**31, got {q}")
        if not is_prime(q):
            raise ValueError(f"field modulus must be prime, got {q}")
        self.q = q

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and other.q == self.q

    def __hash__(self):
        return hash(("FieldCtx", self.q))

    def __repr__(self):
        return f"FieldCtx(q={self.q})"


class MatrixFq:
    """Immutable dense matrix over F_q: row-major int64 entries in [0, q).

    Thin wrapper over a read-only numpy array plus its field context, so that
    shape and field mismatches fail loudly instead of silently broadcasting.
    """

    __slots__ = ("ctx", "arr")

    def __init__(self, entries, ctx: FieldCtx):
        a = np.asarray(entries, dtype=np.int64)
        if a.ndim != 2:
            raise ValueError(
                f"matrix entries must be 2-D (use zeros() for empty shapes), got ndim={a.ndim}"
            )
        a = np.mod(a, ctx.q)
        a.flags.writeable = False
        self.ctx = ctx
        self.arr = a

    @property
    def rows(self) -> int:
        return self.arr.shape[0]

    @property
    def cols(self) -> int:
        return self.arr.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.arr.shape

    def transpose(self) -> "MatrixFq":
        return MatrixFq(self.arr.T, self.ctx)

    def tolist(self) -> list[list[int]]:
        return self.arr.tolist()

    def __matmul__(self, other: "MatrixFq") -> "MatrixFq":
        return mat_mul(self, other)

    def __eq__(self, other):
        return (
            isinstance(other, MatrixFq)
            and self.ctx == other.ctx
            and self.shape == other.shape
            and np.array_equal(self.arr, other.arr)
        )

    def __hash__(self):
        return hash((self.ctx.q, self.shape, self.arr.tobytes()))

    def __repr__(self):
        return f"MatrixFq({self.arr.tolist()}, q={self.ctx.q})"


def zeros(rows: int, cols: int, ctx: FieldCtx) -> MatrixFq:
    return MatrixFq(np.zeros((rows, cols), dtype=np.int64), ctx)


def identity(n: int, ctx: FieldCtx) -> MatrixFq:
    return MatrixFq(np.eye(n, dtype=np.int64), ctx)


def _check_same_ctx(*mats: MatrixFq) -> FieldCtx:
    ctx = mats[0].ctx
    for m in mats[1:]:
        if m.ctx != ctx:
            raise ValueError(f"field mismatch: {m.ctx} vs {ctx}")
    return ctx


def vstack(mats) -> MatrixFq:
    mats = list(mats)
    ctx = _check_same_ctx(*mats)
    cols = {m.cols for m in mats}
    if len(cols) != 1:
        raise ValueError(f"cannot stack matrices with differing column counts {sorted(cols)}")
    return MatrixFq(np.vstack([m.arr for m in mats]), ctx)


def hstack(mats) -> MatrixFq:
    mats = list(mats)
    ctx = _check_same_ctx(*mats)
    rws = {m.rows for m in mats}
    if len(rws) != 1:
        raise ValueError(f"cannot stack matrices with differing row counts {sorted(rws)}")
    return MatrixFq(np.hstack([m.arr for m in mats]), ctx)


def block_diag(mats) -> MatrixFq:
    """Block-diagonal stacking; empty blocks contribute their shape only."""
    mats = list(mats)
    ctx = _check_same_ctx(*mats)
    rows = sum(m.rows for m in mats)
    cols = sum(m.cols for m in mats)
    out = np.zeros((rows, cols), dtype=np.int64)
    r = c = 0
    for m in mats:
        out[r : r + m.rows, c : c + m.cols] = m.arr
        r += m.rows
        c += m.cols
    return MatrixFq(out, ctx)


def mat_mul(a: MatrixFq, b: MatrixFq) -> MatrixFq:
    """Exact product a @ b modulo q.

    Raises:
        ValueError: On inner-dimension or field-context mismatch.
    """
    _check_same_ctx(a, b)
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: ({a.rows}x{a.cols}) @ ({b.rows}x{b.cols})")
    q = a.ctx.q
    k = a.cols
    if k == 0:
        return zeros(a.rows, b.cols, a.ctx)
    # Accumulated dot products must stay inside int64.
    if k * (q - 1) * (q - 1) < 2**63:
        return MatrixFq(np.mod(a.arr @ b.arr, q), a.ctx)
    chunk = max(1, (2**62) // ((q - 1) * (q - 1)))
    acc = np.zeros((a.rows, b.cols), dtype=np.int64)
    for j in range(0, k, chunk):
        acc = np.mod(acc + a.arr[:, j : j + chunk] @ b.arr[j : j + chunk, :], q)
    return MatrixFq(acc, a.ctx)


def random_matrix(rows: int, cols: int, ctx: FieldCtx, rng: np.random.Generator) -> MatrixFq:
    """Matrix with i.i.d. entries uniform on [0, q), drawn from the given rng."""
    return MatrixFq(rng.integers(0, ctx.q, size=(rows, cols), dtype=np.int64), ctx)


def _eliminate(arr: np.ndarray, q: int, pivot_col_limit: int | None = None):
    """In-place Gauss-Jordan reduction; returns pivot column list.

    Pivot search can be limited to the first ``pivot_col_limit`` columns while
    row operations still apply to the full width (for augmented systems).
    """
    rows, cols = arr.shape
    limit = cols if pivot_col_limit is None else pivot_col_limit
    pivots: list[int] = []
    r = 0
    for c in range(limit):
        if r == rows:
            break
        nz = np.nonzero(arr[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            arr[[r, p]] = arr[[p, r]]
        inv = pow(int(arr[r, c]), -1, q)
        arr[r] = np.mod(arr[r] * inv, q)
        col = arr[:, c].copy()
        col[r] = 0
        if np.any(col):
            arr -= np.outer(col, arr[r])
            np.mod(arr, q, out=arr)
        pivots.append(c)
        r += 1
    return pivots


def rref(m: MatrixFq) -> tuple[MatrixFq, int, list[int]]:
    """Reduced row echelon form over F_q.

    Returns:
        (R, rank, pivot_cols) where R is the unique RREF with the same row
        span as ``m``, rank is the number of nonzero rows of R, and
        pivot_cols lists the pivot column indices in order.
    """
    a = m.arr.copy()
    pivots = _eliminate(a, m.ctx.q)
    return MatrixFq(a, m.ctx), len(pivots), pivots


def rank(m: MatrixFq) -> int:
    """Rank of ``m`` over F_q."""
    a = m.arr.copy()
    return len(_eliminate(a, m.ctx.q))


def solve_in_rowspan(target: MatrixFq, basis: MatrixFq) -> MatrixFq | None:
    """Express every row of ``target`` as a combination of the rows of ``basis``.

    Returns C with C @ basis == target when all target rows lie in the row
    span of ``basis``, otherwise None (not-representable is a normal result,
    not an error).
    """
    _check_same_ctx(target, basis)
    if target.cols != basis.cols:
        raise ValueError(f"column mismatch: target has {target.cols}, basis has {basis.cols}")
    q = target.ctx.q
    b = basis.rows
    if target.rows == 0:
        return zeros(0, b, target.ctx)
    if b == 0:
        return None if np.any(target.arr) else zeros(target.rows, 0, target.ctx)
    # Row-reduce [basis | I] with pivots restricted to the basis columns, so
    # the right block records the transform T with R = T @ basis.
    aug = np.hstack([basis.arr, np.eye(b, dtype=np.int64)])
    pivots = _eliminate(aug, q, pivot_col_limit=basis.cols)
    r = len(pivots)
    red = aug[:r, : basis.cols]
    transform = aug[:r, basis.cols :]
    # Reduce target rows against R, recording the combination used.
    resid = target.arr.copy()
    coeff_over_red = np.zeros((target.rows, r), dtype=np.int64)
    for i, pc in enumerate(pivots):
        c = resid[:, pc].copy()
        coeff_over_red[:, i] = c
        if np.any(c):
            resid -= np.outer(c, red[i])
            np.mod(resid, q, out=resid)
    if np.any(resid):
        return None
    return MatrixFq(np.mod(coeff_over_red @ transform, q), target.ctx)


def right_kernel(m: MatrixFq) -> MatrixFq:
    """Basis (as rows) of the null space {x : m @ x = 0}."""
    red, r, pivots = rref(m)
    free = [c for c in range(m.cols) if c not in pivots]
    out = np.zeros((len(free), m.cols), dtype=np.int64)
    q = m.ctx.q
    for row, f in enumerate(free):
        out[row, f] = 1
        for i, pc in enumerate(pivots):
            out[row, pc] = (-int(red.arr[i, f])) % q
    return MatrixFq(out, m.ctx)
