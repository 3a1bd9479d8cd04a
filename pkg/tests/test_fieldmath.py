import itertools

import numpy as np
import pytest

from nckey.fieldmath import (
    FieldCtx,
    MatrixFq,
    hstack,
    identity,
    is_prime,
    mat_mul,
    random_matrix,
    rank,
    right_kernel,
    rref,
    solve_in_rowspan,
    vstack,
    zeros,
)

F2 = FieldCtx(2)
F5 = FieldCtx(5)


def minor_rank_oracle(m: MatrixFq) -> int:
    """Brute-force rank: largest k with a nonzero k x k minor (exact integer
    determinants reduced mod q)."""

    def det(rows, cols):
        k = len(rows)
        if k == 1:
            return int(m.arr[rows[0], cols[0]])
        total = 0
        for j, c in enumerate(cols):
            sub = det(rows[1:], cols[:j] + cols[j + 1 :])
            term = int(m.arr[rows[0], c]) * sub
            total += -term if j % 2 else term
        return total

    for k in range(min(m.rows, m.cols), 0, -1):
        for rows in itertools.combinations(range(m.rows), k):
            for cols in itertools.combinations(range(m.cols), k):
                if det(list(rows), list(cols)) % m.ctx.q != 0:
                    return k
    return 0


def test_is_prime_small():
    primes = [2, 3, 5, 7, 11, 101, 1009]
    composites = [1, 4, 6, 9, 100, 1001]
    assert all(is_prime(p) for p in primes)
    assert not any(is_prime(c) for c in composites)


def test_field_ctx_rejects_composite():
    with pytest.raises(ValueError):
        FieldCtx(4)
    with pytest.raises(ValueError):
        FieldCtx(1)


def test_rref_identity():
    m = identity(3, F2)
    red, r, piv = rref(m)
    assert red == m
    assert r == 3
    assert piv == [0, 1, 2]


def test_rref_zero():
    m = zeros(2, 4, F5)
    red, r, piv = rref(m)
    assert red == m
    assert r == 0
    assert piv == []


def test_rref_dependent_rows():
    # row 2 = 2 * row 1 mod 5
    m = MatrixFq([[1, 2], [2, 4]], F5)
    red, r, piv = rref(m)
    assert red.tolist() == [[1, 2], [0, 0]]
    assert r == 1
    assert piv == [0]


def test_rref_idempotent_and_span_preserving():
    rng = np.random.default_rng(11)
    for q in (2, 5, 101):
        ctx = FieldCtx(q)
        for _ in range(25):
            rows, cols = rng.integers(1, 6, size=2)
            m = random_matrix(int(rows), int(cols), ctx, rng)
            red, r, _ = rref(m)
            red2, r2, _ = rref(red)
            assert red2 == red and r2 == r
            # random invertible row transform leaves the RREF unchanged
            while True:
                t = random_matrix(int(rows), int(rows), ctx, rng)
                if rank(t) == rows:
                    break
            red3, _, _ = rref(mat_mul(t, m))
            assert red3 == red


def test_rank_trivial():
    assert rank(identity(4, F5)) == 4
    assert rank(zeros(3, 7, F2)) == 0


def test_rank_against_minor_oracle():
    rng = np.random.default_rng(5)
    ctx = FieldCtx(101)
    for _ in range(20):
        m = random_matrix(2, 5, ctx, rng)
        assert rank(m) == minor_rank_oracle(m)
    # a few rank-deficient cases too
    for _ in range(10):
        row = random_matrix(1, 5, ctx, rng)
        scale = int(rng.integers(0, 101))
        m = MatrixFq(np.vstack([row.arr, (scale * row.arr) % 101]), ctx)
        assert rank(m) == minor_rank_oracle(m)


def test_rank_subadditive_with_equality_iff_trivial_intersection():
    rng = np.random.default_rng(23)
    ctx = FieldCtx(5)
    from nckey.subspaces import span_of

    for _ in range(60):
        a = random_matrix(int(rng.integers(0, 4)), 4, ctx, rng)
        b = random_matrix(int(rng.integers(0, 4)), 4, ctx, rng)
        stacked = rank(vstack([a, b]))
        assert stacked <= rank(a) + rank(b)
        inter = span_of(a).intersect(span_of(b))
        assert (stacked == rank(a) + rank(b)) == (inter.dim == 0)


def test_mat_mul_identity_and_hand_cases():
    x = MatrixFq([[1, 1]], F2)
    assert mat_mul(x, identity(2, F2)) == x
    assert mat_mul(MatrixFq([[2, 3]], F5), MatrixFq([[1], [4]], F5)).tolist() == [[4]]


def test_mat_mul_dimension_mismatch():
    with pytest.raises(ValueError):
        mat_mul(identity(2, F2), identity(3, F2))
    with pytest.raises(ValueError):
        mat_mul(identity(2, F2), identity(2, F5))


def test_mat_mul_associative_distributive():
    # exhaustive over all shape triples with dims <= 3, seeded entries
    rng = np.random.default_rng(3)
    for q in (2, 5):
        ctx = FieldCtx(q)
        for a_r, a_c, b_c, c_c in itertools.product(range(1, 4), repeat=4):
            a = random_matrix(a_r, a_c, ctx, rng)
            b = random_matrix(a_c, b_c, ctx, rng)
            b2 = random_matrix(a_c, b_c, ctx, rng)
            c = random_matrix(b_c, c_c, ctx, rng)
            assert mat_mul(mat_mul(a, b), c) == mat_mul(a, mat_mul(b, c))
            lhs = mat_mul(a, MatrixFq((b.arr + b2.arr) % q, ctx))
            rhs = MatrixFq((mat_mul(a, b).arr + mat_mul(a, b2).arr) % q, ctx)
            assert lhs == rhs


def test_mat_mul_large_modulus_no_overflow():
    # q close to 2**31: the accumulation path must chunk
    ctx = FieldCtx(2147483647)
    rng = np.random.default_rng(1)
    a = random_matrix(3, 40, ctx, rng)
    b = random_matrix(40, 2, ctx, rng)
    got = mat_mul(a, b)
    want = (a.arr.astype(object) @ b.arr.astype(object)) % ctx.q
    assert got.tolist() == [[int(x) for x in row] for row in want]


def test_random_matrix_empty_and_deterministic():
    rng = np.random.default_rng(9)
    assert random_matrix(0, 3, F2, rng).shape == (0, 3)
    a = random_matrix(4, 4, F5, np.random.default_rng(42))
    b = random_matrix(4, 4, F5, np.random.default_rng(42))
    assert a == b


def test_random_matrix_uniform_binomial():
    rng = np.random.default_rng(77)
    n = 10_000
    ones = sum(int(random_matrix(1, 1, F2, rng).arr[0, 0]) for _ in range(n))
    # 5 sigma band around n/2 for a fair coin
    sigma = (n * 0.25) ** 0.5
    assert abs(ones - n / 2) <= 5 * sigma


def test_solve_in_rowspan_trivial():
    basis = random_matrix(3, 5, F5, np.random.default_rng(2))
    assert rank(basis) == 3
    c = solve_in_rowspan(basis, basis)
    assert c == identity(3, F5)
    z = zeros(2, 5, F5)
    cz = solve_in_rowspan(z, basis)
    assert cz == zeros(2, 3, F5)


def test_solve_in_rowspan_membership_and_witness():
    rng = np.random.default_rng(4)
    ctx = FieldCtx(7)
    for _ in range(30):
        basis = random_matrix(2, 4, ctx, rng)
        coeff = random_matrix(3, 2, ctx, rng)
        target = mat_mul(coeff, basis)
        c = solve_in_rowspan(target, basis)
        assert c is not None
        assert mat_mul(c, basis) == target
    # a row outside the span: rank grows when stacked
    basis = MatrixFq([[1, 0, 0], [0, 1, 0]], ctx)
    target = MatrixFq([[0, 0, 1]], ctx)
    assert rank(vstack([basis, target])) > rank(basis)
    assert solve_in_rowspan(target, basis) is None


def test_right_kernel():
    rng = np.random.default_rng(6)
    for q in (2, 7):
        ctx = FieldCtx(q)
        for _ in range(20):
            m = random_matrix(int(rng.integers(1, 4)), 5, ctx, rng)
            k = right_kernel(m)
            assert k.rows == 5 - rank(m)
            if k.rows:
                prod = mat_mul(m, k.transpose())
                assert not np.any(prod.arr)


def test_stacking_helpers():
    a = identity(2, F2)
    b = zeros(1, 2, F2)
    assert vstack([a, b]).shape == (3, 2)
    assert hstack([a, zeros(2, 3, F2)]).shape == (2, 5)
    with pytest.raises(ValueError):
        vstack([a, zeros(1, 3, F2)])


def test_matrix_immutable():
    m = identity(2, F5)
    with pytest.raises(ValueError):
        m.arr[0, 0] = 3
