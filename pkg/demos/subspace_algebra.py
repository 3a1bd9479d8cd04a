"""Tour of the exact subspace algebra over F_q.

Run:  python3 demos/subspace_algebra.py
"""

import numpy as np

from nckey.fieldmath import FieldCtx, MatrixFq
from nckey.subspaces import (
    direct_sum,
    gaussian_binomial,
    random_subspace,
    span_of,
    spanning_matrix_count,
)

rng = np.random.default_rng(1)
F5 = FieldCtx(5)

# Row spans canonicalize to a unique reduced-echelon basis.
m = MatrixFq([[1, 2, 3], [2, 4, 1], [3, 1, 4]], F5)
s = span_of(m)
print("span of a 3x3 matrix over F_5:", s)
print("canonical basis:\n", np.array(s.basis.tolist()))

# Sum and intersection obey the modular dimension identity.
a = random_subspace(6, 3, F5, rng)
b = random_subspace(6, 4, F5, rng)
print("\ndim a =", a.dim, " dim b =", b.dim)
print("dim(a+b) =", (a + b).dim, " dim(a^b) =", a.intersect(b).dim)
print("modular identity:", (a + b).dim + a.intersect(b).dim == a.dim + b.dim)

# Complement subtraction: the part of a lying outside b (not unique; the
# deterministic pick keeps echelon rows, an rng draws uniformly).
u_det = a.complement(b)
u_rand = a.complement(b, rng)
inter = a.intersect(b)
print("\ncomplement dims (det, rand):", u_det.dim, u_rand.dim)
print("complement + intersection rebuilds a:", (u_rand + inter) == a)

# Direct sums glue time-slots together: ambient dimensions add.
d = direct_sum(a, b)
print("\ndirect sum lives in dim", d.ambient_dim, "with dim", d.dim)

# Counting: how many subspaces and spanning matrices exist.
print("\nsubspaces of F_2^4 by dimension:",
      [gaussian_binomial(4, k, FieldCtx(2)) for k in range(5)])
print("3-row matrices spanning a fixed plane over F_2:",
      spanning_matrix_count(3, 2, FieldCtx(2)))
