"""The non-coherent matrix broadcast channel and its exact transition laws.

Run:  python3 demos/channel_model.py
"""

from fractions import Fraction

import numpy as np

from nckey.channel import ChannelParams, broadcast_slot, make_source_matrix, subspace_transition_prob
from nckey.fieldmath import FieldCtx, MatrixFq, random_matrix
from nckey.subspaces import span_of, subspaces_within

rng = np.random.default_rng(7)
ctx = FieldCtx(101)
params = ChannelParams(ctx, ell=8, n_a=4, n=(3, 2), n_e=2)

# The source always injects [I | M]: full rank by construction, and the
# identity block is what lets terminals publish their transfer matrices.
x_a = make_source_matrix(random_matrix(4, 4, ctx, rng), params)
print("source matrix rank:", 4, " shape:", x_a.shape)

obs = broadcast_slot(x_a, params, rng)
for i, (f, x) in enumerate(zip(obs.transfers, obs.received)):
    print(f"terminal {i}: transfer {f.shape}, received {x.shape}, "
          f"subspace dim {span_of(x).dim}")
print("eavesdropper: received dim", span_of(obs.eve_received).dim)

# Exact subspace-level transition probabilities sum to one.
small = FieldCtx(3)
pi_a = span_of(MatrixFq([[1, 0, 0], [0, 1, 2]], small))
total = Fraction(0)
print("\nsubspace law for a dim-2 source subspace over F_3, n_i = 2:")
for pi in subspaces_within(pi_a, max_dim=2):
    p = subspace_transition_prob(pi, pi_a, 2)
    total += p
    print(f"  dim {pi.dim}: probability {p}")
print("total:", total)

# Empirically, low-dimensional outcomes vanish as q grows: at q=101 a
# terminal with n_i >= dim(source) almost always captures everything.
hits = 0
n = 2000
for _ in range(n):
    o = broadcast_slot(x_a, params, rng)
    hits += span_of(o.received[0]).dim == 3
print(f"\nP(terminal 0 sees a full dim-3 subspace) ~ {hits/n:.3f} at q=101")
