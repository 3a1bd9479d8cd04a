"""Multi-terminal secret-key agreement over the non-coherent broadcast channel.

The protocol, per session of N slots:

1. The source broadcasts [I | M[t]] with M[t] uniform; every legitimate
   terminal publishes its transfer matrix, so the source learns each
   terminal's received subspace in source coordinates (dimension n_a).
2. For each nonempty subset J of terminals the source picks, uniformly inside
   the subset's common subspace, an "exclusive" subspace whose dimension is
   planned from generic-position arithmetic (plan_dimensions); only test
   oracles that can see the eavesdropper's subspace build it by explicit
   complement subtraction (build_exclusive_subspaces).
3. Per-subset key shares are allocated by a max-min LP over feasibility
   constraints: the total share of any collection of subsets is capped by the
   dimension those subsets' exclusive subspaces add beyond the eavesdropper's
   view (solve_allocation_lp).
4. Slots are glued by direct sums; floor(N * share) basis vectors per subset
   are extracted so that everything is mutually independent
   (extract_secure_subspaces); coefficients published over the public channel
   let each member terminal reconstruct its subset keys exactly.
5. A final common key is delivered to all terminals by one-time-padding a
   linear combination code over the subset key blocks (the multicast step).

Sessions whose generic-position dimension plan fails (probability O(1/q)) are
flagged degenerate and their keys withheld; the audit also re-verifies the
zero-leakage rank certificate against the eavesdropper's complete view.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import ChannelParams, SlotObservation, broadcast_slot, make_source_matrix
from .fieldmath import (
    FieldCtx,
    MatrixFq,
    block_diag,
    mat_mul,
    random_matrix,
    rank,
    solve_in_rowspan,
    vstack,
)
from .simplex import maximize
from .subspaces import (
    Subspace,
    SubspaceFamily,
    direct_sum,
    span_of,
    zero_subspace,
)


def _pos(x: int) -> int:
    return x if x > 0 else 0


def subset_masks(m: int) -> list[int]:
    """All nonempty subsets of the m terminals as bitmasks (bit i = terminal i)."""
    return list(range(1, 2**m))


def mask_members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


class SubsetAllocation:
    """Per-subset key-share allocation, in units of (ell - n_a) log q per slot.

    Shares are nonnegative rationals keyed by subset bitmask; missing subsets
    get zero.  Feasibility against a family of exclusive subspaces is checked
    by check_allocation_feasible, never assumed.
    """

    __slots__ = ("m", "shares")

    def __init__(self, m: int, shares):
        if not 1 <= m <= 16:
            raise ValueError(f"terminal count must lie in [1, 16], got {m}")
        out: dict[int, Fraction] = {mask: Fraction(0) for mask in subset_masks(m)}
        for mask, value in dict(shares).items():
            mask = int(mask)
            if mask not in out:
                raise ValueError(f"subset mask {mask} out of range for m={m}")
            value = Fraction(value)
            if value < 0:
                raise ValueError(f"share for subset {mask} is negative: {value}")
            out[mask] = value
        self.m = m
        self.shares = out

    def __getitem__(self, mask: int) -> Fraction:
        return self.shares[mask]

    def items(self):
        return sorted(self.shares.items())

    def floor_scaled(self, n_slots: int) -> dict[int, int]:
        """Integral per-session counts: floor(N * share) for each subset."""
        return {mask: int(n_slots * v // 1) for mask, v in self.shares.items()}

    def terminal_total(self, terminal: int) -> Fraction:
        return sum(
            (v for mask, v in self.shares.items() if mask >> terminal & 1), Fraction(0)
        )

    def min_terminal_total(self) -> Fraction:
        return min(self.terminal_total(r) for r in range(self.m))

    def __repr__(self):
        return f"SubsetAllocation(m={self.m}, {dict(self.items())})"


@dataclass(frozen=True)
class FeasibilityResult:
    ok: bool
    witness: tuple[int, ...] | None = None
    lhs: Fraction | None = None
    rhs: Fraction | None = None

    def __bool__(self):
        return self.ok


def _selections(masks: list[int], rng: np.random.Generator | None = None, sample: int = 4096):
    """Nonempty collections of distinct subsets: exhaustive up to 7 subsets
    (every selection at m <= 3), seeded sampling plus all singletons and the
    full collection beyond that."""
    masks = sorted(masks)
    if len(masks) <= 7:
        for k in range(1, len(masks) + 1):
            yield from itertools.combinations(masks, k)
        return
    for mask in masks:
        yield (mask,)
    yield tuple(masks)
    sampler = rng if rng is not None else np.random.default_rng(0)
    for _ in range(sample):
        k = int(sampler.integers(2, len(masks)))
        pick = sampler.choice(len(masks), size=k, replace=False)
        yield tuple(masks[i] for i in sorted(pick))


def _check_against(shares, rhs_fn, selections) -> FeasibilityResult:
    for sel in selections:
        lhs = sum((shares(mask) for mask in sel), Fraction(0))
        rhs = Fraction(rhs_fn(sel))
        if lhs > rhs:
            return FeasibilityResult(False, tuple(sel), lhs, rhs)
    return FeasibilityResult(True)


def check_allocation_feasible(
    alloc,
    family: SubspaceFamily,
    eve: Subspace,
    rng: np.random.Generator | None = None,
) -> FeasibilityResult:
    """Verify every selection constraint against the actual subspaces:
    sum of shares over a selection <= dim(sum of its exclusive subspaces
    + eavesdropper subspace) - dim(eavesdropper subspace).

    ``alloc`` may be a SubsetAllocation or a plain mask -> number mapping.
    """
    shares = _share_getter(alloc)
    _check_shares_covered(alloc, family)
    e_dim = eve.dim

    def rhs(sel):
        total = eve
        for mask in sel:
            total = total + family[mask]
        return total.dim - e_dim

    return _check_against(shares, rhs, _selections(family.masks(), rng))


def _share_getter(alloc):
    if isinstance(alloc, SubsetAllocation):
        return lambda mask: alloc[mask]
    table = {int(k): Fraction(v) for k, v in dict(alloc).items()}
    return lambda mask: table.get(mask, Fraction(0))


def _check_shares_covered(alloc, family: SubspaceFamily):
    """A positive share on a subset the family does not carry would escape
    every constraint; refuse it outright."""
    if isinstance(alloc, SubsetAllocation):
        positive = {mask for mask, v in alloc.shares.items() if v > 0}
    else:
        positive = {int(k) for k, v in dict(alloc).items() if Fraction(v) > 0}
    missing = positive - set(family.masks())
    if missing:
        raise ValueError(f"shares assigned to subsets absent from the family: {sorted(missing)}")


@dataclass(frozen=True)
class DimensionPlan:
    """Generic-position dimension predictions computed from counts alone.

    terminal_dims[i] is the expected dimension of terminal i's received
    subspace, inter_dims[mask] the expected dimension of a subset's common
    subspace, and exclusive_dims[mask] the expected dimension of the part
    exclusive to that subset (inside nobody else's view, nor the
    eavesdropper's).
    """

    n_a: int
    terminal_dims: tuple[int, ...]
    eve_dim: int
    inter_dims: dict[int, int]
    exclusive_dims: dict[int, int]

    @property
    def m(self) -> int:
        return len(self.terminal_dims)

    def rhs(self, selection) -> int:
        total = sum(self.exclusive_dims[mask] for mask in selection)
        return min(total + self.eve_dim, self.n_a) - self.eve_dim


def plan_from_dims(n_a: int, dims, eve_dim: int) -> DimensionPlan:
    """Iterated generic-position arithmetic on raw subspace dimensions."""
    d = tuple(min(int(x), n_a) for x in dims)
    d_e = min(int(eve_dim), n_a)
    m = len(d)
    inter: dict[int, int] = {}
    excl: dict[int, int] = {}
    for mask in subset_masks(m):
        members = mask_members(mask)
        d_j = _pos(sum(d[i] for i in members) - (len(members) - 1) * n_a)
        inter[mask] = d_j
        overlap = sum(_pos(d[i] + d_j - n_a) for i in range(m) if i not in members)
        overlap += _pos(d_e + d_j - n_a)
        excl[mask] = _pos(d_j - overlap)
    return DimensionPlan(n_a, d, d_e, inter, excl)


def plan_dimensions(params: ChannelParams) -> DimensionPlan:
    """Expected exclusive-subspace dimensions for every subset, from counts only."""
    return plan_from_dims(params.n_a, params.n, params.n_e)


def check_allocation_feasible_planned(alloc, plan: DimensionPlan) -> FeasibilityResult:
    shares = _share_getter(alloc)
    return _check_against(shares, plan.rhs, _selections(subset_masks(plan.m)))


def build_exclusive_subspaces(
    received, eve: Subspace, rng: np.random.Generator | None = None
) -> SubspaceFamily:
    """For each nonempty subset J, subtract from the subset's common subspace
    everything it shares with non-members and with the eavesdropper.

    This is the omniscient construction (it consumes the eavesdropper's
    subspace), used by test oracles and audits; the protocol itself plans
    dimensions and samples uniformly instead.
    """
    received = list(received)
    m = len(received)
    out: dict[int, Subspace] = {}
    for mask in subset_masks(m):
        members = mask_members(mask)
        common = received[members[0]]
        for i in members[1:]:
            common = common.intersect(received[i])
        shared = eve.intersect(common)
        for i in range(m):
            if i not in members:
                shared = shared + received[i].intersect(common)
        out[mask] = common.complement(shared, rng)
    return SubspaceFamily(m, out)


def _lp_rhs_actual(family: SubspaceFamily, eve: Subspace) -> dict[tuple[int, ...], int]:
    rhs: dict[tuple[int, ...], int] = {}
    for sel in _selections(family.masks()):
        total = eve
        for mask in sel:
            total = total + family[mask]
        rhs[sel] = total.dim - eve.dim
    return rhs


def _solve_maxmin(m: int, rhs_map: dict[tuple[int, ...], int]) -> tuple[SubsetAllocation, Fraction]:
    """Epigraph form: maximize t subject to t <= per-terminal share totals and
    the selection caps; exact rational optimum."""
    masks = subset_masks(m)
    nvar = len(masks) + 1  # shares then t
    col = {mask: j for j, mask in enumerate(masks)}
    c = [Fraction(0)] * nvar
    c[-1] = Fraction(1)
    rows = []
    b = []
    for r in range(m):
        row = [Fraction(0)] * nvar
        row[-1] = Fraction(1)
        for mask in masks:
            if mask >> r & 1:
                row[col[mask]] = Fraction(-1)
        rows.append(row)
        b.append(Fraction(0))
    for sel, cap in sorted(rhs_map.items()):
        row = [Fraction(0)] * nvar
        for mask in sel:
            row[col[mask]] = Fraction(1)
        rows.append(row)
        b.append(Fraction(cap))
    res = maximize(c, rows, b)
    # Exact optimality certificate: dual feasibility plus strong duality.
    assert all(y >= 0 for y in res.dual)
    assert all(
        sum(rows[i][j] * res.dual[i] for i in range(len(rows))) >= c[j] for j in range(nvar)
    )
    assert sum(bi * yi for bi, yi in zip(b, res.dual)) == res.value
    alloc = SubsetAllocation(m, {mask: res.x[col[mask]] for mask in masks})
    return alloc, res.value


def solve_allocation_lp(family: SubspaceFamily, eve: Subspace) -> tuple[SubsetAllocation, Fraction]:
    """Optimal subset allocation for actual subspaces; m <= 3 (constraint count
    is 2^(2^m - 1) - 1).  Returns (allocation, min-terminal value)."""
    if family.m > 3:
        raise ValueError(f"exact LP solve is limited to m <= 3, got m={family.m}")
    return _solve_maxmin(family.m, _lp_rhs_actual(family, eve))


def solve_allocation_lp_planned(plan: DimensionPlan) -> tuple[SubsetAllocation, Fraction]:
    """Optimal allocation against generic-position planned dimensions."""
    if plan.m > 3:
        raise ValueError(f"exact LP solve is limited to m <= 3, got m={plan.m}")
    rhs = {sel: plan.rhs(sel) for sel in _selections(subset_masks(plan.m))}
    return _solve_maxmin(plan.m, rhs)


class InfeasibleAllocationError(ValueError):
    def __init__(self, result: FeasibilityResult):
        self.witness = result.witness
        super().__init__(
            f"allocation infeasible: selection {result.witness} needs {result.lhs} "
            f"but only {result.rhs} is available"
        )


def _uniform_inside(sub: Subspace, dim: int, rng: np.random.Generator) -> Subspace:
    """Uniformly random dim-dimensional subspace of ``sub``."""
    if dim > sub.dim:
        raise ValueError(f"cannot pick dim {dim} inside a dim-{sub.dim} subspace")
    if dim == 0:
        return zero_subspace(sub.ambient_dim, sub.ctx)
    while True:
        coeff = random_matrix(dim, sub.dim, sub.ctx, rng)
        if rank(coeff) == dim:
            return span_of(mat_mul(coeff, sub.basis))


def extract_secure_subspaces(
    family: SubspaceFamily,
    counts: dict[int, int],
    eve,
    rng: np.random.Generator,
    max_tries: int = 500,
) -> dict[int, Subspace]:
    """Pick counts[J] dimensions inside each exclusive subspace so that all
    picks are mutually independent.

    With ``eve`` a Subspace (test mode) the picks are additionally certified
    independent of the eavesdropper's subspace, exactly.  With ``eve`` None or
    an int (the realistic mode: only the eavesdropper's dimension is known)
    only mutual independence is certified here; independence from the
    eavesdropper then holds with probability 1 - O(1/q) and is checked by the
    session audit.

    Raises:
        InfeasibleAllocationError: if the requested counts violate the
            verifiable feasibility constraints (with a witness selection).
        RuntimeError: if no valid pick is found within max_tries.
    """
    _check_shares_covered(counts, family)
    counts = {mask: int(counts.get(mask, 0)) for mask in family.masks()}
    if any(v < 0 for v in counts.values()):
        raise ValueError("extraction counts must be nonnegative")
    exact = isinstance(eve, Subspace)
    if exact:
        feas = check_allocation_feasible(counts, family, eve)
    else:
        # Source-side check: shares within any selection cannot exceed the
        # dimension of the selection's joint span.
        def rhs(sel):
            total = None
            for mask in sel:
                total = family[mask] if total is None else total + family[mask]
            return total.dim

        feas = _check_against(_share_getter(counts), rhs, _selections(family.masks()))
    if not feas.ok:
        raise InfeasibleAllocationError(feas)

    want = sum(counts.values())
    for _ in range(max_tries):
        picks = {mask: _uniform_inside(family[mask], counts[mask], rng) for mask in family.masks()}
        bases = [picks[mask].basis for mask in family.masks() if counts[mask] > 0]
        if bases:
            stacked = vstack(bases)
            if exact:
                ok = rank(vstack([eve.basis, stacked])) == eve.dim + want
            else:
                ok = rank(stacked) == want
        else:
            ok = True
        if ok:
            return picks
    raise RuntimeError(f"no valid extraction found in {max_tries} tries")


def certify_zero_leakage(key_vectors: MatrixFq, eve_matrix: MatrixFq) -> bool:
    """Rank-additivity certificate: the key vectors' span and the
    eavesdropper's span meet only in zero, which makes uniformly padded key
    symbols exactly independent of the eavesdropper's observations."""
    if key_vectors.rows == 0 or eve_matrix.rows == 0:
        return True
    return rank(vstack([key_vectors, eve_matrix])) == rank(key_vectors) + rank(eve_matrix)


def exhaustive_leakage_check(
    key_coeffs: MatrixFq, eve_coeffs: MatrixFq, ell: int
) -> tuple[bool, float]:
    """Enumerate every message block M and test the key vectors' joint
    distribution against the eavesdropper's observation, exactly.

    The source sends [I | M]; key vectors are key_coeffs @ [I | M] and the
    eavesdropper sees eve_coeffs @ [I | M].  Returns (independent, mi_bits)
    where ``independent`` is an exact conditional-distribution equality check
    over all M, and mi_bits the (float) mutual information.

    Gated to tiny instances: q^(n_a * (ell - n_a)) <= 2**16 message blocks.
    """
    ctx = key_coeffs.ctx
    if eve_coeffs.ctx != ctx:
        raise ValueError("field mismatch between key and eavesdropper coefficients")
    n_a = key_coeffs.cols
    if eve_coeffs.cols != n_a:
        raise ValueError("coefficient widths must agree")
    if ell <= n_a:
        raise ValueError(f"packet length {ell} must exceed the packet count {n_a}")
    n_cells = n_a * (ell - n_a)
    total = ctx.q**n_cells
    if total > 2**16:
        raise OverflowError(f"message space {ctx.q}^{n_cells} too large to enumerate")

    counts: dict[tuple[bytes, bytes], int] = {}
    y_counts: dict[bytes, int] = {}
    e_counts: dict[bytes, int] = {}
    for values in itertools.product(range(ctx.q), repeat=n_cells):
        m_block = MatrixFq(np.array(values, dtype=np.int64).reshape(n_a, ell - n_a), ctx)
        x_a = np.hstack([np.eye(n_a, dtype=np.int64), m_block.arr])
        y = np.mod(key_coeffs.arr @ x_a, ctx.q).tobytes()
        e = np.mod(eve_coeffs.arr @ x_a, ctx.q).tobytes()
        counts[(y, e)] = counts.get((y, e), 0) + 1
        y_counts[y] = y_counts.get(y, 0) + 1
        e_counts[e] = e_counts.get(e, 0) + 1

    independent = all(
        c * total == y_counts[y] * e_counts[e] for (y, e), c in counts.items()
    )
    mi = 0.0
    for (y, e), c in counts.items():
        mi += (c / total) * math.log2((c * total) / (y_counts[y] * e_counts[e]))
    return independent, max(mi, 0.0)


# --------------------------------------------------------------------------
# Session protocol
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotRecord:
    message: MatrixFq
    source: MatrixFq
    obs: SlotObservation


@dataclass(frozen=True)
class SessionTranscript:
    """Everything a session emitted.  Public messages (terminal transfer
    matrices, coefficient disclosures, the combination code and its padded
    ciphers) are exactly what the eavesdropper also receives."""

    params: ChannelParams
    n_slots: int
    slots: tuple[SlotRecord, ...]
    disclosures: dict[tuple[int, int], MatrixFq] = field(default_factory=dict)
    multicast_code: MatrixFq | None = None
    ciphers: MatrixFq | None = None


@dataclass(frozen=True)
class KeyShare:
    subset_keys: dict[int, MatrixFq] = field(default_factory=dict)
    terminal_subset_keys: dict[tuple[int, int], MatrixFq] = field(default_factory=dict)
    final_key: MatrixFq | None = None
    terminal_final: tuple = ()


@dataclass(frozen=True)
class AuditReport:
    degenerate: bool
    reasons: tuple[str, ...]
    subset_agreement: bool | None
    final_agreement: bool | None
    leakage_certificate: bool | None
    slotwise_feasible: bool | None
    scaled_feasible: bool | None
    achieved_per_slot: Fraction
    key_blocks: int


@dataclass(frozen=True)
class SessionResult:
    transcript: SessionTranscript
    keys: KeyShare
    audit: AuditReport

    def to_json_dict(self) -> dict:
        return _session_to_json(self)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SessionResult":
        return _session_from_json(doc)


def _mpart_sum(packet_rows: MatrixFq, n_slots: int, ell: int, n_a: int) -> MatrixFq:
    """Sum the per-slot message-part column blocks of session packet rows."""
    q = packet_rows.ctx.q
    out = np.zeros((packet_rows.rows, ell - n_a), dtype=np.int64)
    for t in range(n_slots):
        out = np.mod(out + packet_rows.arr[:, t * ell + n_a : (t + 1) * ell], q)
    return MatrixFq(out, packet_rows.ctx)


def _vandermonde(rows: int, cols: int, ctx: FieldCtx) -> MatrixFq:
    """rows x cols matrix with row j = (j^0, ..., j^(cols-1)); any ``cols``
    rows are linearly independent when all row indices are distinct (requires
    rows <= q)."""
    out = np.zeros((rows, cols), dtype=np.int64)
    for j in range(rows):
        v = 1
        for i in range(cols):
            out[j, i] = v
            v = (v * j) % ctx.q
    return MatrixFq(out, ctx)


def run_session(
    params: ChannelParams,
    n_slots: int,
    alloc: SubsetAllocation,
    rng: np.random.Generator,
    *,
    messages: list[MatrixFq] | None = None,
    final_key: MatrixFq | None = None,
) -> SessionResult:
    """Run one full key-agreement session.

    The allocation must be feasible for the planned dimensions
    (plan_dimensions); infeasible requests are refused with a witness.
    ``messages`` and ``final_key`` are replay hooks: they override the
    source's secret draws while the channel and protocol randomness streams
    stay on the same seeded path (used by exhaustive leakage audits).

    Returns a SessionResult whose audit flags degenerate sessions (a
    generic-position dimension event failed, probability O(1/q)); degenerate
    sessions carry an empty KeyShare.
    """
    if alloc.m != params.m:
        raise ValueError(f"allocation is for m={alloc.m}, channel has m={params.m}")
    if n_slots < 0:
        raise ValueError("slot count must be nonnegative")
    if messages is not None and len(messages) != n_slots:
        raise ValueError(f"need {n_slots} message blocks, got {len(messages)}")
    plan = plan_dimensions(params)
    feas = check_allocation_feasible_planned(alloc, plan)
    if not feas.ok:
        raise InfeasibleAllocationError(feas)

    msg_rng, chan_rng, proto_rng = rng.spawn(3)
    ctx = params.ctx
    n_a, ell, m = params.n_a, params.ell, params.m
    masks = subset_masks(m)

    if n_slots == 0:
        transcript = SessionTranscript(params, 0, ())
        audit = AuditReport(False, (), None, None, None, None, None, Fraction(0), 0)
        return SessionResult(transcript, KeyShare(terminal_final=(None,) * m), audit)

    slots: list[SlotRecord] = []
    for t in range(n_slots):
        if messages is not None:
            m_block = messages[t]
        else:
            m_block = random_matrix(n_a, ell - n_a, ctx, msg_rng)
        x_a = make_source_matrix(m_block, params)
        obs = broadcast_slot(x_a, params, chan_rng)
        slots.append(SlotRecord(m_block, x_a, obs))

    def _bail(reasons: tuple[str, ...]) -> SessionResult:
        transcript = SessionTranscript(params, n_slots, tuple(slots))
        audit = AuditReport(True, reasons, None, None, None, None, None, Fraction(0), 0)
        return SessionResult(transcript, KeyShare(terminal_final=(None,) * m), audit)

    # Source-side view: received subspaces in source coordinates come from the
    # published transfer matrices ([I | M] has full rank, so the coefficient
    # map is faithful); actual packets are never published.
    reasons: list[str] = []
    per_slot_received: list[list[Subspace]] = []
    per_slot_common: list[dict[int, Subspace]] = []
    for t, rec in enumerate(slots):
        received = [span_of(f) for f in rec.obs.transfers]
        common: dict[int, Subspace] = {}
        for mask in masks:
            members = mask_members(mask)
            sub = received[members[0]]
            for i in members[1:]:
                sub = sub.intersect(received[i])
            common[mask] = sub
            if sub.dim != plan.inter_dims[mask]:
                reasons.append(
                    f"slot {t}: subset {mask} common dim {sub.dim} != planned {plan.inter_dims[mask]}"
                )
        per_slot_received.append(received)
        per_slot_common.append(common)
    if reasons:
        return _bail(tuple(reasons))

    # Per-slot exclusive subspaces: uniform picks of the planned dimension.
    per_slot_exclusive: list[dict[int, Subspace]] = []
    for t in range(n_slots):
        picks = {
            mask: _uniform_inside(per_slot_common[t][mask], plan.exclusive_dims[mask], proto_rng)
            for mask in masks
        }
        per_slot_exclusive.append(picks)

    # Glue slots with direct sums (session coordinate space of dim N * n_a).
    def _chain(parts: list[Subspace]) -> Subspace:
        out = parts[0]
        for p in parts[1:]:
            out = direct_sum(out, p)
        return out

    session_exclusive = SubspaceFamily(
        m, {mask: _chain([per_slot_exclusive[t][mask] for t in range(n_slots)]) for mask in masks}
    )
    counts = alloc.floor_scaled(n_slots)
    try:
        picks = extract_secure_subspaces(session_exclusive, counts, None, proto_rng)
    except (InfeasibleAllocationError, RuntimeError) as exc:
        return _bail((f"extraction failed: {exc}",))

    # Public disclosures: coefficients expressing each subset's extracted
    # basis over every member terminal's received rows.
    f_stacks = [
        block_diag([rec.obs.transfers[r] for rec in slots]) for r in range(m)
    ]
    disclosures: dict[tuple[int, int], MatrixFq] = {}
    for mask in masks:
        if counts[mask] == 0:
            continue
        for r in mask_members(mask):
            w = solve_in_rowspan(picks[mask].basis, f_stacks[r])
            if w is None:
                return _bail((f"subset {mask} basis not in terminal {r} span",))
            disclosures[(mask, r)] = w

    # Key symbols: one (ell - n_a)-symbol block per extracted basis vector.
    m_stack = vstack([rec.message for rec in slots])
    subset_keys = {
        mask: mat_mul(picks[mask].basis, m_stack) for mask in masks if counts[mask] > 0
    }
    x_r_stacks = [block_diag([rec.obs.received[r] for rec in slots]) for r in range(m)]
    terminal_subset_keys: dict[tuple[int, int], MatrixFq] = {}
    for (mask, r), w in disclosures.items():
        packets = mat_mul(w, x_r_stacks[r])
        terminal_subset_keys[(mask, r)] = _mpart_sum(packets, n_slots, ell, n_a)

    # Multicast step: one-time-pad a linear combination code over the subset
    # key blocks so every terminal decodes a common key of
    # min_r sum_{J containing r} counts[J] blocks.
    order = [mask for mask in masks if counts[mask] > 0]
    offsets: dict[int, int] = {}
    run = 0
    for mask in order:
        offsets[mask] = run
        run += counts[mask]
    total_rows = run
    cut = [sum(counts[mask] for mask in masks if mask >> r & 1) for r in range(m)]
    key_blocks = min(cut) if m else 0

    code = None
    ciphers = None
    final = None
    terminal_final: list[MatrixFq | None] = [None] * m
    if key_blocks > 0:
        if final_key is not None:
            final = final_key
        else:
            final = random_matrix(key_blocks, ell - n_a, ctx, msg_rng)
        rows_for = [
            [offsets[mask] + j for mask in order if mask >> r & 1 for j in range(counts[mask])]
            for r in range(m)
        ]
        if total_rows <= ctx.q:
            code = _vandermonde(total_rows, key_blocks, ctx)
        else:
            for _ in range(200):
                cand = random_matrix(total_rows, key_blocks, ctx, proto_rng)
                if all(
                    rank(MatrixFq(cand.arr[rows_for[r]], ctx)) == key_blocks for r in range(m)
                ):
                    code = cand
                    break
            if code is None:
                return _bail(("no decodable combination code found",))
        pads = vstack([subset_keys[mask] for mask in order])
        ciphers = MatrixFq(np.mod(mat_mul(code, final).arr + pads.arr, ctx.q), ctx)
        for r in range(m):
            idx = rows_for[r]
            pads_r = vstack([terminal_subset_keys[(mask, r)] for mask in order if mask >> r & 1])
            cipher_r = MatrixFq(ciphers.arr[idx], ctx)
            rhs_r = MatrixFq(np.mod(cipher_r.arr - pads_r.arr, ctx.q), ctx)
            sub_code = MatrixFq(code.arr[idx], ctx)
            sol = solve_in_rowspan(rhs_r.transpose(), sub_code.transpose())
            if sol is None:
                return _bail((f"terminal {r} could not decode the combination code",))
            terminal_final[r] = sol.transpose()

    transcript = SessionTranscript(
        params, n_slots, tuple(slots), disclosures, code, ciphers
    )

    # Audit (harness-side omniscience): agreement, feasibility inheritance,
    # and the zero-leakage certificate against the eavesdropper's full view.
    subset_agreement = all(
        terminal_subset_keys[(mask, r)] == subset_keys[mask]
        for (mask, r) in terminal_subset_keys
    )
    final_agreement = key_blocks == 0 or all(
        terminal_final[r] == final for r in range(m)
    )

    eve_received = [span_of(rec.obs.eve_transfer) for rec in slots]
    slotwise = all(
        check_allocation_feasible(
            alloc, SubspaceFamily(m, per_slot_exclusive[t]), eve_received[t]
        ).ok
        for t in range(n_slots)
    )
    session_eve = _chain(eve_received)
    scaled_ok = check_allocation_feasible(counts, session_exclusive, session_eve).ok

    if total_rows > 0:
        coeff_all = vstack([picks[mask].basis for mask in order])
        x_a_stack = block_diag([rec.source for rec in slots])
        key_packets = mat_mul(coeff_all, x_a_stack)
        eve_packets = block_diag([rec.obs.eve_received for rec in slots])
        cert = certify_zero_leakage(key_packets, eve_packets)
    else:
        cert = True

    if not cert:
        transcript = SessionTranscript(params, n_slots, tuple(slots), disclosures, code, ciphers)
        audit = AuditReport(
            True,
            ("leakage certificate failed, keys withheld",),
            subset_agreement,
            final_agreement,
            False,
            slotwise,
            scaled_ok,
            Fraction(0),
            0,
        )
        return SessionResult(transcript, KeyShare(terminal_final=(None,) * m), audit)

    audit = AuditReport(
        False,
        (),
        subset_agreement,
        final_agreement,
        True,
        slotwise,
        scaled_ok,
        Fraction(key_blocks, n_slots),
        key_blocks,
    )
    keys = KeyShare(subset_keys, terminal_subset_keys, final, tuple(terminal_final))
    return SessionResult(transcript, keys, audit)


# --------------------------------------------------------------------------
# Transcript serialization (versioned JSON for replay and comparison)
# --------------------------------------------------------------------------

SCHEMA_VERSION = 1


def _mat(m: MatrixFq | None):
    if m is None:
        return None
    return {"rows": m.rows, "cols": m.cols, "entries": m.tolist()}


def _unmat(doc, ctx: FieldCtx) -> MatrixFq | None:
    if doc is None:
        return None
    arr = np.array(doc["entries"], dtype=np.int64).reshape(doc["rows"], doc["cols"])
    return MatrixFq(arr, ctx)


def _session_to_json(result: SessionResult) -> dict:
    p = result.transcript.params
    tr = result.transcript
    audit = result.audit
    return {
        "schema_version": SCHEMA_VERSION,
        "params": {"q": p.ctx.q, "ell": p.ell, "na": p.n_a, "n": list(p.n), "ne": p.n_e},
        "slots": [
            {
                "message": _mat(rec.message),
                "source": _mat(rec.source),
                "transfers": [_mat(f) for f in rec.obs.transfers],
                "received": [_mat(x) for x in rec.obs.received],
                "eve_transfer": _mat(rec.obs.eve_transfer),
                "eve_received": _mat(rec.obs.eve_received),
            }
            for rec in tr.slots
        ],
        "public_messages": {
            "transfers": [[_mat(f) for f in rec.obs.transfers] for rec in tr.slots],
            "disclosures": [
                {"subset": mask, "terminal": r, "coeffs": _mat(w)}
                for (mask, r), w in sorted(tr.disclosures.items())
            ],
            "multicast_code": _mat(tr.multicast_code),
            "ciphers": _mat(tr.ciphers),
        },
        "keys": {
            "subset_keys": {str(mask): _mat(k) for mask, k in sorted(result.keys.subset_keys.items())},
            "final_key": _mat(result.keys.final_key),
            "terminal_final": [_mat(k) for k in result.keys.terminal_final],
        },
        "audit": {
            "degenerate": audit.degenerate,
            "reasons": list(audit.reasons),
            "subset_agreement": audit.subset_agreement,
            "final_agreement": audit.final_agreement,
            "leakage_certificate": audit.leakage_certificate,
            "slotwise_feasible": audit.slotwise_feasible,
            "scaled_feasible": audit.scaled_feasible,
            "achieved_per_slot": str(audit.achieved_per_slot),
            "key_blocks": audit.key_blocks,
        },
    }


def _session_from_json(doc: dict) -> SessionResult:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported transcript schema {doc.get('schema_version')}")
    pd = doc["params"]
    ctx = FieldCtx(pd["q"])
    params = ChannelParams(ctx, pd["ell"], pd["na"], tuple(pd["n"]), pd["ne"])
    slots = []
    for s in doc["slots"]:
        obs = SlotObservation(
            tuple(_unmat(f, ctx) for f in s["transfers"]),
            tuple(_unmat(x, ctx) for x in s["received"]),
            _unmat(s["eve_transfer"], ctx),
            _unmat(s["eve_received"], ctx),
        )
        slots.append(SlotRecord(_unmat(s["message"], ctx), _unmat(s["source"], ctx), obs))
    pub = doc["public_messages"]
    disclosures = {
        (d["subset"], d["terminal"]): _unmat(d["coeffs"], ctx) for d in pub["disclosures"]
    }
    transcript = SessionTranscript(
        params,
        len(slots),
        tuple(slots),
        disclosures,
        _unmat(pub["multicast_code"], ctx),
        _unmat(pub["ciphers"], ctx),
    )
    kd = doc["keys"]
    keys = KeyShare(
        {int(mask): _unmat(k, ctx) for mask, k in kd["subset_keys"].items()},
        {},
        _unmat(kd["final_key"], ctx),
        tuple(_unmat(k, ctx) for k in kd["terminal_final"]),
    )
    ad = doc["audit"]
    audit = AuditReport(
        ad["degenerate"],
        tuple(ad["reasons"]),
        ad["subset_agreement"],
        ad["final_agreement"],
        ad["leakage_certificate"],
        ad["slotwise_feasible"],
        ad["scaled_feasible"],
        Fraction(ad["achieved_per_slot"]),
        ad["key_blocks"],
    )
    return SessionResult(transcript, keys, audit)


def save_session(result: SessionResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_json_dict(), fh, sort_keys=True, indent=1)


def load_session(path) -> SessionResult:
    with open(path) as fh:
        return SessionResult.from_json_dict(json.load(fh))
