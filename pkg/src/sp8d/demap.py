"""Soft demappers for Boolean-equation formats.

Four demappers share one LLR-domain interface (n observations in, m
information-bit LLRs out, positive favors bit 0):

* ``demap_1d``   - observations passed through unchanged (per-dimension).
* ``demap_mlm``  - exhaustive max-log demapping against the full codebook.
* ``demap_ms``   - one extrinsic min-sum pass on the parity Tanner graph;
  only valid when every parity equation is affine.
* ``demap_posd`` - Chase-style candidate demapping: enumerate all bit
  patterns over the p least reliable information positions, extend each
  through the parity equations, score candidates by analog weight, and
  read LLRs off the per-side weight minima.

The analog weight W(c) = sum of |L_i| over positions where c disagrees
with the hard decision differs from the scaled squared Euclidean metric
||y - s(c)||^2 / (2 sigma^2) only by a candidate-independent constant, so
max-log LLRs from either metric coincide.

Every demapper has a scalar reference implementation (instrumentable for
operation counting) and a vectorized ``*_batch`` twin used by the Monte
Carlo harness; tests pin the two against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import beq
from .beq import FormatSpec, collect_vars, eval_expr, eval_expr_batch
from .modem import build_codebook, Codebook

__all__ = [
    "NonlinearFormatError", "OpCount", "OpCounter", "PosdParams",
    "hard_decide", "hard_decide_batch", "analog_weight",
    "select_lrp", "select_comparison_bounds",
    "demap_1d", "demap_1d_batch",
    "demap_mlm", "demap_mlm_batch",
    "demap_ms", "demap_ms_batch",
    "demap_posd", "demap_posd_batch",
    "count_ops",
]


class NonlinearFormatError(ValueError):
    """Min-sum demapping requested for a format with non-affine parities."""


@dataclass(frozen=True)
class OpCount:
    """Operation totals for demapping one frame."""

    logical: int
    additions: int
    comparisons: int


class OpCounter:
    """Mutable tally of GF(2) ops, real additions and real comparisons.

    Convention: one count per executed GF(2) operator node, per real
    add/subtract, and per compare-select; absolute value, sign tests and
    negation are free (sign-magnitude datapath). Offset additions fused
    into a compare-select unit are billed as the comparison.
    """

    __slots__ = ("logical", "additions", "comparisons")

    def __init__(self):
        self.logical = 0
        self.additions = 0
        self.comparisons = 0

    def log(self, k: int = 1) -> None:
        self.logical += k

    def add(self, k: int = 1) -> None:
        self.additions += k

    def cmp(self, k: int = 1) -> None:
        self.comparisons += k

    def snapshot(self) -> OpCount:
        return OpCount(self.logical, self.additions, self.comparisons)


@dataclass(frozen=True)
class PosdParams:
    """Number of least reliable positions to process (0 <= p <= m)."""

    p: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be >= 0")


# ---------------------------------------------------------------------------
# Shared primitives
# ---------------------------------------------------------------------------

def hard_decide(obs) -> np.ndarray:
    """Per-position hard decision; exact zeros decide to bit 0."""
    return (np.asarray(obs, dtype=np.float64) < 0).astype(np.uint8)


def hard_decide_batch(obs: np.ndarray) -> np.ndarray:
    return (obs < 0).astype(np.uint8)


def analog_weight(codeword, obs) -> float:
    """Sum of |L_i| over positions where the codeword disagrees with the
    hard decision on the observations."""
    obs = np.asarray(obs, dtype=np.float64)
    cw = np.asarray(codeword, dtype=np.uint8)
    mismatch = cw != hard_decide(obs)
    return float(np.abs(obs)[mismatch].sum())


def _merge_sort(keys, idxs, tally):
    """Stable merge sort of index list by keys; tally[0] counts comparisons."""
    if len(idxs) <= 1:
        return idxs
    mid = len(idxs) // 2
    left = _merge_sort(keys, idxs[:mid], tally)
    right = _merge_sort(keys, idxs[mid:], tally)
    out = []
    i = j = 0
    while i < len(left) and j < len(right):
        tally[0] += 1
        if keys[left[i]] <= keys[right[j]]:
            out.append(left[i])
            i += 1
        else:
            out.append(right[j])
            j += 1
    out.extend(left[i:])
    out.extend(right[j:])
    return out


def select_comparison_bounds(m: int) -> tuple[int, int]:
    """Best/worst-case comparison counts of the merge sort over m keys."""
    if m <= 1:
        return 0, 0
    lo = m // 2
    hi = m - lo
    b1, w1 = select_comparison_bounds(lo)
    b2, w2 = select_comparison_bounds(hi)
    return b1 + b2 + min(lo, hi), w1 + w2 + m - 1


def select_lrp(obs, m: int, p: int, counter: OpCounter | None = None):
    """The p least reliable information positions (1-based), plus the
    number of comparisons the merge sort spent.

    Positions are returned in ascending reliability order; ties break
    toward the lower index (stable sort).
    """
    if p > m:
        raise ValueError(f"p={p} exceeds m={m}")
    mags = np.abs(np.asarray(obs, dtype=np.float64)[:m])
    if p == 0:
        return [], 0
    tally = [0]
    order = _merge_sort(mags, list(range(m)), tally)
    if counter is not None:
        counter.cmp(tally[0])
    return [i + 1 for i in order[:p]], tally[0]


# ---------------------------------------------------------------------------
# Scalar demappers (reference implementations, instrumentable)
# ---------------------------------------------------------------------------

def demap_1d(obs, spec: FormatSpec, counter: OpCounter | None = None) -> np.ndarray:
    """Observations at the information positions, unchanged."""
    return np.asarray(obs, dtype=np.float64)[: spec.m].copy()


@lru_cache(maxsize=None)
def _independent_info_bits(spec: FormatSpec) -> frozenset[int]:
    """Info positions that appear in no parity equation; their observation
    is already the complete LLR (codewords pair up across such a bit)."""
    used = frozenset().union(*(collect_vars(e) for _, e in spec.parity_defs))
    return frozenset(k for k in range(1, spec.m + 1) if k not in used)


def demap_mlm(obs, spec: FormatSpec, codebook: Codebook,
              counter: OpCounter | None = None) -> np.ndarray:
    """Exhaustive max-log demapping: LLR_k = min W over codewords with
    bit k = 1, minus min W over codewords with bit k = 0.

    Naive reference datapath: each output bit re-accumulates every
    codeword's weight as a fresh n-term sum.
    """
    obs = np.asarray(obs, dtype=np.float64)
    n, m = spec.n, spec.m
    h = hard_decide(obs)
    mags = np.abs(obs)
    independent = _independent_info_bits(spec)
    out = np.empty(m, dtype=np.float64)
    for k in range(1, m + 1):
        if k in independent:
            out[k - 1] = obs[k - 1]
            continue
        best = [None, None]  # min weight with bit k = 0 / 1
        for cw in codebook.codewords:
            w = 0.0
            for i in range(n):
                d = int(cw[i]) ^ int(h[i])
                if counter is not None:
                    counter.log()
                if d:
                    w += mags[i]
            if counter is not None:
                counter.add(n - 1)
            side = int(cw[k - 1])
            if best[side] is None:
                best[side] = w
            else:
                if counter is not None:
                    counter.cmp()
                if w < best[side]:
                    best[side] = w
        if best[0] is None or best[1] is None:
            raise ValueError(f"bit {k} takes only one value over the codebook")
        out[k - 1] = best[1] - best[0]
        if counter is not None:
            counter.add()
    return out


@lru_cache(maxsize=None)
def _ms_checks(spec: FormatSpec):
    """Tanner-graph checks (constant, member positions, parity target) for
    an all-affine format; raises NonlinearFormatError otherwise."""
    checks = []
    zeros = np.zeros(spec.m, dtype=np.uint8)
    for target, expr in spec.parity_defs:
        if not beq.is_affine(expr, spec.m):
            raise NonlinearFormatError(
                f"format {spec.name}: parity b{target} is nonlinear; min-sum demapping needs affine equations")
        c0 = eval_expr(expr, zeros)
        support = []
        for j in range(1, spec.m + 1):
            e = zeros.copy()
            e[j - 1] = 1
            if eval_expr(expr, e) != c0:
                support.append(j)
        checks.append((c0, tuple(support), target))
    return tuple(checks)


def demap_ms(obs, spec: FormatSpec, counter: OpCounter | None = None) -> np.ndarray:
    """One extrinsic min-sum pass over the parity checks.

    Each affine parity b_t = c0 ^ (xor of b_j, j in S) is a check over
    S + {t}; the constant flips the extrinsic sign. Output for info bit k:
    L_k plus the extrinsic from every check containing it.
    """
    checks = _ms_checks(spec)
    obs = np.asarray(obs, dtype=np.float64)
    out = obs[: spec.m].copy()
    for c0, support, target in checks:
        members = support + (target,)
        for k in support:
            others = [j for j in members if j != k]
            sign = -1.0 if c0 else 1.0
            mag = None
            for j in others:
                if obs[j - 1] < 0:
                    sign = -sign
                a = abs(obs[j - 1])
                if mag is None:
                    mag = a
                else:
                    if counter is not None:
                        counter.cmp()
                    if a < mag:
                        mag = a
            if counter is not None:
                counter.log(len(others) - 1 + (1 if c0 else 0))
                counter.add()
            out[k - 1] += sign * mag
    return out


def demap_posd(obs, spec: FormatSpec, params: PosdParams,
               counter: OpCounter | None = None) -> np.ndarray:
    """Candidate demapping over the p least reliable information positions.

    1. Hard-decide the observations; sort info magnitudes to pick the LRPs.
    2. Enumerate all 2^p bit patterns over the LRPs, extend each through
       the parity equations, and score with the analog weight.
    3. For each LRP, LLR = (min weight with that bit 1) - (min with bit 0);
       every other info position keeps its raw observation.

    Weights are banked: flip-magnitude subset sums over the p-1 more
    reliable LRPs plus per-class parity sums; the remaining offsets ride on
    the compare-select units (see OpCounter for the billing convention).
    """
    p = params.p
    m, n = spec.m, spec.n
    if p > m:
        raise ValueError(f"p={p} exceeds m={m}")
    obs = np.asarray(obs, dtype=np.float64)
    out = obs[:m].copy()
    if p == 0:
        return out

    h = hard_decide(obs)
    mags = np.abs(obs)
    lrps, _ = select_lrp(obs, m, p, counter)
    # Flip-magnitude bank over the p-1 more reliable LRPs (DP over subsets).
    rest = lrps[1:]
    bank = np.zeros(2 ** (p - 1), dtype=np.float64)
    for mask in range(1, 2 ** (p - 1)):
        low = mask & -mask
        if mask == low:
            bank[mask] = mags[rest[low.bit_length() - 1] - 1]
        else:
            bank[mask] = bank[mask ^ low] + bank[low]
            if counter is not None:
                counter.add()

    # Parity-class magnitude sums (DP over mismatch subsets).
    q = n - m
    cls = np.zeros(2 ** q, dtype=np.float64)
    for mask in range(1, 2 ** q):
        low = mask & -mask
        if mask == low:
            cls[mask] = mags[m + low.bit_length() - 1]
        else:
            cls[mask] = cls[mask ^ low] + cls[low]
            if counter is not None:
                counter.add()

    j1 = lrps[0]
    best = [[None, None] for _ in range(p)]
    u = h[:m].copy()
    for pattern in range(2 ** p):
        f1 = pattern & 1
        fmask = pattern >> 1
        u[:] = h[:m]
        if f1:
            u[j1 - 1] ^= 1
        for k in range(p - 1):
            if (fmask >> k) & 1:
                u[rest[k] - 1] ^= 1
        clsmask = 0
        for t, (target, expr) in enumerate(spec.parity_defs):
            bit = eval_expr(expr, u, counter)
            if counter is not None:
                counter.log()  # mismatch XOR against the hard decision
            if bit ^ int(h[target - 1]):
                clsmask |= 1 << t
        # Offsets fold into the compare-select stage; not billed as adds.
        w = bank[fmask] + (mags[j1 - 1] if f1 else 0.0) + cls[clsmask]
        for k in range(p):
            side = int(u[lrps[k] - 1])
            if best[k][side] is None:
                best[k][side] = w
            else:
                if counter is not None:
                    counter.cmp()
                if w < best[k][side]:
                    best[k][side] = w

    for k in range(p):
        out[lrps[k] - 1] = best[k][1] - best[k][0]
        if counter is not None:
            counter.add()
    return out


def count_ops(demapper: str, spec: FormatSpec, obs, params: PosdParams | None = None,
              codebook: Codebook | None = None) -> OpCount:
    """Run one instrumented demap and return its operation totals.

    Logical and addition totals are input-independent for a fixed
    (format, demapper, p); comparison totals vary with the sort.
    """
    counter = OpCounter()
    if demapper == "1d":
        demap_1d(obs, spec, counter)
    elif demapper == "mlm":
        if codebook is None:
            codebook = _cached_codebook(spec)
        demap_mlm(obs, spec, codebook, counter)
    elif demapper == "ms":
        demap_ms(obs, spec, counter)
    elif demapper == "posd":
        if params is None:
            raise ValueError("posd needs PosdParams")
        demap_posd(obs, spec, params, counter)
    else:
        raise ValueError(f"unknown demapper {demapper!r}")
    return counter.snapshot()


@lru_cache(maxsize=None)
def _cached_codebook(spec: FormatSpec) -> Codebook:
    return build_codebook(spec)


# ---------------------------------------------------------------------------
# Batch demappers (vectorized over frames)
# ---------------------------------------------------------------------------

def demap_1d_batch(obs: np.ndarray, spec: FormatSpec) -> np.ndarray:
    return np.asarray(obs, dtype=np.float64)[:, : spec.m].copy()


def demap_mlm_batch(obs: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Vectorized exhaustive max-log demapping for (N, n) observations.

    Uses Q(c) = -0.5 * <L, 1 - 2c>, which equals the analog weight up to a
    candidate-independent constant, so per-bit min differences match.
    """
    obs = np.asarray(obs, dtype=np.float64)
    signs = 1.0 - 2.0 * codebook.codewords.astype(np.float64)  # (C, n)
    q = obs @ (-0.5 * signs.T)  # (N, C)
    out = np.empty((obs.shape[0], codebook.m), dtype=np.float64)
    for k in range(codebook.m):
        one = codebook.codewords[:, k] == 1
        out[:, k] = q[:, one].min(axis=1) - q[:, ~one].min(axis=1)
    return out


def demap_ms_batch(obs: np.ndarray, spec: FormatSpec) -> np.ndarray:
    """Vectorized single-pass min-sum demapping for (N, n) observations."""
    checks = _ms_checks(spec)
    obs = np.asarray(obs, dtype=np.float64)
    mags = np.abs(obs)
    neg = obs < 0
    out = obs[:, : spec.m].copy()
    for c0, support, target in checks:
        members = support + (target,)
        for k in support:
            others = [j - 1 for j in members if j != k]
            sign = np.where(neg[:, others].sum(axis=1) % 2 == 1, -1.0, 1.0)
            if c0:
                sign = -sign
            out[:, k - 1] += sign * mags[:, others].min(axis=1)
    return out


def demap_posd_batch(obs: np.ndarray, spec: FormatSpec, params: PosdParams) -> np.ndarray:
    """Vectorized candidate demapping for (N, n) observations."""
    p = params.p
    m = spec.m
    if p > m:
        raise ValueError(f"p={p} exceeds m={m}")
    obs = np.asarray(obs, dtype=np.float64)
    out = obs[:, :m].copy()
    if p == 0:
        return out
    n_frames = obs.shape[0]
    mags = np.abs(obs)
    h = hard_decide_batch(obs)

    order = np.argsort(mags[:, :m], axis=1, kind="stable")
    lrp = order[:, :p]  # (N, p), 0-based, ascending reliability

    n_cand = 2 ** p
    flips = ((np.arange(n_cand)[:, None] >> np.arange(p)) & 1).astype(np.uint8)  # (C, p)

    # Candidate info words: hard decision with LRP positions flipped.
    u = np.repeat(h[:, None, :m], n_cand, axis=1)  # (N, C, m)
    rows = np.arange(n_frames)[:, None, None]
    cands = np.arange(n_cand)[None, :, None]
    u[rows, cands, lrp[:, None, :]] ^= flips[None, :, :]

    # Analog weight: flipped-info magnitudes plus parity mismatch magnitudes.
    lrp_mags = np.take_along_axis(mags[:, :m], lrp, axis=1)  # (N, p)
    w = lrp_mags @ flips.T.astype(np.float64)  # (N, C)
    for target, expr in spec.parity_defs:
        mismatch = eval_expr_batch(expr, u) ^ h[:, None, target - 1]
        w = w + mismatch * mags[:, None, target - 1]

    cand_bits = np.take_along_axis(h[:, :m], lrp, axis=1)[:, None, :] ^ flips[None, :, :]  # (N, C, p)
    llr = np.empty((n_frames, p), dtype=np.float64)
    for k in range(p):
        one = cand_bits[:, :, k] == 1
        w1 = np.where(one, w, np.inf).min(axis=1)
        w0 = np.where(one, np.inf, w).min(axis=1)
        llr[:, k] = w1 - w0
    np.put_along_axis(out, lrp, llr, axis=1)
    return out
