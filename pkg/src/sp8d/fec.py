"""LDPC encoding and min-sum decoding.

Codes are held as a dense GF(2) parity-check matrix plus precomputed edge
structures for flooding message passing. The encoder comes from the
reduced row echelon form of H: non-pivot columns carry the information
bits verbatim, pivot columns are solved from them. The desk-scale default
code is a pseudo-random column-degree-3 regular code; the standard alist
text format is read and written for interoperability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LdpcCode", "DecodeResult",
    "make_regular_code", "load_alist", "dump_alist",
    "ldpc_encode", "ldpc_encode_batch",
    "ldpc_decode_ms", "ldpc_decode_ms_batch",
]


@dataclass(frozen=True)
class DecodeResult:
    """Hard bits, iterations spent, and whether the syndrome was cleared."""

    bits: np.ndarray  # (n,) uint8
    iterations: int
    syndrome_ok: bool


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """A binary LDPC code with encoder and decoder structures attached."""

    n: int
    k: int
    H: np.ndarray            # (rows, n) uint8 as given (may include dependent rows)
    info_cols: np.ndarray    # (k,) positions carrying information bits
    pivot_cols: np.ndarray   # (rank,) positions solved by the encoder
    parity_gen: np.ndarray   # (rank, k) uint8: pivot bits = parity_gen @ u mod 2
    # flooding-decoder edge structures (row-sorted primary layout)
    e_row: np.ndarray = field(repr=False, default=None)
    e_col: np.ndarray = field(repr=False, default=None)
    row_start: np.ndarray = field(repr=False, default=None)
    col_perm: np.ndarray = field(repr=False, default=None)
    col_start: np.ndarray = field(repr=False, default=None)

    @property
    def rate(self) -> float:
        return self.k / self.n


def _gf2_rref(H: np.ndarray):
    """Reduced row echelon form over GF(2); returns (reduced rows, pivots)."""
    R = H.copy().astype(np.uint8)
    rows, n = R.shape
    pivots = []
    r = 0
    for col in range(n):
        if r >= rows:
            break
        hit = np.nonzero(R[r:, col])[0]
        if hit.size == 0:
            continue
        sel = r + hit[0]
        if sel != r:
            R[[r, sel]] = R[[sel, r]]
        mask = R[:, col] == 1
        mask[r] = False
        R[mask] ^= R[r]
        pivots.append(col)
        r += 1
    return R[:r], pivots


def _finalize(H: np.ndarray) -> LdpcCode:
    """Derive encoder and decoder structures from a parity-check matrix."""
    H = np.asarray(H, dtype=np.uint8)
    rows, n = H.shape
    if not (H.sum(axis=1) >= 2).all():
        raise ValueError("every check must involve at least 2 bits")
    if not (H.sum(axis=0) >= 1).all():
        raise ValueError("every bit must be covered by at least one check")
    R, pivots = _gf2_rref(H)
    rank = len(pivots)
    pivot_cols = np.array(pivots, dtype=np.int64)
    info_cols = np.array([c for c in range(n) if c not in set(pivots)], dtype=np.int64)
    parity_gen = R[:, info_cols]

    e_row, e_col = np.nonzero(H)
    row_start = np.searchsorted(e_row, np.arange(rows))
    col_perm = np.lexsort((e_row, e_col))
    col_start = np.searchsorted(e_col[col_perm], np.arange(n))
    return LdpcCode(
        n=n, k=len(info_cols), H=H,
        info_cols=info_cols, pivot_cols=pivot_cols, parity_gen=parity_gen,
        e_row=e_row, e_col=e_col, row_start=row_start,
        col_perm=col_perm, col_start=col_start,
    )


def make_regular_code(n: int, rate: float, seed: int) -> LdpcCode:
    """Pseudo-random column-degree-3 regular code, deterministic per seed.

    4-cycle avoidance is attempted (bounded retries per column); attempts
    repeat with derived seeds until the check matrix has full row rank, so
    the code hits the requested rate exactly.
    """
    if n < 96:
        raise ValueError("n must be >= 96")
    r_exact = n * (1.0 - rate)
    r = int(round(r_exact))
    # Accept 4-decimal rate spellings (0.8333 for 5/6) at any block length.
    if abs(r_exact - r) > max(0.1, 5e-4 * r_exact):
        raise ValueError(f"n*(1-rate) = {r_exact:.3f} is not integral")
    if r < 4:
        raise ValueError("need at least 4 checks")
    col_deg = 3
    edges = col_deg * n
    base, extra = divmod(edges, r)

    for attempt in range(64):
        rng = np.random.default_rng((seed, attempt))
        capacity = np.full(r, base, dtype=np.int64)
        capacity[:extra] += 1
        H = np.zeros((r, n), dtype=np.uint8)
        used_pairs: set[tuple[int, int]] = set()
        ok = True
        for col in range(n):
            chosen = None
            for _ in range(50):
                avail = np.nonzero(capacity > 0)[0]
                if avail.size < col_deg:
                    ok = False
                    break
                prob = capacity[avail] / capacity[avail].sum()
                pick = rng.choice(avail, size=col_deg, replace=False, p=prob)
                pick = np.sort(pick)
                pairs = [(int(pick[a]), int(pick[b]))
                         for a in range(col_deg) for b in range(a + 1, col_deg)]
                if all(pr not in used_pairs for pr in pairs):
                    chosen = (pick, pairs)
                    break
                chosen = chosen or (pick, pairs)  # fallback: accept a 4-cycle
            if not ok:
                break
            pick, pairs = chosen
            used_pairs.update(pairs)
            H[pick, col] = 1
            capacity[pick] -= 1
        if not ok:
            continue
        code = _finalize(H)
        if len(code.pivot_cols) == r:
            return code
    raise RuntimeError("could not construct a full-rank regular code")


# ---------------------------------------------------------------------------
# alist interchange
# ---------------------------------------------------------------------------

def load_alist(text: str) -> LdpcCode:
    """Parse an alist document (columns-first sparse H exchange format).

    Rank-deficient matrices are accepted; the encoder then works over the
    row-reduced rank (k = n - rank).
    """
    lines = text.splitlines()

    def ints(i: int, expect: int | None = None) -> list[int]:
        if i >= len(lines):
            raise ValueError(f"alist truncated: missing line {i + 1}")
        try:
            vals = [int(tok) for tok in lines[i].split()]
        except ValueError as exc:
            raise ValueError(f"alist line {i + 1}: {exc}") from None
        if expect is not None and len(vals) != expect:
            raise ValueError(f"alist line {i + 1}: expected {expect} integers, got {len(vals)}")
        return vals

    n, rows = ints(0, 2)
    ints(1, 2)  # max degrees (informational)
    col_deg = ints(2, n)
    row_deg = ints(3, rows)
    H = np.zeros((rows, n), dtype=np.uint8)
    for c in range(n):
        entries = [v for v in ints(4 + c) if v != 0]
        if len(entries) != col_deg[c]:
            raise ValueError(f"alist line {5 + c}: column {c + 1} degree mismatch")
        for v in entries:
            if not 1 <= v <= rows:
                raise ValueError(f"alist line {5 + c}: row index {v} out of range")
            H[v - 1, c] = 1
    for r in range(rows):
        entries = [v for v in ints(4 + n + r) if v != 0]
        if len(entries) != row_deg[r]:
            raise ValueError(f"alist line {5 + n + r}: row {r + 1} degree mismatch")
        if sorted(entries) != sorted(np.nonzero(H[r])[0] + 1):
            raise ValueError(f"alist line {5 + n + r}: row list disagrees with column lists")
    return _finalize(H)


def dump_alist(code: LdpcCode) -> str:
    """Serialize the parity-check matrix in alist format."""
    H = code.H
    rows, n = H.shape
    col_lists = [list(np.nonzero(H[:, c])[0] + 1) for c in range(n)]
    row_lists = [list(np.nonzero(H[r])[0] + 1) for r in range(rows)]
    out = [
        f"{n} {rows}",
        f"{max(len(c) for c in col_lists)} {max(len(r) for r in row_lists)}",
        " ".join(str(len(c)) for c in col_lists),
        " ".join(str(len(r)) for r in row_lists),
    ]
    out += [" ".join(map(str, c)) for c in col_lists]
    out += [" ".join(map(str, r)) for r in row_lists]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def ldpc_encode(code: LdpcCode, info) -> np.ndarray:
    """Systematic encoding: info bits at info_cols, pivots solved from H."""
    return ldpc_encode_batch(code, np.asarray(info, dtype=np.uint8)[None, :])[0]


def ldpc_encode_batch(code: LdpcCode, info: np.ndarray) -> np.ndarray:
    info = np.asarray(info, dtype=np.uint8)
    if info.shape[-1] != code.k:
        raise ValueError(f"expected {code.k} info bits, got {info.shape[-1]}")
    out = np.zeros(info.shape[:-1] + (code.n,), dtype=np.uint8)
    out[..., code.info_cols] = info
    out[..., code.pivot_cols] = (info @ code.parity_gen.T) % 2
    return out


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def _syndrome_ok(code: LdpcCode, bits: np.ndarray) -> np.ndarray:
    """Per-frame all-checks-satisfied flag for (B, n) hard bits."""
    per_check = np.add.reduceat(bits[:, code.e_col], code.row_start, axis=1) & 1
    return ~per_check.any(axis=1)


def ldpc_decode_ms_batch(code: LdpcCode, llrs: np.ndarray, max_iter: int = 20):
    """Plain min-sum, flooding schedule, per-frame early exit on zero
    syndrome. Returns (bits (B,n) uint8, iterations (B,), syndrome_ok (B,)).
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    n_frames = llrs.shape[0]
    e_row, e_col = code.e_row, code.e_col
    row_start, col_perm, col_start = code.row_start, code.col_perm, code.col_start

    # Hard decision by total LLR sign; positive or zero decides bit 0.
    bits_out = (llrs < 0).astype(np.uint8)
    iters_out = np.zeros(n_frames, dtype=np.int64)
    ok_out = _syndrome_ok(code, bits_out)

    active = np.nonzero(~ok_out)[0]
    c2v = np.zeros((active.size, e_row.size), dtype=np.float64)
    llr_act = llrs[active]
    totals = llr_act.copy()

    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        v2c = totals[:, e_col] - c2v
        absv = np.abs(v2c)
        neg = v2c < 0
        nneg = np.add.reduceat(neg, row_start, axis=1)
        row_sign = 1.0 - 2.0 * (nneg & 1)
        m1 = np.minimum.reduceat(absv, row_start, axis=1)
        m1e = m1[:, e_row]
        is_min = absv == m1e
        cnt_min = np.add.reduceat(is_min, row_start, axis=1)
        masked = np.where(is_min, np.inf, absv)
        m2 = np.minimum.reduceat(masked, row_start, axis=1)
        mag = np.where(is_min & (cnt_min[:, e_row] == 1), m2[:, e_row], m1e)
        edge_sign = row_sign[:, e_row] * (1.0 - 2.0 * neg)
        c2v = edge_sign * mag

        totals = llr_act + np.add.reduceat(c2v[:, col_perm], col_start, axis=1)
        bits = (totals < 0).astype(np.uint8)
        done = _syndrome_ok(code, bits)
        if done.any():
            idx = active[done]
            bits_out[idx] = bits[done]
            iters_out[idx] = it
            ok_out[idx] = True
            keep = ~done
            active = active[keep]
            c2v = c2v[keep]
            llr_act = llr_act[keep]
            totals = totals[keep]

    if active.size:  # non-converged: best-effort bits after max_iter
        bits_out[active] = (totals < 0).astype(np.uint8)
        iters_out[active] = max_iter
    return bits_out, iters_out, ok_out


def ldpc_decode_ms(code: LdpcCode, llrs, max_iter: int = 20) -> DecodeResult:
    """Decode one frame; see :func:`ldpc_decode_ms_batch`."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if not np.isfinite(llrs).all():
        raise ValueError("LLRs must be finite")
    bits, iters, ok = ldpc_decode_ms_batch(code, llrs[None, :], max_iter=max_iter)
    return DecodeResult(bits=bits[0], iterations=int(iters[0]), syndrome_ok=bool(ok[0]))
