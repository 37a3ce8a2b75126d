"""Bit-to-symbol mapping: Gray-labeled QPSK slots assembled into 8D frames.

Each pair of label bits drives one QPSK symbol; dimension i of a frame
carries bit i. Amplitudes are +-1/sqrt(2) so every 2D slot has unit energy
(an 8D frame has total energy 4). Bit 0 maps to the positive amplitude,
which keeps the sign convention of LLR-domain observations consistent
(positive observation favors bit 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beq import FormatSpec, all_info_words, compute_parity, compute_parity_batch

__all__ = [
    "AMPLITUDE", "Codebook",
    "gray_map_qpsk", "map_8d", "map_8d_batch",
    "build_codebook", "min_squared_distance",
]

AMPLITUDE = 1.0 / math.sqrt(2.0)


def gray_map_qpsk(b_i: int, b_q: int) -> tuple[float, float]:
    """Map two bits to one Gray-labeled QPSK point (I, Q)."""
    return (1 - 2 * b_i) * AMPLITUDE, (1 - 2 * b_q) * AMPLITUDE


def map_8d(spec: FormatSpec, info_bits) -> np.ndarray:
    """Map an information word to its n-dimensional symbol frame."""
    if spec.n % 2:
        raise ValueError(f"format {spec.name} has odd bit count {spec.n}; QPSK slots need pairs")
    codeword = compute_parity(spec, info_bits)
    return (1.0 - 2.0 * codeword.astype(np.float64)) * AMPLITUDE


def map_8d_batch(spec: FormatSpec, info_bits: np.ndarray) -> np.ndarray:
    """Vectorized :func:`map_8d`; ``info_bits`` has shape (..., m)."""
    if spec.n % 2:
        raise ValueError(f"format {spec.name} has odd bit count {spec.n}; QPSK slots need pairs")
    codewords = compute_parity_batch(spec, info_bits)
    return (1.0 - 2.0 * codewords.astype(np.float64)) * AMPLITUDE


@dataclass(frozen=True)
class Codebook:
    """All 2^m codewords of a format with their symbol frames.

    Entries are in lexicographic information-word order, so row index
    equals the integer value of the information word (b1 most significant).
    """

    format_name: str
    m: int
    n: int
    codewords: np.ndarray  # (2^m, n) uint8
    symbols: np.ndarray    # (2^m, n) float64

    def __len__(self) -> int:
        return self.codewords.shape[0]


def build_codebook(spec: FormatSpec) -> Codebook:
    """Enumerate every codeword of a format, checking mapper injectivity."""
    if spec.m > 7:
        raise ValueError("codebook enumeration limited to m <= 7")
    info = all_info_words(spec.m)
    codewords = compute_parity_batch(spec, info)
    if np.unique(codewords, axis=0).shape[0] != codewords.shape[0]:
        raise ValueError(f"format {spec.name}: mapper is not injective")
    symbols = (1.0 - 2.0 * codewords.astype(np.float64)) * AMPLITUDE
    return Codebook(spec.name, spec.m, spec.n, codewords, symbols)


def min_squared_distance(codebook: Codebook) -> float:
    """Minimum squared Euclidean distance over all distinct frame pairs."""
    if len(codebook) < 2:
        raise ValueError("need at least 2 codebook entries")
    s = codebook.symbols
    d2 = np.sum((s[:, None, :] - s[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(d2.min())
