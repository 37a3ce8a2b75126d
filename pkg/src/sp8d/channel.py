"""AWGN channel with explicit SNR conventions and reproducible randomness.

SNR is Es/N0 per 2D slot in dB, with unit symbol energy per slot, so the
per-real-dimension noise deviation is sigma = sqrt(10^(-snr/10) / 2).

Randomness is counter-based: every consumer derives an independent Philox
substream from (master_seed, domain, index, subindex). Streams never depend
on scheduling or worker count, so any simulation is reproducible from its
seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modem import AMPLITUDE

__all__ = [
    "ChannelParams", "snr_to_sigma", "substream", "frame_stream",
    "add_awgn", "observations",
    "DOMAIN_FRAME", "DOMAIN_SIM", "DOMAIN_GMI", "DOMAIN_OPS",
]

# Substream domains (counter word 3). Keeping consumers in separate domains
# guarantees their streams never collide.
DOMAIN_FRAME = 0  # one stream per frame (public per-frame contract)
DOMAIN_SIM = 1    # post-FEC sweep batches
DOMAIN_GMI = 2    # GMI sweep batches
DOMAIN_OPS = 3    # instrumented operation-count sampling


@dataclass(frozen=True)
class ChannelParams:
    """SNR point plus the master seed that fixes all random draws."""

    snr_db: float
    sigma: float
    master_seed: int

    @classmethod
    def from_snr(cls, snr_db: float, master_seed: int) -> "ChannelParams":
        return cls(snr_db=snr_db, sigma=snr_to_sigma(snr_db), master_seed=master_seed)


def snr_to_sigma(snr_db: float) -> float:
    """Per-real-dimension noise standard deviation for an Es/N0 in dB."""
    return float(np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0))


def substream(master_seed: int, domain: int, index: int, subindex: int = 0) -> np.random.Generator:
    """Independent random stream for (seed, domain, index, subindex)."""
    bitgen = np.random.Philox(key=master_seed, counter=[0, subindex, index, domain])
    return np.random.Generator(bitgen)


def frame_stream(master_seed: int, frame_index: int) -> np.random.Generator:
    """The per-frame stream: depends only on the seed and the frame index."""
    return substream(master_seed, DOMAIN_FRAME, frame_index)


def add_awgn(frame: np.ndarray, sigma: float, stream: np.random.Generator) -> np.ndarray:
    """y = s + n with i.i.d. zero-mean Gaussian noise of deviation sigma."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    frame = np.asarray(frame, dtype=np.float64)
    return frame + stream.normal(0.0, sigma, size=frame.shape)


def observations(y: np.ndarray, sigma: float) -> np.ndarray:
    """Scale received samples into exact per-dimension binary LLRs.

    L_i = 2*a*y_i / sigma^2; positive values favor bit 0.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return (2.0 * AMPLITUDE / (sigma * sigma)) * np.asarray(y, dtype=np.float64)
