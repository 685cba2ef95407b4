"""Quasi-static Rayleigh fading, link budgets and counter-based trial streams."""
import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from app.errors import DomainError, ParameterError

LINK_OFF = float("-inf")
# Trials per Philox counter block. Fixed: changing it changes every draw.
RNG_BLOCK = 4096
_MAX_SEED = 1 << 64

SNR_AXES = ("snr_sd_db", "snr_rd_db", "snr_sr_db")


def db_to_linear(snr_db: float) -> float:
    """dB to linear; the link-off sentinel maps to exactly 0."""
    if snr_db == LINK_OFF:
        return 0.0
    return 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    snr_sd_db: float
    snr_rd_db: float
    snr_sr_db: float
    n_rx: int = 2

    def __post_init__(self):
        if self.n_rx < 1:
            raise ParameterError(f"n_rx must be >= 1, got {self.n_rx}")
        for axis in SNR_AXES:
            value = getattr(self, axis)
            if math.isnan(value) or value == float("inf"):
                raise DomainError(f"{axis} must be finite or link-off (-inf), got {value}")

    @property
    def sd(self) -> float:
        return db_to_linear(self.snr_sd_db)

    @property
    def rd(self) -> float:
        return db_to_linear(self.snr_rd_db)

    @property
    def sr(self) -> float:
        return db_to_linear(self.snr_sr_db)

    def with_snr(self, axis: str, snr_db: float) -> "LinkBudget":
        """Copy with one SNR replaced; axis "common" sets SNR_SD = SNR_RD."""
        if axis == "common":
            return replace(self, snr_sd_db=snr_db, snr_rd_db=snr_db)
        if axis not in SNR_AXES:
            raise ParameterError(f"unknown SNR axis {axis!r}")
        return replace(self, **{axis: snr_db})

    def without_relay(self) -> "LinkBudget":
        return replace(self, snr_rd_db=LINK_OFF, snr_sr_db=LINK_OFF)


@dataclass(frozen=True, eq=False)
class FadingDraw:
    """Fading of one frame, or of a batch of frames along a leading axis."""
    h_sd: np.ndarray  # (..., n_rx)
    h_rd: np.ndarray  # (..., n_rx)
    h_sr: Union[complex, np.ndarray]  # (...)

    @property
    def n_trials(self) -> int:
        return 1 if np.ndim(self.h_sr) == 0 else len(self.h_sr)

    def select(self, index) -> "FadingDraw":
        return FadingDraw(h_sd=self.h_sd[index], h_rd=self.h_rd[index], h_sr=self.h_sr[index])


def _check_stream(seed: int, index: int):
    if not 0 <= seed < _MAX_SEED:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if index < 0:
        raise ParameterError(f"trial index must be >= 0, got {index}")


def _block_coefficients(n_rx: int, seed: int, block: int) -> np.ndarray:
    """CN(0,1) coefficients of RNG_BLOCK consecutive trials: (RNG_BLOCK, 2*n_rx + 1).

    Philox keyed by the seed; the block index sits in the upper counter
    words, so blocks never overlap and each block is reproducible alone.
    """
    rng = np.random.Generator(np.random.Philox(key=seed, counter=block << 128))
    normals = rng.standard_normal((RNG_BLOCK, 2, 2 * n_rx + 1))
    return (normals[:, 0, :] + 1j * normals[:, 1, :]) / np.sqrt(2.0)


def draw_fading_batch(n_rx: int, seed: int, start: int, count: int) -> FadingDraw:
    """Draws of trials start..start+count-1; trial i depends only on (seed, i)."""
    _check_stream(seed, start)
    if n_rx < 1:
        raise ParameterError(f"n_rx must be >= 1, got {n_rx}")
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    first_block = start // RNG_BLOCK
    last_block = (start + count - 1) // RNG_BLOCK
    coefficients = np.concatenate([
        _block_coefficients(n_rx, seed, block) for block in range(first_block, last_block + 1)
    ])
    offset = start - first_block * RNG_BLOCK
    coefficients = coefficients[offset:offset + count]
    return FadingDraw(
        h_sd=coefficients[:, :n_rx],
        h_rd=coefficients[:, n_rx:2 * n_rx],
        h_sr=coefficients[:, 2 * n_rx],
    )


def draw_fading(n_rx: int, seed: int, trial_index: int) -> FadingDraw:
    batch = draw_fading_batch(n_rx, seed, trial_index, 1)
    return FadingDraw(h_sd=batch.h_sd[0], h_rd=batch.h_rd[0], h_sr=complex(batch.h_sr[0]))


def post_mrc_snr(h: np.ndarray, snr_linear: float) -> Union[float, np.ndarray]:
    """snr * ||h||^2 over the antenna (last) axis."""
    gain = np.sum(np.abs(np.asarray(h)) ** 2, axis=-1)
    result = snr_linear * gain
    return float(result) if np.ndim(result) == 0 else result
