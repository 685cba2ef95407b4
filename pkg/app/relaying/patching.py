"""
Patching: the relay forms 2^{m_R}-QAM hyper-symbols from QPSK source symbols
of both phases, and the destination recombines the matching received samples
so the hyper-symbol appears on the channel sqrt(SNR_SD) h_sd + a_top sqrt(SNR_RD) h_rd.
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from app.errors import ParameterError
from app.phy.constellation import qam

PATCHING_SOURCE_ORDER = 2


@dataclass(frozen=True)
class PatchCoefficients:
    m_s: int
    m_r: int
    a: Tuple[float, ...]

    @property
    def ratio(self) -> int:
        return self.m_r // self.m_s

    @property
    def top(self) -> float:
        """a_{m_R/m_S}, the weight of the phase-2 symbol."""
        return self.a[-1]


def patch_coefficients(m_s: int, m_r: int) -> PatchCoefficients:
    """a_i = sqrt(3/(2^{m_R}-1)) * 2^{i-1}, i = 1..m_R/m_S."""
    if m_s != PATCHING_SOURCE_ORDER:
        raise ParameterError(f"patching is defined for a QPSK source (m_s=2), got m_s={m_s}")
    if m_r < m_s or m_r % m_s:
        raise ParameterError(f"m_r/m_s must be an integer >= 1, got m_r={m_r}, m_s={m_s}")
    scale = math.sqrt(3.0 / ((1 << m_r) - 1))
    return PatchCoefficients(m_s=m_s, m_r=m_r, a=tuple(scale * 2 ** i for i in range(m_r // m_s)))


def _check_source_symbols(symbols: Sequence[complex], m_s: int):
    alphabet = qam(m_s)
    for symbol in symbols:
        alphabet.label_of(symbol)


def patch_symbol(x: Sequence[complex], a: PatchCoefficients) -> complex:
    """Hyper-symbol z = sum_i a_i x_i; x = (phase-1 symbols..., phase-2 symbol)."""
    if len(x) != a.ratio:
        raise ParameterError(f"expected {a.ratio} source symbols, got {len(x)}")
    _check_source_symbols(x, a.m_s)
    return complex(np.dot(a.a, np.asarray(x, dtype=complex)))


def patch_combine_rx(y1: Sequence[np.ndarray], y2: np.ndarray, a: PatchCoefficients) -> np.ndarray:
    """sum_i a_i y1_i + a_top y2 (phase-1 samples first)."""
    if len(y1) != a.ratio - 1:
        raise ParameterError(f"expected {a.ratio - 1} phase-1 observations, got {len(y1)}")
    combined = a.top * np.asarray(y2, dtype=complex)
    for weight, sample in zip(a.a[:-1], y1):
        combined = combined + weight * np.asarray(sample, dtype=complex)
    return combined


def patched_alamouti_encode(
    x_phase1: Sequence[complex],
    x_phase2: Sequence[complex],
    a: PatchCoefficients,
) -> Tuple[complex, complex]:
    """Relay symbols of the two phase-2 slots.

    With Z1 = sum_k a_k x_{1,k} + a_top x_{2,2} and
    Z2 = sum_k a_k x_{1,k+r-1} + a_top x_{2,1}: returns (conj(Z1), -conj(Z2)).
    """
    r = a.ratio
    if len(x_phase1) != 2 * (r - 1) or len(x_phase2) != 2:
        raise ParameterError(
            f"expected {2 * (r - 1)} phase-1 and 2 phase-2 symbols, got {len(x_phase1)} and {len(x_phase2)}"
        )
    _check_source_symbols(list(x_phase1) + list(x_phase2), a.m_s)
    weights = np.asarray(a.a[:-1])
    x1 = np.asarray(x_phase1, dtype=complex)
    z1 = np.dot(weights, x1[:r - 1]) + a.top * x_phase2[1]
    z2 = np.dot(weights, x1[r - 1:]) + a.top * x_phase2[0]
    return complex(np.conj(z1)), complex(-np.conj(z2))


def patched_alamouti_combine(
    y_phase1: Sequence[np.ndarray],
    y_phase2: Sequence[np.ndarray],
    a: PatchCoefficients,
) -> Tuple[np.ndarray, np.ndarray]:
    """(y~_{2,1}, y~_{2,2}).

    Noiseless, (y~_{2,2}, y~_{2,1}) is the Alamouti pair of (Z1, Z2) over
    g1 = sqrt(SNR_SD) h_sd and g2 = a_top sqrt(SNR_RD) h_rd.
    """
    r = a.ratio
    if len(y_phase1) != 2 * (r - 1) or len(y_phase2) != 2:
        raise ParameterError(
            f"expected {2 * (r - 1)} phase-1 and 2 phase-2 observations, got {len(y_phase1)} and {len(y_phase2)}"
        )
    y21 = patch_combine_rx(list(y_phase1[r - 1:]), y_phase2[0], a)
    y22 = patch_combine_rx(list(y_phase1[:r - 1]), y_phase2[1], a)
    return y21, y22


def dstbc_hyper_symbols(x_phase1: Sequence[complex], a: PatchCoefficients) -> Tuple[complex, complex]:
    """Golden/Silver hyper-symbols z1, z2 from 2*m_R/m_S phase-1 symbols."""
    r = a.ratio
    if len(x_phase1) != 2 * r:
        raise ParameterError(f"expected {2 * r} phase-1 symbols, got {len(x_phase1)}")
    _check_source_symbols(x_phase1, a.m_s)
    x1 = np.asarray(x_phase1, dtype=complex)
    return complex(np.dot(a.a, x1[:r])), complex(np.dot(a.a, x1[r:]))


def dstbc_tilde_rx(y_phase1: Sequence[np.ndarray], a: PatchCoefficients) -> np.ndarray:
    """Y~1 = [y~_{1,1} y~_{1,2}] (N_r x 2): the phase-1 samples re-weighted into z1, z2 observations."""
    r = a.ratio
    if len(y_phase1) != 2 * r:
        raise ParameterError(f"expected {2 * r} phase-1 observations, got {len(y_phase1)}")
    samples = np.asarray(y_phase1, dtype=complex)
    weights = np.asarray(a.a)
    first = np.tensordot(weights, samples[:r], axes=1)
    second = np.tensordot(weights, samples[r:], axes=1)
    return np.stack([first, second], axis=-1)
