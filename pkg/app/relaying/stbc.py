"""Distributed Alamouti and the Patched Golden / Silver space-time codes."""
import math
from typing import Sequence, Tuple

import numpy as np

from app.errors import DomainError, FrameRangeError, ParameterError

GOLDEN = "golden"
SILVER = "silver"
DSTBC_CODES = (GOLDEN, SILVER)

ALPHA = (1.0 + math.sqrt(5.0)) / 2.0
ALPHA_BAR = (1.0 - math.sqrt(5.0)) / 2.0
PHI = 1 + 1j - 1j * ALPHA
PHI_BAR = 1 + 1j - 1j * ALPHA_BAR
GOLDEN_NORM = math.sqrt(abs(PHI ** 2 * (1 + ALPHA ** 2)))  # = sqrt(5)

# Silver layer mixing: [b1, b2] = SILVER_MIX @ [z1, z2]
SILVER_MIX = np.array([[1 + 1j, -1 + 2j], [1 + 2j, 1 - 1j]]) / math.sqrt(7.0)
# Right-multiplies Y~1 so its columns carry (b1, -b2)
SILVER_COMBINE = np.array([[1 + 1j, -(1 + 2j)], [-1 + 2j, -1 + 1j]]) / math.sqrt(7.0)

DSTBC_C = 1.0 / math.sqrt(2.0)


def alamouti_relay_symbols(x: Sequence[complex], k: int, offset: int = 0) -> complex:
    """Relay symbol in phase-2 slot k (1-based): -x*_{m+k+1} for odd k, x*_{m+k-1} for even k.

    `x` is the 1-based source stream x_1, x_2, ... and `offset` is m = L_1/m_S.
    """
    if k < 1:
        raise ParameterError(f"phase-2 slot index starts at 1, got {k}")
    index = offset + k + 1 if k % 2 else offset + k - 1
    if index > len(x):
        raise FrameRangeError(f"slot {k} needs x_{index}, frame holds {len(x)} symbols")
    symbol = complex(x[index - 1])
    return -symbol.conjugate() if k % 2 else symbol.conjugate()


def alamouti_combine(
    y1: np.ndarray, y2: np.ndarray, g1: np.ndarray, g2: np.ndarray
) -> Tuple[complex, complex, float]:
    """Classical Alamouti receiver for y1 = g1 s1 - g2 s2*, y2 = g1 s2 + g2 s1*.

    Returns the zero-forced estimates of (s1, s2) and the post-combining gain
    ||g1||^2 + ||g2||^2.
    """
    g1 = np.atleast_1d(np.asarray(g1, dtype=complex))
    g2 = np.atleast_1d(np.asarray(g2, dtype=complex))
    y1 = np.atleast_1d(np.asarray(y1, dtype=complex))
    y2 = np.atleast_1d(np.asarray(y2, dtype=complex))
    gain = float(np.vdot(g1, g1).real + np.vdot(g2, g2).real)
    if gain == 0.0:
        raise DomainError("Alamouti combining over an all-zero channel")
    s1 = np.vdot(g1, y1) + np.conj(np.vdot(g2, y2))
    s2 = np.vdot(g1, y2) - np.conj(np.vdot(g2, y1))
    return complex(s1 / gain), complex(s2 / gain), gain


def _check_code(code: str) -> str:
    code = str(code).lower()
    if code not in DSTBC_CODES:
        raise ParameterError(f"unknown space-time code {code!r}; expected one of {DSTBC_CODES}")
    return code


def golden_codeword(a: complex, b: complex, c: complex, d: complex) -> np.ndarray:
    """Golden code, rows = transmit antennas, two unit-energy layers per entry."""
    scale = math.sqrt(2.0 / 5.0)
    return scale * np.array([
        [PHI * (a + b * ALPHA), PHI * (c + d * ALPHA)],
        [1j * PHI_BAR * (c + d * ALPHA_BAR), PHI_BAR * (a + b * ALPHA_BAR)],
    ])


def silver_codeword(a1: complex, a2: complex, z1: complex, z2: complex) -> np.ndarray:
    """Silver code X_a(a) + diag(1, -1) X_a(M z), transposed so rows are transmit antennas."""
    b1, b2 = SILVER_MIX @ np.array([z1, z2])
    return np.array([
        [a1 + b1, a2 - b2],
        [-np.conj(a2) - np.conj(b2), np.conj(a1) - np.conj(b1)],
    ])


def patched_dstbc_encode(code: str, z1: complex, z2: complex, x21: complex, x22: complex) -> Tuple[complex, complex]:
    """Relay symbols of the first two phase-2 slots."""
    code = _check_code(code)
    if code == GOLDEN:
        ratio = PHI_BAR / PHI
        return complex(1j * ratio * (x22 + ALPHA_BAR * z2)), complex(ratio * (x21 + ALPHA_BAR * z1))
    z1c, z2c = np.conj(z1), np.conj(z2)
    z_r1 = -np.conj(x22) - ((1 - 2j) * z1c + (1 + 1j) * z2c) / math.sqrt(7.0)
    z_r2 = np.conj(x21) + ((-1 + 1j) * z1c + (1 + 2j) * z2c) / math.sqrt(7.0)
    return complex(z_r1), complex(z_r2)


def patched_dstbc_combine(code: str, y1_tilde: np.ndarray, y2: np.ndarray) -> Tuple[np.ndarray, float]:
    """Destination combination; noiseless, Y = c [h_sd h_rd] X with c = 1/sqrt(2) and unit-variance noise."""
    code = _check_code(code)
    y1_tilde = np.asarray(y1_tilde, dtype=complex)
    y2 = np.asarray(y2, dtype=complex)
    if y1_tilde.ndim != 2 or y1_tilde.shape[1] != 2 or y1_tilde.shape != y2.shape:
        raise ParameterError(f"expected two N_r x 2 matrices, got {y1_tilde.shape} and {y2.shape}")
    if code == GOLDEN:
        combined = PHI * (ALPHA * y1_tilde + y2) / GOLDEN_NORM
    else:
        combined = (y1_tilde @ SILVER_COMBINE + y2) / math.sqrt(2.0)
    return combined, DSTBC_C
