"""HARQ frame segmentation: K information bits spread over N_max sub-frames."""
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from app.errors import ParameterError


@dataclass(frozen=True)
class FrameConfig:
    K: int
    T: Tuple[int, ...]  # symbols per sub-frame, T[0] = T_1
    m_s: int = 2

    def __post_init__(self):
        object.__setattr__(self, "T", tuple(int(t) for t in self.T))
        if self.K < 1:
            raise ParameterError(f"K must be >= 1, got {self.K}")
        if not self.T or min(self.T) < 1:
            raise ParameterError(f"every sub-frame needs >= 1 symbol, got T={self.T}")
        if self.m_s < 2 or self.m_s % 2:
            raise ParameterError(f"source order m_s must be an even number >= 2, got {self.m_s}")
        if self.K > self.T[0] * self.m_s:
            raise ParameterError(
                f"first sub-frame must carry the message: K={self.K} > T_1*m_s={self.T[0] * self.m_s}"
            )

    @property
    def n_max(self) -> int:
        return len(self.T)

    @property
    def total_symbols(self) -> int:
        return sum(self.T)

    @property
    def coding_rate(self) -> Fraction:
        return Fraction(self.K, self.m_s * self.total_symbols)

    def check_horizon(self, n: int):
        if not 1 <= n <= self.n_max:
            raise ParameterError(f"sub-frame index must be in 1..{self.n_max}, got {n}")

    def symbols_until(self, n: int) -> int:
        """Symbols in sub-frames 1..n (0 for n = 0)."""
        if n == 0:
            return 0
        self.check_horizon(n)
        return sum(self.T[:n])

    def symbols_between(self, first: int, last: int) -> int:
        """Symbols in sub-frames first..last inclusive (0 when first > last)."""
        if first > last:
            return 0
        return self.symbols_until(last) - self.symbols_until(first - 1)

    def phase_symbols(self, activation: Optional[int], n: int) -> Tuple[int, int]:
        """(phase-1, phase-2) symbols up to horizon n for a relay transmitting from `activation`."""
        self.check_horizon(n)
        if activation is None or activation > n:
            return self.symbols_until(n), 0
        return self.symbols_until(activation - 1), self.symbols_between(activation, n)

    @classmethod
    def open_loop(cls, K: int = 600, n_max: int = 7, first_to_other_ratio: int = 3, m_s: int = 2) -> "FrameConfig":
        """T_1 = K/m_s (information bits only), T_i = T_1/ratio for i > 1."""
        if K % m_s or (K // m_s) % first_to_other_ratio:
            raise ParameterError(f"K={K} does not split into T_1=K/m_s and T_1/{first_to_other_ratio}")
        t1 = K // m_s
        return cls(K=K, T=(t1,) + (t1 // first_to_other_ratio,) * (n_max - 1), m_s=m_s)

    @classmethod
    def from_first_subframe_rate(cls, rate: float, T: Sequence[int], m_s: int = 2) -> "FrameConfig":
        """Frame whose first sub-frame has coding rate `rate`, i.e. K = rate * T_1 * m_s."""
        if not 0 < rate <= 1:
            raise ParameterError(f"first sub-frame coding rate must be in (0, 1], got {rate}")
        return cls(K=int(round(rate * T[0] * m_s)), T=tuple(T), m_s=m_s)


def rate_after_n(frame: FrameConfig, n: int) -> float:
    """R_n = K / sum_{i<=n} T_i in bits per channel use."""
    return frame.K / frame.symbols_until(n)


def activation_from_decoded_after(decoded_after: Optional[int], frame: FrameConfig) -> Optional[int]:
    """Reporting label (relay decoded after sub-frame d) to transmit-start index d + 1."""
    if decoded_after is None or decoded_after >= frame.n_max:
        return None
    if decoded_after < 1:
        raise ParameterError(f"relay cannot decode before sub-frame 1, got {decoded_after}")
    return decoded_after + 1
