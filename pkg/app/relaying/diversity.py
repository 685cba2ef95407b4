"""
Macro and micro diversity of the relaying schemes.

Long-term SNR channels and short-term fading channels are reduced to
Matryoshka channels M(D, L); the macro order follows from the link-off
definition, cross-checked by the Matryoshka bound.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence, Tuple, Union

from app.errors import ParameterError, UnsupportedSchemeError
from app.relaying.frame import FrameConfig
from app.relaying.schemes import (
    ALAMOUTI_FAMILY,
    DIRECT,
    DSTBC_KINDS,
    MAX_RELAY_ORDER,
    MONOSTREAM_FAMILY,
    SchemeId,
    SchemeKind,
    block_layout,
)

Number = Union[int, float, Fraction]
LINKS = ("sd", "rd")


def _exact(value: Number) -> Fraction:
    if isinstance(value, Rational):
        return Fraction(value)
    return Fraction(value).limit_denominator(10 ** 9)


@dataclass(frozen=True)
class MatryoshkaChannel:
    """D strictly decreasing; L[k] bits seen with diversity D[k]."""
    D: Tuple[int, ...]
    L: Tuple[Number, ...]

    def __post_init__(self):
        object.__setattr__(self, "D", tuple(int(d) for d in self.D))
        object.__setattr__(self, "L", tuple(self.L))
        if len(self.D) != len(self.L) or not self.D:
            raise ParameterError(f"D and L must be non-empty and aligned, got {self.D} and {self.L}")
        if any(a <= b for a, b in zip(self.D, self.D[1:])):
            raise ParameterError(f"diversity orders must be strictly decreasing, got {self.D}")
        if any(bits < 0 for bits in self.L):
            raise ParameterError(f"bit counts must be >= 0, got {self.L}")

    def nonzero(self) -> "MatryoshkaChannel":
        kept = [(d, bits) for d, bits in zip(self.D, self.L) if bits > 0]
        if not kept:
            raise ParameterError("Matryoshka channel carries no bits")
        return MatryoshkaChannel(D=tuple(d for d, _ in kept), L=tuple(b for _, b in kept))

    @property
    def total_bits(self) -> Number:
        return sum(self.L)

    def as_dict(self) -> dict:
        return {"D": list(self.D), "L": [float(bits) if isinstance(bits, Fraction) else bits for bits in self.L]}


def matryoshka_bound(ch: MatryoshkaChannel, R_c: Number) -> int:
    """D_i for the i with sum_{k<i} L_k < R_c sum L <= sum_{k<=i} L_k."""
    rate = _exact(R_c)
    if not 0 < rate <= 1:
        raise ParameterError(f"R_c must be in (0, 1], got {R_c}")
    ch = ch.nonzero()
    bits = [_exact(b) for b in ch.L]
    needed = rate * sum(bits)
    running = Fraction(0)
    for order, block in zip(ch.D, bits):
        running += block
        if running >= needed:
            return order
    return ch.D[-1]


def monostream_snr_channel(frame: FrameConfig, activations: Sequence[Optional[int]], n: Optional[int] = None) -> MatryoshkaChannel:
    """Nested SNR channel, one level per active transmitter; activations past the horizon are ignored."""
    n = frame.n_max if n is None else n
    frame.check_horizon(n)
    starts = sorted(a for a in activations if a is not None and a <= n)
    if any(a < 2 for a in starts):
        raise ParameterError(f"relay activation must be >= 2, got {starts}")
    bounds = [1] + starts + [n + 1]
    segments = [frame.symbols_between(lo, hi - 1) * frame.m_s for lo, hi in zip(bounds, bounds[1:])]
    return MatryoshkaChannel(D=tuple(range(len(segments), 0, -1)), L=tuple(reversed(segments)))


def patched_blocks(L1: int, L2: int, p: int, m_s: int, m_r: int) -> Tuple[int, int]:
    """(L'_1, L'_2) after patching p phase-2 slots."""
    if p < 0 or p * m_s > L2:
        raise ParameterError(f"p={p} patched slots exceed the {L2 // m_s} phase-2 slots")
    if m_r < m_s or m_r % m_s:
        raise ParameterError(f"m_r/m_s must be an integer >= 1, got m_r={m_r}, m_s={m_s}")
    return max(L1 - p * (m_r - m_s), 0), p * m_r + max(L2 - p * m_s, 0)


def dstbc_blocks(code: str, L1: int, L2: int, m_s: int, m_r: int) -> Tuple[Number, Number]:
    """(L'_1, L'_2) of Patched Alamouti (`alamouti`) or Patched Golden/Silver (`golden_silver`)."""
    if m_r < m_s or m_r % m_s:
        raise ParameterError(f"m_r/m_s must be an integer >= 1, got m_r={m_r}, m_s={m_s}")
    ratio = m_r // m_s
    if code == "alamouti":
        return max(L1 - L2 * (ratio - 1), 0), min(L1 + L2, L2 * ratio)
    if code == "golden_silver":
        top = Fraction(L2, m_s) * (m_r + m_s)
        first = max(Fraction(0), L1 - Fraction(L2, m_s) * m_r)
        return _plain(first), _plain(min(Fraction(L1 + L2), top))
    raise ParameterError(f"unknown code family {code!r}; expected 'alamouti' or 'golden_silver'")


def _plain(value: Fraction) -> Number:
    return int(value) if value.denominator == 1 else value


def min_mr_for_full_diversity(scheme: SchemeId, K: int, L2: Number, m_s: int) -> Optional[int]:
    """Smallest even m_R >= m_s meeting the scheme's full-diversity threshold, or None above 64-QAM.

    Space-time codes: m_R >= m_s (K/L_2 - 1); every other relaying scheme:
    m_R >= K m_s / L_2.
    """
    if scheme.kind == SchemeKind.DIRECT:
        raise UnsupportedSchemeError("direct transmission has no relay modulation")
    if L2 <= 0:
        return None
    l2 = _exact(L2)
    if scheme.kind in DSTBC_KINDS:
        threshold = m_s * (Fraction(K) / l2 - 1)
    else:
        threshold = Fraction(K * m_s) / l2
    order = max(m_s, 2 * math.ceil(threshold / 2))
    return order if order <= MAX_RELAY_ORDER else None


def _dstbc_channel(scheme: SchemeId, frame: FrameConfig, activation: int) -> Tuple[Number, Number]:
    ph1, ph2 = frame.phase_symbols(activation, frame.n_max)
    L1, L2 = ph1 * frame.m_s, ph2 * frame.m_s
    m_r = scheme.m_r
    if m_r is None:
        m_r = min_mr_for_full_diversity(scheme, frame.K, L2, frame.m_s) or MAX_RELAY_ORDER
    return dstbc_blocks("golden_silver", L1, L2, frame.m_s, m_r)


def _phase_bits(scheme: SchemeId, frame: FrameConfig, activation: Optional[int]) -> Tuple[Number, Number]:
    """(L'_1, L'_2) at the end of the frame: bits on the source-only and on the relay-assisted blocks."""
    if activation is not None and activation > frame.n_max:
        activation = None
    if scheme.kind == SchemeKind.DIRECT or activation is None:
        return frame.total_symbols * frame.m_s, 0
    if scheme.kind in DSTBC_KINDS:
        if activation < 2:
            raise ParameterError(f"relay activation must be in 2..{frame.n_max}, got {activation}")
        return _dstbc_channel(scheme, frame, activation)
    layout = block_layout(scheme, frame, activation, frame.n_max)
    first = sum(b.bits for b in layout if b.channel == DIRECT)
    return first, sum(b.bits for b in layout) - first


def scheme_snr_channel(scheme: SchemeId, frame: FrameConfig, activation: Optional[int]) -> MatryoshkaChannel:
    """Long-term SNR channel: ((2, 1), (L'_2, L'_1)) once the relay is active, ((1,), (L,)) otherwise."""
    first, second = _phase_bits(scheme, frame, activation)
    if second == 0:
        return MatryoshkaChannel(D=(1,), L=(first,))
    return MatryoshkaChannel(D=(2, 1), L=(second, first))


def scheme_fading_channel(scheme: SchemeId, frame: FrameConfig, activation: Optional[int], n_rx: int) -> MatryoshkaChannel:
    """Short-term fading channel: ((2 N_r, N_r), (L'_2, L'_1)) for the Alamouti family.

    Monostream phases fade independently (h_sd vs. sqrt(SNR_SD) h_sd + sqrt(SNR_RD) h_rd)
    and are not nested, so they have no Matryoshka form.
    """
    if n_rx < 1:
        raise ParameterError(f"n_rx must be >= 1, got {n_rx}")
    first, second = _phase_bits(scheme, frame, activation)
    if second == 0:
        return MatryoshkaChannel(D=(n_rx,), L=(first,))
    if scheme.kind in MONOSTREAM_FAMILY:
        raise UnsupportedSchemeError(f"{scheme.kind.value} phases are block-fading, not Matryoshka")
    return MatryoshkaChannel(D=(2 * n_rx, n_rx), L=(second, first))


def single_link_reaches_target(scheme: SchemeId, frame: FrameConfig, activation: Optional[int], link: str) -> bool:
    """With only `link` left on, asymptotically decodable iff the blocks containing it carry >= K bits."""
    if link not in LINKS:
        raise ParameterError(f"link must be one of {LINKS}, got {link!r}")
    first, second = _phase_bits(scheme, frame, activation)
    # the source takes part in every block, the relay only in phase 2
    carried = first + second if link == "sd" else second
    return carried >= frame.K


def macro_diversity_order(scheme: SchemeId, frame: FrameConfig, activation: Optional[int]) -> int:
    """Fewest links to switch off before the target becomes unreachable."""
    first, second = _phase_bits(scheme, frame, activation)
    if second == 0:
        return 1
    if all(single_link_reaches_target(scheme, frame, activation, link) for link in LINKS):
        return 2
    return 1


def full_macro(scheme: SchemeId, frame: FrameConfig, activation: Optional[int]) -> bool:
    return macro_diversity_order(scheme, frame, activation) == 2


def micro_diversity_order(scheme: SchemeId, frame: FrameConfig, activation: Optional[int], n_rx: int) -> int:
    """2 N_r when full micro diversity is reached, N_r otherwise.

    Monostream family: both phases must carry K bits. Alamouti family: the
    Matryoshka bound of the fading channel.
    """
    if n_rx < 1:
        raise ParameterError(f"n_rx must be >= 1, got {n_rx}")
    first, second = _phase_bits(scheme, frame, activation)
    if second == 0:
        return n_rx
    if scheme.kind in MONOSTREAM_FAMILY:
        return 2 * n_rx if min(first, second) >= frame.K else n_rx
    if scheme.kind in ALAMOUTI_FAMILY:
        channel = scheme_fading_channel(scheme, frame, activation, n_rx)
        return matryoshka_bound(channel, Fraction(frame.K) / _exact(channel.total_bits))
    raise UnsupportedSchemeError(f"no micro diversity rule for {scheme.kind.value}")


def full_micro(scheme: SchemeId, frame: FrameConfig, activation: Optional[int], n_rx: int) -> bool:
    return micro_diversity_order(scheme, frame, activation, n_rx) == 2 * n_rx
