"""
Relaying-scheme composers.

Every scheme is reduced, for one fading realization (or a batch of them), to a
BlockProfile: homogeneous codeword segments, each seen through one effective
post-processing scalar channel. The engine only accumulates MI over blocks.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from app.errors import ParameterError, UnsupportedSchemeError
from app.phy.channel import LINK_OFF, FadingDraw, LinkBudget
from app.relaying.frame import FrameConfig
from app.relaying.patching import PATCHING_SOURCE_ORDER, patch_coefficients

MAX_RELAY_ORDER = 6
RELAY_ORDERS = (2, 4, 6)
ALPHABETS = ("qam", "gaussian")

# Effective-channel tags of a block
DIRECT = "direct"
COHERENT = "coherent"
PATCHED = "patched"
ALAMOUTI = "alamouti"
PATCHED_ALAMOUTI = "patched_alamouti"

ArrayLike = Union[float, np.ndarray]


class SchemeKind(str, Enum):
    DIRECT = "direct"
    MONOSTREAM = "monostream"
    MONOSTREAM_ADAPTED_MOD = "monostream_adapted_mod"
    PATCHED_MONOSTREAM = "patched_monostream"
    PATCHED_MONOSTREAM_MU = "patched_monostream_mu"
    DISTRIBUTED_ALAMOUTI = "distributed_alamouti"
    ALAMOUTI_ADAPTED_MOD = "alamouti_adapted_mod"
    PATCHED_ALAMOUTI = "patched_alamouti"
    PATCHED_GOLDEN = "patched_golden"
    PATCHED_SILVER = "patched_silver"


MONOSTREAM_FAMILY = frozenset({
    SchemeKind.MONOSTREAM,
    SchemeKind.MONOSTREAM_ADAPTED_MOD,
    SchemeKind.PATCHED_MONOSTREAM,
    SchemeKind.PATCHED_MONOSTREAM_MU,
})
ALAMOUTI_FAMILY = frozenset({
    SchemeKind.DISTRIBUTED_ALAMOUTI,
    SchemeKind.ALAMOUTI_ADAPTED_MOD,
    SchemeKind.PATCHED_ALAMOUTI,
    SchemeKind.PATCHED_GOLDEN,
    SchemeKind.PATCHED_SILVER,
})
DSTBC_KINDS = frozenset({SchemeKind.PATCHED_GOLDEN, SchemeKind.PATCHED_SILVER})
GAUSSIAN_KINDS = frozenset({SchemeKind.DIRECT, SchemeKind.MONOSTREAM, SchemeKind.DISTRIBUTED_ALAMOUTI})


@dataclass(frozen=True)
class SchemeId:
    """Scheme plus its parameters.

    m_r: relay order for the patched kinds; None on PatchedAlamouti and the
    space-time codes means "smallest order reaching full diversity".
    p: patched slots for PatchedMonostream; None patches every phase-2 slot.
    """
    kind: SchemeKind
    m_r: Optional[int] = None
    p: Optional[int] = None
    alphabet: str = "qam"

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.m_r is not None and self.m_r not in RELAY_ORDERS:
            raise ParameterError(f"m_r must be one of {RELAY_ORDERS}, got {self.m_r}")
        if self.kind == SchemeKind.PATCHED_MONOSTREAM and self.m_r is None:
            raise ParameterError("patched_monostream needs m_r")
        if self.p is not None:
            if self.kind != SchemeKind.PATCHED_MONOSTREAM:
                raise ParameterError(f"p only applies to patched_monostream, not {self.kind.value}")
            if self.p < 0:
                raise ParameterError(f"p must be >= 0, got {self.p}")
        if self.alphabet not in ALPHABETS:
            raise ParameterError(f"alphabet must be one of {ALPHABETS}, got {self.alphabet!r}")
        if self.alphabet == "gaussian" and self.kind not in GAUSSIAN_KINDS:
            raise UnsupportedSchemeError(f"{self.kind.value} has no Gaussian-alphabet counterpart")

    @classmethod
    def parse(
        cls,
        name: str,
        m_r: Optional[int] = None,
        p: Union[int, str, None] = None,
        alphabet: str = "qam",
    ) -> "SchemeId":
        """Config-file form: scheme = "patched_monostream", m_r = 4, p = "auto_mu" | "full" | 12."""
        try:
            kind = SchemeKind(str(name).strip().lower())
        except ValueError:
            known = ", ".join(k.value for k in SchemeKind)
            raise ParameterError(f"unknown scheme {name!r}; expected one of {known}") from None
        if isinstance(p, str):
            token = p.strip().lower()
            if token == "auto_mu":
                if kind not in (SchemeKind.PATCHED_MONOSTREAM, SchemeKind.PATCHED_MONOSTREAM_MU):
                    raise ParameterError(f"p='auto_mu' only applies to patched_monostream, not {kind.value}")
                return cls(SchemeKind.PATCHED_MONOSTREAM_MU, alphabet=alphabet)
            if token != "full":
                raise ParameterError(f"p must be an integer, 'full' or 'auto_mu', got {p!r}")
            p = None
        if kind == SchemeKind.PATCHED_MONOSTREAM_MU:
            m_r = None
        return cls(kind, m_r=m_r, p=p, alphabet=alphabet)

    @property
    def label(self) -> str:
        parts = []
        if self.m_r is not None:
            parts.append(f"m_r={self.m_r}")
        if self.kind == SchemeKind.PATCHED_MONOSTREAM:
            parts.append(f"p={'full' if self.p is None else self.p}")
        if self.alphabet != "qam":
            parts.append(self.alphabet)
        return self.kind.value + (f"({','.join(parts)})" if parts else "")


@dataclass(frozen=True)
class BlockLayout:
    bits: int
    order: int
    channel: str


@dataclass(frozen=True, eq=False)
class BlockProfile:
    bits: Tuple[int, ...]
    orders: Tuple[int, ...]
    eff_snr: Tuple[ArrayLike, ...]
    gaussian: bool = False

    @property
    def symbols(self) -> Tuple[int, ...]:
        return tuple(b // m for b, m in zip(self.bits, self.orders))

    @property
    def total_bits(self) -> int:
        return sum(self.bits)

    @property
    def blocks(self):
        return list(zip(self.bits, self.orders, self.eff_snr))


def adapted_order(remaining_symbols: int, K: int, m_s: int) -> int:
    """Smallest even m' >= m_s such that remaining_symbols * m' >= K, capped at 64-QAM."""
    if remaining_symbols < 0:
        raise ParameterError(f"remaining symbols must be >= 0, got {remaining_symbols}")
    for order in range(m_s, MAX_RELAY_ORDER + 1, 2):
        if remaining_symbols * order >= K:
            return order
    return max(m_s, MAX_RELAY_ORDER)


def minimal_use_params(l1_symbols: int, l2_symbols: int, K: int, m_s: int) -> Tuple[int, int]:
    """Minimal Use: smallest (m_R, p), m_R first, with L'_2 = p*m_R + (L_2 - p)*m_S >= K, lengths in symbols.

    Returns (m_s, 0) when phase 2 already carries K bits, and full 64-QAM
    patching when no pair reaches K.
    """
    if l2_symbols * m_s >= K:
        return m_s, 0
    for m_r in RELAY_ORDERS:
        if m_r <= m_s:
            continue
        ratio = m_r // m_s
        p_max = min(l2_symbols, l1_symbols // (ratio - 1))
        p = math.ceil((K - l2_symbols * m_s) / (m_r - m_s))
        if p <= p_max:
            return m_r, p
    ratio = MAX_RELAY_ORDER // m_s
    return MAX_RELAY_ORDER, min(l2_symbols, l1_symbols // (ratio - 1))


def _patched_layout(ph1: int, ph2: int, p: int, m_s: int, m_r: int, coherent: str, patched: str):
    """Patch the first p phase-2 slots; p is capped by phase 2 and by the unused phase-1 symbols."""
    if m_s != PATCHING_SOURCE_ORDER:
        raise UnsupportedSchemeError(f"patching needs a QPSK source (m_s=2), got m_s={m_s}")
    ratio = m_r // m_s
    if ratio > 1:
        p = min(p, ph2, ph1 // (ratio - 1))
    else:
        p = 0
    return [
        BlockLayout((ph1 - p * (ratio - 1)) * m_s, m_s, DIRECT),
        BlockLayout(p * m_r, m_r, patched),
        BlockLayout((ph2 - p) * m_s, m_s, coherent),
    ]


def resolved_relay_order(scheme: SchemeId, frame: FrameConfig, activation: int) -> int:
    """m_R actually used once the relay activates (explicit, or chosen from the full phase 2)."""
    if scheme.m_r is not None:
        return scheme.m_r
    l2_bits = frame.symbols_between(activation, frame.n_max) * frame.m_s
    if scheme.kind == SchemeKind.PATCHED_MONOSTREAM_MU:
        return minimal_use_params(frame.symbols_until(activation - 1), l2_bits // frame.m_s, frame.K, frame.m_s)[0]
    from app.relaying.diversity import min_mr_for_full_diversity

    order = min_mr_for_full_diversity(scheme, frame.K, l2_bits, frame.m_s)
    return MAX_RELAY_ORDER if order is None else order


def _check_activation(frame: FrameConfig, activation: Optional[int], n: int):
    frame.check_horizon(n)
    if activation is None:
        return
    if activation < 2 or activation > frame.n_max:
        raise ParameterError(f"relay activation must be in 2..{frame.n_max}, got {activation}")
    if activation > n:
        raise ParameterError(f"relay activation {activation} lies beyond horizon {n}")


def block_layout(scheme: SchemeId, frame: FrameConfig, activation: Optional[int], n: int) -> Tuple[BlockLayout, ...]:
    """Bit segmentation up to horizon n, independent of the fading; zero-bit blocks dropped."""
    _check_activation(frame, activation, n)
    if scheme.kind in DSTBC_KINDS:
        raise UnsupportedSchemeError(f"{scheme.kind.value} is analysed algebraically only")
    m_s = frame.m_s
    ph1, ph2 = frame.phase_symbols(activation, n)
    kind = scheme.kind
    if kind == SchemeKind.DIRECT or activation is None:
        layout = [BlockLayout((ph1 + ph2) * m_s, m_s, DIRECT)]
    elif kind in (SchemeKind.MONOSTREAM, SchemeKind.DISTRIBUTED_ALAMOUTI):
        tag = COHERENT if kind == SchemeKind.MONOSTREAM else ALAMOUTI
        layout = [BlockLayout(ph1 * m_s, m_s, DIRECT), BlockLayout(ph2 * m_s, m_s, tag)]
    elif kind in (SchemeKind.MONOSTREAM_ADAPTED_MOD, SchemeKind.ALAMOUTI_ADAPTED_MOD):
        # chosen once, when the relay switches, from what is left of the frame
        order = adapted_order(frame.symbols_between(activation, frame.n_max), frame.K, m_s)
        tag = COHERENT if kind == SchemeKind.MONOSTREAM_ADAPTED_MOD else ALAMOUTI
        layout = [BlockLayout(ph1 * m_s, m_s, DIRECT), BlockLayout(ph2 * order, order, tag)]
    elif kind == SchemeKind.PATCHED_MONOSTREAM:
        p = ph2 if scheme.p is None else scheme.p
        layout = _patched_layout(ph1, ph2, p, m_s, scheme.m_r, COHERENT, PATCHED)
    elif kind == SchemeKind.PATCHED_MONOSTREAM_MU:
        m_r, p = minimal_use_params(
            ph1, frame.symbols_between(activation, frame.n_max), frame.K, m_s
        )
        layout = _patched_layout(ph1, ph2, p, m_s, m_r, COHERENT, PATCHED)
    elif kind == SchemeKind.PATCHED_ALAMOUTI:
        m_r = resolved_relay_order(scheme, frame, activation)
        layout = _patched_layout(ph1, ph2, ph2, m_s, m_r, ALAMOUTI, PATCHED_ALAMOUTI)
    else:
        raise UnsupportedSchemeError(f"no block layout for {kind.value}")
    return tuple(block for block in layout if block.bits > 0)


def compose_monostream(
    draw: FadingDraw,
    budget: LinkBudget,
    active_links: Iterable[str] = ("S", "R"),
    extra_links: Sequence[Tuple[np.ndarray, float]] = (),
) -> np.ndarray:
    """sum_j sqrt(SNR_j) h_j over the active transmitters (element-wise over N_r).

    `extra_links` holds (h, snr_linear) pairs of additional relays.
    """
    active = {link.upper() for link in active_links}
    unknown = active - {"S", "R"}
    if unknown:
        raise ParameterError(f"unknown transmitters {sorted(unknown)}; expected S and/or R")
    channel = np.zeros(np.shape(draw.h_sd), dtype=complex)
    if "S" in active:
        channel = channel + np.sqrt(budget.sd) * draw.h_sd
    if "R" in active:
        channel = channel + np.sqrt(budget.rd) * draw.h_rd
    for h, snr_linear in extra_links:
        channel = channel + np.sqrt(snr_linear) * np.asarray(h, dtype=complex)
    return channel


def _norm2(channel: np.ndarray) -> ArrayLike:
    result = np.sum(np.abs(channel) ** 2, axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def compose_alamouti_snr(draw: FadingDraw, budget: LinkBudget) -> ArrayLike:
    """SNR_SD ||h_sd||^2 + SNR_RD ||h_rd||^2."""
    return _norm2(np.sqrt(budget.sd) * draw.h_sd) + _norm2(np.sqrt(budget.rd) * draw.h_rd)


def _block_snr(tag: str, order: int, m_s: int, draw: FadingDraw, budget: LinkBudget) -> ArrayLike:
    if tag == DIRECT:
        return _norm2(np.sqrt(budget.sd) * draw.h_sd)
    if tag == COHERENT:
        return _norm2(compose_monostream(draw, budget))
    if tag == ALAMOUTI:
        return compose_alamouti_snr(draw, budget)
    top = patch_coefficients(m_s, order).top
    if tag == PATCHED:
        return _norm2(np.sqrt(budget.sd) * draw.h_sd + top * np.sqrt(budget.rd) * draw.h_rd)
    if tag == PATCHED_ALAMOUTI:
        return _norm2(np.sqrt(budget.sd) * draw.h_sd) + top ** 2 * _norm2(np.sqrt(budget.rd) * draw.h_rd)
    raise ParameterError(f"unknown block channel {tag!r}")


def block_profile(
    scheme: SchemeId,
    frame: FrameConfig,
    activation: Optional[int],
    n: int,
    draw: FadingDraw,
    budget: LinkBudget,
) -> BlockProfile:
    """Per-realization block decomposition at horizon n; `activation` is the first relay sub-frame."""
    layout = block_layout(scheme, frame, activation, n)
    if activation is not None and budget.snr_rd_db == LINK_OFF:
        # a relay that cannot reach the destination leaves the source segmentation untouched
        layout = block_layout(scheme, frame, None, n)
    return BlockProfile(
        bits=tuple(block.bits for block in layout),
        orders=tuple(block.order for block in layout),
        eff_snr=tuple(_block_snr(block.channel, block.order, frame.m_s, draw, budget) for block in layout),
        gaussian=scheme.alphabet == "gaussian",
    )
