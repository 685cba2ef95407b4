"""
DDF/HARQ Monte Carlo engine.

Trials are simulated in RNG_BLOCK-sized chunks, vectorized over the trial
axis. Chunks are independent and concatenated in trial order, so every
estimate is a function of (seed, configuration) only.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.errors import ParameterError
from app.phy.channel import RNG_BLOCK, FadingDraw, LinkBudget, draw_fading_batch
from app.phy.mutual_information import MiTableSet, gaussian_mi, mi_lookup, require_table
from app.relaying.frame import FrameConfig, rate_after_n
from app.relaying.schemes import BlockProfile, SchemeId, block_profile

logger = logging.getLogger(__name__)

MIN_TRIALS = 1_000
# accumulated bits within this of K count as decoded (table saturation round-off)
DECODE_TOLERANCE_BITS = 1e-9
NO_RELAY = 0  # activation / first-decode value meaning "never"


class _Marginal:
    def __repr__(self):
        return "MARGINAL"


MARGINAL = _Marginal()
Activation = Union[int, None, _Marginal]


@dataclass(frozen=True)
class TrialOutcome:
    activation: Optional[int]
    dest_first_decode: Optional[int]
    rate_credited: float


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_trials: int
    seed: int

    def as_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "n_trials": self.n_trials, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Per-trial results; 0 in `activation` / `first_decode` means the event never happened."""
    activation: np.ndarray
    first_decode: np.ndarray
    rate_credited: np.ndarray
    seed: int
    start: int = 0

    @property
    def n_trials(self) -> int:
        return len(self.first_decode)

    def outcome(self, i: int) -> TrialOutcome:
        activation = int(self.activation[i])
        decode = int(self.first_decode[i])
        return TrialOutcome(
            activation=activation or None,
            dest_first_decode=decode or None,
            rate_credited=float(self.rate_credited[i]),
        )


def relay_activation(frame: FrameConfig, i_sr: float) -> Optional[int]:
    """M = 1 + (smallest m <= N_max - 1 with I_SR >= R_m), or None."""
    if i_sr < 0 or math.isnan(i_sr):
        raise ParameterError(f"relay MI must be >= 0, got {i_sr}")
    activation = int(_activation_array(frame, np.array([i_sr]))[0])
    return activation or None


def _activation_array(frame: FrameConfig, i_sr: np.ndarray) -> np.ndarray:
    rates = np.array([rate_after_n(frame, m) for m in range(1, frame.n_max)])
    if rates.size == 0:
        return np.zeros(len(i_sr), dtype=int)
    # R_m is decreasing: the count of rates above I_SR is (first decoding m) - 1
    first = 1 + np.sum(rates[None, :] > i_sr[:, None] + DECODE_TOLERANCE_BITS / frame.K, axis=1)
    return np.where(first <= frame.n_max - 1, first + 1, NO_RELAY)


def _block_mi(profile: BlockProfile, tables: MiTableSet) -> List[Union[float, np.ndarray]]:
    if profile.gaussian:
        return [gaussian_mi(snr) for snr in profile.eff_snr]
    return [mi_lookup(require_table(tables, order), snr) for order, snr in zip(profile.orders, profile.eff_snr)]


def accumulated_bits(profile: BlockProfile, tables: MiTableSet) -> Union[float, np.ndarray]:
    """sum_blocks symbols * MI: bits the destination has gathered."""
    return sum(symbols * mi for symbols, mi in zip(profile.symbols, _block_mi(profile, tables)))


def accumulated_mi(profile: BlockProfile, frame: FrameConfig, n: int, tables: MiTableSet) -> Union[float, np.ndarray]:
    """I_D after sub-frame n in bits per channel use; decoded iff >= R_n."""
    return accumulated_bits(profile, tables) / frame.symbols_until(n)


def relay_mi(scheme: SchemeId, frame: FrameConfig, budget: LinkBudget, h_sr, tables: MiTableSet):
    snr = budget.sr * np.abs(h_sr) ** 2
    if scheme.alphabet == "gaussian":
        return gaussian_mi(snr)
    return mi_lookup(require_table(tables, frame.m_s), snr)


def _check_forced(frame: FrameConfig, activation: Activation):
    if activation is MARGINAL or activation is None:
        return
    if not 2 <= activation <= frame.n_max:
        raise ParameterError(f"forced activation must be in 2..{frame.n_max} or None, got {activation}")


def _first_decode(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    draw: FadingDraw,
    activation: Optional[int],
    tables: MiTableSet,
) -> np.ndarray:
    """First decoding sub-frame (0 = never) of trials sharing one activation."""
    first = np.zeros(draw.n_trials, dtype=int)
    for n in range(1, frame.n_max + 1):
        active = activation if activation is not None and activation <= n else None
        profile = block_profile(scheme, frame, active, n, draw, budget)
        bits = np.broadcast_to(accumulated_bits(profile, tables), first.shape)
        decoded = (bits >= frame.K - DECODE_TOLERANCE_BITS) & (first == 0)
        first[decoded] = n
    return first


def _simulate_chunk(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    seed: int,
    tables: MiTableSet,
    start: int,
    count: int,
    activation: Activation,
) -> Tuple[np.ndarray, np.ndarray]:
    draw = draw_fading_batch(budget.n_rx, seed, start, count)
    if activation is MARGINAL:
        activations = _activation_array(frame, np.atleast_1d(relay_mi(scheme, frame, budget, draw.h_sr, tables)))
    else:
        activations = np.full(count, activation or NO_RELAY, dtype=int)
    first = np.zeros(count, dtype=int)
    for value in np.unique(activations):
        index = np.flatnonzero(activations == value)
        first[index] = _first_decode(scheme, frame, budget, draw.select(index), int(value) or None, tables)
    return activations, first


def simulate_batch(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    n_trials: int,
    seed: int,
    tables: MiTableSet,
    activation: Activation = MARGINAL,
    threads: int = 1,
    start: int = 0,
) -> TrialBatch:
    """Trials start..start+n_trials-1; `activation` forces the relay start (None: relay silent)."""
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials}")
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")
    _check_forced(frame, activation)
    bounds = []
    position = start
    end = start + n_trials
    while position < end:
        stop = min(end, (position // RNG_BLOCK + 1) * RNG_BLOCK)
        bounds.append((position, stop - position))
        position = stop

    def run(chunk):
        return _simulate_chunk(scheme, frame, budget, seed, tables, chunk[0], chunk[1], activation)

    if threads == 1 or len(bounds) == 1:
        results = [run(chunk) for chunk in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, bounds))
    activations = np.concatenate([r[0] for r in results])
    first = np.concatenate([r[1] for r in results])
    rates = np.array([0.0] + [rate_after_n(frame, n) for n in range(1, frame.n_max + 1)])
    return TrialBatch(activation=activations, first_decode=first, rate_credited=rates[first], seed=seed, start=start)


def simulate_trial(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    trial_index: int,
    seed: int,
    tables: MiTableSet,
) -> TrialOutcome:
    return simulate_batch(scheme, frame, budget, 1, seed, tables, start=trial_index).outcome(0)


def _check_trials(n_trials: int):
    if n_trials < MIN_TRIALS:
        raise ParameterError(f"estimators need >= {MIN_TRIALS} trials, got {n_trials}")


def outage_from_batch(batch: TrialBatch) -> Estimate:
    p = float(np.mean(batch.first_decode == 0))
    return Estimate(value=p, stderr=math.sqrt(p * (1.0 - p) / batch.n_trials), n_trials=batch.n_trials, seed=batch.seed)


def spectral_efficiency_from_batch(batch: TrialBatch) -> Estimate:
    rates = batch.rate_credited
    stderr = float(np.std(rates, ddof=1)) / math.sqrt(batch.n_trials) if batch.n_trials > 1 else 0.0
    return Estimate(value=float(np.mean(rates)), stderr=stderr, n_trials=batch.n_trials, seed=batch.seed)


def estimate_outage(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    n_trials: int,
    seed: int,
    tables: MiTableSet,
    threads: int = 1,
) -> Estimate:
    """P_out after N_max sub-frames, relay activation drawn per trial."""
    _check_trials(n_trials)
    return outage_from_batch(simulate_batch(scheme, frame, budget, n_trials, seed, tables, threads=threads))


def conditioned_outage(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    activation: Optional[int],
    n_trials: int,
    seed: int,
    tables: MiTableSet,
    threads: int = 1,
) -> Estimate:
    """P_out after N_max sub-frames with the relay forced to transmit from `activation`."""
    _check_trials(n_trials)
    batch = simulate_batch(scheme, frame, budget, n_trials, seed, tables, activation=activation, threads=threads)
    return outage_from_batch(batch)


def estimate_spectral_efficiency(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    n_trials: int,
    seed: int,
    tables: MiTableSet,
    threads: int = 1,
    activation: Activation = MARGINAL,
) -> Estimate:
    """Mean credited rate R_{n*} (0 when the frame is lost)."""
    _check_trials(n_trials)
    batch = simulate_batch(scheme, frame, budget, n_trials, seed, tables, activation=activation, threads=threads)
    return spectral_efficiency_from_batch(batch)


def slow_link_adaptation(
    scheme: SchemeId,
    rates: Sequence[float],
    T: Sequence[int],
    budget: LinkBudget,
    n_trials: int,
    seed: int,
    tables: MiTableSet,
    m_s: int = 2,
    threads: int = 1,
    activation: Activation = MARGINAL,
) -> Tuple[float, Estimate]:
    """Best first-sub-frame coding rate; ties go to the lower rate."""
    if not rates:
        raise ParameterError("slow link adaptation needs at least one coding rate")
    best: Optional[Tuple[float, Estimate]] = None
    for rate in sorted(rates):
        frame = FrameConfig.from_first_subframe_rate(rate, T, m_s)
        estimate = estimate_spectral_efficiency(
            scheme, frame, budget, n_trials, seed, tables, threads=threads, activation=activation
        )
        logger.debug("SLA %s rate=%.2f SE=%.4f", scheme.label, rate, estimate.value)
        if best is None or estimate.value > best[1].value:
            best = (rate, estimate)
    return best


@dataclass(frozen=True)
class OutageDecomposition:
    """P_out = sum_M P_1st,R(M) P_out(M) + P_out,R P_out(no relay), over the same trials."""
    p_first_relay: Dict[int, float]
    p_relay_out: float
    conditional_outage: Dict[Optional[int], float]

    @property
    def total(self) -> float:
        total = sum(p * self.conditional_outage[m] for m, p in self.p_first_relay.items())
        if self.p_relay_out > 0:
            total += self.p_relay_out * self.conditional_outage[None]
        return total


def _groups(batch: TrialBatch) -> Iterable[Tuple[Optional[int], np.ndarray]]:
    for value in np.unique(batch.activation):
        yield (int(value) or None), batch.activation == value


def decompose_outage(batch: TrialBatch, frame: FrameConfig) -> OutageDecomposition:
    p_first_relay: Dict[int, float] = {}
    conditional: Dict[Optional[int], float] = {}
    p_relay_out = 0.0
    for activation, mask in _groups(batch):
        share = float(np.mean(mask))
        conditional[activation] = float(np.mean(batch.first_decode[mask] == 0))
        if activation is None:
            p_relay_out = share
        else:
            p_first_relay[activation] = share
    return OutageDecomposition(p_first_relay=p_first_relay, p_relay_out=p_relay_out, conditional_outage=conditional)


@dataclass(frozen=True)
class HarqTerms:
    """P_1st,R per activation, P_out,R, and P_1st,D(n | activation) with None for the silent relay."""
    p_first_relay: Dict[int, float]
    p_relay_out: float
    p_first_dest: Dict[Optional[int], Dict[int, float]] = field(default_factory=dict)


def _first_dest_distribution(first_decode: np.ndarray, frame: FrameConfig) -> Dict[int, float]:
    return {n: float(np.mean(first_decode == n)) for n in range(1, frame.n_max + 1)}


def decompose_spectral_efficiency(batch: TrialBatch, frame: FrameConfig) -> HarqTerms:
    """Regroups one batch into the terms of the HARQ spectral efficiency."""
    outage = decompose_outage(batch, frame)
    first_dest = {
        activation: _first_dest_distribution(batch.first_decode[mask], frame)
        for activation, mask in _groups(batch)
    }
    return HarqTerms(p_first_relay=outage.p_first_relay, p_relay_out=outage.p_relay_out, p_first_dest=first_dest)


def estimate_harq_terms(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    n_trials: int,
    seed: int,
    tables: MiTableSet,
    threads: int = 1,
) -> HarqTerms:
    """Relay and destination terms estimated separately.

    Relay activation probabilities come from the S->R draws alone; the
    destination terms from batches with the activation forced.
    """
    _check_trials(n_trials)
    p_first_relay: Dict[int, float] = {}
    counts = np.zeros(frame.n_max + 1)
    for position in range(0, n_trials, RNG_BLOCK):
        count = min(RNG_BLOCK, n_trials - position)
        draw = draw_fading_batch(budget.n_rx, seed, position, count)
        activations = _activation_array(frame, np.atleast_1d(relay_mi(scheme, frame, budget, draw.h_sr, tables)))
        counts += np.bincount(activations, minlength=frame.n_max + 1)
    probabilities = counts / n_trials
    for activation in range(2, frame.n_max + 1):
        if probabilities[activation] > 0:
            p_first_relay[activation] = float(probabilities[activation])
    p_relay_out = float(probabilities[NO_RELAY])

    first_dest: Dict[Optional[int], Dict[int, float]] = {}
    for activation in list(p_first_relay) + ([None] if p_relay_out > 0 else []):
        batch = simulate_batch(scheme, frame, budget, n_trials, seed, tables, activation=activation, threads=threads)
        first_dest[activation] = _first_dest_distribution(batch.first_decode, frame)
    return HarqTerms(p_first_relay=p_first_relay, p_relay_out=p_relay_out, p_first_dest=first_dest)


def spectral_efficiency_from_terms(terms: HarqTerms, frame: FrameConfig) -> float:
    """sum_M P_1st,R(M) sum_n P_1st,D(n, M) R_n + P_out,R sum_n P_1st,D(n, none) R_n."""
    rates = {n: rate_after_n(frame, n) for n in range(1, frame.n_max + 1)}

    def credited(activation: Optional[int]) -> float:
        return sum(p * rates[n] for n, p in terms.p_first_dest[activation].items())

    total = sum(p * credited(m) for m, p in terms.p_first_relay.items())
    if terms.p_relay_out > 0:
        total += terms.p_relay_out * credited(None)
    return total
