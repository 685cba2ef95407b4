"""SNR needed on one axis to meet an outage or spectral-efficiency target (bisection)."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from app.config import settings
from app.errors import OrderingError, ParameterError
from app.phy.channel import SNR_AXES, LinkBudget
from app.phy.mutual_information import MiTableSet
from app.relaying.frame import FrameConfig
from app.relaying.schemes import SchemeId
from app.simulation.engine import (
    MARGINAL,
    Activation,
    Estimate,
    outage_from_batch,
    simulate_batch,
    slow_link_adaptation,
    spectral_efficiency_from_batch,
)

logger = logging.getLogger(__name__)

METRICS = ("outage", "se")
SEARCH_AXES = SNR_AXES + ("common",)
# stderr multiple before a reversed bracket counts as non-monotone
ORDERING_SIGMAS = 3.0


@dataclass(frozen=True)
class Target:
    metric: str
    value: float

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ParameterError(f"target metric must be one of {METRICS}, got {self.metric!r}")
        if self.metric == "outage" and not 0 <= self.value <= 1:
            raise ParameterError(f"outage target must be in [0, 1], got {self.value}")
        if self.metric == "se" and self.value < 0:
            raise ParameterError(f"spectral-efficiency target must be >= 0, got {self.value}")

    def met(self, estimate: Estimate) -> bool:
        if self.metric == "outage":
            return estimate.value <= self.value
        return estimate.value >= self.value

    def better(self, a: Estimate, b: Estimate) -> bool:
        """a significantly better than b."""
        margin = ORDERING_SIGMAS * math.hypot(a.stderr, b.stderr)
        if self.metric == "outage":
            return a.value < b.value - margin
        return a.value > b.value + margin


@dataclass(frozen=True)
class ContourPoint:
    axis: str
    snr_db: float  # inf when infeasible
    feasible: bool
    estimate: Estimate
    chosen_rate: Optional[float] = None


def _evaluate(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    target: Target,
    tables: MiTableSet,
    n_trials: int,
    seed: int,
    activation: Activation,
    rates: Optional[Sequence[float]],
    threads: int,
) -> Tuple[Estimate, Optional[float]]:
    if target.metric == "se" and rates:
        rate, estimate = slow_link_adaptation(
            scheme, rates, frame.T, budget, n_trials, seed, tables,
            m_s=frame.m_s, threads=threads, activation=activation,
        )
        return estimate, rate
    batch = simulate_batch(scheme, frame, budget, n_trials, seed, tables, activation=activation, threads=threads)
    if target.metric == "outage":
        return outage_from_batch(batch), None
    return spectral_efficiency_from_batch(batch), None


def find_snr_for_target(
    scheme: SchemeId,
    frame: FrameConfig,
    budget: LinkBudget,
    axis: str,
    target: Target,
    tables: MiTableSet,
    n_trials: int,
    seed: int,
    lo_db: Optional[float] = None,
    hi_db: Optional[float] = None,
    tol_db: Optional[float] = None,
    activation: Activation = MARGINAL,
    rates: Optional[Sequence[float]] = None,
    threads: int = 1,
) -> ContourPoint:
    """Smallest SNR on `axis` (within tol_db) meeting the target; the other SNRs come from `budget`.

    Every evaluation reuses the same seed, so the bisection runs on common
    random numbers. `rates` turns an SE target into a slow-link-adapted one.
    """
    lo_db = settings.search_lo_db if lo_db is None else lo_db
    hi_db = settings.search_hi_db if hi_db is None else hi_db
    tol_db = settings.search_tol_db if tol_db is None else tol_db
    if axis not in SEARCH_AXES:
        raise ParameterError(f"search axis must be one of {SEARCH_AXES}, got {axis!r}")
    if not lo_db < hi_db:
        raise ParameterError(f"search window must satisfy lo < hi, got [{lo_db}, {hi_db}]")
    if tol_db <= 0:
        raise ParameterError(f"tolerance must be > 0, got {tol_db}")

    def evaluate(snr_db: float) -> Tuple[Estimate, Optional[float]]:
        return _evaluate(
            scheme, frame, budget.with_snr(axis, snr_db), target, tables, n_trials, seed, activation, rates, threads
        )

    at_hi, rate_hi = evaluate(hi_db)
    if not target.met(at_hi):
        at_lo, _ = evaluate(lo_db)
        if target.better(at_lo, at_hi):
            raise OrderingError(
                f"{target.metric} at {lo_db} dB ({at_lo.value:.4g}) beats {hi_db} dB ({at_hi.value:.4g}) on {axis}"
            )
        logger.debug("%s: target %s=%g unmet at %g dB", scheme.label, target.metric, target.value, hi_db)
        return ContourPoint(axis=axis, snr_db=math.inf, feasible=False, estimate=at_hi, chosen_rate=rate_hi)

    at_lo, rate_lo = evaluate(lo_db)
    if target.met(at_lo):
        return ContourPoint(axis=axis, snr_db=lo_db, feasible=True, estimate=at_lo, chosen_rate=rate_lo)

    best = (at_hi, rate_hi)
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        at_mid, rate_mid = evaluate(mid)
        if target.met(at_mid):
            hi_db, best = mid, (at_mid, rate_mid)
        else:
            lo_db = mid
    return ContourPoint(axis=axis, snr_db=hi_db, feasible=True, estimate=best[0], chosen_rate=best[1])
