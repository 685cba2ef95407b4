"""
Discrete-input mutual information on the scalar channel y = sqrt(snr)*x + n,
n ~ CN(0, 1), x uniform over a QAM alphabet.

The MI is evaluated by a 2-D Gauss-Hermite product rule over the noise and
tabulated on a dB grid; the engine only ever touches the tables.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np
import pandas as pd
from numpy.polynomial.hermite import hermgauss
from scipy.special import logsumexp

from app.errors import ConfigurationError, DomainError, ParameterError
from app.phy.constellation import Constellation, qam

logger = logging.getLogger(__name__)

MIN_QUADRATURE_ORDER = 8
MIN_MC_SAMPLES = 10_000
REQUIRED_GRID_LO_DB = -20.0
REQUIRED_GRID_HI_DB = 40.0
MAX_GRID_STEP_DB = 0.25
# pairs * |alphabet|^2 kept under this many complex entries per MC chunk
_MC_CHUNK_ENTRIES = 4_000_000

ArrayLike = Union[float, np.ndarray]


def _check_snr(snr_linear: float) -> float:
    snr = float(snr_linear)
    if not math.isfinite(snr):
        raise DomainError(f"SNR must be finite, got {snr_linear!r}")
    if snr < 0:
        raise DomainError(f"SNR must be >= 0, got {snr_linear!r}")
    return snr


def _conditional_entropy_terms(points: np.ndarray, snr: float, noise: np.ndarray) -> np.ndarray:
    """log Σ_x' exp(-|sqrt(snr)(x - x') + n|^2 + |n|^2) for every (x, n); shape (M, len(noise))."""
    diff = np.sqrt(snr) * (points[:, None] - points[None, :])
    exponent = -np.abs(diff[:, :, None] + noise[None, None, :]) ** 2 + np.abs(noise)[None, None, :] ** 2
    return logsumexp(exponent, axis=1)


def _quadrature_mi(c: Constellation, snr: float, order: int) -> float:
    nodes, weights = hermgauss(order)
    noise = (nodes[:, None] + 1j * nodes[None, :]).ravel()
    w2 = (weights[:, None] * weights[None, :]).ravel() / np.pi
    terms = _conditional_entropy_terms(c.points, snr, noise)
    penalty = float(np.mean(terms @ w2)) / np.log(2.0)
    return c.order_bits - penalty


def _monte_carlo_mi(c: Constellation, snr: float, samples: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    noise = (rng.standard_normal(samples) + 1j * rng.standard_normal(samples)) / np.sqrt(2.0)

    chunk = max(1, _MC_CHUNK_ENTRIES // (c.size * c.size))
    total = 0.0
    for start in range(0, samples, chunk):
        block = noise[start:start + chunk]
        total += float(np.sum(_conditional_entropy_terms(c.points, snr, block)))
    penalty = total / (samples * c.size) / np.log(2.0)
    return c.order_bits - penalty


def mi_estimate(
    c: Constellation,
    snr_linear: float,
    method: str = "quadrature",
    quadrature_order: int = 16,
    samples: int = 100_000,
    seed: int = 0,
) -> float:
    """I(X;Y) in bits per channel use.

    `quadrature` is deterministic and used for tables; `monte_carlo`
    averages over noise draws (all inputs per draw) and serves as oracle.
    """
    snr = _check_snr(snr_linear)
    if method == "quadrature":
        if quadrature_order < MIN_QUADRATURE_ORDER:
            raise ParameterError(f"quadrature order must be >= {MIN_QUADRATURE_ORDER}, got {quadrature_order}")
        value = _quadrature_mi(c, snr, quadrature_order)
    elif method == "monte_carlo":
        if samples < MIN_MC_SAMPLES:
            raise ParameterError(f"Monte Carlo MI needs >= {MIN_MC_SAMPLES} samples, got {samples}")
        value = _monte_carlo_mi(c, snr, samples, seed)
    else:
        raise ParameterError(f"unknown MI estimator {method!r}")
    return float(min(max(value, 0.0), c.order_bits))


def gaussian_mi(snr_linear: ArrayLike) -> ArrayLike:
    """log2(1 + snr): Gaussian-input capacity."""
    result = np.log2(1.0 + np.asarray(snr_linear, dtype=float))
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True, eq=False)
class MiTable:
    constellation: Constellation
    snr_grid_db: np.ndarray = field(repr=False)
    mi_bits: np.ndarray = field(repr=False)

    @property
    def order_bits(self) -> int:
        return self.constellation.order_bits

    def __len__(self) -> int:
        return len(self.snr_grid_db)

    def lookup(self, snr_linear: ArrayLike) -> ArrayLike:
        return mi_lookup(self, snr_linear)


MiTableSet = Dict[int, MiTable]


def _grid(lo_db: float, hi_db: float, step_db: float) -> np.ndarray:
    if step_db <= 0 or step_db > MAX_GRID_STEP_DB:
        raise ParameterError(f"grid step must be in (0, {MAX_GRID_STEP_DB}] dB, got {step_db}")
    if lo_db > REQUIRED_GRID_LO_DB or hi_db < REQUIRED_GRID_HI_DB:
        raise ParameterError(
            f"grid [{lo_db}, {hi_db}] dB must cover [{REQUIRED_GRID_LO_DB}, {REQUIRED_GRID_HI_DB}] dB"
        )
    count = int(round((hi_db - lo_db) / step_db)) + 1
    return lo_db + step_db * np.arange(count)


def _enforce_table_invariants(c: Constellation, grid_db: np.ndarray, mi: np.ndarray) -> np.ndarray:
    # quadrature round-off near saturation can jitter by ~1e-12
    mi = np.clip(mi, 0.0, float(c.order_bits))
    mi = np.minimum(mi, np.log2(1.0 + 10.0 ** (grid_db / 10.0)))
    return np.maximum.accumulate(mi)


def build_mi_table(
    c: Constellation,
    lo_db: float = REQUIRED_GRID_LO_DB,
    hi_db: float = REQUIRED_GRID_HI_DB,
    step_db: float = MAX_GRID_STEP_DB,
    quadrature_order: int = 16,
) -> MiTable:
    grid_db = _grid(lo_db, hi_db, step_db)
    logger.info("Building MI table for %s (%d points, GH order %d)", c.name, len(grid_db), quadrature_order)
    mi = np.array([
        mi_estimate(c, 10.0 ** (db / 10.0), method="quadrature", quadrature_order=quadrature_order)
        for db in grid_db
    ])
    mi = _enforce_table_invariants(c, grid_db, mi)
    grid_db.setflags(write=False)
    mi.setflags(write=False)
    return MiTable(constellation=c, snr_grid_db=grid_db, mi_bits=mi)


def mi_lookup(t: MiTable, snr_linear: ArrayLike) -> ArrayLike:
    """Linear interpolation in dB.

    Below the grid the lowest entry is scaled linearly with SNR (so 0 -> 0);
    above the grid the top entry is held.
    """
    snr = np.asarray(snr_linear, dtype=float)
    if np.any(np.isnan(snr)) or np.any(snr < 0):
        raise DomainError("SNR must be a non-negative number")
    lowest_snr = 10.0 ** (t.snr_grid_db[0] / 10.0)
    with np.errstate(divide="ignore"):
        snr_db = 10.0 * np.log10(snr)
    inside = np.interp(snr_db, t.snr_grid_db, t.mi_bits)
    below = t.mi_bits[0] * snr / lowest_snr
    result = np.where(snr < lowest_snr, below, inside)
    return float(result) if result.ndim == 0 else result


def export_mi_table(t: MiTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"snr_db": t.snr_grid_db, "mi_bits": t.mi_bits})
    with path.open("w", newline="") as handle:
        handle.write(f"# constellation={t.constellation.name} order_bits={t.order_bits}\n")
        frame.to_csv(handle, index=False, float_format="%.12g")
    return path


def import_mi_table(path: Union[str, Path], c: Constellation) -> MiTable:
    frame = pd.read_csv(path, comment="#")
    if list(frame.columns) != ["snr_db", "mi_bits"]:
        raise ConfigurationError(f"{path}: expected columns snr_db, mi_bits, got {list(frame.columns)}")
    grid_db = frame["snr_db"].to_numpy(dtype=float)
    mi = frame["mi_bits"].to_numpy(dtype=float)
    if np.any(np.diff(grid_db) <= 0) or np.any(np.diff(mi) < 0) or np.any(mi > c.order_bits):
        raise ConfigurationError(f"{path}: table violates grid/monotonicity invariants for {c.name}")
    grid_db.setflags(write=False)
    mi.setflags(write=False)
    return MiTable(constellation=c, snr_grid_db=grid_db, mi_bits=mi)


def mi_table_set(
    orders: Iterable[int] = (2, 4, 6),
    cache_dir: Optional[Union[str, Path]] = None,
    lo_db: float = REQUIRED_GRID_LO_DB,
    hi_db: float = REQUIRED_GRID_HI_DB,
    step_db: float = MAX_GRID_STEP_DB,
    quadrature_order: int = 16,
) -> MiTableSet:
    """Tables for every requested order, read from / written to `cache_dir` when given."""
    tables: MiTableSet = {}
    for order in sorted(set(orders)):
        c = qam(order)
        cached = Path(cache_dir) / f"mi_m{order}_gh{quadrature_order}_step{step_db:g}.csv" if cache_dir else None
        if cached is not None and cached.exists():
            logger.debug("Loading cached MI table %s", cached)
            tables[order] = import_mi_table(cached, c)
            continue
        tables[order] = build_mi_table(c, lo_db, hi_db, step_db, quadrature_order)
        if cached is not None:
            export_mi_table(tables[order], cached)
    return tables


def require_table(tables: MiTableSet, order_bits: int) -> MiTable:
    try:
        return tables[order_bits]
    except KeyError:
        raise ConfigurationError(f"no MI table loaded for m={order_bits}") from None
