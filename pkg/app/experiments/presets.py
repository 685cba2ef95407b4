"""Frame configurations of the reference experiments and experiment-file loading."""
import logging
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import ValidationError

from app.errors import ConfigurationError
from app.phy.channel import LinkBudget
from app.relaying.frame import FrameConfig, activation_from_decoded_after
from app.relaying.schemes import SchemeId
from app.schemas import DecodedAfter, ExperimentSpec, FrameSpec, LinkSpec, SchemeSpec
from app.simulation.engine import MARGINAL

logger = logging.getLogger(__name__)

# Open loop: 7 sub-frames, the first (information bits only) three times longer
OPEN_LOOP_K = 600
OPEN_LOOP_N_MAX = 7
TARGET_OUTAGE = 1e-2

# Closed loop HARQ: 3 sub-frames, the first four times longer
CLOSED_LOOP_T = (400, 100, 100)
CLOSED_LOOP_RATES = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
CLOSED_LOOP_SNR_SR_DB = 10.0
SE_TARGETS = (0.6, 1.1, 1.6)

N_RX = 2
SOURCE_ORDER = 2


def open_loop_frame(K: int = OPEN_LOOP_K, n_max: int = OPEN_LOOP_N_MAX) -> FrameConfig:
    return FrameConfig.open_loop(K=K, n_max=n_max, first_to_other_ratio=3, m_s=SOURCE_ORDER)


def closed_loop_frame(rate: float = 1.0) -> FrameConfig:
    return FrameConfig.from_first_subframe_rate(rate, CLOSED_LOOP_T, SOURCE_ORDER)


def frame_from_spec(spec: FrameSpec) -> FrameConfig:
    if spec.kind == "open_loop":
        return FrameConfig.open_loop(K=spec.K, n_max=spec.n_max, first_to_other_ratio=spec.first_to_other_ratio, m_s=spec.m_s)
    if spec.kind == "closed_loop":
        T = tuple(spec.T) if spec.T else CLOSED_LOOP_T
        return FrameConfig.from_first_subframe_rate(max(rate_set(spec)), T, spec.m_s)
    return FrameConfig(K=spec.K, T=tuple(spec.T), m_s=spec.m_s)


def rate_set(spec: FrameSpec) -> List[float]:
    if spec.rates:
        return sorted(spec.rates)
    return list(CLOSED_LOOP_RATES) if spec.kind == "closed_loop" else []


def budget_from_spec(spec: LinkSpec) -> LinkBudget:
    return LinkBudget(snr_sd_db=spec.snr_sd_db, snr_rd_db=spec.snr_rd_db, snr_sr_db=spec.snr_sr_db, n_rx=spec.n_rx)


def scheme_from_spec(spec: SchemeSpec) -> SchemeId:
    return SchemeId.parse(spec.scheme, m_r=spec.m_r, p=spec.p, alphabet=spec.alphabet)


def activation_from_label(label: DecodedAfter, frame: FrameConfig):
    """'marginal' -> engine default, 'none' -> relay silent, d -> forced activation d + 1."""
    if label == "marginal":
        return MARGINAL
    if label == "none":
        return None
    return activation_from_decoded_after(int(label), frame)


def load_experiment(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentSpec:
    """TOML file with an [experiment] table plus [frame], [link], [grid], [target], [[schemes]]."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigurationError(f"experiment file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    merged = dict(data.pop("experiment", {}))
    merged.update(data)
    merged.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        spec = ExperimentSpec.model_validate(merged)
    except ValidationError as exc:
        raise ConfigurationError(f"{path}: invalid experiment\n{exc}") from None
    logger.info("Loaded %s experiment from %s (%d scheme(s))", spec.preset, path, len(spec.schemes))
    return spec
