"""Pydantic models: experiment files and HTTP request/response bodies."""
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Preset = Literal["outage_contour", "se_contour", "diversity_report", "mi_table_dump"]
Axis = Literal["snr_sd_db", "snr_rd_db", "snr_sr_db", "common"]
# reporting convention: the relay decoded after this sub-frame; "marginal" draws it per trial
DecodedAfter = Union[int, Literal["marginal", "none"]]


class SchemeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scheme: str
    m_r: Optional[int] = None
    p: Union[int, Literal["full", "auto_mu"], None] = None
    alphabet: Literal["qam", "gaussian"] = "qam"


class FrameSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["open_loop", "closed_loop", "custom"] = "open_loop"
    K: int = 600
    n_max: int = 7
    first_to_other_ratio: int = 3
    T: Optional[List[int]] = None
    m_s: int = 2
    rates: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_custom(self):
        if self.kind == "custom" and not self.T:
            raise ValueError("custom frames need T")
        return self


class LinkSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    snr_sd_db: float = 0.0
    snr_rd_db: float = 0.0
    snr_sr_db: float = 10.0
    n_rx: int = Field(default=2, ge=1)


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fixed_axis: Axis = "snr_sd_db"
    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None
    search_axis: Axis = "snr_rd_db"
    lo_db: Optional[float] = None
    hi_db: Optional[float] = None
    tol_db: Optional[float] = None

    @model_validator(mode="after")
    def check_grid(self):
        if self.values is None and None in (self.start, self.stop, self.step):
            raise ValueError("grid needs either values or start/stop/step")
        if self.values is not None and not self.values:
            raise ValueError("grid values must not be empty")
        if self.step is not None and self.step <= 0:
            raise ValueError("grid step must be > 0")
        return self

    def points(self) -> List[float]:
        if self.values is not None:
            return list(self.values)
        count = int(round((self.stop - self.start) / self.step)) + 1
        return [round(self.start + i * self.step, 10) for i in range(max(count, 1))]


class TargetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    metric: Literal["outage", "se"] = "outage"
    values: List[float] = Field(default_factory=lambda: [1e-2])

    @field_validator("values")
    @classmethod
    def non_empty(cls, values):
        if not values:
            raise ValueError("at least one target value is required")
        return values


class ExperimentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: Preset
    schemes: List[SchemeSpec] = Field(default_factory=lambda: [SchemeSpec(scheme="monostream")])
    frame: FrameSpec = Field(default_factory=FrameSpec)
    link: LinkSpec = Field(default_factory=LinkSpec)
    grid: GridSpec = Field(default_factory=lambda: GridSpec(values=[0.0]))
    target: TargetSpec = Field(default_factory=TargetSpec)
    decoded_after: List[DecodedAfter] = Field(default_factory=lambda: ["marginal"])
    orders: List[int] = Field(default_factory=lambda: [2, 4, 6])
    trials: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)
    threads: Optional[int] = Field(default=None, ge=1)
    out: Optional[str] = None

    @field_validator("decoded_after")
    @classmethod
    def check_decoded_after(cls, values):
        if not values:
            raise ValueError("decoded_after must list at least one entry")
        for value in values:
            if isinstance(value, int) and value < 1:
                raise ValueError(f"decoded_after must be >= 1, got {value}")
        return values


# HTTP bodies

class MiResponse(BaseModel):
    order_bits: int
    snr_db: float
    mi_bits: float
    gaussian_mi_bits: float


class DiversityRequest(BaseModel):
    scheme: SchemeSpec
    frame: FrameSpec = Field(default_factory=FrameSpec)
    decoded_after: Optional[int] = None
    n_rx: int = Field(default=2, ge=1)


class DiversityResponse(BaseModel):
    scheme: str
    decoded_after: Optional[int]
    activation: Optional[int]
    snr_channel: dict
    matryoshka_bound: int
    macro_diversity: int
    micro_diversity: int
    full_macro: bool
    full_micro: bool
    min_m_r: Optional[int]
    boundary: bool


class OutageRequest(BaseModel):
    scheme: SchemeSpec
    frame: FrameSpec = Field(default_factory=FrameSpec)
    link: LinkSpec = Field(default_factory=LinkSpec)
    decoded_after: DecodedAfter = "marginal"
    trials: int = Field(default=10_000, ge=1_000)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


class EstimateResponse(BaseModel):
    value: float
    stderr: float
    n_trials: int
    seed: int


class OutageResponse(BaseModel):
    scheme: str
    decoded_after: DecodedAfter
    outage: EstimateResponse
    spectral_efficiency: EstimateResponse
