import logging
from functools import lru_cache
from typing import Dict, List

from fastapi import Depends, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from app import __version__
from app.config import settings
from app.errors import DDFError, DomainError, ParameterError, UnsupportedSchemeError
from app.experiments.presets import (
    activation_from_label,
    budget_from_spec,
    frame_from_spec,
    scheme_from_spec,
)
from app.experiments.runner import diversity_entry
from app.phy.channel import db_to_linear
from app.phy.mutual_information import MiTableSet, gaussian_mi, mi_lookup, mi_table_set, require_table
from app.relaying.schemes import SchemeKind
from app.schemas import (
    DiversityRequest,
    DiversityResponse,
    EstimateResponse,
    MiResponse,
    OutageRequest,
    OutageResponse,
)
from app.simulation.engine import outage_from_batch, simulate_batch, spectral_efficiency_from_batch

logger = logging.getLogger(__name__)

app = FastAPI(title="DDF Relaying Simulator", version=__version__)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@lru_cache(maxsize=1)
def get_tables() -> MiTableSet:
    """MI tables shared by every request (built once, or read from the cache dir)."""
    return mi_table_set(
        orders=(2, 4, 6),
        cache_dir=settings.mi_cache_dir,
        lo_db=settings.mi_grid_lo_db,
        hi_db=settings.mi_grid_hi_db,
        step_db=settings.mi_grid_step_db,
        quadrature_order=settings.mi_quadrature_order,
    )


def _http_error(exc: DDFError) -> HTTPException:
    if isinstance(exc, (ParameterError, DomainError, UnsupportedSchemeError)):
        return HTTPException(status_code=422, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


@app.get("/")
def root():
    return {"message": "DDF Relaying Simulator API", "version": __version__}


@app.get("/api/schemes", response_model=List[Dict])
def get_schemes():
    """Supported scheme kinds and their parameters"""
    parameters = {
        SchemeKind.PATCHED_MONOSTREAM: ["m_r", "p"],
        SchemeKind.PATCHED_ALAMOUTI: ["m_r"],
        SchemeKind.PATCHED_GOLDEN: ["m_r"],
        SchemeKind.PATCHED_SILVER: ["m_r"],
    }
    simulated = {SchemeKind.PATCHED_GOLDEN, SchemeKind.PATCHED_SILVER}
    return [
        {"scheme": kind.value, "parameters": parameters.get(kind, []), "outage": kind not in simulated}
        for kind in SchemeKind
    ]


@app.get("/api/mi", response_model=MiResponse)
def get_mi(
    order_bits: int = Query(2),
    snr_db: float = Query(0.0),
    tables: MiTableSet = Depends(get_tables),
):
    """Tabulated finite-alphabet MI next to the Gaussian-input value"""
    try:
        snr = db_to_linear(snr_db)
        value = mi_lookup(require_table(tables, order_bits), snr)
    except DDFError as e:
        raise _http_error(e)
    return MiResponse(order_bits=order_bits, snr_db=snr_db, mi_bits=value, gaussian_mi_bits=gaussian_mi(snr))


@app.post("/api/diversity", response_model=DiversityResponse)
def post_diversity(request: DiversityRequest):
    """Matryoshka decomposition and diversity orders for one relay decoding instant"""
    try:
        frame = frame_from_spec(request.frame)
        entry = diversity_entry(scheme_from_spec(request.scheme), frame, request.decoded_after, request.n_rx)
    except DDFError as e:
        raise _http_error(e)
    return DiversityResponse(**entry)


@app.post("/api/outage", response_model=OutageResponse)
def post_outage(request: OutageRequest, tables: MiTableSet = Depends(get_tables)):
    """Outage and spectral efficiency at one operating point (trials capped)"""
    trials = min(request.trials, settings.api_trials_cap)
    try:
        scheme = scheme_from_spec(request.scheme)
        frame = frame_from_spec(request.frame)
        activation = activation_from_label(request.decoded_after, frame)
        batch = simulate_batch(
            scheme, frame, budget_from_spec(request.link), trials, request.seed, tables, activation=activation
        )
    except DDFError as e:
        raise _http_error(e)
    logger.info("outage %s decoded_after=%s trials=%d", scheme.label, request.decoded_after, trials)
    return OutageResponse(
        scheme=scheme.label,
        decoded_after=request.decoded_after,
        outage=EstimateResponse(**outage_from_batch(batch).as_dict()),
        spectral_efficiency=EstimateResponse(**spectral_efficiency_from_batch(batch).as_dict()),
    )


if __name__ == "__main__":
    import uvicorn

    logging.basicConfig(level=settings.log_level.upper())
    uvicorn.run(app, host=settings.api_host, port=settings.api_port, log_level=settings.log_level.lower())
