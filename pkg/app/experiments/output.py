"""Result files: CSV with '#' provenance lines, JSON with a provenance object."""
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from app import __version__
from app.schemas import ExperimentSpec

logger = logging.getLogger(__name__)

TOOL_NAME = "ddf-relay-sim"
STDOUT = "-"


def provenance(spec: ExperimentSpec, seed: int, trials: Optional[int]) -> Dict[str, Any]:
    """Everything needed to re-run: tool version, resolved config, seed and trial count."""
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "seed": seed,
        "trials": trials,
        "config": spec.model_dump(mode="json"),
    }


@contextlib.contextmanager
def _sink(path: Union[str, Path]):
    if str(path) == STDOUT:
        yield sys.stdout
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        yield handle


def write_csv(frame: pd.DataFrame, path: Union[str, Path], meta: Dict[str, Any]) -> None:
    with _sink(path) as handle:
        for key in ("tool", "version", "seed", "trials"):
            handle.write(f"# {key}: {meta.get(key)}\n")
        handle.write(f"# config: {json.dumps(meta.get('config'), sort_keys=True)}\n")
        frame.to_csv(handle, index=False, float_format="%.6g")
    logger.info("Wrote %d rows to %s", len(frame), path)


def write_json(payload: Any, path: Union[str, Path], meta: Dict[str, Any]) -> None:
    with _sink(path) as handle:
        handle.write(json.dumps({"provenance": meta, "results": payload}, indent=2, sort_keys=True) + "\n")
    logger.info("Wrote %s", path)
