"""Experiment orchestration: contour sweeps, diversity tables and MI dumps."""
import logging
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from app.config import settings
from app.errors import ConfigurationError
from app.phy.mutual_information import MiTableSet, gaussian_mi, mi_table_set, require_table
from app.relaying.diversity import (
    macro_diversity_order,
    matryoshka_bound,
    micro_diversity_order,
    min_mr_for_full_diversity,
    scheme_snr_channel,
)
from app.relaying.frame import FrameConfig, activation_from_decoded_after
from app.relaying.schemes import SchemeId, SchemeKind
from app.experiments.presets import (
    activation_from_label,
    budget_from_spec,
    frame_from_spec,
    rate_set,
    scheme_from_spec,
)
from app.schemas import ExperimentSpec
from app.simulation.contour import Target, find_snr_for_target

logger = logging.getLogger(__name__)


def diversity_entry(scheme: SchemeId, frame: FrameConfig, decoded_after: Optional[int], n_rx: int) -> Dict:
    """(D, L), bound, macro/micro orders and the relay order needed for full diversity."""
    activation = activation_from_decoded_after(decoded_after, frame)
    channel = scheme_snr_channel(scheme, frame, activation)
    bound = matryoshka_bound(channel, Fraction(frame.K) / Fraction(channel.total_bits))
    macro = macro_diversity_order(scheme, frame, activation)
    micro = micro_diversity_order(scheme, frame, activation, n_rx)
    min_m_r = None
    if scheme.kind != SchemeKind.DIRECT and activation is not None:
        l2 = frame.symbols_between(activation, frame.n_max) * frame.m_s
        min_m_r = min_mr_for_full_diversity(scheme, frame.K, l2, frame.m_s)
    return {
        "scheme": scheme.label,
        "decoded_after": decoded_after,
        "activation": activation,
        "snr_channel": channel.as_dict(),
        "matryoshka_bound": bound,
        "macro_diversity": macro,
        "micro_diversity": micro,
        "full_macro": macro == 2,
        "full_micro": micro == 2 * n_rx,
        "min_m_r": min_m_r,
        # top block exactly K bits: the inclusive edge of the full-macro condition
        "boundary": len(channel.L) == 2 and channel.L[0] == frame.K,
    }


class ExperimentRunner:
    def __init__(
        self,
        tables: Optional[MiTableSet] = None,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        threads: Optional[int] = None,
        quiet: bool = False,
    ):
        self._tables = tables
        self.seed = settings.seed if seed is None else seed
        self.trials = settings.trials if trials is None else trials
        self.threads = settings.threads if threads is None else threads
        self.quiet = quiet

    @property
    def tables(self) -> MiTableSet:
        if self._tables is None:
            self._tables = mi_table_set(
                orders=(2, 4, 6),
                cache_dir=settings.mi_cache_dir,
                lo_db=settings.mi_grid_lo_db,
                hi_db=settings.mi_grid_hi_db,
                step_db=settings.mi_grid_step_db,
                quadrature_order=settings.mi_quadrature_order,
            )
        return self._tables

    def _progress(self, total: int, desc: str):
        return tqdm(total=total, desc=desc, disable=self.quiet, leave=False)

    def _check_axes(self, spec: ExperimentSpec):
        fixed, search = spec.grid.fixed_axis, spec.grid.search_axis
        if fixed == search or fixed == "common" or (search == "common" and fixed in ("snr_sd_db", "snr_rd_db")):
            raise ConfigurationError(f"cannot sweep {fixed} while searching {search}")

    def _search(self, spec: ExperimentSpec, metric: str, rates: List[float]) -> List[Dict]:
        self._check_axes(spec)
        frame = frame_from_spec(spec.frame)
        base = budget_from_spec(spec.link)
        schemes = [scheme_from_spec(s) for s in spec.schemes]
        points = spec.grid.points()
        total = len(schemes) * len(spec.decoded_after) * len(spec.target.values) * len(points)
        logger.info("%s contour: %d point(s), %d trials each, seed %d", metric, total, self.trials, self.seed)
        rows = []
        with self._progress(total, f"{metric} contour") as bar:
            for scheme in schemes:
                for label in spec.decoded_after:
                    activation = activation_from_label(label, frame)
                    for value in spec.target.values:
                        target = Target(metric, value)
                        for fixed_db in points:
                            point = find_snr_for_target(
                                scheme,
                                frame,
                                base.with_snr(spec.grid.fixed_axis, fixed_db),
                                spec.grid.search_axis,
                                target,
                                self.tables,
                                n_trials=self.trials,
                                seed=self.seed,
                                lo_db=spec.grid.lo_db,
                                hi_db=spec.grid.hi_db,
                                tol_db=spec.grid.tol_db,
                                activation=activation,
                                rates=rates or None,
                                threads=self.threads,
                            )
                            rows.append({
                                "scheme": scheme.label,
                                "decoded_after": label,
                                spec.grid.fixed_axis: fixed_db,
                                f"{spec.grid.search_axis}_required": point.snr_db,
                                "target": value,
                                "value_at_solution": point.estimate.value,
                                "stderr_at_solution": point.estimate.stderr,
                                "chosen_rate": point.chosen_rate,
                                "feasible": int(point.feasible),
                            })
                            bar.update(1)
        return rows

    def run_outage_contour(self, spec: ExperimentSpec) -> pd.DataFrame:
        rows = self._search(spec, "outage", rates=[])
        return pd.DataFrame(rows).drop(columns=["chosen_rate"])

    def run_se_contour(self, spec: ExperimentSpec) -> pd.DataFrame:
        rows = self._search(spec, "se", rates=rate_set(spec.frame))
        frame = pd.DataFrame(rows)
        return frame.rename(columns={"target": "target_se"})

    def run_diversity_report(self, spec: ExperimentSpec) -> List[Dict]:
        frame = frame_from_spec(spec.frame)
        labels = [label for label in spec.decoded_after if label != "marginal"]
        if not labels:
            labels = list(range(1, frame.n_max)) + ["none"]
        report = []
        for scheme_spec in spec.schemes:
            scheme = scheme_from_spec(scheme_spec)
            for label in labels:
                decoded_after = None if label == "none" else int(label)
                report.append(diversity_entry(scheme, frame, decoded_after, spec.link.n_rx))
        return report

    def run_mi_table_dump(self, spec: ExperimentSpec) -> pd.DataFrame:
        tables = self.tables
        orders = sorted(set(spec.orders))
        grid = require_table(tables, orders[0]).snr_grid_db
        columns = {"snr_db": grid}
        for order in orders:
            table = require_table(tables, order)
            if not np.array_equal(table.snr_grid_db, grid):
                raise ConfigurationError(f"MI table for m={order} uses a different SNR grid")
            columns[f"mi_m{order}"] = table.mi_bits
        columns["gaussian"] = gaussian_mi(10.0 ** (grid / 10.0))
        return pd.DataFrame(columns)

    def run(self, spec: ExperimentSpec):
        handlers = {
            "outage_contour": self.run_outage_contour,
            "se_contour": self.run_se_contour,
            "diversity_report": self.run_diversity_report,
            "mi_table_dump": self.run_mi_table_dump,
        }
        return handlers[spec.preset](spec)
