"""
CSV output for the experiment harnesses.

Columns:

- ``mse_study.csv``: combo_id, theta_J_<parent>..., theta_T_<parent>...,
  e_J, e_J_unscaled, delta_J, w_<column>... (scaled fit), w_unscaled_<column>...
- ``theta_tracking.csv``: theta_R_J, count, w_min, w_median, w_max
- ``finite_data.csv``: dist_id, replicate, seed, m, E, smoothed
- ``correlation_probe.csv``: lambda, p_do, flow

Floats are written with 12 significant digits; an undefined delta_J is an
empty field.
"""

from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd

from edgeflow.experiments.studies import ExperimentRecord, FiniteDataCurve, ProbeResult, ThetaTrackingRow
from edgeflow.utils.io import atomic_write_csv

MSE_STUDY_FILE = "mse_study.csv"
THETA_TRACKING_FILE = "theta_tracking.csv"
FINITE_DATA_FILE = "finite_data.csv"
PROBE_FILE = "correlation_probe.csv"


def mse_frame(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    rows: List[Dict[str, Union[int, float, None]]] = []
    for record in records:
        row: Dict[str, Union[int, float, None]] = {"combo_id": record.combo_id}
        row.update({f"theta_J_{p}": v for p, v in record.theta_j.items()})
        row.update({f"theta_T_{p}": v for p, v in record.theta_t.items()})
        row.update({"e_J": record.e_j, "e_J_unscaled": record.e_j_unscaled, "delta_J": record.delta_j})
        row.update({f"w_{label}": w for label, w in record.weights.items()})
        row.update({f"w_unscaled_{label}": w for label, w in record.weights_unscaled.items()})
        rows.append(row)
    return pd.DataFrame(rows)


def theta_tracking_frame(rows: Sequence[ThetaTrackingRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"theta_R_J": r.theta, "count": r.count, "w_min": r.weight_min,
          "w_median": r.weight_median, "w_max": r.weight_max} for r in rows],
        columns=["theta_R_J", "count", "w_min", "w_median", "w_max"],
    )


def finite_data_frame(curves: Sequence[FiniteDataCurve]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"dist_id": c.dist_id, "replicate": c.replicate, "seed": c.seed, "m": m, "E": distance,
          "smoothed": m in c.smoothed}
         for c in curves for m, distance in c.points],
        columns=["dist_id", "replicate", "seed", "m", "E", "smoothed"],
    )


def probe_frame(result: ProbeResult) -> pd.DataFrame:
    return pd.DataFrame(
        [{"lambda": row.score, "p_do": row.p_do, "flow": row.flow} for row in result.rows],
        columns=["lambda", "p_do", "flow"],
    )


def write_mse_study(records: Sequence[ExperimentRecord], tracking: Sequence[ThetaTrackingRow],
                    outdir: Union[str, Path]) -> List[Path]:
    outdir = Path(outdir)
    return [
        atomic_write_csv(mse_frame(records), outdir / MSE_STUDY_FILE),
        atomic_write_csv(theta_tracking_frame(tracking), outdir / THETA_TRACKING_FILE),
    ]


def write_finite_data(curves: Sequence[FiniteDataCurve], outdir: Union[str, Path]) -> List[Path]:
    return [atomic_write_csv(finite_data_frame(curves), Path(outdir) / FINITE_DATA_FILE)]


def write_probe(result: ProbeResult, outdir: Union[str, Path]) -> List[Path]:
    return [atomic_write_csv(probe_frame(result), Path(outdir) / PROBE_FILE)]
