"""
CSV and JSON outputs of the simulator: design and panel dumps, observation
tables, the streaming replicate sink, summaries and the run manifest.
"""
import hashlib
import json
import logging
import re
from typing import IO, Iterable, List, Optional

import numpy as np
import pandas as pd

from models import (
    OBSERVATION_COLUMNS,
    CohortPanel,
    ReplicateResult,
    RunManifest,
    ScenarioSummary,
    TrialDesign,
)
from utils.errors import DatasetSchemaError
from utils.file_system import FileSystemUtil, fs_util

logger = logging.getLogger(__name__)

REPLICATE_COLUMNS = list(ReplicateResult.model_fields)
SUMMARY_COLUMNS = list(ScenarioSummary.model_fields)
INTEGER_COLUMNS = {"cluster", "period", "participant", "exposed", "widowed", "baseline_widowed"}
SUMMARY_SORT_KEY = ["scenario", "theta", "n_steps", "model"]


def write_design_csv(design: TrialDesign, path: str, file_system: FileSystemUtil = fs_util) -> None:
    exposure = design.exposure
    rows = [
        {"cluster": cluster, "group": group, "period": period, "exposed": int(exposure[cluster, period])}
        for cluster, group in enumerate(design.allocation)
        for period in range(design.n_periods)
    ]
    file_system.write_csv(path, pd.DataFrame(rows, columns=["cluster", "group", "period", "exposed"]))


def write_panel_csv(panel: CohortPanel, path: str, file_system: FileSystemUtil = fs_util) -> None:
    """One row per (cluster, participant, period) over the whole trial; inactive periods have empty age."""
    rows = []
    for trajectory in sorted(panel.trajectories, key=lambda t: (t.cluster, t.participant)):
        for period in range(panel.design.n_periods):
            active = trajectory.is_active(period)
            offset = period - trajectory.entry_period
            rows.append({
                "cluster": trajectory.cluster,
                "participant": trajectory.participant,
                "period": period,
                "age": trajectory.ages[offset] if active else np.nan,
                "widowed": int(trajectory.widowed[offset]) if active else 0,
                "active": int(active),
            })
    columns = ["cluster", "participant", "period", "age", "widowed", "active"]
    file_system.write_csv(path, pd.DataFrame(rows, columns=columns))


def write_observations_csv(table: pd.DataFrame, path: str, file_system: FileSystemUtil = fs_util) -> None:
    file_system.write_csv(path, table[OBSERVATION_COLUMNS])


def read_observations_csv(path: str, file_system: FileSystemUtil = fs_util) -> pd.DataFrame:
    """
    Load an observation table, checking the header and every cell.

    :raises FileNotFoundError: if the file is missing.
    :raises DatasetSchemaError: naming the 1-based line of the first problem.
    """
    full_path = file_system._get_full_path(path)
    if not file_system.path_exists(path):
        raise FileNotFoundError(f"Observation file '{path}' not found")
    try:
        raw = pd.read_csv(full_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetSchemaError("file is empty; a header row is required", line=1) from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise DatasetSchemaError(str(e), line=int(match.group(1)) if match else None) from None

    missing = [c for c in OBSERVATION_COLUMNS if c not in raw.columns]
    if missing:
        raise DatasetSchemaError(f"header lacks columns {missing}", line=1)
    if raw.empty:
        raise DatasetSchemaError("no data rows", line=2)

    table = pd.DataFrame(index=raw.index)
    first_bad, reason = None, ""
    for column in OBSERVATION_COLUMNS:
        values = pd.to_numeric(raw[column].str.strip(), errors="coerce")
        bad = values.isna() | ~np.isfinite(values.fillna(0.0))
        if column in INTEGER_COLUMNS:
            bad |= values.fillna(0.0) % 1 != 0
        if bad.any():
            row = int(bad.idxmax())
            if first_bad is None or row < first_bad:
                first_bad = row
                reason = f"column '{column}' has invalid value '{raw.at[row, column]}'"
        table[column] = values.astype(int) if column in INTEGER_COLUMNS and not bad.any() else values
    if first_bad is not None:
        # header is line 1
        raise DatasetSchemaError(reason, line=first_bad + 2)
    return table


def read_replicates_csv(path: str, file_system: FileSystemUtil = fs_util) -> List[ReplicateResult]:
    if not file_system.path_exists(path):
        raise FileNotFoundError(f"Replicate file '{path}' not found")
    frame = pd.read_csv(file_system._get_full_path(path), encoding="utf-8")
    missing = [c for c in REPLICATE_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetSchemaError(f"header lacks columns {missing}", line=1)
    frame["error"] = frame["error"].fillna("").astype(str)
    frame["scenario"] = frame["scenario"].astype(str)
    return [ReplicateResult(**record) for record in frame[REPLICATE_COLUMNS].to_dict("records")]


class ReplicateRecorder:
    """
    Streaming sink for replicate records.

    The header is written once on start and every record is flushed as it arrives,
    so an aborted run still leaves a readable file.
    """

    def __init__(self, path: str, file_system: FileSystemUtil = fs_util):
        self.path = path
        self.file_system = file_system
        self.records_written = 0
        self._handle: Optional[IO[str]] = None

    def start(self) -> "ReplicateRecorder":
        full_path = self.file_system.ensure_parent(self.path)
        self._handle = open(full_path, "w", encoding="utf-8", newline="")
        pd.DataFrame(columns=REPLICATE_COLUMNS).to_csv(self._handle, index=False, lineterminator="\n")
        self._handle.flush()
        logger.info(f"Recording replicates to {full_path}")
        return self

    def record(self, result: ReplicateResult) -> None:
        if self._handle is None:
            raise RuntimeError("ReplicateRecorder.record called before start")
        row = pd.DataFrame([result.model_dump()], columns=REPLICATE_COLUMNS)
        row.to_csv(self._handle, index=False, header=False, lineterminator="\n")
        self._handle.flush()
        self.records_written += 1

    def stop(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            logger.info(f"Recorded {self.records_written} replicate records")

    def __enter__(self) -> "ReplicateRecorder":
        return self.start()

    def __exit__(self, exc_type, exc, tb) -> None:
        self.stop()


def write_summary_csv(summaries: Iterable[ScenarioSummary], path: str, file_system: FileSystemUtil = fs_util) -> None:
    frame = pd.DataFrame([s.model_dump() for s in summaries], columns=SUMMARY_COLUMNS)
    frame = frame.sort_values(SUMMARY_SORT_KEY, kind="mergesort").reset_index(drop=True)
    file_system.write_csv(path, frame)


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON rendering (sorted keys, no whitespace) of a resolved config."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_manifest(manifest: RunManifest, path: str, file_system: FileSystemUtil = fs_util) -> None:
    file_system.dump_json(path, manifest.model_dump(mode="json"))
