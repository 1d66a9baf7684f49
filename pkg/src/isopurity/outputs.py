"""CSV and JSON writers for run outputs, and the run manifest.

Files are written deterministically: CSV floats use the shortest
round-trip repr with LF line ends, JSON uses sorted keys and two-space
indentation. Only the manifest carries timestamps.
"""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from . import __version__
from .models import EmpiricalDensity, OutputFile, RunManifest, TheoryTable
from .utils import file_digest

logger = logging.getLogger("isopurity")

PURITY_HEADER = ("sample_id", "purity")
SPECTRA_HEADER = ("sample_id", "index", "value")
CHAIN_HEADER = ("sweep", "purity")
HISTOGRAM_HEADER = ("bin_left", "bin_right", "density", "analytic_midpoint")
SWEEP_HEADER = ("beta", "phase", "a", "b_or_c", "r", "G", "s_rel")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug("wrote %s", path)
    return path


def write_json(path: Path, data: BaseModel | dict | list) -> Path:
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def write_purity_csv(path: Path, purities: Sequence[float] | np.ndarray) -> Path:
    return write_csv(path, PURITY_HEADER, enumerate(purities))


def spectra_rows(spectra: np.ndarray, first_id: int = 0):
    for k, values in enumerate(spectra):
        for index, value in enumerate(values):
            yield first_id + k, index, value


def write_spectra_csv(path: Path, spectra: np.ndarray | Sequence[np.ndarray]) -> Path:
    """Raw Schmidt coefficients, one row per eigenvalue; blocks are numbered consecutively."""
    blocks = [spectra] if isinstance(spectra, np.ndarray) else list(spectra)

    def rows():
        first = 0
        for block in blocks:
            yield from spectra_rows(block, first)
            first += len(block)

    return write_csv(path, SPECTRA_HEADER, rows())


def write_chain_csv(path: Path, sweeps: np.ndarray, purity: np.ndarray) -> Path:
    return write_csv(path, CHAIN_HEADER, zip(sweeps, purity))


def write_histogram_csv(path: Path, histogram: EmpiricalDensity, analytic: np.ndarray) -> Path:
    edges = histogram.edges
    rows = zip(edges[:-1], edges[1:], histogram.densities, analytic)
    return write_csv(path, HISTOGRAM_HEADER, rows)


def write_sweep_csv(path: Path, table: TheoryTable) -> Path:
    rows = ((r.beta, r.phase, r.a, r.b_or_c, r.r, r.G, r.s_rel) for r in table.rows)
    return write_csv(path, SWEEP_HEADER, rows)


def now() -> datetime:
    return datetime.now(timezone.utc)


def write_manifest(
    path: Path,
    command: str,
    parameters: BaseModel,
    started_at: datetime,
    outputs: Sequence[Path],
) -> RunManifest:
    """Write a run manifest listing the data files with their SHA-256 digests."""
    files = [
        OutputFile(path=p.name, sha256=file_digest(p), size_bytes=p.stat().st_size)
        for p in outputs
    ]
    manifest = RunManifest(
        tool_version=__version__,
        command=command,
        parameters=parameters.model_dump(mode="json"),
        started_at=started_at,
        finished_at=now(),
        outputs=files,
    )
    write_json(path, manifest)
    return manifest
