"""Load run manifests and spectra files with readable errors."""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .errors import SchemaError
from .models import RunManifest
from .outputs import SPECTRA_HEADER


def format_validation_error(e: ValidationError, source: str) -> str:
    errors = []
    for err in e.errors():
        loc = " → ".join(str(part) for part in err["loc"])
        errors.append(f"  {loc}: {err['msg']}")
    return f"Validation failed ({source}):\n" + "\n".join(errors)


def load_manifest(path: str | Path) -> RunManifest:
    """Load a ``manifest.json`` written by any command."""
    path = Path(path)

    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")

    if path.suffix != ".json":
        raise SchemaError(f"Expected .json file, got: {path.suffix}")

    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"Invalid JSON in {path.name}: {e}") from e

    try:
        return RunManifest.model_validate(raw)
    except ValidationError as e:
        raise SchemaError(format_validation_error(e, path.name)) from e


@dataclass(frozen=True)
class SpectraFile:
    n: int
    spectra: np.ndarray  # (samples, n) raw Schmidt coefficients

    @property
    def rescaled(self) -> np.ndarray:
        """All eigenvalues in rescaled units n * lambda, flattened."""
        return (self.n * self.spectra).ravel()


def load_spectra(path: str | Path) -> SpectraFile:
    """Read a ``spectra.csv`` (``sample_id,index,value``) into an array.

    Every sample must list indices 0..n-1 in order with the same n.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Spectra file not found: {path}")

    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path.name} is empty")
        if tuple(h.strip() for h in header) != SPECTRA_HEADER:
            raise SchemaError(f"{path.name}: expected header {','.join(SPECTRA_HEADER)}, got {','.join(header)}")

        samples: list[list[float]] = []
        current_id: int | None = None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SchemaError(f"{path.name}:{line_no}: expected 3 fields, got {len(row)}")
            try:
                sample_id, index, value = int(row[0]), int(row[1]), float(row[2])
            except ValueError as e:
                raise SchemaError(f"{path.name}:{line_no}: {e}") from e
            if sample_id != current_id:
                samples.append([])
                current_id = sample_id
            if index != len(samples[-1]):
                raise SchemaError(f"{path.name}:{line_no}: sample {sample_id} index {index} out of order")
            if not np.isfinite(value) or value < 0:
                raise SchemaError(f"{path.name}:{line_no}: invalid eigenvalue {row[2]!r}")
            samples[-1].append(value)

    if not samples:
        raise SchemaError(f"{path.name} contains no spectra")
    n = len(samples[0])
    if any(len(s) != n for s in samples):
        raise SchemaError(f"{path.name}: samples have different dimensions")
    return SpectraFile(n=n, spectra=np.asarray(samples, dtype=float))
