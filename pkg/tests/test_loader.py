import json

import numpy as np
import pytest

from isopurity.errors import SchemaError
from isopurity.loader import load_manifest, load_spectra
from isopurity.models import SweepParams
from isopurity.outputs import now, write_csv, write_manifest, write_spectra_csv


def test_spectra_file(tmp_path):
    spectra = np.array([[0.7, 0.2, 0.1], [0.5, 0.3, 0.2]])
    path = write_spectra_csv(tmp_path / "spectra.csv", [spectra[:1], spectra[1:]])
    assert path.read_bytes().startswith(b"sample_id,index,value\n0,0,0.7\n")
    loaded = load_spectra(path)
    assert loaded.n == 3
    np.testing.assert_array_equal(loaded.spectra, spectra)
    np.testing.assert_array_equal(loaded.rescaled, 3 * spectra.ravel())


@pytest.mark.parametrize("content", [
    "",
    "sample_id,index,value\n",
    "id,i,v\n0,0,1.0\n",
    "sample_id,index,value\n0,1,1.0\n",
    "sample_id,index,value\n0,0,abc\n",
    "sample_id,index,value\n0,0,-0.5\n",
    "sample_id,index,value\n0,0,1.0\n1,0,0.5\n1,1,0.5\n",
])
def test_malformed_spectra(tmp_path, content):
    path = tmp_path / "spectra.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(SchemaError):
        load_spectra(path)


def test_manifest(tmp_path):
    data = write_csv(tmp_path / "sweep.csv", ["beta"], [[0.5]])
    params = SweepParams(beta_min=0.0, beta_max=1.0, steps=2, mu="0")
    written = write_manifest(tmp_path / "manifest.json", "sweep", params, now(), [data])
    loaded = load_manifest(tmp_path / "manifest.json")
    assert loaded.command == "sweep"
    assert loaded.outputs == written.outputs
    assert SweepParams.model_validate(loaded.parameters) == params
    assert data.read_bytes() == b"beta\n0.5\n"


def test_manifest_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_manifest(tmp_path / "missing.json")

    bad = tmp_path / "manifest.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError, match="Invalid JSON"):
        load_manifest(bad)

    bad.write_text(json.dumps({"tool_version": "0.1.0", "command": "haar"}), encoding="utf-8")
    with pytest.raises(SchemaError, match="parameters"):
        load_manifest(bad)
