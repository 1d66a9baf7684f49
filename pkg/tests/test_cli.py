import csv
import json

import pytest

from isopurity import theory
from isopurity.cli import main
from isopurity.loader import load_manifest


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def assert_same_files(left, right, names):
    for name in names:
        assert (left / name).read_bytes() == (right / name).read_bytes(), name


class TestTheory:
    def test_edges_at_zero(self, runner, tmp_path):
        out = tmp_path / "theory.json"
        result = invoke(runner, "theory", "--beta", 0, "--quantity", "a,c", "--out", out)
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text()) == pytest.approx({"a": 4.0, "c": 1.0})
        assert (tmp_path / "theory.manifest.json").exists()

    def test_r_at_beta_plus(self, runner, tmp_path):
        out = tmp_path / "r.json"
        assert invoke(runner, "theory", "--beta", 2, "--quantity", "r", "--out", out).exit_code == 0
        assert json.loads(out.read_text())["r"] == pytest.approx(1.25, abs=1e-10)

    def test_below_beta_minus(self, runner, tmp_path):
        result = invoke(runner, "theory", "--beta", -1, "--out", tmp_path / "t.json")
        assert result.exit_code == 2
        assert "beta below beta_minus=-2/27" in result.output

    def test_allow_below_critical(self, runner, tmp_path):
        out = tmp_path / "t.json"
        result = invoke(runner, "theory", "--beta", -1, "--quantity", "a,r", "--allow-below-critical", "--out", out)
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["a"] is None and data["r"] is None
        assert set(data["errors"]) == {"a", "r"}

    def test_density_needs_lambda(self, runner, tmp_path):
        result = invoke(runner, "theory", "--beta", 0, "--quantity", "density", "--out", tmp_path / "d.json")
        assert result.exit_code == 2
        assert "--lambda" in result.output

    def test_density(self, runner, tmp_path):
        out = tmp_path / "d.json"
        invoke(runner, "theory", "--beta", 0, "--quantity", "density", "--lambda", 2, "--out", out)
        assert json.loads(out.read_text())["density"] == pytest.approx(0.159155, abs=1e-6)

    def test_unbalanced_cumulants(self, runner, tmp_path):
        out = tmp_path / "k.json"
        result = invoke(runner, "theory", "--beta", 0, "--mu", "1", "--quantity", "cumulants", "--out", out)
        assert result.exit_code == 0, result.output
        cumulants = json.loads(out.read_text())["cumulants"]
        assert cumulants["1"]["coefficient"] == "3/2"
        assert cumulants["5"] == {"coefficient": "207/2", "power": 13, "value_coefficient": 103.5}

    def test_unbalanced_phase_quantity(self, runner, tmp_path):
        result = invoke(runner, "theory", "--beta", 0, "--mu", "1", "--quantity", "a", "--out", tmp_path / "a.json")
        assert result.exit_code == 2
        assert not (tmp_path / "a.json").exists()

    def test_unknown_quantity(self, runner, tmp_path):
        result = invoke(runner, "theory", "--beta", 0, "--quantity", "zeta", "--out", tmp_path / "z.json")
        assert result.exit_code == 2

    def test_out_is_required(self, runner):
        result = invoke(runner, "theory", "--beta", 0)
        assert result.exit_code == 2
        assert "--out" in result.output

    def test_rerun_and_replay_identical(self, runner, tmp_path):
        args = ["theory", "--beta", 0.5, "--quantity", "a,b,c,r,G,s_rel,cumulants"]
        assert invoke(runner, *args, "--out", tmp_path / "a" / "t.json").exit_code == 0
        assert invoke(runner, *args, "--out", tmp_path / "b" / "t.json").exit_code == 0
        assert_same_files(tmp_path / "a", tmp_path / "b", ["t.json"])
        result = invoke(runner, "replay", tmp_path / "a" / "t.manifest.json", "--out-dir", tmp_path / "again")
        assert result.exit_code == 0, result.output
        assert_same_files(tmp_path / "a", tmp_path / "again", ["t.json"])


class TestSweep:
    def test_full_grid(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        result = invoke(runner, "sweep", "--beta-min", -0.074, "--beta-max", 4, "--steps", 200, "--out", out)
        assert result.exit_code == 0, result.output
        raw = out.read_bytes()
        assert raw.startswith(b"beta,phase,a,b_or_c,r,G,s_rel\n")
        assert b"\r" not in raw
        rows = read_csv(out)
        assert len(rows) == 200
        r = [float(row["r"]) for row in rows]
        assert all(x > y for x, y in zip(r, r[1:]))

    def test_landmark_rows(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        invoke(runner, "sweep", "--beta-min", 2, "--beta-max", 4, "--steps", 3, "--out", out)
        rows = read_csv(out)
        assert [float(row["r"]) for row in rows] == pytest.approx([1.25, 7 / 6, 9 / 8], abs=1e-10)
        assert [row["phase"] for row in rows] == ["high_temp", "semicircle", "semicircle"]

    def test_single_step(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        invoke(runner, "sweep", "--beta-min", 0.5, "--beta-max", 3, "--steps", 1, "--out", out)
        rows = read_csv(out)
        assert len(rows) == 1
        assert float(rows[0]["beta"]) == 0.5

    def test_below_domain(self, runner, tmp_path):
        result = invoke(runner, "sweep", "--beta-min", -0.1, "--beta-max", 1, "--steps", 3,
                        "--out", tmp_path / "s.csv")
        assert result.exit_code == 2

    def test_rerun_and_replay_identical(self, runner, tmp_path):
        args = ["sweep", "--beta-min", -0.05, "--beta-max", 6, "--steps", 25]
        assert invoke(runner, *args, "--out", tmp_path / "a" / "s.csv").exit_code == 0
        assert invoke(runner, *args, "--out", tmp_path / "b" / "s.csv").exit_code == 0
        assert_same_files(tmp_path / "a", tmp_path / "b", ["s.csv"])
        result = invoke(runner, "replay", tmp_path / "a" / "s.manifest.json", "--out-dir", tmp_path / "again")
        assert result.exit_code == 0, result.output
        assert_same_files(tmp_path / "a", tmp_path / "again", ["s.csv"])

    def test_replay_detects_changed_digest(self, runner, tmp_path):
        invoke(runner, "sweep", "--beta-min", 0, "--beta-max", 1, "--steps", 3, "--out", tmp_path / "s.csv")
        manifest_path = tmp_path / "s.manifest.json"
        manifest = json.loads(manifest_path.read_text())
        manifest["outputs"][0]["sha256"] = "0" * 64
        manifest_path.write_text(json.dumps(manifest), encoding="utf-8")
        result = invoke(runner, "replay", manifest_path, "--out-dir", tmp_path / "again")
        assert result.exit_code == 1
        assert "differs" in result.output

    def test_very_large_beta(self, runner, tmp_path):
        out = tmp_path / "s.csv"
        result = invoke(runner, "sweep", "--beta-min", 0, "--beta-max", 1e6, "--steps", 3, "--out", out)
        assert result.exit_code == 0, result.output
        assert all(row["G"] for row in read_csv(out))


class TestHaar:
    def test_outputs_and_reproducibility(self, runner, tmp_path):
        args = ["haar", "--n", 4, "--m", 6, "--samples", 60, "--seed", 3, "--chains", 2, "--emit", "both"]
        assert invoke(runner, *args, "--out-dir", tmp_path / "a").exit_code == 0
        assert invoke(runner, "--threads", 2, *args, "--out-dir", tmp_path / "b").exit_code == 0
        for name in ("purity.csv", "spectra.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert len(read_csv(tmp_path / "a" / "purity.csv")) == 60
        assert len(read_csv(tmp_path / "a" / "spectra.csv")) == 240
        summary = json.loads((tmp_path / "a" / "summary.json").read_text())
        assert summary["count"] == 60
        manifest = load_manifest(tmp_path / "a" / "manifest.json")
        assert manifest.parameters["seed"] == 3
        assert [o.path for o in manifest.outputs] == ["purity.csv", "spectra.csv", "summary.json"]

    def test_invalid_dims(self, runner, tmp_path):
        result = invoke(runner, "haar", "--n", 4, "--m", 2, "--samples", 5, "--out-dir", tmp_path)
        assert result.exit_code == 2

    def test_replay(self, runner, tmp_path):
        invoke(runner, "haar", "--n", 3, "--m", 3, "--samples", 20, "--seed", 5, "--out-dir", tmp_path / "run")
        result = invoke(runner, "replay", tmp_path / "run" / "manifest.json", "--out-dir", tmp_path / "again")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "run" / "purity.csv").read_bytes() == (tmp_path / "again" / "purity.csv").read_bytes()


class TestMcmc:
    ARGS = ["mcmc", "--n", 4, "--beta", 1, "--sweeps", 300, "--burn-in", 100, "--seed", 2, "--chains", 2]

    def test_outputs_and_reproducibility(self, runner, tmp_path):
        assert invoke(runner, *self.ARGS, "--out-dir", tmp_path / "a").exit_code == 0
        assert invoke(runner, *self.ARGS, "--out-dir", tmp_path / "b").exit_code == 0
        for name in ("chain_0.csv", "chain_1.csv", "spectra.csv", "diagnostics.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        rows = read_csv(tmp_path / "a" / "chain_0.csv")
        assert len(rows) == 200
        assert list(rows[0]) == ["sweep", "purity"]
        diagnostics = json.loads((tmp_path / "a" / "diagnostics.json").read_text())
        assert len(diagnostics["chains"]) == 2
        assert diagnostics["pooled"]["recorded"] == 400
        assert diagnostics["chains"][0]["tau"] is not None
        assert diagnostics["pooled"]["r_theory"] == pytest.approx(theory.mean_purity_coeff(1.0))

    def test_negative_beta_warns(self, runner, tmp_path):
        result = invoke(runner, "mcmc", "--n", 4, "--beta", -0.037, "--sweeps", 20, "--out-dir", tmp_path)
        assert result.exit_code == 0
        assert "metastable branch" in result.output

    def test_invalid_params(self, runner, tmp_path):
        result = invoke(runner, "mcmc", "--n", 4, "--beta", 1, "--sweeps", 10, "--burn-in", 10, "--out-dir", tmp_path)
        assert result.exit_code == 2

    def test_replay(self, runner, tmp_path):
        invoke(runner, *self.ARGS, "--out-dir", tmp_path / "run")
        result = invoke(runner, "replay", tmp_path / "run" / "manifest.json", "--out-dir", tmp_path / "again")
        assert result.exit_code == 0, result.output


class TestCompare:
    def test_haar_spectra(self, runner, tmp_path):
        invoke(runner, "haar", "--n", 8, "--m", 8, "--samples", 200, "--emit", "spectra", "--out-dir", tmp_path)
        out = tmp_path / "compare.json"
        result = invoke(runner, "compare", "--spectra", tmp_path / "spectra.csv", "--beta", 0, "--bins", 20,
                        "--out", out)
        assert result.exit_code == 0, result.output
        data = json.loads(out.read_text())
        assert set(data) >= {"l1", "ks_vs_analytic_cdf", "bins", "support"}
        assert data["support"] == pytest.approx([0.0, 4.0])
        assert data["l1"] < 0.5
        assert read_csv(tmp_path / "histogram.csv")[0].keys() == {"bin_left", "bin_right", "density", "analytic_midpoint"}

    def test_empty_file(self, runner, tmp_path):
        empty = tmp_path / "spectra.csv"
        empty.write_text("", encoding="utf-8")
        result = invoke(runner, "compare", "--spectra", empty, "--beta", 0, "--out", tmp_path / "c.json")
        assert result.exit_code == 2

    def test_rerun_and_replay_identical(self, runner, tmp_path):
        invoke(runner, "haar", "--n", 6, "--m", 6, "--samples", 50, "--seed", 4, "--emit", "spectra",
               "--out-dir", tmp_path / "haar")
        args = ["compare", "--spectra", tmp_path / "haar" / "spectra.csv", "--beta", 0, "--bins", 15]
        assert invoke(runner, *args, "--out", tmp_path / "a" / "c.json").exit_code == 0
        assert invoke(runner, *args, "--out", tmp_path / "b" / "c.json").exit_code == 0
        names = ["c.json", "histogram.csv"]
        assert_same_files(tmp_path / "a", tmp_path / "b", names)
        result = invoke(runner, "replay", tmp_path / "a" / "c.manifest.json", "--out-dir", tmp_path / "again")
        assert result.exit_code == 0, result.output
        assert_same_files(tmp_path / "a", tmp_path / "again", names)


def test_check(runner):
    result = invoke(runner, "check")
    assert result.exit_code == 0, result.output
    assert "All checks passed" in result.output


@pytest.mark.slow
class TestFigureRuns:
    def test_haar_density(self, runner, tmp_path):
        invoke(runner, "haar", "--n", 64, "--m", 64, "--samples", 400, "--emit", "spectra", "--out-dir", tmp_path)
        invoke(runner, "compare", "--spectra", tmp_path / "spectra.csv", "--beta", 0, "--out", tmp_path / "c.json")
        assert json.loads((tmp_path / "c.json").read_text())["l1"] < 0.05

    def test_mcmc_beta_plus(self, runner, tmp_path):
        result = invoke(runner, "mcmc", "--n", 64, "--beta", 2, "--sweeps", 20_000, "--burn-in", 2_000,
                        "--out-dir", tmp_path)
        assert result.exit_code == 0
        pooled = json.loads((tmp_path / "diagnostics.json").read_text())["pooled"]
        assert pooled["mean_scaled_purity"] == pytest.approx(1.25, rel=0.03)
        invoke(runner, "compare", "--spectra", tmp_path / "spectra.csv", "--beta", 2, "--out", tmp_path / "c.json")
        assert json.loads((tmp_path / "c.json").read_text())["l1"] < 0.07
