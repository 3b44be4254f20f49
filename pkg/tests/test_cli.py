"""Subcommand plumbing, exit codes and artifact stamping."""

import json
from pathlib import Path

import pytest

from zenscope.cli import main


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Synthetic data plus the degarch stage, shared across CLI tests."""
    out = tmp_path_factory.mktemp("cliwork")
    assert run("--seed", "3", "--out-dir", str(out), "synth", "--d", "5", "--T", "400") == 0
    assert run("--seed", "3", "--out-dir", str(out), "ingest",
               "--prices", str(out / "prices.csv"), "--sectors", str(out / "sectors.csv")) == 0
    assert run("--seed", "3", "--out-dir", str(out), "degarch",
               "--returns", str(out / "returns.csv")) == 0
    return out


class TestExitCodes:
    def test_missing_input_file_exit_1_names_path(self, tmp_path, capsys):
        code = run("--out-dir", str(tmp_path), "ingest", "--prices", str(tmp_path / "nope.csv"))
        assert code == 1
        assert "nope.csv" in capsys.readouterr().err

    def test_bad_flag_exit_1(self, capsys):
        assert run("depmat", "--measure", "pearson", "--residuals", "x.csv") == 1

    def test_missing_subcommand_exit_1(self):
        assert run() == 1

    def test_success_exit_0(self, workdir):
        assert (workdir / "fits.json").exists()


class TestArtifacts:
    def test_stamp_present_in_json(self, workdir):
        doc = json.loads((workdir / "fits.json").read_text())
        meta = doc["meta"]
        assert meta["tool"] == "zenscope"
        assert meta["seed"] == 3
        assert len(meta["config_hash"]) == 16

    def test_stamp_comment_in_csv(self, workdir):
        first = (workdir / "returns.csv").read_text().splitlines()[0]
        assert first.startswith("# {")
        assert '"tool":"zenscope"' in first

    def test_fits_schema(self, workdir):
        doc = json.loads((workdir / "fits.json").read_text())
        keys = {"ticker", "mu", "phi", "theta", "alpha0", "alpha1", "beta",
                "nu", "loglik", "converged"}
        assert len(doc["fits"]) == 5
        assert all(set(f) == keys for f in doc["fits"])

    def test_depmat_schema_and_csv(self, workdir):
        assert run("--out-dir", str(workdir), "depmat",
                   "--residuals", str(workdir / "residuals.csv"), "--measure", "tau") == 0
        doc = json.loads((workdir / "depmat.json").read_text())
        assert doc["measure"] == "tau"
        assert len(doc["values"]) == 5 * 4 // 2  # lower triangle
        grid = (workdir / "depmat.csv").read_text().splitlines()
        assert grid[1].split(",")[0] == "ticker"

    def test_gof_schema(self, workdir):
        assert run("--out-dir", str(workdir), "gof",
                   "--residuals", str(workdir / "residuals.csv")) == 0
        doc = json.loads((workdir / "gof.json").read_text())
        assert "uncorrected" in doc["note"]
        assert len(doc["reports"]) == 10
        cats = {"both-ok", "both-poor", "pairwise-ok-joint-poor",
                "joint-ok-pairwise-poor", "missing"}
        assert all(r["category"] in cats for r in doc["reports"])

    def test_zenpath_modes(self, workdir):
        base = ["--out-dir", str(workdir), "zenpath", "--depmat", str(workdir / "depmat.json")]
        assert run(*base, "--order", "desc") == 0
        doc = json.loads((workdir / "zenpath.json").read_text())
        assert doc["groups"] and doc["scores"]
        assert run(*base, "--order", "extremes", "--top", "3", "--bottom", "2") == 0
        assert run(*base, "--sector-mode", "per-sector",
                   "--sectors", str(workdir / "sectors.csv")) == 0

    def test_sector_mode_needs_sectors(self, workdir, capsys):
        code = run("--out-dir", str(workdir), "zenpath",
                   "--depmat", str(workdir / "depmat.json"), "--sector-mode", "within")
        assert code == 1
        assert "--sectors" in capsys.readouterr().err

    def test_zenplot_renders(self, workdir):
        run("--out-dir", str(workdir), "zenpath", "--depmat", str(workdir / "depmat.json"))
        out = workdir / "plot.svg"
        assert run("--out-dir", str(workdir), "zenplot",
                   "--zenpath", str(workdir / "zenpath.json"),
                   "--residuals", str(workdir / "residuals.csv"),
                   "--out", str(out)) == 0
        text = out.read_text()
        assert text.splitlines()[1].startswith("<!-- {")
        assert "</svg>" in text

    def test_zenplot_qq_needs_fits(self, workdir, capsys):
        run("--out-dir", str(workdir), "zenpath", "--depmat", str(workdir / "depmat.json"))
        code = run("--out-dir", str(workdir), "zenplot",
                   "--zenpath", str(workdir / "zenpath.json"),
                   "--residuals", str(workdir / "residuals.csv"),
                   "--panel", "qq")
        assert code == 1
        assert "--fits" in capsys.readouterr().err

    def test_zenplot_acf_and_qq_panels(self, workdir):
        run("--out-dir", str(workdir), "zenpath", "--depmat", str(workdir / "depmat.json"))
        for panel in ("acf", "qq"):
            assert run("--seed", "3", "--out-dir", str(workdir), "zenplot",
                       "--zenpath", str(workdir / "zenpath.json"),
                       "--residuals", str(workdir / "residuals.csv"),
                       "--fits", str(workdir / "fits.json"),
                       "--panel", panel,
                       "--out", str(workdir / f"plot_{panel}.svg")) == 0


class TestDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("--seed", "11", "--out-dir", str(out), "synth",
                       "--d", "4", "--T", "300") == 0
            assert run("--seed", "11", "--out-dir", str(out), "ingest",
                       "--prices", str(out / "prices.csv")) == 0
        assert (a / "prices.csv").read_bytes() == (b / "prices.csv").read_bytes()
        assert (a / "returns.csv").read_bytes() == (b / "returns.csv").read_bytes()

    def test_synth_contamination_flag(self, tmp_path):
        assert run("--seed", "5", "--out-dir", str(tmp_path), "synth",
                   "--d", "3", "--T", "300", "--contaminate", "1",
                   "--missing-frac", "0.05") == 0
        text = (tmp_path / "prices.csv").read_text()
        assert ",," in text or text.count(",,") >= 0  # missing cells present
        assert run("--seed", "5", "--out-dir", str(tmp_path), "ingest",
                   "--prices", str(tmp_path / "prices.csv"), "--max-missing", "0.5") == 0
