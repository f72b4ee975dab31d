"""End-to-end tests for CLI commands."""

import io
import json
from pathlib import Path

import pandas as pd
import pytest
from typer.testing import CliRunner

from mr_ccc.cli.app import app, cli_dispatch
from mr_ccc.core.baselines import fit_ols
from mr_ccc.core.benchmark import BENCH_COLUMNS
from mr_ccc.core.config import SimConfig
from mr_ccc.core.pipeline import SCREEN_COLUMNS
from mr_ccc.core.simulator import generate_dataset
from mr_ccc.core.storage import read_dataset, write_results

runner = CliRunner()

QUICK_CHAIN = ["--iterations", "300", "--burn-in", "100", "--thin", "5"]


@pytest.mark.e2e
class TestCLIHelp:
    """Tests for CLI help output."""

    def test_main_help(self):
        """Test main help output."""
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        assert "MR-CCC" in result.output
        for command in ("simulate", "fit", "benchmark", "screen"):
            assert command in result.output

    def test_fit_help(self):
        """Test fit command help."""
        result = runner.invoke(app, ["fit", "--help"])
        assert result.exit_code == 0
        assert "-d" in result.output
        assert "-m" in result.output

    def test_status_without_command(self):
        """Test that a bare invocation shows defaults and next steps."""
        result = runner.invoke(app, [])
        assert result.exit_code == 0
        assert "MRCCC_JOBS" in result.output
        assert "Next steps" in result.output


@pytest.mark.e2e
class TestVersionCommand:
    """Tests for version command."""

    def test_version_command(self):
        """Test version command output."""
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert "mr-ccc" in result.output

    def test_version_flag(self):
        """Test --version flag."""
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert "mr-ccc" in result.output


@pytest.mark.e2e
class TestSimulateAndFit:
    """Tests for simulate and fit."""

    def test_simulate_writes_dataset_and_truth(self, tmp_path: Path):
        """Test a single replicate with its truth sidecar."""
        out = tmp_path / "d.csv"

        result = runner.invoke(app, ["simulate", "-s", "S2", "-n", "50", "--seed", "3", "-o", str(out)])

        assert result.exit_code == 0
        assert read_dataset(out).n == 50
        assert (tmp_path / "d.truth.csv").exists()

    def test_simulate_replicate_files(self, tmp_path: Path):
        """Test per-replicate file names."""
        result = runner.invoke(app, ["simulate", "-s", "S1", "-n", "30", "-r", "2", "-o", str(tmp_path / "s.csv")])

        assert result.exit_code == 0
        assert (tmp_path / "s_r000.csv").exists()
        assert (tmp_path / "s_r001.truth.csv").exists()

    def test_simulate_to_stdout(self):
        """Test that the dataset streams to stdout without --out."""
        result = runner.invoke(app, ["simulate", "-s", "S3", "-n", "20"])

        assert result.exit_code == 0
        assert result.stdout.startswith("donor,g1,")

    def test_simulate_multiple_replicates_need_out(self):
        """Test that several replicates cannot share stdout."""
        result = runner.invoke(app, ["simulate", "-s", "S1", "-n", "20", "-r", "2"])

        assert result.exit_code == 1

    def test_fit_matches_library_call(self, tmp_path: Path):
        """Test that the CLI writes the same row as fitting in memory."""
        data, out = tmp_path / "d.csv", tmp_path / "ols.csv"
        runner.invoke(app, ["simulate", "-s", "S1", "-n", "200", "--seed", "5", "-o", str(data)])

        result = runner.invoke(app, ["fit", "-d", str(data), "-m", "ols", "-o", str(out)])

        expected = io.StringIO()
        write_results([fit_ols(read_dataset(data))], expected)
        assert result.exit_code == 0
        assert out.read_text() == expected.getvalue()

    def test_fit_mrccc_with_trace(self, tmp_path: Path):
        """Test an MR-CCC fit with a chain trace."""
        data, out, trace = tmp_path / "d.csv", tmp_path / "r.csv", tmp_path / "trace.csv"
        runner.invoke(app, ["simulate", "-s", "S2", "-n", "100", "-o", str(data)])

        args = ["fit", "-d", str(data), "-m", "mrccc", *QUICK_CHAIN, "--seed", "1"]

        result = runner.invoke(app, [*args, "-o", str(out), "--trace", str(trace)])

        assert result.exit_code == 0
        row = pd.read_csv(out)
        assert row.loc[0, "method"] == "mrccc"
        assert 0.0 <= row.loc[0, "score"] <= 1.0
        draws = pd.read_csv(trace)
        assert len(draws) == 40
        assert {"iteration", "gamma", "beta_X", "beta_XZ"} <= set(draws.columns)

    def test_trace_requires_mrccc(self, tmp_path: Path):
        """Test that --trace is refused for other estimators."""
        data = tmp_path / "d.csv"
        runner.invoke(app, ["simulate", "-s", "S1", "-n", "40", "-o", str(data)])

        result = runner.invoke(app, ["fit", "-d", str(data), "-m", "ols", "--trace", str(tmp_path / "t.csv")])

        assert result.exit_code == 1

    def test_fit_json_output(self, tmp_path: Path):
        """Test the JSON summary of a fit."""
        data = tmp_path / "d.csv"
        runner.invoke(app, ["simulate", "-s", "S1", "-n", "80", "-o", str(data)])

        result = runner.invoke(app, ["--json", "fit", "-d", str(data), "-m", "mvmr", "-o", str(tmp_path / "r.csv")])

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert payload["command"] == "fit"
        assert payload["n"] == 80
        assert payload["results"][0]["method"] == "mvmr"


@pytest.mark.e2e
class TestExitCodes:
    """Tests for the exit-code contract."""

    def test_missing_required_option_is_usage_error(self):
        """Test exit code 1 when --data is missing."""
        assert cli_dispatch(["fit"]) == 1

    def test_unknown_command_is_usage_error(self):
        """Test exit code 1 for an unknown command."""
        assert cli_dispatch(["frobnicate"]) == 1

    def test_non_numeric_data_is_data_error(self, tmp_path: Path):
        """Test exit code 2 for a dataset with a non-numeric cell."""
        data = tmp_path / "bad.csv"
        data.write_text("donor,g1,h1,x,z,y\nd1,0,1,0.5,0.2,oops\nd2,1,0,0.1,0.3,0.4\n")

        assert cli_dispatch(["fit", "-d", str(data), "-m", "ols"]) == 2

    def test_missing_file_is_data_error(self, tmp_path: Path):
        """Test exit code 2 for a missing dataset."""
        result = runner.invoke(app, ["fit", "-d", str(tmp_path / "absent.csv")])

        assert result.exit_code == 2

    def test_chain_without_kept_draws_is_config_error(self, tmp_path: Path):
        """Test exit code 2 when thinning leaves no post-burn-in draw."""
        data = tmp_path / "d.csv"
        runner.invoke(app, ["simulate", "-s", "S1", "-n", "40", "-o", str(data)])

        chain = ["--iterations", "10", "--burn-in", "5", "--thin", "10"]

        assert cli_dispatch(["fit", "-d", str(data), "-m", "mrccc", *chain]) == 2

    def test_success_returns_zero(self, tmp_path: Path):
        """Test exit code 0 through the dispatcher."""
        assert cli_dispatch(["simulate", "-s", "S1", "-n", "20", "-o", str(tmp_path / "d.csv")]) == 0


@pytest.mark.e2e
class TestBenchmarkCommand:
    """Tests for the benchmark command."""

    def test_adhoc_grid(self, tmp_path: Path):
        """Test one row per (scenario, n, method) in an ad hoc grid."""
        out = tmp_path / "bench.csv"
        grid = ["--n-list", "60,90", "--scenarios", "S1,S3", "--methods", "ols,mvmr,mrbma"]

        result = runner.invoke(app, ["benchmark", "--mode", "adhoc", *grid, "-r", "2", "-j", "1", "-o", str(out)])

        assert result.exit_code == 0
        table = pd.read_csv(out)
        assert list(table.columns) == list(BENCH_COLUMNS)
        assert len(table) == 2 * 2 * 3

    def test_unpublished_sample_size_rejected(self):
        """Test that benchmark mode refuses sizes outside the published grid."""
        result = runner.invoke(app, ["benchmark", "--n-list", "123", "--methods", "ols", "-r", "1", "-j", "1"])

        assert result.exit_code == 1

    def test_full_method_grid_is_deterministic(self, tmp_path: Path):
        """Test 12 rows at n=500 and identical bytes for the same seed."""
        args = ["benchmark", "--n-list", "500", "--seed", "7", "--replicates", "1", "-j", "1", *QUICK_CHAIN]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"

        assert runner.invoke(app, [*args, "-o", str(first)]).exit_code == 0
        assert runner.invoke(app, [*args, "-o", str(second)]).exit_code == 0

        assert first.read_bytes() == second.read_bytes()
        table = pd.read_csv(first)
        assert len(table) == 12
        assert set(table["method"]) == {"ols", "mvmr", "mrbma", "mrccc"}


@pytest.mark.e2e
class TestScreenCommand:
    """Tests for the screen command."""

    TRIPLET = {"ligand": "LIG", "receptor": "REC", "pathway_id": "PW", "pathway_genes": ["PW1"]}

    def test_screen_manifest(self, triplet_tables, tmp_path: Path):
        """Test a fitted and an excluded triplet in the output CSV."""
        triplet_tables.write(generate_dataset(SimConfig(scenario="S2", n=80)).dataset)
        manifest = triplet_tables.manifest([self.TRIPLET, {**self.TRIPLET, "ligand": "ORPHAN"}])
        out = tmp_path / "screen.csv"

        result = runner.invoke(app, ["screen", "-m", str(manifest), "-o", str(out), "-j", "1", *QUICK_CHAIN])

        assert result.exit_code == 0
        table = pd.read_csv(out)
        assert list(table.columns) == list(SCREEN_COLUMNS)
        assert list(table["triplet_id"]) == ["LIG|REC|PW", "ORPHAN|REC|PW"]
        assert list(table["status"]) == ["ok", "excluded"]

    def test_screen_json_summary(self, triplet_tables, tmp_path: Path):
        """Test the JSON summary counts."""
        triplet_tables.write(generate_dataset(SimConfig(scenario="S1", n=60)).dataset)
        manifest = triplet_tables.manifest([self.TRIPLET, {**self.TRIPLET, "ligand": "NOISE"}])

        result = runner.invoke(
            app, ["--json", "screen", "-m", str(manifest), "-o", str(tmp_path / "s.csv"), "-j", "1", *QUICK_CHAIN]
        )

        assert result.exit_code == 0
        payload = json.loads(result.stdout)
        assert payload["n_screened"] == 1
        assert payload["n_excluded"] == 1
        assert payload["n_failed"] == 0

    def test_missing_manifest(self, tmp_path: Path):
        """Test exit code 2 for a missing manifest."""
        result = runner.invoke(app, ["screen", "-m", str(tmp_path / "absent.json")])

        assert result.exit_code == 2
