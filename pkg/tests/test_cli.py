"""Tests for the command-line interface."""

import json

import jsonschema
import pytest
from typer.testing import CliRunner

from neurocause.cli import app, main
from neurocause.errors import EXIT_ANALYSIS, EXIT_IO, EXIT_USAGE
from neurocause.fixtures import FIXTURE_NAMES
from neurocause.report import load_schema

runner = CliRunner()

STIMULUS_STATEMENTS = """\
# collider on S -> X1 <- X2
dep S X1
dep S X1 | X2
indep S X2
dep S X2 | X1
dep X1 X2
dep X1 X2 | S
"""

RESPONSE_STATEMENTS = """\
dep X1 X2
dep X1 X2 | R
dep X1 R
dep X1 R | X2
dep X2 R
indep X2 R | X1
"""


def _run(*args: str):
    return runner.invoke(app, list(args))


class TestSimulate:
    def test_writes_csv_and_prints_graph(self, tmp_path):
        out = tmp_path / "chain.csv"
        result = _run("simulate", "--fixture", "stim-chain", "-n", "100", "--seed", "7", "-o", str(out))
        assert result.exit_code == 0, result.output
        assert out.read_text().splitlines()[0] == "S:stimulus,X1:feature,X2:feature"
        assert len(out.read_text().splitlines()) == 101
        assert "S -> X1" in result.stdout
        assert "X1 -> X2" in result.stdout

    def test_byte_identical(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            _run("simulate", "--fixture", "stim-chain", "-n", "200", "--seed", "7", "-o", str(path))
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_hidden_column_is_dropped(self, tmp_path):
        out = tmp_path / "hidden.csv"
        result = _run("simulate", "--fixture", "resp-hidden-fig1", "-n", "50", "-o", str(out))
        assert result.exit_code == 0, result.output
        header = out.read_text().splitlines()[0]
        assert "H" not in [column.split(":")[0] for column in header.split(",")]
        assert "H -> R" in result.stdout

    def test_discrete(self, tmp_path):
        out = tmp_path / "discrete.csv"
        _run("simulate", "--fixture", "stim-chain", "-n", "50", "--discrete", "-o", str(out))
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        assert {value for row in rows for value in row[1:]} <= {"0", "1"}

    def test_from_scm_spec(self, tmp_path):
        spec = tmp_path / "model.scm"
        out = tmp_path / "model.csv"
        from neurocause.fixtures import canonical_fixture
        from neurocause.scm import write_scm

        write_scm(canonical_fixture("resp-fork"), spec)
        result = _run("simulate", "--scm", str(spec), "-n", "50", "-o", str(out))
        assert result.exit_code == 0, result.output
        assert out.read_text().startswith("X1:feature,X2:feature,R:response")

    @pytest.mark.parametrize(
        "sources", [[], ["--fixture", "stim-chain", "--scm", "model.scm"]]
    )
    def test_exactly_one_source(self, tmp_path, sources):
        result = _run("simulate", *sources, "-o", str(tmp_path / "x.csv"))
        assert result.exit_code == EXIT_USAGE

    def test_unknown_fixture(self, tmp_path):
        result = _run("simulate", "--fixture", "nope", "-o", str(tmp_path / "x.csv"))
        assert result.exit_code == EXIT_USAGE
        assert "nope" in result.output

    def test_missing_spec_file(self, tmp_path):
        result = _run("simulate", "--scm", str(tmp_path / "missing.scm"), "-o", str(tmp_path / "x.csv"))
        assert result.exit_code == EXIT_IO


class TestAnalyze:
    def test_stimulus_deduction(self):
        result = _run("analyze", "--fixture", "stim-sec41")
        assert result.exit_code == 0, result.output
        assert "Consistent structures (1):" in result.stdout
        assert "X2 -> X1" in result.stdout

    def test_response_deduction(self):
        result = _run("analyze", "--fixture", "resp-sec42")
        assert result.exit_code == 0, result.output
        assert "Consistent structures (2):" in result.stdout
        assert "X1: direct-cause" in result.stdout

    def test_oracle_spec_notice(self, tmp_path):
        from neurocause.fixtures import canonical_fixture
        from neurocause.scm import write_scm

        spec = tmp_path / "fork.scm"
        write_scm(canonical_fixture("resp-fork"), spec)
        result = _run("analyze", "--oracle", str(spec))
        assert result.exit_code == 0, result.output
        assert "ignored" in result.output

    def test_json_report(self, tmp_path):
        out = tmp_path / "report.json"
        result = _run("analyze", "--fixture", "stim-collider", "-o", str(out))
        assert result.exit_code == 0, result.output
        document = json.loads(out.read_text())
        jsonschema.validate(document, load_schema())
        for claim in document["claims"]:
            assert f"{claim['feature']}: {claim['claim']}" in result.stdout

    def test_data_mode_is_deterministic(self, tmp_path):
        data = tmp_path / "collider.csv"
        _run("simulate", "--fixture", "stim-collider", "-n", "1000", "--seed", "3", "-o", str(data))
        outputs = [tmp_path / "a.json", tmp_path / "b.json"]
        for out in outputs:
            result = _run("analyze", "--data", str(data), "--bonferroni", "-o", str(out))
            assert result.exit_code == 0, result.output
        assert outputs[0].read_bytes() == outputs[1].read_bytes()

    def test_config_file(self, tmp_path):
        config = tmp_path / "analysis.toml"
        config.write_text('[analyze]\nfixture = "resp-fork"\ncombine = false\n')
        result = _run("analyze", "--config", str(config))
        assert result.exit_code == 0, result.output
        assert "Consistent structures" not in result.stdout

    def test_missing_data_file(self, tmp_path):
        result = _run("analyze", "--data", str(tmp_path / "missing.csv"))
        assert result.exit_code == EXIT_IO

    @pytest.mark.parametrize(
        "args",
        [
            ["--fixture", "nope"],
            ["--fixture", "stim-chain", "--alpha", "1.5"],
            ["--fixture", "stim-chain", "--rfe"],
            [],
        ],
    )
    def test_usage_errors(self, args):
        assert _run("analyze", *args).exit_code == EXIT_USAGE

    def test_unfaithful_data(self, tmp_path):
        data = tmp_path / "bad.csv"
        # X2 = S xor X1: every pair is independent yet each becomes dependent given the third.
        rows = ["S:stimulus,X1:feature,X2:feature"]
        for i in range(400):
            s = i % 2
            x1 = (i // 2) % 2
            rows.append(f"{s},{x1},{s ^ x1}")
        data.write_text("\n".join(rows) + "\n")
        result = _run("analyze", "--data", str(data), "--pipeline", "discrete")
        assert result.exit_code == EXIT_ANALYSIS
        assert "conflicting" in result.output


class TestDemo:
    def test_all_fixtures_reproduce(self):
        result = _run("demo")
        assert result.exit_code == 0, result.output
        assert f"All {len(FIXTURE_NAMES)} fixtures reproduced" in result.stdout
        assert "X2 not a genuine effect" in result.stdout
        assert "genuine cause missed" in result.stdout
        for name in FIXTURE_NAMES:
            assert name in result.stdout


class TestEnumerate:
    def test_all_three_node_structures(self):
        result = _run("enumerate", "--variables", "A:feature,B:feature,C:feature")
        assert result.exit_code == 0, result.output
        assert "25 consistent structure(s)" in result.stdout
        assert "#1: (no edges)" in result.stdout

    def test_stimulus_statements(self, tmp_path):
        statements = tmp_path / "stimulus.txt"
        statements.write_text(STIMULUS_STATEMENTS)
        result = _run(
            "enumerate",
            "--variables", "S:stimulus,X1:feature,X2:feature",
            "--statements", str(statements),
            "--constraint", "randomized-root:S",
            "--constraint", "causal-sufficiency",
        )  # fmt: skip
        assert result.exit_code == 0, result.output
        assert "1 consistent structure(s)" in result.stdout
        assert "#1: S -> X1, X2 -> X1" in result.stdout

    def test_response_statements(self, tmp_path):
        statements = tmp_path / "response.txt"
        statements.write_text(RESPONSE_STATEMENTS)
        result = _run(
            "enumerate",
            "--variables", "X1:feature,X2:feature,R:response",
            "--statements", str(statements),
            "--constraint", "no-outgoing-to-features:R",
            "--constraint", "causal-sufficiency",
        )  # fmt: skip
        assert result.exit_code == 0, result.output
        assert "2 consistent structure(s)" in result.stdout
        assert "Shared edges: X1 -> R" in result.stdout

    def test_contradictory_statements(self, tmp_path):
        statements = tmp_path / "bad.txt"
        statements.write_text("indep A B\ndep B A\n")
        result = _run("enumerate", "--variables", "A:feature,B:feature", "--statements", str(statements))
        assert result.exit_code == EXIT_USAGE

    def test_no_consistent_structure(self, tmp_path):
        statements = tmp_path / "unfaithful.txt"
        statements.write_text("indep A B\nindep B C\ndep A C\nindep A C | B\n")
        result = _run(
            "enumerate", "--variables", "A:feature,B:feature,C:feature", "--statements", str(statements)
        )
        assert result.exit_code == EXIT_ANALYSIS

    @pytest.mark.parametrize(
        "args",
        [
            ["--variables", "A,B"],
            ["--variables", "A:feature,B:feature", "--constraint", "acyclic"],
            ["--variables", "A:organ,B:feature"],
        ],
    )
    def test_usage_errors(self, args):
        assert _run("enumerate", *args).exit_code == EXIT_USAGE

    def test_cap(self):
        names = ",".join(f"V{i}:feature" for i in range(8))
        assert _run("enumerate", "--variables", names).exit_code == EXIT_ANALYSIS


class TestCalibrate:
    def test_minimum_trials(self):
        result = _run("calibrate", "fisher-z", "--trials", "100", "-n", "100")
        assert result.exit_code in (0, EXIT_ANALYSIS)
        assert "rejections" in result.stdout

    def test_too_few_trials(self):
        assert _run("calibrate", "fisher-z", "--trials", "50").exit_code == EXIT_USAGE

    def test_unknown_test(self):
        assert _run("calibrate", "kernel").exit_code == EXIT_USAGE

    def test_deterministic(self):
        args = ("calibrate", "g-test", "--trials", "100", "-n", "100", "--seed", "5")
        assert _run(*args).stdout == _run(*args).stdout


class TestSchema:
    def test_prints_schema(self):
        result = _run("schema")
        assert result.exit_code == 0
        assert json.loads(result.stdout) == load_schema()


class TestEntryPoint:
    def test_unknown_flag_exits_with_usage_code(self, monkeypatch, capsys):
        monkeypatch.setattr("sys.argv", ["neurocause", "demo", "--no-such-flag"])
        with pytest.raises(SystemExit) as excinfo:
            main()
        assert excinfo.value.code == EXIT_USAGE
        assert "--no-such-flag" in capsys.readouterr().err
