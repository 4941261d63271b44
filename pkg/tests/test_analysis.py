"""Tests for end-to-end analysis runs and the demo table."""

import pytest

from conftest import noise_scm
from neurocause.analysis import format_demo_row, run_analysis, run_demo, run_scenario
from neurocause.config import build_config
from neurocause.errors import InputError
from neurocause.fixtures import FIXTURE_NAMES, ScenarioTopic, canonical_fixture
from neurocause.interpret import Claim
from neurocause.relevance import ProvenanceKind
from neurocause.scm import sample, write_dataset_csv, write_scm


class TestOracleMode:
    def test_fixture(self):
        report = run_analysis(build_config({"fixture": "stim-sec41"}))
        assert len(report.structures) == 1
        assert report.final_claim("X2").claim is Claim.NOT_EFFECT

    def test_scm_file_mechanisms_are_ignored_with_notice(self, tmp_path):
        path = tmp_path / "fork.scm"
        write_scm(canonical_fixture("resp-sec42"), path)
        notices = []
        report = run_analysis(build_config({"scm": path}), notify=notices.append)
        assert any("ignored" in notice for notice in notices)
        assert report.final_claim("X1").claim is Claim.DIRECT_CAUSE

    def test_no_combine(self):
        report = run_analysis(build_config({"fixture": "stim-chain", "combine": False}))
        assert report.structures is None

    def test_kind_must_match_input(self):
        with pytest.raises(InputError):
            run_analysis(build_config({"fixture": "stim-chain", "kind": "response"}))

    def test_condition_must_match_input(self):
        with pytest.raises(InputError):
            run_analysis(build_config({"fixture": "stim-chain", "condition": "X1"}))


class TestDataMode:
    def test_continuous_pipeline(self, tmp_path):
        path = tmp_path / "collider.csv"
        write_dataset_csv(sample(canonical_fixture("stim-collider"), 2000, 0), path)
        report = run_analysis(build_config({"data": path, "bonferroni": True}))
        assert report.encoding_sets.provenance.kind is ProvenanceKind.STATISTICAL
        assert report.encoding_sets.provenance.effective_alpha == pytest.approx(0.01 / 6)
        assert report.decoding_sets.decoding_relevant == {"X1", "X2"}

    def test_discrete_pipeline(self, tmp_path):
        path = tmp_path / "chain.csv"
        write_dataset_csv(sample(canonical_fixture("stim-chain"), 2000, 0), path)
        report = run_analysis(build_config({"data": path, "pipeline": "discrete"}))
        assert {d.method.value for d in report.encoding_sets.decisions} == {"g-test"}

    def test_pure_noise(self, tmp_path):
        path = tmp_path / "noise.csv"
        write_dataset_csv(sample(noise_scm(), 2000, 0), path)
        report = run_analysis(build_config({"data": path, "bonferroni": True}))
        assert report.decoding_sets.decoding_relevant == frozenset()
        assert {c.claim for c in report.combined_claims} == {Claim.NOT_EFFECT}
        assert {c.claim for c in report.decoding_claims} == {Claim.NO_CLAIM}

    def test_rfe(self, tmp_path):
        path = tmp_path / "collider.csv"
        write_dataset_csv(sample(canonical_fixture("stim-collider"), 400, 0), path)
        report = run_analysis(build_config({"data": path, "rfe": True, "combine": False}))
        assert report.rfe is not None
        assert report.rfe.relevant <= {"X1", "X2"}


class TestDemo:
    def test_every_fixture_reproduces(self):
        rows = run_demo()
        assert [row.scenario.name for row in rows] == list(FIXTURE_NAMES)
        assert all(row.ok for row in rows), [row.deviations for row in rows]

    def test_collider_row(self):
        lines = format_demo_row(run_scenario("stim-collider"))
        text = "\n".join(lines)
        assert "dec={X1,X2}" in text
        assert "X2 not a genuine effect" in text
        assert lines[-1].strip() == "ok"
        assert lines[0].startswith("stim-collider     [single-model pitfalls] stimulus collider")

    def test_resp_chain_row(self):
        text = "\n".join(format_demo_row(run_scenario("resp-chain")))
        assert "dec={X1}" in text
        assert "genuine cause missed" in text

    def test_rows_name_their_topic(self):
        topics = {row.scenario.name: row.scenario.topic for row in run_demo()}
        assert topics["resp-hidden-fig1"] is ScenarioTopic.HIDDEN_CONFOUNDING
        assert topics["stim-sec41"] is ScenarioTopic.COMBINED_DEDUCTION
        assert "[combined deduction]" in format_demo_row(run_scenario("resp-sec42"))[0]
