"""Tests for SCMs, sampling and the dataset and SCM file formats."""

import numpy as np
import pandas as pd
import pytest

from conftest import NOISY_CHANNEL, discrete_chain_scm, response_dag, stimulus_dag
from neurocause.citest import DataCiProvider
from neurocause.errors import InputError
from neurocause.fixtures import FIXTURE_NAMES, canonical_fixture
from neurocause.graph import GraphOracle, VariableRole, conditioning_queries
from neurocause.scm import (
    Dataset,
    DiscreteCpt,
    ExperimentKind,
    LinearGaussian,
    Scm,
    dataset_from_csv,
    dataset_to_csv,
    encode_codes,
    make_rng,
    oracle,
    read_dataset_csv,
    read_scm,
    sample,
    scm_from_text,
    scm_to_text,
    write_dataset_csv,
    write_scm,
)


def _continuous_response_scm(weight: float, intercept: float = 0.0) -> Scm:
    """X1 -> X2 -> R and X1 -> R, every node linear-Gaussian."""
    dag = response_dag(("X1", "X2"), ("X1", "R"), ("X2", "R"))
    mechanisms = {
        "X1": LinearGaussian(),
        "X2": LinearGaussian((("X1", weight),), noise_variance=0.5, intercept=intercept),
        "R": LinearGaussian((("X1", 0.5), ("X2", -1.2)), noise_variance=2.0),
    }
    return Scm(dag, mechanisms, ExperimentKind.RESPONSE_BASED)


class TestRng:
    def test_same_key_same_stream(self):
        assert np.array_equal(make_rng(7).random(5), make_rng(7).random(5))

    def test_streams_differ(self):
        assert not np.array_equal(make_rng(7, 0).random(5), make_rng(7, 1).random(5))

    def test_negative_seed(self):
        with pytest.raises(InputError):
            make_rng(-1)


class TestMechanisms:
    def test_weights_from_mapping(self):
        mechanism = LinearGaussian({"A": 2.0})
        assert mechanism.weights == (("A", 2.0),)
        assert mechanism.parents == {"A"}

    def test_noise_variance_positive(self):
        with pytest.raises(InputError):
            LinearGaussian(noise_variance=0.0)

    def test_cpt_rows_must_sum_to_one(self):
        with pytest.raises(InputError):
            DiscreteCpt(2, ((0.5, 0.6),))

    def test_cpt_row_width(self):
        with pytest.raises(InputError):
            DiscreteCpt(3, ((0.5, 0.5),))

    def test_encode_codes_is_centered(self):
        assert encode_codes(np.array([0, 1, 1]), 2).tolist() == [-1.0, 1.0, 1.0]
        assert encode_codes(np.array([0, 1, 2]), 3).tolist() == [-2.0, 0.0, 2.0]


class TestScmValidation:
    def test_weights_must_match_parents(self, chain_dag):
        mechanisms = {
            "S": DiscreteCpt.uniform(2),
            "X1": LinearGaussian({"X2": 1.0}),
            "X2": LinearGaussian({"X1": 1.0}),
        }
        with pytest.raises(InputError, match="parents"):
            Scm(chain_dag, mechanisms, ExperimentKind.STIMULUS_BASED)

    def test_mechanisms_cover_dag(self, chain_dag):
        with pytest.raises(InputError):
            Scm(chain_dag, {"S": DiscreteCpt.uniform(2)}, ExperimentKind.STIMULUS_BASED)

    def test_cpt_row_count(self, chain_dag):
        mechanisms = {
            "S": DiscreteCpt.uniform(2),
            "X1": DiscreteCpt(2, ((0.5, 0.5),)),
            "X2": DiscreteCpt(2, NOISY_CHANNEL),
        }
        with pytest.raises(InputError, match="rows"):
            Scm(chain_dag, mechanisms, ExperimentKind.STIMULUS_BASED)

    def test_discrete_child_of_continuous_parent(self, chain_dag):
        mechanisms = {
            "S": DiscreteCpt.uniform(2),
            "X1": LinearGaussian({"S": 1.0}),
            "X2": DiscreteCpt(2, NOISY_CHANNEL),
        }
        with pytest.raises(InputError, match="continuous parent"):
            Scm(chain_dag, mechanisms, ExperimentKind.STIMULUS_BASED)

    def test_response_experiment_needs_response(self, chain_dag):
        with pytest.raises(InputError):
            Scm(chain_dag, canonical_fixture("stim-chain").mechanisms, ExperimentKind.RESPONSE_BASED)

    def test_condition(self):
        assert canonical_fixture("stim-chain").condition == "S"
        assert canonical_fixture("resp-fork").condition == "R"

    def test_oracle_reads_the_graph(self):
        ci = oracle(canonical_fixture("stim-chain"))
        assert ci.query("S", "X2", ["X1"]).independent


class TestSampling:
    def test_deterministic(self):
        scm = canonical_fixture("stim-chain")
        pd.testing.assert_frame_equal(sample(scm, 200, 3).frame, sample(scm, 200, 3).frame)

    def test_seed_changes_data(self):
        scm = canonical_fixture("stim-chain")
        assert not sample(scm, 200, 3).frame.equals(sample(scm, 200, 4).frame)

    def test_hidden_columns_dropped(self):
        data = sample(canonical_fixture("resp-hidden-fig1"), 100, 0)
        assert data.columns == ("X1", "X2", "R")
        assert data.condition == "R"
        assert data.kind is ExperimentKind.RESPONSE_BASED

    def test_stimulus_is_categorical(self):
        data = sample(canonical_fixture("stim-chain"), 100, 0)
        assert data.is_categorical("S")
        assert not data.is_categorical("X1")
        assert set(data.column("S").tolist()) <= {0, 1}

    def test_linear_gaussian_moments(self):
        data = sample(canonical_fixture("stim-chain"), 20000, 1)
        x1 = data.column("X1")
        x2 = data.column("X2")
        # X1 = S + e with S = +-1, X2 = X1 + e.
        assert abs(x1.mean()) < 0.05
        assert x1.var() == pytest.approx(2.0, abs=0.1)
        assert x2.var() == pytest.approx(3.0, abs=0.15)

    def test_discrete_cpt_frequencies(self):
        data = sample(discrete_chain_scm(), 20000, 2)
        s, x1 = data.column("S"), data.column("X1")
        agreement = float((s == x1).mean())
        assert agreement == pytest.approx(0.8, abs=0.02)

    def test_covariance_matches_closed_form(self):
        scm = _continuous_response_scm(0.8)
        data = sample(scm, 100_000, 5)
        # Columns X1, X2, R; weights[i, j] is the weight of edge i -> j.
        weights = np.array([[0.0, 0.8, 0.5], [0.0, 0.0, -1.2], [0.0, 0.0, 0.0]])
        mixing = np.linalg.inv(np.eye(3) - weights.T)
        expected = mixing @ np.diag([1.0, 0.5, 2.0]) @ mixing.T
        observed = np.cov(data.frame.to_numpy(dtype=np.float64), rowvar=False)
        np.testing.assert_allclose(observed, expected, atol=0.05)

    def test_zero_weights_leave_the_intercept(self):
        data = sample(_continuous_response_scm(0.0, intercept=2.5), 20000, 6)
        assert data.column("X2").mean() == pytest.approx(2.5, abs=0.05)

    def test_sample_size_must_be_positive(self):
        with pytest.raises(InputError):
            sample(canonical_fixture("stim-chain"), 0, 0)


class TestDatasetViews:
    def test_as_continuous_encodes_codes(self):
        data = sample(canonical_fixture("stim-chain"), 50, 0).as_continuous()
        assert not data.categorical
        assert set(data.column("S").tolist()) <= {-1.0, 1.0}

    def test_as_discrete_thresholds_everything(self):
        data = sample(canonical_fixture("stim-chain"), 50, 0)
        discrete = data.as_discrete()
        assert discrete.categorical == set(discrete.columns)
        assert np.array_equal(discrete.column("X1"), (data.column("X1") > 0).astype(np.int64))
        assert np.array_equal(discrete.column("S"), data.column("S"))

    def test_one_condition_column(self):
        frame = pd.DataFrame({"X1": [0.0], "X2": [1.0]})
        with pytest.raises(InputError):
            Dataset(frame, {"X1": VariableRole.FEATURE, "X2": VariableRole.FEATURE})

    def test_no_hidden_columns(self):
        frame = pd.DataFrame({"H": [0.0], "R": [1.0]})
        with pytest.raises(InputError):
            Dataset(frame, {"H": VariableRole.HIDDEN, "R": VariableRole.RESPONSE})


class TestDatasetCsv:
    def test_header_carries_roles(self):
        text = dataset_to_csv(sample(canonical_fixture("resp-fork"), 3, 0))
        assert text.splitlines()[0] == "X1:feature,X2:feature,R:response"

    def test_round_trip_is_exact(self, tmp_path):
        data = sample(canonical_fixture("stim-collider"), 50, 5)
        path = tmp_path / "data.csv"
        write_dataset_csv(data, path)
        loaded = read_dataset_csv(path)
        assert loaded.columns == data.columns
        assert loaded.categorical == data.categorical
        pd.testing.assert_frame_equal(loaded.frame, data.frame, check_exact=True)

    def test_floats_parse_to_the_nearest_double(self):
        text = "S:stimulus,X1:feature\n0,-0.17369198864599777\n1,0.30000000000000004\n"
        values = dataset_from_csv(text).column("X1")
        assert values.tolist() == [-0.17369198864599777, 0.30000000000000004]

    def test_write_is_byte_identical(self, tmp_path):
        scm = canonical_fixture("stim-chain")
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        write_dataset_csv(sample(scm, 100, 7), first)
        write_dataset_csv(sample(scm, 100, 7), second)
        assert first.read_bytes() == second.read_bytes()

    def test_header_without_role(self):
        with pytest.raises(InputError, match="role"):
            dataset_from_csv("S,X1\n0,1.5\n")

    def test_non_numeric_values(self):
        with pytest.raises(InputError):
            dataset_from_csv("S:stimulus,X1:feature\n0,abc\n")


class TestScmSpecFile:
    @pytest.mark.parametrize("name", ["stim-chain", "resp-hidden-fig1"])
    def test_round_trip(self, name, tmp_path):
        scm = canonical_fixture(name)
        path = tmp_path / "model.scm"
        write_scm(scm, path)
        assert read_scm(path) == scm

    def test_discrete_round_trip(self):
        scm = discrete_chain_scm()
        assert scm_from_text(scm_to_text(scm)) == scm

    def test_custom_weights(self):
        dag = stimulus_dag(("S", "X1"))
        scm = Scm(
            dag,
            {
                "S": DiscreteCpt.uniform(2),
                "X1": LinearGaussian({"S": 0.25}, noise_variance=2.0, intercept=1.5),
                "X2": LinearGaussian(),
            },
            ExperimentKind.STIMULUS_BASED,
        )
        text = scm_to_text(scm)
        assert "weights = S=0.25" in text
        assert scm_from_text(text) == scm

    def test_missing_experiment_section(self):
        with pytest.raises(InputError):
            scm_from_text("[S]\nrole = stimulus\nmechanism = discrete\n")

    def test_unknown_mechanism(self):
        text = "[experiment]\nkind = stimulus\n\n[S]\nrole = stimulus\nmechanism = magic\n"
        with pytest.raises(InputError, match="mechanism"):
            scm_from_text(text)


@pytest.mark.slow
class TestSamplerMatchesOracle:
    @pytest.mark.parametrize("name", FIXTURE_NAMES)
    def test_every_statement_agrees(self, name):
        scm = canonical_fixture(name)
        truth = GraphOracle(scm.dag)
        providers = [
            DataCiProvider(sample(scm, 20000, seed).as_continuous(), 0.01) for seed in range(20)
        ]
        for a, b, given in conditioning_queries(scm.dag.observed):
            expected = truth.query(a, b, given).verdict
            agree = sum(p.query(a, b, given).verdict is expected for p in providers)
            assert agree >= 19, (a, b, sorted(given), agree)
