"""Shared builders for the test suite."""

from __future__ import annotations

import pytest

from neurocause.graph import Dag, GraphOracle, Variable, VariableRole
from neurocause.scm import DiscreteCpt, ExperimentKind, LinearGaussian, Scm

STIMULUS_VARIABLES = (
    Variable("S", VariableRole.STIMULUS),
    Variable("X1", VariableRole.FEATURE),
    Variable("X2", VariableRole.FEATURE),
)
RESPONSE_VARIABLES = (
    Variable("X1", VariableRole.FEATURE),
    Variable("X2", VariableRole.FEATURE),
    Variable("R", VariableRole.RESPONSE),
)

NOISY_CHANNEL = ((0.8, 0.2), (0.2, 0.8))


def stimulus_dag(*edges: tuple[str, str]) -> Dag:
    return Dag(STIMULUS_VARIABLES, frozenset(edges), randomized=True)


def response_dag(*edges: tuple[str, str]) -> Dag:
    return Dag(RESPONSE_VARIABLES, frozenset(edges))


def oracle(dag: Dag) -> GraphOracle:
    return GraphOracle(dag)


def noise_scm() -> Scm:
    """Randomized binary stimulus with two features unrelated to it."""
    dag = stimulus_dag()
    mechanisms = {"S": DiscreteCpt.uniform(2), "X1": LinearGaussian(), "X2": LinearGaussian()}
    return Scm(dag, mechanisms, ExperimentKind.STIMULUS_BASED)


def discrete_chain_scm() -> Scm:
    """S -> X1 -> X2 with every variable binary."""
    dag = stimulus_dag(("S", "X1"), ("X1", "X2"))
    mechanisms = {
        "S": DiscreteCpt.uniform(2),
        "X1": DiscreteCpt(2, NOISY_CHANNEL),
        "X2": DiscreteCpt(2, NOISY_CHANNEL),
    }
    return Scm(dag, mechanisms, ExperimentKind.STIMULUS_BASED)


@pytest.fixture
def chain_dag() -> Dag:
    return stimulus_dag(("S", "X1"), ("X1", "X2"))


@pytest.fixture
def collider_dag() -> Dag:
    return stimulus_dag(("S", "X1"), ("X2", "X1"))


@pytest.fixture
def fork_dag() -> Dag:
    return response_dag(("X1", "X2"), ("X1", "R"))
