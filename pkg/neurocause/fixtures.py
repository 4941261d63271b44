"""Canonical scenarios: small SCMs whose independence patterns illustrate
when encoding and decoding models do, and do not, reveal causal roles."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from types import MappingProxyType

from neurocause.errors import InputError
from neurocause.graph import Dag, Edge, Variable, VariableRole
from neurocause.scm import DiscreteCpt, ExperimentKind, LinearGaussian, Mechanism, Scm

DEFAULT_WEIGHT = 1.0
DEFAULT_NOISE_VARIANCE = 1.0

class ScenarioTopic(StrEnum):
    """Which lesson a scenario teaches."""

    SINGLE_MODEL_PITFALLS = "single-model pitfalls"
    HIDDEN_CONFOUNDING = "hidden confounding"
    COMBINED_DEDUCTION = "combined deduction"


_STIMULUS_VARIABLES = (
    Variable("S", VariableRole.STIMULUS),
    Variable("X1", VariableRole.FEATURE),
    Variable("X2", VariableRole.FEATURE),
)
_RESPONSE_VARIABLES = (
    Variable("X1", VariableRole.FEATURE),
    Variable("X2", VariableRole.FEATURE),
    Variable("R", VariableRole.RESPONSE),
)


@dataclass(frozen=True, slots=True)
class Scenario:
    """A canonical fixture together with the results it must reproduce.

    ``claims`` are the combined (encoding + decoding + structure) claims,
    keyed by feature; ``notes`` are the per-feature remarks shown by the demo.
    """

    name: str
    title: str
    kind: ExperimentKind
    variables: tuple[Variable, ...]
    edges: tuple[Edge, ...]
    encoding: frozenset[str]
    decoding: frozenset[str]
    claims: Mapping[str, str]
    topic: ScenarioTopic
    sufficiency: bool = True
    structures: int | None = None
    deduced_edges: frozenset[Edge] = frozenset()
    notes: Mapping[str, str] = field(default_factory=dict)

    @property
    def condition(self) -> str:
        role = self.kind.condition_role
        return next(v.name for v in self.variables if v.role is role)

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role is VariableRole.FEATURE)


SCENARIOS: Mapping[str, Scenario] = MappingProxyType(
    {
        scenario.name: scenario
        for scenario in (
            Scenario(
                name="stim-chain",
                title="stimulus chain: decoding misses a genuine effect",
                kind=ExperimentKind.STIMULUS_BASED,
                variables=_STIMULUS_VARIABLES,
                edges=(("S", "X1"), ("X1", "X2")),
                encoding=frozenset({"X1", "X2"}),
                decoding=frozenset({"X1"}),
                claims={"X1": "genuine-effect", "X2": "genuine-effect"},
                topic=ScenarioTopic.SINGLE_MODEL_PITFALLS,
                structures=1,
                deduced_edges=frozenset({("S", "X1"), ("X1", "X2")}),
                notes={"X2": "genuine effect missed by decoding"},
            ),
            Scenario(
                name="stim-collider",
                title="stimulus collider: decoding flags a non-effect",
                kind=ExperimentKind.STIMULUS_BASED,
                variables=_STIMULUS_VARIABLES,
                edges=(("S", "X1"), ("X2", "X1")),
                encoding=frozenset({"X1"}),
                decoding=frozenset({"X1", "X2"}),
                claims={"X1": "genuine-effect", "X2": "not-effect"},
                topic=ScenarioTopic.SINGLE_MODEL_PITFALLS,
                structures=1,
                deduced_edges=frozenset({("S", "X1"), ("X2", "X1")}),
                notes={"X2": "X2 not a genuine effect"},
            ),
            Scenario(
                name="resp-fork",
                title="response fork: encoding flags a non-cause",
                kind=ExperimentKind.RESPONSE_BASED,
                variables=_RESPONSE_VARIABLES,
                edges=(("X1", "X2"), ("X1", "R")),
                encoding=frozenset({"X1", "X2"}),
                decoding=frozenset({"X1"}),
                claims={"X1": "direct-cause", "X2": "potential-cause"},
                topic=ScenarioTopic.SINGLE_MODEL_PITFALLS,
                structures=2,
                deduced_edges=frozenset({("X1", "R")}),
                notes={"X2": "potential but not genuine cause"},
            ),
            Scenario(
                name="resp-chain",
                title="response chain: decoding misses a genuine cause",
                kind=ExperimentKind.RESPONSE_BASED,
                variables=_RESPONSE_VARIABLES,
                edges=(("X2", "X1"), ("X1", "R")),
                encoding=frozenset({"X1", "X2"}),
                decoding=frozenset({"X1"}),
                claims={"X1": "direct-cause", "X2": "potential-cause"},
                topic=ScenarioTopic.SINGLE_MODEL_PITFALLS,
                structures=2,
                deduced_edges=frozenset({("X1", "R")}),
                notes={"X2": "genuine cause missed"},
            ),
            Scenario(
                name="resp-hidden-fig1",
                title="hidden common cause: decoding flags two non-causes",
                kind=ExperimentKind.RESPONSE_BASED,
                variables=(Variable("H", VariableRole.HIDDEN), *_RESPONSE_VARIABLES),
                edges=(("H", "X1"), ("H", "X2"), ("H", "R")),
                encoding=frozenset({"X1", "X2"}),
                decoding=frozenset({"X1", "X2"}),
                claims={"X1": "potential-cause", "X2": "potential-cause"},
                topic=ScenarioTopic.HIDDEN_CONFOUNDING,
                sufficiency=False,
                notes={"X1": "not a cause (hidden confounder)", "X2": "not a cause (hidden confounder)"},
            ),
            Scenario(
                name="stim-sec41",
                title="stimulus deduction: encoding + decoding orient X2 -> X1",
                kind=ExperimentKind.STIMULUS_BASED,
                variables=_STIMULUS_VARIABLES,
                edges=(("S", "X1"), ("X2", "X1")),
                encoding=frozenset({"X1"}),
                decoding=frozenset({"X1", "X2"}),
                claims={"X1": "genuine-effect", "X2": "not-effect"},
                topic=ScenarioTopic.COMBINED_DEDUCTION,
                structures=1,
                deduced_edges=frozenset({("S", "X1"), ("X2", "X1")}),
                notes={"X2": "cause of X1"},
            ),
            Scenario(
                name="resp-sec42",
                title="response deduction: X1 direct cause, X2 ambiguous",
                kind=ExperimentKind.RESPONSE_BASED,
                variables=_RESPONSE_VARIABLES,
                edges=(("X1", "X2"), ("X1", "R")),
                encoding=frozenset({"X1", "X2"}),
                decoding=frozenset({"X1"}),
                claims={"X1": "direct-cause", "X2": "potential-cause"},
                topic=ScenarioTopic.COMBINED_DEDUCTION,
                structures=2,
                deduced_edges=frozenset({("X1", "R")}),
                notes={"X2": "role ambiguous"},
            ),
        )
    }
)

FIXTURE_NAMES = tuple(SCENARIOS)


def scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise InputError(
            f"Unknown fixture {name!r}; choose one of {', '.join(FIXTURE_NAMES)}"
        ) from None


def default_mechanisms(dag: Dag) -> dict[str, Mechanism]:
    """Binary uniform stimulus, unit-weight unit-noise linear-Gaussian elsewhere."""
    mechanisms: dict[str, Mechanism] = {}
    for var in dag.variables:
        if var.role is VariableRole.STIMULUS and not dag.parents(var.name):
            mechanisms[var.name] = DiscreteCpt.uniform(2)
        else:
            parents = [p for p in dag.names if p in dag.parents(var.name)]
            mechanisms[var.name] = LinearGaussian(
                tuple((p, DEFAULT_WEIGHT) for p in parents),
                noise_variance=DEFAULT_NOISE_VARIANCE,
            )
    return mechanisms


def canonical_fixture(name: str) -> Scm:
    """Build the named scenario's SCM with default mechanisms."""
    spec = scenario(name)
    dag = Dag(
        spec.variables,
        frozenset(spec.edges),
        randomized=spec.kind is ExperimentKind.STIMULUS_BASED,
    )
    return Scm(dag, default_mechanisms(dag), spec.kind)
