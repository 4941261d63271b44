"""Causal claims from relevance sets.

Which claim a relevant feature supports depends on the model direction
(encoding or decoding) and the experiment kind (stimulus or response):

    rule  model                   relevant           irrelevant
    A     stimulus encoding       genuine effect     not an effect
    B     stimulus decoding       potential effect   no claim
    C     response encoding       potential cause    not a cause
    D     response decoding       potential cause    no claim

``combine`` then enumerates every structure consistent with the full set
of CI statements and upgrades claims that hold in all of them.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

from neurocause.errors import CapacityError, FaithfulnessViolation, InputError
from neurocause.graph import (
    CausalSufficiency,
    CiProvider,
    CiStatement,
    Dag,
    Edge,
    MaxHidden,
    NoOutgoingToFeatures,
    RandomizedRoot,
    StructuralConstraint,
    Variable,
    VariableRole,
    conditioning_queries,
    is_ancestor,
)
from neurocause.relevance import RelevanceSets, RfeResult
from neurocause.scm import ExperimentKind
from neurocause.search import (
    ENUMERATION_CAP,
    conflicting_statements,
    consistent_structures,
    observed_edges,
    shared_edges,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_HIDDEN = 1


class ModelDirection(StrEnum):
    ENCODING = "encoding"
    DECODING = "decoding"


class ModelType(StrEnum):
    CAUSAL_ENCODING = "causal-encoding"
    ANTI_CAUSAL_DECODING = "anti-causal-decoding"
    ANTI_CAUSAL_ENCODING = "anti-causal-encoding"
    CAUSAL_DECODING = "causal-decoding"

    @property
    def rule(self) -> str:
        return _RULES[self]


_RULES = {
    ModelType.CAUSAL_ENCODING: "A",
    ModelType.ANTI_CAUSAL_DECODING: "B",
    ModelType.ANTI_CAUSAL_ENCODING: "C",
    ModelType.CAUSAL_DECODING: "D",
}


def model_type(kind: ExperimentKind, direction: ModelDirection) -> ModelType:
    """Encoding predicts X from the condition, decoding the condition from X."""
    if kind is ExperimentKind.STIMULUS_BASED:
        if direction is ModelDirection.ENCODING:
            return ModelType.CAUSAL_ENCODING
        return ModelType.ANTI_CAUSAL_DECODING
    if direction is ModelDirection.ENCODING:
        return ModelType.ANTI_CAUSAL_ENCODING
    return ModelType.CAUSAL_DECODING


class Claim(StrEnum):
    GENUINE_EFFECT = "genuine-effect"
    POTENTIAL_EFFECT = "potential-effect"
    NOT_EFFECT = "not-effect"
    DIRECT_CAUSE = "direct-cause"
    POTENTIAL_CAUSE = "potential-cause"
    NOT_CAUSE = "not-cause"
    NO_CLAIM = "no-claim"


EFFECT_CLAIMS = frozenset({Claim.GENUINE_EFFECT, Claim.POTENTIAL_EFFECT, Claim.NOT_EFFECT})
CAUSE_CLAIMS = frozenset({Claim.DIRECT_CAUSE, Claim.POTENTIAL_CAUSE, Claim.NOT_CAUSE})


class ClaimSource(StrEnum):
    ENCODING = "encoding"
    DECODING = "decoding"
    COMBINED = "combined"


@dataclass(frozen=True, slots=True)
class FeatureClaim:
    """One causal claim about one feature, with the rule that produced it."""

    feature: str
    claim: Claim
    rule: str
    justification: str
    source: ClaimSource
    notes: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Assumptions:
    faithfulness: bool = True
    sufficiency: bool = True
    max_hidden: int = DEFAULT_MAX_HIDDEN


@dataclass(frozen=True, slots=True)
class InterpretationReport:
    """Everything one analysis concluded.

    ``structures`` is None unless ``combine`` ran.
    """

    kind: ExperimentKind
    condition: str
    encoding_sets: RelevanceSets
    decoding_sets: RelevanceSets
    encoding_claims: tuple[FeatureClaim, ...]
    decoding_claims: tuple[FeatureClaim, ...]
    assumptions: Assumptions
    combined_claims: tuple[FeatureClaim, ...] = ()
    structures: tuple[Dag, ...] | None = None
    deduced_edges: frozenset[Edge] = frozenset()
    statements: tuple[CiStatement, ...] = ()
    rfe: RfeResult | None = None

    def __post_init__(self) -> None:
        allowed = EFFECT_CLAIMS if self.kind is ExperimentKind.STIMULUS_BASED else CAUSE_CLAIMS
        for claim in self.claims:
            if claim.claim is not Claim.NO_CLAIM and claim.claim not in allowed:
                raise InputError(
                    f"{claim.claim} for {claim.feature} does not belong in a {self.kind} analysis"
                )

    @property
    def features(self) -> tuple[str, ...]:
        return self.encoding_sets.features

    @property
    def claims(self) -> tuple[FeatureClaim, ...]:
        return self.encoding_claims + self.decoding_claims + self.combined_claims

    def final_claim(self, feature: str) -> FeatureClaim:
        """Combined claim when available, else the encoding claim."""
        for claim in self.combined_claims or self.encoding_claims:
            if claim.feature == feature:
                return claim
        raise InputError(f"No claim for feature {feature}")


# --- Single-model rules ---


def _subject(kind: ExperimentKind) -> str:
    return "S" if kind is ExperimentKind.STIMULUS_BASED else "R"


def classify_encoding(kind: ExperimentKind, sets: RelevanceSets) -> list[FeatureClaim]:
    """Claims licensed by an encoding model (rule A or C)."""
    kind = ExperimentKind(kind)
    rule = model_type(kind, ModelDirection.ENCODING).rule
    condition = sets.condition
    claims = []
    for feature in sets.features:
        relevant = feature in sets.encoding_relevant
        if kind is ExperimentKind.STIMULUS_BASED:
            if relevant:
                claim = Claim.GENUINE_EFFECT
                text = (
                    f"{feature} depends on the randomized {condition}; "
                    f"only {condition} causing {feature} explains that dependence"
                )
            else:
                claim = Claim.NOT_EFFECT
                text = f"{feature} is independent of {condition}: not an effect under faithfulness"
        elif relevant:
            claim = Claim.POTENTIAL_CAUSE
            text = (
                f"{feature} depends on {condition}; a common cause can produce "
                f"the same dependence, so {feature} is a potential cause only"
            )
        else:
            claim = Claim.NOT_CAUSE
            text = f"{feature} is independent of {condition}: not a cause under faithfulness"
        claims.append(FeatureClaim(feature, claim, rule, f"[{rule}] {text}", ClaimSource.ENCODING))
    return claims


def classify_decoding(kind: ExperimentKind, sets: RelevanceSets) -> list[FeatureClaim]:
    """Claims licensed by a decoding model (rule B or D).

    Irrelevance never yields a negative claim: a chain hides genuine
    effects and causes from the decoder.
    """
    kind = ExperimentKind(kind)
    rule = model_type(kind, ModelDirection.DECODING).rule
    condition = sets.condition
    stimulus = kind is ExperimentKind.STIMULUS_BASED
    role = "effect" if stimulus else "cause"
    claims = []
    for feature in sets.features:
        if feature in sets.decoding_relevant:
            claim = Claim.POTENTIAL_EFFECT if stimulus else Claim.POTENTIAL_CAUSE
            text = (
                f"{feature} helps decode {condition} given the other features: "
                f"potential {role}, which a collider or a hidden common cause can also produce"
            )
            notes: tuple[str, ...] = ()
        else:
            claim = Claim.NO_CLAIM
            text = f"{feature} adds nothing to decoding {condition}; this does not rule out an {role}"
            notes = (f"{feature} may still be an {role} of {condition}",)
        claims.append(
            FeatureClaim(feature, claim, rule, f"[{rule}] {text}", ClaimSource.DECODING, notes)
        )
    return claims


def interpret(
    kind: ExperimentKind, encoding_sets: RelevanceSets, decoding_sets: RelevanceSets
) -> InterpretationReport:
    """Single-model claims without structure search."""
    kind = ExperimentKind(kind)
    return InterpretationReport(
        kind=kind,
        condition=encoding_sets.condition,
        encoding_sets=encoding_sets,
        decoding_sets=decoding_sets,
        encoding_claims=tuple(classify_encoding(kind, encoding_sets)),
        decoding_claims=tuple(classify_decoding(kind, decoding_sets)),
        assumptions=Assumptions(faithfulness=False, sufficiency=False, max_hidden=0),
    )


# --- Combining both models ---


def analysis_variables(
    kind: ExperimentKind, condition: str, features: Sequence[str]
) -> tuple[Variable, ...]:
    """Condition first for stimulus experiments, last for response experiments."""
    condition_var = Variable(condition, ExperimentKind(kind).condition_role)
    feature_vars = tuple(Variable(f, VariableRole.FEATURE) for f in features)
    if kind is ExperimentKind.STIMULUS_BASED:
        return (condition_var, *feature_vars)
    return (*feature_vars, condition_var)


def analysis_constraints(
    kind: ExperimentKind, condition: str, assumptions: Assumptions
) -> tuple[StructuralConstraint, ...]:
    constraints: list[StructuralConstraint] = []
    if kind is ExperimentKind.STIMULUS_BASED:
        constraints.append(RandomizedRoot(condition))
    else:
        constraints.append(NoOutgoingToFeatures(condition))
    if assumptions.sufficiency:
        constraints.append(CausalSufficiency())
    else:
        constraints.append(MaxHidden(assumptions.max_hidden))
    return tuple(constraints)


def _combined_claim(
    kind: ExperimentKind,
    condition: str,
    base: FeatureClaim,
    structures: Sequence[Dag],
) -> FeatureClaim:
    feature = base.feature
    rule = "A+B" if kind is ExperimentKind.STIMULUS_BASED else "C+D"
    count = len(structures)
    if kind is ExperimentKind.STIMULUS_BASED:
        direct = all((condition, feature) in dag.edges for dag in structures)
        paths = [is_ancestor(dag, condition, feature) for dag in structures]
        if direct:
            claim, text = Claim.GENUINE_EFFECT, f"{condition} -> {feature} in every consistent structure"
        elif all(paths):
            claim, text = (
                Claim.GENUINE_EFFECT,
                f"{feature} is downstream of {condition} in every consistent structure",
            )
        elif not any(paths):
            claim, text = Claim.NOT_EFFECT, f"no consistent structure has a path {condition} -> {feature}"
        else:
            claim, text = base.claim, f"effect status differs across {count} consistent structures"
    else:
        direct = all((feature, condition) in dag.edges for dag in structures)
        paths = [is_ancestor(dag, feature, condition) for dag in structures]
        if direct:
            claim, text = Claim.DIRECT_CAUSE, f"{feature} -> {condition} in every consistent structure"
        elif not any(paths):
            claim, text = Claim.NOT_CAUSE, f"no consistent structure has a path {feature} -> {condition}"
        elif all(paths):
            claim, text = (
                Claim.POTENTIAL_CAUSE,
                f"{feature} is an indirect cause of {condition} in every consistent structure",
            )
        else:
            claim, text = (
                Claim.POTENTIAL_CAUSE,
                f"role ambiguous: {feature} causes {condition} in "
                f"{sum(paths)} of {count} consistent structures",
            )
    notes = () if claim is not base.claim else base.notes
    return FeatureClaim(feature, claim, rule, f"[{rule}] {text}", ClaimSource.COMBINED, notes)


def combine(
    kind: ExperimentKind,
    encoding_sets: RelevanceSets,
    decoding_sets: RelevanceSets,
    ci: CiProvider,
    assumptions: Assumptions | None = None,
) -> InterpretationReport:
    """Deduce structure from both models' evidence and upgrade claims.

    Raises FaithfulnessViolation when no candidate structure reproduces the
    provider's independences.
    """
    kind = ExperimentKind(kind)
    assumptions = assumptions or Assumptions()
    if not assumptions.faithfulness:
        raise InputError("Combining encoding and decoding evidence requires faithfulness")
    if (
        encoding_sets.condition != decoding_sets.condition
        or encoding_sets.features != decoding_sets.features
    ):
        raise InputError("Encoding and decoding sets must cover the same condition and features")
    condition = encoding_sets.condition
    features = encoding_sets.features
    if len(features) + 1 > ENUMERATION_CAP:
        raise CapacityError(
            f"{len(features)} features plus the condition exceed the enumeration cap "
            f"of {ENUMERATION_CAP}"
        )

    variables = analysis_variables(kind, condition, features)
    names = [v.name for v in variables]
    statements = tuple(ci.query(a, b, given) for a, b, given in conditioning_queries(names))
    constraints = analysis_constraints(kind, condition, assumptions)
    structures = consistent_structures(variables, statements, constraints)
    if not structures:
        raise FaithfulnessViolation(
            "No causal structure reproduces the observed independences; conflicting statements:",
            conflicting_statements(variables, statements, constraints),
        )
    deduced = observed_edges(shared_edges(structures), structures[0])

    encoding_claims = classify_encoding(kind, encoding_sets)
    combined = tuple(_combined_claim(kind, condition, c, structures) for c in encoding_claims)
    logger.info(
        "%d consistent structures, deduced edges %s", len(structures), sorted(deduced)
    )
    return InterpretationReport(
        kind=kind,
        condition=condition,
        encoding_sets=encoding_sets,
        decoding_sets=decoding_sets,
        encoding_claims=tuple(encoding_claims),
        decoding_claims=tuple(classify_decoding(kind, decoding_sets)),
        assumptions=assumptions,
        combined_claims=combined,
        structures=tuple(structures),
        deduced_edges=deduced,
        statements=statements,
    )
