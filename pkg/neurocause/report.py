"""JSON and text serialization of interpretation reports."""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

from pydantic import BaseModel, ConfigDict

from neurocause.graph import Dag, format_edges
from neurocause.interpret import FeatureClaim, InterpretationReport
from neurocause.relevance import RelevanceSets, RfeResult

SCHEMA_VERSION = "1"
SCHEMA_RESOURCE = "report.schema.json"


class _Model(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AssumptionsModel(_Model):
    faithfulness: bool
    sufficiency: bool
    max_hidden: int


class FeatureRelevance(_Model):
    encoding: bool
    decoding: bool


class DecisionModel(_Model):
    statement: str
    statistic: float
    p_value: float
    alpha: float
    method: str


class ProvenanceModel(_Model):
    kind: str
    alpha: float | None
    effective_alpha: float | None


class RelevanceModel(_Model):
    condition: str
    features: dict[str, FeatureRelevance]
    provenance: ProvenanceModel
    decisions: list[DecisionModel]


class ClaimModel(_Model):
    feature: str
    claim: str
    rule: str
    model: str
    justification: str
    notes: list[str]


class VariableModel(_Model):
    name: str
    role: str


class StructureModel(_Model):
    variables: list[VariableModel]
    edges: list[str]


class RfeModel(_Model):
    relevant: list[str]
    baseline_accuracy: float
    rounds: list[dict[str, float]]
    regularization: float
    folds: int
    permutations: int
    level: float
    divergent: list[str]


class ReportModel(_Model):
    schema_version: str
    experiment_kind: str
    condition: str
    assumptions: AssumptionsModel
    relevance: RelevanceModel
    claims: list[ClaimModel]
    structures: list[StructureModel] | None
    deduced_edges: list[str]
    statements: list[str]
    rfe: RfeModel | None


def _relevance_model(sets: RelevanceSets, decoding: RelevanceSets) -> RelevanceModel:
    return RelevanceModel(
        condition=sets.condition,
        features={
            f: FeatureRelevance(
                encoding=f in sets.encoding_relevant, decoding=f in decoding.decoding_relevant
            )
            for f in sets.features
        },
        provenance=ProvenanceModel(
            kind=sets.provenance.kind.value,
            alpha=sets.provenance.alpha,
            effective_alpha=sets.provenance.effective_alpha,
        ),
        decisions=[
            DecisionModel(
                statement=str(d.statement),
                statistic=d.statistic,
                p_value=d.p_value,
                alpha=d.alpha,
                method=d.method.value,
            )
            for d in sets.decisions
        ],
    )


def _claim_model(claim: FeatureClaim) -> ClaimModel:
    return ClaimModel(
        feature=claim.feature,
        claim=claim.claim.value,
        rule=claim.rule,
        model=claim.source.value,
        justification=claim.justification,
        notes=list(claim.notes),
    )


def _structure_model(dag: Dag) -> StructureModel:
    return StructureModel(
        variables=[VariableModel(name=v.name, role=v.role.value) for v in dag.variables],
        edges=format_edges(dag.sorted_edges(), dag.names),
    )


def _rfe_model(result: RfeResult, decoding: RelevanceSets) -> RfeModel:
    return RfeModel(
        relevant=[f for f in decoding.features if f in result.relevant],
        baseline_accuracy=result.baseline_accuracy,
        rounds=[dict(r) for r in result.rounds],
        regularization=result.params.regularization,
        folds=result.params.folds,
        permutations=result.params.permutations,
        level=result.params.level,
        divergent=[
            f
            for f in decoding.features
            if (f in result.relevant) != (f in decoding.decoding_relevant)
        ],
    )


def report_model(report: InterpretationReport) -> ReportModel:
    order = [report.condition, *report.features]
    return ReportModel(
        schema_version=SCHEMA_VERSION,
        experiment_kind=report.kind.value,
        condition=report.condition,
        assumptions=AssumptionsModel(
            faithfulness=report.assumptions.faithfulness,
            sufficiency=report.assumptions.sufficiency,
            max_hidden=report.assumptions.max_hidden,
        ),
        relevance=_relevance_model(report.encoding_sets, report.decoding_sets),
        claims=[_claim_model(c) for c in report.claims],
        structures=None
        if report.structures is None
        else [_structure_model(d) for d in report.structures],
        deduced_edges=format_edges(report.deduced_edges, order),
        statements=[str(s) for s in report.statements],
        rfe=None if report.rfe is None else _rfe_model(report.rfe, report.decoding_sets),
    )


def report_to_json(report: InterpretationReport) -> str:
    return report_model(report).model_dump_json(indent=2) + "\n"


def report_to_text(report: InterpretationReport) -> str:
    """Human-readable rendering; every JSON claim appears as one line."""
    model = report_model(report)
    a = model.assumptions
    lines = [
        f"Experiment: {model.experiment_kind}-based, condition {model.condition}",
        f"Assumptions: faithfulness={a.faithfulness} sufficiency={a.sufficiency} "
        f"max_hidden={a.max_hidden}",
        f"Provenance: {model.relevance.provenance.kind}"
        + (
            f" (alpha={model.relevance.provenance.alpha:g})"
            if model.relevance.provenance.alpha is not None
            else ""
        ),
        "",
        "Relevance:",
    ]
    for feature, rel in model.relevance.features.items():
        lines.append(f"  {feature}: encoding={rel.encoding} decoding={rel.decoding}")
    for decision in model.relevance.decisions:
        lines.append(
            f"    {decision.statement}  [{decision.method} "
            f"stat={decision.statistic:.4g} p={decision.p_value:.4g}]"
        )
    lines += ["", "Claims:"]
    for claim in model.claims:
        lines.append(f"  {claim.model:<9} {claim.feature}: {claim.claim}  {claim.justification}")
        lines.extend(f"            note: {note}" for note in claim.notes)
    if model.structures is not None:
        lines += ["", f"Consistent structures ({len(model.structures)}):"]
        for i, structure in enumerate(model.structures, start=1):
            lines.append(f"  #{i}: " + (", ".join(structure.edges) or "(no edges)"))
        lines.append("Deduced edges: " + (", ".join(model.deduced_edges) or "(none)"))
    if model.statements:
        lines += ["", f"Independence statements ({len(model.statements)}):"]
        lines.extend(f"  {statement}" for statement in model.statements)
    if model.rfe is not None:
        lines += [
            "",
            f"RFE decoding set: {{{', '.join(model.rfe.relevant)}}} "
            f"(baseline accuracy {model.rfe.baseline_accuracy:.4f})",
        ]
        for number, p_values in enumerate(model.rfe.rounds, start=1):
            cells = ", ".join(f"{name}={p:.4g}" for name, p in p_values.items())
            lines.append(f"  round {number}: {cells}")
        if model.rfe.divergent:
            lines.append("  diverges from the CI decoding set on: " + ", ".join(model.rfe.divergent))
    return "\n".join(lines) + "\n"


def load_schema() -> dict[str, Any]:
    """The published JSON schema for reports."""
    text = resources.files("neurocause").joinpath("schemas", SCHEMA_RESOURCE).read_text("utf-8")
    return json.loads(text)
