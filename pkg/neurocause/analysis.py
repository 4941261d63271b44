"""End-to-end analysis runs shared by the ``analyze`` and ``demo`` commands."""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Callable
from dataclasses import dataclass

from neurocause.citest import ci_provider
from neurocause.config import AnalysisConfig, AnalysisMode
from neurocause.errors import InputError
from neurocause.fixtures import FIXTURE_NAMES, Scenario, canonical_fixture, scenario
from neurocause.graph import CiProvider, GraphOracle, conditioning_queries, format_edges
from neurocause.interpret import Assumptions, InterpretationReport, combine, interpret
from neurocause.relevance import RfeParams, relevance_sets, rfe_scores
from neurocause.scm import Dataset, ExperimentKind, Scm, read_dataset_csv, read_scm
from neurocause.search import ENUMERATION_CAP

logger = logging.getLogger(__name__)

type Notify = Callable[[str], None]


def _ignore(_: str) -> None:
    pass


def _load_scm(config: AnalysisConfig, notify: Notify) -> Scm:
    if config.fixture is not None:
        return canonical_fixture(config.fixture)
    assert config.scm is not None
    notify(f"Oracle mode: mechanisms in {config.scm} are ignored, only the graph is used")
    return read_scm(config.scm)


def _load_dataset(config: AnalysisConfig) -> Dataset:
    assert config.data is not None
    data = read_dataset_csv(config.data, seed=config.seed)
    if config.pipeline == "discrete":
        return data.as_discrete()
    return data.as_continuous()


def _query_count(names: list[str], combining: bool) -> int:
    if combining:
        return sum(1 for _ in conditioning_queries(names))
    return 2 * (len(names) - 1)


def run_analysis(config: AnalysisConfig, notify: Notify = _ignore) -> InterpretationReport:
    """Relevance sets, single-model claims and, within the cap, combination."""
    data: Dataset | None = None
    ci: CiProvider
    if config.mode is AnalysisMode.ORACLE:
        scm = _load_scm(config, notify)
        kind, condition = scm.kind, scm.condition
        features = [v.name for v in scm.dag.variables if v.observed and v.name != condition]
        ci = GraphOracle(scm.dag)
    else:
        data = _load_dataset(config)
        kind, condition, features = data.kind, data.condition, list(data.features)

    if config.kind is not None and ExperimentKind(config.kind) is not kind:
        raise InputError(f"Configured kind {config.kind} contradicts the input's {kind} experiment")
    if config.condition is not None and config.condition != condition:
        raise InputError(f"Configured condition {config.condition} is not the input's {condition}")

    combining = config.combine
    if combining and len(features) + 1 > ENUMERATION_CAP:
        notify(
            f"{len(features) + 1} variables exceed the enumeration cap of {ENUMERATION_CAP}; "
            "reporting single-model claims only"
        )
        combining = False

    if data is not None:
        queries = _query_count([condition, *features], combining) if config.bonferroni else 1
        ci = ci_provider(data, config.alpha, bonferroni_queries=queries)

    sets = relevance_sets(ci, condition, features)
    if combining:
        assumptions = Assumptions(sufficiency=config.sufficiency, max_hidden=config.max_hidden)
        report = combine(kind, sets, sets, ci, assumptions)
    else:
        report = interpret(kind, sets, sets)

    if config.rfe:
        assert data is not None
        result = rfe_scores(data, condition, RfeParams(seed=config.seed))
        divergent = sorted(result.relevant ^ sets.decoding_relevant)
        if divergent:
            notify("RFE and CI decoding sets differ on: " + ", ".join(divergent))
        report = dataclasses.replace(report, rfe=result)
    return report


# --- Demo ---


@dataclass(frozen=True, slots=True)
class DemoRow:
    """One fixture's oracle-mode outcome next to what it must reproduce."""

    scenario: Scenario
    report: InterpretationReport
    deviations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.deviations


def _fmt_set(names: frozenset[str], order: tuple[str, ...]) -> str:
    return "{" + ",".join(n for n in order if n in names) + "}"


def _check(spec: Scenario, report: InterpretationReport) -> tuple[str, ...]:
    deviations = []
    features = spec.features
    sets = report.encoding_sets
    if sets.encoding_relevant != spec.encoding:
        deviations.append(
            f"encoding set {_fmt_set(sets.encoding_relevant, features)}, "
            f"expected {_fmt_set(spec.encoding, features)}"
        )
    if report.decoding_sets.decoding_relevant != spec.decoding:
        deviations.append(
            f"decoding set {_fmt_set(report.decoding_sets.decoding_relevant, features)}, "
            f"expected {_fmt_set(spec.decoding, features)}"
        )
    for feature, expected in spec.claims.items():
        actual = report.final_claim(feature).claim.value
        if actual != expected:
            deviations.append(f"{feature}: {actual}, expected {expected}")
    structures = report.structures or ()
    if spec.structures is not None and len(structures) != spec.structures:
        deviations.append(f"{len(structures)} structures, expected {spec.structures}")
    if not spec.deduced_edges <= report.deduced_edges:
        missing = format_edges(spec.deduced_edges - report.deduced_edges)
        deviations.append("missing deduced edges " + ", ".join(missing))
    return tuple(deviations)


def run_scenario(name: str) -> DemoRow:
    spec = scenario(name)
    scm = canonical_fixture(name)
    ci = GraphOracle(scm.dag)
    sets = relevance_sets(ci, spec.condition, spec.features)
    report = combine(spec.kind, sets, sets, ci, Assumptions(sufficiency=spec.sufficiency))
    row = DemoRow(spec, report, _check(spec, report))
    if not row.ok:
        logger.warning("%s deviates: %s", name, "; ".join(row.deviations))
    return row


def run_demo() -> list[DemoRow]:
    """Every canonical fixture, end to end, against the oracle."""
    return [run_scenario(name) for name in FIXTURE_NAMES]


def format_demo_row(row: DemoRow) -> list[str]:
    spec = row.scenario
    features = spec.features
    sets = row.report.encoding_sets
    lines = [
        f"{spec.name:<17} [{spec.topic}] {spec.title}",
        f"  enc={_fmt_set(sets.encoding_relevant, features)} "
        f"dec={_fmt_set(row.report.decoding_sets.decoding_relevant, features)} "
        f"structures={len(row.report.structures or ())}",
    ]
    for feature in features:
        claim = row.report.final_claim(feature).claim.value
        note = spec.notes.get(feature)
        lines.append(f"  {feature}: {claim}" + (f"  ({note})" if note else ""))
    if row.report.deduced_edges:
        order = [v.name for v in spec.variables]
        lines.append("  deduced: " + ", ".join(format_edges(row.report.deduced_edges, order)))
    lines.extend(f"  DEVIATION: {d}" for d in row.deviations)
    lines.append("  " + ("ok" if row.ok else "FAILED"))
    return lines
