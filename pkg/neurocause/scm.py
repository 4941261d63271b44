"""Structural causal models, forward sampling and dataset files."""

from __future__ import annotations

import configparser
import io
import logging
import math
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd

from neurocause.errors import InputError
from neurocause.graph import Dag, GraphOracle, Variable, VariableRole

logger = logging.getLogger(__name__)

CPT_TOLERANCE = 1e-9
EXPERIMENT_SECTION = "experiment"
_INTEGER = re.compile(r"^-?\d+$")


class ExperimentKind(StrEnum):
    """Which side of the brain state the experimental condition sits on."""

    STIMULUS_BASED = "stimulus"
    RESPONSE_BASED = "response"

    @property
    def condition_role(self) -> VariableRole:
        if self is ExperimentKind.STIMULUS_BASED:
            return VariableRole.STIMULUS
        return VariableRole.RESPONSE


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``seed`` and an optional stream id."""
    if seed < 0 or any(s < 0 for s in stream):
        raise InputError(f"Seeds must be nonnegative, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


# --- Mechanisms ---


@dataclass(frozen=True, slots=True)
class LinearGaussian:
    """``x = intercept + sum(w * parent) + N(0, noise_variance)``.

    Discrete parents enter through their centered code (a binary parent
    contributes -1 or +1).
    """

    weights: tuple[tuple[str, float], ...] = ()
    noise_variance: float = 1.0
    intercept: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.weights, Mapping):
            object.__setattr__(self, "weights", tuple(self.weights.items()))
        else:
            object.__setattr__(self, "weights", tuple(self.weights))
        if not self.noise_variance > 0 or not math.isfinite(self.noise_variance):
            raise InputError(f"noise_variance must be positive, got {self.noise_variance}")

    @property
    def parents(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.weights)


@dataclass(frozen=True, slots=True)
class DiscreteCpt:
    """Conditional probability table over ``cardinality`` categories.

    Rows are indexed by the joint configuration of the (discrete) parents,
    in Dag declaration order, first parent most significant.
    """

    cardinality: int
    table: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "table", tuple(tuple(float(p) for p in row) for row in self.table))
        if self.cardinality < 2:
            raise InputError(f"cardinality must be >= 2, got {self.cardinality}")
        if not self.table:
            raise InputError("A conditional probability table needs at least one row")
        for row in self.table:
            if len(row) != self.cardinality:
                raise InputError(f"CPT row {row} does not have {self.cardinality} entries")
            if any(p < 0 for p in row) or abs(sum(row) - 1.0) > CPT_TOLERANCE:
                raise InputError(f"CPT row {row} is not a probability distribution")

    @classmethod
    def uniform(cls, cardinality: int = 2) -> DiscreteCpt:
        return cls(cardinality, ((1.0 / cardinality,) * cardinality,))


type Mechanism = LinearGaussian | DiscreteCpt


def encode_codes(codes: np.ndarray, cardinality: int) -> np.ndarray:
    """Centered numeric encoding of category codes (binary: -1/+1)."""
    return 2.0 * codes.astype(np.float64) - (cardinality - 1)


# --- SCM ---


@dataclass(frozen=True, slots=True)
class Scm:
    """A Dag with one sampling mechanism per variable."""

    dag: Dag
    mechanisms: Mapping[str, Mechanism]
    kind: ExperimentKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "mechanisms", dict(self.mechanisms))
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        dag = self.dag
        missing = set(dag.names) - set(self.mechanisms)
        extra = set(self.mechanisms) - set(dag.names)
        if missing or extra:
            raise InputError(
                f"Mechanisms must cover the Dag exactly (missing {sorted(missing)}, "
                f"unknown {sorted(extra)})"
            )
        for name in dag.names:
            mechanism = self.mechanisms[name]
            parents = dag.parents(name)
            match mechanism:
                case LinearGaussian():
                    if mechanism.parents != parents:
                        raise InputError(
                            f"{name}: weights {sorted(mechanism.parents)} "
                            f"do not match parents {sorted(parents)}"
                        )
                case DiscreteCpt():
                    rows = 1
                    for parent in parents:
                        parent_mechanism = self.mechanisms[parent]
                        if not isinstance(parent_mechanism, DiscreteCpt):
                            raise InputError(f"{name}: discrete node with continuous parent {parent}")
                        rows *= parent_mechanism.cardinality
                    if len(mechanism.table) != rows:
                        raise InputError(f"{name}: CPT has {len(mechanism.table)} rows, expected {rows}")
        if self.kind is ExperimentKind.STIMULUS_BASED:
            stimulus = dag.stimulus
            if stimulus is None or dag.parents(stimulus):
                raise InputError("A stimulus-based experiment needs a stimulus without parents")
        elif dag.response is None:
            raise InputError("A response-based experiment needs a response variable")

    @property
    def condition(self) -> str:
        name = self.dag.stimulus if self.kind is ExperimentKind.STIMULUS_BASED else self.dag.response
        assert name is not None
        return name

    def cardinality(self, name: str) -> int | None:
        mechanism = self.mechanisms[name]
        return mechanism.cardinality if isinstance(mechanism, DiscreteCpt) else None


def oracle(scm: Scm) -> GraphOracle:
    """Exact CI provider for the SCM's observed variables."""
    return GraphOracle(scm.dag)


# --- Datasets ---


@dataclass(frozen=True, slots=True, eq=False)
class Dataset:
    """Observed samples: one condition column plus feature columns.

    Categorical columns hold integer codes; all others are float64.
    """

    frame: pd.DataFrame
    roles: Mapping[str, VariableRole]
    categorical: frozenset[str] = frozenset()
    seed: int | None = None
    _condition: str = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "roles", {k: VariableRole(v) for k, v in self.roles.items()})
        object.__setattr__(self, "categorical", frozenset(self.categorical))
        if list(self.frame.columns) != list(self.roles):
            raise InputError("Dataset roles must list the frame columns in order")
        if any(role is VariableRole.HIDDEN for role in self.roles.values()):
            raise InputError("Datasets never contain hidden columns")
        conditions = [
            name
            for name, role in self.roles.items()
            if role in (VariableRole.STIMULUS, VariableRole.RESPONSE)
        ]
        if len(conditions) != 1:
            raise InputError(f"A dataset needs exactly one condition column, found {conditions}")
        if not self.categorical <= set(self.roles):
            raise InputError("Categorical columns must be dataset columns")
        object.__setattr__(self, "_condition", conditions[0])

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(self.roles)

    @property
    def condition(self) -> str:
        return self._condition

    @property
    def kind(self) -> ExperimentKind:
        if self.roles[self._condition] is VariableRole.STIMULUS:
            return ExperimentKind.STIMULUS_BASED
        return ExperimentKind.RESPONSE_BASED

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(n for n, r in self.roles.items() if r is VariableRole.FEATURE)

    def __len__(self) -> int:
        return len(self.frame)

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self.roles:
                raise InputError(f"Unknown column: {name}")

    def column(self, name: str) -> np.ndarray:
        self.require(name)
        return self.frame[name].to_numpy()

    def is_categorical(self, name: str) -> bool:
        self.require(name)
        return name in self.categorical

    def as_continuous(self) -> Dataset:
        """Replace category codes by their centered numeric encoding."""
        frame = self.frame.copy()
        for name in self.categorical:
            codes = frame[name].to_numpy()
            frame[name] = encode_codes(codes, int(codes.max()) + 1 if len(codes) else 2)
        return Dataset(frame, self.roles, frozenset(), self.seed)

    def as_discrete(self, threshold: float = 0.0) -> Dataset:
        """Threshold every continuous column into a binary category."""
        frame = self.frame.copy()
        for name in self.columns:
            if name not in self.categorical:
                frame[name] = (frame[name].to_numpy() > threshold).astype(np.int64)
        return Dataset(frame, self.roles, frozenset(self.columns), self.seed)


def sample(scm: Scm, n: int, seed: int) -> Dataset:
    """Forward-sample ``n`` i.i.d. rows in topological order.

    Identical (scm, n, seed) triples give identical datasets.
    """
    if n < 1:
        raise InputError(f"Sample size must be >= 1, got {n}")
    rng = make_rng(seed)
    dag = scm.dag
    values: dict[str, np.ndarray] = {}
    signals: dict[str, np.ndarray] = {}
    for name in dag.topological_order():
        mechanism = scm.mechanisms[name]
        match mechanism:
            case LinearGaussian():
                column = np.full(n, float(mechanism.intercept))
                for parent, weight in mechanism.weights:
                    column += weight * signals[parent]
                column += math.sqrt(mechanism.noise_variance) * rng.standard_normal(n)
                values[name] = column
                signals[name] = column
            case DiscreteCpt():
                row = np.zeros(n, dtype=np.int64)
                for parent in dag.names:
                    if parent in dag.parents(name):
                        cardinality = scm.cardinality(parent)
                        assert cardinality is not None
                        row = row * cardinality + values[parent]
                cumulative = np.cumsum(np.asarray(mechanism.table), axis=1)
                draws = rng.random(n)
                codes = (draws[:, None] >= cumulative[row]).sum(axis=1)
                codes = np.minimum(codes, mechanism.cardinality - 1).astype(np.int64)
                values[name] = codes
                signals[name] = encode_codes(codes, mechanism.cardinality)

    observed = dag.observed
    frame = pd.DataFrame({name: values[name] for name in observed})
    roles = {name: dag.role(name) for name in observed}
    categorical = frozenset(n for n in observed if isinstance(scm.mechanisms[n], DiscreteCpt))
    logger.debug("Sampled %d rows of %s with seed %d", n, ",".join(observed), seed)
    return Dataset(frame, roles, categorical, seed)


# --- Dataset CSV ---


def dataset_to_csv(data: Dataset) -> str:
    """CSV text with a ``name:role`` header; floats written with repr()."""
    text = pd.DataFrame(
        {
            name: data.frame[name].map(str)
            if name in data.categorical
            else data.frame[name].map(lambda v: repr(float(v)))
            for name in data.columns
        }
    )
    buffer = io.StringIO()
    text.to_csv(
        buffer,
        index=False,
        header=[f"{name}:{data.roles[name].value}" for name in data.columns],
        lineterminator="\n",
    )
    return buffer.getvalue()


def write_dataset_csv(data: Dataset, path: Path) -> None:
    path.write_text(dataset_to_csv(data), encoding="utf-8")


def dataset_from_csv(source: str | Path | io.StringIO, seed: int | None = None) -> Dataset:
    """Parse dataset CSV text or a file; integer-only columns become categorical."""
    if isinstance(source, str):
        source = io.StringIO(source)
    try:
        raw = pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise InputError(f"Malformed dataset CSV: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise InputError("Dataset CSV is empty") from exc
    roles: dict[str, VariableRole] = {}
    columns: dict[str, pd.Series] = {}
    categorical: set[str] = set()
    for header in raw.columns:
        name, sep, role_text = str(header).rpartition(":")
        if not sep:
            raise InputError(f"Column header {header!r} lacks a ':role' suffix")
        role = Variable(name, role_text).role  # type: ignore[arg-type]
        series = raw[header]
        if len(series) and series.map(lambda s: bool(_INTEGER.match(s))).all():
            columns[name] = series.astype(np.int64)
            categorical.add(name)
        else:
            try:
                columns[name] = series.astype(np.float64)
            except ValueError as exc:
                raise InputError(f"Column {name} holds non-numeric values") from exc
        roles[name] = role
    return Dataset(pd.DataFrame(columns), roles, frozenset(categorical), seed)


def read_dataset_csv(path: Path, seed: int | None = None) -> Dataset:
    with path.open(encoding="utf-8") as handle:
        return dataset_from_csv(io.StringIO(handle.read()), seed)


# --- SCM spec files ---


def _format_float(value: float) -> str:
    return repr(float(value))


def scm_to_text(scm: Scm) -> str:
    """INI-style text: an [experiment] section, then one section per variable."""
    lines = [
        f"[{EXPERIMENT_SECTION}]",
        f"kind = {scm.kind.value}",
        f"randomized = {'true' if scm.dag.randomized else 'false'}",
    ]
    for var in scm.dag.variables:
        parents = [p for p in scm.dag.names if p in scm.dag.parents(var.name)]
        mechanism = scm.mechanisms[var.name]
        lines += ["", f"[{var.name}]", f"role = {var.role.value}", f"parents = {' '.join(parents)}".rstrip()]
        match mechanism:
            case LinearGaussian():
                weights = " ".join(f"{p}={_format_float(w)}" for p, w in mechanism.weights)
                lines += [
                    "mechanism = linear-gaussian",
                    f"weights = {weights}".rstrip(),
                    f"noise_variance = {_format_float(mechanism.noise_variance)}",
                    f"intercept = {_format_float(mechanism.intercept)}",
                ]
            case DiscreteCpt():
                rows = "; ".join(" ".join(_format_float(p) for p in row) for row in mechanism.table)
                lines += [
                    "mechanism = discrete",
                    f"cardinality = {mechanism.cardinality}",
                    f"table = {rows}",
                ]
    return "\n".join(lines) + "\n"


def _parse_mechanism(name: str, section: configparser.SectionProxy) -> Mechanism:
    kind = section.get("mechanism", "")
    try:
        if kind == "linear-gaussian":
            weights = []
            for token in section.get("weights", "").split():
                parent, sep, value = token.partition("=")
                if not sep:
                    raise InputError(f"{name}: malformed weight {token!r}")
                weights.append((parent, float(value)))
            return LinearGaussian(
                tuple(weights),
                noise_variance=float(section.get("noise_variance", "1.0")),
                intercept=float(section.get("intercept", "0.0")),
            )
        if kind == "discrete":
            table = tuple(
                tuple(float(p) for p in row.split())
                for row in section.get("table", "").split(";")
            )
            return DiscreteCpt(int(section.get("cardinality", "2")), table)
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{name}: {exc}") from exc
    raise InputError(f"{name}: unknown mechanism {kind!r}")


def scm_from_text(text: str) -> Scm:
    """Parse the format written by ``scm_to_text``."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InputError(f"Malformed SCM spec: {exc}") from exc
    if not parser.has_section(EXPERIMENT_SECTION):
        raise InputError(f"SCM spec lacks an [{EXPERIMENT_SECTION}] section")
    experiment = parser[EXPERIMENT_SECTION]
    try:
        kind = ExperimentKind(experiment.get("kind", ""))
    except ValueError:
        raise InputError(f"Unknown experiment kind {experiment.get('kind')!r}") from None
    randomized = experiment.get("randomized", "false").strip().lower() == "true"

    variables: list[Variable] = []
    edges: set[tuple[str, str]] = set()
    mechanisms: dict[str, Mechanism] = {}
    for name in parser.sections():
        if name == EXPERIMENT_SECTION:
            continue
        section = parser[name]
        variables.append(Variable(name, section.get("role", "")))  # type: ignore[arg-type]
        edges.update((parent, name) for parent in section.get("parents", "").split())
        mechanisms[name] = _parse_mechanism(name, section)
    dag = Dag(tuple(variables), frozenset(edges), randomized=randomized)
    return Scm(dag, mechanisms, kind)


def read_scm(path: Path) -> Scm:
    return scm_from_text(path.read_text(encoding="utf-8"))


def write_scm(scm: Scm, path: Path) -> None:
    path.write_text(scm_to_text(scm), encoding="utf-8")
