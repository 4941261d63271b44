"""Encoding- and decoding-relevant feature sets.

A feature is encoding-relevant when it depends on the condition
(X ⊥̸ Y) and decoding-relevant when it still depends on the condition
given every other feature (X ⊥̸ Y | rest). Under faithfulness the latter
is the condition's Markov blanket among the features.

``rfe_decoding_set`` estimates the decoding set empirically from a
cross-validated ridge classifier instead of CI tests. The decoder and its held-out permutation
importance come from scikit-learn.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from sklearn.inspection import permutation_importance
from sklearn.linear_model import RidgeClassifier
from sklearn.model_selection import StratifiedKFold
from sklearn.pipeline import Pipeline, make_pipeline
from sklearn.preprocessing import StandardScaler

from neurocause.citest import CiDecision, DataCiProvider
from neurocause.errors import DegenerateDataError, InputError
from neurocause.graph import CiProvider
from neurocause.scm import Dataset, encode_codes, make_rng

logger = logging.getLogger(__name__)

# Ridge decoder defaults
DEFAULT_REGULARIZATION = 1.0
DEFAULT_FOLDS = 5
DEFAULT_PERMUTATIONS = 200
DEFAULT_LEVEL = 0.05

_PERMUTATION_STREAM = 1
# Pooled drops closer to zero than this count as ties
_TIE_TOLERANCE = 1e-12


class ProvenanceKind(StrEnum):
    ORACLE = "oracle"
    STATISTICAL = "statistical"
    RFE = "rfe"


@dataclass(frozen=True, slots=True)
class RfeParams:
    """Decoder and permutation-test settings for ``rfe_decoding_set``.

    ``seed`` defaults to the dataset's seed (0 when it has none).
    """

    regularization: float = DEFAULT_REGULARIZATION
    folds: int = DEFAULT_FOLDS
    permutations: int = DEFAULT_PERMUTATIONS
    level: float = DEFAULT_LEVEL
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.regularization < 0:
            raise InputError(f"regularization must be >= 0, got {self.regularization}")
        if self.folds < 2:
            raise InputError(f"Cross-validation needs at least 2 folds, got {self.folds}")
        if self.permutations < 1:
            raise InputError("At least one permutation is required")
        if not 0.0 < self.level < 1.0:
            raise InputError(f"level must lie in (0, 1), got {self.level}")


@dataclass(frozen=True, slots=True)
class Provenance:
    """Where a relevance set came from."""

    kind: ProvenanceKind
    alpha: float | None = None
    effective_alpha: float | None = None
    params: RfeParams | None = None


ORACLE_PROVENANCE = Provenance(ProvenanceKind.ORACLE)


@dataclass(frozen=True, slots=True)
class RelevanceSets:
    """Encoding and decoding partitions of one feature set."""

    condition: str
    features: tuple[str, ...]
    encoding_relevant: frozenset[str]
    decoding_relevant: frozenset[str]
    provenance: Provenance = ORACLE_PROVENANCE
    decisions: tuple[CiDecision, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "encoding_relevant", frozenset(self.encoding_relevant))
        object.__setattr__(self, "decoding_relevant", frozenset(self.decoding_relevant))
        _check_features(self.condition, self.features)
        universe = set(self.features)
        if not self.encoding_relevant <= universe or not self.decoding_relevant <= universe:
            raise InputError("Relevant sets must be subsets of the feature set")

    @property
    def encoding_irrelevant(self) -> frozenset[str]:
        return frozenset(self.features) - self.encoding_relevant

    @property
    def decoding_irrelevant(self) -> frozenset[str]:
        return frozenset(self.features) - self.decoding_relevant


def _check_features(condition: str, features: Sequence[str]) -> None:
    if condition in features:
        raise InputError(f"Condition {condition} cannot also be a feature")
    if len(set(features)) != len(features):
        raise InputError(f"Duplicate features: {list(features)}")


def encoding_relevant_set(
    ci: CiProvider, condition: str, features: Iterable[str]
) -> frozenset[str]:
    """Features that depend on the condition marginally."""
    features = tuple(dict.fromkeys(features))
    _check_features(condition, features)
    return frozenset(f for f in features if not ci.query(f, condition).independent)


def decoding_relevant_set(
    ci: CiProvider, condition: str, features: Iterable[str]
) -> frozenset[str]:
    """Features that depend on the condition given all remaining features."""
    features = tuple(dict.fromkeys(features))
    _check_features(condition, features)
    return frozenset(
        f
        for f in features
        if not ci.query(f, condition, [g for g in features if g != f]).independent
    )


def relevance_sets(
    ci: CiProvider, condition: str, features: Iterable[str] | None = None
) -> RelevanceSets:
    """Both partitions from one provider, stamped with their provenance."""
    if features is None:
        features = [v for v in ci.variables if v != condition]
    features = tuple(dict.fromkeys(features))
    encoding = encoding_relevant_set(ci, condition, features)
    decoding = decoding_relevant_set(ci, condition, features)

    decisions: tuple[CiDecision, ...] = ()
    if ci.alpha is None:
        provenance = ORACLE_PROVENANCE
    else:
        effective = ci.effective_alpha if isinstance(ci, DataCiProvider) else ci.alpha
        provenance = Provenance(ProvenanceKind.STATISTICAL, ci.alpha, effective)
        if isinstance(ci, DataCiProvider):
            decisions = tuple(ci.decide(f, condition) for f in features) + tuple(
                ci.decide(f, condition, [g for g in features if g != f]) for f in features
            )
    logger.info(
        "Relevance for %s: encoding=%s decoding=%s",
        condition,
        sorted(encoding),
        sorted(decoding),
    )
    return RelevanceSets(condition, features, encoding, decoding, provenance, decisions)


# --- Permutation-based elimination ---


@dataclass(frozen=True, slots=True)
class RfeResult:
    """Outcome of ``rfe_scores``: the surviving set and each round's p-values."""

    relevant: frozenset[str]
    rounds: tuple[dict[str, float], ...]
    baseline_accuracy: float
    params: RfeParams


def _binary_target(data: Dataset, condition: str) -> np.ndarray:
    values = data.column(condition)
    levels = np.unique(values)
    if len(levels) < 2:
        raise InputError(f"Condition {condition} has a single class")
    if len(levels) > 2:
        raise InputError(f"Condition {condition} must be binary, found {len(levels)} classes")
    return (values == levels[1]).astype(np.int64)


def _feature_matrix(data: Dataset, features: Sequence[str]) -> np.ndarray:
    columns = []
    for name in features:
        values = data.column(name)
        if data.is_categorical(name):
            values = encode_codes(values, int(values.max()) + 1)
        columns.append(values.astype(np.float64))
    return np.column_stack(columns)


def _decoder(regularization: float) -> Pipeline:
    return make_pipeline(StandardScaler(), RidgeClassifier(alpha=regularization))


def _held_out_importances(
    x: np.ndarray, y: np.ndarray, params: RfeParams, seed: int
) -> tuple[float, np.ndarray]:
    """Cross-validated accuracy and per-feature accuracy drops.

    Each fold's decoder is scored on its own held-out rows, and the column
    under test is permuted only within those rows. The drops of every fold
    are pooled per repeat, weighted by fold size, into an array of shape
    ``(features, permutations)``.
    """
    splitter = StratifiedKFold(n_splits=params.folds, shuffle=True, random_state=seed)
    accuracy = 0.0
    drops = np.zeros((x.shape[1], params.permutations))
    for fold, (train, test) in enumerate(splitter.split(x, y)):
        model = _decoder(params.regularization).fit(x[train], y[train])
        weight = len(test) / len(y)
        accuracy += weight * model.score(x[test], y[test])
        state = int(make_rng(seed, _PERMUTATION_STREAM, fold).integers(2**31 - 1))
        result = permutation_importance(
            model,
            x[test],
            y[test],
            scoring="accuracy",
            n_repeats=params.permutations,
            random_state=state,
        )
        drops += weight * result.importances
    return accuracy, drops


def rfe_scores(data: Dataset, condition: str, params: RfeParams | None = None) -> RfeResult:
    """Recursive elimination by permutation importance.

    A feature's p-value is the share of permutations whose held-out
    accuracy drop is not positive, ``(1 + ties_or_gains) / (1 + P)``. It
    survives a round iff that p-value is at most ``level``. Non-surviving
    features are removed together and the survivors are re-tested until
    the set is stable.
    """
    params = params or RfeParams()
    data.require(condition)
    features = [f for f in data.columns if f != condition]
    if len(features) < 2:
        raise InputError("RFE needs at least two features")
    floor = 1 / (1 + params.permutations)
    if floor > params.level:
        raise InputError(
            f"{params.permutations} permutations cannot reach level {params.level}; "
            f"the smallest attainable p-value is {floor:.4g}"
        )
    y = _binary_target(data, condition)
    smallest_class = int(np.bincount(y).min())
    if smallest_class < params.folds:
        raise DegenerateDataError(
            f"Smallest class has {smallest_class} samples, too few for "
            f"{params.folds}-fold validation"
        )
    seed = params.seed if params.seed is not None else (data.seed or 0)

    rounds: list[dict[str, float]] = []
    baseline = 0.0
    surviving = list(features)
    while surviving:
        x = _feature_matrix(data, surviving)
        accuracy, drops = _held_out_importances(x, y, params, seed)
        if not rounds:
            baseline = accuracy
        exceed = (drops <= _TIE_TOLERANCE).sum(axis=1)
        p_values = {
            name: float((1 + exceed[j]) / (1 + params.permutations))
            for j, name in enumerate(surviving)
        }
        rounds.append(p_values)
        kept = [f for f in surviving if p_values[f] <= params.level]
        logger.debug("RFE round %d: accuracy=%.4f p=%s", len(rounds), accuracy, p_values)
        if len(kept) == len(surviving):
            break
        surviving = kept
    return RfeResult(frozenset(surviving), tuple(rounds), baseline, params)


def rfe_decoding_set(
    data: Dataset, condition: str, params: RfeParams | None = None
) -> frozenset[str]:
    """Empirical decoding-relevant set from permutation importance."""
    return rfe_scores(data, condition, params).relevant
