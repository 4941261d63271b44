"""Statistical conditional independence tests on datasets.

``DataCiProvider`` exposes the same query interface as the graph oracle,
so relevance and interpretation code runs unchanged on either.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from scipy.special import xlogy
from scipy.stats import chi2, norm

from neurocause.errors import DegenerateDataError, InputError
from neurocause.graph import CiStatement, Verdict
from neurocause.scm import Dataset

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.01
MIN_EXPECTED_COUNT = 5.0
CORRELATION_CLIP = 1.0 - 1e-12
CONDITION_NUMBER_LIMIT = 1e12


class CiMethod(StrEnum):
    FISHER_Z = "fisher-z"
    G_TEST = "g-test"


@dataclass(frozen=True, slots=True)
class CiDecision:
    """A CI statement together with the test evidence behind it."""

    statement: CiStatement
    statistic: float
    p_value: float
    alpha: float
    method: CiMethod

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise InputError(f"p-value out of range: {self.p_value}")
        if not math.isfinite(self.statistic):
            raise InputError(f"Non-finite test statistic: {self.statistic}")
        if self.statement.independent != (self.p_value > self.alpha):
            raise InputError("Verdict disagrees with p-value and alpha")

    @classmethod
    def from_test(
        cls,
        a: str,
        b: str,
        given: frozenset[str],
        statistic: float,
        p_value: float,
        alpha: float,
        method: CiMethod,
    ) -> CiDecision:
        p_value = min(max(float(p_value), 0.0), 1.0)
        verdict = Verdict.INDEPENDENT if p_value > alpha else Verdict.DEPENDENT
        return cls(CiStatement(a, b, given, verdict), float(statistic), p_value, alpha, method)


def _canonical(data: Dataset, a: str, b: str, given: Iterable[str]) -> tuple[str, str, list[str]]:
    """Order the pair and the conditioning set by column position."""
    conditioned = set(given)
    data.require(a, b, *conditioned)
    # Validates a != b and endpoints outside the conditioning set.
    CiStatement(a, b, frozenset(conditioned))
    position = {name: i for i, name in enumerate(data.columns)}
    first, second = sorted((a, b), key=position.__getitem__)
    return first, second, sorted(conditioned, key=position.__getitem__)


def partial_correlation(
    data: Dataset, a: str, b: str, given: Iterable[str] = ()
) -> tuple[float, float]:
    """Fisher-z test of zero partial correlation.

    Returns (statistic, p-value) with statistic ``sqrt(n - |Z| - 3) * |atanh(r)|``.
    """
    a, b, conditioned = _canonical(data, a, b, given)
    for name in (a, b, *conditioned):
        if data.is_categorical(name):
            raise InputError(f"partial correlation needs numeric columns; {name} is categorical")
    n, k = len(data), len(conditioned)
    if n <= k + 3:
        raise InputError(f"Need more than {k + 3} samples for {k} conditioning variables, got {n}")

    matrix = np.column_stack([data.column(c).astype(np.float64) for c in (a, b, *conditioned)])
    if np.any(matrix.std(axis=0) == 0):
        raise DegenerateDataError(f"Constant column among {a}, {b}, {conditioned}")
    if k:
        covariance = np.atleast_2d(np.cov(matrix[:, 2:], rowvar=False))
        if np.linalg.cond(covariance) > CONDITION_NUMBER_LIMIT:
            raise DegenerateDataError(f"Singular conditioning covariance for {conditioned}")

    correlation = np.corrcoef(matrix, rowvar=False)
    if np.linalg.cond(correlation) > CONDITION_NUMBER_LIMIT:
        raise DegenerateDataError(
            f"Deterministic relation among {a}, {b} and {conditioned}"
        )
    precision = np.linalg.inv(correlation)
    r = -precision[0, 1] / math.sqrt(precision[0, 0] * precision[1, 1])
    r = min(max(r, -CORRELATION_CLIP), CORRELATION_CLIP)
    statistic = math.sqrt(n - k - 3) * abs(math.atanh(r))
    p_value = 2.0 * norm.sf(statistic)
    return statistic, float(p_value)


def _contingency(x: np.ndarray, y: np.ndarray, rows: int, cols: int) -> np.ndarray:
    table = np.zeros((rows, cols), dtype=np.float64)
    np.add.at(table, (x, y), 1.0)
    return table


def _min_expected(table: np.ndarray) -> float:
    total = table.sum()
    if total == 0:
        return 0.0
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / total
    return float(expected.min())


def _pool_strata(tables: list[np.ndarray]) -> list[np.ndarray]:
    """Merge sparse strata into their neighbour until none is sparse."""
    tables = list(tables)
    while len(tables) > 1:
        sparse = next(
            (i for i, t in enumerate(tables) if _min_expected(t) < MIN_EXPECTED_COUNT), None
        )
        if sparse is None:
            break
        target = sparse + 1 if sparse + 1 < len(tables) else sparse - 1
        tables[target] = tables[target] + tables[sparse]
        del tables[sparse]
        logger.debug("Pooled sparse stratum %d, %d strata left", sparse, len(tables))
    return tables


def conditional_g_test(
    data: Dataset, a: str, b: str, given: Iterable[str] = ()
) -> tuple[float, float]:
    """Log-likelihood ratio (G) test of a ⊥ b within each conditioning stratum.

    Strata whose smallest expected cell count falls below
    ``MIN_EXPECTED_COUNT`` are pooled with the adjacent stratum; if a single
    stratum remains the test is unconditional.
    """
    a, b, conditioned = _canonical(data, a, b, given)
    for name in (a, b, *conditioned):
        if not data.is_categorical(name):
            raise InputError(f"G-test needs categorical columns; {name} is numeric")

    x_levels, x = np.unique(data.column(a), return_inverse=True)
    y_levels, y = np.unique(data.column(b), return_inverse=True)
    if conditioned:
        keys = np.column_stack([data.column(c) for c in conditioned])
        _, strata = np.unique(keys, axis=0, return_inverse=True)
        strata = strata.reshape(-1)
        tables = [
            _contingency(x[strata == s], y[strata == s], len(x_levels), len(y_levels))
            for s in range(int(strata.max()) + 1)
        ]
    else:
        tables = [_contingency(x, y, len(x_levels), len(y_levels))]
    tables = _pool_strata(tables)

    statistic = 0.0
    dof = 0
    for table in tables:
        table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
        if table.size == 0:
            continue
        expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
        statistic += 2.0 * float(xlogy(table, table / expected).sum())
        dof += (table.shape[0] - 1) * (table.shape[1] - 1)
    if dof == 0:
        return 0.0, 1.0
    statistic = max(statistic, 0.0)
    return statistic, float(chi2.sf(statistic, dof))


class DataCiProvider:
    """CI provider backed by a dataset; memoizes every decision."""

    def __init__(
        self, data: Dataset, alpha: float = DEFAULT_ALPHA, *, bonferroni_queries: int = 1
    ) -> None:
        if not 0.0 < alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {alpha}")
        if bonferroni_queries < 1:
            raise InputError("bonferroni_queries must be >= 1")
        self._data = data
        self._alpha = alpha
        self._queries = bonferroni_queries
        self._memo: dict[tuple[frozenset[str], frozenset[str]], CiDecision] = {}
        self._lock = threading.Lock()

    @property
    def data(self) -> Dataset:
        return self._data

    @property
    def variables(self) -> tuple[str, ...]:
        return self._data.columns

    @property
    def alpha(self) -> float:
        return self._alpha

    @property
    def effective_alpha(self) -> float:
        """Per-query level after the optional Bonferroni correction."""
        return self._alpha / self._queries

    def method_for(self, names: Iterable[str]) -> CiMethod:
        kinds = {self._data.is_categorical(name) for name in names}
        if kinds == {True}:
            return CiMethod.G_TEST
        if kinds == {False}:
            return CiMethod.FISHER_Z
        raise InputError("Mixed categorical/continuous CI queries are not supported")

    def decide(self, a: str, b: str, given: Iterable[str] = ()) -> CiDecision:
        conditioned = frozenset(given)
        key = (frozenset((a, b)), conditioned)
        with self._lock:
            cached = self._memo.get(key)
            if cached is not None:
                return cached
            method = self.method_for((a, b, *conditioned))
            test = conditional_g_test if method is CiMethod.G_TEST else partial_correlation
            statistic, p_value = test(self._data, a, b, conditioned)
            first, second, _ = _canonical(self._data, a, b, conditioned)
            decision = CiDecision.from_test(
                first, second, conditioned, statistic, p_value, self.effective_alpha, method
            )
            self._memo[key] = decision
            logger.debug("%s: statistic=%.4g p=%.4g", decision.statement, statistic, p_value)
            return decision

    def query(self, a: str, b: str, given: Iterable[str] = ()) -> CiStatement:
        decision = self.decide(a, b, given)
        return CiStatement(a, b, decision.statement.given, decision.statement.verdict)

    def decisions(self) -> tuple[CiDecision, ...]:
        """Every decision made so far, in query order."""
        with self._lock:
            return tuple(self._memo.values())


def ci_provider(
    data: Dataset, alpha: float = DEFAULT_ALPHA, *, bonferroni_queries: int = 1
) -> DataCiProvider:
    return DataCiProvider(data, alpha, bonferroni_queries=bonferroni_queries)
