"""Type-I error calibration of the CI tests under simulated nulls."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import binomtest

from neurocause.citest import DEFAULT_ALPHA, conditional_g_test, partial_correlation
from neurocause.errors import InputError
from neurocause.graph import VariableRole
from neurocause.scm import Dataset, make_rng

logger = logging.getLogger(__name__)

CALIBRATION_TESTS = ("fisher-z", "g-test")
MIN_TRIALS = 100
DEFAULT_TRIALS = 2000
DEFAULT_SAMPLE_SIZE = 500
CONFIDENCE_LEVEL = 0.95

_NULL_ROLES = {"S": VariableRole.STIMULUS, "X1": VariableRole.FEATURE, "X2": VariableRole.FEATURE}


@dataclass(frozen=True, slots=True)
class CalibrationResult:
    test: str
    trials: int
    rejections: int
    alpha: float
    interval: tuple[float, float]

    @property
    def rate(self) -> float:
        return self.rejections / self.trials

    @property
    def band(self) -> tuple[float, float]:
        """Acceptance band for the empirical rate: [alpha/2, 2 alpha]."""
        return self.alpha / 2.0, self.alpha * 2.0

    @property
    def accepted(self) -> bool:
        low, high = self.band
        return low <= self.rate <= high


def _null_dataset(test: str, rng: np.random.Generator, n: int) -> Dataset:
    """Three mutually independent columns; the test queries (S, X1 | X2)."""
    if test == "fisher-z":
        frame = pd.DataFrame({name: rng.standard_normal(n) for name in _NULL_ROLES})
        return Dataset(frame, _NULL_ROLES)
    frame = pd.DataFrame({name: rng.integers(0, 2, size=n) for name in _NULL_ROLES})
    return Dataset(frame, _NULL_ROLES, frozenset(_NULL_ROLES))


def type_one_error(
    test: str,
    trials: int = DEFAULT_TRIALS,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    n: int = DEFAULT_SAMPLE_SIZE,
) -> CalibrationResult:
    """Empirical rejection rate of ``test`` on ``trials`` simulated null datasets."""
    if test not in CALIBRATION_TESTS:
        raise InputError(f"Unknown test {test!r}; choose one of {', '.join(CALIBRATION_TESTS)}")
    if trials < MIN_TRIALS:
        raise InputError(f"At least {MIN_TRIALS} trials are required, got {trials}")
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    run = partial_correlation if test == "fisher-z" else conditional_g_test
    rng = make_rng(seed)
    rejections = 0
    for _ in range(trials):
        _, p_value = run(_null_dataset(test, rng, n), "S", "X1", ["X2"])
        if p_value <= alpha:
            rejections += 1
    interval = binomtest(rejections, trials).proportion_ci(CONFIDENCE_LEVEL, method="exact")
    logger.info("%s: %d/%d rejections at alpha=%g", test, rejections, trials, alpha)
    return CalibrationResult(test, trials, rejections, alpha, (interval.low, interval.high))
