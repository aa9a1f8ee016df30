"""Bayesian suspicious-level bookkeeping for the sensor bank.

Each sensor accumulates the log-likelihood of its reports under the
honest hypothesis, scored against the prediction of the filter that never
saw that sensor.  Suspicious levels are the posterior attacker
probabilities under a one-attacker model, optionally softened by prior
odds that no attacker is present at all.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .estimator import PredictiveDistribution

logger = logging.getLogger(__name__)


@dataclass
class TrustState:
    """Accumulated honest log-likelihoods and current suspicious levels.

    ``prior_odds`` is the ratio P(no attacker) / P(one attacker); zero
    means an attacker is assumed to exist, in which case the levels sum
    to one.  ``forgetting`` in (0, 1] exponentially discounts old
    evidence; 1.0 keeps the exact cumulative sum.
    """

    loglik: np.ndarray
    pi: np.ndarray
    prior_odds: float = 0.0
    forgetting: float = 1.0

    def __post_init__(self) -> None:
        self.loglik = np.asarray(self.loglik, dtype=float).reshape(-1)
        self.pi = np.asarray(self.pi, dtype=float).reshape(-1)
        if self.prior_odds < 0.0:
            raise ValueError(f"prior_odds must be non-negative, got {self.prior_odds}")
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting must be in (0, 1], got {self.forgetting}")

    @classmethod
    def create(
        cls, n_sensors: int, prior_odds: float = 0.0, forgetting: float = 1.0
    ) -> TrustState:
        state = cls(
            loglik=np.zeros(n_sensors),
            pi=np.zeros(n_sensors),
            prior_odds=prior_odds,
            forgetting=forgetting,
        )
        state.pi = compute_pi(state)
        return state


def compute_pi(state: TrustState) -> np.ndarray:
    """Suspicious levels from the accumulated log-likelihoods.

    Conceptually pi_n = exp(-l_n) / (prior_odds + sum_m exp(-l_m)).
    Evaluated in the log domain: with g_n = -l_n and g* the running
    maximum (including log prior_odds when positive), the shifted
    exponentials stay in [0, 1] and the quotient cannot overflow for any
    finite l.
    """
    g = -state.loglik
    if not np.all(np.isfinite(g)):
        raise ValueError("log-likelihoods must be finite")
    if state.prior_odds > 0.0:
        log_prior = np.log(state.prior_odds)
        g_star = max(float(g.max()), log_prior)
        denom = np.exp(log_prior - g_star) + np.exp(g - g_star).sum()
    else:
        g_star = float(g.max())
        denom = np.exp(g - g_star).sum()
    return np.exp(g - g_star) / denom


def slot_update(
    state: TrustState,
    preds: list[PredictiveDistribution],
    y: np.ndarray,
) -> TrustState:
    """Fold one slot of reports into the per-sensor honest log-likelihoods.

    Each report is scored under the Gaussian prediction from the bank
    member that excluded it.  A slot containing any non-finite report is
    rejected whole: the state is returned unchanged and the event logged.
    """
    n = state.loglik.shape[0]
    if len(preds) != n:
        raise ValueError(f"expected {n} predictions, got {len(preds)}")
    for i, pred in enumerate(preds):
        if pred.sensor != i:
            raise ValueError(f"prediction at position {i} is for sensor {pred.sensor}")
    pred_means = np.array([pred.mean for pred in preds])
    pred_vars = np.array([pred.var for pred in preds])
    return slot_update_arrays(state, pred_means, pred_vars, y)


def slot_update_arrays(
    state: TrustState,
    pred_means: np.ndarray,
    pred_vars: np.ndarray,
    y: np.ndarray,
) -> TrustState:
    """Vectorized twin of slot_update taking prediction arrays directly."""
    y = np.asarray(y, dtype=float).reshape(-1)
    n = state.loglik.shape[0]
    if pred_means.shape[0] != n or pred_vars.shape[0] != n or y.shape[0] != n:
        raise ValueError(f"expected {n} predictions and reports")
    if np.any(pred_vars <= 0.0):
        raise ValueError("predictive variances must be positive")
    if not np.all(np.isfinite(y)):
        logger.warning("rejecting slot with non-finite reports: %s", y)
        return state
    contrib = -0.5 * (np.log(2.0 * np.pi * pred_vars) + (y - pred_means) ** 2 / pred_vars)
    if not np.all(np.isfinite(contrib)):
        logger.warning("rejecting slot with non-finite log-densities: %s", contrib)
        return state
    loglik = state.forgetting * state.loglik + contrib
    new_state = replace(state, loglik=loglik)
    new_state.pi = compute_pi(new_state)
    return new_state


def detect(state: TrustState, threshold: float) -> int | None:
    """Smallest-index sensor whose suspicious level exceeds the threshold.

    Returns None when every level is at or below it.  Ties break toward
    the smallest index for determinism.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    above = np.nonzero(state.pi > threshold)[0]
    return int(above[0]) if above.size else None
