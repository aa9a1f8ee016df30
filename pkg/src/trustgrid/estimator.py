"""Bank of leave-one-out Kalman filters for sensor cross-checking.

For an M-sensor plant the bank holds M filters, each updated with every
report except one sensor's, plus one full filter updated with all reports.
Member n never ingests y_n, so its posterior yields an independent
prediction of sensor n's report: the basis for scoring that sensor.

The bank state is stored as stacked arrays (one row per member) so the
whole bank advances through predict/update in a handful of batched
matrix operations per slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linsys import LinearSystemModel


@dataclass
class FilterState:
    """Posterior mean and covariance of one bank member.

    ``excluded`` is the sensor index this member leaves out, or None for
    the full filter.
    """

    mean: np.ndarray
    cov: np.ndarray
    excluded: int | None = None


@dataclass
class PredictiveDistribution:
    """Gaussian prediction of one sensor's next report."""

    mean: float
    var: float
    sensor: int

    def __post_init__(self) -> None:
        if self.var <= 0.0:
            raise ValueError(f"predictive variance must be positive, got {self.var}")

    def logpdf(self, value: float) -> float:
        """Log density of the report under this prediction."""
        return -0.5 * (np.log(2.0 * np.pi * self.var) + (value - self.mean) ** 2 / self.var)


def _reduce_observations(model: LinearSystemModel) -> tuple:
    """Stacked per-member reductions: kept sensor indices, C and V with
    sensor n's row (and column) removed."""
    m = model.n_sensors
    keep = np.array([[i for i in range(m) if i != n] for n in range(m)], dtype=int)
    c_red = np.stack([model.C[keep[n], :] for n in range(m)])
    v_red = np.stack([model.V[np.ix_(keep[n], keep[n])] for n in range(m)])
    return keep, c_red, v_red


class FilterBank:
    """Leave-one-out members (one per sensor) plus the full filter.

    Rows 0..M-1 of ``means``/``covs`` are the members excluding that
    sensor; the last row is the full filter.
    """

    def __init__(
        self,
        model: LinearSystemModel,
        means: np.ndarray,
        covs: np.ndarray,
        _reduced: tuple | None = None,
    ):
        m = model.n_sensors
        if means.shape != (m + 1, model.n_states):
            raise ValueError(f"means must have shape {(m + 1, model.n_states)}, got {means.shape}")
        if covs.shape != (m + 1, model.n_states, model.n_states):
            raise ValueError("covs shape does not match the model")
        self.model = model
        self.means = means
        self.covs = covs
        # Reduced observation matrices are fixed per model; computed once
        # and shared across the predict/update history of this bank.
        self._reduced = _reduced if _reduced is not None else _reduce_observations(model)

    @classmethod
    def create(
        cls,
        model: LinearSystemModel,
        prior_mean: np.ndarray | None = None,
        prior_var: float = 1.0,
    ) -> FilterBank:
        """Fresh bank with every member at the common Gaussian prior."""
        mean = (
            np.zeros(model.n_states)
            if prior_mean is None
            else np.asarray(prior_mean, dtype=float).reshape(-1)
        )
        if mean.shape[0] != model.n_states:
            raise ValueError(f"prior mean must have length {model.n_states}")
        rows = model.n_sensors + 1
        means = np.tile(mean, (rows, 1))
        covs = np.tile(prior_var * np.eye(model.n_states), (rows, 1, 1))
        return cls(model, means, covs)

    @property
    def members(self) -> tuple[FilterState, ...]:
        """Leave-one-out members as FilterState views (read-only by convention)."""
        return tuple(
            FilterState(mean=self.means[n], cov=self.covs[n], excluded=n)
            for n in range(self.model.n_sensors)
        )

    @property
    def full(self) -> FilterState:
        """The all-sensor filter as a FilterState view."""
        return FilterState(mean=self.means[-1], cov=self.covs[-1], excluded=None)

    @property
    def member_means(self) -> np.ndarray:
        """(M, N) array of leave-one-out posterior means."""
        return self.means[:-1]

    @property
    def full_mean(self) -> np.ndarray:
        return self.means[-1]


def predict(bank: FilterBank, u: np.ndarray) -> FilterBank:
    """Time update for every member: mean <- A mean + B u, cov <- A cov A' + W.

    The control term is included because the controller always knows its
    own action; leaving it out would bias every prediction.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != bank.model.n_inputs:
        raise ValueError(f"u must have length {bank.model.n_inputs}, got {u.shape[0]}")
    a = bank.model.A
    means = bank.means @ a.T + bank.model.B @ u
    covs = a @ bank.covs @ a.T + bank.model.W
    covs = 0.5 * (covs + covs.transpose(0, 2, 1))
    return FilterBank(bank.model, means, covs, _reduced=bank._reduced)


def update(bank: FilterBank, y: np.ndarray) -> FilterBank:
    """Measurement update: member n sees y with entry n removed, the full
    filter sees all of y.  Covariances are symmetrized after the update."""
    y = np.asarray(y, dtype=float).reshape(-1)
    model = bank.model
    m = model.n_sensors
    if y.shape[0] != m:
        raise ValueError(f"y must have length {m}, got {y.shape[0]}")

    keep, c_red, v_red = bank._reduced
    if m == 1:
        # A lone sensor leaves its member nothing to observe.
        new_means = bank.means.copy()
        new_covs = bank.covs.copy()
    else:
        means = bank.means[:-1]
        covs = bank.covs[:-1]
        c_cov = c_red @ covs                                        # (m, m-1, n)
        innov_cov = c_cov @ c_red.transpose(0, 2, 1) + v_red        # (m, m-1, m-1)
        try:
            gains = np.linalg.solve(innov_cov, c_cov).transpose(0, 2, 1)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "innovation covariance is singular for a bank member; "
                "V is too small or C degenerate"
            ) from exc
        innov = y[keep] - (c_red @ means[..., None])[..., 0]        # (m, m-1)
        upd_means = means + (gains @ innov[..., None])[..., 0]
        upd_covs = covs - gains @ c_cov
        new_means = np.vstack([upd_means, bank.means[-1:]])
        new_covs = np.concatenate([upd_covs, bank.covs[-1:]])

    # Full filter sees the complete report vector.
    full_mean, full_cov = _update_single(
        bank.means[-1], bank.covs[-1], model.C, model.V, y
    )
    new_means[-1] = full_mean
    new_covs[-1] = full_cov
    new_covs = 0.5 * (new_covs + new_covs.transpose(0, 2, 1))
    return FilterBank(model, new_means, new_covs, _reduced=bank._reduced)


def _update_single(
    mean: np.ndarray, cov: np.ndarray, c: np.ndarray, v: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Plain Kalman measurement update for one filter."""
    if c.shape[0] == 0:
        return mean.copy(), cov.copy()
    c_cov = c @ cov
    innov_cov = c_cov @ c.T + v
    try:
        gain = np.linalg.solve(innov_cov, c_cov).T
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "innovation covariance is singular; V is too small or C degenerate"
        ) from exc
    new_mean = mean + gain @ (y - c @ mean)
    new_cov = cov - gain @ c_cov
    return new_mean, 0.5 * (new_cov + new_cov.T)


def predictive_for_sensor(bank: FilterBank, n: int) -> PredictiveDistribution:
    """Gaussian prediction of sensor n's report from the member that never saw it.

    The variance includes the sensor's own noise floor V[n, n] because the
    scored quantity is the noisy report, not the clean state projection.
    """
    if not 0 <= n < bank.model.n_sensors:
        raise ValueError(f"sensor index {n} out of range")
    c_n = bank.model.C[n, :]
    mean = float(c_n @ bank.means[n])
    var = float(c_n @ bank.covs[n] @ c_n + bank.model.V[n, n])
    return PredictiveDistribution(mean=mean, var=var, sensor=n)


def predictive_all(bank: FilterBank) -> tuple[np.ndarray, np.ndarray]:
    """Means and variances of every sensor's prediction in one shot."""
    c = bank.model.C
    means = np.einsum("nj,nj->n", c, bank.means[:-1])
    variances = np.einsum("nj,njk,nk->n", c, bank.covs[:-1], c) + np.diag(bank.model.V)
    return means, variances
