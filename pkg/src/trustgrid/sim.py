"""Closed-loop realization: plant, attacker, filter bank, trust scoring, LQR.

Per slot the loop observes, corrupts, updates every bank member on its
reduced report vector, scores trust, picks a state estimate according to
the control mode, applies the feedback action, then advances plant and
bank.  Everything is driven by two generator streams (plant noise and
attack randomness) derived from one seed, so a run is a pure function of
its configuration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import controller, estimator, linsys, threat, trust

logger = logging.getLogger(__name__)

CONTROL_MODES = ("full_trust", "weighted", "omit_detected")


@dataclass
class SimConfig:
    """Everything one realization depends on, seed included."""

    model: linsys.LinearSystemModel
    lqr: controller.LqrConfig
    attacker: threat.AttackerConfig = field(default_factory=threat.AttackerConfig)
    horizon: int = 200
    seed: int = 0
    control_mode: str = "weighted"
    prior_odds: float = 0.0
    detection_threshold: float = 0.7
    init_scale: float = 1.0
    prior_var: float = 1.0
    forgetting: float = 1.0
    include_full_filter_weight: bool = False

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.control_mode not in CONTROL_MODES:
            raise ValueError(f"control_mode must be one of {CONTROL_MODES}, got {self.control_mode!r}")
        if not 0.0 < self.detection_threshold < 1.0:
            raise ValueError(f"detection_threshold must be in (0, 1), got {self.detection_threshold}")
        if self.prior_odds < 0.0:
            raise ValueError(f"prior_odds must be non-negative, got {self.prior_odds}")
        if self.init_scale < 0.0:
            raise ValueError(f"init_scale must be non-negative, got {self.init_scale}")
        if self.prior_var <= 0.0:
            raise ValueError(f"prior_var must be positive, got {self.prior_var}")
        if self.attacker.mode != "none" and self.attacker.target >= self.model.n_sensors:
            raise ValueError(
                f"attacker target {self.attacker.target} out of range for "
                f"{self.model.n_sensors} sensors"
            )


@dataclass
class SlotRecord:
    """Telemetry for one slot."""

    t: int
    pi: np.ndarray
    cost: float
    state_norm: float
    attacked: bool
    detection: int | None


@dataclass
class ExperimentResult:
    """One realization's records plus detection bookkeeping.

    ``first_detection`` is (slot, sensor) of the earliest threshold
    crossing; ``false_alarm`` is set when that crossing named an honest
    sensor.
    """

    records: list[SlotRecord]
    total_cost: float
    first_detection: tuple[int, int] | None
    false_alarm: bool


def _attacker_present(cfg: SimConfig) -> bool:
    return cfg.attacker.mode != "none" and cfg.attacker.frequency > 0.0


def _select_estimate(
    cfg: SimConfig,
    bank: estimator.FilterBank,
    trust_state: trust.TrustState,
    omitted: int | None,
) -> np.ndarray:
    if cfg.control_mode == "full_trust":
        return bank.full_mean
    if cfg.control_mode == "omit_detected":
        return bank.means[omitted] if omitted is not None else bank.full_mean
    full_weight = 0.0
    if cfg.include_full_filter_weight:
        full_weight = max(0.0, 1.0 - float(trust_state.pi.sum()))
    if float(trust_state.pi.sum()) + full_weight <= 0.0:
        return bank.full_mean
    return controller.weighted_estimate(bank, trust_state.pi, full_weight=full_weight)


def run(cfg: SimConfig, solution: controller.LqrSolution | None = None) -> ExperimentResult:
    """Execute one closed-loop realization.

    Slot order: observe, corrupt, measurement-update every member, score
    trust, choose the estimate for the configured control mode, act, then
    step plant and bank forward.  The action at slot t therefore uses the
    estimate conditioned on reports up to and including slot t.
    """
    if solution is None:
        solution = controller.solve_dare(cfg.model, cfg.lqr)
    seq = np.random.SeedSequence(cfg.seed)
    plant_seq, attack_seq = seq.spawn(2)
    plant_rng = np.random.default_rng(plant_seq)
    attack_rng = np.random.default_rng(attack_seq)

    model = cfg.model
    state = linsys.PlantState(x=cfg.init_scale * plant_rng.standard_normal(model.n_states))
    bank = estimator.FilterBank.create(model, prior_var=cfg.prior_var)
    trust_state = trust.TrustState.create(
        model.n_sensors, prior_odds=cfg.prior_odds, forgetting=cfg.forgetting
    )

    attacker_present = _attacker_present(cfg)
    records: list[SlotRecord] = []
    total_cost = 0.0
    first_detection: tuple[int, int] | None = None
    false_alarm = False
    omitted: int | None = None

    for t in range(cfg.horizon):
        y_clean = linsys.observe(model, state, plant_rng)
        y, fired = threat.corrupt(cfg.attacker, y_clean, attack_rng)

        bank = estimator.update(bank, y)
        pred_means, pred_vars = estimator.predictive_all(bank)
        trust_state = trust.slot_update_arrays(trust_state, pred_means, pred_vars, y)

        detection = trust.detect(trust_state, cfg.detection_threshold)
        if detection is not None and first_detection is None:
            first_detection = (t, detection)
            false_alarm = not attacker_present or detection != cfg.attacker.target
            omitted = detection

        xhat = _select_estimate(cfg, bank, trust_state, omitted)
        u = controller.act(solution, xhat)
        cost = controller.running_cost(state.x, u, cfg.lqr, t)
        total_cost += cost
        records.append(
            SlotRecord(
                t=t,
                pi=trust_state.pi.copy(),
                cost=cost,
                state_norm=float(np.linalg.norm(state.x)),
                attacked=fired,
                detection=detection,
            )
        )

        state = linsys.step(model, state, u, plant_rng)
        bank = estimator.predict(bank, u)

    return ExperimentResult(
        records=records,
        total_cost=total_cost,
        first_detection=first_detection,
        false_alarm=false_alarm,
    )


def derive_seed(seed_base: int, realization: int) -> int:
    """Stable per-realization seed from a base seed."""
    return int(np.random.SeedSequence([seed_base, realization]).generate_state(1, np.uint64)[0])


def run_batch(
    cfg: SimConfig,
    realizations: int,
    seed_base: int | None = None,
) -> list[ExperimentResult]:
    """Run independent realizations with seeds derived from a base seed.

    A failed realization is logged and skipped rather than aborting the
    batch; the batch fails only if every realization does.
    """
    if realizations < 1:
        raise ValueError(f"realizations must be at least 1, got {realizations}")
    if seed_base is None:
        seed_base = cfg.seed
    solution = controller.solve_dare(cfg.model, cfg.lqr)
    results: list[ExperimentResult] = []
    for r in range(realizations):
        cfg_r = replace(cfg, seed=derive_seed(seed_base, r))
        try:
            results.append(run(cfg_r, solution=solution))
        except Exception:
            logger.exception("realization %d (seed %d) failed", r, cfg_r.seed)
    if not results:
        raise RuntimeError("every realization in the batch failed")
    return results
