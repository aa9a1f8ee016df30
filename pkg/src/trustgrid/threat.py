"""Per-slot report corruption: replacement or additive spoofing of one sensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATTACK_MODES = ("none", "replace", "additive")


@dataclass
class AttackerConfig:
    """One attacker targeting a single sensor.

    Each slot the attack fires with probability ``frequency``; a fired
    attack draws g ~ N(0, amplitude) and either replaces the target's
    report with g or adds g to it.  ``amplitude`` is a variance.
    """

    target: int = 0
    mode: str = "none"
    frequency: float = 0.0
    amplitude: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ATTACK_MODES:
            raise ValueError(f"mode must be one of {ATTACK_MODES}, got {self.mode!r}")
        if not 0.0 <= self.frequency <= 1.0:
            raise ValueError(f"frequency must be in [0, 1], got {self.frequency}")
        if self.amplitude < 0.0:
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude}")
        if self.target < 0:
            raise ValueError(f"target must be a valid sensor index, got {self.target}")


def corrupt(
    cfg: AttackerConfig,
    y: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, bool]:
    """Apply the attack to one slot of reports.

    Returns the (possibly corrupted) report vector and whether the attack
    fired.  Non-target entries are never touched.
    """
    if cfg.mode == "none":
        return y, False
    if cfg.target >= y.shape[0]:
        raise ValueError(f"target sensor {cfg.target} out of range for {y.shape[0]} reports")
    if rng.random() >= cfg.frequency:
        return y, False
    g = np.sqrt(cfg.amplitude) * rng.standard_normal()
    out = y.copy()
    if cfg.mode == "replace":
        out[cfg.target] = g
    else:
        out[cfg.target] = y[cfg.target] + g
    return out, True
