"""Infinite-horizon discounted LQR: Riccati solution, feedback gain, and the
suspicion-weighted state estimate used to drive it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimator import FilterBank
from .linsys import LinearSystemModel, _check_symmetric_psd


@dataclass(eq=False)
class LqrConfig:
    """Quadratic cost weights: per-slot cost beta^t (x'Qx + u'Pc u)."""

    Q: np.ndarray
    Pc: np.ndarray
    beta: float = 1.0

    def __post_init__(self) -> None:
        self.Q = np.asarray(self.Q, dtype=float)
        self.Pc = np.asarray(self.Pc, dtype=float)
        _check_symmetric_psd(self.Q, "Q", strict=True)
        _check_symmetric_psd(self.Pc, "Pc", strict=True)
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, LqrConfig):
            return NotImplemented
        return (
            np.array_equal(self.Q, other.Q)
            and np.array_equal(self.Pc, other.Pc)
            and self.beta == other.beta
        )


@dataclass
class LqrSolution:
    """Stationary Riccati solution S, feedback gain L, and the residual norm
    of the fixed-point defect at S."""

    S: np.ndarray
    L: np.ndarray
    residual: float


def _riccati_rhs(s: np.ndarray, a: np.ndarray, b: np.ndarray, q: np.ndarray, pc: np.ndarray):
    """One application of the Riccati map, returning (next S, gain)."""
    bsb = b.T @ s @ b + pc
    gain = np.linalg.solve(bsb, b.T @ s @ a)
    s_next = a.T @ s @ (a - b @ gain) + q
    return 0.5 * (s_next + s_next.T), gain


def solve_dare(
    model: LinearSystemModel,
    cfg: LqrConfig,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> LqrSolution:
    """Solve the discounted discrete algebraic Riccati equation.

    The discount is folded in by the substitution A -> sqrt(beta) A,
    B -> sqrt(beta) B, after which the stationary equations apply
    unchanged.  Solved by the structure-preserving doubling iteration:
    each pass squares the effective value-iteration horizon, so slow
    modes (closed-loop eigenvalues near the unit circle) still converge
    in a few dozen passes where the plain Riccati map would need
    hundreds of thousands.
    """
    root_beta = np.sqrt(cfg.beta)
    a = root_beta * model.A
    b = root_beta * model.B
    n = a.shape[0]
    eye = np.eye(n)

    a_k = a.copy()
    g_k = b @ np.linalg.solve(cfg.Pc, b.T)
    h_k = cfg.Q.copy()
    converged = False
    for _ in range(max_iter):
        try:
            w_inv_a = np.linalg.solve(eye + g_k @ h_k, a_k)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "Riccati doubling step is singular (is (A, B) stabilizable?)"
            ) from exc
        a_next = a_k @ w_inv_a
        g_next = g_k + a_k @ g_k @ np.linalg.solve(eye + h_k @ g_k, a_k.T)
        h_next = h_k + w_inv_a.T @ h_k @ a_k
        g_next = 0.5 * (g_next + g_next.T)
        h_next = 0.5 * (h_next + h_next.T)
        delta = np.linalg.norm(h_next - h_k, ord="fro")
        a_k, g_k, h_k = a_next, g_next, h_next
        if delta < tol * max(1.0, np.linalg.norm(h_k, ord="fro")):
            converged = True
            break
    if not converged:
        raise ValueError(
            f"Riccati iteration did not converge within {max_iter} doubling steps "
            "(is (A, B) stabilizable?)"
        )
    s = h_k
    s_check, gain = _riccati_rhs(s, a, b, cfg.Q, cfg.Pc)
    residual = float(np.linalg.norm(s_check - s, ord="fro"))
    radius = max(abs(np.linalg.eigvals(a - b @ gain)))
    if radius >= 1.0:
        raise ValueError(
            f"closed loop is not stable (spectral radius {radius:.6f}); "
            "rejecting this model/discretization configuration"
        )
    return LqrSolution(S=s, L=gain, residual=residual)


def act(sol: LqrSolution, xhat: np.ndarray) -> np.ndarray:
    """State feedback u = -L xhat."""
    return -sol.L @ np.asarray(xhat, dtype=float).reshape(-1)


def weighted_estimate(
    bank: FilterBank,
    pi: np.ndarray,
    full_weight: float = 0.0,
) -> np.ndarray:
    """Suspicion-weighted average of the leave-one-out estimates.

    Sensor n's suspicious level weights the estimate that excludes sensor n,
    so the estimate ignoring the most-suspect sensor dominates.  Weights are
    normalized by their sum, making the result invariant to positive
    rescaling of pi.  ``full_weight``, when positive, mixes in the
    full-observation estimate (an extension used when a no-attacker
    hypothesis carries probability mass).
    """
    pi = np.asarray(pi, dtype=float).reshape(-1)
    n_members = bank.member_means.shape[0]
    if pi.shape[0] != n_members:
        raise ValueError(f"pi must have {n_members} entries, got {pi.shape[0]}")
    if np.any(pi < 0.0) or np.any(pi > 1.0 + 1e-12):
        raise ValueError("pi entries must lie in [0, 1]")
    if full_weight < 0.0:
        raise ValueError("full_weight must be non-negative")
    total = float(pi.sum()) + full_weight
    if total <= 0.0:
        raise ValueError("all-zero weights: trust state is degenerate")
    acc = pi @ bank.member_means
    if full_weight > 0.0:
        acc = acc + full_weight * bank.full_mean
    return acc / total


def running_cost(x: np.ndarray, u: np.ndarray, cfg: LqrConfig, t: int) -> float:
    """Discounted per-slot cost beta^t (x'Qx + u'Pc u)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    return float(cfg.beta**t * (x @ cfg.Q @ x + u @ cfg.Pc @ u))
