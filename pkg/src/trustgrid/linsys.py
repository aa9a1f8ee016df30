"""Discrete-time linear plant model, noisy simulation step, and the 7-bus case study.

The plant is the standard stochastic linear system

    x(t+1) = A x(t) + B u(t) + w(t),      w ~ N(0, W)
    y(t)   = C x(t) + n(t),               n ~ N(0, V)

where each component of y is reported by one sensor.  The case study is a
7-dimensional swing-dynamics model obtained by Euler discretization of
``xdot = -inv(M) K x - inv(M) u + w`` with step ``dt``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_EIG_TOL = 1e-9

#: Default continuous-time process noise scale (covariance = scale * I).
DEFAULT_PROCESS_NOISE = 1e-4
#: Default sensor noise variance (covariance = scale * I).
DEFAULT_MEASUREMENT_NOISE = 1e-2
#: Default Euler discretization step in seconds.
DEFAULT_DT = 0.01


def case_study_inertia() -> np.ndarray:
    """Inertia-type matrix of the 7-bus swing-dynamics case study."""
    return np.array(
        [
            [2.1, 1.55, 1.55, 0.0, 0.0, 0.0, 0.0],
            [1.55, 1.651, 1.55, 0.0, 0.0, 0.0, 0.0],
            [1.55, 1.55, 1.605, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 2.04, 1.49, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.49, 1.526, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, -1786.9, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )


def case_study_stiffness() -> np.ndarray:
    """Stiffness-type matrix of the 7-bus swing-dynamics case study."""
    return np.array(
        [
            [0.0211, 0.0, 0.0, 2.04, 1.49, 1.43, -1.025],
            [0.0, 0.0007, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0131, 0.0, 0.0, 0.0, 0.0],
            [-2.1, -1.55, -1.55, 0.0211, 0.0, -1.039, -1.397],
            [0.0, 0.0, 0.0, 0.0, 0.054, 0.0, 0.0],
            [-0.014, -0.362, -0.362, -1.428, -0.79, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0],
        ]
    )


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr


def _check_symmetric_psd(mat: np.ndarray, name: str, strict: bool = False) -> None:
    if not np.allclose(mat, mat.T, atol=1e-12, rtol=1e-9):
        raise ValueError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(mat)
    if strict:
        if eigs.min(initial=np.inf) <= 0.0:
            raise ValueError(f"{name} must be positive definite (min eigenvalue {eigs.min():.3e})")
    elif mat.size and eigs.min() < -_EIG_TOL:
        raise ValueError(f"{name} must be positive semidefinite (min eigenvalue {eigs.min():.3e})")


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Factor F with F @ F.T == cov, valid for any symmetric PSD cov."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(cov)
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


@dataclass(eq=False)
class LinearSystemModel:
    """Plant matrices plus noise covariances.

    A is N x N, B is N x P, C is M x N, W is N x N (process noise),
    V is M x M (sensor noise, strictly positive definite).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    _w_factor: np.ndarray = field(init=False, repr=False)
    _v_factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.A = _as_matrix(self.A, "A")
        self.B = _as_matrix(self.B, "B")
        self.C = _as_matrix(self.C, "C")
        self.W = _as_matrix(self.W, "W")
        self.V = _as_matrix(self.V, "V")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {self.C.shape}")
        if self.W.shape != (n, n):
            raise ValueError(f"W must be {n}x{n}, got {self.W.shape}")
        m = self.C.shape[0]
        if self.V.shape != (m, m):
            raise ValueError(f"V must be {m}x{m}, got {self.V.shape}")
        _check_symmetric_psd(self.W, "W")
        _check_symmetric_psd(self.V, "V", strict=True)
        self._w_factor = _psd_factor(self.W)
        self._v_factor = _psd_factor(self.V)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_sensors(self) -> int:
        return self.C.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearSystemModel):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("A", "B", "C", "W", "V")
        )

    def draw_process_noise(self, rng: np.random.Generator) -> np.ndarray:
        return self._w_factor @ rng.standard_normal(self.n_states)

    def draw_measurement_noise(self, rng: np.random.Generator) -> np.ndarray:
        return self._v_factor @ rng.standard_normal(self.n_sensors)


@dataclass
class PlantState:
    """State vector and slot index of one plant realization."""

    x: np.ndarray
    t: int = 0

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        if self.t < 0:
            raise ValueError("slot index must be non-negative")


@dataclass(eq=False)
class ContinuousCaseStudy:
    """Continuous-time swing model to be Euler-discretized with step dt."""

    Mmat: np.ndarray = field(default_factory=case_study_inertia)
    Kmat: np.ndarray = field(default_factory=case_study_stiffness)
    dt: float = DEFAULT_DT

    def __post_init__(self) -> None:
        self.Mmat = _as_matrix(self.Mmat, "M")
        self.Kmat = _as_matrix(self.Kmat, "K")
        n = self.Mmat.shape[0]
        if self.Mmat.shape != (n, n) or self.Kmat.shape != (n, n):
            raise ValueError("M and K must be square matrices of the same size")
        if self.dt < 0:
            raise ValueError("dt must be non-negative")
        # dt == 0 is a degenerate limit accepted for testing only.
        if not np.isfinite(np.linalg.cond(self.Mmat)) or np.linalg.cond(self.Mmat) > 1e12:
            raise ValueError("M must be invertible")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContinuousCaseStudy):
            return NotImplemented
        return (
            np.array_equal(self.Mmat, other.Mmat)
            and np.array_equal(self.Kmat, other.Kmat)
            and self.dt == other.dt
        )


def step(
    model: LinearSystemModel,
    state: PlantState,
    u: np.ndarray,
    rng: np.random.Generator,
) -> PlantState:
    """Advance the plant one slot: x(t+1) = A x + B u + w."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != model.n_inputs:
        raise ValueError(f"u must have length {model.n_inputs}, got {u.shape[0]}")
    if state.x.shape[0] != model.n_states:
        raise ValueError(f"state has length {state.x.shape[0]}, model expects {model.n_states}")
    x_next = model.A @ state.x + model.B @ u + model.draw_process_noise(rng)
    return PlantState(x=x_next, t=state.t + 1)


def observe(
    model: LinearSystemModel,
    state: PlantState,
    rng: np.random.Generator,
) -> np.ndarray:
    """Emit the sensor reports y = C x + n for the current slot."""
    if state.x.shape[0] != model.n_states:
        raise ValueError(f"state has length {state.x.shape[0]}, model expects {model.n_states}")
    return model.C @ state.x + model.draw_measurement_noise(rng)


def build_case_study(
    cs: ContinuousCaseStudy | None = None,
    process_noise: float = DEFAULT_PROCESS_NOISE,
    measurement_noise: float = DEFAULT_MEASUREMENT_NOISE,
) -> LinearSystemModel:
    """Euler-discretize the continuous case study into a LinearSystemModel.

    A = I - dt*inv(M)*K, B = -dt*inv(M), C = I.  The continuous disturbance
    enters as dt*w per slot, so the discrete process covariance is
    dt^2 * process_noise * I.  Sensors observe the state directly with
    per-sensor variance ``measurement_noise``.
    """
    if cs is None:
        cs = ContinuousCaseStudy()
    n = cs.Mmat.shape[0]
    minv = np.linalg.inv(cs.Mmat)
    a_mat = np.eye(n) - cs.dt * minv @ cs.Kmat
    b_mat = -cs.dt * minv
    w_mat = (cs.dt**2) * process_noise * np.eye(n)
    v_mat = measurement_noise * np.eye(n)
    return LinearSystemModel(A=a_mat, B=b_mat, C=np.eye(n), W=w_mat, V=v_mat)


_MODEL_KEYS = {"A", "B", "C", "W", "V", "case_study"}
_CASE_STUDY_KEYS = {"M", "K", "dt", "process_noise", "measurement_noise"}


def model_from_dict(data: dict) -> LinearSystemModel:
    """Build a model from its JSON form.

    Expects keys A, B, C, W, V as nested row-major arrays.  An optional
    "case_study" object with keys M, K, dt, process_noise, measurement_noise
    (all optional, defaulting to the built-in 7-bus study) overrides the
    explicit matrices.
    """
    unknown = set(data) - _MODEL_KEYS
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    if "case_study" in data:
        cs_data = data["case_study"]
        unknown = set(cs_data) - _CASE_STUDY_KEYS
        if unknown:
            raise ValueError(f"unknown case_study keys: {sorted(unknown)}")
        cs = ContinuousCaseStudy(
            Mmat=np.asarray(cs_data.get("M", case_study_inertia()), dtype=float),
            Kmat=np.asarray(cs_data.get("K", case_study_stiffness()), dtype=float),
            dt=float(cs_data.get("dt", DEFAULT_DT)),
        )
        return build_case_study(
            cs,
            process_noise=float(cs_data.get("process_noise", DEFAULT_PROCESS_NOISE)),
            measurement_noise=float(cs_data.get("measurement_noise", DEFAULT_MEASUREMENT_NOISE)),
        )
    missing = {"A", "B", "C", "W", "V"} - set(data)
    if missing:
        raise ValueError(f"model is missing keys: {sorted(missing)}")
    return LinearSystemModel(
        A=np.asarray(data["A"], dtype=float),
        B=np.asarray(data["B"], dtype=float),
        C=np.asarray(data["C"], dtype=float),
        W=np.asarray(data["W"], dtype=float),
        V=np.asarray(data["V"], dtype=float),
    )


def model_to_dict(model: LinearSystemModel) -> dict:
    """JSON form of a model: nested row-major lists under A, B, C, W, V."""
    return {
        "A": model.A.tolist(),
        "B": model.B.tolist(),
        "C": model.C.tolist(),
        "W": model.W.tolist(),
        "V": model.V.tolist(),
    }


def load_model(path: str | Path) -> LinearSystemModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(model: LinearSystemModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
