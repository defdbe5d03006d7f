"""Linear-Gaussian motion model: prediction, detection likelihood, update."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import Detection, MotionModel, TargetState

PSD_TOL = 1e-9
JITTER = 1e-9


class ContractViolation(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def _check_psd(matrix: np.ndarray, name: str) -> None:
    if not np.allclose(matrix, matrix.T, atol=PSD_TOL, rtol=0.0):
        raise ContractViolation(f"{name} is not symmetric")
    lowest = np.linalg.eigvalsh(0.5 * (matrix + matrix.T)).min()
    scale = max(1.0, np.abs(matrix).max())
    if lowest < -PSD_TOL * scale:
        raise ContractViolation(f"{name} is not positive semidefinite (min eigenvalue {lowest:.3g})")


def _cho_factor(matrix: np.ndarray, name: str):
    """Cholesky factor with one jittered retry."""
    sym = 0.5 * (matrix + matrix.T)
    try:
        return linalg.cho_factor(sym, lower=True)
    except linalg.LinAlgError:
        pass
    try:
        return linalg.cho_factor(sym + JITTER * np.eye(len(sym)), lower=True)
    except linalg.LinAlgError:
        cond = np.linalg.cond(sym)
        raise SingularMatrixError(f"{name} is singular or indefinite (condition number {cond:.3g})") from None


def spd_inverse(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    factor = _cho_factor(matrix, name)
    inv = linalg.cho_solve(factor, np.eye(len(matrix)))
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class Prediction:
    predicted_mean: np.ndarray
    predicted_covariance: np.ndarray
    innovation_covariance: np.ndarray
    observation: np.ndarray

    @property
    def predicted_position(self) -> np.ndarray:
        return self.observation @ self.predicted_mean


def predict(state: TargetState, model: MotionModel) -> Prediction:
    _check_psd(state.covariance, "state covariance")
    A = model.transition
    C = model.observation
    mean = A @ state.mean
    P = A @ state.covariance @ A.T + model.process_noise
    P = 0.5 * (P + P.T)
    S = C @ P @ C.T + model.observation_noise
    S = 0.5 * (S + S.T)
    return Prediction(mean, P, S, C)


def detection_log_likelihood(pred: Prediction, detection: Detection) -> float:
    """Log density of the detection centre under the predicted observation."""
    factor = _cho_factor(pred.innovation_covariance, "innovation covariance")
    resid = np.asarray(detection.center, dtype=float) - pred.predicted_position
    whitened = linalg.solve_triangular(factor[0], resid, lower=True)
    log_det = 2.0 * np.log(np.diag(factor[0])).sum()
    return float(-0.5 * whitened @ whitened - 0.5 * log_det - math.log(2.0 * math.pi))


def detection_likelihood(pred: Prediction, detection: Detection) -> float:
    return math.exp(detection_log_likelihood(pred, detection))


def update(state: TargetState, detection: Detection, model: MotionModel) -> TargetState:
    """Posterior mode given an assigned detection, in information form.

    Returns the state whose mean is
    ``(P^-1 + C' R^-1 C)^-1 (C' R^-1 d + P^-1 A v)`` and whose covariance is
    the inverse information matrix.
    """
    pred = predict(state, model)
    C = model.observation
    P_inv = spd_inverse(pred.predicted_covariance, "predicted covariance")
    R_inv = spd_inverse(model.observation_noise, "observation noise")
    info = P_inv + C.T @ R_inv @ C
    cov = spd_inverse(info, "posterior information")
    d = np.asarray(detection.center, dtype=float)
    mean = cov @ (C.T @ R_inv @ d + P_inv @ pred.predicted_mean)
    return state.replace(mean=mean, covariance=cov)


def coast(state: TargetState, model: MotionModel) -> TargetState:
    A = model.transition
    cov = A @ state.covariance @ A.T + model.process_noise
    return state.replace(mean=A @ state.mean, covariance=0.5 * (cov + cov.T))
