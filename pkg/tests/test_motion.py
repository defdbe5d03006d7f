import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parttrack.core import Detection, MotionModel, PartType, TargetState
from parttrack.motion import (
    ContractViolation,
    Prediction,
    SingularMatrixError,
    coast,
    detection_likelihood,
    detection_log_likelihood,
    predict,
    update,
)

MODEL = MotionModel()


def state(x=0.0, vx=0.0, y=0.0, vy=0.0, cov=None):
    return TargetState(0, PartType.HEAD, [x, vx, y, vy], np.eye(4) if cov is None else cov)


def det(x, y):
    return Detection.from_center(0, 0, PartType.HEAD, x, y, 10, 10, 0.9)


def random_spd(rng, n, scale=10.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T) / n + 1e-3 * np.eye(n)


def pdf2(x, mean, cov):
    # textbook bivariate normal, no factorisation
    (a, b), (c, d) = cov
    det_ = a * d - b * c
    inv = np.array([[d, -b], [-c, a]]) / det_
    r = np.asarray(x) - mean
    return math.exp(-0.5 * r @ inv @ r) / (2 * math.pi * math.sqrt(det_))


def gain_form(st_, d, model):
    A, Q, C, R = model.transition, model.process_noise, model.observation, model.observation_noise
    m = A @ st_.mean
    P = A @ st_.covariance @ A.T + Q
    S = C @ P @ C.T + R
    K = P @ C.T @ np.linalg.inv(S)
    return m + K @ (np.asarray(d) - C @ m), (np.eye(4) - K @ C) @ P


def test_predict_zero_velocity():
    p = predict(state(10, 0, 5, 0), MODEL)
    np.testing.assert_allclose(p.predicted_position, [10, 5])


def test_predict_constant_velocity():
    p = predict(state(10, 2, 5, -1), MODEL)
    np.testing.assert_allclose(p.predicted_position, [12, 4])


def test_predict_zero_covariance_gives_process_noise():
    p = predict(state(cov=np.zeros((4, 4))), MotionModel(q_d=0.5))
    np.testing.assert_allclose(p.predicted_covariance[:2, :2], [[1 / 6, 1 / 4], [1 / 4, 1 / 2]])
    np.testing.assert_allclose(p.innovation_covariance, np.diag([1 / 6 + 4, 1 / 6 + 4]))


def test_predict_rejects_non_psd():
    with pytest.raises(ContractViolation):
        predict(state(cov=np.diag([1.0, -1.0, 1.0, 1.0])), MODEL)
    bad = np.eye(4)
    bad[0, 1] = 0.5
    with pytest.raises(ContractViolation):
        predict(state(cov=bad), MODEL)


def test_likelihood_peak_of_standard_normal():
    pred = Prediction(np.array([3.0, 0, 4.0, 0]), np.eye(4), np.eye(2), MODEL.observation)
    assert detection_likelihood(pred, det(3, 4)) == pytest.approx(1 / (2 * math.pi), rel=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_likelihood_matches_direct_pdf(seed):
    rng = np.random.default_rng(seed)
    cov = random_spd(rng, 4)
    s = state(*rng.uniform(-50, 50, 4), cov=cov)
    pred = predict(s, MODEL)
    d = det(*(pred.predicted_position + rng.normal(0, 3, 2)))
    expected = pdf2(d.center, pred.predicted_position, pred.innovation_covariance)
    assert detection_likelihood(pred, d) == pytest.approx(expected, rel=1e-9)


def test_likelihood_tail():
    pred = Prediction(np.zeros(4), np.eye(4), np.eye(2), MODEL.observation)
    assert detection_likelihood(pred, det(40.0, 0.0)) < 1e-300
    assert detection_log_likelihood(pred, det(40.0, 0.0)) == pytest.approx(-800 - math.log(2 * math.pi))


def test_likelihood_integrates_to_one():
    S = np.array([[4.0, 1.0], [1.0, 2.0]])
    pred = Prediction(np.zeros(4), np.eye(4), S, MODEL.observation)
    sd = math.sqrt(max(np.linalg.eigvalsh(S)))
    h = 0.1
    grid = np.arange(-20 * sd, 20 * sd + h, h)
    inv = np.linalg.inv(S)
    X, Y = np.meshgrid(grid, grid)
    q = inv[0, 0] * X**2 + 2 * inv[0, 1] * X * Y + inv[1, 1] * Y**2
    total = np.exp(-0.5 * q).sum() * h * h / (2 * math.pi * math.sqrt(np.linalg.det(S)))
    assert abs(total - 1.0) < 1e-3
    # the library density agrees with the grid integrand at a few points
    for x, y in [(0.5, -1.0), (3.0, 2.0)]:
        qq = inv[0, 0] * x * x + 2 * inv[0, 1] * x * y + inv[1, 1] * y * y
        ref = math.exp(-0.5 * qq) / (2 * math.pi * math.sqrt(np.linalg.det(S)))
        assert detection_likelihood(pred, det(x, y)) == pytest.approx(ref, rel=1e-12)


def test_likelihood_singular_innovation():
    # rank one at a scale the 1e-9 jitter cannot repair
    S = np.array([[1.0, 1.0], [1.0, 1.0]]) * 1e12
    pred = Prediction(np.zeros(4), np.eye(4), S, MODEL.observation)
    with pytest.raises(SingularMatrixError, match="condition number"):
        detection_likelihood(pred, det(1, 1))


def test_update_ignores_useless_measurement():
    model = MotionModel(r=1e12)
    s = state(10, 1, 20, -1, cov=np.diag([25.0, 100, 25, 100]))
    post = update(s, det(60, 70), model)
    np.testing.assert_allclose(post.position, [11, 19], atol=1e-3)


def test_update_trusts_measurement_when_prior_is_vague():
    s = state(10, 1, 20, -1, cov=np.diag([25.0, 100, 25, 100]) * 1e12)
    post = update(s, det(60, 70), MODEL)
    np.testing.assert_allclose(post.position, [60, 70], atol=1e-3)


def test_update_preserves_identity():
    s = TargetState(7, PartType.TAIL_BASE, [0, 0, 0, 0], np.eye(4))
    d = Detection.from_center(0, 0, PartType.TAIL_BASE, 1, 1, 4, 4, 0.8)
    post = update(s, d, MODEL)
    assert post.target_id == 7 and post.part_type is PartType.TAIL_BASE


def test_update_matches_gain_form_on_1000_instances():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        model = MotionModel(tau=rng.uniform(0.5, 2), q_d=rng.uniform(0.01, 2), r=rng.uniform(0.1, 20))
        s = state(*rng.uniform(-100, 100, 4), cov=random_spd(rng, 4, rng.uniform(0.1, 50)))
        d = rng.uniform(-100, 100, 2)
        post = update(s, det(*d), model)
        m_ref, P_ref = gain_form(s, d, model)
        worst = max(worst, np.abs(post.mean - m_ref).max(), np.abs(post.covariance - P_ref).max())
        P = predict(s, model).predicted_covariance
        assert np.linalg.eigvalsh(P - post.covariance).min() >= -1e-9
    assert worst <= 1e-8


def test_update_rejects_singular_prediction():
    s = state(cov=1e12 * np.ones((4, 4)))
    with pytest.raises(SingularMatrixError):
        update(s, det(0, 0), MotionModel(q_d=0.0))


def test_exact_observation_is_rescued_by_jitter():
    # r = 0 is singular; the single jittered retry makes the posterior snap to the detection
    post = update(state(cov=np.eye(4)), det(3.0, -2.0), MotionModel(r=0.0))
    np.testing.assert_allclose(post.position, [3.0, -2.0], atol=1e-6)


def test_coast_static_target():
    s = state(5, 0, 7, 0, cov=np.eye(4))
    c = coast(s, MODEL)
    np.testing.assert_allclose(c.position, [5, 7])
    A = MODEL.transition
    np.testing.assert_allclose(c.covariance - A @ np.eye(4) @ A.T, MODEL.process_noise)


def test_coast_twice_composes():
    rng = np.random.default_rng(1)
    s = state(*rng.normal(size=4), cov=random_spd(rng, 4))
    A, Q = MODEL.transition, MODEL.process_noise
    c2 = coast(coast(s, MODEL), MODEL)
    np.testing.assert_allclose(c2.mean, A @ A @ s.mean)
    np.testing.assert_allclose(c2.covariance, A @ A @ s.covariance @ A.T @ A.T + A @ Q @ A.T + Q, atol=1e-12)


def test_coast_advances_by_velocity():
    c = coast(state(0, 3, 0, 0), MODEL)
    assert c.position[0] == 3.0
