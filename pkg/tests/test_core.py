import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parttrack.core import (
    Detection,
    MotionModel,
    PartType,
    TargetState,
    TrackerConfig,
    layout,
    log_beta,
)


@pytest.mark.parametrize("N,M,J", [(2, 3, 17), (0, 0, 0), (1, 1, 3)])
def test_layout_size(N, M, J):
    assert layout(N, M).size == J


@given(st.integers(0, 6), st.integers(0, 6))
def test_layout_is_a_bijection(N, M):
    lay = layout(N, M)
    seen = []
    for n in range(N):
        for m in range(M + 1):
            j = lay.theta(n, m)
            assert lay.inverse(j) == ("theta", n, m)
            seen.append(j)
    for m in range(1, M + 1):
        for m2 in range(1, M + 1):
            j = lay.gamma(m, m2)
            assert lay.inverse(j) == ("gamma", m, m2)
            seen.append(j)
    assert sorted(seen) == list(range(N * (M + 1) + M * M))
    # theta block precedes gamma block
    assert all(j < lay.n_theta for j in seen[: lay.n_theta])


def test_layout_rejects_out_of_range():
    lay = layout(1, 2)
    with pytest.raises(IndexError):
        lay.theta(1, 0)
    with pytest.raises(IndexError):
        lay.gamma(0, 1)
    with pytest.raises(ValueError):
        layout(-1, 0)


def test_default_beta():
    cfg = TrackerConfig()
    assert cfg.beta == pytest.approx(0.1 / (480 * 640))
    assert cfg.beta == pytest.approx(3.2552e-7, rel=1e-4)
    assert log_beta(cfg) == pytest.approx(math.log(0.1 / 307200))


def test_beta_must_be_positive():
    with pytest.raises(ValueError):
        log_beta(TrackerConfig(f_false=0.0))
    with pytest.raises(ValueError):
        log_beta(TrackerConfig(beta_override=-1.0))


def test_detection_validation():
    d = Detection.from_center(0, 3, PartType.HEAD, 10, 20, 4, 6, 0.5)
    assert d.box == (8.0, 17.0, 4.0, 6.0)
    assert d.width == 4 and d.height == 6
    with pytest.raises(ValueError):
        Detection.from_center(0, 0, PartType.HEAD, 0, 0, 4, 4, 1.2)
    with pytest.raises(ValueError):
        Detection.from_center(0, 0, PartType.HEAD, 0, 0, 0, 4, 0.5)
    with pytest.raises(ValueError):
        Detection(0, 0, PartType.HEAD, (50.0, 50.0), (0.0, 0.0, 4.0, 4.0), 0.5)


def test_target_state_is_immutable_and_never_body():
    s = TargetState(0, PartType.HEAD, [1, 2, 3, 4], np.eye(4))
    with pytest.raises(ValueError):
        s.mean[0] = 5.0
    with pytest.raises(ValueError):
        TargetState(0, PartType.BODY, [0, 0, 0, 0], np.eye(4))


def test_motion_model_matrices():
    mm = MotionModel(tau=1.0, q_d=0.5)
    np.testing.assert_allclose(mm.transition[:2, :2], [[1, 1], [0, 1]])
    np.testing.assert_allclose(mm.transition[2:, 2:], [[1, 1], [0, 1]])
    np.testing.assert_allclose(mm.process_noise[:2, :2], [[1 / 6, 1 / 4], [1 / 4, 1 / 2]])
    np.testing.assert_allclose(mm.observation, [[1, 0, 0, 0], [0, 0, 1, 0]])
    np.testing.assert_allclose(mm.observation_noise, 4 * np.eye(2))
    with pytest.raises(ValueError):
        MotionModel(tau=0.0)


def test_part_labels():
    assert PartType.from_label("Tail_Base") is PartType.TAIL_BASE
    with pytest.raises(ValueError):
        PartType.from_label("paw")


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        TrackerConfig(neighbor_count=-1)
    with pytest.raises(ValueError):
        TrackerConfig(mode="sometimes")
    with pytest.raises(ValueError):
        TrackerConfig(affinity_clamp=(1.0, 0.5))
