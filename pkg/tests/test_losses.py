import dataclasses
import math
from types import SimpleNamespace

import numpy as np
import pytest

from forecaster.errors import DegenerateLossError, DomainError, LabelError
from forecaster.mtos.losses import (
    best_mode_index, loss_auxiliary, loss_capture, loss_couple, loss_gmm, loss_margin, squared_xy_distance,
    total_loss,
)
from forecaster.nn import DiffArray, grad_check
from models.run_config import TrainConfig


def leaf(values):
    return DiffArray(np.array(values, dtype=np.float64), requires_grad=True)


def straight_gt(f=3):
    gt = np.zeros((1, f, 5))
    gt[0, :, 0] = np.arange(1, f + 1)
    gt[0, :, 2] = 1.0
    gt[0, :, 4] = 10.0
    return gt


def test_gmm_exact_mode_has_zero_loss():
    gt = straight_gt()
    trajectories = np.repeat(gt[:, None], 2, axis=1)
    assert loss_gmm(DiffArray(trajectories), DiffArray([[0.5, 0.5]]), gt).item() == pytest.approx(0.0, abs=1e-12)


def test_gmm_half_mass_on_exact_mode():
    gt = straight_gt()
    trajectories = np.repeat(gt[:, None], 2, axis=1)
    trajectories[0, 1, :, 1] += 100.0
    loss = loss_gmm(DiffArray(trajectories), DiffArray([[0.5, 0.5]]), gt)
    assert loss.item() == pytest.approx(math.log(2.0), abs=1e-9)


def test_gmm_rejects_negative_probabilities():
    gt = straight_gt()
    with pytest.raises(DomainError):
        loss_gmm(DiffArray(np.repeat(gt[:, None], 2, axis=1)), DiffArray([[1.2, -0.2]]), gt)


def test_squared_xy_distance_sums_over_steps():
    gt = straight_gt()
    trajectories = np.repeat(gt[:, None], 2, axis=1)
    trajectories[0, 1, :, 1] += 2.0
    np.testing.assert_allclose(squared_xy_distance(DiffArray(trajectories), gt).values, [[0.0, 12.0]])


def test_couple_loss_averages_valid_entries():
    R = np.zeros((1, 2, 1, 3))
    R[0, 0, 0, 0] = 1.0
    R[0, 1] = 50.0
    R_gt = np.zeros((1, 2, 1, 3))
    R_gt[0, 1] = np.nan
    loss = loss_couple(DiffArray(R), R_gt, np.array([[True, False]]))
    assert loss.item() == pytest.approx(1.0 / 3.0)


def test_couple_loss_without_valid_entries():
    with pytest.raises(DegenerateLossError):
        loss_couple(DiffArray(np.zeros((1, 2, 1, 3))), np.zeros((1, 2, 1, 3)), np.zeros((1, 2), dtype=bool))


@pytest.mark.parametrize("error,expected", [(0.5, 0.125), (1.0, 0.5), (2.0, 1.5), (-3.0, 2.5)])
def test_capture_loss_smooth_l1_knee(error, expected):
    J = np.full((1, 1, 2), error)
    assert loss_capture(DiffArray(J), np.zeros((1, 1, 2))).item() == pytest.approx(expected)


@pytest.mark.parametrize("probs,best,expected", [
    ([[0.5, 0.5]], [0], 0.5),
    ([[1.0 / 3.0] * 3], [1], 1.0 / 3.0),
    ([[0.6, 0.2, 0.2]], [0], 0.0),
])
def test_margin_loss_examples(probs, best, expected):
    assert loss_margin(DiffArray(probs), np.array(best)).item() == pytest.approx(expected)


def test_margin_loss_explicit_margin():
    assert loss_margin(DiffArray([[0.5, 0.5]]), np.array([0]), margin=0.1).item() == pytest.approx(0.1)


def test_best_mode_uses_endpoint():
    gt = straight_gt()
    trajectories = np.repeat(gt[:, None], 3, axis=1)
    trajectories[0, 0, -1, 1] += 1.0
    trajectories[0, 1, :-1, 1] += 9.0
    trajectories[0, 2, -1, 1] += 0.5
    assert best_mode_index(trajectories, gt).tolist() == [1]


def test_auxiliary_loss_reads_best_mode():
    gt = straight_gt()
    trajectories = np.repeat(gt[:, None], 2, axis=1)
    trajectories[0, 1, :, 4] += 0.5
    assert loss_auxiliary(DiffArray(trajectories), np.array([0]), gt).item() == pytest.approx(0.0)
    # erro 0.5 só no canal de velocidade: 0.125 / 3 canais
    assert loss_auxiliary(DiffArray(trajectories), np.array([1]), gt).item() == pytest.approx(0.125 / 3.0)


def _fake(rng, K=2, f=3, M=2):
    gt = straight_gt(f)
    outputs = SimpleNamespace(
        trajectories=leaf(np.repeat(gt[:, None], K, axis=1) + rng.normal(scale=0.3, size=(1, K, f, 5))),
        probabilities=leaf(rng.dirichlet(np.ones(K))[None]),
        relative=leaf(rng.normal(size=(1, M, f, 3))),
        motion_prior=leaf(gt[..., 0:2] + rng.normal(scale=0.3, size=(1, f, 2))),
    )
    batch = SimpleNamespace(gt=gt, relative_gt=np.zeros((1, M, f, 3)), segment_mask=np.ones((1, M), dtype=bool))
    return outputs, batch


def _train(**changes):
    values = dict(margin=None, aux_weight=0.1, use_couple_loss=True, use_capture_loss=True)
    values.update(changes)
    return dataclasses.replace(TrainConfig(), **values)


def test_total_loss_breakdown_adds_up(rng):
    outputs, batch = _fake(rng)
    total, breakdown = total_loss(outputs, batch, _train())
    assert total.item() == pytest.approx(breakdown.total)
    assert breakdown.total == pytest.approx(breakdown.primary + breakdown.couple + breakdown.capture)
    assert breakdown.couple > 0.0 and breakdown.capture > 0.0


@pytest.mark.parametrize("switch,column", [("use_couple_loss", "couple"), ("use_capture_loss", "capture")])
def test_disabled_term_contributes_nothing(rng, switch, column):
    outputs, batch = _fake(rng)
    total, breakdown = total_loss(outputs, batch, _train(**{switch: False}))
    assert getattr(breakdown, column) == 0.0
    total.backward()
    grad = outputs.relative.grad if column == "couple" else outputs.motion_prior.grad
    assert grad is None or not grad.any()


def test_total_loss_requires_labels(rng):
    outputs, batch = _fake(rng)
    batch.gt = None
    with pytest.raises(LabelError):
        total_loss(outputs, batch, _train())


def test_total_loss_gradient(rng):
    outputs, batch = _fake(rng, K=3)
    inputs = [outputs.trajectories, outputs.probabilities, outputs.relative, outputs.motion_prior]
    assert grad_check(lambda: total_loss(outputs, batch, _train())[0], inputs) < 1e-5


def test_total_loss_margin_defaults_to_inverse_k(rng, mocker):
    spy = mocker.spy(TrainConfig, "margin_for")
    outputs, batch = _fake(rng, K=2)
    _, default = total_loss(outputs, batch, _train())
    _, explicit = total_loss(outputs, batch, _train(margin=0.5))
    assert spy.call_args_list[0].args[1:] == (2,)
    assert default.primary == pytest.approx(explicit.primary)
