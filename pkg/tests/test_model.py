import dataclasses
import math

import numpy as np
import pytest

from forecaster.model import CoupledForecaster, predict_scenario
from forecaster.mtos.losses import total_loss
from forecaster.nn import grad_check
from forecaster.scene.features import collate
from forecaster.scene.generator import generate_synthetic_scenario
from forecaster.scene.normalize import apply_rigid_motion
from models.scenario import FRAME_WORLD
from tests.builders import TINY_DATA, TINY_MODEL, TINY_TRAIN, generator_for, tensors_for

ABLATIONS = [
    {},
    {"fusion": "stack"},
    {"use_bilateral_query": False},
    {"use_reference_extractor": False},
    {"use_map_topology": False},
    {"use_relative_motions": False},
]


@pytest.mark.parametrize("changes", ABLATIONS, ids=lambda c: ",".join(c) or "full")
def test_forward_shapes(tiny_batch, changes):
    config = dataclasses.replace(TINY_MODEL, **changes)
    outputs = CoupledForecaster(config, seed=0)(tiny_batch)
    assert outputs.trajectories.shape == (2, config.K, config.f, 5)
    assert outputs.probabilities.shape == (2, config.K)
    assert outputs.relative.shape == (2, config.N_m, config.f, 3)
    assert outputs.motion_prior.shape == (2, config.f, 2)
    np.testing.assert_allclose(outputs.probabilities.values.sum(axis=-1), 1.0, atol=1e-12)
    for name, tensor in outputs.named_tensors():
        assert np.isfinite(tensor.values).all(), name


def test_forward_accepts_single_item(scenario):
    outputs = CoupledForecaster(TINY_MODEL, seed=0)(tensors_for(scenario))
    assert outputs.trajectories.shape == (1, TINY_MODEL.K, TINY_MODEL.f, 5)


def test_padding_sentinel_never_reaches_outputs():
    model = CoupledForecaster(TINY_MODEL, seed=0)
    scenes = []
    for i in range(100):
        data = dataclasses.replace(TINY_DATA, lanes=1 + i % 2, agents=1 + i % 3)
        scenes.append(generate_synthetic_scenario(i, generator_for(data=data)))

    clean = model(collate([tensors_for(s) for s in scenes]))
    poisoned = model(collate([tensors_for(s, pad_value=np.nan) for s in scenes]))
    for (name, a), (_, b) in zip(clean.named_tensors(), poisoned.named_tensors()):
        assert np.isfinite(b.values).all(), name
        np.testing.assert_allclose(b.values, a.values, atol=1e-12, err_msg=name)


def test_same_seed_same_model(tiny_batch):
    a = CoupledForecaster(TINY_MODEL, seed=4)(tiny_batch)
    b = CoupledForecaster(TINY_MODEL, seed=4)(tiny_batch)
    c = CoupledForecaster(TINY_MODEL, seed=5)(tiny_batch)
    np.testing.assert_array_equal(a.trajectories.values, b.trajectories.values)
    assert not np.array_equal(a.trajectories.values, c.trajectories.values)


def test_fusion_parameter_counts():
    bilateral = CoupledForecaster(TINY_MODEL)
    stack = CoupledForecaster(dataclasses.replace(TINY_MODEL, fusion="stack"))
    none = CoupledForecaster(dataclasses.replace(TINY_MODEL, use_bilateral_query=False))
    assert stack.fusion_param_count > bilateral.fusion_param_count > 0
    assert none.fusion_param_count == 0
    assert bilateral.param_count - bilateral.fusion_param_count == none.param_count


def test_parameter_names_are_unique():
    names = [name for name, _ in CoupledForecaster(TINY_MODEL).named_parameters()]
    assert len(names) == len(set(names))
    assert "encoder.fusion.w_bq.weight" in names


def test_full_loss_gradient(tiny_batch):
    model = CoupledForecaster(TINY_MODEL, seed=0)
    inputs = [
        model.encoder.agent_layer.mlp.fc1.weight,
        model.encoder.map_layer.fuse.fc2.bias,
        model.encoder.fusion.w_bq.weight,
        model.reference.tokens,
        model.regression.output.weight,
        model.probability.mlp.fc2.weight,
    ]
    error = grad_check(lambda: total_loss(model(tiny_batch), tiny_batch, TINY_TRAIN)[0], inputs,
                       samples=6, rng=np.random.default_rng(0))
    assert error < 1e-4


def test_predict_target_in_world_frame(scenario):
    model = CoupledForecaster(TINY_MODEL, seed=0)
    (prediction,) = predict_scenario(model, scenario)
    assert prediction.frame == FRAME_WORLD
    assert prediction.agent_id == scenario.target_id
    assert prediction.trajectories.shape == (TINY_MODEL.K, TINY_MODEL.f, 5)
    assert prediction.probabilities.sum() == pytest.approx(1.0)
    assert prediction.references is None


def test_predict_joint_covers_agents_present_at_anchor(scenario):
    model = CoupledForecaster(TINY_MODEL, seed=0)
    predictions = predict_scenario(model, scenario, joint=True)
    expected = [t.id for t in scenario.agents if t.valid[scenario.h - 1]]
    assert [p.agent_id for p in predictions] == expected


def test_predict_explain_names_map_segments(scenario):
    model = CoupledForecaster(TINY_MODEL, seed=0)
    (prediction,) = predict_scenario(model, scenario, explain=True)
    assert len(prediction.references) == TINY_MODEL.K
    assert set(prediction.references) <= {seg.id for seg in scenario.map}


def test_predict_is_equivariant_to_rigid_motion(scenario):
    model = CoupledForecaster(TINY_MODEL, seed=0)
    angle, shift = 0.7, np.array([5.0, -3.0])
    (base,) = predict_scenario(model, scenario)
    (moved,) = predict_scenario(model, apply_rigid_motion(scenario, angle, translation=shift))

    rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    expected_xy = base.trajectories[..., 0:2] @ rotation.T + shift
    expected_heading = base.trajectories[..., 2:4] @ rotation.T
    np.testing.assert_allclose(moved.trajectories[..., 0:2], expected_xy, atol=1e-4)
    np.testing.assert_allclose(moved.trajectories[..., 2:4], expected_heading, atol=1e-4)
    np.testing.assert_allclose(moved.trajectories[..., 4], base.trajectories[..., 4], atol=1e-4)
    np.testing.assert_allclose(moved.probabilities, base.probabilities, atol=1e-4)
