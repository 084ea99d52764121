import math

import numpy as np
import pytest

from forecaster.errors import DegenerateAnchorError, FrameError
from forecaster.scene.normalize import (
    apply_rigid_motion, denormalize_motion, denormalize_scenario, normalize_scenario, recompute_motion,
    select_agents,
)
from models.scenario import FRAME_AGENT, FRAME_WORLD, Scenario
from tests.builders import segment, straight_scenario, tensors_for, track


def test_anchor_goes_to_origin_heading_x():
    states = np.array([
        [5.0, 2.0, 0.0, 1.0, 2.0, 1.0],
        [5.0, 3.0, 0.0, 1.0, 2.0, 1.0],
        [5.0, 4.0, 0.0, 1.0, 2.0, 1.0],
    ])
    target = track(7, states[:, 0:2], heading=(0.0, 1.0), speed=2.0, is_target=True)
    scenario = Scenario("anchor", 2, 1, 0.1, [target], [segment(0, [(5.0, 0.0), (5.0, 10.0)])])

    normalized = normalize_scenario(scenario, 7)

    assert normalized.frame == FRAME_AGENT
    np.testing.assert_allclose(normalized.agent(7).states[1], [0.0, 0.0, 1.0, 0.0, 2.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(normalized.agent(7).states[2, 0:2], [1.0, 0.0], atol=1e-12)
    # a faixa vertical vira horizontal
    np.testing.assert_allclose(normalized.map[0].xy, [[-3.0, 0.0], [7.0, 0.0]], atol=1e-12)


def test_normalize_then_inverse_restores_world(scenario):
    restored = denormalize_scenario(normalize_scenario(scenario, scenario.target_id))

    assert restored.frame == FRAME_WORLD
    for original, back in zip(scenario.agents, restored.agents):
        np.testing.assert_allclose(back.states, original.states, atol=1e-9)
    for original, back in zip(scenario.map, restored.map):
        np.testing.assert_allclose(back.points, original.points, atol=1e-9)


@pytest.mark.parametrize("angle, pivot", [(math.pi / 2, (3.0, -2.0)), (-2.1, (0.0, 0.0)), (0.7, (40.0, 12.0))])
def test_normalized_tensors_ignore_world_motion(scenario, angle, pivot):
    moved = apply_rigid_motion(scenario, angle, translation=(7.5, -3.0), pivot=pivot)

    a, b = tensors_for(scenario), tensors_for(moved)

    np.testing.assert_allclose(b.agents, a.agents, atol=1e-6)
    np.testing.assert_allclose(b.map_points, a.map_points, atol=1e-6)
    np.testing.assert_allclose(b.relative, a.relative, atol=1e-6)
    np.testing.assert_allclose(b.gt, a.gt, atol=1e-6)


def test_normalize_rejects_agent_frame(scenario):
    normalized = normalize_scenario(scenario, scenario.target_id)
    with pytest.raises(FrameError):
        normalize_scenario(normalized, scenario.target_id)


def test_missing_or_invalid_anchor():
    scenario = straight_scenario()
    with pytest.raises(DegenerateAnchorError):
        normalize_scenario(scenario, "ghost")

    valid = np.ones(scenario.T)
    valid[scenario.h - 1] = 0.0
    broken = Scenario("broken", scenario.h, scenario.f, scenario.dt,
                      [track(0, scenario.agents[0].states[:, 0:2], valid=valid)], scenario.map, target_id=0)
    with pytest.raises(DegenerateAnchorError):
        normalize_scenario(broken, 0)


def test_denormalize_motion_inverts_transform(scenario):
    normalized = normalize_scenario(scenario, scenario.target_id)
    local = normalized.agent(scenario.target_id).states[:, 0:5]
    world = denormalize_motion(normalized.transform, local)
    np.testing.assert_allclose(world, scenario.target.states[:, 0:5], atol=1e-9)


def test_recompute_motion_headings_and_speed():
    states = np.zeros((4, 6))
    states[:, 0:2] = [[0.0, 0.0], [0.0, 1.0], [0.0, 2.0], [0.0, 2.0]]
    states[:, 5] = 1.0

    out = recompute_motion(states, dt=0.5)

    np.testing.assert_allclose(out[:3, 2:4], [[0.0, 1.0]] * 3)
    np.testing.assert_allclose(out[:3, 4], [2.0, 2.0, 2.0])
    # parado: herda o último heading válido
    np.testing.assert_allclose(out[3, 2:5], [0.0, 1.0, 0.0])


def test_recompute_motion_without_heading_defaults_to_x():
    states = np.zeros((3, 6))
    states[:, 5] = 1.0
    out = recompute_motion(states, dt=0.1)
    np.testing.assert_allclose(out[:, 2:4], [[1.0, 0.0]] * 3)


def test_select_agents_nearest_first_ties_by_id():
    xy = np.zeros((3, 2))
    agents = [
        track(0, xy, is_target=True),
        track(5, xy + [4.0, 0.0]),
        track(2, xy + [0.0, 4.0]),
        track(9, xy + [1.0, 0.0]),
    ]
    scenario = Scenario("sel", 2, 1, 0.1, agents, [])

    ordered = [t.id for t in select_agents(scenario, 0, capacity=2)]

    assert ordered == [0, 9, 2]
