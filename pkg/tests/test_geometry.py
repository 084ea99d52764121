import math

import numpy as np
import pytest

from forecaster.errors import CapacityError, DegenerateSegmentError, EmptyTrackError, LabelError
from forecaster.geometry import (
    build_coupled_map, closest_point_index, label_future_relative_motions, relative_motion,
)
from forecaster.scene.generator import generate_synthetic_scenario
from tests.builders import segment, track


def _scan_closest(points, position):
    best, best_d = 0, math.inf
    for i, (x, y) in enumerate(points):
        d = math.hypot(position[0] - x, position[1] - y)
        if d < best_d:
            best, best_d = i, d
    return best


def _scan_phi(states, segments):
    out = np.zeros((len(segments), len(states), 3))
    for i, seg in enumerate(segments):
        for t, row in enumerate(states):
            if row[5] < 0.5:
                continue
            j = _scan_closest(seg.xy, row[0:2])
            dx, dy = row[0] - seg.xy[j, 0], row[1] - seg.xy[j, 1]
            dist = math.hypot(dx, dy)
            out[i, t] = (dist, 1.0, 0.0) if dist < 1e-9 else (dist, dx / dist, dy / dist)
    return out


@pytest.mark.parametrize("position, expected", [((0.0, 0.0), 0), ((1.1, 0.5), 1), ((5.0, 0.0), 2)])
def test_closest_point_examples(position, expected):
    assert closest_point_index(segment(0, [(0, 0), (1, 0), (2, 0)]), position) == expected


def test_closest_point_tie_takes_lowest_index():
    assert closest_point_index(segment(0, [(0, 0), (1, 0)]), (0.5, 1.0)) == 0


def test_closest_point_empty_segment():
    with pytest.raises(DegenerateSegmentError):
        closest_point_index(segment(0, np.zeros((0, 2))), (0.0, 0.0))


def test_closest_point_matches_scan(rng):
    for _ in range(1000):
        points = rng.uniform(-20, 20, size=(rng.integers(1, 10), 2))
        position = rng.uniform(-25, 25, size=2)
        assert closest_point_index(segment(0, points), position) == _scan_closest(points, position)


def test_relative_motion_examples():
    segments = [segment(0, [(0.0, 0.0), (10.0, 0.0)])]
    on_point = relative_motion(track(0, [(10.0, 0.0)]).states, segments)
    np.testing.assert_allclose(on_point[0, 0], [0.0, 1.0, 0.0])

    off_point = relative_motion(track(0, [(3.0, 4.0)]).states, segments)
    np.testing.assert_allclose(off_point[0, 0], [5.0, 0.6, 0.8])


def test_nearer_segment_has_smaller_distance():
    a = segment("a", [(0.0, 1.0), (5.0, 1.0)])
    b = segment("b", [(0.0, 6.0), (5.0, 6.0)])
    phi = relative_motion(track(0, [(2.0, 0.0)]).states, [a, b])
    assert phi[0, 0, 0] < phi[1, 0, 0]


def test_invalid_timestamps_are_zero():
    states = track(0, [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)], valid=[1, 0, 1]).states
    phi = relative_motion(states, [segment(0, [(0.0, 0.0)])])
    np.testing.assert_array_equal(phi[0, 1], [0.0, 0.0, 0.0])
    assert phi[0, 0, 0] > 0


def test_relative_motion_errors():
    with pytest.raises(EmptyTrackError):
        relative_motion(track(0, [(1.0, 1.0)], valid=[0]).states, [segment(0, [(0.0, 0.0)])])
    with pytest.raises(DegenerateSegmentError):
        relative_motion(track(0, [(1.0, 1.0)]).states, [])


def test_phi_rotation_and_translation(rng):
    for _ in range(50):
        points = rng.uniform(-10, 10, size=(6, 2))
        xy = rng.uniform(-10, 10, size=(4, 2))
        theta = rng.uniform(-math.pi, math.pi)
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        shift = rng.uniform(-50, 50, size=2)

        base = relative_motion(track(0, xy).states, [segment(0, points)])
        rotated = relative_motion(track(0, xy @ rot.T).states, [segment(0, points @ rot.T)])
        moved = relative_motion(track(0, xy + shift).states, [segment(0, points + shift)])

        np.testing.assert_allclose(rotated[..., 0], base[..., 0], atol=1e-6)
        np.testing.assert_allclose(rotated[..., 1:3], base[..., 1:3] @ rot.T, atol=1e-6)
        np.testing.assert_allclose(moved, base, atol=1e-9)
        np.testing.assert_allclose(np.hypot(base[..., 1], base[..., 2]), 1.0, atol=1e-6)


def test_phi_matches_scan_on_generated_scenes(tiny_generator):
    for seed in range(100):
        scenario = generate_synthetic_scenario(seed, tiny_generator)
        target = scenario.target
        labels = label_future_relative_motions(target.states[scenario.h:], scenario.map)
        np.testing.assert_allclose(labels, _scan_phi(target.states[scenario.h:], scenario.map), atol=1e-12)


def test_coupled_map_contract(scenario, tiny_model_config):
    h, T = scenario.h, scenario.T
    coupled = build_coupled_map(scenario.target, scenario.map, h, capacity=tiny_model_config.N_m)

    assert coupled.relative.shape == (tiny_model_config.N_m, T, 3)
    np.testing.assert_array_equal(coupled.future_mask, np.arange(T) >= h)
    assert not coupled.valid[:, h:].any()
    np.testing.assert_array_equal(coupled.relative[:, h:], 0.0)
    np.testing.assert_allclose(
        coupled.relative[:len(scenario.map), :h], relative_motion(scenario.target.states[:h], scenario.map),
    )


def test_coupled_map_padding_rows_invalid():
    segments = [segment(0, [(0.0, 0.0), (2.0, 0.0)])]
    target = track(0, [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)])
    coupled = build_coupled_map(target, segments, h=2, capacity=3)
    assert coupled.valid[0, :2].all()
    assert not coupled.valid[1:].any()
    np.testing.assert_array_equal(coupled.relative[1:], 0.0)

    with pytest.raises(CapacityError):
        build_coupled_map(target, segments * 4, h=2, capacity=3)


def test_labels_on_straight_lane_hug_centerline():
    lane = segment(0, [(x, 0.0) for x in np.arange(0.0, 30.0, 0.1)])
    xs = np.linspace(2.0, 20.0, 8)
    future = track(0, np.stack([xs, 0.2 * np.sin(xs)], axis=-1)).states
    labels = label_future_relative_motions(future, [lane])
    assert labels[0, :, 0].max() <= math.hypot(0.05, 0.2) + 1e-6


def test_single_future_state_reduces_to_phi():
    segments = [segment(0, [(0.0, 0.0), (3.0, 0.0)]), segment(1, [(0.0, 5.0)])]
    state = track(0, [(1.0, 2.0)]).states
    np.testing.assert_array_equal(label_future_relative_motions(state, segments), relative_motion(state, segments))


def test_label_requires_valid_future():
    future = track(0, [(0.0, 0.0), (1.0, 0.0)], valid=[1, 0]).states
    with pytest.raises(LabelError):
        label_future_relative_motions(future, [segment(0, [(0.0, 0.0)])])
