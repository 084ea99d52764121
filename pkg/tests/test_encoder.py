import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from forecaster.encoder import BilateralQuery, Encoder, MapCoupledLayer, StackAttentionFusion
from forecaster.encoder.fusion import build_fusion
from forecaster.errors import DegenerateInputWarning
from forecaster.nn import DiffArray, count_parameters, grad_check, precision
from forecaster.scene.features import collate
from tests.builders import TINY_MODEL, tensors_for

AGENT_FIELDS = ("agents", "agent_mask", "agent_valid")
MAP_FIELDS = ("map_points", "point_mask", "point_count", "segment_mask", "relative", "relative_mask")


def permuted(batch, names, order):
    return dataclasses.replace(batch, **{name: getattr(batch, name)[:, order] for name in names})


def encode(batch, config=TINY_MODEL, seed=0):
    return Encoder(config, np.random.default_rng(seed)).forward(batch, np.float64)


def test_encoder_output_shapes(tiny_batch):
    context = encode(tiny_batch)
    assert context.agent_features.shape == (2, TINY_MODEL.A, TINY_MODEL.T, TINY_MODEL.D)
    assert context.map_features.shape == (2, TINY_MODEL.N_m, TINY_MODEL.T, TINY_MODEL.D)


def test_encoder_is_equivariant_to_agent_order(tiny_batch):
    order = np.array([2, 0, 1])
    base = encode(tiny_batch)
    moved = encode(permuted(tiny_batch, AGENT_FIELDS, order))
    np.testing.assert_allclose(moved.agent_features.values, base.agent_features.values[:, order], atol=1e-9)
    np.testing.assert_allclose(moved.map_features.values, base.map_features.values, atol=1e-9)


def test_encoder_is_equivariant_to_segment_order(tiny_batch):
    order = np.array([3, 1, 0, 2])
    base = encode(tiny_batch)
    moved = encode(permuted(tiny_batch, MAP_FIELDS, order))
    np.testing.assert_allclose(moved.map_features.values, base.map_features.values[:, order], atol=1e-9)
    np.testing.assert_allclose(moved.agent_features.values, base.agent_features.values, atol=1e-9)


def test_padding_never_reaches_outputs(scenarios):
    clean = collate([tensors_for(s) for s in scenarios[:2]])
    poisoned = collate([tensors_for(s, pad_value=np.nan) for s in scenarios[:2]])
    base, nan = encode(clean), encode(poisoned)

    assert np.isfinite(nan.agent_features.values).all()
    assert np.isfinite(nan.map_features.values).all()
    np.testing.assert_allclose(nan.agent_features.values, base.agent_features.values, atol=1e-12)
    np.testing.assert_allclose(nan.map_features.values, base.map_features.values, atol=1e-12)


def test_empty_slots_are_zeroed(padded_batch):
    context = encode(padded_batch)
    assert not padded_batch.agent_valid.all() and not padded_batch.segment_mask.all()
    np.testing.assert_array_equal(context.agent_features.values[~padded_batch.agent_valid], 0.0)
    np.testing.assert_array_equal(context.map_features.values[~padded_batch.segment_mask], 0.0)


def test_topology_gate_is_constant_over_time(tiny_batch):
    layer = MapCoupledLayer(TINY_MODEL, np.random.default_rng(0))
    b = tiny_batch
    topo, motion = layer.gates(b.map_points, b.point_mask, b.point_count, b.relative, b.relative_mask, np.float64)
    assert topo.shape == motion.shape == (2, TINY_MODEL.N_m, TINY_MODEL.T, TINY_MODEL.D)
    np.testing.assert_array_equal(topo.values, np.broadcast_to(topo.values[:, :, :1], topo.shape))


@pytest.mark.parametrize("switch", ["use_map_topology", "use_relative_motions"])
def test_disabled_gate_contributes_zeros(tiny_batch, switch):
    layer = MapCoupledLayer(dataclasses.replace(TINY_MODEL, **{switch: False}), np.random.default_rng(0))
    b = tiny_batch
    topo, motion = layer.gates(b.map_points, b.point_mask, b.point_count, b.relative, b.relative_mask, np.float64)
    disabled = topo if switch == "use_map_topology" else motion
    np.testing.assert_array_equal(disabled.values, 0.0)


def _fusion_inputs(rng, B=2, A=3, M=4, T=5, D=8):
    agent_si = DiffArray(rng.normal(size=(B, A, T, D)), requires_grad=True)
    map_si = DiffArray(rng.normal(size=(B, M, T, D)), requires_grad=True)
    agent_mask = np.ones((B, A), dtype=bool)
    segment_mask = np.ones((B, M), dtype=bool)
    agent_mask[1, 2] = False
    segment_mask[0, 3] = False
    return agent_si, map_si, agent_mask, segment_mask


def test_bilateral_query_materializes_affinity_once_per_timestamp(rng, mocker):
    fusion = BilateralQuery(8, rng)
    affinity = mocker.spy(fusion, "_affinity")
    projection = mocker.spy(fusion.w_bq, "forward")

    out_agent, out_map = fusion(*_fusion_inputs(rng))
    assert affinity.call_count == 1
    assert projection.call_count == 2
    assert fusion.affinity_materializations == 5
    assert out_agent.shape == (2, 3, 5, 8) and out_map.shape == (2, 4, 5, 8)


def test_affinity_count_is_exact_across_threads(rng):
    fusion = BilateralQuery(8, rng)
    inputs = _fusion_inputs(rng)

    def run(_):
        with precision("float64"):
            fusion(*inputs)

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(run, range(32)))
    assert fusion.affinity_materializations == 32 * 5


def test_bilateral_query_shares_one_projection(rng):
    names = [name for name, _ in BilateralQuery(8, rng).named_parameters() if name.startswith("w_bq")]
    assert names == ["w_bq.weight"]


def test_bilateral_directions_share_affinity(rng):
    fusion = BilateralQuery(8, rng)
    agent_si, map_si, agent_mask, segment_mask = _fusion_inputs(rng)
    _, _, (weights_agent, weights_map) = fusion(agent_si, map_si, agent_mask, segment_mask, return_weights=True)

    assert weights_agent.shape == (2, 5, 1, 3, 4)
    assert weights_map.shape == (2, 5, 1, 4, 3)
    np.testing.assert_allclose(weights_agent.values[0].sum(axis=-1), 1.0, atol=1e-9)
    np.testing.assert_array_equal(weights_agent.values[0, ..., 3], 0.0)
    np.testing.assert_array_equal(weights_map.values[1, ..., 2], 0.0)


def test_bilateral_temperature_is_positive(rng):
    fusion = BilateralQuery(8, rng, heads=2)
    z = DiffArray(rng.normal(scale=10.0, size=(2, 5, 3, 8)))
    tau = fusion._temperature(z, np.ones((2, 5, 3), dtype=bool), fusion.tau_agent)
    assert tau.shape == (2, 5, 2, 1, 1)
    assert (tau.values > 0.0).all()


def test_bilateral_query_without_segments_warns(rng):
    fusion = BilateralQuery(8, rng)
    agent_si, map_si, agent_mask, _ = _fusion_inputs(rng)
    with pytest.warns(DegenerateInputWarning):
        out_agent, out_map = fusion(agent_si, map_si, agent_mask, np.zeros((2, 4), dtype=bool))
    assert np.isfinite(out_agent.values).all()
    np.testing.assert_array_equal(out_map.values, 0.0)


def test_bilateral_query_gradient(rng):
    fusion = BilateralQuery(4, rng, heads=2)
    agent_si, map_si, agent_mask, segment_mask = _fusion_inputs(rng, T=2, D=4)
    weights = DiffArray(rng.normal(size=(2, 3, 2, 4)))

    def loss():
        out_agent, out_map = fusion(agent_si, map_si, agent_mask, segment_mask)
        return (out_agent * weights).sum() + out_map.sum()

    inputs = [agent_si, map_si, fusion.w_bq.weight, fusion.tau_agent.weight]
    assert grad_check(loss, inputs) < 1e-5


def test_stack_fusion_is_larger_than_bilateral(rng):
    stack = StackAttentionFusion(16, 4, rng)
    bilateral = BilateralQuery(16, rng)
    assert count_parameters(stack) > count_parameters(bilateral)
    out_agent, out_map = stack(*_fusion_inputs(rng, D=16))
    assert out_agent.shape == (2, 3, 5, 16) and out_map.shape == (2, 4, 5, 16)


def test_fusion_selection(rng):
    assert isinstance(build_fusion(TINY_MODEL, rng), BilateralQuery)
    assert isinstance(build_fusion(dataclasses.replace(TINY_MODEL, fusion="stack"), rng), StackAttentionFusion)
    assert build_fusion(dataclasses.replace(TINY_MODEL, use_bilateral_query=False), rng) is None


def test_encoder_without_fusion_returns_social_features(tiny_batch):
    config = dataclasses.replace(TINY_MODEL, use_bilateral_query=False)
    encoder = Encoder(config, np.random.default_rng(0))
    context = encoder.forward(tiny_batch, np.float64)
    assert encoder.fusion is None
    assert context.fusion_weights is None
    assert context.agent_features.shape == (2, TINY_MODEL.A, TINY_MODEL.T, TINY_MODEL.D)
