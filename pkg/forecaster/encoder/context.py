"""
Encoder completo: camada acoplada -> interação social -> fusão.
"""

import logging
from dataclasses import dataclass

import numpy as np

from forecaster.encoder.coupled_layer import AgentCoupledLayer, MapCoupledLayer
from forecaster.encoder.fusion import SocialInteraction, build_fusion
from forecaster.nn import DiffArray, Module

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EncodedContext:
    agent_features: DiffArray
    map_features: DiffArray
    agent_mask: np.ndarray
    segment_mask: np.ndarray
    fusion_weights: object = None


class Encoder(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.agent_layer = AgentCoupledLayer(config, rng)
        self.map_layer = MapCoupledLayer(config, rng)
        self.agent_social = SocialInteraction(config.D, config.heads, rng)
        self.map_social = SocialInteraction(config.D, config.heads, rng)
        self.fusion = build_fusion(config, rng)

    def forward(self, batch, dtype, return_weights=False):
        agent_valid = np.asarray(batch.agent_valid, dtype=bool)
        segment_mask = np.asarray(batch.segment_mask, dtype=bool)

        agent_cl = self.agent_layer(batch.agents, batch.agent_mask, agent_valid, dtype)
        map_cl = self.map_layer(
            batch.map_points, batch.point_mask, batch.point_count, segment_mask,
            batch.relative, batch.relative_mask, dtype,
        )
        agent_si = self.agent_social(agent_cl, agent_valid)
        map_si = self.map_social(map_cl, segment_mask)

        weights = None
        if self.fusion is None:
            agent_out, map_out = agent_si, map_si
        elif return_weights:
            agent_out, map_out, weights = self.fusion(agent_si, map_si, agent_valid, segment_mask, return_weights=True)
        else:
            agent_out, map_out = self.fusion(agent_si, map_si, agent_valid, segment_mask)
        return EncodedContext(agent_out, map_out, agent_valid, segment_mask, weights)
