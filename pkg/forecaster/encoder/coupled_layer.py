"""
Camada acoplada: ramo do agente e ramo do mapa acoplado.

Ramo do agente: MLP sobre o histórico (futuro zerado + canal de flag) com
embedding posicional por timestamp. Ramo do mapa: TopoGate (MSN sobre os
pontos de cada segmento, estado final repetido T vezes) e MotionGate (MSN
temporal sobre os movimentos relativos), fundidos por um MLP 2D -> D.
"""

import logging
from typing import Tuple

import numpy as np

from forecaster.nn import MLP, MSN, DiffArray, Module, concat, positional_embedding, where

logger = logging.getLogger(__name__)


def _clean(values, mask, dtype):
    """Zera posições inválidas antes de entrar no registro de computação."""
    mask = np.asarray(mask, dtype=bool)
    return DiffArray(np.where(mask[..., None], values, 0.0).astype(dtype))


def _pe(length, dim, dtype):
    return DiffArray(positional_embedding(length, dim, dtype))


class AgentCoupledLayer(Module):
    def __init__(self, config, rng, n_in=6):
        super().__init__()
        self.dim = config.D
        self.mlp = MLP(n_in, config.D, rng)

    def forward(self, agents, agent_mask, agent_valid, dtype):
        """agents [B x A x T x 6] -> [B x A x T x D]; slots vazios saem zerados."""
        x = _clean(agents, agent_mask, dtype)
        out = self.mlp(x) + _pe(x.shape[-2], self.dim, dtype)
        return where(np.asarray(agent_valid, dtype=bool)[..., None, None], out, 0.0)


class TopoGate(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.msn = MSN(config.d_m, config.D, rng)

    def forward(self, points, point_mask, point_count, T):
        """points [B x M x P x d_m] -> [B x M x T x D], idêntico ao longo de T."""
        sequence = self.msn(points, point_mask)
        P = points.shape[-2]
        last = np.arange(P) == (np.asarray(point_count)[..., None] - 1)
        final = where(last[..., None], sequence, 0.0).sum(axis=-2)
        B, M, D = final.shape
        return final.reshape(B, M, 1, D).broadcast_to((B, M, T, D))


class MotionGate(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.dim = config.D
        self.encode = MLP(config.d_r, config.D, rng)
        self.msn = MSN(config.D, config.D, rng)

    def forward(self, relative, relative_mask):
        """relative [B x M x T x 3] -> [B x M x T x D]; o futuro entra como zeros."""
        mask = np.asarray(relative_mask, dtype=bool)[..., None]
        encoded = self.encode(relative) + _pe(relative.shape[-2], self.dim, relative.dtype)
        return self.msn(where(mask, encoded, 0.0))


class MapCoupledLayer(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.dim = config.D
        self.use_map_topology = config.use_map_topology
        self.use_relative_motions = config.use_relative_motions
        if config.use_map_topology:
            self.topo_gate = TopoGate(config, rng)
        if config.use_relative_motions:
            self.motion_gate = MotionGate(config, rng)
        self.fuse = MLP(2 * config.D, config.D, rng)

    def gates(self, map_points, point_mask, point_count, relative, relative_mask, dtype) -> Tuple[DiffArray, DiffArray]:
        B, M = map_points.shape[:2]
        T = relative.shape[-2]
        zeros = DiffArray(np.zeros((B, M, T, self.dim), dtype=dtype))

        topo = zeros
        if self.use_map_topology:
            topo = self.topo_gate(_clean(map_points, point_mask, dtype), point_mask, point_count, T)
        motion = zeros
        if self.use_relative_motions:
            motion = self.motion_gate(_clean(relative, relative_mask, dtype), relative_mask)
        return topo, motion

    def forward(self, map_points, point_mask, point_count, segment_mask, relative, relative_mask, dtype):
        topo, motion = self.gates(map_points, point_mask, point_count, relative, relative_mask, dtype)
        out = self.fuse(concat([topo, motion], axis=-1))
        return where(np.asarray(segment_mask, dtype=bool)[..., None, None], out, 0.0)
