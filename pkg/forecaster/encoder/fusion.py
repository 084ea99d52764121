"""
Interação social dentro de cada domínio e fusão de contexto entre
agentes e mapa acoplado.

Todas as entradas chegam como [B x N x T x D] (N = agentes ou segmentos)
e a atenção roda por timestamp ao longo do eixo das entidades.
"""

import logging
import math
import threading
import warnings
from typing import Optional

import numpy as np

from forecaster.errors import DegenerateInputWarning
from forecaster.nn import MLP, DiffArray, LayerNorm, Linear, Module, ModuleList, MultiHeadAttention, where
from forecaster.nn import functional as F

logger = logging.getLogger(__name__)


def _per_timestamp(x):
    """[B x N x T x D] -> [B x T x N x D]"""
    return x.swapaxes(1, 2)


def _entity_mask(mask, T):
    """[B x N] -> [B x T x N]"""
    mask = np.asarray(mask, dtype=bool)
    return np.broadcast_to(mask[:, None, :], (mask.shape[0], T, mask.shape[1]))


def _keep(x, mask):
    return where(np.asarray(mask, dtype=bool)[..., None, None], x, 0.0)


class SocialInteraction(Module):
    """Self-attention por timestamp ao longo das entidades + resíduo, LayerNorm e MLP."""

    def __init__(self, dim, heads, rng):
        super().__init__()
        self.attention = MultiHeadAttention(dim, heads, rng)
        self.norm = LayerNorm(dim)
        self.mlp = MLP(dim, dim, rng)

    def forward(self, x, mask):
        T = x.shape[2]
        xt = _per_timestamp(x)
        attended = self.attention(xt, xt, key_mask=_entity_mask(mask, T), allow_empty=True)
        out = self.mlp(self.norm(xt + attended))
        return _keep(_per_timestamp(out), mask)


class BilateralQuery(Module):
    """
    Fusão bilateral: uma única projeção W_bq gera as consultas dos dois
    domínios e uma única matriz de afinidade por timestamp serve às duas
    direções (agente -> mapa e mapa -> agente, pela transposta).

    A consulta média de cada domínio vira uma temperatura escalar positiva
    por cabeça, tau = softplus(w . mean(q) / sqrt(D) + b), que multiplica a
    afinidade escalonada antes do softmax.
    """

    def __init__(self, dim, rng, heads=1):
        super().__init__()
        self.dim = dim
        self.heads = heads
        self.w_bq = Linear(dim, dim, rng, bias=False)
        self.value_agent = Linear(dim, dim, rng)
        self.value_map = Linear(dim, dim, rng)
        self.tau_agent = Linear(dim, heads, rng)
        self.tau_map = Linear(dim, heads, rng)
        self.norm_agent = LayerNorm(dim)
        self.norm_map = LayerNorm(dim)
        self.mlp_agent = MLP(dim, dim, rng)
        self.mlp_map = MLP(dim, dim, rng)
        self.affinity_materializations = 0
        # evaluate() chama o forward de várias threads
        self._counter_lock = threading.Lock()

    def _affinity(self, z_agent, z_map):
        """M_aff [B x T x H x A x M], materializada uma vez por timestamp."""
        with self._counter_lock:
            self.affinity_materializations += z_agent.shape[1]
        return F.split_heads(z_agent, self.heads) @ F.split_heads(z_map, self.heads).swapaxes(-1, -2)

    def _temperature(self, z, mask, layer):
        """Temperatura [B x T x H x 1 x 1] a partir da consulta média válida."""
        mean_q = F.masked_mean(z, mask, axis=2) * (1.0 / math.sqrt(self.dim))
        tau = layer(mean_q).softplus()
        B, T, H = tau.shape
        return tau.reshape(B, T, H, 1, 1)

    def forward(self, agent_si, map_si, agent_mask, segment_mask, return_weights=False):
        agent_mask = np.asarray(agent_mask, dtype=bool)
        segment_mask = np.asarray(segment_mask, dtype=bool)
        B, A, T, D = agent_si.shape
        M = map_si.shape[1]

        if (~segment_mask.any(axis=-1)).any():
            message = "bilateral query sem segmentos válidos; agentes seguem pelo caminho residual"
            logger.warning(message)
            warnings.warn(message, DegenerateInputWarning)

        xa, xm = _per_timestamp(agent_si), _per_timestamp(map_si)
        z_agent, z_map = self.w_bq(xa), self.w_bq(xm)
        affinity = self._affinity(z_agent, z_map) * (1.0 / math.sqrt(D // self.heads))

        seg_keys = np.broadcast_to(segment_mask[:, None, None, None, :], (B, T, self.heads, A, M))
        agent_keys = np.broadcast_to(agent_mask[:, None, None, None, :], (B, T, self.heads, M, A))
        weights_agent = F.softmax(
            affinity * self._temperature(z_agent, _entity_mask(agent_mask, T), self.tau_agent),
            axis=-1, mask=seg_keys, allow_empty=True,
        )
        weights_map = F.softmax(
            affinity.swapaxes(-1, -2) * self._temperature(z_map, _entity_mask(segment_mask, T), self.tau_map),
            axis=-1, mask=agent_keys, allow_empty=True,
        )

        h_agent = F.merge_heads(weights_agent @ F.split_heads(self.value_map(xm), self.heads))
        h_map = F.merge_heads(weights_map @ F.split_heads(self.value_agent(xa), self.heads))

        out_agent = _keep(_per_timestamp(self.mlp_agent(self.norm_agent(h_agent + xa))), agent_mask)
        out_map = _keep(_per_timestamp(self.mlp_map(self.norm_map(h_map + xm))), segment_mask)
        if return_weights:
            return out_agent, out_map, (weights_agent, weights_map)
        return out_agent, out_map


class _AttentionBlock(Module):
    def __init__(self, dim, heads, rng):
        super().__init__()
        self.attention = MultiHeadAttention(dim, heads, rng)
        self.norm1 = LayerNorm(dim)
        self.mlp = MLP(dim, dim, rng)
        self.norm2 = LayerNorm(dim)

    def forward(self, x, context, context_mask):
        """x [B x T x N x D] atende a context [B x T x L x D]."""
        T = x.shape[1]
        attended = self.attention(x, context, key_mask=_entity_mask(context_mask, T), allow_empty=True)
        y = self.norm1(x + attended)
        return self.norm2(y + self.mlp(y))


class StackAttentionFusion(Module):
    """
    Linha de base empilhada: atenção cruzada agente -> mapa e mapa -> agente,
    seguida de 4 camadas de self-attention alternando os domínios.
    """

    ORDER = ("agent", "map", "agent", "map")

    def __init__(self, dim, heads, rng):
        super().__init__()
        self.cross_agent = _AttentionBlock(dim, heads, rng)
        self.cross_map = _AttentionBlock(dim, heads, rng)
        self.self_layers = ModuleList(_AttentionBlock(dim, heads, rng) for _ in self.ORDER)

    def forward(self, agent_si, map_si, agent_mask, segment_mask, return_weights=False):
        if (~np.asarray(segment_mask, dtype=bool).any(axis=-1)).any():
            message = "fusão empilhada sem segmentos válidos; agentes seguem pelo caminho residual"
            logger.warning(message)
            warnings.warn(message, DegenerateInputWarning)

        xa, xm = _per_timestamp(agent_si), _per_timestamp(map_si)
        xa_next = self.cross_agent(xa, xm, segment_mask)
        xm = self.cross_map(xm, xa, agent_mask)
        xa = xa_next
        for domain, layer in zip(self.ORDER, self.self_layers):
            if domain == "agent":
                xa = layer(xa, xa, agent_mask)
            else:
                xm = layer(xm, xm, segment_mask)
        out_agent = _keep(_per_timestamp(xa), agent_mask)
        out_map = _keep(_per_timestamp(xm), segment_mask)
        return (out_agent, out_map, None) if return_weights else (out_agent, out_map)


def build_fusion(config, rng) -> Optional[Module]:
    """Estágio de fusão conforme a config; None quando a bilateral query está desligada."""
    if config.fusion == "stack":
        return StackAttentionFusion(config.D, config.heads, rng)
    if not config.use_bilateral_query:
        return None
    return BilateralQuery(config.D, rng, heads=config.bq_heads)
