"""
Cabeças do decoder: movimento acoplado (R), captura de movimento (J),
regressão condicionada ao mapa (Y) e probabilidades P(Y).
"""

import logging

import numpy as np

from forecaster.nn import LSTM, MLP, LayerNorm, Linear, Module, MultiHeadAttention, concat, where
from forecaster.nn import functional as F

logger = logging.getLogger(__name__)

RENORM_EPS = 1e-12


class CoupledMotionHead(Module):
    """R = MLP(SelfAttention(F_CM)): movimentos relativos futuros por segmento."""

    def __init__(self, config, rng):
        super().__init__()
        self.f = config.f
        self.attention = MultiHeadAttention(config.D, config.heads, rng)
        self.norm = LayerNorm(config.D)
        self.mlp = MLP(config.D, config.d_r, rng)

    def forward(self, map_features, segment_mask):
        """[B x M x T x D] -> [B x M x f x 3]; segmentos vazios zerados."""
        segment_mask = np.asarray(segment_mask, dtype=bool)
        B, M, T, D = map_features.shape
        per_t = map_features.swapaxes(1, 2)
        key_mask = np.broadcast_to(segment_mask[:, None, :], (B, T, M))
        y = self.norm(per_t + self.attention(per_t, per_t, key_mask=key_mask, allow_empty=True))
        out = self.mlp(y).swapaxes(1, 2)[:, :, T - self.f:, :]
        return where(segment_mask[:, :, None, None], out, 0.0)


class MotionCaptureHead(Module):
    """J = MLP(F_A) só com a linha do alvo (índice 0)."""

    def __init__(self, config, rng):
        super().__init__()
        self.f = config.f
        self.mlp = MLP(config.D, 2, rng)

    def forward(self, agent_features):
        T = agent_features.shape[2]
        return self.mlp(agent_features[:, 0, T - self.f:, :])


class MapConditionedRegression(Module):
    """
    Z = [MLP(R), MLP(J)] pooled sobre os segmentos, concatenado com a fatia
    futura de cada referência, MLP e LSTM ao longo dos f passos. A saída
    tem 5 canais (x, y, cos, sin, v) com (cos, sin) renormalizados.
    """

    def __init__(self, config, rng):
        super().__init__()
        self.f = config.f
        half = config.D // 2
        self.encode_relative = MLP(config.d_r, half, rng)
        self.encode_prior = MLP(2, config.D - half, rng)
        self.condition = MLP(2 * config.D, config.D, rng)
        self.lstm = LSTM(config.D, config.D, rng)
        self.output = Linear(config.D, 5, rng)

    def forward(self, refs, relative, motion_prior, segment_mask):
        segment_mask = np.asarray(segment_mask, dtype=bool)
        B, K, T, D = refs.shape
        M = relative.shape[1]

        z_relative = self.encode_relative(relative)
        z_prior = self.encode_prior(motion_prior)
        z_prior = z_prior.reshape(B, 1, self.f, z_prior.shape[-1]).broadcast_to((B, M, self.f, z_prior.shape[-1]))
        z = concat([z_relative, z_prior], axis=-1)
        pooled = F.masked_mean(z, segment_mask, axis=1)

        pooled = pooled.reshape(B, 1, self.f, D).broadcast_to((B, K, self.f, D))
        future_refs = refs[:, :, T - self.f:, :]
        decoded = self.output(self.lstm(self.condition(concat([future_refs, pooled], axis=-1))))

        cos, sin = decoded[..., 2:3], decoded[..., 3:4]
        norm = (cos * cos + sin * sin + RENORM_EPS).sqrt()
        return concat([decoded[..., 0:2], cos / norm, sin / norm, decoded[..., 4:5]], axis=-1)


class ProbabilityHead(Module):
    """P(Y) = softmax sobre K de MLP(média temporal das referências)."""

    def __init__(self, config, rng):
        super().__init__()
        self.mlp = MLP(config.D, 1, rng, hidden=config.D)

    def forward(self, refs):
        logits = self.mlp(refs.mean(axis=2))
        B, K, _ = logits.shape
        return F.softmax(logits.reshape(B, K), axis=-1)
