"""
Extrator de referências: K tokens aprendíveis, um por modalidade, que
consultam os segmentos do mapa a cada timestamp e carregam a centerline
(ou combinação de centerlines) que guia cada trajetória.
"""

import logging
import warnings
from typing import List, Tuple

import numpy as np

from forecaster.errors import DegenerateInputWarning
from forecaster.nn import MLP, DiffArray, LayerNorm, Linear, Module, MultiHeadAttention, Parameter, concat, where
from forecaster.nn import functional as F
from forecaster.nn import positional_embedding
from forecaster.nn.layers import kaiming_uniform

logger = logging.getLogger(__name__)


class ReferenceExtractor(Module):
    def __init__(self, config, rng):
        super().__init__()
        self.K = config.K
        self.dim = config.D
        self.tokens = Parameter(kaiming_uniform(rng, (config.K, config.D), config.D))
        self.cross = MultiHeadAttention(config.D, config.heads, rng)
        self.project = MLP(2 * config.D, config.D, rng)
        self.self_attention = MultiHeadAttention(config.D, config.heads, rng)
        self.norm = LayerNorm(config.D)

    def forward(self, map_features, segment_mask, return_weights=False):
        """
        map_features [B x M x T x D] -> referências [B x K x T x D].
        Com `return_weights`, devolve também a atenção token -> segmento
        [B x T x H x K x M].
        """
        segment_mask = np.asarray(segment_mask, dtype=bool)
        B, M, T, D = map_features.shape
        empty = ~segment_mask.any(axis=-1)
        if empty.any():
            message = "extrator de referências sem segmentos válidos; usando os tokens repetidos em T"
            logger.warning(message)
            warnings.warn(message, DegenerateInputWarning)

        per_t = map_features.swapaxes(1, 2)
        tokens = self.tokens.reshape(1, 1, self.K, D).broadcast_to((B, T, self.K, D))
        key_mask = np.broadcast_to(segment_mask[:, None, :], (B, T, M))
        attended, weights = self.cross(tokens, per_t, key_mask=key_mask, allow_empty=True, return_weights=True)

        pooled = F.masked_mean(map_features, np.broadcast_to(segment_mask[:, :, None], (B, M, T)), axis=(1, 2))
        pooled = pooled.reshape(B, 1, 1, D).broadcast_to((B, T, self.K, D))
        pe = DiffArray(positional_embedding(T, D, map_features.dtype)).reshape(1, T, 1, D)
        x = self.project(concat([attended, pooled], axis=-1)) + pe

        x = self.norm(x + self.self_attention(x, x))
        refs = x.swapaxes(1, 2)
        refs = where(empty[:, None, None, None], self.tokens.reshape(1, self.K, 1, D), refs)
        return (refs, weights) if return_weights else refs


class PooledReferences(Module):
    """Ablação sem extrator: Linear(D -> K*D) sobre as features médias dos agentes."""

    def __init__(self, config, rng):
        super().__init__()
        self.K = config.K
        self.expand = Linear(config.D, config.K * config.D, rng)

    def forward(self, agent_features, agent_mask):
        B, A, T, D = agent_features.shape
        pooled = F.masked_mean(agent_features, np.asarray(agent_mask, dtype=bool), axis=1)
        return self.expand(pooled).reshape(B, T, self.K, D).swapaxes(1, 2)


def most_attended_segments(weights, segment_mask, segment_ids) -> List[Tuple]:
    """
    Para cada item e modalidade, o id do segmento com maior atenção média
    (sobre cabeças e tempo). weights: [B x T x H x K x M].
    """
    mean = np.asarray(weights.values if hasattr(weights, "values") else weights).mean(axis=(1, 2))
    mean = np.where(np.asarray(segment_mask, dtype=bool)[:, None, :], mean, -np.inf)
    result = []
    for b, ids in enumerate(segment_ids):
        if not ids:
            result.append(tuple(None for _ in range(mean.shape[1])))
            continue
        result.append(tuple(ids[int(np.argmax(mean[b, k]))] for k in range(mean.shape[1])))
    return result
