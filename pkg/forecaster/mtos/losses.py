"""
Termos de perda da estratégia multitarefa.

L = L_primary + L_couple + L_capture, com
L_primary = L_gmm + L_margin + peso * L_aux (heading/velocidade do melhor modo).
Reduções: médias por elemento dentro de cada termo, média no lote.
"""

import logging
from typing import Tuple

import numpy as np

from forecaster.errors import DegenerateLossError, DomainError, LabelError
from forecaster.nn import DiffArray, as_diff, where
from forecaster.nn import functional as F
from models.prediction import LossBreakdown

logger = logging.getLogger(__name__)


def _constant(values, like):
    return DiffArray(np.asarray(values, dtype=like.dtype))


def loss_couple(R, R_gt, segment_mask) -> DiffArray:
    """MSE sobre as entradas válidas (segmentos não mascarados)."""
    R = as_diff(R)
    mask = np.asarray(segment_mask, dtype=bool)
    while mask.ndim < R.ndim:
        mask = mask[..., None]
    mask = np.broadcast_to(mask, R.shape)
    count = int(mask.sum())
    if count == 0:
        raise DegenerateLossError("loss_couple sem entradas válidas")
    target = _constant(np.where(mask, np.asarray(R_gt, dtype=np.float64), 0.0), R)
    diff = R - target
    return where(mask, diff * diff, 0.0).sum() * (1.0 / count)


def loss_capture(J, gt_xy) -> DiffArray:
    """Smooth-L1 de E = J - Y_gt(x, y), média por elemento."""
    J = as_diff(J)
    return F.smooth_l1(J - _constant(gt_xy, J)).mean()


def squared_xy_distance(trajectories, gt) -> DiffArray:
    """Soma sobre os f passos da distância xy ao quadrado: [.. x K]."""
    trajectories = as_diff(trajectories)
    gt_xy = np.asarray(gt, dtype=np.float64)[..., None, :, 0:2]
    diff = trajectories[..., 0:2] - _constant(gt_xy, trajectories)
    return (diff * diff).sum(axis=(-1, -2))


def loss_gmm(trajectories, probs, gt) -> DiffArray:
    """-log sum_i p_i exp(-||r_i - r_gt||^2 / 2), média no lote."""
    probs = as_diff(probs)
    if (probs.values < 0).any():
        raise DomainError("probabilidade negativa na loss_gmm")
    nll = F.mixture_nll(probs, squared_xy_distance(trajectories, gt))
    return nll.mean()


def loss_margin(probs, best_index, margin=None) -> DiffArray:
    """(1/(K-1)) sum_{i != best} max(0, p_i + delta - p_best), delta = 1/K."""
    probs = as_diff(probs)
    K = probs.shape[-1]
    if K == 1:
        return DiffArray(np.zeros((), dtype=probs.dtype))
    delta = 1.0 / K if margin is None else margin

    best = np.asarray(best_index)
    onehot = np.arange(K) == best[..., None]
    p_best = where(onehot, probs, 0.0).sum(axis=-1, keepdims=True)
    hinge = (probs + delta - p_best).relu()
    return (where(onehot, 0.0, hinge).sum(axis=-1) * (1.0 / (K - 1))).mean()


def best_mode_index(trajectories, gt) -> np.ndarray:
    """Modo com menor distância xy no ponto final."""
    values = trajectories.values if isinstance(trajectories, DiffArray) else np.asarray(trajectories)
    gt = np.asarray(gt)
    endpoint = values[..., -1, 0:2] - gt[..., None, -1, 0:2]
    return np.argmin(np.hypot(endpoint[..., 0], endpoint[..., 1]), axis=-1)


def loss_auxiliary(trajectories, best, gt) -> DiffArray:
    """Smooth-L1 em (cos, sin, v) do melhor modo."""
    trajectories = as_diff(trajectories)
    K = trajectories.shape[-3]
    onehot = (np.arange(K) == np.asarray(best)[..., None])[..., None, None]
    chosen = where(onehot, trajectories[..., 2:5], 0.0).sum(axis=-3)
    return F.smooth_l1(chosen - _constant(np.asarray(gt)[..., 2:5], chosen)).mean()


def total_loss(outputs, batch, train_config) -> Tuple[DiffArray, LossBreakdown]:
    """
    Devolve (total diferenciável, LossBreakdown). Termos desligados
    contribuem exatamente 0.
    """
    if batch.gt is None or batch.relative_gt is None:
        raise LabelError("lote sem rótulos futuros")

    best = best_mode_index(outputs.trajectories, batch.gt)
    primary = loss_gmm(outputs.trajectories, outputs.probabilities, batch.gt)
    K = outputs.probabilities.shape[-1]
    primary = primary + loss_margin(outputs.probabilities, best, train_config.margin_for(K))
    if train_config.aux_weight:
        primary = primary + loss_auxiliary(outputs.trajectories, best, batch.gt) * train_config.aux_weight

    total = primary
    couple_value = capture_value = 0.0
    if train_config.use_couple_loss:
        couple = loss_couple(outputs.relative, batch.relative_gt, batch.segment_mask)
        total = total + couple
        couple_value = float(couple.values)
    if train_config.use_capture_loss:
        capture = loss_capture(outputs.motion_prior, np.asarray(batch.gt)[..., 0:2])
        total = total + capture
        capture_value = float(capture.values)

    primary_value = float(primary.values)
    breakdown = LossBreakdown(
        primary=primary_value,
        couple=couple_value,
        capture=capture_value,
        total=primary_value + couple_value + capture_value,
        best_mode_index=tuple(int(i) for i in np.atleast_1d(best)),
    )
    return total, breakdown
