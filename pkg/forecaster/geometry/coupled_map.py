"""
Acoplamento explícito mapa-agente.

phi(s, M): para cada segmento i e timestamp t, o vetor do ponto mais próximo
m_i(l) até o agente, codificado como (dist, cos beta, sin beta).
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from forecaster.errors import CapacityError, DegenerateSegmentError, EmptyTrackError, LabelError
from models.scenario import MapSegment, MotionState

logger = logging.getLogger(__name__)

ZERO_DIST = 1e-9
D_R = 3


@dataclass(frozen=True, eq=False)
class CoupledMap:
    """
    Attributes:
        relative: [N_m x T x d_r] movimentos relativos (zeros onde inválido)
        valid: [N_m x T] máscara de validade
        topology: segmentos do mapa do cenário
        future_mask: [T], True nos índices >= h
    """

    relative: np.ndarray
    valid: np.ndarray
    topology: Tuple[MapSegment, ...]
    future_mask: np.ndarray


def _as_xy(segment):
    if isinstance(segment, MapSegment):
        return segment.xy
    return np.asarray(segment, dtype=np.float64)[:, :2]


def _as_states(states):
    """Aceita array [T x 6] ou sequência de MotionState."""
    if len(states) and isinstance(states[0], MotionState):
        return np.array([s.as_row() for s in states], dtype=np.float64)
    return np.asarray(states, dtype=np.float64).reshape(-1, 6)


def closest_point_index(segment, position) -> int:
    """Índice do ponto válido mais próximo; empate fica com o menor índice."""
    xy = _as_xy(segment)
    if xy.shape[0] == 0:
        raise DegenerateSegmentError("segmento sem pontos válidos")
    diff = np.asarray(position, dtype=np.float64)[None, :] - xy
    d2 = diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1]
    return int(np.argmin(d2))


def _pad_points(segments):
    counts = [_as_xy(seg).shape[0] for seg in segments]
    if any(c == 0 for c in counts):
        raise DegenerateSegmentError("segmento sem pontos válidos")
    P = max(counts)
    points = np.zeros((len(segments), P, 2))
    mask = np.zeros((len(segments), P), dtype=bool)
    for i, seg in enumerate(segments):
        points[i, :counts[i]] = _as_xy(seg)
        mask[i, :counts[i]] = True
    return points, mask


def relative_motion(target_states, segments) -> np.ndarray:
    """
    phi para todos os segmentos e timestamps: array [N x T' x 3].
    Timestamps inválidos saem como zeros mascarados.
    """
    states = _as_states(target_states)
    if states.shape[0] < 1:
        raise EmptyTrackError("trilha vazia")
    valid = states[:, 5] > 0.5
    if not valid.any():
        raise EmptyTrackError("nenhum estado válido na trilha do alvo")
    if len(segments) == 0:
        raise DegenerateSegmentError("mapa sem segmentos")

    points, mask = _pad_points(segments)
    pos = states[:, 0:2]

    # [N, T, P]
    diff = pos[None, :, None, :] - points[:, None, :, :]
    d2 = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]
    d2 = np.where(mask[:, None, :], d2, np.inf)
    closest = np.argmin(d2, axis=-1)

    nearest = np.take_along_axis(points, closest[..., None].repeat(2, axis=-1), axis=1)
    vec = pos[None, :, :] - nearest
    dist = np.hypot(vec[..., 0], vec[..., 1])

    degenerate = dist < ZERO_DIST
    safe = np.where(degenerate, 1.0, dist)
    cos_dir = np.where(degenerate, 1.0, vec[..., 0] / safe)
    sin_dir = np.where(degenerate, 0.0, vec[..., 1] / safe)

    out = np.stack([dist, cos_dir, sin_dir], axis=-1)
    return np.where(valid[None, :, None], out, 0.0)


def build_coupled_map(target, segments, h, capacity=None) -> CoupledMap:
    """
    C_M = {r_H, M}: movimentos relativos do histórico em todos os T
    timestamps, com o horizonte futuro (>= h) mascarado. O embedding
    posicional fica para o encoder.
    """
    states = target.states if hasattr(target, "states") else _as_states(target)
    T = states.shape[0]
    capacity = len(segments) if capacity is None else capacity
    if len(segments) > capacity:
        raise CapacityError(f"{len(segments)} segmentos excedem N_m={capacity}")

    relative = np.zeros((capacity, T, D_R))
    valid = np.zeros((capacity, T), dtype=bool)
    future_mask = np.arange(T) >= h

    history = np.array(states[:h])
    relative[:len(segments), :h] = relative_motion(history, segments)
    valid[:len(segments), :h] = (history[:, 5] > 0.5)[None, :]

    return CoupledMap(relative=relative, valid=valid, topology=tuple(segments), future_mask=future_mask)


def label_future_relative_motions(future_gt, segments) -> np.ndarray:
    """R_gt = phi(Y_gt, M), usado só no treino."""
    states = _as_states(future_gt)
    if not (states[:, 5] > 0.5).all():
        bad = int(np.flatnonzero(states[:, 5] <= 0.5)[0])
        raise LabelError(f"frame futuro {bad} do ground-truth é inválido")
    return relative_motion(states, segments)
