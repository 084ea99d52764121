"""
Normalização centrada no agente e movimentos rígidos de cenários.
"""

import logging
import math
from typing import List

import numpy as np

from forecaster.errors import DegenerateAnchorError, FrameError
from models.scenario import (
    ATTR_PRED, ATTR_SUCC, FRAME_AGENT, FRAME_WORLD, AgentTrack, MapSegment, RigidTransform, Scenario,
)

logger = logging.getLogger(__name__)

STATIONARY_EPS = 1e-6


def _map_scenario(scenario, point_fn, vec_fn, **changes):
    """Aplica uma transformação de pontos/vetores a todos os agentes e ao mapa."""
    agents = []
    for track in scenario.agents:
        states = np.array(track.states)
        states[:, 0:2] = point_fn(states[:, 0:2])
        states[:, 2:4] = vec_fn(states[:, 2:4])
        agents.append(AgentTrack(track.id, states, track.is_target))

    segments = []
    for seg in scenario.map:
        points = np.array(seg.points)
        if len(points):
            points[:, 0:2] = point_fn(points[:, 0:2])
            points[:, ATTR_PRED] = vec_fn(points[:, ATTR_PRED])
            points[:, ATTR_SUCC] = vec_fn(points[:, ATTR_SUCC])
        segments.append(MapSegment(seg.id, points, seg.lane_type, seg.connectivity, seg.successors))

    fields = dict(
        scenario_id=scenario.scenario_id, h=scenario.h, f=scenario.f, dt=scenario.dt,
        agents=agents, map=segments, frame=scenario.frame,
        transform=scenario.transform, target_id=scenario.target_id,
    )
    fields.update(changes)
    return Scenario(**fields)


def apply_rigid_motion(scenario, angle, translation=(0.0, 0.0), pivot=(0.0, 0.0)) -> Scenario:
    """
    Move o cenário inteiro no quadro mundo: p' = R(angle)(p - pivot) + pivot + translation.
    """
    c, s = math.cos(angle), math.sin(angle)
    px, py = float(pivot[0]), float(pivot[1])
    tx, ty = float(translation[0]), float(translation[1])

    def rotate(v):
        return np.stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]], axis=-1)

    def move(p):
        return rotate(p - np.array([px, py])) + np.array([px + tx, py + ty])

    return _map_scenario(scenario, move, rotate)


def normalize_scenario(scenario, target) -> Scenario:
    """
    Leva o cenário ao quadro do agente `target`: o estado em h-1 vai para a
    origem com heading ao longo de +x. A transformação fica registrada em
    `transform` para desnormalizar predições.
    """
    if scenario.frame != FRAME_WORLD:
        raise FrameError(f"cenário {scenario.scenario_id} já está no quadro {scenario.frame}")

    track = scenario.agent(target)
    if track is None:
        raise DegenerateAnchorError(f"agente {target!r} não existe no cenário {scenario.scenario_id}")
    anchor = track.state(scenario.h - 1)
    if not anchor.valid:
        raise DegenerateAnchorError(f"agente {target!r} sem estado válido em h-1={scenario.h - 1}")

    norm = math.hypot(anchor.cos_heading, anchor.sin_heading)
    if norm < STATIONARY_EPS:
        raise DegenerateAnchorError(f"heading indefinido para o agente {target!r} em h-1")
    transform = RigidTransform(anchor.x, anchor.y, anchor.cos_heading / norm, anchor.sin_heading / norm)

    return _map_scenario(
        scenario, transform.to_local, transform.rotate_to_local,
        frame=FRAME_AGENT, transform=transform, target_id=target,
    )


def denormalize_scenario(scenario) -> Scenario:
    """Inverso de normalize_scenario."""
    if scenario.frame != FRAME_AGENT or scenario.transform is None:
        raise FrameError(f"cenário {scenario.scenario_id} não está no quadro do agente")
    transform = scenario.transform
    return _map_scenario(
        scenario, transform.to_world, transform.rotate_to_world,
        frame=FRAME_WORLD, transform=None, target_id=None,
    )


def denormalize_motion(transform, motion) -> np.ndarray:
    """Leva atributos [.., 5] (x, y, cos, sin, v) do quadro do agente para o mundo."""
    motion = np.array(motion, dtype=np.float64)
    motion[..., 0:2] = transform.to_world(motion[..., 0:2])
    motion[..., 2:4] = transform.rotate_to_world(motion[..., 2:4])
    return motion


def recompute_motion(states, dt) -> np.ndarray:
    """
    Recalcula heading e velocidade por diferenças finitas entre frames
    válidos consecutivos. Agentes parados herdam o último heading válido;
    sem nenhum, (1, 0).
    """
    states = np.array(states, dtype=np.float64)
    valid_idx = np.flatnonzero(states[:, 5] > 0.5)
    if len(valid_idx) < 2:
        return states

    last_heading = None
    for n, t in enumerate(valid_idx):
        if n > 0:
            prev = valid_idx[n - 1]
            delta = states[t, 0:2] - states[prev, 0:2]
            span = (t - prev) * dt
        else:
            nxt = valid_idx[1]
            delta = states[nxt, 0:2] - states[t, 0:2]
            span = (nxt - t) * dt
        dist = math.hypot(delta[0], delta[1])
        states[t, 4] = dist / span
        if dist > STATIONARY_EPS:
            last_heading = (delta[0] / dist, delta[1] / dist)
            states[t, 2:4] = last_heading
        else:
            states[t, 2:4] = last_heading if last_heading is not None else (1.0, 0.0)
    return states


def _id_key(value):
    try:
        return (0, int(value), "")
    except (TypeError, ValueError):
        return (1, 0, str(value))


def select_agents(scenario, target, capacity) -> List[AgentTrack]:
    """
    Ordem dos agentes nos tensores: alvo primeiro, depois os `capacity`
    vizinhos mais próximos em h-1 (empate: menor id).
    """
    track = scenario.agent(target)
    if track is None:
        raise DegenerateAnchorError(f"agente {target!r} não existe no cenário {scenario.scenario_id}")
    anchor = track.states[scenario.h - 1, 0:2]

    others = []
    for other in scenario.agents:
        if other.id == target:
            continue
        row = other.states[scenario.h - 1]
        dist = float(np.hypot(*(row[0:2] - anchor))) if row[5] > 0.5 else math.inf
        others.append((dist, _id_key(other.id), other))

    others.sort(key=lambda item: (item[0], item[1]))
    return [track] + [item[2] for item in others[:capacity]]
