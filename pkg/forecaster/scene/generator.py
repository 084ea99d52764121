"""
Gerador de cenários sintéticos: faixas retas, em arco ou com bifurcação.

A geração é função pura de (seed, config): toda aleatoriedade vem de um
único numpy Generator semeado. O cenário sai no quadro mundo, já deslocado
por um movimento rígido aleatório.
"""

import logging
import math

import numpy as np

from forecaster.errors import CapacityError, ConfigurationError
from forecaster.scene.normalize import apply_rigid_motion, recompute_motion
from models.scenario import (
    ATTR_CONNECTIVITY, ATTR_INTERSECTION, ATTR_LANE_TYPE, ATTR_PRED, ATTR_SUCC, D_M, LANE_TYPES,
    AgentTrack, MapSegment, Scenario,
)

logger = logging.getLogger(__name__)

ARC_CURVATURE = (0.005, 0.015)
BRANCH_CURVATURE = 0.03
ACCEL_RANGE = 0.5
WORLD_OFFSET = 100.0


def _lane_type(index, lanes):
    if lanes == 1:
        return "other"
    if index == 0:
        return "rightmost"
    if index == lanes - 1:
        return "leftmost"
    return "middle"


def _arc_points(stations, curvature, offset):
    """Pontos de uma curva paralela (deslocada `offset` à esquerda) de um arco."""
    if abs(curvature) < 1e-12:
        return np.stack([stations, np.full_like(stations, offset)], axis=-1)
    radius = 1.0 / curvature
    theta = stations * curvature
    base = np.stack([radius * np.sin(theta), radius * (1.0 - np.cos(theta))], axis=-1)
    normal = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    return base + offset * normal


class _Lane:
    """Polilinha de rota; `start` é o índice a partir do qual ela vira segmentos."""

    def __init__(self, name, polyline, lane_type, start=0, index=None):
        self.name = name
        self.polyline = polyline
        self.lane_type = lane_type
        self.start = start
        self.index = index
        self.segment_ids = []

    @property
    def arc_length(self) -> np.ndarray:
        steps = np.diff(self.polyline, axis=0)
        return np.concatenate([[0.0], np.cumsum(np.hypot(steps[:, 0], steps[:, 1]))])


def _build_lanes(rng, config):
    data = config.data
    per_segment = config.P_m - 1
    n_points = data.segments_per_lane * per_segment + 1
    stations = np.arange(n_points) * data.point_spacing

    curvature = 0.0
    if data.geometry == "arc":
        curvature = rng.uniform(*ARC_CURVATURE) * rng.choice([-1.0, 1.0])

    lanes = [
        _Lane(f"lane{j}", _arc_points(stations, curvature, j * data.lane_width), _lane_type(j, data.lanes), index=j)
        for j in range(data.lanes)
    ]

    if data.geometry == "fork":
        fork = data.branch_segments * per_segment
        rest = stations[fork:] - stations[fork]
        # curva total da bifurcação limitada a 60 graus
        curvature = min(BRANCH_CURVATURE, (math.pi / 3.0) / max(rest[-1], 1e-9))
        branch = _arc_points(rest, -curvature, 0.0) + lanes[0].polyline[fork]
        polyline = np.concatenate([lanes[0].polyline[:fork], branch], axis=0)
        lanes.append(_Lane("branch", polyline, "other", start=fork))
    return lanes


def _chunk_lane(lane, per_segment):
    """Fatias de P_m pontos com sobreposição de 1 ponto, a partir de `lane.start`."""
    chunks = []
    start = lane.start
    while start + per_segment < len(lane.polyline):
        chunks.append((start, start + per_segment + 1))
        start += per_segment
    return chunks


def _segment_points(lane, lo, hi):
    points = np.zeros((hi - lo, D_M))
    poly = lane.polyline
    for row, p in enumerate(range(lo, hi)):
        points[row, 0:2] = poly[p]
        if p > 0:
            points[row, ATTR_PRED] = poly[p - 1] - poly[p]
        if p + 1 < len(poly):
            points[row, ATTR_SUCC] = poly[p + 1] - poly[p]
    points[:, ATTR_LANE_TYPE.start + LANE_TYPES.index(lane.lane_type)] = 1.0
    return points


def _build_map(lanes, config):
    data = config.data
    per_segment = config.P_m - 1
    fork_index = data.branch_segments * per_segment if data.geometry == "fork" else None
    main_lanes = [lane for lane in lanes if lane.index is not None]

    chunks = {lane.name: _chunk_lane(lane, per_segment) for lane in lanes}
    total = sum(len(c) for c in chunks.values())
    if total > config.N_m:
        raise CapacityError(f"a geometria pede {total} segmentos, mas N_m={config.N_m}")

    next_id = 0
    for lane in lanes:
        lane.segment_ids = list(range(next_id, next_id + len(chunks[lane.name])))
        next_id += len(chunks[lane.name])

    by_name = {lane.name: lane for lane in lanes}
    segments = []
    for lane in lanes:
        for k, (lo, hi) in enumerate(chunks[lane.name]):
            seg_id = lane.segment_ids[k]
            successors = []
            if k + 1 < len(lane.segment_ids):
                successors.append(lane.segment_ids[k + 1])
            if fork_index is not None and lane.name == "lane0" and hi - 1 == fork_index:
                successors.append(by_name["branch"].segment_ids[0])

            predecessors = []
            if k > 0:
                predecessors.append(lane.segment_ids[k - 1])
            elif lane.name == "branch":
                predecessors.append(by_name["lane0"].segment_ids[fork_index // per_segment - 1])

            left = right = None
            if lane.index is not None:
                if lane.index + 1 < len(main_lanes):
                    left = main_lanes[lane.index + 1].segment_ids[k]
                if lane.index > 0:
                    right = main_lanes[lane.index - 1].segment_ids[k]

            points = _segment_points(lane, lo, hi)
            flags = [left is not None, right is not None, bool(predecessors), bool(successors)]
            points[:, ATTR_CONNECTIVITY] = np.array(flags, dtype=np.float64)
            if fork_index is not None and lo <= fork_index < hi and lane.name in ("lane0", "branch"):
                points[fork_index - lo, ATTR_INTERSECTION] = 1.0

            neighbours = [n for n in (left, right) if n is not None] + predecessors + successors
            segments.append(MapSegment(seg_id, points, lane.lane_type, neighbours, successors))
    return segments


def _follow_route(rng, route, config, start_fraction):
    """Estados [T x 6] ao longo da rota com perfil de velocidade e ruído lateral."""
    data = config.data
    T = config.T
    arc = route.arc_length
    length = arc[-1]

    s0 = rng.uniform(0.0, start_fraction * length)
    v0 = rng.uniform(data.speed_min, data.speed_max)
    accel = rng.uniform(-ACCEL_RANGE, ACCEL_RANGE)
    speed = np.clip(v0 + accel * np.arange(T) * data.dt, 0.5 * data.speed_min, data.speed_max)
    stations = np.minimum(s0 + np.concatenate([[0.0], np.cumsum(speed[:-1] * data.dt)]), length - 1e-6)

    x = np.interp(stations, arc, route.polyline[:, 0])
    y = np.interp(stations, arc, route.polyline[:, 1])
    idx = np.clip(np.searchsorted(arc, stations, side="right") - 1, 0, len(arc) - 2)
    tangent = route.polyline[idx + 1] - route.polyline[idx]
    tangent /= np.hypot(tangent[:, 0], tangent[:, 1])[:, None]
    normal = np.stack([-tangent[:, 1], tangent[:, 0]], axis=-1)

    amplitude = rng.uniform(0.0, data.noise)
    omega = rng.uniform(0.2, 1.0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    lateral = amplitude * np.sin(omega * np.arange(T) * data.dt * 2.0 * math.pi + phase)

    states = np.zeros((T, 6))
    states[:, 0] = x + lateral * normal[:, 0]
    states[:, 1] = y + lateral * normal[:, 1]
    states[:, 5] = 1.0
    return recompute_motion(states, data.dt)


def generate_synthetic_scenario(seed, config, scenario_id=None) -> Scenario:
    """
    Gera um cenário no quadro mundo. `seed` pode ser um inteiro ou uma
    sequência de inteiros (ex.: (seed do corpus, índice)).
    """
    data = config.data
    data.validate()
    if config.P_m < 2:
        raise ConfigurationError("P_m deve ser >= 2 para formar segmentos")
    if data.geometry == "fork" and data.branch_segments >= data.segments_per_lane:
        raise ConfigurationError("DATA__BRANCH_SEGMENTS precisa ser menor que DATA__SEGMENTS_PER_LANE")
    if data.agents > config.N_a + 1:
        raise CapacityError(f"{data.agents} agentes excedem N_a+1={config.N_a + 1}")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lanes = _build_lanes(rng, config)
    segments = _build_map(lanes, config)

    main_lanes = [lane for lane in lanes if lane.index is not None]
    branch = next((lane for lane in lanes if lane.name == "branch"), None)

    agents = []
    for n in range(data.agents):
        is_target = n == 0
        if branch is not None and is_target:
            route = branch if rng.random() < 0.5 else main_lanes[0]
            fork_station = main_lanes[0].arc_length[branch.start]
            start_fraction = 0.25 * fork_station / route.arc_length[-1]
        else:
            route = main_lanes[int(rng.integers(len(main_lanes)))]
            if branch is not None and route is main_lanes[0] and rng.random() < 0.5:
                route = branch
            start_fraction = 0.4
        states = _follow_route(rng, route, config, start_fraction)
        agents.append(AgentTrack(n, states, is_target))

    label = scenario_id if scenario_id is not None else f"syn-{'-'.join(str(s) for s in np.atleast_1d(seed))}"
    scenario = Scenario(label, config.h, config.f, data.dt, agents, segments, target_id=0)

    angle = rng.uniform(-math.pi, math.pi)
    translation = rng.uniform(-WORLD_OFFSET, WORLD_OFFSET, size=2)
    logger.debug(f"Cenário {label}: {len(segments)} segmentos, {len(agents)} agentes, geometria {data.geometry}")
    return apply_rigid_motion(scenario, angle, translation)
