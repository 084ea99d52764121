"""
Models para representar um cenário de tráfego: agentes, mapa vetorizado e
o quadro de referência (mundo ou centrado no agente).

Todos os tipos são imutáveis depois de construídos; os arrays numpy internos
são marcados como somente leitura.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

LANE_TYPES = ("leftmost", "middle", "rightmost", "other")

# Layout das d_m = 15 colunas de atributos de um ponto do mapa
ATTR_X, ATTR_Y = 0, 1
ATTR_PRED = slice(2, 4)
ATTR_SUCC = slice(4, 6)
ATTR_LANE_TYPE = slice(6, 10)
ATTR_CONNECTIVITY = slice(10, 14)  # esquerda, direita, predecessor, sucessor
ATTR_INTERSECTION = 14
D_M = 15

# Colunas de um estado de movimento
STATE_FIELDS = ("x", "y", "cos_heading", "sin_heading", "speed", "valid")
STATE_DIM = len(STATE_FIELDS)

FRAME_WORLD = "world"
FRAME_AGENT = "agent"


def _frozen(array, dtype=np.float64):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MotionState:
    x: float
    y: float
    cos_heading: float
    sin_heading: float
    speed: float
    valid: bool

    def as_row(self):
        return [self.x, self.y, self.cos_heading, self.sin_heading, self.speed, 1.0 if self.valid else 0.0]


@dataclass(frozen=True, eq=False)
class AgentTrack:
    """
    Trilha de um agente com T = h + f estados.

    Attributes:
        id: identificador opaco (int ou str)
        states: array [T x 6] com colunas (x, y, cos, sin, v, valid)
        is_target: True para o agente de interesse
    """

    id: object
    states: np.ndarray
    is_target: bool = False

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen(np.asarray(self.states).reshape(-1, STATE_DIM)))

    @property
    def length(self):
        return self.states.shape[0]

    @property
    def valid(self):
        return self.states[:, 5] > 0.5

    def state(self, t):
        row = self.states[t]
        return MotionState(*(float(v) for v in row[:5]), valid=bool(row[5] > 0.5))

    def to_dict(self):
        return {"id": self.id, "is_target": bool(self.is_target), "states": self.states.tolist()}

    def __eq__(self, other):
        return isinstance(other, AgentTrack) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"<AgentTrack(id={self.id!r}, T={self.length}, target={self.is_target})>"


@dataclass(frozen=True, eq=False)
class MapSegment:
    """
    Segmento de centerline discretizado em até P_m pontos.

    `points` guarda apenas os pontos válidos ([point_count x d_m]); o
    preenchimento com zeros até P_m acontece na montagem dos tensores.
    """

    id: object
    points: np.ndarray
    lane_type: str = "other"
    connectivity: Tuple = ()
    successors: Tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(np.asarray(self.points).reshape(-1, D_M)))
        object.__setattr__(self, "connectivity", tuple(self.connectivity))
        object.__setattr__(self, "successors", tuple(self.successors))

    @property
    def point_count(self):
        return self.points.shape[0]

    @property
    def xy(self):
        return self.points[:, :2]

    def to_dict(self):
        return {
            "id": self.id,
            "type": self.lane_type,
            "connectivity": list(self.connectivity),
            "successors": list(self.successors),
            "points": self.points.tolist(),
        }

    def __eq__(self, other):
        return isinstance(other, MapSegment) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"<MapSegment(id={self.id!r}, points={self.point_count}, type={self.lane_type})>"


@dataclass(frozen=True)
class RigidTransform:
    """
    Movimento rígido mundo -> agente: p' = R(-theta) (p - origem).
    """

    origin_x: float = 0.0
    origin_y: float = 0.0
    cos_theta: float = 1.0
    sin_theta: float = 0.0

    def to_local(self, xy):
        xy = np.asarray(xy, dtype=np.float64)
        dx = xy[..., 0] - self.origin_x
        dy = xy[..., 1] - self.origin_y
        return np.stack([self.cos_theta * dx + self.sin_theta * dy,
                         -self.sin_theta * dx + self.cos_theta * dy], axis=-1)

    def to_world(self, xy):
        xy = np.asarray(xy, dtype=np.float64)
        x, y = xy[..., 0], xy[..., 1]
        return np.stack([self.cos_theta * x - self.sin_theta * y + self.origin_x,
                         self.sin_theta * x + self.cos_theta * y + self.origin_y], axis=-1)

    def rotate_to_local(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        return np.stack([self.cos_theta * vec[..., 0] + self.sin_theta * vec[..., 1],
                         -self.sin_theta * vec[..., 0] + self.cos_theta * vec[..., 1]], axis=-1)

    def rotate_to_world(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        return np.stack([self.cos_theta * vec[..., 0] - self.sin_theta * vec[..., 1],
                         self.sin_theta * vec[..., 0] + self.cos_theta * vec[..., 1]], axis=-1)

    def to_dict(self):
        return {"origin": [self.origin_x, self.origin_y], "heading": [self.cos_theta, self.sin_theta]}

    @staticmethod
    def from_dict(data):
        return RigidTransform(float(data["origin"][0]), float(data["origin"][1]),
                              float(data["heading"][0]), float(data["heading"][1]))


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Unidade de todo IO: agentes com estados temporais + mapa vetorizado.

    `transform` só existe no quadro centrado no agente e guarda o movimento
    mundo -> agente usado na normalização (para desnormalizar predições).
    """

    scenario_id: str
    h: int
    f: int
    dt: float
    agents: Tuple[AgentTrack, ...]
    map: Tuple[MapSegment, ...]
    frame: str = FRAME_WORLD
    transform: Optional[RigidTransform] = None
    target_id: Optional[object] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "map", tuple(self.map))

    @property
    def T(self):
        return self.h + self.f

    def agent(self, agent_id):
        for track in self.agents:
            if track.id == agent_id:
                return track
        return None

    @property
    def target(self):
        """Agente alvo: `target_id` explícito ou o primeiro com is_target."""
        if self.target_id is not None:
            return self.agent(self.target_id)
        for track in self.agents:
            if track.is_target:
                return track
        return None

    def to_dict(self):
        data = {
            "meta": {"h": self.h, "f": self.f, "dt": self.dt, "scenario_id": self.scenario_id, "frame": self.frame},
            "agents": [a.to_dict() for a in self.agents],
            "map": [s.to_dict() for s in self.map],
        }
        if self.transform is not None:
            data["meta"]["transform"] = self.transform.to_dict()
        if self.target_id is not None:
            data["meta"]["target_id"] = self.target_id
        return data

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return (f"<Scenario(id={self.scenario_id!r}, agents={len(self.agents)}, "
                f"segments={len(self.map)}, frame={self.frame})>")
