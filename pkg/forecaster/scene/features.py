"""
Montagem dos tensores de entrada do modelo a partir de um cenário
normalizado. Slots de preenchimento recebem `pad_value` (NaN nos testes de
disciplina de máscara) e nunca devem ser lidos sem máscara.
"""

import logging
from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np

from forecaster.errors import CapacityError, FrameError, ShapeError
from forecaster.geometry import build_coupled_map, label_future_relative_motions
from forecaster.scene.normalize import select_agents
from models.scenario import D_M, FRAME_AGENT

logger = logging.getLogger(__name__)

AGENT_FEATURES = 6  # x, y, cos, sin, v, flag de observação


@dataclass(frozen=True, eq=False)
class SceneTensors:
    """
    Entradas de um agente-alvo. Com `batched=True` todos os arrays ganham o
    eixo B na frente e os campos de metadados viram tuplas.

    Attributes:
        agents: [A x T x 6]; futuro e slots vazios preenchidos com pad_value
        agent_mask: [A x T] estados observados (válidos e t < h)
        agent_valid: [A] slot ocupado
        map_points: [N_m x P_m x d_m]
        point_mask: [N_m x P_m]
        point_count: [N_m] inteiros
        segment_mask: [N_m]
        relative: [N_m x T x 3] movimentos relativos do histórico
        relative_mask: [N_m x T]
        gt: [f x 5] futuro do alvo (x, y, cos, sin, v) ou None
        relative_gt: [N_m x f x 3] rótulos de movimento relativo ou None
    """

    agents: np.ndarray
    agent_mask: np.ndarray
    agent_valid: np.ndarray
    map_points: np.ndarray
    point_mask: np.ndarray
    point_count: np.ndarray
    segment_mask: np.ndarray
    relative: np.ndarray
    relative_mask: np.ndarray
    gt: Optional[np.ndarray]
    relative_gt: Optional[np.ndarray]
    scenario_id: object
    target_id: object
    agent_ids: Tuple
    segment_ids: Tuple
    transform: object
    batched: bool = False

    @property
    def has_labels(self) -> bool:
        return self.gt is not None

    @property
    def batch_size(self) -> int:
        return self.agents.shape[0] if self.batched else 1


METADATA = ("scenario_id", "target_id", "agent_ids", "segment_ids", "transform")


def build_scene_tensors(scenario, config, pad_value=0.0, with_labels=True) -> SceneTensors:
    """Tensores de um cenário já no quadro do agente (alvo = scenario.target_id)."""
    if scenario.frame != FRAME_AGENT:
        raise FrameError(f"cenário {scenario.scenario_id} precisa estar no quadro do agente")
    if scenario.h != config.h or scenario.f != config.f:
        raise ShapeError(f"horizonte h={scenario.h}, f={scenario.f} difere do modelo (h={config.h}, f={config.f})")
    if len(scenario.map) > config.N_m:
        raise CapacityError(f"{len(scenario.map)} segmentos excedem N_m={config.N_m}")

    h, T, A, M, P = config.h, config.T, config.A, config.N_m, config.P_m
    target = scenario.agent(scenario.target_id)
    tracks = select_agents(scenario, scenario.target_id, config.N_a)

    agents = np.full((A, T, AGENT_FEATURES), pad_value, dtype=np.float64)
    agent_mask = np.zeros((A, T), dtype=bool)
    agent_valid = np.zeros(A, dtype=bool)
    for slot, track in enumerate(tracks):
        if track.length != T:
            raise ShapeError(f"trilha com {track.length} estados, esperado T={T}", path=f"agents[{slot}].states")
        observed = track.valid & (np.arange(T) < h)
        agents[slot, observed, 0:5] = track.states[observed, 0:5]
        agents[slot, observed, 5] = 1.0
        agent_mask[slot] = observed
        agent_valid[slot] = True

    map_points = np.full((M, P, D_M), pad_value, dtype=np.float64)
    point_mask = np.zeros((M, P), dtype=bool)
    point_count = np.zeros(M, dtype=np.int64)
    segment_mask = np.zeros(M, dtype=bool)
    for i, seg in enumerate(scenario.map):
        if seg.point_count > P:
            raise CapacityError(f"segmento {seg.id!r} tem {seg.point_count} pontos, P_m={P}")
        map_points[i, :seg.point_count] = seg.points
        point_mask[i, :seg.point_count] = True
        point_count[i] = seg.point_count
        segment_mask[i] = seg.point_count > 0

    relative = np.full((M, T, 3), pad_value, dtype=np.float64)
    relative_mask = np.zeros((M, T), dtype=bool)
    if scenario.map:
        coupled = build_coupled_map(target, scenario.map, h, capacity=M)
        relative_mask = coupled.valid
        relative[relative_mask] = coupled.relative[relative_mask]

    gt = relative_gt = None
    if with_labels and target.valid[h:].all():
        gt = np.array(target.states[h:, 0:5])
        relative_gt = np.full((M, config.f, 3), pad_value, dtype=np.float64)
        if scenario.map:
            relative_gt[:len(scenario.map)] = label_future_relative_motions(target.states[h:], scenario.map)

    return SceneTensors(
        agents=agents, agent_mask=agent_mask, agent_valid=agent_valid,
        map_points=map_points, point_mask=point_mask, point_count=point_count, segment_mask=segment_mask,
        relative=relative, relative_mask=relative_mask, gt=gt, relative_gt=relative_gt,
        scenario_id=scenario.scenario_id, target_id=scenario.target_id,
        agent_ids=tuple(t.id for t in tracks), segment_ids=tuple(s.id for s in scenario.map),
        transform=scenario.transform,
    )


def collate(items) -> SceneTensors:
    """Empilha SceneTensors de mesma configuração no eixo B."""
    items = list(items)
    if not items:
        raise ShapeError("lote vazio")
    values = {}
    for f in fields(SceneTensors):
        if f.name == "batched":
            continue
        column = [getattr(item, f.name) for item in items]
        if f.name in METADATA:
            values[f.name] = tuple(column)
        elif f.name in ("gt", "relative_gt"):
            values[f.name] = None if any(c is None for c in column) else np.stack(column)
        else:
            values[f.name] = np.stack(column)
    return SceneTensors(batched=True, **values)
