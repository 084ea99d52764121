"""
Models de saída: predições multimodais, perdas, métricas e benchmarks.
"""

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from models.scenario import FRAME_WORLD


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """
    K trajetórias x f passos x 5 atributos [x, y, cos, sin, v] com K
    probabilidades somando 1.

    Attributes:
        scenario_id: cenário de origem
        agent_id: agente predito
        trajectories: array [K x f x 5]
        probabilities: array [K]
        frame: "world" ou "agent"
        references: id do segmento mais atendido por modalidade (opcional)
    """

    scenario_id: str
    agent_id: object
    trajectories: np.ndarray
    probabilities: np.ndarray
    frame: str = FRAME_WORLD
    references: Optional[Tuple] = None

    @property
    def K(self):
        return self.trajectories.shape[0]

    @property
    def f(self):
        return self.trajectories.shape[1]

    def to_dict(self):
        data = {
            "scenario_id": self.scenario_id,
            "agent_id": self.agent_id,
            "frame": self.frame,
            "modes": [
                {"prob": float(p), "points": traj.tolist()}
                for p, traj in zip(self.probabilities, self.trajectories)
            ],
        }
        if self.references is not None:
            for mode, ref in zip(data["modes"], self.references):
                mode["reference_segment"] = ref
        return data

    @staticmethod
    def from_dict(data):
        modes = data["modes"]
        refs = [m.get("reference_segment") for m in modes]
        return PredictionSet(
            scenario_id=data["scenario_id"],
            agent_id=data.get("agent_id"),
            trajectories=np.array([m["points"] for m in modes], dtype=np.float64),
            probabilities=np.array([m["prob"] for m in modes], dtype=np.float64),
            frame=data.get("frame", FRAME_WORLD),
            references=tuple(refs) if any(r is not None for r in refs) else None,
        )


@dataclass(frozen=True)
class LossBreakdown:
    """total = primary + couple + capture (mesma precisão)."""

    primary: float
    couple: float
    capture: float
    total: float
    best_mode_index: Tuple[int, ...] = ()

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ScenarioMetrics:
    minADE: float
    minFDE: float
    MR: float
    brier: float
    brier_minFDE: float


@dataclass(frozen=True)
class MetricsReport:
    minADE_K: float
    minFDE_K: float
    MR_K: float
    brier_score: float
    brier_minFDE_K: float
    count: int
    K: int

    METRIC_NAMES = ("minADE_K", "minFDE_K", "MR_K", "brier_score", "brier_minFDE_K")

    def to_dict(self):
        return asdict(self)

    @staticmethod
    def from_scenarios(metrics: List[ScenarioMetrics], K):
        rows = np.array([[m.minADE, m.minFDE, m.MR, m.brier, m.brier_minFDE] for m in metrics], dtype=np.float64)
        means = rows.mean(axis=0)
        return MetricsReport(
            minADE_K=float(means[0]),
            minFDE_K=float(means[1]),
            MR_K=float(means[2]),
            brier_score=float(means[3]),
            brier_minFDE_K=float(means[4]),
            count=len(metrics),
            K=int(K),
        )


@dataclass(frozen=True)
class DegradationCurve:
    axis: str
    points: Tuple[Tuple[float, MetricsReport], ...] = field(default_factory=tuple)

    @property
    def levels(self):
        return [level for level, _ in self.points]


@dataclass(frozen=True)
class BenchReport:
    label: str
    param_count: int
    fusion_param_count: int
    median_forward_latency: float
    runs: int
    batch_size: int

    def to_dict(self):
        return asdict(self)
