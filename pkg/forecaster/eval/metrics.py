"""
Métricas de predição multimodal: minADE, minFDE, MR, brier e brier-minFDE.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from forecaster.errors import EmptyDatasetError, FrameError, LabelError, ShapeError
from forecaster.model import predict_scenario
from forecaster.nn import precision
from models.prediction import MetricsReport, ScenarioMetrics
from models.scenario import FRAME_WORLD

logger = logging.getLogger(__name__)

MISS_THRESHOLD = 2.0


def compute_metrics(prediction, gt) -> ScenarioMetrics:
    """
    Métricas de um cenário. `gt` é o futuro [f x >=2] no quadro mundo; uma
    distância final de exatamente 2.0 m conta como acerto.
    """
    if prediction.frame != FRAME_WORLD:
        raise FrameError(f"predição em quadro {prediction.frame}; esperado {FRAME_WORLD}")
    gt = np.asarray(gt, dtype=np.float64)
    trajectories = np.asarray(prediction.trajectories, dtype=np.float64)
    if trajectories.shape[1] != gt.shape[0]:
        raise ShapeError(f"predição com f={trajectories.shape[1]}, ground-truth com f={gt.shape[0]}")

    diff = trajectories[:, :, 0:2] - gt[None, :, 0:2]
    step_dist = np.hypot(diff[..., 0], diff[..., 1])
    endpoint = step_dist[:, -1]
    best = int(np.argmin(endpoint))

    min_fde = float(endpoint[best])
    brier = float((1.0 - prediction.probabilities[best]) ** 2)
    return ScenarioMetrics(
        minADE=float(step_dist.mean(axis=1).min()),
        minFDE=min_fde,
        MR=1.0 if min_fde > MISS_THRESHOLD else 0.0,
        brier=brier,
        brier_minFDE=min_fde + brier,
    )


def _scenario_metrics(model, scenario):
    target = scenario.target
    if target is None or not target.valid[scenario.h:].all():
        raise LabelError(f"cenário {scenario.scenario_id} sem futuro rotulado para o alvo")
    prediction = predict_scenario(model, scenario, target=target.id)[0]
    return compute_metrics(prediction, target.states[scenario.h:])


def evaluate(model, scenarios, threads=1) -> MetricsReport:
    """
    Média das métricas por cenário. Com `threads` > 1 os cenários rodam em
    paralelo e o resultado é reduzido na ordem original.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise EmptyDatasetError("conjunto de avaliação vazio")
    dtype = model.dtype

    def run(scenario):
        with precision(dtype):
            return _scenario_metrics(model, scenario)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            metrics = list(pool.map(run, scenarios))
    else:
        metrics = [run(s) for s in scenarios]

    return MetricsReport.from_scenarios(metrics, model.config.K)
