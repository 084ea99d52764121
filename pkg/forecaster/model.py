"""
Modelo completo de predição de trajetórias multimodais.

Fatoração: P(Y, R, J | X) = P(Y | R, J, X) P(R | X) P(J | X). O encoder
produz o contexto fundido; R (movimento acoplado futuro) e J (prior de
movimento) são saídas auxiliares usadas também na inferência pela regressão
condicionada ao mapa.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from forecaster.decoder import (
    CoupledMotionHead, MapConditionedRegression, MotionCaptureHead, PooledReferences, ProbabilityHead,
    ReferenceExtractor, most_attended_segments,
)
from forecaster.encoder import EncodedContext, Encoder
from forecaster.errors import DegenerateAnchorError
from forecaster.nn import DiffArray, Module, count_parameters, no_grad
from forecaster.scene.features import build_scene_tensors, collate
from forecaster.scene.normalize import denormalize_motion, denormalize_scenario, normalize_scenario
from models.prediction import PredictionSet
from models.scenario import FRAME_AGENT, FRAME_WORLD

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ModelOutputs:
    """
    Attributes:
        trajectories: [B x K x f x 5]
        probabilities: [B x K]
        relative: R, [B x N_m x f x 3]
        motion_prior: J, [B x f x 2]
        references: [B x K x T x D]
        context: saída do encoder
        reference_weights: atenção token -> segmento (só com explain)
    """

    trajectories: DiffArray
    probabilities: DiffArray
    relative: DiffArray
    motion_prior: DiffArray
    references: DiffArray
    context: EncodedContext
    reference_weights: Optional[DiffArray] = None

    def named_tensors(self) -> Tuple[Tuple[str, DiffArray], ...]:
        return (
            ("trajectories", self.trajectories),
            ("probabilities", self.probabilities),
            ("relative", self.relative),
            ("motion_prior", self.motion_prior),
        )


class CoupledForecaster(Module):
    def __init__(self, config, seed=0):
        super().__init__()
        config.validate()
        self.config = config
        rng = np.random.default_rng(seed)

        self.encoder = Encoder(config, rng)
        if config.use_reference_extractor:
            self.reference = ReferenceExtractor(config, rng)
        else:
            self.reference = PooledReferences(config, rng)
        self.coupled_motion = CoupledMotionHead(config, rng)
        self.motion_capture = MotionCaptureHead(config, rng)
        self.regression = MapConditionedRegression(config, rng)
        self.probability = ProbabilityHead(config, rng)

    @property
    def dtype(self) -> np.dtype:
        return self.encoder.map_layer.fuse.fc1.weight.dtype

    @property
    def param_count(self) -> int:
        return count_parameters(self)

    @property
    def fusion_param_count(self) -> int:
        return count_parameters(self.encoder.fusion) if self.encoder.fusion is not None else 0

    def forward(self, batch, explain=False):
        if not batch.batched:
            batch = collate([batch])
        context = self.encoder(batch, self.dtype)

        weights = None
        if self.config.use_reference_extractor:
            if explain:
                refs, weights = self.reference(context.map_features, context.segment_mask, return_weights=True)
            else:
                refs = self.reference(context.map_features, context.segment_mask)
        else:
            refs = self.reference(context.agent_features, context.agent_mask)

        relative = self.coupled_motion(context.map_features, context.segment_mask)
        prior = self.motion_capture(context.agent_features)
        trajectories = self.regression(refs, relative, prior, context.segment_mask)
        probabilities = self.probability(refs)
        return ModelOutputs(trajectories, probabilities, relative, prior, refs, context, weights)


# ============================================
# PREDIÇÃO EM QUADRO MUNDO
# ============================================

def _prediction_targets(scenario, target, joint):
    h = scenario.h
    if joint:
        return [track.id for track in scenario.agents if track.valid[h - 1]]
    if target is not None:
        return [target]
    track = scenario.target
    if track is None:
        raise DegenerateAnchorError(f"cenário {scenario.scenario_id} sem agente alvo")
    return [track.id]


def predict_scenario(model, scenario, target=None, joint=False, explain=False) -> List[PredictionSet]:
    """
    Predições no quadro mundo. Com `joint`, cada agente válido em h-1 vira
    alvo e todos saem de um único forward em lote (B = número de agentes).
    """
    if scenario.frame == FRAME_AGENT:
        scenario = denormalize_scenario(scenario)

    targets = _prediction_targets(scenario, target, joint)
    items = [
        build_scene_tensors(normalize_scenario(scenario, agent_id), model.config, with_labels=False)
        for agent_id in targets
    ]
    batch = collate(items)
    with no_grad():
        outputs = model(batch, explain=explain)

    references = [None] * len(items)
    if explain and outputs.reference_weights is not None:
        references = most_attended_segments(outputs.reference_weights, batch.segment_mask, batch.segment_ids)

    trajectories = outputs.trajectories.values.astype(np.float64)
    probabilities = outputs.probabilities.values.astype(np.float64)
    predictions = []
    for b, item in enumerate(items):
        predictions.append(PredictionSet(
            scenario_id=scenario.scenario_id,
            agent_id=item.target_id,
            trajectories=denormalize_motion(item.transform, trajectories[b]),
            probabilities=probabilities[b],
            frame=FRAME_WORLD,
            references=references[b],
        ))
    return predictions
