"""
Varredura de robustez: mascaramento de frames do histórico ou ruído
gaussiano nas posições, com headings e velocidades recalculados.
"""

import logging

import numpy as np

from forecaster.errors import ConfigurationError
from forecaster.eval.metrics import evaluate
from forecaster.scene.normalize import recompute_motion
from models.prediction import DegradationCurve
from models.scenario import AgentTrack, Scenario

logger = logging.getLogger(__name__)

AXES = {"mask": "mask_rate", "noise": "noise_sigma"}


def _validate_levels(axis, levels):
    if axis not in AXES:
        raise ConfigurationError(f"eixo de robustez inválido: {axis!r} (opções: {tuple(AXES)})")
    levels = [float(level) for level in levels]
    if not levels or levels[0] != 0.0:
        raise ConfigurationError("os níveis precisam começar em 0")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ConfigurationError("os níveis precisam estar em ordem crescente")
    if axis == "mask" and levels[-1] >= 1.0:
        raise ConfigurationError("taxa de máscara >= 1 apagaria todo o histórico")
    return levels


def perturb_scenario(scenario, axis, level, rng) -> Scenario:
    """Aplica a degradação ao histórico (índices < h) de todos os agentes."""
    h = scenario.h
    target_id = scenario.target.id if scenario.target is not None else None
    agents = []
    for track in scenario.agents:
        states = np.array(track.states)
        if axis == "mask":
            drop = rng.random(h) < level
            if track.id == target_id:
                drop[h - 1] = False
            states[:h][drop, :] = 0.0
        else:
            noise = rng.normal(0.0, level, size=(h, 2))
            valid = states[:h, 5] > 0.5
            states[:h, 0:2] += np.where(valid[:, None], noise, 0.0)
            states[:h] = recompute_motion(states[:h], scenario.dt)
        agents.append(AgentTrack(track.id, states, track.is_target))
    return Scenario(
        scenario.scenario_id, scenario.h, scenario.f, scenario.dt, agents, scenario.map,
        frame=scenario.frame, transform=scenario.transform, target_id=scenario.target_id,
    )


def robustness_sweep(model, scenarios, axis, levels, seed=0, threads=1) -> DegradationCurve:
    """
    Uma avaliação por nível. O nível 0 percorre exatamente o caminho da
    avaliação limpa; os demais usam rng([seed, índice do nível, índice do cenário]).
    """
    levels = _validate_levels(axis, levels)
    scenarios = list(scenarios)
    points = []
    for level_index, level in enumerate(levels):
        if level == 0.0:
            degraded = scenarios
        else:
            degraded = [
                perturb_scenario(s, axis, level, np.random.default_rng([seed, level_index, i]))
                for i, s in enumerate(scenarios)
            ]
        report = evaluate(model, degraded, threads=threads)
        logger.info(f"Robustez {axis}={level:g}: minFDE={report.minFDE_K:.4f} MR={report.MR_K:.3f}")
        points.append((level, report))
    return DegradationCurve(axis=AXES[axis], points=tuple(points))
