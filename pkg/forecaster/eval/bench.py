"""
Contagem de parâmetros e latência de forward (mediana após aquecimento).
"""

import dataclasses
import logging
import time
from typing import Dict, List, Tuple

import numpy as np

from forecaster.model import CoupledForecaster
from forecaster.nn import no_grad
from forecaster.scene.features import SceneTensors, build_scene_tensors, collate
from forecaster.scene.generator import generate_synthetic_scenario
from forecaster.scene.normalize import normalize_scenario
from models.prediction import BenchReport
from models.run_config import DataConfig, GeneratorConfig

logger = logging.getLogger(__name__)

WARMUP = 10
MIN_RUNS = 100
BATCH_SIZE = 32


def synthetic_batch(model_config, batch_size=BATCH_SIZE, seed=0, data=None) -> SceneTensors:
    """Lote fixo de `batch_size` alvos gerados sinteticamente."""
    data = data or DataConfig()
    generator = GeneratorConfig(data=data, h=model_config.h, f=model_config.f,
                                P_m=model_config.P_m, N_m=model_config.N_m, N_a=model_config.N_a)
    items = []
    for i in range(batch_size):
        scenario = generate_synthetic_scenario((seed, i), generator)
        items.append(build_scene_tensors(normalize_scenario(scenario, scenario.target_id), model_config))
    return collate(items)


def bench(model_config, runs=MIN_RUNS, warmup=WARMUP, batch_size=BATCH_SIZE, seed=0, label=None, data=None) -> BenchReport:
    runs = max(int(runs), MIN_RUNS)
    model = CoupledForecaster(model_config, seed=seed)
    batch = synthetic_batch(model_config, batch_size, seed, data=data)

    timings = []
    with no_grad():
        for _ in range(warmup):
            model(batch)
        for _ in range(runs):
            start = time.perf_counter()
            model(batch)
            timings.append(time.perf_counter() - start)

    report = BenchReport(
        label=label or model_config.fusion,
        param_count=model.param_count,
        fusion_param_count=model.fusion_param_count,
        median_forward_latency=float(np.median(timings)),
        runs=runs,
        batch_size=batch_size,
    )
    logger.info(
        f"Bench {report.label}: {report.param_count} parâmetros "
        f"(fusão {report.fusion_param_count}), mediana {report.median_forward_latency * 1e3:.2f} ms"
    )
    return report


def compare_fusion(model_config, **kwargs) -> Tuple[List[BenchReport], Dict[str, float]]:
    """Bilateral query contra atenção empilhada na mesma D."""
    bilateral = bench(dataclasses.replace(model_config, fusion="bilateral", use_bilateral_query=True),
                      label="bilateral", **kwargs)
    stack = bench(dataclasses.replace(model_config, fusion="stack"), label="stack", **kwargs)
    reduction = 100.0 * (1.0 - bilateral.fusion_param_count / stack.fusion_param_count)
    speedup = stack.median_forward_latency / bilateral.median_forward_latency
    logger.info(f"Bilateral query: {reduction:.1f}% menos parâmetros de fusão, {speedup:.2f}x mais rápida")
    return [bilateral, stack], {"param_reduction_pct": reduction, "speedup": speedup}
