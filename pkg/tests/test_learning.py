"""Treinos longos no perfil desk: sanidade do aprendizado e ordem das ablações."""

import numpy as np
import pytest

from forecaster.eval.metrics import evaluate
from forecaster.model import CoupledForecaster
from forecaster.mtos.trainer import Trainer
from forecaster.scene.generator import generate_synthetic_scenario
from models.run_config import RunConfig
from workers.data_worker import DataWorker
from workers.train_worker import TrainWorker, build_dataset

CORPUS_SIZE = 32
ABLATION_SEEDS = (0, 1, 2, 3, 4)
ABLATION_EPOCHS = 200

ABLATIONS = {
    "no_relative_motions": {"model": {"use_relative_motions": False}},
    "no_bilateral_query": {"model": {"use_bilateral_query": False}},
    "no_reference_extractor": {"model": {"use_reference_extractor": False}},
    "no_couple_loss": {"train": {"use_couple_loss": False}},
    "no_capture_loss": {"train": {"use_capture_loss": False}},
}


@pytest.mark.slow
def test_desk_training_fits_small_corpus(tmp_path):
    config = RunConfig.for_profile("desk", seed=0).validate()
    worker = TrainWorker()
    corpus = DataWorker().generate(config, tmp_path / "data", count=CORPUS_SIZE)

    model, records = worker.run(config, tmp_path / "data", tmp_path / "run")
    assert len(records) == config.train.epochs

    averages = worker.moving_average(records, window=20)
    assert len(averages) == config.train.epochs - 19
    assert np.all(np.diff(averages) < 0)

    report = evaluate(model, corpus)
    assert report.minADE_K < 0.2
    assert report.MR_K == 0.0


@pytest.fixture(scope="module")
def desk_corpus():
    config = RunConfig.for_profile("desk")
    generator = config.generator_config()
    return [generate_synthetic_scenario((0, i), generator, scenario_id=f"s{i}") for i in range(CORPUS_SIZE)]


def train_min_fde(corpus, seed, **overrides):
    sections = {"model": {}, "train": {"epochs": ABLATION_EPOCHS}}
    for section, values in overrides.items():
        sections[section].update(values)
    config = RunConfig.for_profile("desk", seed=seed).with_overrides(**sections).validate()

    model = CoupledForecaster(config.model, seed=seed)
    Trainer(model, config.train).fit(build_dataset(corpus, config.model))
    return evaluate(model, corpus).minFDE_K


@pytest.mark.slow
def test_full_model_beats_each_ablation_on_most_seeds(desk_corpus):
    wins = {name: 0 for name in ABLATIONS}
    for seed in ABLATION_SEEDS:
        full = train_min_fde(desk_corpus, seed)
        for name, overrides in ABLATIONS.items():
            if full <= train_min_fde(desk_corpus, seed, **overrides):
                wins[name] += 1

    for name, count in wins.items():
        assert count >= 4, f"{name}: modelo completo melhor em só {count} de {len(ABLATION_SEEDS)} sementes"
