import dataclasses

import numpy as np
import pytest

from forecaster.nn import precision
from forecaster.scene.features import collate
from forecaster.scene.generator import generate_synthetic_scenario
from forecaster.utils.config import Config
from models.run_config import RunConfig
from tests.builders import TINY_DATA, TINY_MODEL, TINY_TRAIN, generator_for, tensors_for


def pytest_collection_modifyitems(config, items):
    if Config.SLOW_TESTS:
        return
    skip = pytest.mark.skip(reason="teste longo; habilite com FORECASTER_SLOW_TESTS=true")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def double_precision():
    with precision("float64"):
        yield


@pytest.fixture
def tiny_model_config():
    return TINY_MODEL


@pytest.fixture
def tiny_run_config():
    return RunConfig(model=TINY_MODEL, train=TINY_TRAIN, data=TINY_DATA, seed=3)


@pytest.fixture
def tiny_generator():
    return generator_for()


@pytest.fixture
def scenario(tiny_generator):
    return generate_synthetic_scenario(11, tiny_generator)


@pytest.fixture
def scenarios(tiny_generator):
    return [generate_synthetic_scenario((5, i), tiny_generator, scenario_id=f"s{i}") for i in range(4)]


@pytest.fixture
def tiny_batch(scenarios):
    return collate([tensors_for(s) for s in scenarios[:2]])


@pytest.fixture
def padded_batch():
    """Um agente e uma faixa curta: sobra preenchimento em agentes e segmentos."""
    data = dataclasses.replace(TINY_DATA, lanes=1, agents=1, segments_per_lane=2)
    generator = generator_for(data=data)
    items = [tensors_for(generate_synthetic_scenario(i, generator)) for i in range(2)]
    return collate(items)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
