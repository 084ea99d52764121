import dataclasses

import pytest

from forecaster.errors import ConfigurationError, StorageError
from forecaster.utils.profile_config import PROFILES, SCALE_DECAY_EPOCHS, profile_defaults
from models.run_config import ModelConfig, RunConfig, TrainConfig
from repositories.config_repository import ConfigRepository

configs = ConfigRepository()


def test_env_dict_round_trip(tiny_run_config):
    changed = tiny_run_config.with_overrides(model={"fusion": "stack"}, train={"margin": 0.2}, data={"geometry": "arc"})
    values = changed.to_env_dict()
    assert values["MODEL__FUSION"] == "stack"
    assert values["TRAIN__USE_COUPLE_LOSS"] == "true"
    assert RunConfig.from_env_dict(values) == changed


def test_partial_file_overrides_base(tmp_path, tiny_run_config):
    path = tmp_path / "run.env"
    path.write_text("MODEL__D=12\nTRAIN__DECAY_EPOCHS=5,8\nTRAIN__DECAY_FACTORS=0.5,0.5\nSEED=9\n")
    config = configs.read(path, base=tiny_run_config)
    assert config.model.D == 12
    assert config.model.K == tiny_run_config.model.K
    assert config.train.decay_epochs == (5, 8)
    assert config.train.decay_factors == (0.5, 0.5)
    assert config.seed == 9


def test_repository_round_trip(tmp_path, tiny_run_config):
    path = tmp_path / "run_config.env"
    configs.write(path, tiny_run_config)
    assert configs.read(path) == tiny_run_config


@pytest.mark.parametrize("line", ["MODEL__COLOR=red", "OPTIM__LR=1", "MODEL__D=dezesseis", "MODEL__USE_MAP_TOPOLOGY=talvez"])
def test_bad_config_lines(tmp_path, line):
    path = tmp_path / "run.env"
    path.write_text(line + "\n")
    with pytest.raises(ConfigurationError):
        configs.read(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(StorageError):
        configs.read(tmp_path / "nope.env")


@pytest.mark.parametrize("changes", [
    {"K": 1}, {"D": 7, "heads": 1}, {"D": 16, "heads": 3}, {"fusion": "mlp"}, {"N_m": 0}, {"bq_heads": 3},
])
def test_invalid_model_config(changes):
    with pytest.raises(ConfigurationError):
        dataclasses.replace(ModelConfig(), **changes).validate()


def test_invalid_train_config():
    with pytest.raises(ConfigurationError):
        TrainConfig(decay_epochs=(1,), decay_factors=()).validate()
    with pytest.raises(ConfigurationError):
        TrainConfig(precision="float16").validate()


def test_learning_rate_schedule():
    train = TrainConfig(lr=1e-3, decay_epochs=(400, 475), decay_factors=(0.1, 0.1))
    assert train.lr_at(0) == pytest.approx(1e-3)
    assert train.lr_at(400) == pytest.approx(1e-4)
    assert train.lr_at(499) == pytest.approx(1e-5)


def test_margin_defaults_to_inverse_k():
    assert TrainConfig().margin_for(4) == pytest.approx(0.25)
    assert TrainConfig(margin=0.3).margin_for(4) == pytest.approx(0.3)


def test_profiles():
    desk = RunConfig.for_profile("desk", seed=2)
    assert desk.model.D == 16 and desk.seed == 2 and desk.train.seed == 2
    assert desk.train.decay_epochs == (400, 475)
    assert profile_defaults("large")["decay_epochs"] == SCALE_DECAY_EPOCHS
    assert RunConfig.for_profile("small").model.D == 64
    for name in PROFILES:
        RunConfig.for_profile(name).validate()


def test_unknown_profile():
    with pytest.raises(ConfigurationError):
        profile_defaults("huge")


@pytest.mark.parametrize("epochs, decay", [(100, (80, 95)), (20, (16, 19))])
def test_desk_decay_follows_epoch_override(epochs, decay):
    train = RunConfig.for_profile("desk").with_overrides(train={"epochs": epochs}).train
    assert train.decay_epochs == decay
    assert train.lr_at(epochs - 1) == pytest.approx(train.lr * 0.01)


def test_epochs_from_file_rescale_desk_decay(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("TRAIN__EPOCHS=50\n")
    assert configs.read(path, base=RunConfig.for_profile("desk")).train.decay_epochs == (40, 47)


def test_explicit_decay_survives_epoch_override():
    desk = RunConfig.for_profile("desk")
    train = desk.with_overrides(train={"epochs": 10, "decay_epochs": (3, 6)}).train
    assert train.decay_epochs == (3, 6)
    assert RunConfig.for_profile("small").with_overrides(train={"epochs": 50}).train.decay_epochs == SCALE_DECAY_EPOCHS
