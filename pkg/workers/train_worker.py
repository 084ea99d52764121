import logging
from pathlib import Path

import numpy as np

from forecaster.errors import ShapeError
from forecaster.model import CoupledForecaster
from forecaster.mtos.trainer import EpochRecord, Trainer
from forecaster.nn import precision
from forecaster.nn.autodiff import DTYPES
from forecaster.scene.features import build_scene_tensors
from forecaster.scene.normalize import normalize_scenario
from repositories.checkpoint_repository import CheckpointRepository
from repositories.config_repository import RUN_CONFIG_FILE, ConfigRepository
from repositories.report_repository import ReportRepository
from repositories.scenario_repository import ScenarioRepository

logger = logging.getLogger(__name__)

scenarios = ScenarioRepository()
checkpoints = CheckpointRepository()
reports = ReportRepository()
configs = ConfigRepository()

CHECKPOINT_FILE = "checkpoint.bin"
LOG_FILE = "training_log.csv"


def check_corpus(corpus, model_config):
    """Confere h, f e capacidades do corpus antes de qualquer treino."""
    for scenario in corpus:
        if scenario.h != model_config.h or scenario.f != model_config.f:
            raise ShapeError(
                f"cenário {scenario.scenario_id} tem h={scenario.h}, f={scenario.f}; "
                f"config pede h={model_config.h}, f={model_config.f}"
            )
        if len(scenario.map) > model_config.N_m:
            raise ShapeError(f"cenário {scenario.scenario_id} tem {len(scenario.map)} segmentos > N_m={model_config.N_m}")
        if any(seg.point_count > model_config.P_m for seg in scenario.map):
            raise ShapeError(f"cenário {scenario.scenario_id} tem segmento com mais de P_m={model_config.P_m} pontos")


def build_dataset(corpus, model_config):
    return [
        build_scene_tensors(normalize_scenario(s, s.target.id), model_config)
        for s in corpus
    ]


class TrainWorker:
    def run(self, config, data_dir, out_dir, resume=False):
        out_dir = Path(out_dir)
        corpus = scenarios.read_corpus(data_dir)
        check_corpus(corpus, config.model)
        dataset = build_dataset(corpus, config.model)

        logger.info("=" * 60)
        logger.info(f"TREINO: {len(dataset)} cenários, D={config.model.D}, K={config.model.K}, "
                    f"fusão {config.model.fusion}, {config.train.epochs} épocas")
        logger.info("=" * 60)

        with precision(config.train.precision):
            model = CoupledForecaster(config.model, seed=config.seed).to(DTYPES[config.train.precision])
            start_epoch, optimizer_state, history = 0, None, []
            checkpoint_path = out_dir / CHECKPOINT_FILE
            if resume and checkpoint_path.exists():
                optimizer_state, meta = checkpoints.load_into(checkpoint_path, model)
                start_epoch = int(meta.get("epoch", -1)) + 1
                if (out_dir / LOG_FILE).exists():
                    frame = reports.read_training_log(out_dir / LOG_FILE)
                    history = frame[frame["epoch"] < start_epoch].to_dict("records")
                logger.info(f"Retomando da época {start_epoch}")

            trainer = Trainer(model, config.train, optimizer_state)
            records = []

            def on_epoch_end(record, trainer):
                records.append(record)
                checkpoints.save(checkpoint_path, model, config, record.epoch, trainer.optimizer)

            trainer.fit(dataset, start_epoch=start_epoch, on_epoch_end=on_epoch_end)

        all_records = [EpochRecord(**{k: row[k] for k in EpochRecord.__dataclass_fields__}) for row in history]
        all_records += records
        reports.write_training_log(out_dir / LOG_FILE, all_records)
        configs.write(out_dir / RUN_CONFIG_FILE, config)
        if not records and not checkpoint_path.exists():
            checkpoints.save(checkpoint_path, model, config, start_epoch - 1, trainer.optimizer)
        final = all_records[-1] if all_records else None
        if final is not None:
            logger.info(f"Treino concluído: loss final {final.loss_total:.4f}")
        return model, all_records

    def moving_average(self, records, window=20):
        values = np.array([r.loss_total for r in records])
        if len(values) < window:
            return values
        return np.convolve(values, np.ones(window) / window, mode="valid")
