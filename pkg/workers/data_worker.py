import logging

from forecaster.scene.generator import generate_synthetic_scenario
from repositories.config_repository import RUN_CONFIG_FILE, ConfigRepository
from repositories.scenario_repository import ScenarioRepository

logger = logging.getLogger(__name__)

scenarios = ScenarioRepository()
configs = ConfigRepository()


class DataWorker:
    def generate(self, config, out_dir, count):
        """Corpus de `count` cenários; o cenário i usa a semente (seed, i)."""
        generator = config.generator_config()
        logger.info("=" * 60)
        logger.info(f"GERANDO CORPUS: {count} cenários, geometria {config.data.geometry}, seed {config.seed}")
        logger.info("=" * 60)

        corpus = [
            generate_synthetic_scenario((config.seed, i), generator, scenario_id=f"scenario_{i:04d}")
            for i in range(count)
        ]
        manifest = {"seed": config.seed, "generator": config.to_env_dict()}
        scenarios.write_corpus(out_dir, corpus, manifest)
        configs.write(f"{out_dir}/{RUN_CONFIG_FILE}", config)
        return corpus
