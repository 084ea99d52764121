import logging

from dotenv import dotenv_values

from forecaster.errors import StorageError
from models.run_config import RunConfig
from utils.files import atomic_write

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = "run_config.env"


class ConfigRepository:
    def read(self, path, base=None):
        """Lê um arquivo KEY=VALUE sobre `base` (padrões do perfil)."""
        try:
            with open(path, encoding="utf-8") as handle:
                values = dotenv_values(stream=handle)
        except OSError as e:
            raise StorageError(path, f"falha de leitura ({e})")
        return RunConfig.from_env_dict(values, base=base).validate()

    def write(self, path, config):
        with atomic_write(path) as handle:
            for key, value in config.to_env_dict().items():
                handle.write(f"{key}={value}\n")
