import logging

from forecaster.model import CoupledForecaster
from forecaster.nn import precision
from forecaster.nn.autodiff import DTYPES
from models.run_config import RunConfig
from repositories.checkpoint_repository import CheckpointRepository

logger = logging.getLogger(__name__)

checkpoints = CheckpointRepository()


def load_model(checkpoint_path, config=None):
    """
    Reconstrói o modelo do checkpoint. Sem `config`, usa a config gravada no
    cabeçalho; formatos incompatíveis viram CheckpointError.
    """
    params, _, meta = checkpoints.read(checkpoint_path)
    if config is None:
        config = RunConfig.from_env_dict(meta.get("config", {})).validate()
    dtype = next(iter(params.values())).dtype.name if params else "float64"
    with precision(dtype):
        model = CoupledForecaster(config.model, seed=config.seed).to(DTYPES[dtype])
    model.load_state_dict(params)
    logger.info(f"Modelo carregado de {checkpoint_path} (época {meta.get('epoch')}, {model.param_count} parâmetros)")
    return model, config
