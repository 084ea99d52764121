"""
Perfis de capacidade do modelo.

O perfil "desk" roda a suíte inteira em minutos numa CPU; "small" e "large"
reproduzem as capacidades de escala real (D=64 e D=128).
"""

import logging
from typing import Dict, Optional, Tuple

from forecaster.errors import ConfigurationError
from forecaster.utils.config import Config

logger = logging.getLogger(__name__)

PROFILES = {
    "desk": {
        "D": 16, "K": 3, "N_m": 16, "P_m": 9, "N_a": 7, "h": 10, "f": 15, "heads": 4,
        "lr": 1e-3, "epochs": 500, "batch_size": 32,
    },
    "small": {
        "D": 64, "K": 6, "N_m": 128, "P_m": 31, "N_a": 31, "h": 20, "f": 30, "heads": 4,
        "lr": 1e-4, "epochs": 200, "batch_size": 32,
    },
    "large": {
        "D": 128, "K": 6, "N_m": 128, "P_m": 31, "N_a": 31, "h": 20, "f": 30, "heads": 4,
        "lr": 1e-4, "epochs": 200, "batch_size": 32,
    },
}

# Decaimento dos perfis de escala real (1e-4 -> 1e-5 -> 1e-6)
SCALE_DECAY_EPOCHS = (170, 190)

# Perfil desk: decai em 80% e 95% do total de épocas
DESK_DECAY_FRACTIONS = (0.8, 0.95)


def relative_decay_epochs(epochs: int) -> Tuple[int, ...]:
    return tuple(int(epochs * fraction) for fraction in DESK_DECAY_FRACTIONS)


def profile_defaults(name: Optional[str] = None) -> Dict:
    """Retorna uma cópia dos valores padrão do perfil pedido (ou do ambiente)."""
    name = name or Config.PROFILE
    if name not in PROFILES:
        raise ConfigurationError(f"perfil desconhecido: {name!r} (opções: {sorted(PROFILES)})")

    defaults = dict(PROFILES[name])
    if name == "desk":
        defaults["decay_epochs"] = relative_decay_epochs(defaults["epochs"])
    else:
        defaults["decay_epochs"] = SCALE_DECAY_EPOCHS

    logger.debug(f"Perfil {name}: D={defaults['D']}, K={defaults['K']}, N_m={defaults['N_m']}")
    return defaults
