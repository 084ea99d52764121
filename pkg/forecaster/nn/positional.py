import logging

import numpy as np
from cachetools import LRUCache, cached

from forecaster.errors import ConfigurationError
from forecaster.nn.autodiff import get_dtype

logger = logging.getLogger(__name__)

_cache = LRUCache(maxsize=64)


@cached(_cache, key=lambda length, dim, dtype: (length, dim, np.dtype(dtype).name))
def _table(length, dim, dtype):
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = 10000.0 ** (np.arange(0, dim, 2, dtype=np.float64) / dim)
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(positions / rates)
    table[:, 1::2] = np.cos(positions / rates)
    table = table.astype(dtype)
    table.setflags(write=False)
    return table


def positional_embedding(length, dim, dtype=None) -> np.ndarray:
    """PE[t, 2i] = sin(t / 10000^(2i/D)), PE[t, 2i+1] = cos(...). Somente leitura."""
    if dim % 2:
        raise ConfigurationError(f"embedding posicional exige D par (recebido {dim})")
    return _table(int(length), int(dim), dtype or get_dtype())
