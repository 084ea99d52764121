"""
Verificação de gradientes por diferenças finitas centrais.
"""

import logging

import numpy as np

from forecaster.errors import ConfigurationError, NumericHealthError
from forecaster.nn.autodiff import no_grad

logger = logging.getLogger(__name__)


def _evaluate(fn):
    with no_grad():
        return float(fn().values)


def _ensure_finite(values, name):
    if not np.all(np.isfinite(values)):
        raise NumericHealthError(name)


def grad_check(fn, inputs, step=1e-5, samples=None, rng=None) -> float:
    """
    Compara o gradiente analítico de `fn()` (escalar) em relação a `inputs`
    com diferenças finitas centrais. Devolve o maior
    |analítico - numérico| / max(1, |numérico|).

    `samples` limita o número de elementos verificados por entrada (sorteados
    com `rng`), útil no modelo completo.
    """
    for index, x in enumerate(inputs):
        if x.values.dtype != np.float64:
            raise ConfigurationError("grad_check exige precisão dupla")
        _ensure_finite(x.values, x.name or f"inputs[{index}]")
        x.values = np.array(x.values)
        x.zero_grad()

    out = fn()
    _ensure_finite(out.values, "output")
    out.backward()

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for index, x in enumerate(inputs):
        analytic = x.grad if x.grad is not None else np.zeros_like(x.values)
        _ensure_finite(analytic, f"grad({x.name or f'inputs[{index}]'})")

        flat = x.values.reshape(-1)
        positions = np.arange(flat.size)
        if samples is not None and samples < flat.size:
            positions = rng.choice(flat.size, size=samples, replace=False)

        for p in positions:
            original = flat[p]
            flat[p] = original + step
            plus = _evaluate(fn)
            flat[p] = original - step
            minus = _evaluate(fn)
            flat[p] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericHealthError(x.name or f"inputs[{index}]", "diferença finita não finita")

            numeric = (plus - minus) / (2.0 * step)
            error = abs(analytic.reshape(-1)[p] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, error)

    logger.debug(f"grad_check: erro relativo máximo {worst:.3e}")
    return worst
