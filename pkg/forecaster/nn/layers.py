"""
Parâmetros, registro de módulos e camadas treináveis.

Os nomes dos parâmetros são caminhos pontuados derivados dos atributos
(ex.: "encoder.fusion.w_bq.weight"), únicos dentro de um modelo.
"""

import logging
import math
from collections import OrderedDict
from typing import Dict, Iterator, List, Tuple

import numpy as np

from forecaster.errors import CheckpointError, ConfigurationError
from forecaster.nn import functional as F
from forecaster.nn.autodiff import DiffArray, get_dtype

logger = logging.getLogger(__name__)


class Parameter(DiffArray):
    __slots__ = ("trainable",)

    def __init__(self, values, trainable=True, name=None):
        super().__init__(np.array(values, dtype=get_dtype()), requires_grad=trainable, name=name)
        self.trainable = trainable


def kaiming_uniform(rng, shape, fan_in) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Base com registro automático de parâmetros e submódulos."""

    def __init__(self):
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def named_parameters(self, prefix="") -> Iterator[Tuple[str, Parameter]]:
        for name, param in self._parameters.items():
            full = f"{prefix}{name}"
            param.name = full
            yield full, param
        for name, module in self._modules.items():
            yield from module.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [param for _, param in self.named_parameters()]

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, param.values) for name, param in self.named_parameters())

    def load_state_dict(self, state) -> None:
        """Copia valores validando nomes e formatos."""
        own = OrderedDict(self.named_parameters())
        missing = [name for name in own if name not in state]
        unexpected = [name for name in state if name not in own]
        if missing or unexpected:
            raise CheckpointError(f"parâmetros incompatíveis: faltando {missing[:5]}, inesperados {unexpected[:5]}")
        for name, param in own.items():
            values = np.asarray(state[name])
            if values.shape != param.shape:
                raise CheckpointError(f"{name}: formato {values.shape} no checkpoint, modelo espera {param.shape}")
            param.values = values.astype(param.dtype, copy=True)

    def to(self, dtype) -> "Module":
        """Converte todos os parâmetros para `dtype` (float32 no treino)."""
        for param in self.parameters():
            param.values = param.values.astype(dtype)
        return self


class ModuleList(Module):
    def __init__(self, modules=()):
        super().__init__()
        object.__setattr__(self, "_items", [])
        for module in modules:
            self.append(module)

    def append(self, module) -> None:
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, index):
        return self._items[index]


def count_parameters(module) -> int:
    """Soma dos elementos de todos os parâmetros treináveis."""
    return int(sum(param.size for param in module.parameters() if param.trainable))


# ============================================
# CAMADAS
# ============================================

class Linear(Module):
    def __init__(self, n_in, n_out, rng, bias=True):
        super().__init__()
        self.weight = Parameter(kaiming_uniform(rng, (n_in, n_out), n_in))
        self.bias = Parameter(kaiming_uniform(rng, (n_out,), n_in)) if bias else None

    def forward(self, x):
        return F.linear(x, self.weight, self.bias)


class MLP(Module):
    """Duas camadas lineares com ReLU entre elas."""

    def __init__(self, n_in, n_out, rng, hidden=None):
        super().__init__()
        hidden = hidden or n_out
        self.fc1 = Linear(n_in, hidden, rng)
        self.fc2 = Linear(hidden, n_out, rng)

    def forward(self, x):
        return self.fc2(self.fc1(x).relu())


class LayerNorm(Module):
    def __init__(self, dim):
        super().__init__()
        self.gain = Parameter(np.ones(dim))
        self.shift = Parameter(np.zeros(dim))

    def forward(self, x):
        return F.layer_norm(x, self.gain, self.shift)


class Conv1d(Module):
    def __init__(self, c_in, c_out, kernel_size, rng):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ConfigurationError(f"conv1d exige kernel ímpar (recebido k={kernel_size})")
        fan_in = c_in * kernel_size
        self.kernel = Parameter(kaiming_uniform(rng, (kernel_size, c_in, c_out), fan_in))
        self.bias = Parameter(kaiming_uniform(rng, (c_out,), fan_in))

    def forward(self, x):
        return F.conv1d(x, self.kernel, self.bias)


class LSTM(Module):
    """LSTM de uma camada sobre o penúltimo eixo; bias do forget gate começa em 1."""

    def __init__(self, n_in, hidden, rng):
        super().__init__()
        self.hidden = hidden
        self.w_ih = Parameter(kaiming_uniform(rng, (n_in, 4 * hidden), hidden))
        self.w_hh = Parameter(kaiming_uniform(rng, (hidden, 4 * hidden), hidden))
        bias = kaiming_uniform(rng, (4 * hidden,), hidden)
        bias[hidden:2 * hidden] = 1.0
        self.b = Parameter(bias)

    def forward(self, xs):
        outputs, _ = F.lstm_sequence(xs, self.w_ih, self.w_hh, self.b)
        return outputs


class MultiHeadAttention(Module):
    def __init__(self, dim, heads, rng):
        super().__init__()
        if dim % heads:
            raise ConfigurationError(f"{heads} cabeças não dividem D={dim}")
        self.heads = heads
        self.q = Linear(dim, dim, rng)
        self.k = Linear(dim, dim, rng)
        self.v = Linear(dim, dim, rng)
        self.o = Linear(dim, dim, rng)

    def params(self) -> Dict:
        return {
            "wq": self.q.weight, "bq": self.q.bias, "wk": self.k.weight, "bk": self.k.bias,
            "wv": self.v.weight, "bv": self.v.bias, "wo": self.o.weight, "bo": self.o.bias,
        }

    def forward(self, q_in, kv_in, key_mask=None, allow_empty=False, return_weights=False):
        return F.multi_head_attention(
            q_in, kv_in, self.params(), self.heads, key_mask, allow_empty, return_weights,
        )


class MSN(Module):
    """
    Nó multiescala: três conv1d paralelas (k = 1, 3, 5) ao longo do
    penúltimo eixo, concatenadas nos canais (3D) e seguidas de LSTM.
    Posições inválidas entram como zeros.
    """

    KERNELS = (1, 3, 5)

    def __init__(self, c_in, dim, rng):
        super().__init__()
        self.convs = ModuleList(Conv1d(c_in, dim, k, rng) for k in self.KERNELS)
        self.lstm = LSTM(dim * len(self.KERNELS), dim, rng)

    def forward(self, x, mask=None):
        if mask is not None:
            x = F.where(np.asarray(mask, dtype=bool)[..., None], x, 0.0)
        multi_scale = F.concat([conv(x).relu() for conv in self.convs], axis=-1)
        return self.lstm(multi_scale)
