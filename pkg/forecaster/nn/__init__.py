from forecaster.nn.autodiff import DiffArray, as_diff, concat, no_grad, precision, stack, where  # noqa: F401
from forecaster.nn.gradcheck import grad_check  # noqa: F401
from forecaster.nn.layers import (  # noqa: F401
    LSTM, MLP, MSN, Conv1d, LayerNorm, Linear, Module, ModuleList, MultiHeadAttention, Parameter,
    count_parameters,
)
from forecaster.nn.positional import positional_embedding  # noqa: F401
