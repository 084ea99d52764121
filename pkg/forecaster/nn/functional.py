"""
Operações neurais primitivas sobre DiffArray.

Convenções de máscara: máscaras são booleanas (True = válido) e entram
sempre por seleção (`where`), nunca por multiplicação, para que valores de
preenchimento (inclusive NaN) não alcancem as saídas.
"""

import logging
import math
from typing import Tuple, Union

import numpy as np
from scipy.special import logsumexp

from forecaster.errors import ConfigurationError, DegenerateSoftmaxError, ShapeError
from forecaster.nn.autodiff import DiffArray, _record, as_diff, concat, stack, where

logger = logging.getLogger(__name__)

LAYER_NORM_EPS = 1e-5


def linear(x, weight, bias=None) -> DiffArray:
    """y = xW + b sobre o último eixo."""
    x = as_diff(x)
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"linear: entrada {x.shape} incompatível com pesos {weight.shape}")
    y = x @ weight
    return y + bias if bias is not None else y


def relu(x) -> DiffArray:
    return as_diff(x).relu()


def softmax(x, axis=-1, mask=None, allow_empty=False) -> DiffArray:
    """
    Softmax estável (subtrai o máximo). Posições mascaradas recebem peso 0
    exato; um eixo todo mascarado é erro, exceto com `allow_empty`, que
    devolve zeros nessa linha.
    """
    x = as_diff(x)
    values = x.values

    if mask is None:
        shifted = values - values.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=axis, keepdims=True)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), values.shape)
        empty = ~mask.any(axis=axis, keepdims=True)
        if empty.any() and not allow_empty:
            raise DegenerateSoftmaxError(f"softmax com eixo {axis} todo mascarado (formato {values.shape})")
        peak = np.where(mask, values, -np.inf).max(axis=axis, keepdims=True)
        peak = np.where(empty, 0.0, peak)
        e = np.where(mask, np.exp(np.where(mask, values, peak) - peak), 0.0)
        total = e.sum(axis=axis, keepdims=True)
        out = e / np.where(empty, 1.0, total)
    out = out.astype(values.dtype, copy=False)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _record(out, (x,), backward)


def layer_norm(x, gain, shift, eps=LAYER_NORM_EPS) -> DiffArray:
    x = as_diff(x)
    centered = x - x.mean(axis=-1, keepdims=True)
    variance = (centered * centered).mean(axis=-1, keepdims=True)
    return centered / (variance + eps).sqrt() * gain + shift


def conv1d(x, kernel, bias=None) -> DiffArray:
    """
    Correlação cruzada ao longo do penúltimo eixo com padding simétrico de
    zeros. x: [.., L, C_in]; kernel: [k, C_in, C_out] -> [.., L, C_out].
    """
    x = as_diff(x)
    k = kernel.shape[0]
    if k % 2 == 0:
        raise ConfigurationError(f"conv1d exige kernel ímpar (recebido k={k})")
    if x.shape[-1] != kernel.shape[1]:
        raise ShapeError(f"conv1d: entrada {x.shape} incompatível com kernel {kernel.shape}")

    length = x.shape[-2]
    pad = k // 2
    if pad:
        zeros = DiffArray(np.zeros(x.shape[:-2] + (pad, x.shape[-1]), dtype=x.dtype))
        x = concat([zeros, x, zeros], axis=-2)

    out = None
    for j in range(k):
        term = x[..., j:j + length, :] @ kernel[j]
        out = term if out is None else out + term
    return out + bias if bias is not None else out


def lstm_cell(x, h, c, w_ih, w_hh, b) -> Tuple[DiffArray, DiffArray]:
    """Recorrência padrão; ordem das portas: input, forget, candidata, output."""
    hidden = h.shape[-1]
    if w_hh.shape[0] != hidden or w_ih.shape[-1] != 4 * hidden:
        raise ShapeError(f"lstm: estado {h.shape} incompatível com pesos {w_ih.shape} / {w_hh.shape}")
    gates = linear(x, w_ih) + linear(h, w_hh) + b
    i = gates[..., 0:hidden].sigmoid()
    f = gates[..., hidden:2 * hidden].sigmoid()
    g = gates[..., 2 * hidden:3 * hidden].tanh()
    o = gates[..., 3 * hidden:4 * hidden].sigmoid()
    c_next = f * c + i * g
    return o * c_next.tanh(), c_next


def lstm_sequence(xs, w_ih, w_hh, b, h0=None, c0=None) -> Tuple[DiffArray, Tuple[DiffArray, DiffArray]]:
    """Itera lstm_cell sobre o penúltimo eixo; devolve ([.., L, H], (h, c))."""
    xs = as_diff(xs)
    hidden = w_hh.shape[0]
    batch_shape = xs.shape[:-2]
    h = h0 if h0 is not None else DiffArray(np.zeros(batch_shape + (hidden,), dtype=xs.dtype))
    c = c0 if c0 is not None else DiffArray(np.zeros(batch_shape + (hidden,), dtype=xs.dtype))

    outputs = []
    for t in range(xs.shape[-2]):
        h, c = lstm_cell(xs[..., t, :], h, c, w_ih, w_hh, b)
        outputs.append(h)
    return stack(outputs, axis=-2), (h, c)


def split_heads(x, heads) -> DiffArray:
    *lead, length, dim = x.shape
    return x.reshape(tuple(lead) + (length, heads, dim // heads)).swapaxes(-2, -3)


def merge_heads(x) -> DiffArray:
    *lead, heads, length, dh = x.shape
    return x.swapaxes(-2, -3).reshape(tuple(lead) + (length, heads * dh))


def attention_weights(q, k, heads, key_mask=None, allow_empty=False, temperature=None) -> DiffArray:
    """
    Pesos de atenção [.., H, Lq, Lk] para q [.., Lq, D] e k [.., Lk, D].
    key_mask: [.., Lk] ou [.., Lq, Lk].
    """
    qh, kh = split_heads(q, heads), split_heads(k, heads)
    scores = (qh @ kh.swapaxes(-1, -2)) * (1.0 / math.sqrt(qh.shape[-1]))
    if temperature is not None:
        scores = scores * temperature

    mask = None
    if key_mask is not None:
        key_mask = np.asarray(key_mask, dtype=bool)
        if key_mask.ndim == q.ndim - 1:
            mask = key_mask[..., None, None, :]
        else:
            mask = key_mask[..., None, :, :]
    return softmax(scores, axis=-1, mask=mask, allow_empty=allow_empty)


def multi_head_attention(q_in, kv_in, params, heads, key_mask=None, allow_empty=False, return_weights=False) -> Union[DiffArray, Tuple[DiffArray, DiffArray]]:
    """
    Atenção por produto escalar escalonado com `heads` cabeças. `params` é
    um dict com wq, bq, wk, bk, wv, bv, wo, bo. O resíduo fica com quem chama.
    """
    D = q_in.shape[-1]
    if D % heads:
        raise ConfigurationError(f"{heads} cabeças não dividem D={D}")
    q = linear(q_in, params["wq"], params["bq"])
    k = linear(kv_in, params["wk"], params["bk"])
    v = linear(kv_in, params["wv"], params["bv"])

    weights = attention_weights(q, k, heads, key_mask, allow_empty)
    out = linear(merge_heads(weights @ split_heads(v, heads)), params["wo"], params["bo"])
    return (out, weights) if return_weights else out


def masked_mean(x, mask, axis) -> DiffArray:
    """Média sobre `axis` apenas nas posições válidas; sem válidas, zero."""
    x = as_diff(x)
    mask = np.asarray(mask, dtype=bool)
    while mask.ndim < x.ndim:
        mask = mask[..., None]
    mask = np.broadcast_to(mask, x.shape)
    count = np.maximum(mask.sum(axis=axis), 1).astype(x.dtype)
    return where(mask, x, 0.0).sum(axis=axis) / DiffArray(count)


def smooth_l1(e) -> DiffArray:
    """0.5 e^2 se |e| < 1, senão |e| - 0.5."""
    e = as_diff(e)
    small = np.abs(e.values) < 1.0
    return where(small, (e * e) * 0.5, e.abs() - 0.5)


def mixture_nll(probs, sq_dist, axis=-1) -> DiffArray:
    """
    -log sum_i p_i exp(-d_i / 2) em forma log-sum-exp, com gradiente
    fechado para p e d.
    """
    probs, sq_dist = as_diff(probs), as_diff(sq_dist)
    p, d = probs.values, sq_dist.values
    lse = logsumexp(-0.5 * d, b=p, axis=axis, keepdims=True)
    out = (-lse).squeeze(axis=axis).astype(d.dtype, copy=False)

    def backward(g):
        g = np.expand_dims(g, axis)
        kernel = np.exp(-0.5 * d - lse)
        return (-g * kernel, 0.5 * g * p * kernel)

    return _record(out, (probs, sq_dist), backward)
