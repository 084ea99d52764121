"""
Arrays diferenciáveis em modo reverso sobre numpy.

Cada DiffArray guarda os valores, os pais no registro da computação e uma
closure de backward que devolve um gradiente por pai. O gradiente só é
acumulado em folhas (parâmetros e entradas com requires_grad).
"""

import logging
import threading
from contextlib import contextmanager
from typing import Iterator, Tuple

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

_state = threading.local()

DTYPES = {"float32": np.float32, "float64": np.float64}


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


def get_dtype() -> np.dtype:
    return getattr(_state, "dtype", np.float64)


@contextmanager
def no_grad() -> Iterator[None]:
    """Desliga o registro da computação (avaliação, benchmark)."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


@contextmanager
def precision(name) -> Iterator[None]:
    """float64 para testes e grad_check, float32 para treino."""
    previous = get_dtype()
    _state.dtype = DTYPES[name] if isinstance(name, str) else np.dtype(name).type
    try:
        yield
    finally:
        _state.dtype = previous


def unbroadcast(grad, shape) -> np.ndarray:
    """Soma `grad` de volta ao `shape` de um operando que sofreu broadcast."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class DiffArray:
    __slots__ = ("values", "grad", "requires_grad", "name", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, values, parents=(), backward=None, requires_grad=False, name=None, dtype=None):
        if isinstance(values, np.ndarray) and dtype is None:
            self.values = values
        else:
            self.values = np.asarray(values, dtype=dtype or get_dtype())
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = parents
        self._backward = backward

    # ============================================
    # ATRIBUTOS
    # ============================================

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def size(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.shape[0]

    def numpy(self) -> np.ndarray:
        return self.values

    def item(self) -> float:
        return self.values.item()

    def detach(self) -> "DiffArray":
        return DiffArray(self.values)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"<DiffArray shape={self.shape}{label} requires_grad={self.requires_grad}>"

    # ============================================
    # BACKWARD
    # ============================================

    def backward(self, grad=None):
        """Propaga gradientes visitando cada nó exatamente uma vez."""
        if not self.requires_grad:
            return
        seed = np.ones_like(self.values) if grad is None else np.asarray(grad, dtype=self.dtype)
        pending = {id(self): seed}

        for node in reversed(_topological_order(self)):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # ============================================
    # OPERADORES
    # ============================================

    def _other(self, other):
        if isinstance(other, DiffArray):
            return other
        return DiffArray(np.asarray(other, dtype=self.dtype))

    def __add__(self, other):
        return add(self, self._other(other))

    def __radd__(self, other):
        return add(self._other(other), self)

    def __sub__(self, other):
        return sub(self, self._other(other))

    def __rsub__(self, other):
        return sub(self._other(other), self)

    def __mul__(self, other):
        return mul(self, self._other(other))

    def __rmul__(self, other):
        return mul(self._other(other), self)

    def __truediv__(self, other):
        return div(self, self._other(other))

    def __rtruediv__(self, other):
        return div(self._other(other), self)

    def __neg__(self):
        return _record(-self.values, (self,), lambda g: (-g,))

    def __pow__(self, exponent):
        exponent = float(exponent)
        x = self.values
        return _record(x ** exponent, (self,), lambda g: (g * exponent * x ** (exponent - 1.0),))

    def __matmul__(self, other):
        return matmul(self, self._other(other))

    def __getitem__(self, index):
        return getitem(self, index)

    # ============================================
    # REDUÇÕES E FORMATO
    # ============================================

    def sum(self, axis=None, keepdims=False) -> "DiffArray":
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return _record(self.values.sum(axis=axis, keepdims=keepdims), (self,), backward)

    def mean(self, axis=None, keepdims=False) -> "DiffArray":
        if axis is None:
            count = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "DiffArray":
        shape = shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape
        original = self.shape
        return _record(self.values.reshape(shape), (self,), lambda g: (g.reshape(original),))

    def transpose(self, *axes) -> "DiffArray":
        axes = axes[0] if len(axes) == 1 and isinstance(axes[0], (tuple, list)) else axes
        axes = tuple(axes) if axes else tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return _record(self.values.transpose(axes), (self,), lambda g: (g.transpose(inverse),))

    def swapaxes(self, a, b) -> "DiffArray":
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(axes)

    def broadcast_to(self, shape) -> "DiffArray":
        original = self.shape
        return _record(np.broadcast_to(self.values, shape).copy(), (self,), lambda g: (unbroadcast(g, original),))

    # ============================================
    # ELEMENTO A ELEMENTO
    # ============================================

    def exp(self) -> "DiffArray":
        out = np.exp(self.values)
        return _record(out, (self,), lambda g: (g * out,))

    def log(self) -> "DiffArray":
        x = self.values
        return _record(np.log(x), (self,), lambda g: (g / x,))

    def sqrt(self) -> "DiffArray":
        out = np.sqrt(self.values)
        return _record(out, (self,), lambda g: (g * 0.5 / out,))

    def tanh(self) -> "DiffArray":
        out = np.tanh(self.values)
        return _record(out, (self,), lambda g: (g * (1.0 - out * out),))

    def sigmoid(self) -> "DiffArray":
        out = expit(self.values)
        return _record(out, (self,), lambda g: (g * out * (1.0 - out),))

    def relu(self) -> "DiffArray":
        x = self.values
        return _record(np.maximum(x, 0.0), (self,), lambda g: (g * (x > 0),))

    def softplus(self) -> "DiffArray":
        x = self.values
        return _record(np.logaddexp(0.0, x), (self,), lambda g: (g * expit(x),))

    def abs(self) -> "DiffArray":
        x = self.values
        return _record(np.abs(x), (self,), lambda g: (g * np.sign(x),))


def _record(values, parents, backward):
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        return DiffArray(values, parents, backward, requires_grad=True)
    return DiffArray(values)


def _topological_order(root):
    """Pós-ordem iterativa (pais antes dos filhos)."""
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def as_diff(x, dtype=None) -> DiffArray:
    if isinstance(x, DiffArray):
        return x
    return DiffArray(np.array(x, dtype=dtype or get_dtype()))


# ============================================
# OPERAÇÕES BINÁRIAS E ESTRUTURAIS
# ============================================

def add(a, b) -> DiffArray:
    sa, sb = a.shape, b.shape
    return _record(a.values + b.values, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(g, sb)))


def sub(a, b) -> DiffArray:
    sa, sb = a.shape, b.shape
    return _record(a.values - b.values, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(-g, sb)))


def mul(a, b) -> DiffArray:
    x, y = a.values, b.values
    return _record(x * y, (a, b), lambda g: (unbroadcast(g * y, x.shape), unbroadcast(g * x, y.shape)))


def div(a, b) -> DiffArray:
    x, y = a.values, b.values

    def backward(g):
        return unbroadcast(g / y, x.shape), unbroadcast(-g * x / (y * y), y.shape)

    return _record(x / y, (a, b), backward)


def matmul(a, b) -> DiffArray:
    x, y = a.values, b.values

    def backward(g):
        gx = np.matmul(g, np.swapaxes(y, -1, -2))
        gy = np.matmul(np.swapaxes(x, -1, -2), g)
        return unbroadcast(gx, x.shape), unbroadcast(gy, y.shape)

    return _record(np.matmul(x, y), (a, b), backward)


def getitem(a, index) -> DiffArray:
    shape, dtype = a.shape, a.dtype

    def backward(g):
        out = np.zeros(shape, dtype=dtype)
        np.add.at(out, index, g)
        return (out,)

    return _record(a.values[index], (a,), backward)


def where(condition, a, b) -> DiffArray:
    """Seleção sem multiplicação: valores não selecionados (até NaN) não vazam."""
    condition = np.asarray(condition, dtype=bool)
    if isinstance(a, DiffArray) and not isinstance(b, DiffArray):
        b = as_diff(b, dtype=a.dtype)
    elif isinstance(b, DiffArray) and not isinstance(a, DiffArray):
        a = as_diff(a, dtype=b.dtype)
    a, b = as_diff(a), as_diff(b)
    sa, sb = a.shape, b.shape
    out = np.where(condition, a.values, b.values)

    def backward(g):
        return (unbroadcast(np.where(condition, g, 0.0), sa),
                unbroadcast(np.where(condition, 0.0, g), sb))

    return _record(out, (a, b), backward)


def concat(arrays, axis=-1) -> DiffArray:
    arrays = [as_diff(a) for a in arrays]
    axis = axis % arrays[0].ndim
    bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _record(np.concatenate([a.values for a in arrays], axis=axis), tuple(arrays), backward)


def stack(arrays, axis=0) -> DiffArray:
    arrays = [as_diff(a) for a in arrays]
    axis = axis % (arrays[0].ndim + 1)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(arrays)))

    return _record(np.stack([a.values for a in arrays], axis=axis), tuple(arrays), backward)
