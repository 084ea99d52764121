import logging
from typing import Dict

import numpy as np

logger = logging.getLogger(__name__)


class Adam:
    """Adam sem weight decay; momentos guardados por nome de parâmetro."""

    def __init__(self, named_parameters, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = dict(named_parameters)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.values) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.values) for name, p in self.params.items()}

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self, lr=None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, param in self.params.items():
            if param.grad is None or not param.trainable:
                continue
            g = param.grad
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            if lr == 0.0:
                continue
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            param.values = (param.values - lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(param.dtype)

    def state_dict(self) -> Dict:
        return {"t": self.t, "m": dict(self.m), "v": dict(self.v)}

    def load_state_dict(self, state) -> None:
        self.t = int(state["t"])
        for name in self.params:
            self.m[name] = np.asarray(state["m"][name], dtype=self.params[name].dtype).copy()
            self.v[name] = np.asarray(state["v"][name], dtype=self.params[name].dtype).copy()
