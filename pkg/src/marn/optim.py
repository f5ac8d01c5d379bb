"""Adam optimizer over a ParamStore."""

import numpy as np

from . import kernels as K


class Adam:
    """Adam with bias correction: p -= lr * m_hat / (sqrt(v_hat) + eps)."""

    def __init__(self, store, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros(v.size) for name, v in store.items()}
        self._v = {name: np.zeros(v.size) for name, v in store.items()}

    def step(self):
        """Apply one update from the store's current gradients."""
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self.store.items():
            g = self.store.grad(name)
            K.adam_update(
                p.ravel(), g.ravel(), self._m[name], self._v[name],
                self.lr, self.beta1, self.beta2, self.eps, bc1, bc2,
            )
