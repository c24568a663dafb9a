"""Adam over named parameter dictionaries."""

from dataclasses import dataclass, field

import numpy as np

Params = dict[str, np.ndarray]


@dataclass
class AdamState:
    """First/second moments per parameter and the shared step counter."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    def step(self, params: Params, grads: Params, lr: float) -> Params:
        """Return updated parameters; moments and ``t`` advance in place."""
        self.t += 1
        updated: Params = {}
        for name, value in params.items():
            g = grads[name]
            m = self.beta1 * self.m.get(name, np.zeros_like(value)) + (1.0 - self.beta1) * g
            v = self.beta2 * self.v.get(name, np.zeros_like(value)) + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            if lr == 0.0:
                updated[name] = value.copy()
                continue
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated
