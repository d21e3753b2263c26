"""Parameter containers with stable slash-separated names."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def parameter(data, name=None):
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


class Module:
    """Holds parameters and child modules as attributes.

    ``named_parameters`` walks attributes in insertion order, so names are
    stable across runs: ``layers/0/w_q`` and so on.
    """

    training = True

    def named_parameters(self, prefix=""):
        out = {}
        for key, value in vars(self).items():
            if key.startswith("_"):
                continue
            path = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                out[path] = value
            elif isinstance(value, Module):
                out.update(value.named_parameters(path + "/"))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.update(item.named_parameters(f"{path}/{i}/"))
                    elif isinstance(item, Tensor) and item.requires_grad:
                        out[f"{path}/{i}"] = item
        return out

    def parameters(self):
        return list(self.named_parameters().values())

    def train(self, mode=True):
        self.training = mode
        for value in vars(self).values():
            if isinstance(value, Module):
                value.train(mode)
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        item.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def state_dict(self):
        return {k: p.data.copy() for k, p in self.named_parameters().items()}

    def load_state_dict(self, state):
        params = self.named_parameters()
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for k, p in params.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {k}: {arr.shape} vs {p.data.shape}")
            p.data = arr.copy()


def glorot(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


class Linear(Module):
    def __init__(self, n_in, n_out, rng, bias=True):
        self.weight = parameter(glorot(rng, n_in, n_out))
        if bias:
            self.bias = parameter(np.zeros(n_out))
        else:
            self.bias = None

    def __call__(self, x):
        y = x @ self.weight
        return y + self.bias if self.bias is not None else y
