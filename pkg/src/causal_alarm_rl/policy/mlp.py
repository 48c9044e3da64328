"""
Two-hidden-layer ReLU network in numpy with hand-written backprop and Adam.

Parameters live in a flat dict: ``W0, b0, W1, b1, W2, b2`` for the trunk and
output layer, plus ``Wv, bv`` when the network carries a scalar value head on
the shared trunk (actor-critic).
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from causal_alarm_rl.errors import InvalidArgumentError

Params = Dict[str, np.ndarray]


@dataclass
class PolicyNet:
    params: Params
    value_head: bool

    @property
    def input_size(self) -> int:
        return self.params["W0"].shape[0]

    @property
    def output_size(self) -> int:
        return self.params["W2"].shape[1]

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        p = self.params
        return (p["W0"].shape[0], p["W0"].shape[1], p["W1"].shape[1], p["W2"].shape[1])

    def copy(self) -> "PolicyNet":
        return PolicyNet({k: v.copy() for k, v in self.params.items()}, self.value_head)

    def is_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.params.values())


def init_policy_net(
    input_size: int,
    output_size: int,
    hidden_size: int,
    rng: np.random.Generator,
    value_head: bool = False,
) -> PolicyNet:
    """He-initialised trunk; the output layer starts small so the initial policy is near uniform."""
    def dense(fan_in: int, fan_out: int, scale: float) -> np.ndarray:
        return rng.standard_normal((fan_in, fan_out)) * scale * np.sqrt(2.0 / fan_in)

    params: Params = {
        "W0": dense(input_size, hidden_size, 1.0),
        "b0": np.zeros(hidden_size),
        "W1": dense(hidden_size, hidden_size, 1.0),
        "b1": np.zeros(hidden_size),
        "W2": dense(hidden_size, output_size, 0.01),
        "b2": np.zeros(output_size),
    }
    if value_head:
        params["Wv"] = dense(hidden_size, 1, 0.5)
        params["bv"] = np.zeros(1)
    return PolicyNet(params, value_head)


@dataclass
class ForwardCache:
    x: np.ndarray
    z0: np.ndarray
    h0: np.ndarray
    z1: np.ndarray
    h1: np.ndarray


def mlp_forward_cached(
    net: PolicyNet, x: np.ndarray
) -> Tuple[np.ndarray, Optional[np.ndarray], ForwardCache]:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != net.input_size:
        raise InvalidArgumentError(
            f"input has {x.shape[1]} features, network expects {net.input_size}"
        )
    p = net.params
    z0 = x @ p["W0"] + p["b0"]
    h0 = np.maximum(z0, 0.0)
    z1 = h0 @ p["W1"] + p["b1"]
    h1 = np.maximum(z1, 0.0)
    logits = h1 @ p["W2"] + p["b2"]
    value = (h1 @ p["Wv"] + p["bv"])[:, 0] if net.value_head else None
    return logits, value, ForwardCache(x, z0, h0, z1, h1)


def mlp_forward(net: PolicyNet, x: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Batch forward pass: ``(logits (B, out), value (B,) or None)``."""
    logits, value, _ = mlp_forward_cached(net, x)
    return logits, value


def mlp_backward(
    net: PolicyNet,
    cache: ForwardCache,
    d_logits: np.ndarray,
    d_value: Optional[np.ndarray] = None,
) -> Params:
    """Gradients of a scalar loss given its gradients w.r.t. the outputs."""
    p = net.params
    if d_logits.shape != (cache.x.shape[0], net.output_size):
        raise InvalidArgumentError(
            f"logit gradient has shape {d_logits.shape}, expected {(cache.x.shape[0], net.output_size)}"
        )
    grads: Params = {
        "W2": cache.h1.T @ d_logits,
        "b2": d_logits.sum(axis=0),
    }
    d_h1 = d_logits @ p["W2"].T
    if net.value_head:
        dv = np.zeros(cache.x.shape[0]) if d_value is None else np.asarray(d_value, dtype=np.float64)
        grads["Wv"] = cache.h1.T @ dv[:, None]
        grads["bv"] = np.array([dv.sum()])
        d_h1 = d_h1 + dv[:, None] @ p["Wv"].T

    d_z1 = d_h1 * (cache.z1 > 0)
    grads["W1"] = cache.h0.T @ d_z1
    grads["b1"] = d_z1.sum(axis=0)
    d_z0 = (d_z1 @ p["W1"].T) * (cache.z0 > 0)
    grads["W0"] = cache.x.T @ d_z0
    grads["b0"] = d_z0.sum(axis=0)
    return grads


def clip_grad_norm(grads: Params, max_norm: float) -> float:
    """Scale ``grads`` in place to global norm ``max_norm`` (0 disables); returns the pre-clip norm."""
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


@dataclass
class AdamState:
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    t: int = 0

    def copy(self) -> "AdamState":
        return AdamState(
            {k: a.copy() for k, a in self.m.items()},
            {k: a.copy() for k, a in self.v.items()},
            self.t,
        )


def adam_step(
    params: Params,
    grads: Params,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Params:
    """One bias-corrected Adam update of ``params`` in place."""
    state.t += 1
    for name, g in grads.items():
        if name not in params:
            raise InvalidArgumentError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise InvalidArgumentError(
                f"gradient for {name} has shape {g.shape}, parameter has {params[name].shape}"
            )
        m = state.m.setdefault(name, np.zeros_like(g))
        v = state.v.setdefault(name, np.zeros_like(g))
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        m_hat = m / (1 - beta1**state.t)
        v_hat = v / (1 - beta2**state.t)
        params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params
