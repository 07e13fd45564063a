"""Fully connected networks with hand-written reverse mode, in float64.

Parameters live in a flat ``dict`` (``W0``, ``b0``, ``ln_g0``, ...) so the
optimizer, soft updates and checkpointing can treat every network alike.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

LN_EPS = 1e-5

_ACT = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(float)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "linear": (lambda z: z, lambda z, a: np.ones_like(z)),
}


@dataclass
class MLP:
    """Weights, biases, optional layer-norm affine, and activation tags."""

    sizes: list[int]
    activations: list[str]
    norm_layers: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.activations) != len(self.sizes) - 1:
            raise ValueError("need one activation per affine layer")
        for act in self.activations:
            if act not in _ACT:
                raise ValueError(f"unknown activation {act!r}")
        self.norm_layers = tuple(self.norm_layers)

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    @classmethod
    def init(cls, sizes, activations, rng: np.random.Generator, norm_layers=(), final_scale=3e-3) -> "MLP":
        """Fan-in uniform initialization; the last layer starts near zero."""
        net = cls(list(sizes), list(activations), tuple(norm_layers))
        for i in range(net.n_layers):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            bound = final_scale if i == net.n_layers - 1 else 1.0 / np.sqrt(fan_in)
            net.params[f"W{i}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            net.params[f"b{i}"] = rng.uniform(-bound, bound, size=fan_out)
            if i in net.norm_layers:
                net.params[f"ln_g{i}"] = np.ones(fan_out)
                net.params[f"ln_b{i}"] = np.zeros(fan_out)
        return net

    def copy(self) -> "MLP":
        return copy.deepcopy(self)

    def forward(self, x):
        """Return ``(output, cache)`` for a batch ``x`` of shape ``(B, in)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ValueError(f"expected input of shape (B, {self.sizes[0]}), got {x.shape}")
        cache = []
        h = x
        for i in range(self.n_layers):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            ln = None
            if i in self.norm_layers:
                mu = z.mean(axis=1, keepdims=True)
                var = z.var(axis=1, keepdims=True)
                inv_std = 1.0 / np.sqrt(var + LN_EPS)
                zhat = (z - mu) * inv_std
                ln = (zhat, inv_std)
                z = zhat * self.params[f"ln_g{i}"] + self.params[f"ln_b{i}"]
            a = _ACT[self.activations[i]][0](z)
            cache.append((h, z, ln, a))
            h = a
        return h, cache

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, dout):
        """Gradients of ``sum(dout * output)`` w.r.t. parameters and input."""
        grads = {}
        g = np.asarray(dout, dtype=float)
        for i in reversed(range(self.n_layers)):
            h, z, ln, a = cache[i]
            g = g * _ACT[self.activations[i]][1](z, a)
            if ln is not None:
                zhat, inv_std = ln
                grads[f"ln_g{i}"] = np.sum(g * zhat, axis=0)
                grads[f"ln_b{i}"] = np.sum(g, axis=0)
                dzhat = g * self.params[f"ln_g{i}"]
                d = zhat.shape[1]
                g = inv_std / d * (d * dzhat - dzhat.sum(axis=1, keepdims=True)
                                   - zhat * np.sum(dzhat * zhat, axis=1, keepdims=True))
            grads[f"W{i}"] = h.T @ g
            grads[f"b{i}"] = np.sum(g, axis=0)
            g = g @ self.params[f"W{i}"].T
        return grads, g


def build_actor(obs_dim: int, act_dim: int, hidden, rng) -> MLP:
    sizes = [obs_dim, *hidden, act_dim]
    return MLP.init(sizes, ["relu"] * len(hidden) + ["tanh"], rng)


def build_critic(obs_dim: int, act_dim: int, hidden, rng) -> MLP:
    sizes = [obs_dim + act_dim, *hidden, 1]
    return MLP.init(sizes, ["relu"] * len(hidden) + ["linear"], rng, norm_layers=(0,))


def actor_forward(actor: MLP, observation) -> np.ndarray:
    obs = np.asarray(observation, dtype=float)
    out = actor(np.atleast_2d(obs))
    return out[0] if obs.ndim == 1 else out


def critic_forward(critic: MLP, observation, action) -> np.ndarray:
    obs = np.atleast_2d(np.asarray(observation, dtype=float))
    act = np.atleast_2d(np.asarray(action, dtype=float))
    q = critic(np.concatenate([obs, act], axis=1))[:, 0]
    return q[0] if np.asarray(observation).ndim == 1 else q


class Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float | None = None) -> None:
        """Descent step in place; pass negated gradients to ascend."""
        lr = self.lr if lr is None else lr
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def soft_update(target: MLP, online: MLP, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, in place."""
    for k, p in online.params.items():
        t = target.params[k]
        t *= 1.0 - tau
        t += tau * p
