"""Dense-network substrate: forward/backward passes, Adam, Polyak updates.

Everything is float64 numpy. Networks are plain value objects; a forward
cache carries the intermediates the backward pass needs. The relu
subgradient at exactly zero is 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

ACTIVATIONS = ("relu", "tanh", "none")

# critic hidden widths as multiples of the action count
CRITIC_WIDTH_FACTORS = (2.0, 3.46, 1.8, 0.96, 0.54, 0.26)
ACTOR_HIDDEN_LAYERS = 4

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    in_width: int
    out_width: int
    activation: str

    def __post_init__(self):
        if self.in_width < 1 or self.out_width < 1:
            raise ValueError("layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def _apply(activation: str, z: np.ndarray) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "tanh":
        return np.tanh(z)
    return z


def _derivative(activation: str, z: np.ndarray, out: np.ndarray) -> np.ndarray:
    if activation == "relu":
        return (z > 0.0).astype(np.float64)
    if activation == "tanh":
        return 1.0 - out**2
    return np.ones_like(z)


class Mlp:
    """Fully connected stack. Weights are (out, in); rows act on inputs."""

    def __init__(self, layers: list[LayerSpec],
                 rng: np.random.Generator | None = None):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_width != nxt.in_width:
                raise ShapeMismatch(
                    f"layer widths do not chain: {prev.out_width} -> {nxt.in_width}")
        self.layers = list(layers)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        rng = rng or np.random.default_rng()
        for spec in layers:
            bound = 1.0 / math.sqrt(spec.in_width)
            self.weights.append(
                rng.uniform(-bound, bound, (spec.out_width, spec.in_width)))
            self.biases.append(rng.uniform(-bound, bound, spec.out_width))

    @property
    def in_width(self) -> int:
        return self.layers[0].in_width

    @property
    def out_width(self) -> int:
        return self.layers[-1].out_width

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        dup = Mlp.__new__(Mlp)
        dup.layers = list(self.layers)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup

    def _check_input(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_width:
            raise ShapeMismatch(f"input shape {x.shape} vs width {self.in_width}")
        return x, single

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cached(x)
        return y

    def forward_cached(self, x: np.ndarray):
        """Forward pass returning (output, cache) for a later backward()."""
        x, single = self._check_input(x)
        acts = [x]
        pre = []
        for spec, w, b in zip(self.layers, self.weights, self.biases):
            z = acts[-1] @ w.T + b
            pre.append(z)
            acts.append(_apply(spec.activation, z))
        y = acts[-1][0] if single else acts[-1]
        return y, (acts, pre, single)

    def backward(self, cache, grad_out: np.ndarray):
        """Backpropagate an upstream gradient through the cached pass.

        Returns (param_grads, input_grad) where param_grads interleaves
        (dW, db) per layer in parameters() order.
        """
        acts, pre, single = cache
        g = np.asarray(grad_out, dtype=np.float64)
        if single:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ShapeMismatch(f"upstream shape {g.shape} vs {acts[-1].shape}")
        grads: list[np.ndarray] = []
        for idx in range(len(self.layers) - 1, -1, -1):
            gz = g * _derivative(self.layers[idx].activation, pre[idx], acts[idx + 1])
            grads.insert(0, gz.sum(axis=0))          # db
            grads.insert(0, gz.T @ acts[idx])        # dW
            g = gz @ self.weights[idx]
        return grads, (g[0] if single else g)


def build_actor(n_states: int, n_actions: int,
                rng: np.random.Generator | None = None) -> Mlp:
    """Policy network: four relu hidden layers of width n_actions, tanh out."""
    widths = [n_states] + [n_actions] * ACTOR_HIDDEN_LAYERS + [n_actions]
    specs = [LayerSpec(widths[i], widths[i + 1], "relu")
             for i in range(ACTOR_HIDDEN_LAYERS)]
    specs.append(LayerSpec(n_actions, n_actions, "tanh"))
    return Mlp(specs, rng)


def critic_hidden_widths(n_actions: int) -> list[int]:
    """Hidden widths from the fractional multipliers, rounded, minimum 1."""
    return [max(1, int(math.floor(f * n_actions + 0.5)))
            for f in CRITIC_WIDTH_FACTORS]


def build_critic(n_states: int, n_actions: int,
                 rng: np.random.Generator | None = None) -> Mlp:
    """Q network on concat(state, action): six relu hidden layers, linear out."""
    widths = [n_states + n_actions] + critic_hidden_widths(n_actions) + [1]
    specs = [LayerSpec(widths[i], widths[i + 1], "relu")
             for i in range(len(widths) - 2)]
    specs.append(LayerSpec(widths[-2], 1, "none"))
    return Mlp(specs, rng)


class Adam:
    """Bias-corrected Adam over a list of parameter arrays."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.count = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        if len(params) != len(grads) or any(
                p.shape != g.shape for p, g in zip(params, grads)):
            raise ShapeMismatch("params and grads must have matching shapes")
        self.count += 1
        c1 = 1.0 - self.beta1**self.count
        c2 = 1.0 - self.beta2**self.count
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g**2
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params


def soft_update(target: Mlp, source: Mlp, tau: float) -> Mlp:
    """Polyak average: target <- tau * source + (1 - tau) * target."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    t_params, s_params = target.parameters(), source.parameters()
    if len(t_params) != len(s_params) or any(
            a.shape != b.shape for a, b in zip(t_params, s_params)):
        raise ShapeMismatch("target and source parameter shapes differ")
    for t, s in zip(t_params, s_params):
        t *= 1.0 - tau
        t += tau * s
    return target


def save_networks(path, nets: dict[str, Mlp]) -> None:
    """Versioned binary checkpoint; float64 arrays round-trip bit-exactly."""
    arrays = {}
    meta = {"version": CHECKPOINT_VERSION, "networks": {}}
    for name, net in nets.items():
        meta["networks"][name] = [
            [s.in_width, s.out_width, s.activation] for s in net.layers]
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}.w{i}"] = w
            arrays[f"{name}.b{i}"] = b
    arrays["meta"] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_networks(path) -> dict[str, Mlp]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        nets = {}
        for name, spec_rows in meta["networks"].items():
            net = Mlp.__new__(Mlp)
            net.layers = [LayerSpec(r[0], r[1], r[2]) for r in spec_rows]
            net.weights = [data[f"{name}.w{i}"].copy()
                           for i in range(len(spec_rows))]
            net.biases = [data[f"{name}.b{i}"].copy()
                          for i in range(len(spec_rows))]
            nets[name] = net
    return nets
