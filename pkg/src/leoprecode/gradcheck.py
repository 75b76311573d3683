"""Finite-difference gradient verification for the dense networks."""

from __future__ import annotations

import numpy as np

from .nn import Mlp


def _objective(net: Mlp, x: np.ndarray, weights: np.ndarray):
    """Scalar objective sum(weights * net(x)) and its forward cache."""
    y, cache = net.forward_cached(x)
    return float(np.sum(weights * y)), cache


def _relu_pattern(cache) -> tuple:
    _, pre, _ = cache
    return tuple((z > 0.0).tobytes() for z in pre)


def gradient_check(net: Mlp, rng: np.random.Generator, coords: int = 200,
                   h: float = 1e-6, batch: int = 4) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks `coords` randomly chosen parameter coordinates. Coordinates whose
    perturbation flips a relu activation pattern are excluded (the analytic
    subgradient at the kink is a convention, not a derivative) and redrawn.
    """
    x = rng.standard_normal((batch, net.in_width))
    weights = rng.standard_normal((batch, net.out_width))

    _, cache = net.forward_cached(x)
    grads, _ = net.backward(cache, weights)
    params = net.parameters()

    worst = 0.0
    checked = 0
    attempts = 0
    while checked < coords and attempts < 20 * coords:
        attempts += 1
        p_idx = int(rng.integers(len(params)))
        flat = params[p_idx].reshape(-1)
        c_idx = int(rng.integers(flat.size))
        orig = flat[c_idx]

        flat[c_idx] = orig + h
        up, cache_up = _objective(net, x, weights)
        pat_up = _relu_pattern(cache_up)
        flat[c_idx] = orig - h
        down, cache_dn = _objective(net, x, weights)
        pat_dn = _relu_pattern(cache_dn)
        flat[c_idx] = orig

        if pat_up != pat_dn:
            continue  # kink-adjacent coordinate
        numeric = (up - down) / (2.0 * h)
        analytic = float(grads[p_idx].reshape(-1)[c_idx])
        scale = max(abs(numeric) + abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / scale)
        checked += 1
    if checked < coords:
        raise RuntimeError("could not find enough kink-free coordinates")
    return worst
