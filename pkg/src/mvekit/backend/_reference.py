"""Pure-numpy kernels: the fallback used when the compiled extension is absent.

Both backends implement the same four entry points with identical semantics;
only floating-point summation order may differ.
"""

import numpy as np

NAME = "reference"


def mlp_forward(x, weights, biases, masks, inv_keep):
    """Affine/ReLU stack with linear output and optional inverted dropout.

    masks: per-hidden-layer 0/1 float arrays (or None for no dropout).
    Returns (out, acts, preacts) where acts[l] is the input fed to layer l
    and preacts[l] is the pre-activation of hidden layer l.
    """
    n_layers = len(weights)
    acts = [x]
    preacts = []
    h = x
    for l in range(n_layers):
        z = h @ weights[l] + biases[l]
        if l == n_layers - 1:
            return z, acts, preacts
        preacts.append(z)
        h = np.maximum(z, 0.0)
        if masks is not None and masks[l] is not None:
            h = h * (masks[l] * inv_keep)
        acts.append(h)
    # single empty-layer nets cannot occur: Mlp enforces >= 1 layer
    raise AssertionError("unreachable")


def mlp_backward(weights, acts, preacts, masks, inv_keep, delta):
    """Reverse-mode gradients for mlp_forward given dL/d(out) in `delta`."""
    n_layers = len(weights)
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    d = delta
    for l in range(n_layers - 1, -1, -1):
        d_weights[l] = acts[l].T @ d
        d_biases[l] = d.sum(axis=0)
        if l > 0:
            d = d @ weights[l].T
            if masks is not None and masks[l - 1] is not None:
                d = d * (masks[l - 1] * inv_keep)
            d = d * (preacts[l - 1] > 0.0)
    return d_weights, d_biases


def adam_step(params, grads, m, v, t, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam update. `t` is the post-increment step index."""
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, mi, vi in zip(params, grads, m, v):
        mi *= beta1
        mi += (1.0 - beta1) * g
        vi *= beta2
        vi += (1.0 - beta2) * (g * g)
        p -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)


def rmsprop_step(params, grads, acc, lr, decay, eps):
    """In-place RMSProp update with squared-gradient accumulator `acc`."""
    for p, g, a in zip(params, grads, acc):
        a *= decay
        a += (1.0 - decay) * (g * g)
        p -= lr * g / (np.sqrt(a) + eps)
