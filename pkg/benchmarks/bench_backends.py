"""Compare the compiled kernels against the numpy reference backend.

Times the primitive kernels on the workload shapes this project actually
runs (tiny batches, narrow layers), then an end-to-end slice of the
training loop under each backend.

Usage: python benchmarks/bench_backends.py [--steps N]
"""

import argparse
import timeit

import numpy as np

import mvekit.backend as backend
from mvekit import harness, nn

KERNEL_CASES = [
    ("q-net forward      (16, 6-128-3)", [6, 128, 3], 16),
    ("model forward      (16, 9-4-6)", [9, 4, 6], 16),
    ("model forward      (16, 9-128-6)", [9, 128, 6], 16),
    ("regression forward (16, 1-2048-1)", [1, 2048, 1], 16),
]


def time_kernels(impl, sizes, batch, repeats=3000):
    rng = np.random.default_rng(0)
    weights = [rng.normal(size=(a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [rng.normal(size=b) for b in sizes[1:]]
    x = rng.normal(size=(batch, sizes[0]))
    out, acts, preacts = impl.mlp_forward(x, weights, biases, None, 1.0)
    delta = rng.normal(size=out.shape)

    fwd = timeit.timeit(lambda: impl.mlp_forward(x, weights, biases, None, 1.0), number=repeats)
    bwd = timeit.timeit(
        lambda: impl.mlp_backward(weights, acts, preacts, None, 1.0, delta), number=repeats
    )
    return fwd / repeats * 1e6, bwd / repeats * 1e6


def time_training_slice(backend_name, steps):
    """Selective-MVE control steps under a forced backend (fresh process state)."""
    impl = backend.get_backend(backend_name)
    saved = (backend.mlp_forward, backend.mlp_backward, backend.adam_step, backend.rmsprop_step)
    backend.mlp_forward = impl.mlp_forward
    backend.mlp_backward = impl.mlp_backward
    backend.adam_step = impl.adam_step
    backend.rmsprop_step = impl.rmsprop_step
    try:
        cfg = harness.ExperimentConfig(
            agent="selective-mve",
            weighting="learned-variance",
            model_hidden=4,
            total_steps=steps,
            log_every=steps,
            warmup=500,
        )
        start = timeit.default_timer()
        harness.run_control(cfg, 0)
        return (timeit.default_timer() - start) / steps * 1e6
    finally:
        (backend.mlp_forward, backend.mlp_backward, backend.adam_step, backend.rmsprop_step) = saved


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=5000, help="training-slice length")
    args = parser.parse_args()

    names = backend.available_backends()
    print(f"available backends: {', '.join(names)} (active: {backend.NAME})\n")
    if "native" not in names:
        print("compiled backend not built; run `pip install -e . --no-build-isolation`")
        return

    ref = backend.get_backend("reference")
    nat = backend.get_backend("native")
    print(f"{'kernel':38s} {'reference':>12s} {'native':>12s} {'speedup':>9s}")
    for label, sizes, batch in KERNEL_CASES:
        rf, rb = time_kernels(ref, sizes, batch)
        nf, nb = time_kernels(nat, sizes, batch)
        print(f"{label + ' fwd':38s} {rf:10.2f}us {nf:10.2f}us {rf / nf:8.2f}x")
        print(f"{label + ' bwd':38s} {rb:10.2f}us {nb:10.2f}us {rb / nb:8.2f}x")

    print(f"\ntraining slice: selective MVE, {args.steps} environment steps")
    t_ref = time_training_slice("reference", args.steps)
    t_nat = time_training_slice("native", args.steps)
    print(f"{'reference':>12s}: {t_ref:8.1f} us/step")
    print(f"{'native':>12s}: {t_nat:8.1f} us/step   ({t_ref / t_nat:.2f}x)")


if __name__ == "__main__":
    main()
