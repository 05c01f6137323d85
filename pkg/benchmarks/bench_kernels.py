"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times im2col, col2im and the two-path channel loop in isolation, then one
full training step of the default network, under each available backend.
"""
from __future__ import annotations

import argparse
import contextlib
import timeit

import numpy as np

from modrec import _kernels_py, kernels
from modrec.channel import SPECULAR_GAIN
from modrec.nn import Hyperparams, backward, init_params
from modrec.nn.adam import AdamState, adam_step

try:
    from modrec import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


@contextlib.contextmanager
def backend(impl):
    saved = kernels.im2col, kernels.col2im, kernels.two_path
    kernels.im2col, kernels.col2im, kernels.two_path = impl.im2col, impl.col2im, impl.two_path
    try:
        yield
    finally:
        kernels.im2col, kernels.col2im, kernels.two_path = saved


def cases(batch):
    rng = np.random.default_rng(0)
    x1 = rng.standard_normal((batch, 1, 2, 128)).astype(np.float32)
    x2 = rng.standard_normal((batch, 64, 2, 126)).astype(np.float32)
    cols2 = rng.standard_normal((64 * 2 * 3, batch, 1, 124)).astype(np.float32)
    br, bi = rng.standard_normal((2, 16 * batch, 144))
    c = 0.5 * SPECULAR_GAIN
    hyper = Hyperparams(batch_size=batch)
    spec = hyper.net_spec()
    params = init_params(spec, 0)
    state = AdamState.fresh(params, hyper.learning_rate)
    y = rng.integers(0, 11, batch)
    drop = np.random.default_rng(1)

    def train_step():
        res = backward(spec, params, x1, y, mode="train", rng=drop, l2_coefficient=hyper.l2_coefficient)
        adam_step(params, res.grads, state)

    return {
        "im2col conv1": lambda: kernels.im2col(x1, 1, 3),
        "im2col conv2": lambda: kernels.im2col(x2, 2, 3),
        "col2im conv2": lambda: kernels.col2im(cols2, x2.shape, 2, 3),
        "two_path": lambda: kernels.two_path(br, bi, 8, c.real, c.imag, 128),
        "train step": train_step,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = {"python": _kernels_py}
    if _kernels_cy is not None:
        impls["cython"] = _kernels_cy
    else:
        print("compiled extension not built; timing the numpy fallback only")

    results = {}
    for name, impl in impls.items():
        with backend(impl):
            for label, fn in cases(args.batch).items():
                fn()
                best = min(timeit.repeat(fn, number=3, repeat=args.repeat)) / 3
                results.setdefault(label, {})[name] = best

    cols = list(impls)
    print(f"{'kernel':<14}" + "".join(f"{c + ' ms':>12}" for c in cols) + ("     speedup" if len(cols) > 1 else ""))
    for label, row in results.items():
        line = f"{label:<14}" + "".join(f"{row[c] * 1e3:12.3f}" for c in cols)
        if len(cols) > 1:
            line += f"{row['python'] / row['cython']:11.2f}x"
        print(line)


if __name__ == "__main__":
    main()
