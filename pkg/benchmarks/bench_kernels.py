"""Compare the compiled and pure-numpy recurrence backends.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--batch 32]

Reports microseconds per call for each recurrent kernel (forward and
backward) and milliseconds per training epoch for the recurrent models,
plus the largest absolute difference between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from horizon_bench import kernels
from horizon_bench.dataset import embed, fit_scale, split
from horizon_bench.learn import TrainConfig, train
from horizon_bench.models import build
from horizon_bench.numkit import Rng
from horizon_bench.seriesgen import generate


def per_call(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(3):
        t = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t) / repeat)
    return best


def kernel_rows(impls, batch, steps, hidden, repeat):
    rng = Rng(0)
    x = rng.uniform(batch * steps).reshape(batch, steps, 1)
    U, W, b = rng.uniform(4 * hidden, -0.5, 0.5).reshape(1, -1), \
        rng.uniform(4 * hidden * hidden, -0.5, 0.5).reshape(hidden, -1), np.zeros(4 * hidden)
    We, Ue, be = U[:, :hidden].copy(), W[:, :hidden].copy(), np.zeros(hidden)
    dhs = rng.uniform(batch * steps * hidden).reshape(batch, steps, hidden)
    rows = []
    outs = {}
    for name, impl in impls.items():
        fwd = kernels.lstm_forward(x, U, W, b, impl=impl)
        ehs = kernels.elman_forward(x, We, Ue, be, impl=impl)
        outs[name] = (fwd[0], kernels.lstm_backward(x, U, W, *fwd, dhs, impl=impl)[2],
                      kernels.elman_backward(x, We, Ue, ehs, dhs, impl=impl)[2])
        rows.append((name, {
            "lstm fwd": per_call(lambda: kernels.lstm_forward(x, U, W, b, impl=impl), repeat),
            "lstm bwd": per_call(lambda: kernels.lstm_backward(x, U, W, *fwd, dhs, impl=impl), repeat),
            "elman fwd": per_call(lambda: kernels.elman_forward(x, We, Ue, be, impl=impl), repeat),
            "elman bwd": per_call(lambda: kernels.elman_backward(x, We, Ue, ehs, dhs, impl=impl), repeat),
        }))
    diff = None
    if len(outs) == 2:
        a, c = outs.values()
        diff = max(float(np.abs(u - v).max()) for u, v in zip(a, c))
    return rows, diff


def epoch_rows(impls, epochs):
    series, _ = fit_scale(generate("lorenz", 1000))
    tr, _ = split(embed(series, 5, 1, 10), 0.6)
    rows = []
    for name, impl in impls.items():
        saved = kernels._impl
        kernels._impl = impl
        try:
            times = {}
            for kind in ("rnn", "lstm", "bd_lstm", "ed_lstm"):
                m = build(kind, Rng(1))
                t = time.perf_counter()
                train(m, tr, TrainConfig(max_epochs=epochs))
                times[kind] = (time.perf_counter() - t) / epochs
        finally:
            kernels._impl = saved
        rows.append((name, times))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--steps", type=int, default=5)
    ap.add_argument("--hidden", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=20)
    a = ap.parse_args()

    impls = {"python": kernels.get_backend("python")}
    try:
        impls["cython"] = kernels.get_backend("cython")
    except ImportError:
        print("compiled backend not built; timing the numpy fallback only")

    rows, diff = kernel_rows(impls, a.batch, a.steps, a.hidden, a.repeat)
    cols = list(rows[0][1])
    print(f"kernel time per call, batch={a.batch} steps={a.steps} hidden={a.hidden} (microseconds)")
    print(f"{'backend':<8}" + "".join(f"{c:>12}" for c in cols))
    for name, t in rows:
        print(f"{name:<8}" + "".join(f"{t[c] * 1e6:>12.1f}" for c in cols))
    if len(rows) == 2:
        print(f"{'speedup':<8}" + "".join(f"{rows[0][1][c] / rows[1][1][c]:>11.2f}x" for c in cols))
        print(f"max |python - cython| over outputs and gradients: {diff:.2e}")

    print(f"\ntraining time per epoch on Lorenz (594 samples, batch 32), milliseconds, mean of {a.epochs} epochs")
    erows = epoch_rows(impls, a.epochs)
    kinds = list(erows[0][1])
    print(f"{'backend':<8}" + "".join(f"{k:>10}" for k in kinds))
    for name, t in erows:
        print(f"{name:<8}" + "".join(f"{t[k] * 1e3:>10.2f}" for k in kinds))
    if len(erows) == 2:
        print(f"{'speedup':<8}" + "".join(f"{erows[0][1][k] / erows[1][1][k]:>9.2f}x" for k in kinds))


if __name__ == "__main__":
    main()
