"""Compare the compiled LSTM cell kernels against the pure-Python fallback.

Run:  python3 benchmarks/bench_kernels.py [--sizes 64,128,256] [--repeats 200]

Times one forward and one forward+backward cell call per (hidden, input)
size on both backends and prints the speedup.  The compiled backend is
loaded directly; if the extension is unavailable the script says so and
times the fallback alone.
"""

import argparse
import importlib
import time

import numpy as np

import seq2tree.kernels._pure as pure


def load_compiled():
    try:
        return importlib.import_module("seq2tree.kernels._core")
    except ImportError:
        return None


def make_case(rng, hidden, n_in):
    wx = rng.uniform(-0.1, 0.1, size=(4 * hidden, n_in))
    wh = rng.uniform(-0.1, 0.1, size=(4 * hidden, hidden))
    x = rng.uniform(-1, 1, size=n_in)
    h = rng.uniform(-1, 1, size=hidden)
    m = rng.uniform(-1, 1, size=hidden)
    return wx, wh, x, h, m


def time_forward(impl, case, repeats):
    wx, wh, x, h, m = case
    start = time.perf_counter()
    for _ in range(repeats):
        impl.lstm_cell_forward(wx, wh, x, h, m)
    return (time.perf_counter() - start) / repeats


def time_backward(impl, case, repeats):
    wx, wh, x, h, m = case
    _, _, cache = impl.lstm_cell_forward(wx, wh, x, h, m)
    dh = np.ones_like(h)
    dm = np.zeros_like(m)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    start = time.perf_counter()
    for _ in range(repeats):
        impl.lstm_cell_backward(wx, wh, cache, dh, dm, dwx, dwh)
    return (time.perf_counter() - start) / repeats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="32,64,128,256",
                    help="comma-separated hidden sizes (input size matches)")
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    compiled = load_compiled()
    if compiled is None:
        print("compiled extension not available; timing pure Python only")
    rng = np.random.default_rng(args.seed)
    header = f"{'hidden':>7} {'dir':>9} {'python us':>10}"
    if compiled is not None:
        header += f" {'compiled us':>12} {'speedup':>8}"
    print(header)
    for hidden in [int(s) for s in args.sizes.split(",")]:
        case = make_case(rng, hidden, hidden)
        for label, timer in (("forward", time_forward),
                             ("backward", time_backward)):
            t_py = timer(pure, case, args.repeats)
            line = f"{hidden:>7} {label:>9} {t_py * 1e6:>10.1f}"
            if compiled is not None:
                t_c = timer(compiled, case, args.repeats)
                line += f" {t_c * 1e6:>12.1f} {t_py / t_c:>8.2f}x"
            print(line)


if __name__ == "__main__":
    main()
