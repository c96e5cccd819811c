"""Compare the numba and numpy evolution kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernel timings run in-process on both backends.  The end-to-end MSE run is
timed in a fresh interpreter per backend, since the backend is chosen at import.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from vqagrad import _kernels
from vqagrad.circuit import ParamCircuit, fixed_gate_library, rot

MSE_SNIPPET = (
    "import time; from vqagrad.ghz import mse_experiment; from vqagrad import _kernels;"
    "t=time.perf_counter(); mse_experiment(num_points=1000, seed=7);"
    "print(_kernels.BACKEND, time.perf_counter()-t)"
)


def layered_circuit(n: int, layers: int) -> ParamCircuit:
    gates, p = [], 0
    for _ in range(layers):
        for q in range(n):
            for axis in "YZ":
                gates.append(rot("I" * q + axis + "I" * (n - q - 1), p))
                p += 1
        for q in range(n - 1):
            gates.append(fixed_gate_library("CNOT", n, [q, q + 1]))
    return ParamCircuit(n, gates)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_kernels(repeat: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'qubits':>6} {'gates':>6} {'batch':>6} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n, layers, batch in [(2, 1, 4000), (3, 2, 2000), (4, 3, 500), (6, 3, 50)]:
        c = layered_circuit(n, layers)
        table = c.compiled
        thetas = rng.uniform(0, 2 * np.pi, (batch, c.num_params))
        t_np = best_of(lambda: _kernels.evolve_batch_numpy(*table, thetas), repeat)
        if _kernels.evolve_batch_numba is None:
            print(f"{n:>6} {len(c.gates):>6} {batch:>6} {t_np * 1e3:>10.2f} {'n/a':>10} {'':>8}")
            continue
        _kernels.evolve_batch_numba(*table, thetas[:1])  # compile outside the timing
        t_nb = best_of(lambda: _kernels.evolve_batch_numba(*table, thetas), repeat)
        print(f"{n:>6} {len(c.gates):>6} {batch:>6} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x")


def bench_mse() -> None:
    print("\nfull MSE run (1000 points, 200 step sizes, one thread):")
    for flag in ("0", "1"):
        env = dict(os.environ, VQAGRAD_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", MSE_SNIPPET], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<6} {float(secs):.2f} s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-mse", action="store_true")
    args = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}\n")
    bench_kernels(args.repeat)
    if not args.skip_mse:
        bench_mse()
