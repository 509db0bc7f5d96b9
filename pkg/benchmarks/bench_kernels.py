"""Compare the compiled jet-product kernel with the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``.  The first table times the raw
batched jet product for a few (order, points) sizes on both backends and
checks that they agree.  The second times one end-to-end flat-section solve
in a subprocess per backend (``FEDOSOV_BT_PURE=1`` selects the fallback).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fedosov_bt.jets import n_coeffs, product_table
from fedosov_bt.kernels import available_backends, jet_mul

END_TO_END = """
import time
import numpy as np
from fedosov_bt.fedosov import assemble_I_BT, flat_section_of_function, required_m_cut
from fedosov_bt.catalog import get_function
from fedosov_bt.geometry import geometry_at
from fedosov_bt.kernels import BACKEND
pts = (np.linspace(-1, 1, {points}) + 0.3j)[None, :]
geom = geometry_at("cp1", pts, {order})
start = time.perf_counter()
F = assemble_I_BT(geom, required_m_cut({w}, {w}), w_max={w})
flat_section_of_function(get_function("generic").jet(geom), F, {w}, d_cap={w})
print(BACKEND, time.perf_counter() - start)
"""


def bench_products(sizes: list[tuple[int, int]], repeat: int) -> None:
    rng = np.random.default_rng(0)
    backends = available_backends()
    print(f"{'order':>5} {'points':>7} " + " ".join(f"{b:>12}" for b in backends) + f" {'speedup':>8} {'max diff':>9}")
    for order, npts in sizes:
        m = n_coeffs(1, order)
        a = rng.normal(size=(m, npts)) + 1j * rng.normal(size=(m, npts))
        b = rng.normal(size=(m, npts)) + 1j * rng.normal(size=(m, npts))
        table = product_table(1, order, order, order)
        times, outs = {}, {}
        for backend in backends:
            outs[backend] = jet_mul(a, b, table, backend)
            t = timeit.Timer(lambda backend=backend: jet_mul(a, b, table, backend))
            times[backend] = min(t.repeat(repeat, 1))
        speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        diff = np.abs(outs[backends[0]] - outs[backends[-1]]).max()
        cells = " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        print(f"{order:>5} {npts:>7} {cells} {speedup:8.2f} {diff:9.1e}")


def bench_end_to_end(points: int, order: int, w: int) -> None:
    code = END_TO_END.format(points=points, order=order, w=w)
    for pure in ("0", "1"):
        env = dict(os.environ, FEDOSOV_BT_PURE=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"flat section (W={w}, order={order}, {points} points) backend={backend:<8} {float(seconds):8.3f}s")


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args(argv)
    bench_products([(6, 200), (10, 2000), (14, 2000), (14, 8000)], args.repeat)
    if not args.skip_end_to_end:
        bench_end_to_end(points=2000, order=12, w=3)


if __name__ == "__main__":
    main()
