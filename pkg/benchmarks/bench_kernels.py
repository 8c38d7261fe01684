"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints CSV: kernel,size,backend,seconds,speedup.
"""

import argparse
import sys
import timeit

import numpy as np

from qmix import _fallback
from qmix.circuits import AnsatzSpec, build_ansatz
from qmix.qcore import random_density

try:
    from qmix import _kernels
except ImportError:
    _kernels = None


def gate_case(width, depth):
    circ = build_ansatz(AnsatzSpec("SEA", width, depth))
    params = np.random.default_rng(0).uniform(-np.pi, np.pi, circ.n_params)
    program = circ.compile(params)
    block = np.eye(2**width, dtype=np.complex128)

    def run(mod):
        mod.run_program(block.copy(), *program)

    return run


def purity_case(n):
    rho = np.ascontiguousarray(random_density(n, np.random.default_rng(0)).entries)

    def run(mod):
        mod.subset_purity_sum(rho)

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available", file=sys.stderr)
    cases = [("run_program", f"w={w},l=4", gate_case(w, 4)) for w in (4, 6, 8)]
    cases += [("subset_purity_sum", f"n={n}", purity_case(n)) for n in (3, 4, 5, 6)]
    print("kernel,size,backend,seconds,speedup")
    for name, size, run in cases:
        t_py = min(timeit.repeat(lambda: run(_fallback), number=1, repeat=args.repeat))
        print(f"{name},{size},python,{t_py:.6f},1.0")
        if _kernels is not None:
            t_c = min(timeit.repeat(lambda: run(_kernels), number=1, repeat=args.repeat))
            print(f"{name},{size},cython,{t_c:.6f},{t_py / t_c:.1f}")


if __name__ == "__main__":
    main()
