"""Benchmark the numba-jitted kernels against their pure-numpy fallbacks.

Workloads mirror the package's hot paths:
  * su2_chain     - control propagation of one CR-RGA64c cycle (32768 steps)
  * rk4_evolve    - one CR-XY4 cycle propagator on a 4-qubit path (16x16)
  * rk4_evolve_sv - one CR-XY4 cycle on a 10-qubit statevector (1024-dim)

Run with the default backend (numba when available); the numpy column always
uses the fallback implementations directly, so one invocation compares both.
Selecting the fallback globally: CRDD_NUMBA=0 python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from crdd import _kernels
from crdd.control import _plan_sequence
from crdd.sequences import PulseShape, cr_dd
from crdd.sim import DeviceModel, _compile_cycle


def _time(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_su2_chain():
    sched = cr_dd("RGA64c", tau_p=1.0, shape=PulseShape.gaussian_drag())
    plan = _plan_sequence(sched.red, 256)
    n = plan.dt.shape[0]

    def run(fn):
        out = np.empty((n + 1, 2, 2), dtype=np.complex128)
        out[0] = np.eye(2)
        fn(plan.cx, plan.cy, plan.dx, plan.dy, out)
        return out

    results = {}
    if _kernels.su2_chain_numba is not None:
        run(_kernels.su2_chain_numba)  # compile
        results["numba"] = _time(run, _kernels.su2_chain_numba)
    results["numpy"] = _time(run, _kernels.su2_chain_numpy)
    return f"su2_chain ({n} steps)", results


def _cycle_plan(n_qubits):
    device = DeviceModel.default(n=n_qubits)
    sched = cr_dd("XY4", tau_p=device.tau_p, shape=PulseShape.square())
    seqs = [sched.red if c == "R" else sched.blue for c in device.graph.coloring]
    plan = _compile_cycle(device, seqs, 256)
    from crdd.sim import hamiltonian_diagonal

    diag = hamiltonian_diagonal(device)
    spans = [s for s in plan.spans if s[0] == "rk4"]
    return spans, diag, plan.nsteps


def bench_rk4(n_qubits, columns):
    spans, diag, nsteps = _cycle_plan(n_qubits)
    dim = 1 << n_qubits

    def run(fn):
        psi = np.zeros((dim, columns), dtype=np.complex128)
        psi[:columns].flat[:: columns + 1] = 1.0
        for (_, h, ax, ay) in spans:
            fn(psi, ax, ay, diag, h, 1)
        return psi

    results = {}
    if _kernels.rk4_evolve_numba is not None:
        run(_kernels.rk4_evolve_numba)  # compile
        results["numba"] = _time(run, _kernels.rk4_evolve_numba)
    results["numpy"] = _time(run, _kernels.rk4_evolve_numpy)
    label = "propagator 16x16" if columns > 1 else f"statevector {dim}-dim"
    return f"rk4_evolve {label} ({nsteps} steps, n={n_qubits})", results


def main():
    print(f"active backend: {_kernels.backend_name()}")
    rows = [bench_su2_chain(), bench_rk4(4, 16), bench_rk4(10, 1)]
    width = max(len(r[0]) for r in rows) + 2
    print(f"{'workload':<{width}}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for label, res in rows:
        nb = res.get("numba")
        npy = res["numpy"]
        nb_s = f"{nb:.4f}" if nb is not None else "-"
        speed = f"{npy / nb:.1f}x" if nb else "-"
        print(f"{label:<{width}}{nb_s:>12}{npy:>12.4f}{speed:>10}")


if __name__ == "__main__":
    main()
