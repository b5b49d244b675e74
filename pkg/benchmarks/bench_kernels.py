"""Compare the compiled and pure-Python series kernels.

Times each kernel at a few truncation orders, then one end-to-end planning
step (J=4 on the aileron roll) per backend, and checks both backends agree.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from aeroflat import kernels
from aeroflat.aircraft import load_aircraft
from aeroflat.genflat import generalized_flat_parametrization
from aeroflat.scenario import load_scenario


def kernel_cases(order, rng):
    a = rng.standard_normal(order + 1)
    b = rng.standard_normal(order + 1)
    a[0], b[0] = 1.5, 2.0
    blk = rng.standard_normal((17, order + 1))
    return {
        "mul": lambda: kernels.mul(a, b, order),
        "div": lambda: kernels.div(a, b, order),
        "exp": lambda: kernels.exp(a, order),
        "sincos": lambda: kernels.sincos(a, order),
        "sqrt": lambda: kernels.sqrt(a, order),
        "power": lambda: kernels.power(a, 1.5, order),
        "log": lambda: kernels.log(a, order),
        "horner": lambda: kernels.horner(a, 0.3),
        "horner2d": lambda: kernels.horner2d(blk, 0.3),
    }


def time_kernels(backend, orders, repeat):
    kernels.set_backend(backend)
    rng = np.random.default_rng(0)
    out = {}
    for order in orders:
        for name, fn in kernel_cases(order, rng).items():
            n = 2000
            best = min(timeit.repeat(fn, number=n, repeat=repeat)) / n
            out[(name, order)] = best
    return out


def plan_step(backend, repeat):
    kernels.set_backend(backend)
    cfg = load_scenario("aileron_roll_gtm")
    params = load_aircraft(cfg.aircraft, cfg.aircraft_base())

    def run():
        return generalized_flat_parametrization(-1.9, cfg.flat_trajectory(), cfg.choice(), cfg.iteration_plan(),
                                                params=params, mode=cfg.control_mode())

    its = run()
    best = min(timeit.repeat(run, number=1, repeat=repeat))
    return best, np.array([its[-1][k].value for k in ("F", "delta_l", "delta_m", "delta_n")])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--orders", type=int, nargs="+", default=[4, 12, 24])
    args = ap.parse_args(argv)
    backends = kernels.available()
    if "cython" not in backends:
        print("compiled kernels not built; timing the Python fallback only")
    times = {b: time_kernels(b, args.orders, args.repeat) for b in backends}
    print(f"{'kernel':<10}{'order':>6}" + "".join(f"{b + ' [us]':>16}" for b in backends)
          + ("   speedup" if len(backends) > 1 else ""))
    for key in times[backends[0]]:
        row = [times[b][key] * 1e6 for b in backends]
        line = f"{key[0]:<10}{key[1]:>6}" + "".join(f"{v:>16.3f}" for v in row)
        if len(row) > 1:
            line += f"{row[1] / row[0]:>10.1f}x"
        print(line)
    steps = {b: plan_step(b, max(1, args.repeat // 2)) for b in backends}
    print()
    for b, (sec, _) in steps.items():
        print(f"planning step J=4, {b:<7}: {sec * 1e3:8.1f} ms")
    if len(backends) > 1:
        diff = np.max(np.abs(steps["cython"][1] - steps["python"][1]))
        print(f"max control difference between backends: {diff:.2e}")
    kernels.set_backend(backends[0])


if __name__ == "__main__":
    main()
