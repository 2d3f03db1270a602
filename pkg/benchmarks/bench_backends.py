"""Compare the compiled and pure-Python kernel backends.

Times a few solver restarts and an SVR fit with each backend and checks that
both produce the same numbers.

    python benchmarks/bench_backends.py --n 100 --restarts 3
"""

import argparse
import time

import numpy as np

from ttp_surrogate import _purepy, instance, solver, surrogate
from ttp_surrogate.bench import generate_instance
from ttp_surrogate.surrogate import SvrHyperparams, TrainingSample, fit


def use(module):
    for mod in (instance, solver, surrogate):
        mod.kernels = module


def timed(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100, help="cities in the generated instance")
    p.add_argument("--category", default="B", choices="ABC")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--train", type=int, default=100, help="SVR training set size")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    try:
        from ttp_surrogate import _core
    except ImportError:
        raise SystemExit("compiled extension not built; nothing to compare")

    inst = generate_instance(args.n, args.category, 0)
    restarts = solver.run_restarts(inst, args.train, solver.SolverConfig(rng_seed=1))
    samples = [TrainingSample(r.tour, r.g) for r in restarts.records]
    hp = SvrHyperparams()

    rows = {}
    for name, module in (("cython", _core), ("python", _purepy)):
        use(module)
        t_solve, log = timed(lambda: solver.run_restarts(
            inst, args.restarts, solver.SolverConfig(rng_seed=0)), args.repeat)
        t_fit, model = timed(lambda: fit(samples, hp), args.repeat)
        rows[name] = (t_solve, t_fit, [r.g for r in log.records], model.beta)
    use(_core)

    same = (rows["cython"][2] == rows["python"][2]
            and np.array_equal(rows["cython"][3], rows["python"][3]))
    print(f"instance {inst.name}: n={inst.n}, m={inst.m}")
    print(f"{'backend':8} {'solve s/restart':>16} {'svr fit s':>10}")
    for name, (t_solve, t_fit, _, _) in rows.items():
        print(f"{name:8} {t_solve / args.restarts:16.4f} {t_fit:10.4f}")
    print(f"speed-up: solve x{rows['python'][0] / rows['cython'][0]:.1f}, "
          f"fit x{rows['python'][1] / rows['cython'][1]:.1f}")
    print(f"identical results: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
