"""
Benchmark module for the theta engines.

Times the evaluation of all theta values at z = 0 for random reduced τ over
each engine's precision ladder, and reports where the quasi-linear engine
overtakes summation.
"""

import argparse
import time
from functools import partial
from multiprocessing import Pool

import numpy as np
from prettytable import PrettyTable

import config
from Utilities import engine_names, get_engine, random_reduced_tau
from siegel.context import SiegelContext, zero_vector

logger = config.get_logger("bench")

WARMUP = 1
REPEATS = 3


def time_engine(name: str, g: int, N: int, seed: int = 0) -> float:
    """Best of REPEATS wall times after WARMUP runs, in seconds."""
    engine = get_engine(name)
    tau = random_reduced_tau(g, np.random.default_rng(seed))
    ctx = SiegelContext.create(zero_vector(g), tau, N + 32)
    for _ in range(WARMUP):
        engine.run(ctx, N)
    best = float("inf")
    for _ in range(REPEATS):
        start = time.perf_counter()
        engine.run(ctx, N)
        best = min(best, time.perf_counter() - start)
    logger.info("%s g=%d N=%d: %.4fs", name, g, N, best)
    return best


def _job(seed: int, job: tuple[str, int, int]) -> tuple[str, int, int, float]:
    name, g, N = job
    return name, g, N, time_engine(name, g, N, seed)


def crossover(times: dict[tuple[str, int, int], float], g: int, fast: str = "ql", slow: str = "sum") -> int | None:
    """Smallest N at which `fast` beats `slow` in dimension g."""
    common = sorted(N for (e, gg, N) in times if e == fast and gg == g and (slow, g, N) in times)
    for N in common:
        if times[(fast, g, N)] < times[(slow, g, N)]:
            return N
    return None


def loglog_slope(times: dict[tuple[str, int, int], float], engine: str, g: int) -> float | None:
    pts = sorted((N, t) for (e, gg, N), t in times.items() if e == engine and gg == g and t > 0)
    if len(pts) < 2:
        return None
    x = np.log([N for N, _ in pts])
    y = np.log([t for _, t in pts])
    return float(np.polyfit(x, y, 1)[0])


def run_bench(engines: list[str], dims: list[int], precs: list[int] | None, jobs: int = 1, seed: int = 0) -> dict:
    work = []
    for name in engines:
        ladder = get_engine(name).get_bench_params()
        for g in dims:
            for N in (precs or ladder.get(g, [])):
                work.append((name, g, N))
    if jobs > 1:
        with Pool(processes=min(jobs, len(work))) as pool:
            results = pool.map(partial(_job, seed), work)
    else:
        results = [_job(seed, w) for w in work]
    return {(name, g, N): t for name, g, N, t in results}


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description="Time the theta engines")
    parser.add_argument('--engines', '-E', type=str, default='sum,ql', help=f"Engines among {', '.join(engine_names())}")
    parser.add_argument('--g', type=str, default='1,2', help='Dimensions')
    parser.add_argument('--prec', type=str, default='', help='Precisions (defaults to each engine ladder)')
    parser.add_argument('--jobs', type=int, default=1, help='Parallel jobs (timings are less comparable)')
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args()

    engines = [e.strip() for e in args.engines.split(',') if e.strip()]
    dims = [int(x) for x in args.g.split(',') if x.strip()]
    precs = [int(x) for x in args.prec.split(',') if x.strip()] or None

    times = run_bench(engines, dims, precs, args.jobs, args.seed)

    results_table = PrettyTable()
    results_table.field_names = ["Engine", "g", "N", "Time (s)"]
    results_table.float_format = ".4"
    for (name, g, N), t in sorted(times.items()):
        results_table.add_row([name, g, N, t])
    print(results_table)

    for g in dims:
        for name in engines:
            slope = loglog_slope(times, name, g)
            if slope is not None:
                print(f"g={g} {name}: log-log slope {slope:.2f}")
        if "ql" in engines and "sum" in engines:
            N = crossover(times, g)
            print(f"g={g}: ql faster than sum from N = {N}" if N else f"g={g}: no crossover in range")
