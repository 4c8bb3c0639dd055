"""
Benchmark functions and the comparison harness behind ``bench-opt``.
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional
import numpy as np
from Windcast.Models.Errors import InvalidInputError
from Windcast.Models.Logger import trace
from Windcast.Optimizers.Swarms import SWARMS, EbqpsoConfig, SearchSpace, make_swarm


def sphere(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(x ** 2))


def ackley(x):
    x = np.asarray(x, dtype=float)
    d = x.size
    return float(
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x ** 2) / d))
        - np.exp(np.sum(np.cos(2.0 * np.pi * x)) / d)
        + 20.0
        + np.e
    )


def griewank(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.size + 1)
    return float(1.0 + np.sum(x ** 2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))))


def mccormick(x):
    x1, x2 = np.asarray(x, dtype=float)
    return float(np.sin(x1 + x2) + (x1 - x2) ** 2 - 1.5 * x1 + 2.5 * x2 + 1.0)


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    function: Callable
    lower: tuple
    upper: tuple
    global_minimum: float
    fixed_dimension: Optional[int] = None

    def space(self, dimension):
        self.check_dimension(dimension)
        if len(self.lower) == 1:
            return SearchSpace.uniform(self.lower[0], self.upper[0], dimension)
        return SearchSpace(np.array(self.lower), np.array(self.upper))

    def check_dimension(self, dimension):
        if dimension < 1:
            raise InvalidInputError(f"{self.name} needs at least one dimension")
        if self.fixed_dimension is not None and dimension != self.fixed_dimension:
            raise InvalidInputError(f"{self.name} is defined for d={self.fixed_dimension} only, got d={dimension}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        self.check_dimension(x.size)
        return self.function(x)


BENCHMARKS = {
    "sphere": BenchmarkFunction("sphere", sphere, (-100.0,), (100.0,), 0.0),
    "ackley": BenchmarkFunction("ackley", ackley, (-32.768,), (32.768,), 0.0),
    "griewank": BenchmarkFunction("griewank", griewank, (-600.0,), (600.0,), 0.0),
    "mccormick": BenchmarkFunction("mccormick", mccormick, (-1.5, -3.0), (4.0, 4.0), -1.9133, fixed_dimension=2),
}


# Breeding profile for the benchmark suite: every generation breeds and every
# chromosome of the elitist pool jumps, sixteen transposons at a time.
BENCHMARK_BREEDING = {"jumping_rate": 1.0, "transposon_count": 16, "breeding_period": 1}


def benchmark_config(population=25, generations=100, seed=0):
    """Swarm settings used by ``bench-opt`` and the benchmark protocol."""
    return EbqpsoConfig(population=population, generations=generations, seed=seed, **BENCHMARK_BREEDING)


def get_benchmark(name):
    if name not in BENCHMARKS:
        raise InvalidInputError(f"Unknown benchmark '{name}', expected one of {sorted(BENCHMARKS)}")
    return BENCHMARKS[name]


def benchmark(name, x):
    """Evaluate the named benchmark function at ``x``."""
    return get_benchmark(name)(x)


def run_trials(name, dimension, algorithm="ebqpso", trials=5, config=None):
    """Repeat one optimiser on one benchmark with seeds ``seed + trial``.

    Returns
    -------
    dict
        ``mean``, ``std``, ``per_trial_best`` and ``evaluations`` (per trial).
    """
    function = get_benchmark(name)
    space = function.space(dimension)
    config = config or benchmark_config()
    if trials < 1:
        raise InvalidInputError("trials must be a positive integer")
    best, evaluations = [], []
    for trial in range(trials):
        trial_config = replace(config, seed=int(config.seed) + trial, dimension=None)
        result = make_swarm(algorithm, function, space, trial_config).run()
        best.append(result.best_fitness)
        evaluations.append(result.evaluation_count)
    trace(f"bench-opt: {algorithm} on {name} (d={dimension}) mean best {np.mean(best):.6g}")
    return {
        "mean": float(np.mean(best)),
        "std": float(np.std(best)),
        "per_trial_best": [float(v) for v in best],
        "evaluations": evaluations,
    }


def compare(name, dimension, algorithms=None, trials=5, config=None):
    """Run several optimisers on one benchmark under the same seeds."""
    algorithms = algorithms or sorted(SWARMS)
    function = get_benchmark(name)
    report = {
        "function": name,
        "dimension": int(dimension),
        "global_minimum": function.global_minimum,
        "trials": int(trials),
        "algorithms": {},
    }
    for algorithm in algorithms:
        report["algorithms"][algorithm] = run_trials(name, dimension, algorithm, trials, config)
    return report


def at_least_as_good(first, second, global_minimum):
    """``first <= second`` with ties within ``1e-9 max(1, |global minimum|)``."""
    return first <= second + 1e-9 * max(1.0, abs(global_minimum))
