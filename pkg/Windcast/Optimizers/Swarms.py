"""
Swarm optimisers used to tune the per-mode regressors.

Every swarm works in the normalised box ``[0, 1]^d``; a :class:`SearchSpace`
maps normalised positions to real coordinates (log10 scaling for wide
positive ranges, rounding for integer dimensions) before the fitness is
called. All swarms minimise.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional
import math
import numpy as np
from Windcast.Models.Errors import InvalidInputError, NumericalError
from Windcast.Models.Logger import trace

CE_MODES = ("fixed", "linear_decay")


@dataclass(frozen=True)
class SearchSpace:
    """Box of admissible coordinates.

    Attributes
    ----------
    lower, upper : numpy.ndarray
        Per-dimension bounds. A dimension with ``lower == upper`` is fixed.
    log_scale : numpy.ndarray
        Dimensions searched in log10 of the coordinate; require ``lower > 0``.
    integer_dims : numpy.ndarray
        Dimensions rounded to integers on decode.
    """

    lower: np.ndarray
    upper: np.ndarray
    log_scale: Optional[np.ndarray] = None
    integer_dims: Optional[np.ndarray] = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.size == 0 or lower.shape != upper.shape:
            raise InvalidInputError("Search bounds must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidInputError("Search bounds must be finite")
        if np.any(lower > upper):
            raise InvalidInputError("Every lower bound must not exceed its upper bound")
        log_scale = self._flags(self.log_scale, lower.size)
        integer_dims = self._flags(self.integer_dims, lower.size)
        if np.any(lower[log_scale] <= 0):
            raise InvalidInputError("Log-scale dimensions need a positive lower bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "log_scale", log_scale)
        object.__setattr__(self, "integer_dims", integer_dims)

    @staticmethod
    def _flags(flags, size):
        if flags is None:
            return np.zeros(size, dtype=bool)
        flags = np.asarray(flags, dtype=bool).reshape(-1)
        if flags.size != size:
            raise InvalidInputError("Dimension flags must match the number of bounds")
        return flags

    @classmethod
    def uniform(cls, lower, upper, dimension):
        return cls(np.full(dimension, float(lower)), np.full(dimension, float(upper)))

    @property
    def dimension(self):
        return self.lower.size

    def _scaled_bounds(self):
        lower = np.where(self.log_scale, np.log10(np.where(self.log_scale, self.lower, 1.0)), self.lower)
        upper = np.where(self.log_scale, np.log10(np.where(self.log_scale, self.upper, 1.0)), self.upper)
        return lower, upper

    def normalize(self, position):
        """Map a coordinate vector into ``[0, 1]^d``.

        Returns
        -------
        (numpy.ndarray, bool)
            The normalised vector and whether any coordinate had to be
            clamped into the box.
        """
        position = np.asarray(position, dtype=float).reshape(-1)
        if position.size != self.dimension:
            raise InvalidInputError(f"Position has {position.size} dimensions, space has {self.dimension}")
        lower, upper = self._scaled_bounds()
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.where(self.log_scale, np.log10(np.where(self.log_scale & (position > 0), position, np.nan)), position)
        scaled = np.where(np.isnan(scaled), lower, scaled)
        span = upper - lower
        normalized = np.divide(scaled - lower, span, out=np.zeros_like(scaled), where=span > 0)
        clamped = bool(np.any(normalized < 0) or np.any(normalized > 1))
        clamped = clamped or bool(np.any(self.log_scale & ~(position > 0)))
        if clamped:
            trace(f"normalize: clamped out-of-box position {position.tolist()}")
        return np.clip(normalized, 0.0, 1.0), clamped

    def denormalize(self, normalized):
        """Inverse of :meth:`normalize`; integer dimensions are rounded."""
        normalized = np.clip(np.asarray(normalized, dtype=float).reshape(-1), 0.0, 1.0)
        lower, upper = self._scaled_bounds()
        scaled = lower + normalized * (upper - lower)
        position = scaled.copy()
        position[self.log_scale] = 10.0 ** scaled[self.log_scale]
        position = np.clip(position, self.lower, self.upper)
        if np.any(self.integer_dims):
            rounded = np.clip(np.round(position), np.ceil(self.lower), np.floor(self.upper))
            position = np.where(self.integer_dims, rounded, position)
        return position


@dataclass(frozen=True)
class EbqpsoConfig:
    """Swarm settings. ``breeding_period`` is the breeding interval lambda."""

    population: int = 25
    generations: int = 100
    dimension: Optional[int] = None
    jumping_rate: float = 0.3
    transposon_count: int = 1
    transposon_size: int = 1
    breeding_period: int = 5
    ce_mode: str = "fixed"
    ce_value: float = 0.5
    seed: int = 0
    workers: int = 1
    # Velocity PSO baseline only
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494

    def validate(self):
        for name in ("population", "generations", "transposon_count", "transposon_size", "breeding_period", "workers"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"ebqpso.{name} must be a positive integer")
        if self.dimension is not None and int(self.dimension) < 1:
            raise InvalidInputError("ebqpso.dimension must be a positive integer")
        if not 0.0 <= self.jumping_rate <= 1.0:
            raise InvalidInputError("ebqpso.jumping_rate must lie in [0, 1]")
        if self.breeding_period > self.generations:
            raise InvalidInputError("ebqpso.breeding_period must not exceed ebqpso.generations")
        if self.dimension is not None and self.transposon_size > self.dimension:
            raise InvalidInputError("ebqpso.transposon_size must not exceed the dimension")
        if self.ce_mode not in CE_MODES:
            raise InvalidInputError(f"ebqpso.ce_mode must be one of {CE_MODES}")
        if not self.ce_value >= 0:
            raise InvalidInputError("ebqpso.ce_value must be non-negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError("ebqpso.seed must be an unsigned 64-bit integer")
        return self


@dataclass
class OptimizationTrace:
    algorithm: str
    best_position: np.ndarray
    best_fitness: float
    fitness_history: List[float] = field(default_factory=list)
    evaluation_count: int = 0

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "best_position": [float(v) for v in self.best_position],
            "best_fitness": float(self.best_fitness),
            "fitness_history": [float(v) for v in self.fitness_history],
            "evaluation_count": int(self.evaluation_count),
        }


def mean_best(pbest_positions):
    """Per-dimension mean of the personal best positions."""
    pbest = np.asarray(pbest_positions, dtype=float)
    if pbest.size == 0:
        raise InvalidInputError("mean_best needs at least one particle")
    return np.atleast_2d(pbest).mean(axis=0)


def contraction_expansion(t, total, mode="fixed", value=0.5):
    """Contraction-expansion coefficient for generation ``t`` of ``total``."""
    if mode == "linear_decay":
        return 0.5 + 0.5 * (total - t) / total
    if mode == "fixed":
        return float(value)
    raise InvalidInputError(f"Unknown contraction-expansion mode '{mode}'")


def qpso_step(positions, pbest, gbest, mbest, alpha, rng):
    """One quantum-behaved position update in the normalised box.

    Each coordinate is drawn as ``P_c +/- alpha |mbest - X| ln(1/u)`` around
    the local attractor ``P_c = gbest + phi (pbest - gbest)``. The generator
    is consumed as three ``(M, d)`` blocks in the order phi, u, sign.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    pbest = np.atleast_2d(np.asarray(pbest, dtype=float))
    shape = positions.shape
    phi = rng.random(shape)
    u = 1.0 - rng.random(shape)
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    attractor = gbest + phi * (pbest - gbest)
    spread = alpha * np.abs(mbest - positions) * np.log(1.0 / u)
    return np.clip(attractor + sign * spread, 0.0, 1.0)


def cut_and_paste(pool, source_chromosome, target_chromosome, source_locus, target_locus, size=1):
    """Move a block of ``size`` genes.

    Within one chromosome the block is removed and reinserted at
    ``target_locus`` (a permutation of the genes). Between chromosomes the
    source block and the target block swap places.
    """
    pool = np.array(pool, dtype=float)
    block = slice(source_locus, source_locus + size)
    if source_chromosome == target_chromosome:
        genes = pool[source_chromosome]
        moved = genes[block].copy()
        rest = np.delete(genes, np.arange(source_locus, source_locus + size))
        pool[source_chromosome] = np.insert(rest, target_locus, moved)
    else:
        target = slice(target_locus, target_locus + size)
        moved = pool[source_chromosome, block].copy()
        pool[source_chromosome, block] = pool[target_chromosome, target]
        pool[target_chromosome, target] = moved
    return pool


def copy_and_paste(pool, source_chromosome, target_chromosome, source_locus, target_locus, size=1):
    """Overwrite the target block with a copy of the source block."""
    pool = np.array(pool, dtype=float)
    pool[target_chromosome, target_locus:target_locus + size] = pool[source_chromosome, source_locus:source_locus + size].copy()
    return pool


def transposon_operator(epool, jumping_rate, transposon_count, transposon_size, rng):
    """Breed an elitist pool of ``M + 1`` normalised chromosomes.

    For every chromosome, with probability ``jumping_rate``, a partner is
    drawn uniformly from the pool (possibly itself or the global best slot)
    and a coin selects cut-and-paste or copy-and-paste.
    """
    pool = np.array(epool, dtype=float)
    chromosomes, genes = pool.shape
    if transposon_size > genes:
        raise InvalidInputError("Transposon size exceeds the chromosome length")
    loci = genes - transposon_size + 1
    for _ in range(int(transposon_count)):
        for first in range(chromosomes):
            if rng.random() >= jumping_rate:
                continue
            second = max(math.ceil(rng.random() * chromosomes) - 1, 0)
            operator = cut_and_paste if rng.random() > 0.5 else copy_and_paste
            source, target = int(rng.integers(loci)), int(rng.integers(loci))
            pool = operator(pool, first, second, source, target, transposon_size)
    return pool


class BaseSwarm:
    """Shared bookkeeping: decoding, guarded evaluation and counting.

    Parameters
    ----------
    fitness : callable
        Maps a decoded coordinate vector to a real value to minimise.
    space : SearchSpace
    config : EbqpsoConfig
    """

    NAME = "base"

    def __init__(self, fitness, space, config=None):
        self.config = (config or EbqpsoConfig()).validate()
        if self.config.dimension is not None and self.config.dimension != space.dimension:
            raise InvalidInputError(f"Configured dimension {self.config.dimension} differs from the search space ({space.dimension})")
        self.fitness = fitness
        self.space = space
        self.rng = np.random.default_rng(int(self.config.seed))
        self.evaluation_count = 0

    def _score(self, normalized):
        try:
            value = float(self.fitness(self.space.denormalize(normalized)))
        except NumericalError as err:
            trace(f"{self.NAME}: fitness failed ({err}), scored as worst")
            return math.inf
        return value if math.isfinite(value) else math.inf

    def evaluate(self, normalized_positions):
        """Fitness of each row, in row order; failures score ``inf``."""
        rows = list(np.atleast_2d(normalized_positions))
        self.evaluation_count += len(rows)
        if self.config.workers > 1 and len(rows) > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                return np.array(list(executor.map(self._score, rows)), dtype=float)
        return np.array([self._score(row) for row in rows], dtype=float)

    def initialize(self):
        positions = self.rng.random((self.config.population, self.space.dimension))
        fitness = self.evaluate(positions)
        self.positions = positions
        self.pbest = positions.copy()
        self.pbest_fitness = fitness.copy()
        best = int(np.argmin(fitness))
        self.gbest = positions[best].copy()
        self.gbest_fitness = float(fitness[best])

    def refresh_bests(self, positions, fitness):
        improved = fitness < self.pbest_fitness
        self.pbest[improved] = positions[improved]
        self.pbest_fitness[improved] = fitness[improved]
        best = int(np.argmin(self.pbest_fitness))
        if self.pbest_fitness[best] < self.gbest_fitness:
            self.gbest = self.pbest[best].copy()
            self.gbest_fitness = float(self.pbest_fitness[best])

    def step(self, t):
        raise NotImplementedError

    def run(self):
        """Run all generations and return the best-ever solution."""
        self.initialize()
        history = []
        total = self.config.generations
        for t in range(1, total + 1):
            self.step(t)
            history.append(self.gbest_fitness)
        trace(f"{self.NAME}: best fitness {self.gbest_fitness:.6g} after {self.evaluation_count} evaluations")
        return OptimizationTrace(
            algorithm=self.NAME,
            best_position=self.space.denormalize(self.gbest),
            best_fitness=self.gbest_fitness,
            fitness_history=history,
            evaluation_count=self.evaluation_count,
        )


class QuantumSwarm(BaseSwarm):
    """Quantum-behaved swarm without breeding."""

    NAME = "qpso"

    def move(self, t, mbest):
        config = self.config
        alpha = contraction_expansion(t, config.generations, config.ce_mode, config.ce_value)
        self.positions = qpso_step(self.positions, self.pbest, self.gbest, mbest, alpha, self.rng)
        self.refresh_bests(self.positions, self.evaluate(self.positions))

    def step(self, t):
        self.move(t, mean_best(self.pbest))


class ElitistQuantumSwarm(QuantumSwarm):
    """Quantum-behaved swarm that breeds its elite every ``breeding_period`` generations.

    The elitist pool is every personal best plus the global best. Bred
    chromosomes that changed are evaluated; a bred personal best replaces its
    parent when it is fitter, and the bred global best slot replaces the
    global best when it is fitter. The generation's ``mbest`` is taken before
    breeding.
    """

    NAME = "ebqpso"

    def breed(self):
        config = self.config
        if config.transposon_size > self.space.dimension:
            raise InvalidInputError("ebqpso.transposon_size must not exceed the dimension")
        pool = np.vstack([self.pbest, self.gbest])
        bred = transposon_operator(pool, config.jumping_rate, config.transposon_count, config.transposon_size, self.rng)
        changed = np.flatnonzero(np.any(bred != pool, axis=1))
        if changed.size == 0:
            return
        scores = self.evaluate(bred[changed])
        population = config.population
        for index, score in zip(changed, scores):
            if index < population:
                if score < self.pbest_fitness[index]:
                    self.pbest[index] = bred[index]
                    self.pbest_fitness[index] = score
            elif score < self.gbest_fitness:
                self.gbest = bred[index].copy()
                self.gbest_fitness = float(score)
        self.refresh_bests(self.pbest, self.pbest_fitness)

    def step(self, t):
        mbest = mean_best(self.pbest)
        if t % self.config.breeding_period == 0:
            self.breed()
        self.move(t, mbest)


class ParticleSwarm(BaseSwarm):
    """Velocity-based particle swarm used as a comparison baseline."""

    NAME = "pso"

    def initialize(self):
        super().initialize()
        self.velocities = np.zeros_like(self.positions)

    def step(self, t):
        config = self.config
        shape = self.positions.shape
        r1 = self.rng.random(shape)
        r2 = self.rng.random(shape)
        self.velocities = (
            config.inertia * self.velocities
            + config.cognitive * r1 * (self.pbest - self.positions)
            + config.social * r2 * (self.gbest - self.positions)
        )
        self.positions = np.clip(self.positions + self.velocities, 0.0, 1.0)
        self.refresh_bests(self.positions, self.evaluate(self.positions))


SWARMS = {swarm.NAME: swarm for swarm in (ParticleSwarm, QuantumSwarm, ElitistQuantumSwarm)}


def make_swarm(algorithm, fitness, space, config=None):
    if algorithm not in SWARMS:
        raise InvalidInputError(f"Unknown optimiser '{algorithm}', expected one of {sorted(SWARMS)}")
    return SWARMS[algorithm](fitness, space, config)


def run(fitness, space, config=None):
    """Minimise ``fitness`` over ``space`` with the elitist-breeding swarm."""
    return ElitistQuantumSwarm(fitness, space, config).run()


def evaluation_budget(config):
    """Upper bound on fitness evaluations of an elitist-breeding run."""
    lam = config.breeding_period
    return config.generations * config.population * (2 + lam) / lam + config.population
