"""Evolving fixed-size training-subset predictors.

A genotype is a fixed-length array of unique training-set indices. The
generational loop pairs parents at random, applies one-point crossover with
duplicate repair and single-gene mutation, and selects either elitist
(best of parents+children) or by deterministic crowding (each child duels
its most similar parent). Fitness comes from a pluggable evaluator and is a
pure function of (genotype content, evaluation seed), which makes whole runs
reproducible and lets per-genotype evaluations be cached.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, subset
from .nn.spec import NetworkSpec
from .nn.train import TrainConfig, evaluate_accuracy, train_network

SELECTION_STRATEGIES = ("elitist", "deterministic_crowding")
SEED_MODES = ("per_genotype", "per_generation")


class EvaluationError(RuntimeError):
    """Evaluator failure; carries the iteration that was running."""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"fitness evaluation failed at iteration {iteration}: "
                         f"{cause}")
        self.iteration = iteration


class SubsetPredictor:
    """Fixed-length sequence of unique training-set indices."""

    __slots__ = ("indices",)

    def __init__(self, indices):
        arr = np.ascontiguousarray(indices, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("indices must be a non-empty flat sequence")
        if arr.min() < 0:
            raise ValueError("negative training-set index")
        if np.unique(arr).size != arr.size:
            raise ValueError("duplicate training-set index")
        arr.flags.writeable = False
        self.indices = arr

    def __len__(self):
        return self.indices.size

    def __eq__(self, other):
        return (isinstance(other, SubsetPredictor)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"SubsetPredictor(size={len(self)})"

    def content_key(self) -> bytes:
        """Order-independent identity of the index set."""
        return np.sort(self.indices).tobytes()

    def distance(self, other: "SubsetPredictor") -> int:
        """Set distance: size minus the index-set intersection."""
        return len(self) - np.intersect1d(self.indices, other.indices,
                                          assume_unique=True).size

    def validate(self, predictor_size: int, training_set_size: int):
        if len(self) != predictor_size:
            raise ValueError(f"genotype length {len(self)} != "
                             f"predictor size {predictor_size}")
        if self.indices.max() >= training_set_size:
            raise ValueError("index beyond training-set size")


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 128
    iterations: int = 100
    crossover_probability: float = 0.75
    mutation_probability: float = 0.01
    crossover_point: int | None = None  # None = random cut per event
    selection: str = "elitist"
    predictor_size: int = 100
    rng_seed: int = 1
    evaluation_seed_mode: str = "per_genotype"

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 2")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        for name in ("crossover_probability", "mutation_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.predictor_size < 1:
            raise ValueError("predictor_size must be >= 1")
        if self.crossover_point is not None and not (
                0 <= self.crossover_point <= self.predictor_size):
            raise ValueError("fixed crossover point must lie in [0, size]")
        if self.selection not in SELECTION_STRATEGIES:
            raise ValueError(f"selection must be one of {SELECTION_STRATEGIES}")
        if self.evaluation_seed_mode not in SEED_MODES:
            raise ValueError(f"evaluation_seed_mode must be one of {SEED_MODES}")


class FitnessEvaluator:
    """Fitness in [0, 1], pure given (genotype content, seed), plus a
    deterministic per-evaluation cost report in milliseconds. The evaluator
    also defines the index universe genotypes may draw from."""

    training_set_size: int

    def evaluate(self, predictor: SubsetPredictor, seed: int) -> float:
        raise NotImplementedError

    def cost_ms(self, predictor: SubsetPredictor) -> float:
        return 0.0


class OverlapEvaluator(FitnessEvaluator):
    """Synthetic benchmark fitness: overlap with a hidden target index set."""

    def __init__(self, target_indices, training_set_size: int):
        self.target = np.unique(np.asarray(target_indices, dtype=np.int64))
        self.training_set_size = training_set_size

    def evaluate(self, predictor, seed):
        hits = np.intersect1d(predictor.indices, self.target,
                              assume_unique=True).size
        return hits / len(predictor)


class DnnEvaluator(FitnessEvaluator):
    """Train a fresh network on the predictor's subset, score on the test set.

    Training runs over sorted(indices) with an rng seed supplied by the
    evolution loop, so fitness depends only on the index set and that seed.
    The reported cost is the deterministic work model epochs * subset size *
    per_sample_ms (default 1.0: training costs roughly a millisecond per
    sample per epoch on commodity CPUs).
    """

    def __init__(self, spec: NetworkSpec, train_config: TrainConfig,
                 base: Dataset, test: Dataset, per_sample_ms: float = 1.0):
        self.spec = spec
        self.train_config = train_config
        self.base = base
        self.test = test
        self.per_sample_ms = per_sample_ms
        self.training_set_size = len(base)

    def evaluate(self, predictor, seed):
        view = subset(self.base, np.sort(predictor.indices))
        config = replace(self.train_config, rng_seed=seed)
        model = train_network(self.spec, view, config)
        return evaluate_accuracy(model, self.test)

    def cost_ms(self, predictor):
        return self.train_config.epochs * len(predictor) * self.per_sample_ms


@dataclass(frozen=True)
class IterationRecord:
    """Snapshot of the population entering one iteration."""
    iteration: int
    max_fitness: float
    mean_fitness: float
    min_fitness: float
    best: SubsetPredictor
    eval_ms: float


@dataclass
class EvolutionHistory:
    predictor_size: int
    rng_seed: int
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def final_best(self) -> SubsetPredictor:
        return self.records[-1].best

    @property
    def final_max_fitness(self) -> float:
        return self.records[-1].max_fitness

    def max_trace(self) -> list[float]:
        return [r.max_fitness for r in self.records]


HISTORY_HEADER = "iteration,max_fitness,mean_fitness,min_fitness,eval_ms"


def save_history_csv(history: EvolutionHistory, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(HISTORY_HEADER + "\n")
        for r in history.records:
            fh.write(f"{r.iteration},{r.max_fitness:.6f},{r.mean_fitness:.6f},"
                     f"{r.min_fitness:.6f},{r.eval_ms:.3f}\n")


def save_predictor(path, predictor: SubsetPredictor, seed: int):
    """Plain-text export: a header comment, then one index per line."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# predictor_size={len(predictor)} seed={seed}\n")
        for index in predictor.indices:
            fh.write(f"{index}\n")


def load_predictor(path) -> SubsetPredictor:
    indices = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                indices.append(int(line))
    return SubsetPredictor(indices)


def init_population(config: EvolutionConfig, training_set_size: int,
                    rng: np.random.Generator) -> list[SubsetPredictor]:
    """Uniform samples without replacement, one per population slot."""
    if config.predictor_size > training_set_size:
        raise ValueError(f"predictor_size {config.predictor_size} exceeds "
                         f"training-set size {training_set_size}")
    return [SubsetPredictor(rng.choice(training_set_size,
                                       size=config.predictor_size,
                                       replace=False))
            for _ in range(config.population_size)]


def _repair(values: np.ndarray, training_set_size: int,
            rng: np.random.Generator) -> np.ndarray:
    """Keep first occurrences; refill later duplicates with distinct draws
    from the unused part of the index range."""
    seen: set[int] = set()
    dup_positions = []
    for pos, value in enumerate(values):
        if value in seen:
            dup_positions.append(pos)
        else:
            seen.add(int(value))
    if not dup_positions:
        return values
    kept = np.fromiter(seen, dtype=np.int64, count=len(seen))
    pool = np.setdiff1d(np.arange(training_set_size, dtype=np.int64), kept,
                        assume_unique=True)
    fresh = rng.choice(pool, size=len(dup_positions), replace=False)
    repaired = values.copy()
    repaired[dup_positions] = fresh
    return repaired


def crossover_one_point(a: SubsetPredictor, b: SubsetPredictor, point: int,
                        training_set_size: int, rng: np.random.Generator):
    """Splice at `point`; collisions introduced by the splice are repaired
    with seeded draws so both children stay duplicate-free."""
    size = len(a)
    if not 0 <= point <= size:
        raise ValueError(f"crossover point {point} outside [0, {size}]")
    first = np.concatenate([a.indices[:point], b.indices[point:]])
    second = np.concatenate([b.indices[:point], a.indices[point:]])
    return (SubsetPredictor(_repair(first, training_set_size, rng)),
            SubsetPredictor(_repair(second, training_set_size, rng)))


def mutate(genotype: SubsetPredictor, mutation_probability: float,
           training_set_size: int, rng: np.random.Generator) -> SubsetPredictor:
    """With the given probability, swap exactly one uniformly chosen gene for
    a uniform random index not already present."""
    if rng.random() >= mutation_probability:
        return genotype
    pool = np.setdiff1d(np.arange(training_set_size, dtype=np.int64),
                        genotype.indices, assume_unique=False)
    if pool.size == 0:  # genotype already covers the whole set
        return genotype
    position = rng.integers(len(genotype))
    mutated = genotype.indices.copy()
    mutated[position] = rng.choice(pool)
    return SubsetPredictor(mutated)


def select_elitist(parents, parent_fitness, children, child_fitness,
                   population_size: int):
    """Best `population_size` of the union; ties keep parents before
    children, then lower original position."""
    pool = [(fit, origin, pos, genotype)
            for origin, (members, fits) in enumerate(
                [(parents, parent_fitness), (children, child_fitness)])
            for pos, (genotype, fit) in enumerate(zip(members, fits))]
    pool.sort(key=lambda item: (-item[0], item[1], item[2]))
    chosen = pool[:population_size]
    return [item[3] for item in chosen], [item[0] for item in chosen]


def select_deterministic_crowding(parents, parent_fitness, children,
                                  child_fitness):
    """Family tournament: children are matched to the more similar parent
    (pairing minimizes total set distance) and replace it on a win or tie."""
    if len(children) != len(parents):
        raise ValueError("deterministic crowding needs one child per parent")
    survivors = []
    fitness = []
    for k in range(0, len(parents), 2):
        p1, p2 = parents[k], parents[k + 1]
        c1, c2 = children[k], children[k + 1]
        f_p1, f_p2 = parent_fitness[k], parent_fitness[k + 1]
        f_c1, f_c2 = child_fitness[k], child_fitness[k + 1]
        straight = p1.distance(c1) + p2.distance(c2)
        crossed = p1.distance(c2) + p2.distance(c1)
        if crossed < straight:
            matches = [(p1, f_p1, c2, f_c2), (p2, f_p2, c1, f_c1)]
        else:
            matches = [(p1, f_p1, c1, f_c1), (p2, f_p2, c2, f_c2)]
        for parent, f_parent, child, f_child in matches:
            if f_child >= f_parent:
                survivors.append(child)
                fitness.append(f_child)
            else:
                survivors.append(parent)
                fitness.append(f_parent)
    return survivors, fitness


def _derive_seed(run_seed: int, payload: bytes) -> int:
    digest = hashlib.blake2b(
        payload, digest_size=8,
        key=(run_seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    return int.from_bytes(digest.digest(), "little")


def evaluation_seed(config: EvolutionConfig, predictor: SubsetPredictor,
                    generation: int) -> int:
    if config.evaluation_seed_mode == "per_genotype":
        return _derive_seed(config.rng_seed, b"genotype:" + predictor.content_key())
    return _derive_seed(config.rng_seed, b"generation:%d" % generation)


class _EvaluationPool:
    """Applies the evaluator over genotype lists, preserving order; caches by
    content in per_genotype mode and totals the reported cost of evaluations
    actually performed."""

    def __init__(self, evaluator, config, workers):
        self.evaluator = evaluator
        self.config = config
        self.workers = workers
        self.cache = {} if config.evaluation_seed_mode == "per_genotype" else None
        self.cost_ms = 0.0

    def evaluate(self, genotypes, generation, iteration):
        jobs = []
        fitness = [0.0] * len(genotypes)
        for pos, genotype in enumerate(genotypes):
            if self.cache is not None:
                cached = self.cache.get(genotype.content_key())
                if cached is not None:
                    fitness[pos] = cached
                    continue
            jobs.append((pos, genotype,
                         evaluation_seed(self.config, genotype, generation)))
        try:
            if self.workers > 1 and len(jobs) > 1:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    results = list(pool.map(
                        lambda job: self.evaluator.evaluate(job[1], job[2]),
                        jobs))
            else:
                results = [self.evaluator.evaluate(g, s) for _, g, s in jobs]
        except Exception as exc:
            raise EvaluationError(iteration, exc) from exc
        for (pos, genotype, _), value in zip(jobs, results):
            fitness[pos] = float(value)
            self.cost_ms += float(self.evaluator.cost_ms(genotype))
            if self.cache is not None:
                self.cache[genotype.content_key()] = float(value)
        return fitness

    def take_cost(self) -> float:
        cost, self.cost_ms = self.cost_ms, 0.0
        return cost


def run_evolution(config: EvolutionConfig, evaluator: FitnessEvaluator,
                  workers: int = 1, on_iteration=None) -> EvolutionHistory:
    """Generational loop; returns one record per iteration describing the
    population entering it (record 0 is the initial population)."""
    training_set_size = evaluator.training_set_size
    rng = np.random.default_rng(config.rng_seed)
    population = init_population(config, training_set_size, rng)
    pool = _EvaluationPool(evaluator, config, workers)
    history = EvolutionHistory(config.predictor_size, config.rng_seed)

    fitness = None
    for iteration in range(config.iterations):
        if fitness is None or pool.cache is None:
            fitness = pool.evaluate(population, iteration, iteration)
        stats_fitness = list(fitness)
        best = population[int(np.argmax(stats_fitness))]

        order = rng.permutation(config.population_size)
        parents = [population[i] for i in order]
        parent_fitness = [fitness[i] for i in order]
        children = []
        for k in range(0, config.population_size, 2):
            a, b = parents[k], parents[k + 1]
            if rng.random() < config.crossover_probability:
                if config.crossover_point is not None:
                    point = config.crossover_point
                elif config.predictor_size >= 2:
                    point = int(rng.integers(1, config.predictor_size))
                else:
                    point = 0
                pair = crossover_one_point(a, b, point, training_set_size, rng)
            else:
                pair = (SubsetPredictor(a.indices), SubsetPredictor(b.indices))
            children.extend(pair)
        children = [mutate(child, config.mutation_probability,
                           training_set_size, rng) for child in children]
        for child in children:
            child.validate(config.predictor_size, training_set_size)

        child_fitness = pool.evaluate(children, iteration, iteration)
        if config.selection == "elitist":
            population, fitness = select_elitist(
                population, fitness, children, child_fitness,
                config.population_size)
        else:
            population, fitness = select_deterministic_crowding(
                parents, parent_fitness, children, child_fitness)

        record = IterationRecord(
            iteration=iteration,
            max_fitness=float(np.max(stats_fitness)),
            mean_fitness=float(np.mean(stats_fitness)),
            min_fitness=float(np.min(stats_fitness)),
            best=best,
            eval_ms=pool.take_cost(),
        )
        history.records.append(record)
        if on_iteration is not None:
            on_iteration(record)
    return history
