"""Experiment configuration: a flat `[section]` / `key = value` text format.

Unset keys fall back to the documented defaults (the stock network topology,
training and evolution parameters). Parse errors and invariant violations
name the offending key and line.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from ..evolution import EvolutionConfig
from ..nn.train import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    source: str = "synthetic"  # synthetic | mnist
    data_dir: str | None = None
    num_classes: int = 10
    per_class: int = 200
    test_per_class: int = 50
    image_side: int = 28
    noise: float = 0.3
    seed: int = 7

    def __post_init__(self):
        if self.source not in ("synthetic", "mnist"):
            raise ValueError("dataset source must be synthetic or mnist")
        if min(self.num_classes, self.per_class, self.test_per_class,
               self.image_side) < 1:
            raise ValueError("dataset sizes must be positive")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")


@dataclass(frozen=True)
class NetworkConfig:
    preset: str = "lenet"  # lenet | mlp
    hidden: tuple[int, ...] = (64,)
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.preset not in ("lenet", "mlp"):
            raise ValueError("network preset must be lenet or mlp")
        if self.activation not in ("relu", "none"):
            raise ValueError("activation must be relu or none")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    sweep_sizes: tuple[int, ...] = (100, 250, 500, 1000, 2000, 4000)
    repetitions: int = 1
    reference_accuracy: float | None = None
    bench_repetitions: int = 100

    def __post_init__(self):
        object.__setattr__(self, "sweep_sizes", tuple(self.sweep_sizes))
        if not self.sweep_sizes:
            raise ValueError("sweep sizes must be non-empty")
        if any(earlier >= later for earlier, later
               in zip(self.sweep_sizes, self.sweep_sizes[1:])):
            raise ValueError("sweep sizes must be strictly increasing")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.bench_repetitions < 1:
            raise ValueError("bench repetitions must be >= 1")
        if self.reference_accuracy is not None \
                and not 0.0 <= self.reference_accuracy <= 1.0:
            raise ValueError("reference_accuracy must lie in [0, 1]")


def _parse_int_list(text):
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_optional_str(text):
    return None if text.lower() == "none" else text


def _parse_optional_float(text):
    return None if text.lower() == "none" else float(text)


def _parse_optional_int(text):
    return None if text.lower() == "none" else int(text)


def _parse_selection(text):
    return {"dc": "deterministic_crowding"}.get(text, text)


# (section, key) -> (target dataclass field path, parser)
_SCHEMA = {
    ("dataset", "source"): ("dataset.source", str),
    ("dataset", "dir"): ("dataset.data_dir", _parse_optional_str),
    ("dataset", "num_classes"): ("dataset.num_classes", int),
    ("dataset", "per_class"): ("dataset.per_class", int),
    ("dataset", "test_per_class"): ("dataset.test_per_class", int),
    ("dataset", "image_side"): ("dataset.image_side", int),
    ("dataset", "noise"): ("dataset.noise", float),
    ("dataset", "seed"): ("dataset.seed", int),
    ("network", "preset"): ("network.preset", str),
    ("network", "hidden"): ("network.hidden", _parse_int_list),
    ("network", "activation"): ("network.activation", str),
    ("training", "learning_rate"): ("training.learning_rate", float),
    ("training", "learning_rate_decay"): ("training.learning_rate_decay", float),
    ("training", "batch_size"): ("training.batch_size", int),
    ("training", "epochs"): ("training.epochs", int),
    ("training", "l1"): ("training.l1_coeff", float),
    ("training", "l2"): ("training.l2_coeff", float),
    ("training", "momentum"): ("training.momentum", float),
    ("training", "seed"): ("training.rng_seed", int),
    ("evolution", "population_size"): ("evolution.population_size", int),
    ("evolution", "iterations"): ("evolution.iterations", int),
    ("evolution", "crossover_probability"):
        ("evolution.crossover_probability", float),
    ("evolution", "mutation_probability"):
        ("evolution.mutation_probability", float),
    ("evolution", "crossover_point"): ("evolution.crossover_point",
                                       _parse_optional_int),
    ("evolution", "selection"): ("evolution.selection", _parse_selection),
    ("evolution", "predictor_size"): ("evolution.predictor_size", int),
    ("evolution", "seed"): ("evolution.rng_seed", int),
    ("evolution", "evaluation_seed_mode"):
        ("evolution.evaluation_seed_mode", str),
    ("sweep", "sizes"): ("sweep_sizes", _parse_int_list),
    ("sweep", "repetitions"): ("repetitions", int),
    ("sweep", "reference_accuracy"): ("reference_accuracy",
                                      _parse_optional_float),
    ("bench", "repetitions"): ("bench_repetitions", int),
}

_SECTIONS = ("dataset", "network", "training", "evolution", "sweep", "bench")


def parse_config(text: str, origin: str = "<config>") -> ExperimentConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{origin}:{lineno}: unknown section "
                                  f"[{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value, "
                              f"got {line!r}")
        if section is None:
            raise ConfigError(f"{origin}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        entry = _SCHEMA.get((section, key))
        if entry is None:
            raise ConfigError(f"{origin}:{lineno}: unknown key "
                              f"{section}.{key}")
        path, parser = entry
        try:
            values[path] = parser(value.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for "
                              f"{section}.{key}: {exc}") from None
        lines[path] = lineno

    def where(paths):
        spots = sorted(lines[p] for p in paths if p in lines)
        return ", ".join(f"line {n}" for n in spots) or "defaults"

    def build(cls, prefix):
        kwargs = {}
        for f in fields(cls):
            path = f"{prefix}.{f.name}"
            if path in values:
                kwargs[f.name] = values.pop(path)
        try:
            return cls(**kwargs)
        except ValueError as exc:
            related = [p for p in lines if p.startswith(prefix + ".")]
            raise ConfigError(f"{origin} ({where(related)}): {exc}") from None

    dataset = build(DatasetConfig, "dataset")
    network = build(NetworkConfig, "network")
    training = build(TrainConfig, "training")
    evolution = build(EvolutionConfig, "evolution")
    try:
        return ExperimentConfig(dataset=dataset, network=network,
                                training=training, evolution=evolution,
                                **values)
    except ValueError as exc:
        raise ConfigError(f"{origin} ({where(list(values))}): {exc}") from None


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), origin=str(path))


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    def fmt(value):
        if value is None:
            return "none"
        if isinstance(value, tuple):
            return ",".join(str(v) for v in value)
        if isinstance(value, float):
            return repr(value)
        return str(value)

    getters = {
        "dataset.source": lambda c: c.dataset.source,
        "dataset.data_dir": lambda c: c.dataset.data_dir,
        "dataset.num_classes": lambda c: c.dataset.num_classes,
        "dataset.per_class": lambda c: c.dataset.per_class,
        "dataset.test_per_class": lambda c: c.dataset.test_per_class,
        "dataset.image_side": lambda c: c.dataset.image_side,
        "dataset.noise": lambda c: c.dataset.noise,
        "dataset.seed": lambda c: c.dataset.seed,
        "network.preset": lambda c: c.network.preset,
        "network.hidden": lambda c: c.network.hidden,
        "network.activation": lambda c: c.network.activation,
        "training.learning_rate": lambda c: c.training.learning_rate,
        "training.learning_rate_decay": lambda c: c.training.learning_rate_decay,
        "training.batch_size": lambda c: c.training.batch_size,
        "training.epochs": lambda c: c.training.epochs,
        "training.l1_coeff": lambda c: c.training.l1_coeff,
        "training.l2_coeff": lambda c: c.training.l2_coeff,
        "training.momentum": lambda c: c.training.momentum,
        "training.rng_seed": lambda c: c.training.rng_seed,
        "evolution.population_size": lambda c: c.evolution.population_size,
        "evolution.iterations": lambda c: c.evolution.iterations,
        "evolution.crossover_probability":
            lambda c: c.evolution.crossover_probability,
        "evolution.mutation_probability":
            lambda c: c.evolution.mutation_probability,
        "evolution.crossover_point": lambda c: c.evolution.crossover_point,
        "evolution.selection": lambda c: c.evolution.selection,
        "evolution.predictor_size": lambda c: c.evolution.predictor_size,
        "evolution.rng_seed": lambda c: c.evolution.rng_seed,
        "evolution.evaluation_seed_mode":
            lambda c: c.evolution.evaluation_seed_mode,
        "sweep_sizes": lambda c: c.sweep_sizes,
        "repetitions": lambda c: c.repetitions,
        "reference_accuracy": lambda c: c.reference_accuracy,
        "bench_repetitions": lambda c: c.bench_repetitions,
    }
    out = []
    section = None
    for (sec, key), (path, _) in _SCHEMA.items():
        if sec != section:
            if section is not None:
                out.append("")
            out.append(f"[{sec}]")
            section = sec
        out.append(f"{key} = {fmt(getters[path](config))}")
    return "\n".join(out) + "\n"
