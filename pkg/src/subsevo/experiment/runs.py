"""The three experiments: evolve, size sweep, timing bench, plus the
selection-strategy comparison.

All CSV fitness values are written with 6 decimals; sweep summaries are
percentages with 4 decimals, aggregated over the rounded per-iteration
values exactly as they appear in history.csv, so every summary number is
recomputable from the raw rows it was derived from.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from ..data import (Dataset, load_mnist, make_synthetic, resolve_data_dir,
                    subset)
from ..evolution import (DnnEvaluator, EvolutionHistory, run_evolution,
                         save_history_csv, save_predictor)
from ..nn import (NetworkSpec, SgdState, TrainedModel, evaluate_accuracy,
                  init_weights, lenet_spec, mlp_spec, save_model,
                  train_epoch, train_network)
from .config import ExperimentConfig
from .svg import emit_plot

SWEEP_HEADER = ("size,min_fitness,max_fitness,max_minus_min,"
                "reference_minus_max")
TIMING_HEADER = "size,mean_ms,std_ms,repetitions"
TIMING_RAW_HEADER = "size,rep,epoch_ms"
TIMING_FIT_HEADER = "slope_ms_per_sample,intercept_ms,r_squared"


def build_datasets(config: ExperimentConfig, data_dir=None):
    """(train, test) per the dataset section; MNIST needs a directory from
    config, flag or environment."""
    ds = config.dataset
    if ds.source == "mnist":
        directory = resolve_data_dir(data_dir or ds.data_dir)
        return load_mnist(directory)
    train = make_synthetic(ds.num_classes, ds.per_class, ds.image_side,
                           ds.noise, ds.seed)
    test = make_synthetic(ds.num_classes, ds.test_per_class, ds.image_side,
                          ds.noise, ds.seed + 1)
    return train, test


def build_network_spec(config: ExperimentConfig, train: Dataset) -> NetworkSpec:
    net = config.network
    shape = tuple(train.sample_shape)
    if net.preset == "lenet":
        return lenet_spec(input_shape=shape, num_classes=train.num_classes)
    activation = None if net.activation == "none" else net.activation
    return mlp_spec(shape, hidden=net.hidden, num_classes=train.num_classes,
                    activation=activation)


def build_evaluator(config: ExperimentConfig, train, test) -> DnnEvaluator:
    spec = build_network_spec(config, train)
    return DnnEvaluator(spec, config.training, train, test)


def _print_record(record):
    print(f"iteration {record.iteration:4d}  "
          f"max {record.max_fitness:.6f}  mean {record.mean_fitness:.6f}  "
          f"min {record.min_fitness:.6f}  eval_ms {record.eval_ms:.1f}")


def run_evolve(config: ExperimentConfig, out_dir, quiet=False,
               workers: int = 1, data_dir=None) -> EvolutionHistory:
    """One evolution run; writes history.csv and best_predictor.txt."""
    os.makedirs(out_dir, exist_ok=True)
    train, test = build_datasets(config, data_dir)
    evaluator = build_evaluator(config, train, test)
    history = run_evolution(config.evolution, evaluator, workers=workers,
                            on_iteration=None if quiet else _print_record)
    save_history_csv(history, os.path.join(out_dir, "history.csv"))
    if history.records:
        save_predictor(os.path.join(out_dir, "best_predictor.txt"),
                       history.final_best, config.evolution.rng_seed)
    return history


def run_train(config: ExperimentConfig, out_dir, quiet=False, data_dir=None,
              predictor=None):
    """Train one model on the full training set (or on a predictor's subset),
    report test accuracy, and save the weights to model.sevm."""
    os.makedirs(out_dir, exist_ok=True)
    train, test = build_datasets(config, data_dir)
    spec = build_network_spec(config, train)
    data = train if predictor is None else subset(train, predictor.indices)
    if not quiet:
        print(f"training on {len(data)} samples for "
              f"{config.training.epochs} epochs...")
    model = train_network(spec, data, config.training)
    accuracy = evaluate_accuracy(model, test)
    save_model(model, os.path.join(out_dir, "model.sevm"))
    with open(os.path.join(out_dir, "train_summary.csv"), "w",
              newline="\n") as fh:
        fh.write("train_samples,epochs,test_accuracy\n")
        fh.write(f"{len(data)},{config.training.epochs},{accuracy:.6f}\n")
    print(f"test accuracy {accuracy:.6f}")
    return model, accuracy


def _rounded_stats(history: EvolutionHistory):
    """(min, max) over all per-iteration population stats, in the 6-decimal
    precision of the CSV rows."""
    mins = [round(r.min_fitness, 6) for r in history.records]
    maxes = [round(r.max_fitness, 6) for r in history.records]
    return min(mins), max(maxes)


def compute_reference_accuracy(config: ExperimentConfig, train, test,
                               spec=None) -> float:
    """Accuracy of one model trained on the full training set."""
    spec = spec or build_network_spec(config, train)
    model = train_network(spec, train, config.training)
    return evaluate_accuracy(model, test)


@dataclass(frozen=True)
class SweepRow:
    size: int
    min_fitness: float
    max_fitness: float
    reference: float

    @property
    def max_minus_min(self):
        return self.max_fitness - self.min_fitness

    @property
    def reference_minus_max(self):
        return self.reference - self.max_fitness


def run_size_sweep(config: ExperimentConfig, out_dir, quiet=False,
                   workers: int = 1, data_dir=None) -> list[SweepRow]:
    """Evolution at each sweep size; emits per-size histories under
    sweep/size_<S>/ and a percent summary table."""
    if config.evolution.iterations < 1:
        raise ValueError("a sweep needs at least one evolution iteration")
    sweep_dir = os.path.join(out_dir, "sweep")
    os.makedirs(sweep_dir, exist_ok=True)
    train, test = build_datasets(config, data_dir)
    spec = build_network_spec(config, train)

    if config.reference_accuracy is not None:
        reference = config.reference_accuracy
    else:
        if not quiet:
            print("training full-dataset reference model...")
        reference = compute_reference_accuracy(config, train, test, spec)
    reference = round(reference, 6)

    rows = []
    for size in config.sweep_sizes:
        lo, hi = np.inf, -np.inf
        for rep in range(config.repetitions):
            evo = replace(config.evolution, predictor_size=size,
                          rng_seed=config.evolution.rng_seed + rep)
            evaluator = DnnEvaluator(spec, config.training, train, test)
            if not quiet:
                print(f"--- size {size} rep {rep} ---")
            history = run_evolution(
                evo, evaluator, workers=workers,
                on_iteration=None if quiet else _print_record)
            rep_dir = os.path.join(sweep_dir, f"size_{size}")
            if config.repetitions > 1:
                rep_dir = os.path.join(rep_dir, f"rep_{rep}")
            os.makedirs(rep_dir, exist_ok=True)
            save_history_csv(history, os.path.join(rep_dir, "history.csv"))
            if history.records:
                save_predictor(os.path.join(rep_dir, "best_predictor.txt"),
                               history.final_best, evo.rng_seed)
                rep_lo, rep_hi = _rounded_stats(history)
                lo, hi = min(lo, rep_lo), max(hi, rep_hi)
        rows.append(SweepRow(size, lo, hi, reference))

    with open(os.path.join(sweep_dir, "summary.csv"), "w", newline="\n") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for row in rows:
            fh.write(f"{row.size},{row.min_fitness * 100:.4f},"
                     f"{row.max_fitness * 100:.4f},"
                     f"{row.max_minus_min * 100:.4f},"
                     f"{row.reference_minus_max * 100:.4f}\n")
    return rows


@dataclass(frozen=True)
class TimingRecord:
    """Raw per-repetition epoch times for one predictor size."""
    size: int
    epoch_ms: tuple[float, ...]

    @property
    def mean_ms(self):
        return float(np.mean(self.epoch_ms))

    @property
    def std_ms(self):
        if len(self.epoch_ms) < 2:
            return 0.0
        return float(np.std(self.epoch_ms, ddof=1))


def linear_fit(sizes, means):
    """OLS fit mean_ms = slope * size + intercept; returns (slope,
    intercept, r_squared)."""
    x = np.asarray(sizes, dtype=np.float64)
    y = np.asarray(means, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


def run_timing_bench(config: ExperimentConfig, out_dir, sizes=None,
                     seed=None, repetitions=None, quiet=False,
                     clock=time.perf_counter, data_dir=None):
    """Time single training epochs per subset size, sequentially, with the
    test-set evaluation excluded from (and absent inside) the timed region.
    Emits timing.csv, timing_raw.csv, and an OLS fit in timing_fit.csv."""
    os.makedirs(out_dir, exist_ok=True)
    sizes = tuple(sizes if sizes is not None else config.sweep_sizes)
    if any(earlier >= later for earlier, later in zip(sizes, sizes[1:])):
        raise ValueError("bench sizes must be strictly increasing")
    repetitions = repetitions or config.bench_repetitions
    seed = config.evolution.rng_seed if seed is None else seed

    train, _ = build_datasets(config, data_dir)
    spec = build_network_spec(config, train)
    if sizes[-1] > len(train):
        raise ValueError(f"bench size {sizes[-1]} exceeds training set "
                         f"({len(train)} samples)")

    rng = np.random.default_rng(seed)
    records = []
    for size in sizes:
        view = subset(train, rng.choice(len(train), size=size, replace=False))
        model = TrainedModel(spec, init_weights(spec, rng))
        state = SgdState()
        times = []
        for _ in range(repetitions):
            started = clock()
            train_epoch(model, view, config.training, state, rng)
            times.append((clock() - started) * 1000.0)
        record = TimingRecord(size, tuple(times))
        records.append(record)
        if not quiet:
            print(f"size {size:6d}  mean {record.mean_ms:10.2f} ms  "
                  f"std {record.std_ms:8.2f} ms  ({repetitions} reps)")

    with open(os.path.join(out_dir, "timing.csv"), "w", newline="\n") as fh:
        fh.write(TIMING_HEADER + "\n")
        for r in records:
            fh.write(f"{r.size},{r.mean_ms:.3f},{r.std_ms:.3f},"
                     f"{len(r.epoch_ms)}\n")
    with open(os.path.join(out_dir, "timing_raw.csv"), "w", newline="\n") as fh:
        fh.write(TIMING_RAW_HEADER + "\n")
        for r in records:
            for rep, ms in enumerate(r.epoch_ms):
                fh.write(f"{r.size},{rep},{ms:.3f}\n")

    fit = None
    if len(records) >= 2:
        fit = linear_fit([r.size for r in records],
                         [r.mean_ms for r in records])
        with open(os.path.join(out_dir, "timing_fit.csv"), "w",
                  newline="\n") as fh:
            fh.write(TIMING_FIT_HEADER + "\n")
            fh.write(f"{fit[0]:.6f},{fit[1]:.3f},{fit[2]:.6f}\n")
        if not quiet:
            print(f"fit: {fit[0]:.4f} ms/sample + {fit[1]:.2f} ms, "
                  f"R^2 = {fit[2]:.4f}")
    return records, fit


def compare_selection_strategies(config: ExperimentConfig, out_dir,
                                 quiet=False, workers: int = 1,
                                 data_dir=None):
    """Elitist vs deterministic crowding from the same seed and evaluator;
    writes paired history CSVs and one overlay SVG."""
    os.makedirs(out_dir, exist_ok=True)
    train, test = build_datasets(config, data_dir)
    evaluator = build_evaluator(config, train, test)
    histories = {}
    paths = []
    for strategy in ("elitist", "deterministic_crowding"):
        evo = replace(config.evolution, selection=strategy)
        if not quiet:
            print(f"--- selection {strategy} ---")
        history = run_evolution(evo, evaluator, workers=workers,
                                on_iteration=None if quiet else _print_record)
        name = "dc" if strategy == "deterministic_crowding" else strategy
        path = os.path.join(out_dir, f"history_{name}.csv")
        save_history_csv(history, path)
        paths.append(path)
        histories[strategy] = history
    emit_plot(paths, "fitness_curve",
              os.path.join(out_dir, "selection_comparison.svg"))
    return histories
