"""Network-training fitness evaluator."""

import numpy as np

from subsevo.data import make_synthetic
from subsevo.evolution import (DnnEvaluator, EvolutionConfig, SubsetPredictor,
                               evaluation_seed)
from subsevo.nn import TrainConfig, mlp_spec


def setup_datasets(noise=0.0, per_class=12, test_per_class=10, classes=4):
    train = make_synthetic(classes, per_class, 6, noise=noise, seed=5)
    test = make_synthetic(classes, test_per_class, 6, noise=noise, seed=6)
    return train, test


def linear_evaluator(train, test, epochs=20):
    spec = mlp_spec(train.sample_shape, hidden=(), num_classes=train.num_classes)
    config = TrainConfig(learning_rate=0.5, batch_size=8, epochs=epochs,
                         rng_seed=0)
    return DnnEvaluator(spec, config, train, test)


def test_single_class_predictor_collapses_to_majority_prediction():
    train, test = setup_datasets()
    evaluator = linear_evaluator(train, test)
    only_class = int(train.labels[0])
    indices = np.flatnonzero(train.labels == only_class)[:8]
    fitness = evaluator.evaluate(SubsetPredictor(indices), seed=3)
    # constant-prediction oracle: the class's frequency in the test set
    frequency = float((test.labels == only_class).mean())
    assert fitness == frequency


def test_identical_genotypes_same_fitness():
    train, test = setup_datasets(noise=0.2)
    evaluator = linear_evaluator(train, test, epochs=3)
    rng = np.random.default_rng(0)
    indices = rng.choice(len(train), size=10, replace=False)
    a = SubsetPredictor(indices)
    b = SubsetPredictor(indices[::-1].copy())  # same set, different order
    config = EvolutionConfig(population_size=2, predictor_size=10)
    seed_a = evaluation_seed(config, a, generation=0)
    seed_b = evaluation_seed(config, b, generation=0)
    assert seed_a == seed_b  # content hash ignores order
    assert evaluator.evaluate(a, seed_a) == evaluator.evaluate(b, seed_b)


def test_full_template_coverage_reaches_perfect_fitness():
    train, test = setup_datasets(noise=0.0)
    evaluator = linear_evaluator(train, test)
    one_of_each = np.array([np.flatnonzero(train.labels == cls)[0]
                            for cls in range(train.num_classes)])
    fitness = evaluator.evaluate(SubsetPredictor(one_of_each), seed=1)
    assert fitness == 1.0


def test_cost_model_is_deterministic_work_accounting():
    train, test = setup_datasets()
    evaluator = linear_evaluator(train, test, epochs=20)
    predictor = SubsetPredictor(np.arange(10))
    assert evaluator.cost_ms(predictor) == 20 * 10 * 1.0
    cheap = DnnEvaluator(evaluator.spec, evaluator.train_config, train, test,
                         per_sample_ms=0.25)
    assert cheap.cost_ms(predictor) == 20 * 10 * 0.25


def test_training_set_size_comes_from_base_dataset():
    train, test = setup_datasets()
    evaluator = linear_evaluator(train, test)
    assert evaluator.training_set_size == len(train)
