"""SEVM weight-container round trips and error handling."""

import numpy as np
import pytest

from subsevo.nn import (TrainedModel, dump_model, init_weights, lenet_spec,
                        load_model, parse_model, save_model)
from subsevo.nn.model_io import MAGIC, ModelFormatError
from subsevo.nn.spec import (FullyConnected, LogSoftMax, NetworkSpec)


def small_model(seed=0):
    spec = NetworkSpec(layers=(FullyConnected(4, 3, activation="relu"),
                               FullyConnected(3, 2), LogSoftMax()),
                       input_shape=(1, 2, 2))
    return TrainedModel(spec, init_weights(spec, np.random.default_rng(seed)))


def assert_models_equal(a, b):
    assert len(a.weights) == len(b.weights)
    for wa, wb in zip(a.weights, b.weights):
        assert set(wa) == set(wb)
        for key in wa:
            np.testing.assert_array_equal(wa[key], wb[key])


def test_round_trip_in_memory():
    model = small_model()
    again = parse_model(dump_model(model), model.spec)
    assert_models_equal(model, again)


def test_round_trip_via_file(tmp_path):
    model = small_model(3)
    path = tmp_path / "weights.sevm"
    save_model(model, path)
    assert_models_equal(model, load_model(path, model.spec))


def test_lenet_shapes_round_trip():
    spec = lenet_spec()
    model = TrainedModel(spec, init_weights(spec, np.random.default_rng(1)))
    again = parse_model(dump_model(model), spec)
    assert_models_equal(model, again)


def test_header_layout():
    blob = dump_model(small_model())
    assert blob[:4] == MAGIC
    assert int.from_bytes(blob[4:8], "little") == 1    # version
    assert int.from_bytes(blob[8:12], "little") == 3   # layer count


def test_bad_magic_rejected():
    blob = bytearray(dump_model(small_model()))
    blob[:4] = b"XXXX"
    with pytest.raises(ModelFormatError, match="magic"):
        parse_model(bytes(blob), small_model().spec)


def test_truncated_payload_rejected():
    blob = dump_model(small_model())
    with pytest.raises(ModelFormatError, match="truncated"):
        parse_model(blob[:len(blob) - 9], small_model().spec)


def test_trailing_bytes_rejected():
    blob = dump_model(small_model())
    with pytest.raises(ModelFormatError, match="trailing"):
        parse_model(blob + b"\x00", small_model().spec)


def test_wrong_spec_rejected():
    blob = dump_model(small_model())
    other = NetworkSpec(layers=(FullyConnected(4, 2), LogSoftMax()),
                        input_shape=(1, 2, 2))
    with pytest.raises(ValueError):
        parse_model(blob, other)
