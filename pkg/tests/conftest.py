import os

# Pin BLAS threading before numpy loads so bitwise-determinism checks are
# not at the mercy of the host's thread configuration.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from subsevo._kernels import available_backends  # noqa: E402


@pytest.fixture(params=sorted(available_backends()))
def kernel_backend(request, monkeypatch):
    """Run a test once per importable kernel backend."""
    backend = available_backends()[request.param]
    import subsevo._kernels as kernels
    for name in ("conv2d_forward", "conv2d_backward",
                 "maxpool_forward", "maxpool_backward"):
        monkeypatch.setattr(kernels, name, getattr(backend, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    """One pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "setup" and report.skipped:
        outcome = "SKIP"
    elif report.when == "call":
        outcome = "PASS" if report.passed else \
            ("FAIL" if report.failed else "SKIP")
    else:
        return
    name = report.nodeid.split("::")[-1]
    print(f"\n[acceptance] {name}: {outcome}", flush=True)
