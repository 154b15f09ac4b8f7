import numpy as np
import pytest

from sparsefft.signal import SparseSpectrum, TimeSignal, idft_dense


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_signal(n, rng) -> TimeSignal:
    return TimeSignal(rng.normal(size=n) + 1j * rng.normal(size=n))


def tone_signal(n, entries) -> tuple[TimeSignal, SparseSpectrum]:
    """Exact synthesis of a handful of tones."""
    spectrum = SparseSpectrum(n, {int(f): complex(c) for f, c in entries.items()})
    return TimeSignal(idft_dense(spectrum.to_dense())), spectrum


def rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    denom = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / denom
