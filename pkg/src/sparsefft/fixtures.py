"""Worked example instances used across the test suite and the CLI.

The running four-tone example: N = 2048 with coefficients 0.55, 0.7, 0.85,
1.0 at positions 64, 304, 610, 1660.  Its bucket assignments under the
three filter families, the sigma=3 rescaling of its support, and the N=20
two-stage peeling toy are all reproduced by :func:`fixture_report`.
"""

from __future__ import annotations

import numpy as np

from .bucketize import hash_view
from .signal import PermutationParams, SparseSpectrum, TimeSignal, idft_dense

__all__ = ["FOUR_TONE_N", "FOUR_TONE_SUPPORT", "FOUR_TONE_MAGNITUDES",
           "COLLIDING_SUPPORT", "four_tone_signal", "PEELING_TOY_N",
           "PEELING_TOY_SUPPORT", "PEELING_TOY_FACTORS", "peeling_toy_signal",
           "fixture_report"]

FOUR_TONE_N = 2048
FOUR_TONE_SUPPORT = (64, 304, 610, 1660)
FOUR_TONE_MAGNITUDES = (0.55, 0.7, 0.85, 1.0)

# variant with adjacent tones 64/98 that collide under flat hashing and share
# a residue mod 128 (98 and 610); rescaling by 3 separates the adjacent pair
COLLIDING_SUPPORT = (64, 98, 610, 1660)

PEELING_TOY_N = 20
PEELING_TOY_SUPPORT = (1, 3, 5, 10, 13)
PEELING_TOY_FACTORS = (4, 5)


def _tone_signal(n: int, entries: dict[int, complex]) -> tuple[TimeSignal, SparseSpectrum]:
    spectrum = SparseSpectrum(n, entries)
    return TimeSignal(idft_dense(spectrum.to_dense())), spectrum


def four_tone_signal(phases=None) -> tuple[TimeSignal, SparseSpectrum]:
    """The running N=2048, K=4 example (real positive coefficients by default)."""
    if phases is None:
        phases = np.zeros(len(FOUR_TONE_SUPPORT))
    entries = {f: m * np.exp(1j * p)
               for f, m, p in zip(FOUR_TONE_SUPPORT, FOUR_TONE_MAGNITUDES, phases)}
    return _tone_signal(FOUR_TONE_N, entries)


def peeling_toy_signal(coefficients=None) -> tuple[TimeSignal, SparseSpectrum]:
    """N=20 signal with five tones; stages B=4 and B=5 decode it by peeling."""
    if coefficients is None:
        # distinct magnitudes keep peeling traces readable in dumps
        coefficients = [1.0, 0.8, 1.2, 0.9, 1.1]
    entries = {f: complex(c) for f, c in zip(PEELING_TOY_SUPPORT, coefficients)}
    return _tone_signal(PEELING_TOY_N, entries)


def fixture_report() -> dict:
    """The worked bucket assignments and mappings, as plain data."""
    n = FOUR_TONE_N
    ident = PermutationParams.identity(n)
    flat = hash_view("flat", n, 16, ident)
    spike = hash_view("spike_train", n, 128, ident)
    dir_half = hash_view("dirichlet_bank", n, 16, ident, half_offset=True)
    dir_trunc = hash_view("dirichlet_bank", n, 16, ident, half_offset=False)
    scaled = [(3 * f) % n for f in COLLIDING_SUPPORT]
    return {
        "four_tone": {
            "n": n,
            "support": list(FOUR_TONE_SUPPORT),
            "magnitudes": list(FOUR_TONE_MAGNITUDES),
            "flat_buckets_B16": [flat.bucket_of(f) for f in FOUR_TONE_SUPPORT],
            "spike_buckets_B128": [spike.bucket_of(f) for f in FOUR_TONE_SUPPORT],
            "dirichlet_half_offset_buckets_B16":
                [dir_half.bucket_of(f) for f in FOUR_TONE_SUPPORT],
            "dirichlet_truncation_buckets_B16":
                [dir_trunc.bucket_of(f) for f in FOUR_TONE_SUPPORT],
            "colliding_support": list(COLLIDING_SUPPORT),
            "colliding_support_scaled_by_3": scaled,
        },
        "peeling_toy": {
            "n": PEELING_TOY_N,
            "support": list(PEELING_TOY_SUPPORT),
            "factors": list(PEELING_TOY_FACTORS),
            "stage_buckets": {
                f"B={PEELING_TOY_N // p}": [f % (PEELING_TOY_N // p)
                                            for f in PEELING_TOY_SUPPORT]
                for p in PEELING_TOY_FACTORS
            },
        },
    }
