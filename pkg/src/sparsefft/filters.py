"""The three bucketization filter families.

flat
    Gaussian-windowed sinc taps over an even support of length Omega.  The
    frequency response is a near-rectangular passband of width L = N/B with
    negligible out-of-band leakage; a signal folded through it and
    transformed with a B-point DFT yields buckets whose value weights each
    frequency by ``freq_response[(bucket*L - position) mod N]``.

spike_train
    L impulses of height sqrt(N)/L spaced B apart in time.  Its transform
    is again a spike train (B impulses spaced L apart in frequency).  The
    associated bucketization subsamples the signal and aliases the spectrum
    with unit weights and zero leakage.

dirichlet_bank
    A prototype box of width L whose per-bucket filters are modulated
    copies centered on each bucket.  Only the prototype taps are stored;
    bucketization applies the per-bucket modulation analytically.  The
    response tapers away from each passband center (large leakage at the
    edges), which is what makes the bank cheap to sample but weak to
    estimate with.

Filters are immutable after construction and freely shareable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameter, NonDivisorParameter
from .signal import phase_factor

__all__ = [
    "WindowFilter",
    "make_flat_filter",
    "make_spike_train",
    "make_dirichlet_bank",
    "filter_freq_shift",
    "default_flat_support",
    "default_gauss_sigma",
    "filter_to_json",
    "filter_from_json",
]

FLAT = "flat"
SPIKE = "spike_train"
DIRICHLET = "dirichlet_bank"


@dataclass(frozen=True)
class WindowFilter:
    """Time-domain taps plus a tabulated frequency response.

    ``taps`` holds values over the support only; ``tap_positions()`` gives
    the time indices they occupy.  ``freq_response`` is tabulated over
    [0, N) at construction.  Its scale is kind-specific but always matches
    what :meth:`bucket_weight` needs:

    * flat: B-normalized transform of the taps (the bucket-value weight);
    * spike_train: B-normalized transform (descriptive only, the bucket
      composition uses unit weights);
    * dirichlet_bank: unnormalized transform of the prototype box (the
      convolution-sample weight).
    """

    kind: str
    n: int
    num_buckets: int
    bucket_width: int
    support: int
    taps: np.ndarray
    freq_response: np.ndarray
    gauss_sigma: float = 0.0
    center_offset: int = 0
    half_bucket_offset: bool = True

    def tap_positions(self) -> np.ndarray:
        if self.kind == SPIKE:
            return self.num_buckets * np.arange(self.support, dtype=np.int64)
        return np.arange(self.support, dtype=np.int64)

    def padded_taps(self) -> np.ndarray:
        padded = np.zeros(self.n, dtype=np.complex128)
        padded[self.tap_positions()] = self.taps
        return padded

    def bucket_centers(self) -> np.ndarray:
        """Position-space passband centers, one per bucket."""
        base = 0 if self.half_bucket_offset else self.bucket_width // 2
        c = self.bucket_width * np.arange(self.num_buckets, dtype=np.int64) + base
        if self.kind == DIRICHLET:
            c = c + self.center_offset
        elif self.kind == FLAT:
            c = c - self.center_offset
        return c % self.n

    def bucket_weight(self, bucket: int, position) -> np.ndarray:
        """Complex weight of spectrum ``position`` in ``bucket``'s value."""
        m = np.asarray(position, dtype=np.int64)
        if self.kind == FLAT:
            return self.freq_response[(bucket * self.bucket_width - m) % self.n]
        if self.kind == DIRICHLET:
            base = 0 if self.half_bucket_offset else self.bucket_width // 2
            center = bucket * self.bucket_width + base
            return self.freq_response[(m - center) % self.n]
        return np.ones_like(m, dtype=np.complex128) if m.ndim else np.complex128(1.0)


def default_gauss_sigma(n: int, num_buckets: int) -> float:
    return num_buckets * math.sqrt(math.log2(n))


def default_flat_support(n: int, num_buckets: int) -> int:
    """Smallest even support >= 4*B*sqrt(log2 N), capped at N."""
    omega = math.ceil(4.0 * default_gauss_sigma(n, num_buckets))
    omega += omega % 2
    return min(omega, n - (n % 2))


def make_flat_filter(n: int, num_buckets: int, support: int | None = None,
                     gauss_sigma: float | None = None) -> WindowFilter:
    """Gaussian-windowed sinc taps: g(u) = sin(pi*u/B)/(pi*u) * exp(-u^2/2s^2).

    ``u`` runs over [-Omega/2, Omega/2); the center tap (u = 0) is the sinc
    limit 1/B.  The first sinc zero sits B samples from the center, which
    puts the passband edges L/2 bins from each bucket center.
    """
    if num_buckets <= 0 or n % num_buckets != 0:
        raise InvalidParameter(f"num_buckets={num_buckets} does not divide n={n}")
    if support is None:
        support = default_flat_support(n, num_buckets)
    if gauss_sigma is None:
        gauss_sigma = default_gauss_sigma(n, num_buckets)
    if support % 2 != 0 or not 0 < support <= n:
        raise InvalidParameter(f"support={support} must be even and in (0, {n}]")
    b = num_buckets
    u = np.arange(support, dtype=float) - support / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(u == 0, 1.0 / b, np.sin(np.pi * u / b) / (np.pi * u))
    taps = (sinc * np.exp(-0.5 * (u / gauss_sigma) ** 2)).astype(np.complex128)
    padded = np.zeros(n, dtype=np.complex128)
    padded[:support] = taps
    response = np.fft.fft(padded) / b
    return WindowFilter(kind=FLAT, n=n, num_buckets=b, bucket_width=n // b,
                        support=support, taps=taps, freq_response=response,
                        gauss_sigma=float(gauss_sigma))


def make_spike_train(n: int, aliasing_factor: int) -> WindowFilter:
    """L = aliasing_factor impulses of height sqrt(N)/L spaced B = N/L apart."""
    L = aliasing_factor
    if L <= 0 or n % L != 0:
        raise NonDivisorParameter(f"aliasing factor {L} does not divide n={n}")
    b = n // L
    taps = np.full(L, math.sqrt(n) / L, dtype=np.complex128)
    padded = np.zeros(n, dtype=np.complex128)
    padded[::b] = taps
    response = np.fft.fft(padded) / b
    return WindowFilter(kind=SPIKE, n=n, num_buckets=b, bucket_width=L,
                        support=L, taps=taps, freq_response=response)


def make_dirichlet_bank(n: int, bucket_width: int, num_buckets: int,
                        half_offset: bool = True) -> WindowFilter:
    """Bank of B modulated boxes of width L, one per bucket.

    ``half_offset=True`` puts bucket boundaries at half-bucket offsets
    (rounding hash, centers at multiples of L); ``False`` uses truncation
    boundaries (centers at odd half-multiples of L).  The stored taps are
    the unmodulated sqrt(N)/L prototype; per-bucket modulation happens in
    the bucketizer.
    """
    L, b = bucket_width, num_buckets
    if L * b != n:
        raise NonDivisorParameter(f"bucket_width*num_buckets = {L}*{b} != n={n}")
    taps = np.full(L, math.sqrt(n) / L, dtype=np.complex128)
    padded = np.zeros(n, dtype=np.complex128)
    padded[:L] = taps
    response = np.fft.fft(padded)  # unnormalized: convolution-sample weight
    return WindowFilter(kind=DIRICHLET, n=n, num_buckets=b, bucket_width=L,
                        support=L, taps=taps, freq_response=response,
                        half_bucket_offset=half_offset)


def filter_freq_shift(f: WindowFilter, f0: int) -> WindowFilter:
    """Move the passband center(s) by f0 bins: taps *= w^(-f0 * position)."""
    pos = f.tap_positions()
    taps = f.taps * phase_factor(f.n, -f0 * pos)
    padded = np.zeros(f.n, dtype=np.complex128)
    padded[pos] = taps
    response = np.fft.fft(padded)
    if f.kind != DIRICHLET:
        response = response / f.num_buckets
    return replace(f, taps=taps, freq_response=response,
                   center_offset=(f.center_offset + f0) % f.n)


def filter_to_json(f: WindowFilter) -> str:
    """Compact reproducibility record; taps are regenerated, not stored."""
    return json.dumps({
        "kind": f.kind, "n": f.n, "num_buckets": f.num_buckets,
        "bucket_width": f.bucket_width, "support": f.support,
        "gauss_sigma": f.gauss_sigma, "center_offset": f.center_offset,
        "half_bucket_offset": f.half_bucket_offset,
    })


def filter_from_json(text: str) -> WindowFilter:
    d = json.loads(text)
    kind = d["kind"]
    if kind == FLAT:
        filt = make_flat_filter(d["n"], d["num_buckets"], d["support"], d["gauss_sigma"])
    elif kind == SPIKE:
        filt = make_spike_train(d["n"], d["bucket_width"])
    elif kind == DIRICHLET:
        filt = make_dirichlet_bank(d["n"], d["bucket_width"], d["num_buckets"],
                                   d["half_bucket_offset"])
    else:
        raise InvalidParameter(f"unknown filter kind {kind!r}")
    if d["center_offset"]:
        filt = filter_freq_shift(filt, d["center_offset"])
    return filt
