"""Signal containers and the five index-arithmetic transforms.

The discrete Fourier transform convention used throughout the toolkit is

    xhat_i = (1/N) * sum_j x_j * w^(i*j),   w = exp(-2*pi*1j/N),

so the inverse transform is x_j = sum_i xhat_i * conj(w)^(i*j) with no
prefactor.  All transforms on signals are implemented as index maps, never
as dense matrix products, and every sample access goes through an
instrumented reader so that sampling cost can be audited afterwards.

Two consequences of the 1/N convention worth keeping in mind:

* subsampling in time aliases the spectrum with unit weights:
  dft(subsample(x, L))_i == sum_m dft(x)_{i + m*B},  B = N/L  (exact);
* aliasing in time subsamples the spectrum with a factor L:
  dft(alias(x, L))_i == L * dft(x)_{i*L}  (exact).

The factor L in the second identity is forced by the normalization; in the
unnormalized convention it disappears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, LengthMismatch, NonDivisorParameter, NonInvertibleScaling

__all__ = [
    "TimeSignal",
    "SparseSpectrum",
    "PermutationParams",
    "phase_factor",
    "dft_dense",
    "idft_dense",
    "brute_force_dft",
    "time_shift",
    "time_scale",
    "freq_shift",
    "permute",
    "subsample",
    "alias",
    "convolve",
]


def phase_factor(n: int, exponents) -> np.ndarray:
    """w_n^e for integer exponents e, w_n = exp(-2*pi*1j/n).

    Exponents are reduced mod n first; products such as sigma*tau*i stay
    below 2**54 at desk scale so int64 arithmetic is exact.
    """
    e = np.mod(np.asarray(exponents, dtype=np.int64), n)
    return np.exp(-2j * np.pi * e / n)


class TimeSignal:
    """Length-N complex sample buffer with counted index access.

    Every read goes through :meth:`take`, which records the distinct time
    indices touched so far.  The counter only grows; ``fresh_copy`` returns
    a view of the same samples with a reset counter.
    """

    __slots__ = ("samples", "_accessed")

    def __init__(self, samples, accessed: np.ndarray | None = None):
        self.samples = np.ascontiguousarray(samples, dtype=np.complex128)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise InvalidParameter("samples must be a nonempty 1-d sequence")
        if accessed is None:
            accessed = np.zeros(self.samples.size, dtype=bool)
        self._accessed = accessed

    @property
    def n(self) -> int:
        return self.samples.size

    def take(self, indices) -> np.ndarray:
        """Read samples at ``indices`` (reduced mod N), recording the access."""
        idx = np.mod(np.asarray(indices, dtype=np.int64), self.n)
        self._accessed[idx] = True
        return self.samples[idx]

    def read_all(self) -> np.ndarray:
        self._accessed[:] = True
        return self.samples

    @property
    def access_count(self) -> int:
        return int(self._accessed.sum())

    @property
    def access_counter(self) -> frozenset:
        """The set of distinct time indices read so far."""
        return frozenset(np.flatnonzero(self._accessed).tolist())

    def accessed_indices(self) -> np.ndarray:
        return np.flatnonzero(self._accessed)

    def fresh_copy(self) -> "TimeSignal":
        """Same sample buffer, new (empty) access counter."""
        return TimeSignal(self.samples, np.zeros(self.n, dtype=bool))

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"TimeSignal(n={self.n}, accessed={self.access_count})"


@dataclass
class SparseSpectrum:
    """Finite map from frequency position to complex coefficient."""

    n: int
    entries: dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[int, complex] = {}
        for pos, coeff in self.entries.items():
            p = int(pos)
            if not 0 <= p < self.n:
                raise InvalidParameter(f"position {p} outside [0, {self.n})")
            if p in clean:
                raise InvalidParameter(f"duplicate position {p}")
            clean[p] = complex(coeff)
        self.entries = clean

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.n, dtype=np.complex128)
        for pos, coeff in self.entries.items():
            dense[pos] = coeff
        return dense

    def support(self) -> set[int]:
        return set(self.entries)

    def top_k(self, k: int) -> "SparseSpectrum":
        """Keep the k largest-magnitude entries; ties go to the smaller index."""
        ranked = sorted(self.entries.items(), key=lambda it: (-abs(it[1]), it[0]))
        return SparseSpectrum(self.n, dict(ranked[: max(k, 0)]))

    @classmethod
    def from_dense(cls, dense, k: int | None = None) -> "SparseSpectrum":
        dense = np.asarray(dense)
        n = dense.size
        if k is None:
            pos = np.flatnonzero(dense)
        else:
            order = np.lexsort((np.arange(n), -np.abs(dense)))
            pos = np.sort(order[: max(k, 0)])
        return cls(n, {int(p): complex(dense[p]) for p in pos})


@dataclass(frozen=True)
class PermutationParams:
    """Parameters (sigma, tau, b') of the random spectrum permutation.

    The permuted signal is x'_i = x_{sigma*(i-tau) mod N} * w^(b'*sigma*i),
    which sends the spectrum coefficient at position i to position
    sigma*(i - b') mod N with an extra phase w^(sigma*tau*i).
    """

    n: int
    sigma: int = 1
    tau: int = 0
    b_prime: int = 0

    def __post_init__(self):
        if math.gcd(self.sigma % self.n, self.n) != 1:
            raise NonInvertibleScaling(f"gcd(sigma={self.sigma}, n={self.n}) != 1")
        object.__setattr__(self, "sigma", self.sigma % self.n)
        object.__setattr__(self, "tau", self.tau % self.n)
        object.__setattr__(self, "b_prime", self.b_prime % self.n)

    @property
    def b(self) -> int:
        """Derived frequency offset b = b' * sigma mod N."""
        return (self.b_prime * self.sigma) % self.n

    @property
    def sigma_inv(self) -> int:
        return pow(self.sigma, -1, self.n)

    def permuted_position(self, freq) -> np.ndarray:
        """Spectrum position(s) that original frequency ``freq`` lands on."""
        f = np.asarray(freq, dtype=np.int64)
        return (self.sigma * (f - self.b_prime)) % self.n

    def original_position(self, permuted) -> np.ndarray:
        m = np.asarray(permuted, dtype=np.int64)
        return (self.sigma_inv * m + self.b_prime) % self.n

    @classmethod
    def identity(cls, n: int) -> "PermutationParams":
        return cls(n=n)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, use_b: bool = False) -> "PermutationParams":
        while True:
            sigma = int(rng.integers(1, n))
            if math.gcd(sigma, n) == 1:
                break
        tau = int(rng.integers(0, n))
        b_prime = int(rng.integers(0, n)) if use_b else 0
        return cls(n=n, sigma=sigma, tau=tau, b_prime=b_prime)


# ---------------------------------------------------------------------------
# dense transforms

def dft_dense(x: TimeSignal) -> np.ndarray:
    """Full spectrum of ``x`` under the 1/N convention.

    Reads every sample.  Ground-truth oracle for the bucketized paths; the
    FFT evaluation matches the quadratic sum to machine precision.
    """
    return np.fft.fft(x.read_all()) / x.n


def idft_dense(spectrum) -> np.ndarray:
    """Inverse of :func:`dft_dense` on a plain array (no instrumentation)."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    return np.fft.ifft(spectrum) * spectrum.size


def brute_force_dft(samples) -> np.ndarray:
    """O(N^2) evaluation of the transform sum; independent test oracle."""
    samples = np.asarray(samples, dtype=np.complex128)
    n = samples.size
    ij = np.outer(np.arange(n), np.arange(n)) % n
    return (np.exp(-2j * np.pi * ij / n) @ samples) / n


# ---------------------------------------------------------------------------
# the five signal operations

def time_shift(x: TimeSignal, tau: int) -> TimeSignal:
    """x'_i = x_{(i - tau) mod N}."""
    idx = (np.arange(x.n, dtype=np.int64) - tau) % x.n
    return TimeSignal(x.take(idx))


def time_scale(x: TimeSignal, sigma: int) -> TimeSignal:
    """x'_i = x_{sigma*i mod N}; sigma must be invertible mod N."""
    if math.gcd(sigma % x.n, x.n) != 1:
        raise NonInvertibleScaling(f"gcd(sigma={sigma}, n={x.n}) != 1")
    idx = (sigma * np.arange(x.n, dtype=np.int64)) % x.n
    return TimeSignal(x.take(idx))


def freq_shift(x: TimeSignal, b: int) -> TimeSignal:
    """x'_i = x_i * w^(b*i); moves spectrum content from f to f - b.

    Modulating by w^(f*i) brings position f down to DC, which is what the
    shift-to-DC estimation relies on.
    """
    i = np.arange(x.n, dtype=np.int64)
    return TimeSignal(x.take(i) * phase_factor(x.n, b * i))


def permute(x: TimeSignal, p: PermutationParams) -> TimeSignal:
    """x'_i = x_{sigma*(i - tau) mod N} * w^(b'*sigma*i)."""
    if p.n != x.n:
        raise LengthMismatch(f"params for n={p.n}, signal has n={x.n}")
    i = np.arange(x.n, dtype=np.int64)
    idx = (p.sigma * (i - p.tau)) % x.n
    return TimeSignal(x.take(idx) * phase_factor(x.n, p.b_prime * p.sigma * i))


def subsample(x: TimeSignal, L: int) -> TimeSignal:
    """x'_i = x_{L*i} for i in [0, N/L); aliases the spectrum mod N/L."""
    if L <= 0 or x.n % L != 0:
        raise NonDivisorParameter(f"L={L} does not divide n={x.n}")
    b = x.n // L
    return TimeSignal(x.take(L * np.arange(b, dtype=np.int64)))


def alias(x: TimeSignal, L: int) -> TimeSignal:
    """x'_i = x_i + x_{i+B} + ... + x_{i+(L-1)B}, B = N/L.

    Subsamples the spectrum: dft(x')_i = L * dft(x)_{i*L}.
    """
    if L <= 0 or x.n % L != 0:
        raise NonDivisorParameter(f"L={L} does not divide n={x.n}")
    b = x.n // L
    values = x.take(np.arange(x.n, dtype=np.int64))
    return TimeSignal(values.reshape(L, b).sum(axis=0))


def convolve(x, y) -> np.ndarray:
    """Circular convolution (x*y)_i = sum_j x_j y_{(i-j) mod N}."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} and {y.shape} differ")
    # product of unnormalized transforms, one inverse pass
    return np.fft.ifft(np.fft.fft(x) * np.fft.fft(y))
