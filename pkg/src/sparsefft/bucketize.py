"""Folding a signal through a filter into B buckets.

Bucketization is the encoding stage: it reads a small, filter-dependent
subset of time samples and produces B complex bucket values whose
frequency-domain composition is known exactly:

* spike train, B buckets, shift tau:  reads B samples on the stride-L grid;
  bucket i equals sum_j xhat_{j*B+i} * w^(tau*(j*B+i)) with unit weights.
* flat, support Omega, permutation p, extra shift t:  reads the Omega
  permuted positions under the taps; bucket i equals
  sum_m weight(i, m) * xhat_p[m], weight(i, m) = freq_response[(i*L-m) mod N],
  where xhat_p is the spectrum of the permuted signal with tau replaced by
  p.tau + t.
* Dirichlet bank:  reads L consecutive samples per requested offset and
  forms each bucket's convolution sample against its modulated box.

Hash maps from original frequency to (bucket, in-bucket offset) are exposed
through :func:`hash_view`, including the permutation bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FilterKindMismatch, NonDivisorParameter
from .filters import DIRICHLET, FLAT, SPIKE, WindowFilter
from .signal import PermutationParams, TimeSignal, phase_factor

__all__ = ["BucketSet", "HashMapView", "bucketize_flat", "bucketize_spike",
           "bucketize_dirichlet", "hash_view", "hash_view_for"]


@dataclass
class BucketSet:
    """B complex bucket values plus the metadata that produced them."""

    values: np.ndarray
    filter_kind: str
    perm: PermutationParams
    tau_extra: int
    n: int
    num_buckets: int
    bucket_width: int
    half_offset: bool = True
    center_shift: int = 0
    sample_offsets: tuple = ()

    def hash_map(self) -> "HashMapView":
        return hash_view(self.filter_kind, self.n, self.num_buckets, self.perm,
                         half_offset=self.half_offset, center_shift=self.center_shift)

    def to_dict(self) -> dict:
        return {
            "filter_kind": self.filter_kind, "n": self.n,
            "num_buckets": self.num_buckets, "bucket_width": self.bucket_width,
            "perm": {"sigma": self.perm.sigma, "tau": self.perm.tau,
                     "b_prime": self.perm.b_prime},
            "tau_extra": self.tau_extra, "half_offset": self.half_offset,
            "center_shift": self.center_shift,
            "sample_offsets": list(self.sample_offsets),
            "values": [[v.real, v.imag] for v in self.values],
        }


@dataclass(frozen=True)
class HashMapView:
    """Forward maps original frequency -> (bucket, within-bucket offset)."""

    filter_kind: str
    n: int
    num_buckets: int
    perm: PermutationParams
    half_offset: bool = True
    center_shift: int = 0

    @property
    def bucket_width(self) -> int:
        return self.n // self.num_buckets

    def _permuted(self, position) -> np.ndarray:
        return self.perm.permuted_position(position)

    def bucket_of(self, position):
        m = self._permuted(position)
        b, L = self.num_buckets, self.bucket_width
        if self.filter_kind == SPIKE:
            out = m % b
        elif self.filter_kind == FLAT or self.half_offset:
            out = (((m - self.center_shift + L // 2) % self.n) // L) % b
        else:
            out = (((m - self.center_shift) % self.n) // L) % b
        return out if out.ndim else int(out)

    def offset_of(self, position):
        """Offset from the passband center (alias row index for spike)."""
        m = self._permuted(position)
        L = self.bucket_width
        if self.filter_kind == SPIKE:
            out = m // self.num_buckets
        elif self.filter_kind == FLAT or self.half_offset:
            out = ((m - self.center_shift + L // 2) % L) - L // 2
        else:
            out = ((m - self.center_shift) % L) - L // 2
        return out if out.ndim else int(out)

    def preimage(self, bucket: int) -> np.ndarray:
        """Original frequencies hashing into ``bucket``, ascending."""
        b, L = self.num_buckets, self.bucket_width
        if self.filter_kind == SPIKE:
            m = bucket + b * np.arange(L, dtype=np.int64)
        else:
            start = bucket * L + self.center_shift
            if self.filter_kind == FLAT or self.half_offset:
                start -= L // 2
            m = (start + np.arange(L, dtype=np.int64)) % self.n
        return np.sort(self.perm.original_position(m))


def hash_view(filterkind: str, n: int, num_buckets: int, perm: PermutationParams,
              half_offset: bool = True, center_shift: int = 0) -> HashMapView:
    if n % num_buckets != 0:
        raise NonDivisorParameter(f"num_buckets={num_buckets} does not divide n={n}")
    return HashMapView(filterkind, n, num_buckets, perm, half_offset, center_shift)


def hash_view_for(filt: WindowFilter, perm: PermutationParams) -> HashMapView:
    """Hash map matching a constructed filter, including any center shift."""
    shift = -filt.center_offset if filt.kind == FLAT else filt.center_offset
    return hash_view(filt.kind, filt.n, filt.num_buckets, perm,
                     half_offset=filt.half_bucket_offset, center_shift=shift % filt.n)


def _fold(z: np.ndarray, b: int) -> np.ndarray:
    pad = (-z.size) % b
    if pad:
        z = np.concatenate([z, np.zeros(pad, dtype=z.dtype)])
    return z.reshape(-1, b).sum(axis=0)


def bucketize_flat(x: TimeSignal, filt: WindowFilter, perm: PermutationParams,
                   tau_extra: int = 0) -> BucketSet:
    """Window the permuted signal, fold mod B, take a B-point transform.

    Reads exactly the Omega permuted sample positions under the support.
    The extra shift is folded into the permutation's tau so that location
    methods can request measurement pairs {tau, tau+1} against the same
    frequency hash.
    """
    if filt.kind != FLAT:
        raise FilterKindMismatch(f"expected flat filter, got {filt.kind}")
    n, b = x.n, filt.num_buckets
    tau_tot = (perm.tau + tau_extra) % n
    pos = np.arange(filt.support, dtype=np.int64)
    idx = (perm.sigma * (pos - tau_tot)) % n
    z = filt.taps * x.take(idx) * phase_factor(n, perm.b_prime * perm.sigma * pos)
    values = np.fft.fft(_fold(z, b)) / b
    return BucketSet(values=values, filter_kind=FLAT, perm=perm, tau_extra=tau_extra,
                     n=n, num_buckets=b, bucket_width=filt.bucket_width,
                     center_shift=(-filt.center_offset) % n)


def bucketize_spike(x: TimeSignal, num_buckets: int, tau: int = 0) -> BucketSet:
    """Subsample on the stride-L grid behind a time shift; B-point transform.

    Reads exactly B samples.  Bucket i equals the alias sum
    sum_j xhat_{j*B+i} * w^(tau*(j*B+i)) with no leakage term.
    """
    n = x.n
    if num_buckets <= 0 or n % num_buckets != 0:
        raise NonDivisorParameter(f"num_buckets={num_buckets} does not divide n={n}")
    L = n // num_buckets
    idx = (L * np.arange(num_buckets, dtype=np.int64) - tau) % n
    values = np.fft.fft(x.take(idx)) / num_buckets
    return BucketSet(values=values, filter_kind=SPIKE,
                     perm=PermutationParams.identity(n), tau_extra=tau,
                     n=n, num_buckets=num_buckets, bucket_width=L)


def bucketize_dirichlet(x: TimeSignal, bank: WindowFilter,
                        sample_offsets=(0,)) -> BucketSet:
    """Convolution samples of the signal against each modulated box.

    For every requested offset t the L consecutive samples x[t-n] under the
    prototype support are read once; all B bucket values fall out of one
    fold and a B-point inverse transform.  Values are de-rotated by each
    bucket center's carrier at t and averaged over offsets, so a tone at a
    passband center accumulates coherently.
    """
    if bank.kind != DIRICHLET:
        raise FilterKindMismatch(f"expected dirichlet_bank filter, got {bank.kind}")
    n, b, L = x.n, bank.num_buckets, bank.bucket_width
    offsets = tuple(int(t) for t in sample_offsets)
    if not offsets:
        raise NonDivisorParameter("at least one sample offset is required")
    centers = bank.bucket_centers()
    pos = np.arange(L, dtype=np.int64)
    half_mod = (phase_factor(n, -(L // 2) * pos) if not bank.half_bucket_offset
                else np.ones(L, dtype=np.complex128))
    total = np.zeros(b, dtype=np.complex128)
    for t in offsets:
        win = bank.taps * x.take((t - pos) % n) * half_mod
        v = b * np.fft.ifft(_fold(win, b))
        total += v * phase_factor(n, centers * t)
    return BucketSet(values=total / len(offsets), filter_kind=DIRICHLET,
                     perm=PermutationParams.identity(n), tau_extra=0,
                     n=n, num_buckets=b, bucket_width=L,
                     half_offset=bank.half_bucket_offset,
                     center_shift=bank.center_offset % n,
                     sample_offsets=offsets)
