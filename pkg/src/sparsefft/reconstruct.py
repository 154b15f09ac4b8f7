"""Decoding buckets: classification, location, and estimation.

Location methods recover the frequency position behind a bucket:

* phase encoding from a pair of time-shifted measurements,
* statistics (vote tallies across randomized bucketization rounds),
* binary / multi-scale search over sub-bucket measurements,
* the moment method (annihilating-polynomial roots of a Hankel system),
  which also handles buckets holding several tones.

Estimation methods recover the coefficient once the position is known:
restricted transform sum, bucket-energy division, frequency-shift random
sampling, and a least-squares solve over random-shift measurements.

Everything here is pure given its inputs plus an explicit seed; per-bucket
decoding is independent across buckets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bucketize import BucketSet, hash_view_for
from .errors import (AmbiguousSplit, InvalidParameter, NearZeroResponse, RankDeficient,
                     SingularMomentMatrix, ZeroTonBucket)
from .filters import DIRICHLET, FLAT, SPIKE, WindowFilter
from .signal import PermutationParams, SparseSpectrum, TimeSignal, phase_factor

__all__ = [
    "MomentSequence", "TonClass", "VoteTable",
    "locate_phase", "vote_tally", "select_by_votes",
    "locate_binary_search", "locate_multiscale",
    "count_collisions", "locate_prony",
    "estimate_formula", "estimate_energy", "estimate_freqshift", "estimate_prony",
    "classify_bucket", "robust_noise_floor",
]

ZERO_TON = "zero_ton"
SINGLE_TON = "single_ton"
MULTI_TON = "multi_ton"


@dataclass
class MomentSequence:
    """Bucket values of one bucket at time shifts k = 0, 1, 2, ...

    For a bucket holding tones (p_j, f_j) the k-th moment is
    m_k = sum_j p_j * z_j^k with z_j = w^(f_j); at least 2*a_max moments
    are needed to resolve up to a_max tones.
    """

    bucket_index: int
    moments: np.ndarray
    a_max: int
    n: int
    num_buckets: int

    def __post_init__(self):
        self.moments = np.asarray(self.moments, dtype=np.complex128)
        if self.moments.size < 2 * self.a_max:
            raise InvalidParameter(
                f"{self.moments.size} moments cannot resolve a_max={self.a_max}")

    @property
    def bucket_width(self) -> int:
        return self.n // self.num_buckets

    def candidates(self) -> np.ndarray:
        """Admissible positions {i, i+B, ..., i+(L-1)B} for this bucket."""
        return (self.bucket_index
                + self.num_buckets * np.arange(self.bucket_width, dtype=np.int64)) % self.n


@dataclass(frozen=True)
class TonClass:
    """Zero-, single-, or multi-ton verdict for one bucket."""

    kind: str
    position: int | None = None
    coefficient: complex | None = None
    count: int = 0

    @classmethod
    def zero(cls):
        return cls(ZERO_TON)

    @classmethod
    def single(cls, position: int, coefficient: complex):
        return cls(SINGLE_TON, position=int(position), coefficient=complex(coefficient), count=1)

    @classmethod
    def multi(cls, count: int):
        return cls(MULTI_TON, count=int(count))


@dataclass
class VoteTable:
    """Per-position vote counts accumulated over bucketization rounds."""

    n: int
    rounds: int = 0
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.n, dtype=np.int64)

    @property
    def score(self) -> np.ndarray:
        """Vote count indexed by position."""
        return self.counts

    def score_of(self, position: int) -> int:
        return int(self.counts[position % self.n])


def robust_noise_floor(values, median_mult: float = 3.0) -> float:
    """Detection floor from the bucket magnitudes themselves.

    The median magnitude is a robust noise-scale estimate when most buckets
    are empty.  Capping at a quarter of the peak keeps the floor usable
    when nearly every bucket is occupied (tiny bucket counts), and the
    relative lower bound keeps numerical junk below the floor in noiseless
    signals where the median underflows.
    """
    mags = np.abs(np.asarray(values))
    if mags.size == 0:
        return 0.0
    peak = float(mags.max())
    return float(max(min(median_mult * np.median(mags), 0.25 * peak),
                     1e-9 * peak, 1e-300))


def _nearest_candidate(raw: float, candidates: np.ndarray, n: int) -> int:
    """Nearest admissible position under circular distance, ties to smaller."""
    d = np.abs((candidates.astype(float) - raw + n / 2) % n - n / 2)
    order = np.lexsort((candidates, d))
    return int(candidates[order[0]])


def locate_phase(y0: complex, y1: complex, candidates, n: int,
                 zero_floor: float = 0.0) -> int:
    """Position from the phase rotation between two shifted measurements.

    A single tone at position f satisfies y1/y0 = w^f, so
    f = angle(y1/y0) * (-N / 2*pi) mod N; the raw value is snapped to the
    nearest admissible candidate.  Colliding tones produce a meaningless
    rotation; this method presumes a single-ton bucket.
    """
    if abs(y0) <= zero_floor:
        raise ZeroTonBucket(f"|y0|={abs(y0):.3g} at or below floor {zero_floor:.3g}")
    raw = (np.angle(y1 / y0) * (-n / (2 * np.pi))) % n
    return _nearest_candidate(raw, np.asarray(candidates, dtype=np.int64), n)


def vote_tally(rounds, heavy_count: int) -> VoteTable:
    """Tally hash preimages of heavy buckets over bucketization rounds.

    ``rounds`` is a sequence of (BucketSet, threshold) pairs; per round the
    ``heavy_count`` largest-magnitude buckets at or above that round's
    threshold are marked heavy, and every original position hashing into a
    heavy bucket (under that round's permutation) receives one vote.
    """
    rounds = list(rounds)
    if not rounds:
        return VoteTable(n=1, rounds=0)
    table = VoteTable(n=rounds[0][0].n, rounds=len(rounds))
    for bucket_set, threshold in rounds:
        mags = np.abs(bucket_set.values)
        eligible = np.flatnonzero(mags >= max(threshold, 0.0))
        if eligible.size == 0:
            continue
        order = eligible[np.lexsort((eligible, -mags[eligible]))]
        hm = bucket_set.hash_map()
        for b in order[:heavy_count]:
            np.add.at(table.counts, hm.preimage(int(b)), 1)
    return table


def select_by_votes(table: VoteTable, keep: int, min_fraction: float) -> list[int]:
    """Up to ``keep`` positions with score >= min_fraction * rounds.

    Highest scores first; ties broken toward the lower position index.
    """
    if table.rounds == 0 or keep <= 0:
        return []
    need = max(min_fraction * table.rounds, 1e-12)
    positions = np.flatnonzero(table.counts >= need)
    if positions.size == 0:
        return []
    order = positions[np.lexsort((positions, -table.counts[positions]))]
    return [int(p) for p in order[:keep]]


def _split_search(sub_bucketizer, bucket: int, width: int, branching: int,
                  noise_floor: float) -> int:
    digits = round(np.log(width) / np.log(branching))
    if branching < 2 or branching ** digits != width:
        raise InvalidParameter(f"width {width} is not a power of branching {branching}")
    r, scale = 0, 1
    for _ in range(digits):
        step = scale * branching
        mags = np.array([abs(sub_bucketizer(bucket, r + d * scale, step))
                         for d in range(branching)])
        top = np.sort(mags)[::-1]
        if top[0] - top[1] < noise_floor:
            raise AmbiguousSplit(
                f"top sub-buckets within noise floor ({top[0]:.3g} vs {top[1]:.3g})")
        r += scale * int(np.argmax(mags))
        scale = step
    return r


def locate_binary_search(sub_bucketizer, bucket: int, L: int,
                         noise_floor: float = 1e-12) -> int:
    """In-bucket offset via iterated parity splits of the candidate set.

    ``sub_bucketizer(bucket, class_offset, step)`` must return the complex
    measurement of the candidates whose in-bucket offset is congruent to
    ``class_offset`` mod ``step``.  Round j compares the two classes mod
    2^(j+1) and records one bit; the result is the offset
    r_0 + 2*r_1 + 4*r_2 + ... in [0, L).  The caller maps the offset back
    to a position through its candidate window.
    """
    return _split_search(sub_bucketizer, bucket, L, 2, noise_floor)


def locate_multiscale(sub_bucketizer, bucket: int, L: int, branching: int,
                      noise_floor: float = 1e-12) -> int:
    """l-way generalization of the binary split; needs L a power of l."""
    return _split_search(sub_bucketizer, bucket, L, branching, noise_floor)


def _hankel_stack(moment_sets: list[MomentSequence], a_max: int) -> np.ndarray:
    h = np.empty((len(moment_sets), a_max, a_max), dtype=np.complex128)
    for i, ms in enumerate(moment_sets):
        m = ms.moments
        for r in range(a_max):
            h[i, r, :] = m[r:r + a_max]
    return h


def count_collisions(moment_sets, a_max: int) -> np.ndarray:
    """Per-bucket tone counts from Hankel principal components.

    Each bucket's a_max x a_max Hankel matrix of moments is decomposed; all
    B*a_max singular values are pooled and the 2B largest are candidate
    significant.  A singular value only counts if it additionally clears
    0.1x its own bucket's largest and a robust floor over the pool, which
    keeps empty buckets at zero when the top-2B set dips into noise.
    """
    moment_sets = list(moment_sets)
    b = len(moment_sets)
    if b == 0:
        return np.zeros(0, dtype=np.int64)
    svals = np.linalg.svd(_hankel_stack(moment_sets, a_max), compute_uv=False)
    pooled = np.sort(svals.ravel())[::-1]
    cutoff = pooled[min(2 * b, pooled.size) - 1]
    floor = max(3.0 * np.median(pooled), 1e-12 * pooled[0]) if pooled[0] > 0 else np.inf
    counts = np.zeros(b, dtype=np.int64)
    for i in range(b):
        s = svals[i]
        ok = (s >= cutoff) & (s >= 0.1 * s[0]) & (s > floor)
        counts[i] = min(int(ok.sum()), a_max)
    return counts


def locate_prony(ms: MomentSequence, a: int) -> list[int]:
    """Positions of ``a`` colliding tones from the bucket's moments.

    Solves the (overdetermined) linear-prediction system for the
    annihilating polynomial, extracts its roots as companion-matrix
    eigenvalues, snaps them to the unit circle, and maps each to the
    nearest admissible position of the bucket.
    """
    if not 1 <= a <= ms.a_max:
        raise InvalidParameter(f"a={a} outside [1, {ms.a_max}]")
    m = ms.moments
    rows = m.size - a
    mat = np.empty((rows, a), dtype=np.complex128)
    for r in range(rows):
        mat[r] = m[r:r + a]
    rhs = -m[a:a + rows]
    try:
        coeffs, _, rank, sv = np.linalg.lstsq(mat, rhs, rcond=None)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularMomentMatrix(str(exc)) from exc
    if rank < a or sv[0] <= 0 or sv[-1] < 1e-10 * sv[0]:
        raise SingularMomentMatrix(f"moment system rank {rank} < {a}")
    roots = np.roots(np.concatenate([[1.0], coeffs[::-1]]))
    mags = np.abs(roots)
    if np.any(mags < 1e-12):
        raise SingularMomentMatrix("vanishing root magnitude")
    roots = roots / mags
    cand = ms.candidates()
    out = []
    for z in roots:
        raw = (-np.angle(z) * ms.n / (2 * np.pi)) % ms.n
        out.append(_nearest_candidate(raw, cand, ms.n))
    return sorted(out)


def estimate_formula(x: TimeSignal, positions, sample_budget: int) -> SparseSpectrum:
    """Transform sum restricted to the given positions and sample budget.

    With the full budget this is the exact coefficient at each position;
    with ``t`` evenly spaced samples it is exact whenever no other tone
    aliases onto the position under the stride.
    """
    positions = sorted(int(p) % x.n for p in set(np.atleast_1d(np.asarray(positions, dtype=np.int64)).tolist()))
    if not positions:
        return SparseSpectrum(x.n, {})
    t = int(min(max(sample_budget, 1), x.n))
    idx = np.arange(t, dtype=np.int64) * max(1, x.n // t)
    samples = x.take(idx)
    entries = {}
    for f in positions:
        entries[f] = complex(np.mean(samples * phase_factor(x.n, f * idx)))
    return SparseSpectrum(x.n, entries)


def estimate_energy(bucket_value: complex, position: int, filt: WindowFilter | None,
                    perm: PermutationParams, tau: int = 0,
                    response_floor: float = 0.05) -> complex:
    """Invert the single-ton forward model of one bucket value.

    The bucket value of a lone tone at ``position`` is
    weight * xhat * w^((perm.tau + tau) * sigma * position); dividing by the
    known weight and phase recovers the coefficient.  Spike-train buckets
    have unit weight.  Raises NearZeroResponse if the filter response at
    the position's offset is below ``response_floor`` of the peak.
    """
    n = perm.n
    f = int(position) % n
    tau_tot = (perm.tau + tau) % n
    if filt is None or filt.kind == SPIKE:
        phase = phase_factor(n, tau_tot * f)
        return complex(bucket_value / phase)
    hm = hash_view_for(filt, perm)
    bucket = hm.bucket_of(f)
    m = int(perm.permuted_position(f))
    weight = filt.bucket_weight(bucket, m)
    peak = np.abs(filt.freq_response).max()
    if abs(weight) < response_floor * peak:
        raise NearZeroResponse(
            f"|response|={abs(weight):.3g} below {response_floor} * peak at offset "
            f"{hm.offset_of(f)}")
    if filt.kind == DIRICHLET:
        return complex(bucket_value / weight)
    q = (perm.sigma * f) % n
    return complex(bucket_value / (weight * phase_factor(n, tau_tot * q)))


def estimate_freqshift(x: TimeSignal, f: int, t: int, seed=0) -> complex:
    """Coefficient at ``f`` by shift-to-DC random sampling.

    Modulating the signal so position f moves to 0 makes the target the
    mean sample value; averaging t random (or, at t = N, all) samples is an
    unbiased estimate.  ``seed`` may be an integer or a Generator.
    """
    if t < 1:
        raise InvalidParameter(f"t={t} must be >= 1")
    n = x.n
    if t >= n:
        idx = np.arange(n, dtype=np.int64)
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        idx = rng.integers(0, n, size=t)
    return complex(np.mean(x.take(idx) * phase_factor(n, f * idx)))


def estimate_prony(positions, shifts, values, n: int, keep: int | None = None) -> np.ndarray:
    """Least-squares coefficients from random-shift bucket measurements.

    Solves values[k] ~= sum_j p_j * w^(f_j * shifts[k]) for the p_j.  With
    ``keep`` set, the best ``keep`` columns are re-selected greedily before
    solving (subspace-pursuit refinement) and the rest get zero.
    """
    positions = np.asarray(positions, dtype=np.int64)
    shifts = np.asarray(shifts, dtype=np.int64)
    values = np.asarray(values, dtype=np.complex128)
    a = positions.size
    if a == 0:
        return np.zeros(0, dtype=np.complex128)
    if shifts.size != values.size:
        raise InvalidParameter("one measurement value per shift is required")
    if shifts.size < min(a, keep or a):
        raise RankDeficient(f"{shifts.size} measurements for {a} unknowns")
    vand = phase_factor(n, np.outer(shifts, positions))
    if keep is not None and keep < a:
        chosen: list[int] = []
        residual = values.copy()
        for _ in range(max(keep, 1)):
            scores = np.abs(vand.conj().T @ residual)
            scores[chosen] = -1.0
            j = int(np.argmax(scores))
            chosen.append(j)
            sub = vand[:, chosen]
            sol, *_ = np.linalg.lstsq(sub, values, rcond=None)
            residual = values - sub @ sol
        out = np.zeros(a, dtype=np.complex128)
        out[chosen] = sol
        return out
    sol, _, rank, _ = np.linalg.lstsq(vand, values, rcond=None)
    if rank < a:
        raise RankDeficient(f"measurement matrix rank {rank} < {a}")
    return sol


def classify_bucket(ms: MomentSequence, noise_floor: float,
                    residual_fraction: float = 0.05) -> TonClass:
    """Zero/single/multi verdict from a bucket's moment sequence.

    Zero-ton when the mean moment magnitude sits below the floor.  Else a
    phase-encoded position is extracted from (m0, m1); if it back-predicts
    every moment within max(noise_floor, residual_fraction * |m0|) the
    bucket is a single-ton, otherwise the tone count comes from the
    bucket's own Hankel spectrum.
    """
    m = ms.moments
    if float(np.mean(np.abs(m))) < noise_floor:
        return TonClass.zero()
    if abs(m[0]) < noise_floor:
        # energy without a usable reference phase: colliding tones cancel at tau=0
        return TonClass.multi(2)
    f_hat = locate_phase(m[0], m[1], ms.candidates(), ms.n)
    k = np.arange(m.size, dtype=np.int64)
    carrier = phase_factor(ms.n, k * f_hat)
    tol = max(noise_floor, residual_fraction * abs(m[0]))
    if np.abs(m - m[0] * carrier).max() < tol:
        coeff = np.mean(m * carrier.conj())
        return TonClass.single(f_hat, coeff)
    if m.size >= 2 * ms.a_max and ms.a_max >= 2:
        svals = np.linalg.svd(_hankel_stack([ms], ms.a_max)[0], compute_uv=False)
        count = int(np.sum(svals > max(0.1 * svals[0], noise_floor)))
    else:
        count = 2
    return TonClass.multi(min(max(count, 2), ms.a_max))
