"""Benchmark harness: signal generation, metrics, experiments, sweeps.

Test signals place K unit-magnitude tones with uniformly random phases at
uniformly random positions; the general sparse case adds complex white
Gaussian noise in the time domain calibrated to the requested SNR.

Every experiment row records wall-clock runtime (median over repeats,
setup excluded), the fraction of distinct time indices read, and the
L0/L1/L2 errors of the recovered spectrum against the best-K reference.
Error normalization is per coefficient: l1 = sum|d|/K, l2 = ||d||_2/sqrt(K).
"""

from __future__ import annotations

import csv
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidSpec, SparseFFTError
from .frameworks import AlgorithmConfig, RecoveryResult, run_algorithm
from .signal import SparseSpectrum, TimeSignal, idft_dense

__all__ = ["SignalSpec", "BenchRecord", "gen_signal", "compute_errors",
           "run_experiment", "run_sweep", "peeling_length_near", "CSV_HEADER",
           "DEFAULT_SNR_DB"]

CSV_HEADER = ["algorithm", "n", "k", "snr_db", "seed", "runtime_s",
              "sampling_fraction", "l0", "l1", "l2", "converged", "config_digest"]

DEFAULT_SNR_DB = 20.0  # the general sparse case


@dataclass(frozen=True)
class SignalSpec:
    """Generation parameters for one test signal.

    ``snr_db=None`` means exactly sparse (no noise).
    """

    n: int
    k: int
    snr_db: float | None = DEFAULT_SNR_DB
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidSpec(f"n={self.n} must be >= 2")
        if not 0 <= self.k <= self.n:
            raise InvalidSpec(f"k={self.k} outside [0, {self.n}]")

    @property
    def exact(self) -> bool:
        return self.snr_db is None


@dataclass
class BenchRecord:
    """One experiment row."""

    algorithm: str
    spec: SignalSpec
    runtime_seconds: float
    sampling_fraction: float
    l0_error: int
    l1_error: float
    l2_error: float
    converged: bool
    config_digest: str

    def to_row(self) -> list:
        snr = "exact" if self.spec.exact else f"{self.spec.snr_db:g}"
        return [self.algorithm, self.spec.n, self.spec.k, snr, self.spec.seed,
                f"{self.runtime_seconds:.6e}", f"{self.sampling_fraction:.6f}",
                self.l0_error, f"{self.l1_error:.6e}", f"{self.l2_error:.6e}",
                str(self.converged).lower(), self.config_digest]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm, "n": self.spec.n, "k": self.spec.k,
            "snr_db": None if self.spec.exact else self.spec.snr_db,
            "seed": self.spec.seed, "runtime_s": self.runtime_seconds,
            "sampling_fraction": self.sampling_fraction, "l0": self.l0_error,
            "l1": self.l1_error, "l2": self.l2_error, "converged": self.converged,
            "config_digest": self.config_digest,
        }


def gen_signal(spec: SignalSpec, positions=None, magnitudes=None,
               ) -> tuple[TimeSignal, SparseSpectrum]:
    """Synthesize a test signal and its planted sparse spectrum.

    Positions and magnitudes may be forced for fixture reproduction;
    otherwise K positions are drawn without replacement and every
    coefficient has magnitude 1.0 and a uniformly random phase.
    """
    rng = np.random.default_rng(spec.seed)
    if positions is None:
        positions = np.sort(rng.choice(spec.n, size=spec.k, replace=False))
    else:
        positions = np.asarray(positions, dtype=np.int64)
        if positions.size != spec.k:
            raise InvalidSpec(f"{positions.size} positions for k={spec.k}")
    if magnitudes is None:
        magnitudes = np.ones(spec.k)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=spec.k)
    coeffs = np.asarray(magnitudes) * np.exp(1j * phases)

    dense = np.zeros(spec.n, dtype=np.complex128)
    dense[positions] = coeffs
    samples = idft_dense(dense)
    if not spec.exact:
        sig_power = float(np.mean(np.abs(samples) ** 2))
        if sig_power > 0:
            noise_var = sig_power / (10.0 ** (spec.snr_db / 10.0))
            scale = math.sqrt(noise_var / 2.0)
            noise = rng.normal(0.0, scale, spec.n) + 1j * rng.normal(0.0, scale, spec.n)
            samples = samples + noise
    truth = SparseSpectrum(spec.n, {int(p): complex(c) for p, c in zip(positions, coeffs)})
    return TimeSignal(samples), truth


def _best_k_dense(truth, n: int, k: int) -> np.ndarray:
    if isinstance(truth, SparseSpectrum):
        return truth.top_k(k).to_dense()
    dense = np.asarray(truth, dtype=np.complex128)
    order = np.lexsort((np.arange(n), -np.abs(dense)))
    ref = np.zeros(n, dtype=np.complex128)
    ref[order[:k]] = dense[order[:k]]
    return ref


def compute_errors(truth, result: SparseSpectrum, k: int,
                   tol0: float = 0.01) -> tuple[int, float, float]:
    """Per-coefficient L0/L1/L2 errors against the best-K reference.

    ``truth`` is either the planted SparseSpectrum (exact case) or the full
    dense spectrum of the generated signal.  The difference vector d runs
    over all N bins; l0 counts |d| > tol0, l1 = sum|d|/K, l2 = ||d||/sqrt(K).
    """
    n = result.n
    ref = _best_k_dense(truth, n, k)
    d = ref - result.to_dense()
    mags = np.abs(d)
    norm = max(k, 1)
    return (int(np.count_nonzero(mags > tol0)),
            float(mags.sum() / norm),
            float(np.linalg.norm(d) / math.sqrt(norm)))


def peeling_length_near(n: int) -> tuple[int, tuple[int, int, int]]:
    """Nearest product of three consecutive integers around an even center.

    (c-1, c, c+1) with c even are pairwise co-prime, so c^3 - c is a valid
    peeling length close to n.
    """
    c = max(4, round(n ** (1.0 / 3.0)))
    if c % 2:
        candidates = [c - 1, c + 1]
    else:
        candidates = [c, c - 2 if c > 4 else c + 2]
    best = min(candidates, key=lambda cc: abs(cc ** 3 - cc - n))
    return best ** 3 - best, (best - 1, best, best + 1)


def run_experiment(cfg: AlgorithmConfig, spec: SignalSpec, repeats: int = 5,
                   algorithm_id: str | None = None, timing_lock=None,
                   positions=None, magnitudes=None) -> BenchRecord:
    """Generate once, run ``repeats`` times on fresh counters, record medians.

    Framework errors become converged=false rows instead of aborting.
    Signal generation and error computation sit outside the timed section.
    """
    if repeats < 1:
        raise InvalidSpec(f"repeats={repeats} must be >= 1")
    x, truth = gen_signal(spec, positions=positions, magnitudes=magnitudes)
    if spec.exact:
        reference = truth
    else:
        reference = np.fft.fft(x.samples) / spec.n
    algo = algorithm_id or cfg.framework

    times: list[float] = []
    result: RecoveryResult | None = None
    failure: str | None = None
    lock = timing_lock if timing_lock is not None else threading.Lock()
    with lock:
        for _ in range(repeats):
            fresh = x.fresh_copy()
            t0 = time.perf_counter()
            try:
                out = run_algorithm(fresh, spec.k, cfg)
            except SparseFFTError as exc:
                failure = f"{type(exc).__name__}: {exc}"
                out = RecoveryResult(SparseSpectrum(spec.n, {}), fresh.access_count, 0, False)
            times.append(time.perf_counter() - t0)
            if result is None:
                result = out

    l0, l1, l2 = compute_errors(reference, result.spectrum, spec.k)
    return BenchRecord(
        algorithm=algo, spec=spec,
        runtime_seconds=float(np.median(times)),
        sampling_fraction=result.samples_read / spec.n,
        l0_error=l0, l1_error=l1, l2_error=l2,
        converged=result.converged and failure is None,
        config_digest=cfg.digest(),
    )


def _sweep_cells(kind: str, grid, base: list[tuple[str, AlgorithmConfig]],
                 n: int, k: int, snr_db, seed: int):
    cells = []
    for value in grid:
        for algo_id, cfg in base:
            if kind == "n_sweep":
                cell_n, cell_k, cell_snr = int(value), k, snr_db
            elif kind == "k_sweep":
                cell_n, cell_k, cell_snr = n, int(value), snr_db
            elif kind == "snr_sweep":
                cell_n, cell_k = n, k
                cell_snr = None if value in ("exact", None) else float(value)
            else:
                raise InvalidSpec(f"unknown sweep kind {kind!r}")
            if cfg.framework == "peeling" and cfg.coprime_factors is None:
                cell_n, factors = peeling_length_near(cell_n)
                cfg = replace(cfg, coprime_factors=factors)
            cells.append((algo_id, cfg, SignalSpec(cell_n, cell_k, cell_snr, seed)))
    return cells


def run_sweep(kind: str, grid, base, out_path, n: int = 1 << 17, k: int = 50,
              snr_db=DEFAULT_SNR_DB, seed: int = 0, repeats: int = 5,
              workers: int = 1) -> list[BenchRecord]:
    """Run one experiment per (grid value, algorithm) cell, appending to CSV.

    ``base`` is a list of (algorithm_id, AlgorithmConfig).  Rows are flushed
    as they finish so partial results survive per-cell failures.  Peeling
    cells substitute the nearest co-prime-product length for the grid n.
    """
    cells = _sweep_cells(kind, list(grid), list(base), n, k, snr_db, seed)
    records: list[BenchRecord] = []
    write_lock = threading.Lock()
    timing_lock = threading.Lock()

    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        fh.flush()

        def run_cell(cell):
            algo_id, cfg, spec = cell
            try:
                rec = run_experiment(cfg, spec, repeats=repeats,
                                     algorithm_id=algo_id, timing_lock=timing_lock)
            except SparseFFTError:
                rec = BenchRecord(algo_id, spec, 0.0, 0.0, spec.k, 1.0, 1.0,
                                  False, cfg.digest())
            with write_lock:
                writer.writerow(rec.to_row())
                fh.flush()
                records.append(rec)
            return rec

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run_cell, cells))
        else:
            for cell in cells:
                run_cell(cell)
    return records


def default_grid(kind: str):
    if kind == "n_sweep":
        return [1 << e for e in range(10, 19)]
    if kind == "k_sweep":
        return list(range(2, 65, 2))
    if kind == "snr_sweep":
        return list(range(-20, 61, 10))
    raise InvalidSpec(f"unknown sweep kind {kind!r}")
