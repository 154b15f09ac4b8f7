"""Sparse FFT toolkit: signal operations, bucketization filters, sublinear
recovery frameworks, and an instrumented benchmark harness."""

from .bucketize import (BucketSet, HashMapView, bucketize_dirichlet, bucketize_flat,
                        bucketize_spike, hash_view, hash_view_for)
from .errors import (AmbiguousSplit, ConfigMismatch, FilterKindMismatch, InvalidParameter,
                     InvalidSpec, LengthMismatch, NearZeroResponse, NonDivisorParameter,
                     NonInvertibleScaling, RankDeficient, SchemaError, SingularMomentMatrix,
                     SparseFFTError, ZeroTonBucket)
from .filters import (WindowFilter, default_flat_support, default_gauss_sigma,
                      filter_freq_shift, filter_from_json, filter_to_json,
                      make_dirichlet_bank, make_flat_filter, make_spike_train)
from .frameworks import (FRAMEWORKS, AlgorithmConfig, RecoveryResult, l2_guarantee_check,
                         run_algorithm, run_dense_baseline, run_iterative, run_oneshot,
                         run_peeling, run_voting)
from .harness import (CSV_HEADER, BenchRecord, SignalSpec, compute_errors, gen_signal,
                      peeling_length_near, run_experiment, run_sweep)
from .reconstruct import (MomentSequence, TonClass, VoteTable, classify_bucket,
                          count_collisions, estimate_energy, estimate_formula,
                          estimate_freqshift, estimate_prony, locate_binary_search,
                          locate_multiscale, locate_phase, locate_prony,
                          robust_noise_floor, select_by_votes, vote_tally)
from .signal import (PermutationParams, SparseSpectrum, TimeSignal, alias, brute_force_dft,
                     convolve, dft_dense, freq_shift, idft_dense, permute, phase_factor,
                     subsample, time_scale, time_shift)

__version__ = "0.1.0"
