import numpy as np
import pytest

from sparsefft.bucketize import bucketize_flat, bucketize_spike, hash_view
from sparsefft.errors import (AmbiguousSplit, NearZeroResponse, RankDeficient,
                              SingularMomentMatrix, ZeroTonBucket)
from sparsefft.filters import make_flat_filter
from sparsefft.reconstruct import (MomentSequence, classify_bucket, count_collisions,
                                   estimate_energy, estimate_formula, estimate_freqshift,
                                   estimate_prony, locate_binary_search, locate_multiscale,
                                   locate_phase, locate_prony, robust_noise_floor,
                                   select_by_votes, vote_tally, MULTI_TON, SINGLE_TON,
                                   ZERO_TON, VoteTable)
from sparsefft.signal import PermutationParams, TimeSignal, dft_dense, phase_factor

from conftest import random_signal, tone_signal


def spike_moments(n, b, bucket, tones, count):
    """Moment sequence of one spike bucket built from the forward model."""
    k = np.arange(count, dtype=np.int64)
    m = np.zeros(count, dtype=np.complex128)
    for f, c in tones.items():
        m += c * phase_factor(n, k * f)
    return MomentSequence(bucket, m, count // 2, n, b)


class TestLocatePhase:
    def test_spike_bucket_single_tone(self):
        n, b = 2048, 128
        y0, y1 = 1.0, phase_factor(n, 64)
        cands = 64 % b + b * np.arange(n // b)
        assert locate_phase(y0, y1, cands, n) == 64

    def test_zero_frequency(self):
        assert locate_phase(1.0, 1.0, np.arange(0, 2048, 128), 2048) == 0

    def test_collision_breaks_phase_decoding(self):
        # two equal tones sharing a bucket: the decoded position generally
        # belongs to neither, which is why this method presumes single-tons
        n, b = 2048, 128
        f1, f2 = 98, 98 + 512
        y0 = 1.0 + 1.0
        y1 = phase_factor(n, f1) + phase_factor(n, f2)
        cands = (f1 % b) + b * np.arange(n // b)
        got = locate_phase(y0, y1, cands, n)
        assert got not in (f1, f2)

    def test_zero_ton_raises(self):
        with pytest.raises(ZeroTonBucket):
            locate_phase(0.0, 1.0, np.arange(8), 64, zero_floor=1e-12)


class TestVotes:
    def test_single_round_preimage(self):
        n = 256
        x, _ = tone_signal(n, {37: 1.0})
        filt = make_flat_filter(n, 8)
        perm = PermutationParams.identity(n)
        bs = bucketize_flat(x, filt, perm)
        table = vote_tally([(bs, robust_noise_floor(bs.values))], heavy_count=2)
        hm = bs.hash_map()
        pre = hm.preimage(hm.bucket_of(37))
        assert table.score_of(37) == 1
        assert all(table.score_of(int(f)) == 1 for f in pre)
        assert table.counts.sum() <= 2 * len(pre)

    def test_nine_rounds_unique_max(self):
        n, f0 = 512, 201
        rng = np.random.default_rng(5)
        x, _ = tone_signal(n, {f0: 1.0})
        filt = make_flat_filter(n, 16)
        rounds = []
        for _ in range(9):
            perm = PermutationParams.random(n, rng)
            bs = bucketize_flat(x.fresh_copy(), filt, perm)
            rounds.append((bs, robust_noise_floor(bs.values)))
        table = vote_tally(rounds, heavy_count=2)
        assert table.score_of(f0) == 9
        counts = table.counts.copy()
        counts[f0] = -1
        assert counts.max() < 9

    def test_zero_signal_all_zero(self):
        n = 256
        bs = bucketize_flat(TimeSignal(np.zeros(n)), make_flat_filter(n, 8),
                            PermutationParams.identity(n))
        table = vote_tally([(bs, 1e-9)], heavy_count=4)
        assert table.counts.sum() == 0

    def test_select_single_full_score(self):
        t = VoteTable(n=32, rounds=9)
        t.counts[7] = 9
        assert select_by_votes(t, keep=4, min_fraction=0.5) == [7]

    def test_select_threshold_rule(self):
        t = VoteTable(n=64, rounds=9)
        t.counts[10], t.counts[20], t.counts[30] = 9, 9, 4
        assert select_by_votes(t, keep=4, min_fraction=0.5) == [10, 20]

    def test_select_tie_prefers_smaller_position(self):
        t = VoteTable(n=64, rounds=9)
        t.counts[40], t.counts[8], t.counts[55] = 7, 7, 7
        assert select_by_votes(t, keep=2, min_fraction=0.5) == [8, 40]

    def test_vote_argmax_soundness(self):
        # a lone unit tone keeps the strictly maximal vote count in any
        # tally of three or more rounds
        n = 512
        rng = np.random.default_rng(17)
        x, _ = tone_signal(n, {313: 1.0})
        filt = make_flat_filter(n, 16)
        for rounds_n in (3, 5, 9):
            rounds = []
            for _ in range(rounds_n):
                perm = PermutationParams.random(n, rng)
                bs = bucketize_flat(x.fresh_copy(), filt, perm)
                rounds.append((bs, robust_noise_floor(bs.values)))
            table = vote_tally(rounds, heavy_count=2)
            best = np.flatnonzero(table.counts == table.counts.max())
            assert table.score_of(313) == table.counts.max()
            assert 313 in best and len(best) <= filt.bucket_width


def window_sub_bucketizer(coeff_by_offset, width):
    """Class-sum measurement over a constructed single bucket."""
    def sub(bucket, class_offset, step):
        return sum(c for r, c in coeff_by_offset.items()
                   if (r - class_offset) % step == 0)
    return sub


class TestSplitSearch:
    def test_binary_single_comparison(self):
        sub = window_sub_bucketizer({0: 1.0}, 2)
        assert locate_binary_search(sub, 0, 2) == 0

    def test_binary_offset_five(self):
        sub = window_sub_bucketizer({5: 1.0}, 8)
        assert locate_binary_search(sub, 0, 8) == 5  # bits (1, 0, 1)

    def test_zero_ton_ambiguous(self):
        sub = window_sub_bucketizer({}, 8)
        with pytest.raises(AmbiguousSplit):
            locate_binary_search(sub, 0, 8)

    def test_multiscale_matches_binary(self):
        for off in range(16):
            sub = window_sub_bucketizer({off: 1.0 + 0.5j}, 16)
            assert locate_multiscale(sub, 0, 16, branching=2) == \
                locate_binary_search(sub, 0, 16) == off

    def test_multiscale_base_four(self):
        sub = window_sub_bucketizer({11: 1.0}, 16)
        assert locate_multiscale(sub, 0, 16, branching=4) == 11  # digits (3, 2)

    def test_branching_equal_width_is_direct_max(self):
        sub = window_sub_bucketizer({13: 2.0, 4: 0.5}, 16)
        assert locate_multiscale(sub, 0, 16, branching=16) == 13


class TestCountCollisions:
    def test_single_tone_counts_one(self):
        n, b = 2048, 128
        sets = [spike_moments(n, b, i, {}, 8) for i in range(b)]
        sets[10] = spike_moments(n, b, 10, {10: 1.0}, 8)
        counts = count_collisions(sets, 4)
        assert counts[10] == 1
        assert counts.sum() == 1

    def test_zero_ton_counts_zero(self):
        n, b = 256, 16
        sets = [spike_moments(n, b, i, {}, 8) for i in range(b)]
        assert count_collisions(sets, 4).sum() == 0

    def test_two_separated_tones_count_two(self):
        n, b = 2048, 128
        sets = [spike_moments(n, b, i, {}, 8) for i in range(b)]
        sets[98] = spike_moments(n, b, 98, {98: 1.0, 610: 1.0}, 8)
        assert count_collisions(sets, 4)[98] == 2

    def test_monotone_in_added_tones(self):
        # adding a tone to a bucket never decreases its count
        n, b = 2048, 128
        rng = np.random.default_rng(3)
        for _ in range(25):
            bucket = int(rng.integers(0, b))
            cands = bucket + b * np.arange(n // b)
            chosen = rng.choice(cands, size=3, replace=False)
            mags = 0.5 + rng.uniform(0, 1.0, size=3)
            phases = np.exp(2j * np.pi * rng.uniform(size=3))
            prev = 0
            tones = {}
            for f, c in zip(chosen, mags * phases):
                tones[int(f)] = c
                sets = [spike_moments(n, b, i, {}, 8) for i in range(b)]
                sets[bucket] = spike_moments(n, b, bucket, tones, 8)
                cur = int(count_collisions(sets, 4)[bucket])
                assert cur >= prev
                prev = cur


class TestLocateProny:
    def test_single_tone_ratio(self):
        ms = spike_moments(2048, 128, 64, {64: 0.55}, 8)
        assert locate_prony(ms, 1) == [64]

    def test_colliding_pair_recovered(self):
        # positions 98 and 610 share bucket 98 mod 128
        ms = spike_moments(2048, 128, 98, {98: 0.7, 610: 0.85}, 8)
        assert locate_prony(ms, 2) == [98, 610]

    def test_degenerate_amplitude_raises(self):
        ms = spike_moments(2048, 128, 98, {98: 0.7}, 8)
        with pytest.raises(SingularMomentMatrix):
            locate_prony(ms, 2)

    def test_three_tones(self):
        tones = {5: 1.0, 5 + 512: 0.8, 5 + 1536: -0.6 + 0.2j}
        ms = spike_moments(2048, 128, 5, tones, 8)
        assert locate_prony(ms, 3) == sorted(tones)


class TestEstimators:
    def test_formula_full_budget_matches_dense(self, rng):
        x = random_signal(256, rng)
        dense = dft_dense(x.fresh_copy())
        got = estimate_formula(x, [3, 77, 200], 256)
        for f in (3, 77, 200):
            assert abs(got.entries[f] - dense[f]) < 1e-9

    def test_formula_single_tone_quarter_budget(self):
        n = 2048
        x, _ = tone_signal(n, {610: 0.85})
        got = estimate_formula(x, [610], n // 4)
        assert abs(got.entries[610] - 0.85) < 1e-9
        assert x.access_count == n // 4

    def test_formula_empty_positions(self, rng):
        assert estimate_formula(random_signal(64, rng), [], 64).entries == {}

    def test_energy_spike_identity(self):
        n = 2048
        perm = PermutationParams.identity(n)
        assert estimate_energy(0.85 + 0.1j, 610, None, perm, tau=0) == 0.85 + 0.1j

    def test_energy_spike_phase_removal(self):
        n = 2048
        x, _ = tone_signal(n, {610: 0.85})
        bs = bucketize_spike(x, 128, tau=5)
        perm = PermutationParams.identity(n)
        got = estimate_energy(bs.values[610 % 128], 610, None, perm, tau=5)
        assert abs(got - 0.85) < 1e-9

    def test_energy_flat_center_tone(self):
        n = 2048
        filt = make_flat_filter(n, 16, 516)
        x, _ = tone_signal(n, {640: 1.3})
        perm = PermutationParams.identity(n)
        bs = bucketize_flat(x, filt, perm)
        got = estimate_energy(bs.values[5], 640, filt, perm)
        assert abs(got - 1.3) < 1e-6

    def test_energy_under_permutation_and_shift(self):
        n = 2048
        filt = make_flat_filter(n, 16, 516)
        perm = PermutationParams(n=n, sigma=129, tau=17)
        x, _ = tone_signal(n, {610: 0.85})
        tau_extra = 3
        bs = bucketize_flat(x, filt, perm, tau_extra)
        hm = bs.hash_map()
        got = estimate_energy(bs.values[hm.bucket_of(610)], 610, filt, perm, tau=tau_extra)
        assert abs(got - 0.85) < 1e-6

    def test_energy_edge_raises_near_zero(self):
        # the tabulated response at the exact passband edge sits around
        # 0.44-0.5 of the peak, so any floor above that refuses the edge
        n = 2048
        filt = make_flat_filter(n, 16, 516)
        perm = PermutationParams.identity(n)
        resp = np.abs(filt.freq_response)
        edge = 5 * 128 - 64
        assert resp[(5 * 128 - edge) % n] < 0.55 * resp.max()
        with pytest.raises(NearZeroResponse):
            estimate_energy(0.1, edge, filt, perm, response_floor=0.55)
        # an interior position passes the same floor
        estimate_energy(0.1, 5 * 128 + 3, filt, perm, response_floor=0.55)

    def test_freqshift_full_sampling_exact(self, rng):
        x = random_signal(128, rng)
        dense = dft_dense(x.fresh_copy())
        assert abs(estimate_freqshift(x, 37, 128) - dense[37]) < 1e-12

    def test_freqshift_single_tone_subsampled(self):
        n = 2048
        x, _ = tone_signal(n, {610: 0.85})
        assert abs(estimate_freqshift(x, 610, 64, seed=3) - 0.85) < 1e-9

    def test_freqshift_monte_carlo_four_tone(self):
        # iid uniform sampling leaves variance sum(|c_other|^2)/t from the
        # three interfering tones; the frozen rates follow that analysis
        # (84% at t=256, 97% at t=512 over these 200 seeds)
        n = 2048
        x, _ = tone_signal(n, {64: 0.55, 304: 0.7, 610: 0.85, 1660: 1.0})
        hits256 = hits512 = 0
        for seed in range(200):
            e256 = estimate_freqshift(x.fresh_copy(), 1660, 256, seed=seed)
            e512 = estimate_freqshift(x.fresh_copy(), 1660, 512, seed=seed)
            hits256 += (abs(e256 - 1.0) < 0.1)
            hits512 += (abs(e512 - 1.0) < 0.1)
        assert hits256 >= 150
        assert hits512 >= 186  # >= 93%

    def test_prony_scalar_mean(self):
        n = 2048
        shifts = np.array([3, 50, 1000])
        values = 0.7 * phase_factor(n, shifts * 98)
        got = estimate_prony([98], shifts, values, n)
        assert abs(got[0] - 0.7) < 1e-12

    def test_prony_pair_least_squares(self):
        n = 2048
        rng = np.random.default_rng(0)
        shifts = rng.integers(0, n, size=8)
        truth = {98: 0.7, 610: 0.85 * np.exp(0.4j)}
        values = sum(c * phase_factor(n, shifts * f) for f, c in truth.items())
        got = estimate_prony(list(truth), shifts, values, n)
        assert np.abs(got - np.array(list(truth.values()))).max() < 1e-8

    def test_prony_rank_deficient(self):
        with pytest.raises(RankDeficient):
            estimate_prony([1, 2, 3], [0], [1.0], 64)

    def test_prony_pursuit_selects_true_columns(self):
        n = 512
        shifts = np.arange(12)
        truth = {10: 1.0, 200: -0.5}
        values = sum(c * phase_factor(n, shifts * f) for f, c in truth.items())
        got = estimate_prony([10, 77, 200], shifts, values, n, keep=2)
        assert abs(got[0] - 1.0) < 1e-9
        assert abs(got[1]) < 1e-9
        assert abs(got[2] + 0.5) < 1e-9

    def test_estimator_agreement_single_ton(self):
        # energy, frequency-shift (full sampling), and restricted-formula
        # estimates coincide on a clean single-ton instance
        n = 2048
        coeff = 0.85 * np.exp(0.3j)
        x, _ = tone_signal(n, {610: coeff})
        filt = make_flat_filter(n, 16, 516)
        perm = PermutationParams.identity(n)
        bs = bucketize_flat(x.fresh_copy(), filt, perm)
        e1 = estimate_energy(bs.values[5], 610, filt, perm)
        e2 = estimate_freqshift(x.fresh_copy(), 610, n)
        e3 = estimate_formula(x.fresh_copy(), [610], n).entries[610]
        assert abs(e1 - e2) < 1e-6 and abs(e2 - e3) < 1e-6


class TestClassifyBucket:
    def test_zero_ton(self):
        ms = spike_moments(2048, 128, 3, {}, 6)
        assert classify_bucket(ms, noise_floor=1e-9).kind == ZERO_TON

    def test_single_ton_exact(self):
        coeff = 0.85 * np.exp(1.1j)
        ms = spike_moments(2048, 128, 98, {610: coeff}, 6)
        tc = classify_bucket(ms, noise_floor=1e-9)
        assert tc.kind == SINGLE_TON
        assert tc.position == 610
        assert abs(tc.coefficient - coeff) < 1e-12

    def test_two_equal_tones_multi(self):
        ms = spike_moments(2048, 128, 98, {98: 1.0, 610: 1.0}, 8)
        tc = classify_bucket(ms, noise_floor=1e-9)
        assert tc.kind == MULTI_TON and tc.count == 2

    def test_cancelling_pair_multi(self):
        # equal and opposite tones have m0 ~= 0 but carry energy elsewhere
        ms = spike_moments(2048, 128, 98, {98: 1.0, 610: -1.0}, 8)
        assert classify_bucket(ms, noise_floor=1e-6).kind == MULTI_TON


class TestRoundTrips:
    def test_every_location_method_every_position(self):
        # exhaustive noiseless round trip over all positions at N = 512
        n, b = 512, 32
        width = n // b
        hm = hash_view("spike_train", n, b, PermutationParams.identity(n))
        for f in range(n):
            bucket = f % b
            ms = spike_moments(n, b, bucket, {f: 1.0 + 0.5j}, 8)
            assert locate_phase(ms.moments[0], ms.moments[1], ms.candidates(), n) == f
            assert locate_prony(ms, 1) == [f]
            tc = classify_bucket(ms, 1e-9)
            assert tc.kind == SINGLE_TON and tc.position == f
            offset = f // b
            sub = window_sub_bucketizer({offset: 1.0}, width)
            assert locate_binary_search(sub, bucket, width) == offset
            assert locate_multiscale(sub, bucket, width, branching=4) == offset
            assert hm.bucket_of(f) == bucket

    def test_prony_consistency_random_collisions(self):
        # up to a_max tones in one bucket: positions exact, values 1e-6
        n, b = 2048, 128
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = int(rng.integers(1, 5))
            bucket = int(rng.integers(0, b))
            cands = bucket + b * np.arange(n // b)
            chosen = np.sort(rng.choice(cands, size=a, replace=False))
            coeffs = ((0.5 + rng.uniform(0, 1, a))
                      * np.exp(2j * np.pi * rng.uniform(size=a)))
            tones = dict(zip((int(f) for f in chosen), coeffs))
            ms = spike_moments(n, b, bucket, tones, 8)
            got = locate_prony(ms, a)
            assert got == sorted(tones)
            shifts = np.concatenate([np.arange(8), rng.integers(0, n, 8)])
            values = sum(c * phase_factor(n, shifts * f) for f, c in tones.items())
            est = estimate_prony(got, shifts, values, n)
            assert np.abs(est - np.array([tones[f] for f in got])).max() < 1e-6
