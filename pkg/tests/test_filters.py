import json
import math

import numpy as np
import pytest

from sparsefft.errors import InvalidParameter, NonDivisorParameter
from sparsefft.filters import (default_flat_support, default_gauss_sigma,
                               filter_freq_shift, filter_from_json, filter_to_json,
                               make_dirichlet_bank, make_flat_filter, make_spike_train)

PAPER_N, PAPER_B, PAPER_OMEGA = 2048, 16, 516
PAPER_SIGMA = PAPER_B * math.sqrt(math.log2(PAPER_N))  # ~53.07


@pytest.fixture(scope="module")
def paper_flat():
    return make_flat_filter(PAPER_N, PAPER_B, PAPER_OMEGA, PAPER_SIGMA)


class TestFlatFilter:
    def test_center_tap_is_one_over_b(self, paper_flat):
        assert paper_flat.taps[PAPER_OMEGA // 2] == pytest.approx(1.0 / PAPER_B, abs=0)

    def test_tap_count(self, paper_flat):
        assert len(paper_flat.taps) == PAPER_OMEGA
        assert paper_flat.support == PAPER_OMEGA

    def test_passband_is_flat(self, paper_flat):
        # |G| over the central 80% of a passband stays within 5% of its mean
        L = paper_flat.bucket_width
        offs = np.arange(-int(0.8 * L / 2), int(0.8 * L / 2) + 1)
        resp = np.abs(paper_flat.freq_response[offs % PAPER_N])
        assert np.abs(resp - resp.mean()).max() / resp.mean() < 0.05

    def test_passband_energy_concentration(self, paper_flat):
        L = paper_flat.bucket_width
        offs = np.arange(-L // 2 + 1, L // 2 + 1)
        inband = np.sum(np.abs(paper_flat.freq_response[offs % PAPER_N]) ** 2)
        total = np.sum(np.abs(paper_flat.freq_response) ** 2)
        assert inband / total >= 0.95

    def test_allpass_degenerate_case(self):
        f = make_flat_filter(64, 1, 16, default_gauss_sigma(64, 1))
        mags = np.abs(f.freq_response)
        assert mags.max() - mags.min() < 1e-6

    def test_default_support_rule(self):
        omega = default_flat_support(2048, 16)
        assert omega % 2 == 0
        assert omega >= 4 * 16 * math.sqrt(math.log2(2048))

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameter):
            make_flat_filter(64, 5)  # not a divisor
        with pytest.raises(InvalidParameter):
            make_flat_filter(64, 8, support=15)  # odd support


class TestSpikeTrain:
    def test_paper_parameters(self):
        # 16 impulses of height sqrt(2048)/16 spaced 128 apart
        f = make_spike_train(2048, 16)
        assert f.num_buckets == 128 and f.bucket_width == 16
        assert len(f.taps) == 16
        assert np.allclose(f.taps, math.sqrt(2048) / 16)
        assert np.array_equal(f.tap_positions(), 128 * np.arange(16))

    def test_degenerate_single_impulse(self):
        f = make_spike_train(64, 1)
        assert len(f.taps) == 1
        assert f.taps[0] == pytest.approx(math.sqrt(64))
        assert f.num_buckets == 64

    def test_response_is_a_spike_train(self):
        # transform has one impulse per bucket, at multiples of L
        f = make_spike_train(2048, 16)
        resp = f.freq_response
        nonzero = np.flatnonzero(np.abs(resp) > 1e-12)
        assert np.array_equal(nonzero, 16 * np.arange(128))
        assert np.abs(resp[nonzero]).std() < 1e-12

    def test_non_divisor(self):
        with pytest.raises(NonDivisorParameter):
            make_spike_train(64, 5)


class TestDirichletBank:
    def test_prototype_box(self):
        bank = make_dirichlet_bank(2048, 128, 16)
        assert len(bank.taps) == 128
        assert np.allclose(bank.taps, math.sqrt(2048) / 128)

    def test_degenerate_single_box(self):
        f = make_dirichlet_bank(64, 16, 4, half_offset=False)
        assert np.allclose(f.taps, math.sqrt(64) / 16)
        assert f.support == 16

    def test_response_peaks_at_centers(self):
        for half in (True, False):
            bank = make_dirichlet_bank(2048, 128, 16, half_offset=half)
            centers = bank.bucket_centers()
            for b in (0, 5, 13):
                w_center = abs(bank.bucket_weight(b, int(centers[b])))
                w_edge = abs(bank.bucket_weight(b, int(centers[b]) + 63))
                assert w_center > 10 * w_edge

    def test_center_positions(self):
        assert np.array_equal(make_dirichlet_bank(2048, 128, 16).bucket_centers(),
                              128 * np.arange(16))
        assert np.array_equal(
            make_dirichlet_bank(2048, 128, 16, half_offset=False).bucket_centers(),
            128 * np.arange(16) + 64)

    def test_non_divisor(self):
        with pytest.raises(NonDivisorParameter):
            make_dirichlet_bank(64, 5, 4)


class TestFreqShift:
    def test_zero_shift_identity(self, paper_flat):
        shifted = filter_freq_shift(paper_flat, 0)
        assert np.allclose(shifted.taps, paper_flat.taps)
        assert np.allclose(shifted.freq_response, paper_flat.freq_response)

    def test_full_period_identity(self, paper_flat):
        shifted = filter_freq_shift(paper_flat, PAPER_N)
        assert np.abs(shifted.freq_response - paper_flat.freq_response).max() < 1e-9

    def test_shifts_compose(self, paper_flat):
        a = filter_freq_shift(filter_freq_shift(paper_flat, 37), 100)
        b = filter_freq_shift(paper_flat, 137)
        assert np.abs(a.taps - b.taps).max() < 1e-12
        assert a.center_offset == b.center_offset == 137

    def test_recentering_boosts_off_center_tone(self):
        # a tone off the passband center gains weight once the bank is
        # shifted so that the center lands on it
        bank = make_dirichlet_bank(2048, 128, 16, half_offset=True)
        before = abs(bank.bucket_weight(5, 610))  # center is 640
        shifted = filter_freq_shift(bank, -30)
        after = abs(shifted.bucket_weight(5, 610))
        assert after > before
        assert after == pytest.approx(np.abs(shifted.freq_response).max(), rel=1e-9)

    def test_flat_shift_moves_response(self, paper_flat):
        shifted = filter_freq_shift(paper_flat, 200)
        assert np.abs(shifted.freq_response
                      - np.roll(paper_flat.freq_response, 200)).max() < 1e-9


class TestSerialization:
    @pytest.mark.parametrize("make", [
        lambda: make_flat_filter(1024, 16),
        lambda: make_spike_train(1024, 8),
        lambda: make_dirichlet_bank(1024, 64, 16, half_offset=False),
        lambda: filter_freq_shift(make_dirichlet_bank(1024, 64, 16), -12),
    ])
    def test_round_trip_regenerates_taps(self, make):
        f = make()
        g = filter_from_json(filter_to_json(f))
        assert g.kind == f.kind
        assert np.abs(g.taps - f.taps).max() < 1e-12
        assert np.abs(g.freq_response - f.freq_response).max() < 1e-9

    def test_json_is_compact_metadata(self):
        doc = json.loads(filter_to_json(make_flat_filter(1024, 16)))
        assert set(doc) == {"kind", "n", "num_buckets", "bucket_width", "support",
                            "gauss_sigma", "center_offset", "half_bucket_offset"}
