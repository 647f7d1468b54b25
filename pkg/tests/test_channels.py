import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgame.channels import (
    ChannelSpec,
    mean_rate,
    rayleigh_state_probs,
    sample_realization,
    spec_from_snr,
)

RATES_5STATE = (0.0, 1.0, 2.0, 3.0, 6.0)
# Widely quoted 5-state probabilities for a 5 dB HIPERLAN/2-style channel.
# As printed they sum to 1.0018, so the ChannelSpec below uses the normalized
# vector; the raw dot product is still asserted as arithmetic.
PROBS_5DB_RAW = (0.3376, 0.2348, 0.2517, 0.1757, 0.002)


class TestChannelSpec:
    def test_accepts_valid_spec(self):
        spec = ChannelSpec(id=1, rates=(0, 2), probs=(0.5, 0.5))
        assert spec.rates == (0.0, 2.0)
        assert spec.probs == (0.5, 0.5)

    def test_rejects_bad_id(self):
        with pytest.raises(ValueError, match="id"):
            ChannelSpec(id=0, rates=(1.0,), probs=(1.0,))

    def test_rejects_empty_rates(self):
        with pytest.raises(ValueError, match="at least one rate"):
            ChannelSpec(id=1, rates=(), probs=())

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="2 rates but 1 probs"):
            ChannelSpec(id=1, rates=(0, 1), probs=(1.0,))

    def test_rejects_descending_rates(self):
        with pytest.raises(ValueError, match="ascending"):
            ChannelSpec(id=1, rates=(2, 1), probs=(0.5, 0.5))

    def test_rejects_duplicate_rates(self):
        with pytest.raises(ValueError, match="distinct"):
            ChannelSpec(id=1, rates=(1, 1), probs=(0.5, 0.5))

    def test_rejects_negative_rates(self):
        with pytest.raises(ValueError, match="non-negative"):
            ChannelSpec(id=1, rates=(-1, 1), probs=(0.5, 0.5))

    def test_rejects_prob_out_of_range(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            ChannelSpec(id=1, rates=(0, 1), probs=(-0.1, 1.1))

    def test_rejects_bad_prob_sum(self):
        with pytest.raises(ValueError, match="sum"):
            ChannelSpec(id=1, rates=(0, 1), probs=(0.5, 0.4))
        # the raw published 5 dB vector (sum 1.0018) is likewise rejected
        with pytest.raises(ValueError, match="sum"):
            ChannelSpec(id=1, rates=RATES_5STATE, probs=PROBS_5DB_RAW)


class TestMeanRate:
    def test_published_5db_vector(self):
        """Raw dot product of the printed vector is 1.2773; the normalized
        spec scales it by the printed sum 1.0018."""
        raw_dot = float(np.dot(RATES_5STATE, PROBS_5DB_RAW))
        assert raw_dot == pytest.approx(1.2773, abs=1e-12)
        total = math.fsum(PROBS_5DB_RAW)
        spec = ChannelSpec(
            id=1, rates=RATES_5STATE, probs=tuple(p / total for p in PROBS_5DB_RAW)
        )
        assert mean_rate(spec) == pytest.approx(1.2773 / total, rel=1e-12)

    def test_degenerate(self):
        assert mean_rate(ChannelSpec(id=1, rates=(3.0,), probs=(1.0,))) == 3.0

    @given(st.integers(min_value=1, max_value=6), st.integers(min_value=0))
    @settings(max_examples=50, deadline=None)
    def test_mean_between_min_and_max(self, k, seed):
        rng = np.random.default_rng(seed)
        rates = tuple(np.cumsum(rng.uniform(0.05, 2.0, size=k)))
        probs = tuple(rng.dirichlet(np.ones(k)))
        spec = ChannelSpec(id=1, rates=rates, probs=probs)
        assert rates[0] - 1e-12 <= mean_rate(spec) <= rates[-1] + 1e-12


class TestRayleighStateProbs:
    def test_two_state_at_mean_snr(self):
        """Threshold at the mean SNR splits an exponential into
        1 - 1/e = 0.63212 and 1/e = 0.36788."""
        probs = rayleigh_state_probs(5.0, [0.0, 3.16228, math.inf])
        assert probs[0] == pytest.approx(0.63212, abs=1e-5)
        assert probs[1] == pytest.approx(0.36788, abs=1e-5)

    def test_single_state(self):
        assert rayleigh_state_probs(5.0, [0.0, math.inf]) == (1.0,)

    def test_sum_is_one(self):
        probs = rayleigh_state_probs(7.0, [0.0, 0.5, 1.0, 4.0, 9.0, math.inf])
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_ascending(self):
        with pytest.raises(ValueError, match="ascending"):
            rayleigh_state_probs(5.0, [0.0, 2.0, 2.0, math.inf])

    def test_rejects_bad_endpoints(self):
        with pytest.raises(ValueError, match="first threshold"):
            rayleigh_state_probs(5.0, [0.1, math.inf])
        with pytest.raises(ValueError, match="last threshold"):
            rayleigh_state_probs(5.0, [0.0, 10.0])

    @given(
        st.floats(min_value=-5.0, max_value=15.0),
        st.lists(
            st.floats(min_value=1e-3, max_value=50.0), min_size=1, max_size=6
        ),
    )
    @settings(max_examples=100, deadline=None)
    def test_sum_property(self, snr_db, gaps):
        interior = list(np.cumsum(gaps))
        probs = rayleigh_state_probs(snr_db, [0.0, *interior, math.inf])
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
        assert all(p >= 0.0 for p in probs)


class TestSpecFromSnr:
    def test_matches_direct_call(self):
        spec = spec_from_snr(2, RATES_5STATE, 6.0, [1.0, 4.0, 7.0, 14.0])
        direct = rayleigh_state_probs(
            6.0, [0.0, 10 ** 0.1, 10 ** 0.4, 10 ** 0.7, 10 ** 1.4, math.inf]
        )
        assert spec.id == 2
        assert spec.probs == pytest.approx(direct, rel=1e-12)


class TestSampleRealization:
    def test_degenerate_channel_is_constant(self):
        spec = ChannelSpec(id=1, rates=(3.0,), probs=(1.0,))
        rng = np.random.default_rng(0)
        assert all(sample_realization([spec], rng) == (3.0,) for _ in range(100))

    def test_state_frequencies(self):
        """Inverse-CDF sampling reproduces the state probabilities:
        1e6 draws land within 5e-3 of each target mass."""
        total = math.fsum(PROBS_5DB_RAW)
        spec = ChannelSpec(
            id=1, rates=RATES_5STATE, probs=tuple(p / total for p in PROBS_5DB_RAW)
        )
        rng = np.random.default_rng(12345)
        n = 10**6
        hits = dict.fromkeys(RATES_5STATE, 0)
        for _ in range(n):
            (r,) = sample_realization([spec], rng)
            hits[r] += 1
        for r, p in zip(spec.rates, spec.probs):
            assert hits[r] / n == pytest.approx(p, abs=5e-3)

    def test_one_draw_per_channel_in_id_order(self):
        specs = [
            ChannelSpec(id=1, rates=(0.0, 1.0), probs=(0.5, 0.5)),
            ChannelSpec(id=2, rates=(0.0, 2.0), probs=(0.25, 0.75)),
        ]
        u = np.random.default_rng(7).random(2)
        got = sample_realization(specs, np.random.default_rng(7))
        expect = tuple(
            spec.rates[int(u[i] >= spec.probs[0])] for i, spec in enumerate(specs)
        )
        assert got == expect

    def test_reproducible(self):
        specs = [
            ChannelSpec(id=1, rates=RATES_5STATE, probs=(0.2, 0.2, 0.2, 0.2, 0.2)),
            ChannelSpec(id=2, rates=(0.0, 4.0), probs=(0.9, 0.1)),
        ]
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(99)
            runs.append([sample_realization(specs, rng) for _ in range(1000)])
        assert runs[0] == runs[1]
