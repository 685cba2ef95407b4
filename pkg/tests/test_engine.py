"""DDF/HARQ Monte Carlo engine: activation, MI accumulation and estimators."""
import numpy as np
import pytest
from scipy.stats import gamma

from app.errors import ConfigurationError, ParameterError, UnsupportedSchemeError
from app.phy.channel import LINK_OFF, FadingDraw, LinkBudget, draw_fading
from app.relaying.frame import FrameConfig, rate_after_n
from app.relaying.schemes import SchemeId, SchemeKind, block_profile
from app.simulation.engine import (
    MARGINAL,
    accumulated_bits,
    accumulated_mi,
    conditioned_outage,
    decompose_outage,
    decompose_spectral_efficiency,
    estimate_harq_terms,
    estimate_outage,
    estimate_spectral_efficiency,
    outage_from_batch,
    relay_activation,
    simulate_batch,
    simulate_trial,
    slow_link_adaptation,
    spectral_efficiency_from_batch,
    spectral_efficiency_from_terms,
)
from tests.conftest import SEED

MONOSTREAM = SchemeId(SchemeKind.MONOSTREAM)
DIRECT = SchemeId(SchemeKind.DIRECT)
CLOSED_LOOP_T = (400, 100, 100)
RATES = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def _draw(h_sd, h_rd):
    return FadingDraw(h_sd=np.asarray(h_sd, dtype=complex), h_rd=np.asarray(h_rd, dtype=complex), h_sr=1.0)


class TestRelayActivation:
    @pytest.mark.parametrize("i_sr, activation", [(2.0, 2), (1.5, 3), (1.1, 5), (0.8, 7), (0.7, None), (0.0, None)])
    def test_open_loop(self, open_loop, i_sr, activation):
        assert relay_activation(open_loop, i_sr) == activation

    def test_negative_mi(self, open_loop):
        with pytest.raises(ParameterError):
            relay_activation(open_loop, -0.1)


class TestAccumulatedMi:
    def test_saturation(self, open_loop, tables):
        budget = LinkBudget(80.0, 80.0, 0.0)
        for scheme in (DIRECT, MONOSTREAM, SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=6)):
            for n in range(6, 8):
                profile = block_profile(scheme, open_loop, 6, n, _draw([1.0, 0.5], [0.3, 1.0]), budget)
                assert accumulated_mi(profile, open_loop, n, tables) >= rate_after_n(open_loop, n) - 1e-12

    def test_silence(self, open_loop, tables):
        budget = LinkBudget(LINK_OFF, LINK_OFF, LINK_OFF)
        profile = block_profile(MONOSTREAM, open_loop, 3, 7, _draw([1.0, 1.0], [1.0, 1.0]), budget)
        assert accumulated_mi(profile, open_loop, 7, tables) == 0.0

    def test_direct_is_single_block_mi(self, open_loop, tables):
        budget = LinkBudget(0.0, 0.0, 0.0)
        h_sd = [0.5 + 0.5j, -0.3j]
        profile = block_profile(DIRECT, open_loop, None, 4, _draw(h_sd, [0.0, 0.0]), budget)
        expected = tables[2].lookup(np.sum(np.abs(h_sd) ** 2))
        assert accumulated_mi(profile, open_loop, 4, tables) == pytest.approx(expected)

    def test_missing_table(self, open_loop, tables):
        profile = block_profile(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4), open_loop, 6, 7, _draw([1, 1], [1, 1]), LinkBudget(0, 0, 0))
        with pytest.raises(ConfigurationError):
            accumulated_mi(profile, open_loop, 7, {2: tables[2]})


class TestSimulation:
    def test_strong_direct_link_decodes_first_subframe(self, open_loop, tables):
        batch = simulate_batch(MONOSTREAM, open_loop, LinkBudget(80.0, 0.0, 10.0), 2000, SEED, tables)
        assert np.all(batch.first_decode == 1)
        assert np.all(batch.rate_credited == 2.0)

    def test_all_links_off(self, open_loop, tables):
        budget = LinkBudget(LINK_OFF, LINK_OFF, LINK_OFF)
        batch = simulate_batch(MONOSTREAM, open_loop, budget, 1000, SEED, tables)
        assert np.all(batch.first_decode == 0)
        assert np.all(batch.activation == 0)
        assert outage_from_batch(batch).value == 1.0
        assert spectral_efficiency_from_batch(batch).value == 0.0

    def test_single_trial_matches_batch(self, open_loop, tables):
        budget = LinkBudget(0.0, 3.0, 5.0)
        batch = simulate_batch(MONOSTREAM, open_loop, budget, 300, SEED, tables, start=4000)
        for i in (0, 95, 96, 250):
            assert simulate_trial(MONOSTREAM, open_loop, budget, 4000 + i, SEED, tables) == batch.outcome(i)

    def test_first_decode_is_first_success(self, open_loop, tables):
        budget = LinkBudget(-2.0, 2.0, 6.0)
        batch = simulate_batch(MONOSTREAM, open_loop, budget, 200, SEED, tables)
        for i in range(0, 200, 17):
            outcome = batch.outcome(i)
            draw = draw_fading(2, SEED, i)
            decoded = []
            for n in range(1, 8):
                active = outcome.activation if outcome.activation is not None and outcome.activation <= n else None
                profile = block_profile(MONOSTREAM, open_loop, active, n, draw, budget)
                decoded.append(accumulated_bits(profile, tables) >= open_loop.K - 1e-9)
            expected = decoded.index(True) + 1 if any(decoded) else None
            assert outcome.dest_first_decode == expected

    def test_thread_count_does_not_change_results(self, open_loop, tables):
        budget = LinkBudget(0.0, 5.0, 8.0)
        one = simulate_batch(MONOSTREAM, open_loop, budget, 10_000, SEED, tables, threads=1)
        three = simulate_batch(MONOSTREAM, open_loop, budget, 10_000, SEED, tables, threads=3)
        np.testing.assert_array_equal(one.first_decode, three.first_decode)
        np.testing.assert_array_equal(one.activation, three.activation)

    def test_space_time_codes_not_simulated(self, open_loop, tables):
        with pytest.raises(UnsupportedSchemeError):
            simulate_batch(SchemeId(SchemeKind.PATCHED_GOLDEN), open_loop, LinkBudget(0, 0, 40), 100, SEED, tables)

    def test_argument_checks(self, open_loop, tables):
        budget = LinkBudget(0.0, 0.0, 0.0)
        with pytest.raises(ParameterError):
            simulate_batch(MONOSTREAM, open_loop, budget, 0, SEED, tables)
        with pytest.raises(ParameterError):
            simulate_batch(MONOSTREAM, open_loop, budget, 10, SEED, tables, threads=0)
        with pytest.raises(ParameterError):
            simulate_batch(MONOSTREAM, open_loop, budget, 10, SEED, tables, activation=1)
        with pytest.raises(ParameterError):
            estimate_outage(MONOSTREAM, open_loop, budget, 999, SEED, tables)


class TestOutage:
    def test_saturated_direct_link(self, open_loop, tables):
        estimate = estimate_outage(MONOSTREAM, open_loop, LinkBudget(40.0, 0.0, 10.0), 20_000, SEED, tables)
        assert estimate.value < 1e-3
        assert estimate.n_trials == 20_000 and estimate.seed == SEED

    @pytest.mark.parametrize(
        "scheme",
        [DIRECT, MONOSTREAM, SchemeId(SchemeKind.PATCHED_MONOSTREAM_MU), SchemeId(SchemeKind.PATCHED_ALAMOUTI)],
        ids=lambda s: s.label,
    )
    def test_no_relay_matches_chi_square_tail(self, open_loop, tables, scheme):
        table = tables[2]
        threshold_db = np.interp(open_loop.K / open_loop.total_symbols, table.mi_bits, table.snr_grid_db)
        snr_sd_db = 0.0
        oracle = gamma.cdf(10.0 ** ((threshold_db - snr_sd_db) / 10.0), a=2)
        estimate = estimate_outage(scheme, open_loop, LinkBudget(snr_sd_db, 10.0, LINK_OFF), 20_000, SEED, tables)
        assert abs(estimate.value - oracle) < 3 * max(estimate.stderr, 1e-3)

    def test_monotone_in_direct_snr(self, open_loop, tables):
        values = [
            estimate_outage(DIRECT, open_loop, LinkBudget(snr, LINK_OFF, LINK_OFF), 5000, SEED, tables).value
            for snr in (-2.0, 0.0, 2.0, 4.0)
        ]
        assert values == sorted(values, reverse=True)

    @pytest.mark.parametrize("axis", ["snr_rd_db", "snr_sr_db"])
    def test_paired_trials_monotone_on_relay_axes(self, open_loop, tables, axis):
        scheme = SchemeId(SchemeKind.DISTRIBUTED_ALAMOUTI)
        base = LinkBudget(-3.0, 0.0, 0.0)
        batches = [
            simulate_batch(scheme, open_loop, base.with_snr(axis, snr), 5000, SEED, tables)
            for snr in (-6.0, -2.0, 2.0, 6.0, 10.0)
        ]
        lost = [batch.first_decode == 0 for batch in batches]
        for weaker, stronger in zip(lost, lost[1:]):
            assert not np.any(stronger & ~weaker)
        values = [outage_from_batch(batch).value for batch in batches]
        assert values == sorted(values, reverse=True)
        assert values[-1] < values[0]

    def test_stderr_shrinks_with_trials(self, open_loop, tables):
        budget = LinkBudget(0.0, LINK_OFF, LINK_OFF)
        small = estimate_outage(DIRECT, open_loop, budget, 5000, SEED, tables)
        large = estimate_outage(DIRECT, open_loop, budget, 20_000, SEED, tables)
        assert large.stderr == pytest.approx(small.stderr / 2, rel=0.2)

    def test_decomposition_regroups_the_same_trials(self, open_loop, tables):
        batch = simulate_batch(MONOSTREAM, open_loop, LinkBudget(-3.0, 3.0, 3.0), 8000, SEED, tables)
        decomposition = decompose_outage(batch, open_loop)
        assert decomposition.total == pytest.approx(outage_from_batch(batch).value, abs=1e-12)
        assert sum(decomposition.p_first_relay.values()) + decomposition.p_relay_out == pytest.approx(1.0)


class TestConditionedOutage:
    def test_silent_relay_is_point_to_point(self, open_loop, tables):
        budget = LinkBudget(0.0, 10.0, 10.0)
        conditioned = conditioned_outage(MONOSTREAM, open_loop, budget, None, 5000, SEED, tables)
        direct = estimate_outage(DIRECT, open_loop, budget, 5000, SEED, tables)
        assert conditioned.value == direct.value

    def test_early_relay_helps(self, open_loop, tables):
        budget = LinkBudget(0.0, 0.0, 0.0)
        early = conditioned_outage(MONOSTREAM, open_loop, budget, 2, 10_000, SEED, tables)
        silent = conditioned_outage(MONOSTREAM, open_loop, budget, None, 10_000, SEED, tables)
        assert early.value <= silent.value

    def test_longer_second_phase_dominates(self, open_loop, tables):
        budget = LinkBudget(0.0, 5.0, 0.0)
        m6 = conditioned_outage(MONOSTREAM, open_loop, budget, 6, 10_000, SEED, tables)
        m7 = conditioned_outage(MONOSTREAM, open_loop, budget, 7, 10_000, SEED, tables)
        assert m6.value <= m7.value + 3 * m7.stderr

    def test_gaussian_alphabet_dominates(self, open_loop, tables):
        budget = LinkBudget(-2.0, 2.0, 0.0)
        qam = conditioned_outage(MONOSTREAM, open_loop, budget, 3, 5000, SEED, tables)
        gaussian = conditioned_outage(SchemeId(SchemeKind.MONOSTREAM, alphabet="gaussian"), open_loop, budget, 3, 5000, SEED, tables)
        assert gaussian.value <= qam.value

    def test_activation_range(self, open_loop, tables):
        with pytest.raises(ParameterError):
            conditioned_outage(MONOSTREAM, open_loop, LinkBudget(0, 0, 0), 8, 1000, SEED, tables)


class TestSpectralEfficiency:
    def test_bounded_by_first_rate(self, closed_loop, tables):
        for snr in (-5.0, 0.0, 5.0):
            estimate = estimate_spectral_efficiency(MONOSTREAM, closed_loop, LinkBudget(snr, snr, 10.0), 4000, SEED, tables)
            assert estimate.value <= rate_after_n(closed_loop, 1)

    def test_lower_bound_from_outage(self, closed_loop, tables):
        budget = LinkBudget(0.0, 3.0, 10.0)
        batch = simulate_batch(MONOSTREAM, closed_loop, budget, 4000, SEED, tables)
        se = spectral_efficiency_from_batch(batch).value
        assert se >= rate_after_n(closed_loop, 3) * (1 - outage_from_batch(batch).value) - 1e-12

    def test_saturated_direct_link(self, closed_loop, tables):
        estimate = estimate_spectral_efficiency(MONOSTREAM, closed_loop, LinkBudget(40.0, 0.0, 10.0), 4000, SEED, tables)
        assert estimate.value == pytest.approx(rate_after_n(closed_loop, 1), rel=0.01)

    def test_all_links_off(self, closed_loop, tables):
        budget = LinkBudget(LINK_OFF, LINK_OFF, LINK_OFF)
        assert estimate_spectral_efficiency(MONOSTREAM, closed_loop, budget, 1000, SEED, tables).value == 0.0

    def test_trial_mean_equals_regrouped_terms(self, closed_loop, tables):
        batch = simulate_batch(MONOSTREAM, closed_loop, LinkBudget(0.0, 3.0, 10.0), 6000, SEED, tables)
        terms = decompose_spectral_efficiency(batch, closed_loop)
        assert spectral_efficiency_from_terms(terms, closed_loop) == pytest.approx(
            spectral_efficiency_from_batch(batch).value, abs=1e-12
        )

    def test_independently_estimated_terms(self, closed_loop, tables):
        budget = LinkBudget(0.0, 3.0, 10.0)
        estimate = estimate_spectral_efficiency(MONOSTREAM, closed_loop, budget, 6000, SEED, tables)
        terms = estimate_harq_terms(MONOSTREAM, closed_loop, budget, 6000, SEED, tables)
        assert sum(terms.p_first_relay.values()) + terms.p_relay_out == pytest.approx(1.0)
        assert abs(spectral_efficiency_from_terms(terms, closed_loop) - estimate.value) < 3 * estimate.stderr


class TestSlowLinkAdaptation:
    def test_single_rate(self, tables):
        rate, estimate = slow_link_adaptation(MONOSTREAM, [0.7], CLOSED_LOOP_T, LinkBudget(0.0, 0.0, 10.0), 1000, SEED, tables)
        assert rate == 0.7
        assert estimate.n_trials == 1000

    def test_strong_link_picks_highest_rate(self, tables):
        rate, estimate = slow_link_adaptation(MONOSTREAM, RATES, CLOSED_LOOP_T, LinkBudget(40.0, 0.0, 10.0), 2000, SEED, tables)
        assert rate == 1.0
        assert estimate.value == pytest.approx(2.0, rel=0.01)

    def test_choice_is_argmax(self, tables):
        budget = LinkBudget(3.0, 3.0, 10.0)
        rate, best = slow_link_adaptation(MONOSTREAM, RATES, CLOSED_LOOP_T, budget, 2000, SEED, tables)
        for other in RATES:
            frame = FrameConfig.from_first_subframe_rate(other, CLOSED_LOOP_T)
            estimate = estimate_spectral_efficiency(MONOSTREAM, frame, budget, 2000, SEED, tables)
            assert estimate.value <= best.value + 3 * best.stderr

    def test_empty_rate_set(self, tables):
        with pytest.raises(ParameterError):
            slow_link_adaptation(MONOSTREAM, [], CLOSED_LOOP_T, LinkBudget(0, 0, 0), 1000, SEED, tables)

    def test_marginal_is_default(self, closed_loop, tables):
        budget = LinkBudget(0.0, 3.0, 10.0)
        default = estimate_spectral_efficiency(MONOSTREAM, closed_loop, budget, 1000, SEED, tables)
        explicit = estimate_spectral_efficiency(MONOSTREAM, closed_loop, budget, 1000, SEED, tables, activation=MARGINAL)
        assert default == explicit
