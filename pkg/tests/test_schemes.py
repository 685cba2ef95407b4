"""Scheme identifiers, block layouts and per-realization block profiles."""
import math

import numpy as np
import pytest

from app.errors import ParameterError, UnsupportedSchemeError
from app.phy.channel import LINK_OFF, FadingDraw, LinkBudget, draw_fading_batch
from app.relaying.frame import FrameConfig
from app.relaying.patching import patch_coefficients
from app.relaying.schemes import (
    ALAMOUTI,
    COHERENT,
    DIRECT,
    PATCHED,
    PATCHED_ALAMOUTI,
    BlockLayout,
    SchemeId,
    SchemeKind,
    adapted_order,
    block_layout,
    block_profile,
    compose_alamouti_snr,
    compose_monostream,
    minimal_use_params,
)
from app.simulation.engine import accumulated_bits

OUTAGE_SCHEMES = [
    SchemeId(SchemeKind.DIRECT),
    SchemeId(SchemeKind.MONOSTREAM),
    SchemeId(SchemeKind.MONOSTREAM_ADAPTED_MOD),
    SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4),
    SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=6, p=40),
    SchemeId(SchemeKind.PATCHED_MONOSTREAM_MU),
    SchemeId(SchemeKind.DISTRIBUTED_ALAMOUTI),
    SchemeId(SchemeKind.ALAMOUTI_ADAPTED_MOD),
    SchemeId(SchemeKind.PATCHED_ALAMOUTI),
    SchemeId(SchemeKind.PATCHED_ALAMOUTI, m_r=6),
]
ADAPTED = (SchemeKind.MONOSTREAM_ADAPTED_MOD, SchemeKind.ALAMOUTI_ADAPTED_MOD)


def _db(x):
    return 10.0 * math.log10(x)


def _draw(h_sd, h_rd, h_sr=1.0):
    return FadingDraw(h_sd=np.asarray(h_sd, dtype=complex), h_rd=np.asarray(h_rd, dtype=complex), h_sr=h_sr)


class TestSchemeId:
    def test_parse_patched(self):
        scheme = SchemeId.parse("Patched_Monostream", m_r=4, p="full")
        assert scheme.kind == SchemeKind.PATCHED_MONOSTREAM
        assert scheme.p is None
        assert scheme.label == "patched_monostream(m_r=4,p=full)"

    def test_parse_auto_mu(self):
        scheme = SchemeId.parse("patched_monostream", m_r=4, p="auto_mu")
        assert scheme == SchemeId(SchemeKind.PATCHED_MONOSTREAM_MU)

    def test_parse_unknown(self):
        with pytest.raises(ParameterError):
            SchemeId.parse("amplify_and_forward")
        with pytest.raises(ParameterError):
            SchemeId.parse("patched_monostream", m_r=4, p="half")
        with pytest.raises(ParameterError):
            SchemeId.parse("monostream", p="auto_mu")

    def test_validation(self):
        with pytest.raises(ParameterError):
            SchemeId(SchemeKind.PATCHED_MONOSTREAM)
        with pytest.raises(ParameterError):
            SchemeId(SchemeKind.PATCHED_ALAMOUTI, m_r=8)
        with pytest.raises(ParameterError):
            SchemeId(SchemeKind.MONOSTREAM, p=3)
        with pytest.raises(ParameterError):
            SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4, p=-1)

    def test_gaussian_alphabet_only_for_baselines(self):
        assert SchemeId(SchemeKind.MONOSTREAM, alphabet="gaussian").label == "monostream(gaussian)"
        with pytest.raises(UnsupportedSchemeError):
            SchemeId(SchemeKind.PATCHED_ALAMOUTI, alphabet="gaussian")


class TestModulationChoices:
    @pytest.mark.parametrize("remaining, order", [(300, 2), (200, 4), (100, 6), (50, 6)])
    def test_adapted_order(self, remaining, order):
        assert adapted_order(remaining, 600, 2) == order

    def test_adapted_order_negative(self):
        with pytest.raises(ParameterError):
            adapted_order(-1, 600, 2)

    @pytest.mark.parametrize(
        "l1, l2, expected",
        [(700, 200, (4, 100)), (800, 100, (6, 100)), (300, 600, (2, 0)), (10, 100, (6, 5))],
    )
    def test_minimal_use(self, l1, l2, expected):
        assert minimal_use_params(l1, l2, 600, 2) == expected


class TestBlockLayout:
    """Open-loop frame, relay transmitting from sub-frame 6 (decoded after 5)."""

    def test_monostream(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.MONOSTREAM), open_loop, 6, 7)
        assert layout == (BlockLayout(1400, 2, DIRECT), BlockLayout(400, 2, COHERENT))

    def test_distributed_alamouti(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.DISTRIBUTED_ALAMOUTI), open_loop, 6, 7)
        assert layout == (BlockLayout(1400, 2, DIRECT), BlockLayout(400, 2, ALAMOUTI))

    def test_adapted_modulation(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.MONOSTREAM_ADAPTED_MOD), open_loop, 6, 7)
        assert layout == (BlockLayout(1400, 2, DIRECT), BlockLayout(800, 4, COHERENT))

    def test_full_patching_16qam(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4), open_loop, 6, 7)
        assert layout == (BlockLayout(1000, 2, DIRECT), BlockLayout(800, 4, PATCHED))

    def test_full_patching_64qam(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=6), open_loop, 7, 7)
        assert layout == (BlockLayout(1200, 2, DIRECT), BlockLayout(600, 6, PATCHED))

    def test_partial_patching(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4, p=50), open_loop, 6, 7)
        assert layout == (
            BlockLayout(1300, 2, DIRECT),
            BlockLayout(200, 4, PATCHED),
            BlockLayout(300, 2, COHERENT),
        )

    def test_patching_capped_by_phase_one(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4), open_loop, 2, 7)
        assert layout == (BlockLayout(1200, 4, PATCHED), BlockLayout(600, 2, COHERENT))

    def test_minimal_use(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.PATCHED_MONOSTREAM_MU), open_loop, 6, 7)
        assert layout == (
            BlockLayout(1200, 2, DIRECT),
            BlockLayout(400, 4, PATCHED),
            BlockLayout(200, 2, COHERENT),
        )

    def test_patched_alamouti_picks_relay_order(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.PATCHED_ALAMOUTI), open_loop, 6, 7)
        assert layout == (BlockLayout(1000, 2, DIRECT), BlockLayout(800, 4, PATCHED_ALAMOUTI))

    def test_relay_silent(self, open_loop):
        layout = block_layout(SchemeId(SchemeKind.MONOSTREAM), open_loop, None, 7)
        assert layout == (BlockLayout(1800, 2, DIRECT),)

    @pytest.mark.parametrize("scheme", OUTAGE_SCHEMES, ids=lambda s: s.label)
    def test_block_accounting(self, open_loop, scheme):
        for activation in range(2, 8):
            for n in range(activation, 8):
                layout = block_layout(scheme, open_loop, activation, n)
                ph1, ph2 = open_loop.phase_symbols(activation, n)
                if scheme.kind in ADAPTED:
                    expected = ph1 * 2 + ph2 * layout[-1].order
                else:
                    expected = (ph1 + ph2) * 2
                assert sum(block.bits for block in layout) == expected
                assert all(block.bits % block.order == 0 for block in layout)

    def test_space_time_codes_not_simulated(self, open_loop):
        with pytest.raises(UnsupportedSchemeError):
            block_layout(SchemeId(SchemeKind.PATCHED_GOLDEN, m_r=4), open_loop, 6, 7)

    def test_activation_range(self, open_loop):
        scheme = SchemeId(SchemeKind.MONOSTREAM)
        with pytest.raises(ParameterError):
            block_layout(scheme, open_loop, 1, 7)
        with pytest.raises(ParameterError):
            block_layout(scheme, open_loop, 6, 5)

    def test_patching_needs_qpsk_source(self):
        frame = FrameConfig(K=600, T=(300, 100, 100), m_s=4)
        with pytest.raises(UnsupportedSchemeError):
            block_layout(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4), frame, 2, 3)


class TestComposers:
    def test_source_only(self):
        budget = LinkBudget(_db(4.0), 0.0, 0.0, n_rx=2)
        draw = _draw([1.0, 1j], [0.5, 0.5])
        np.testing.assert_allclose(compose_monostream(draw, budget, active_links=("S",)), [2.0, 2j])

    def test_destructive_sum(self):
        budget = LinkBudget(_db(4.0), _db(1.0), 0.0)
        h_sd = np.array([0.3 + 0.1j, -0.2j])
        draw = _draw(h_sd, -math.sqrt(4.0 / 1.0) * h_sd)
        np.testing.assert_allclose(compose_monostream(draw, budget), 0.0, atol=1e-12)

    def test_silence_and_unknown_links(self):
        budget = LinkBudget(0.0, 0.0, 0.0)
        draw = _draw([1.0, 1.0], [1.0, 1.0])
        assert not np.any(compose_monostream(draw, budget, active_links=()))
        with pytest.raises(ParameterError):
            compose_monostream(draw, budget, active_links=("S", "X"))

    def test_extra_relays(self):
        budget = LinkBudget(0.0, LINK_OFF, 0.0, n_rx=1)
        draw = _draw([1.0], [5.0])
        combined = compose_monostream(draw, budget, extra_links=[(np.array([2.0]), 4.0)])
        np.testing.assert_allclose(combined, [5.0])

    def test_coherent_sum_energy(self):
        budget = LinkBudget(0.0, 0.0, 0.0, n_rx=1)
        draw = draw_fading_batch(1, 5, 0, 100_000)
        energy = np.abs(compose_monostream(draw, budget)[:, 0]) ** 2
        assert np.mean(energy) == pytest.approx(2.0, abs=0.05)

    def test_alamouti_snr(self):
        draw = _draw([1.0], [1.0])
        assert compose_alamouti_snr(draw, LinkBudget(_db(2.0), _db(3.0), 0.0, n_rx=1)) == pytest.approx(5.0)
        assert compose_alamouti_snr(_draw([0.0], [0.0]), LinkBudget(0.0, 0.0, 0.0, n_rx=1)) == 0.0

    def test_alamouti_snr_without_relay(self):
        draw = _draw([0.6, 0.8j], [3.0, 1.0])
        budget = LinkBudget(_db(5.0), LINK_OFF, 0.0)
        assert compose_alamouti_snr(draw, budget) == pytest.approx(5.0)


class TestBlockProfile:
    def test_patched_block_channel(self, open_loop):
        budget = LinkBudget(_db(2.0), _db(3.0), 0.0)
        h_sd, h_rd = np.array([0.4 + 0.2j, -0.1j]), np.array([0.7, 0.3 - 0.5j])
        profile = block_profile(SchemeId(SchemeKind.PATCHED_MONOSTREAM, m_r=4), open_loop, 6, 7, _draw(h_sd, h_rd), budget)
        top = patch_coefficients(2, 4).top
        expected = np.sum(np.abs(math.sqrt(2.0) * h_sd + top * math.sqrt(3.0) * h_rd) ** 2)
        assert profile.orders == (2, 4)
        assert profile.symbols == (500, 200)
        assert profile.eff_snr[0] == pytest.approx(2.0 * np.sum(np.abs(h_sd) ** 2))
        assert profile.eff_snr[1] == pytest.approx(expected)

    def test_patched_alamouti_block_channel(self, open_loop):
        budget = LinkBudget(_db(2.0), _db(3.0), 0.0)
        h_sd, h_rd = np.array([0.4 + 0.2j, -0.1j]), np.array([0.7, 0.3 - 0.5j])
        profile = block_profile(SchemeId(SchemeKind.PATCHED_ALAMOUTI, m_r=4), open_loop, 6, 7, _draw(h_sd, h_rd), budget)
        top = patch_coefficients(2, 4).top
        expected = 2.0 * np.sum(np.abs(h_sd) ** 2) + top ** 2 * 3.0 * np.sum(np.abs(h_rd) ** 2)
        assert profile.eff_snr[1] == pytest.approx(expected)

    @pytest.mark.parametrize("scheme", OUTAGE_SCHEMES, ids=lambda s: s.label)
    def test_relay_off_reduces_to_direct(self, open_loop, tables, scheme):
        draw = draw_fading_batch(2, 17, 0, 64)
        budget = LinkBudget(3.0, LINK_OFF, 10.0)
        direct = SchemeId(SchemeKind.DIRECT)
        for activation in range(2, 8):
            for n in range(activation, 8):
                bits = accumulated_bits(block_profile(scheme, open_loop, activation, n, draw, budget), tables)
                reference = accumulated_bits(block_profile(direct, open_loop, None, n, draw, budget), tables)
                np.testing.assert_allclose(bits, reference, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("kind", [SchemeKind.MONOSTREAM, SchemeKind.DISTRIBUTED_ALAMOUTI])
    def test_zero_relay_fading_reduces_to_direct(self, open_loop, tables, kind):
        draw = draw_fading_batch(2, 23, 0, 64)
        draw = FadingDraw(h_sd=draw.h_sd, h_rd=np.zeros_like(draw.h_rd), h_sr=draw.h_sr)
        budget = LinkBudget(0.0, 10.0, 10.0)
        for activation in range(2, 8):
            bits = accumulated_bits(block_profile(SchemeId(kind), open_loop, activation, 7, draw, budget), tables)
            reference = accumulated_bits(block_profile(SchemeId(SchemeKind.DIRECT), open_loop, None, 7, draw, budget), tables)
            np.testing.assert_allclose(bits, reference, rtol=0, atol=1e-9)

    def test_gaussian_flag(self, open_loop):
        draw = _draw([1.0, 0.0], [0.0, 1.0])
        profile = block_profile(SchemeId(SchemeKind.MONOSTREAM, alphabet="gaussian"), open_loop, 6, 7, draw, LinkBudget(0.0, 0.0, 0.0))
        assert profile.gaussian
        assert profile.total_bits == 1800
