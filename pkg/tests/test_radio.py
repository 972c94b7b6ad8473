import math

import pytest

from iabsim import radio
from iabsim.errors import TooClose
from iabsim.radio import RadioParams


P = RadioParams()


class TestPathLoss:
    def test_free_space_at_reference_distance_347ghz(self):
        # 20*log10(4*pi*1*3.47e9/c), independently computed
        assert radio.path_loss_db(3.47e9, 1.0, P) == pytest.approx(43.254372717700846)

    def test_free_space_at_reference_distance_2585mhz(self):
        assert radio.path_loss_db(2.585e9, 1.0, P) == pytest.approx(40.6969941704826)

    def test_exponent_term_at_100m(self):
        # 10 * 2.2 * log10(100) = 44 dB on top of the 1 m loss
        at_1m = radio.path_loss_db(3.47e9, 1.0, P)
        assert radio.path_loss_db(3.47e9, 100.0, P) == pytest.approx(at_1m + 44.0)

    def test_loss_per_distance_doubling(self):
        # n=2.2 -> 10*2.2*log10(2) = 6.6227 dB per doubling
        step = (radio.path_loss_db(2.585e9, 200.0, P)
                - radio.path_loss_db(2.585e9, 100.0, P))
        assert step == pytest.approx(6.622659904607587)

    def test_below_reference_distance_raises(self):
        with pytest.raises(TooClose):
            radio.path_loss_db(3.47e9, 0.5, P)

    def test_custom_reference_distance(self):
        p = P.overridden(reference_distance_m=10.0)
        assert radio.path_loss_db(3.47e9, 10.0, p) == pytest.approx(
            20 * math.log10(4 * math.pi * 10 * 3.47e9 / radio.SPEED_OF_LIGHT))


class TestNoiseAndBudget:
    def test_noise_power_20mhz(self):
        # -174 + 10*log10(20e6) + 7
        assert radio.noise_power_dbm(20e6, P) == pytest.approx(-93.98970004336019)

    def test_noise_power_30mhz(self):
        assert radio.noise_power_dbm(30e6, P) == pytest.approx(-92.22878745280337)

    def test_rx_power_is_linear_in_tx_power(self):
        lo = radio.rx_power_dbm(20.0, 2.585e9, 500.0, P)
        hi = radio.rx_power_dbm(23.0, 2.585e9, 500.0, P)
        assert hi - lo == pytest.approx(3.0)

    def test_link_budget_is_consistent(self):
        b = radio.link_budget(23.0, 2.585e9, 20e6, 880.0, P)
        assert b.rx_power_dbm == pytest.approx(23.0 - b.pathloss_db)
        assert b.snr_db == pytest.approx(b.rx_power_dbm - b.noise_power_dbm)
        assert b.snr_db == pytest.approx(
            radio.snr_db(23.0, 2.585e9, 20e6, 880.0, P))

    def test_backhaul_reference_geometry_snr(self):
        # 23 dBm donor on n41/20 MHz at 880 m: the calibrated backhaul SNR
        assert radio.snr_db(23.0, 2.585e9, 20e6, 880.0, P) == pytest.approx(
            11.514087085573877)


class TestCoverage:
    def test_threshold_is_inclusive(self):
        # find the exact distance where rx == threshold, check both sides
        edge = 10 ** ((23.0 + 100.0 - radio.path_loss_db(2.585e9, 1.0, P)) / 22.0)
        assert edge == pytest.approx(5508.656846876735)
        assert radio.is_covered(23.0, 2.585e9, edge, P)
        assert not radio.is_covered(23.0, 2.585e9, edge * 1.001, P)

    def test_closer_than_reference_distance_is_covered(self):
        assert radio.is_covered(23.0, 2.585e9, 0.1, P)

    def test_reference_ue2_outside_donor_coverage(self):
        assert radio.rx_power_dbm(23.0, 2.585e9, 6000.0, P) == pytest.approx(
            -100.81632167892276)
        assert not radio.is_covered(23.0, 2.585e9, 6000.0, P)


class TestCapacity:
    def test_backhaul_downlink_capacity(self):
        # 0.55 * 0.7 * 20e6 * log2(1 + 10^(11.5141/10))
        s = radio.snr_db(23.0, 2.585e9, 20e6, 880.0, P)
        cap = radio.shannon_capacity_bps(20e6, s, P, downlink=True)
        assert cap == pytest.approx(30209177.122299664)

    def test_backhaul_uplink_capacity_uses_remaining_tdd_share(self):
        s = radio.snr_db(23.0, 2.585e9, 20e6, 880.0, P)
        dl = radio.shannon_capacity_bps(20e6, s, P, downlink=True)
        ul = radio.shannon_capacity_bps(20e6, s, P, downlink=False)
        assert ul == pytest.approx(12946790.195271285)
        assert dl + ul == pytest.approx(0.55 * 20e6 * math.log2(1 + 10 ** (s / 10)))

    def test_access_capacity_exceeds_backhaul(self):
        # 43 dBm aerial DU on n78/30 MHz serving a UE 5120 m away
        s = radio.snr_db(43.0, 3.47e9, 30e6, 5120.0, P)
        cap = radio.shannon_capacity_bps(30e6, s, P, downlink=True)
        assert cap == pytest.approx(41253558.724136814)
        assert cap > 30209177.122299664

    def test_capacity_zero_snr_floor(self):
        # at SNR -inf dB capacity tends to 0; at 0 dB it is eff*frac*B exactly
        cap = radio.shannon_capacity_bps(20e6, 0.0, P, downlink=True)
        assert cap == pytest.approx(0.55 * 0.7 * 20e6)
        assert radio.shannon_capacity_bps(20e6, -200.0, P, True) < 1.0


class TestRadioParams:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            RadioParams(pathloss_exponent=float("nan"))

    def test_rejects_bad_efficiency(self):
        with pytest.raises(ValueError):
            RadioParams(efficiency=0.0)
        with pytest.raises(ValueError):
            RadioParams(efficiency=1.5)

    def test_overridden_leaves_original_untouched(self):
        q = P.overridden(noise_figure_db=9.0)
        assert q.noise_figure_db == 9.0
        assert P.noise_figure_db == 7.0
