import time

import pytest

from iabsim import PathMode, Scenario, Simulator, load_scenario
from iabsim.topology import Carrier, FlowSpec, Medium, Role, instantiate_iab_node

N41 = Carrier(band_label="n41", center_frequency_hz=2.585e9,
              bandwidth_hz=20e6, scs_hz=30e3)
N78 = Carrier(band_label="n78", center_frequency_hz=3.47e9,
              bandwidth_hz=30e6, scs_hz=30e3)

# Delivered-packet hop sequences on the reference scenario, downlink.
UE2_UL_F1_PATH = ("uav1-du", "uav1-mt", "donor-du", "cu", "upf", "cu")
UE2_DL_HOPS_REROUTE = ("upf", "cu", "upf", "cu", "donor-du", "uav1-mt",
                       "uav1-du", "ue2")
UE2_DL_HOPS_BAP = ("upf", "cu", "donor-du", "uav1-mt", "uav1-du", "ue2")
UE1_DL_HOPS = ("upf", "cu", "donor-du", "ue1")


def build_donor_scenario(duration=1.0, seed=1, ue2_x=6000.0) -> Scenario:
    """CU + UPF + donor DU + near UE1 + far UE2, no IAB node yet."""
    scn = Scenario(duration_s=duration, seed=seed)
    scn.add_node(Role.CU, (0.0, -20.0), node_id="cu")
    scn.add_node(Role.UPF, (0.0, -40.0), node_id="upf")
    scn.add_node(Role.DONOR_DU, (0.0, 0.0), tx_power_dbm=23.0, carrier=N41,
                 node_id="donor-du")
    scn.add_node(Role.UE, (50.0, 0.0), tx_power_dbm=23.0, node_id="ue1")
    scn.add_node(Role.UE, (ue2_x, 0.0), tx_power_dbm=23.0, node_id="ue2")
    scn.add_link("cu", "donor-du", Medium.WIRED, wired_capacity_bps=1e9,
                 propagation_delay_s=1e-6, link_id="f1-wire")
    scn.add_link("cu", "upf", Medium.WIRED, wired_capacity_bps=1e9,
                 propagation_delay_s=1e-6, link_id="n6-wire")
    return scn


def build_mini_scenario(seed=1, ue2_rate_bps=6e6, packet_size=1000,
                        uav_x=880.0, ue2_x=6000.0, duration=0.15) -> Scenario:
    """Small end-to-end scenario for property tests: IAB node at t=0.01."""
    scn = build_donor_scenario(duration=duration, seed=seed, ue2_x=ue2_x)
    scn.flows.append(FlowSpec(id="dl-ue2", src="upf", dst="ue2",
                              rate_bps=ue2_rate_bps,
                              packet_size_bytes=packet_size,
                              start_s=0.03, stop_s=duration - 0.02))
    instantiate_iab_node(scn, (uav_x, 0.0), N78, tx_power_dbm=43.0, at_s=0.01,
                         group="uav1")
    return scn


def timed_run(scenario, mode):
    t0 = time.monotonic()
    trace = Simulator(scenario, mode=mode).run()
    return trace, time.monotonic() - t0


@pytest.fixture(scope="session")
def ref_reroute():
    """Reference scenario under UpfReroute: (trace, wall seconds)."""
    return timed_run(load_scenario("paper-reference"), PathMode.UPF_REROUTE)


@pytest.fixture(scope="session")
def ref_bap():
    return timed_run(load_scenario("paper-reference"), PathMode.BAP_BYPASS)


@pytest.fixture(scope="session")
def compare_traces():
    """bap-compare scenario run once per mode: (trace, seconds) per mode."""
    return {mode: timed_run(load_scenario("bap-compare"), mode)
            for mode in (PathMode.UPF_REROUTE, PathMode.BAP_BYPASS)}
