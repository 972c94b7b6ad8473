import pytest

from iabsim.errors import (DirectiveOutOfRange, DuplicateCu, DuplicateUpf,
                           IllegalMedium, MissingCarrier, UnknownNode)
from iabsim.topology import (Carrier, FlowSpec, Medium, Role, Scenario,
                             instantiate_iab_node, validate_topology)

from conftest import N41, N78, build_donor_scenario


class TestConstruction:
    def test_duplicate_cu_rejected(self):
        scn = Scenario(duration_s=1.0)
        scn.add_node(Role.CU, (0, 0))
        with pytest.raises(DuplicateCu):
            scn.add_node(Role.CU, (1, 1))

    def test_duplicate_upf_rejected(self):
        scn = Scenario(duration_s=1.0)
        scn.add_node(Role.UPF, (0, 0))
        with pytest.raises(DuplicateUpf):
            scn.add_node(Role.UPF, (1, 1))

    def test_duplicate_node_id_rejected(self):
        scn = Scenario(duration_s=1.0)
        scn.add_node(Role.UE, (0, 0), node_id="x")
        with pytest.raises(ValueError):
            scn.add_node(Role.UE, (1, 1), node_id="x")

    def test_unknown_node_lookup(self):
        with pytest.raises(UnknownNode):
            Scenario(duration_s=1.0).node("nope")

    def test_wired_link_between_ue_and_cu_rejected(self):
        scn = Scenario(duration_s=1.0)
        cu = scn.add_node(Role.CU, (0, 0))
        ue = scn.add_node(Role.UE, (1, 0), tx_power_dbm=23.0)
        with pytest.raises(IllegalMedium):
            scn.add_link(cu, ue, Medium.WIRED, wired_capacity_bps=1e9)

    def test_radio_link_between_cu_and_upf_rejected(self):
        scn = Scenario(duration_s=1.0)
        cu = scn.add_node(Role.CU, (0, 0))
        upf = scn.add_node(Role.UPF, (1, 0))
        with pytest.raises(IllegalMedium):
            scn.add_link(cu, upf, Medium.RADIO, carrier=N41)

    def test_radio_link_requires_carrier(self):
        scn = Scenario(duration_s=1.0)
        du = scn.add_node(Role.DONOR_DU, (0, 0), tx_power_dbm=23.0, carrier=N41)
        ue = scn.add_node(Role.UE, (10, 0), tx_power_dbm=23.0)
        with pytest.raises(MissingCarrier):
            scn.add_link(du, ue, Medium.RADIO)

    def test_radio_propagation_delay_defaults_to_distance_over_c(self):
        scn = Scenario(duration_s=1.0)
        du = scn.add_node(Role.DONOR_DU, (0, 0), tx_power_dbm=23.0, carrier=N41)
        ue = scn.add_node(Role.UE, (299.792458, 0), tx_power_dbm=23.0)
        lid = scn.add_link(du, ue, Medium.RADIO, carrier=N41)
        link = next(l for l in scn.links if l.id == lid)
        assert link.propagation_delay_s == pytest.approx(1e-6)

    def test_carrier_validation(self):
        with pytest.raises(ValueError):
            Carrier("x", 2.585e9, -1.0, 30e3)
        with pytest.raises(ValueError):
            Carrier("x", 2.585e9, 20e6, 12345.0)
        with pytest.raises(ValueError):
            Carrier("x", 5e6, 20e6, 30e3)  # center below half the bandwidth


class TestValidation:
    def test_reference_topology_is_valid(self):
        assert validate_topology(build_donor_scenario()).ok

    def test_missing_upf_reported_as_data(self):
        scn = Scenario(duration_s=1.0)
        cu = scn.add_node(Role.CU, (0, 0))
        du = scn.add_node(Role.DONOR_DU, (1, 0), tx_power_dbm=23.0, carrier=N41)
        scn.add_link(cu, du, Medium.WIRED, wired_capacity_bps=1e9)
        report = validate_topology(scn)
        assert not report.ok
        assert "no UPF" in report.violations

    def test_cu_without_wired_donor_du(self):
        scn = Scenario(duration_s=1.0)
        scn.add_node(Role.CU, (0, 0))
        scn.add_node(Role.UPF, (1, 0))
        report = validate_topology(scn)
        assert any("wired DonorDU" in v for v in report.violations)

    def test_du_without_carrier_flagged(self):
        scn = build_donor_scenario()
        scn.nodes["donor-du"].carrier = None
        assert any("advertises no carrier" in v
                   for v in validate_topology(scn).violations)

    def test_radio_node_without_tx_power_flagged(self):
        scn = build_donor_scenario()
        scn.nodes["ue1"].tx_power_dbm = None
        assert any("no tx_power" in v for v in validate_topology(scn).violations)

    def test_flow_window_must_fit_duration(self):
        scn = build_donor_scenario(duration=1.0)
        scn.flows.append(FlowSpec(id="f", src="upf", dst="ue1", rate_bps=1e6,
                                  start_s=0.5, stop_s=2.0))
        assert any("start < stop <= duration" in v
                   for v in validate_topology(scn).violations)

    def test_validation_is_pure(self):
        scn = build_donor_scenario()
        before = (dict(scn.nodes), list(scn.links))
        validate_topology(scn)
        assert (scn.nodes, scn.links) == before


class TestIabDirective:
    def test_directive_past_duration_rejected(self):
        scn = build_donor_scenario(duration=2.0)
        with pytest.raises(DirectiveOutOfRange):
            instantiate_iab_node(scn, (880.0, 0.0), N78, tx_power_dbm=43.0,
                                 at_s=3.0)

    def test_directive_is_queued_not_applied(self):
        scn = build_donor_scenario(duration=2.0)
        d = instantiate_iab_node(scn, (880.0, 0.0), N78, tx_power_dbm=43.0,
                                 at_s=1.0, group="uav1")
        assert d in scn.schedule
        assert "uav1-du" not in scn.nodes  # nothing exists until it fires

    def test_group_peer_query(self):
        scn = build_donor_scenario()
        mt = scn.add_node(Role.IAB_MT, (880, 0), tx_power_dbm=23.0,
                          owner_group="g", node_id="g-mt")
        du = scn.add_node(Role.IAB_DU, (880, 0), tx_power_dbm=43.0,
                          owner_group="g", carrier=N78, node_id="g-du")
        assert scn.group_peer(du).id == mt
        assert scn.group_peer(mt).id == du
        assert scn.group_peer("ue1") is None
