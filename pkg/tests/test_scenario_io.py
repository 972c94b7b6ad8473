import pytest

from iabsim import load_scenario, validate_topology
from iabsim.errors import ParseError
from iabsim.scenario_io import bundled_scenario_path, loads


MINIMAL = """
seed: 3
duration: 1.0
nodes:
  - {id: cu, role: CU, position: [0.0, 0.0]}
  - {id: upf, role: Upf, position: [0.0, -1.0]}
  - id: du
    role: DonorDU
    position: [1.0, 0.0]
    tx_power: 23.0
    carrier: {band_label: n41, center_frequency: 2.585e9, bandwidth: 20.0e6, scs: 30.0e3}
links:
  - {id: w, a: cu, b: du, medium: Wired, wired_capacity: 1.0e9}
"""


class TestStrictParsing:
    def test_minimal_scenario_loads(self):
        scn = loads(MINIMAL)
        assert scn.seed == 3
        assert set(scn.nodes) == {"cu", "upf", "du"}
        assert scn.nodes["du"].carrier.bandwidth_hz == 20e6

    def test_unknown_top_level_key_named(self):
        with pytest.raises(ParseError, match="'durationn'"):
            loads(MINIMAL.replace("duration:", "durationn:"))

    def test_unknown_node_key_named(self):
        with pytest.raises(ParseError, match="'txpower'"):
            loads(MINIMAL.replace("tx_power:", "txpower:"))

    def test_unknown_carrier_key_named(self):
        with pytest.raises(ParseError, match="'scss'"):
            loads(MINIMAL.replace("scs:", "scss:"))

    def test_missing_duration(self):
        with pytest.raises(ParseError, match="duration"):
            loads("seed: 1\nnodes: []\n")

    def test_non_numeric_field(self):
        with pytest.raises(ParseError, match="not numeric"):
            loads(MINIMAL.replace("seed: 3", "seed: xyz"))

    def test_invalid_yaml(self):
        with pytest.raises(ParseError, match="not valid YAML"):
            loads("nodes: [unterminated")

    def test_unknown_role(self):
        with pytest.raises(ParseError, match="unknown role"):
            loads(MINIMAL.replace("role: Upf", "role: Core"))

    def test_unknown_directive_kind(self):
        text = MINIMAL + ("schedule:\n"
                          "  - {at: 0.5, kind: teleport, du: du}\n")
        with pytest.raises(ParseError, match="teleport"):
            loads(text)

    def test_duplicate_node_id(self):
        text = MINIMAL.replace("id: upf", "id: cu", 1)
        with pytest.raises(ParseError):
            loads(text)


class TestBundledScenarios:
    @pytest.mark.parametrize("name", ["paper-reference", "bap-compare"])
    def test_bundled_loads_and_validates(self, name):
        scn = load_scenario(name)
        assert validate_topology(scn).ok
        assert scn.flows and scn.schedule

    def test_bundled_path_resolution(self):
        assert bundled_scenario_path("paper-reference") is not None
        assert bundled_scenario_path("no-such-scenario") is None

    def test_unknown_reference_is_parse_error(self):
        with pytest.raises(ParseError):
            load_scenario("no-such-scenario")

    def test_reload_is_stable(self):
        a, b = load_scenario("paper-reference"), load_scenario("paper-reference")
        assert list(a.nodes) == list(b.nodes)
        assert [l.id for l in a.links] == [l.id for l in b.links]
        assert a.radio_params == b.radio_params
        assert [f.id for f in a.flows] == [f.id for f in b.flows]

    def test_reference_radio_defaults_applied(self):
        scn = load_scenario("paper-reference")
        assert scn.radio_params.pathloss_exponent == 2.2
        assert scn.radio_params.coverage_rsrp_threshold_dbm == -100.0
        assert scn.radio_params.tdd_dl_fraction == 0.7

    def test_file_path_load(self, tmp_path):
        p = tmp_path / "scn.yaml"
        p.write_text(MINIMAL)
        scn = load_scenario(p)
        assert set(scn.nodes) == {"cu", "upf", "du"}
