"""Scenario TOML parsing, serialization, and bundled presets."""

from __future__ import annotations

import pytest

from burstline.errors import ScenarioError
from burstline.presets import (
    PRESET_DIR_ENV,
    load_preset_model,
    load_preset_scenario,
    preset_names,
)
from burstline.scenario import (
    Contention,
    DeadlineChange,
    NodeDown,
    NodeUp,
    format_scenario,
    load_scenario,
    parse_scenario,
    save_scenario,
)

MINIMAL = """\
[domain]
nx = 8
ny = 4
px = 2
py = 2
width = 1.0
height = 1.0
timesteps = 50

[cluster]
nodes = 2
cores_per_node = 4

[cloud]
nodes = 4
cores_per_node = 2

[models]
cluster_slope = 0.65
cluster_intercept = 6.5
cloud_slope = 0.77
cloud_intercept = 7.1
split_slope = 7.46
split_intercept = 231.18

[overheads]
checkpoint_bytes = 1024
disk_rate_bytes_per_s = 1000.0
network_bandwidth_bits_per_s = 1000000.0
provisioning_seconds = 10.0
"""


class TestParseScenario:
    def test_minimal(self):
        scenario = parse_scenario(MINIMAL + "[deadline]\nseconds = 500.0\n")
        assert scenario.domain.nx == 8
        assert scenario.deadline_seconds == 500.0
        assert scenario.cluster.available_cores == 8
        # the cloud pool exists but nothing is provisioned yet
        assert scenario.cloud.available_cores == 0
        assert sum(n.cores for n in scenario.cloud.nodes) == 8
        # max_cores defaults to the pool total
        assert scenario.cloud_max_cores == 8
        # policy defaults apply when the section is absent
        assert scenario.policy.burst_enabled is True
        assert scenario.policy.reburst is False
        assert scenario.overheads.sync_payload_bytes == 21504

    def test_events_parsed_in_order(self):
        text = MINIMAL + """\
[deadline]
seconds = 500.0

[[event]]
at_step = 5
kind = "contention"
factor = 2.0

[[event]]
at_step = 10
kind = "node_down"
node = 1

[[event]]
at_step = 20
kind = "node_up"
node = 1

[[event]]
at_step = 30
kind = "deadline_change"
seconds = 250.0
"""
        scenario = parse_scenario(text)
        assert scenario.events == (
            Contention(at_step=5, factor=2.0),
            NodeDown(at_step=10, node_id=1),
            NodeUp(at_step=20, node_id=1),
            DeadlineChange(at_step=30, deadline_seconds=250.0),
        )

    def test_unknown_section_rejected(self):
        with pytest.raises(ScenarioError, match="unknown section"):
            parse_scenario(MINIMAL + "[deadline]\nseconds = 1.0\n\n[billing]\nrate = 2\n")

    def test_unknown_key_rejected(self):
        bad = MINIMAL.replace("timesteps = 50", "timesteps = 50\ncolour = 3")
        with pytest.raises(ScenarioError, match="unknown key"):
            parse_scenario(bad + "[deadline]\nseconds = 1.0\n")

    def test_missing_section_rejected(self):
        with pytest.raises(ScenarioError, match=r"missing required section \[deadline\]"):
            parse_scenario(MINIMAL)

    def test_missing_key_rejected(self):
        bad = MINIMAL.replace("nx = 8\n", "")
        with pytest.raises(ScenarioError, match="missing required key 'nx'"):
            parse_scenario(bad + "[deadline]\nseconds = 1.0\n")

    def test_bool_where_int_expected_rejected(self):
        bad = MINIMAL.replace("nx = 8", "nx = true")
        with pytest.raises(ScenarioError, match="wrong type bool"):
            parse_scenario(bad + "[deadline]\nseconds = 1.0\n")

    def test_invalid_toml_rejected(self):
        with pytest.raises(ScenarioError, match="not valid TOML"):
            parse_scenario("[domain\nnx = 8\n")

    def test_event_past_run_end_rejected(self):
        text = MINIMAL + (
            "[deadline]\nseconds = 500.0\n\n"
            '[[event]]\nat_step = 50\nkind = "contention"\nfactor = 2.0\n'
        )
        with pytest.raises(ScenarioError, match="outside run"):
            parse_scenario(text)

    def test_event_unknown_node_rejected(self):
        text = MINIMAL + (
            "[deadline]\nseconds = 500.0\n\n"
            '[[event]]\nat_step = 5\nkind = "node_down"\nnode = 9\n'
        )
        with pytest.raises(ScenarioError, match="unknown cluster node"):
            parse_scenario(text)

    def test_event_weak_contention_rejected(self):
        text = MINIMAL + (
            "[deadline]\nseconds = 500.0\n\n"
            '[[event]]\nat_step = 5\nkind = "contention"\nfactor = 0.5\n'
        )
        with pytest.raises(ScenarioError, match="contention factor"):
            parse_scenario(text)

    def test_event_unknown_kind_rejected(self):
        text = MINIMAL + (
            "[deadline]\nseconds = 500.0\n\n"
            '[[event]]\nat_step = 5\nkind = "meteor"\n'
        )
        with pytest.raises(ScenarioError, match="unknown kind"):
            parse_scenario(text)

    def test_nonpositive_deadline_rejected(self):
        with pytest.raises(ScenarioError, match="deadline"):
            parse_scenario(MINIMAL + "[deadline]\nseconds = 0.0\n")

    def test_with_seed_returns_new_scenario(self):
        scenario = parse_scenario(MINIMAL + "[deadline]\nseconds = 500.0\n")
        reseeded = scenario.with_seed(99)
        assert reseeded.policy.seed == 99
        assert scenario.policy.seed == 0
        assert reseeded.domain == scenario.domain


class TestRoundTrip:
    def test_format_then_parse_is_identity(self):
        text = MINIMAL + """\
[deadline]
seconds = 500.0

[policy]
burst_enabled = true
reburst = true
window = 3
warmup_steps = 2
slack_fraction = 0.05
seed = 7

[[event]]
at_step = 5
kind = "contention"
factor = 2.0

[[event]]
at_step = 10
kind = "node_down"
node = 1
"""
        scenario = parse_scenario(text)
        assert parse_scenario(format_scenario(scenario)) == scenario

    def test_preset_survives_round_trip(self):
        scenario = load_preset_scenario("table2")
        assert parse_scenario(format_scenario(scenario)) == scenario

    def test_save_and_load(self, tmp_path):
        scenario = parse_scenario(MINIMAL + "[deadline]\nseconds = 500.0\n")
        path = tmp_path / "scenario.toml"
        save_scenario(scenario, path)
        assert load_scenario(path) == scenario

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read scenario"):
            load_scenario(tmp_path / "absent.toml")


class TestPresets:
    def test_names(self):
        assert preset_names() == ("paper-cloud", "paper-cluster", "table2")

    def test_table2_shape(self):
        scenario = load_preset_scenario("table2")
        assert (scenario.domain.nx, scenario.domain.ny) == (600, 600)
        assert scenario.domain.timesteps == 3000
        assert scenario.cluster.available_cores == 20
        assert scenario.cloud_max_cores == 64
        assert scenario.deadline_seconds == pytest.approx(42850.438273457505, rel=1e-12)
        assert scenario.policy.window == 10
        assert scenario.events == ()

    def test_model_presets(self):
        cluster = load_preset_model("paper-cluster")
        cloud = load_preset_model("paper-cloud")
        assert (cluster.slope, cluster.intercept) == (0.65, 6.5)
        assert (cloud.slope, cloud.intercept) == (0.77, 7.1)
        assert cluster.label == "cluster"
        assert cloud.label == "cloud"

    def test_unknown_names(self):
        with pytest.raises(KeyError):
            load_preset_scenario("table9")
        with pytest.raises(KeyError):
            load_preset_model("mainframe")

    def test_directory_override(self, tmp_path, monkeypatch):
        scenario = load_preset_scenario("table2")
        modified = format_scenario(
            parse_scenario(format_scenario(scenario)).with_seed(123)
        )
        (tmp_path / "table2.toml").write_text(modified)
        monkeypatch.setenv(PRESET_DIR_ENV, str(tmp_path))
        assert load_preset_scenario("table2").policy.seed == 123

    def test_override_directory_missing_file_is_an_error(self, tmp_path, monkeypatch):
        # no silent fallback to the bundled copy
        monkeypatch.setenv(PRESET_DIR_ENV, str(tmp_path))
        with pytest.raises(ScenarioError, match="not readable"):
            load_preset_scenario("table2")
