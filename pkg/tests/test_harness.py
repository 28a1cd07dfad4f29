import pytest

from syncroom import fixtures, harness
from syncroom.harness import (
    Scenario,
    ScenarioError,
    ScheduledEvent,
    fuzz_session,
    load_scenario,
    make_fuzz_scenario,
    run_scenario,
    save_scenario,
)
from syncroom.protocol import MediaEventMessage


def test_scenario_file_round_trip(tmp_path):
    scenario = fixtures.build("video-minute")
    path = save_scenario(scenario, tmp_path / "v.txt")
    loaded = load_scenario(path)
    assert loaded.name == scenario.name
    assert loaded.materials == scenario.materials
    assert loaded.clients == scenario.clients
    assert loaded.script == scenario.script
    assert loaded.expected == scenario.expected


def test_shipped_fixture_files_match_builders():
    for name in fixtures.FIXTURE_NAMES:
        built = fixtures.build(name)
        shipped = load_scenario(fixtures.fixture_path(name))
        assert shipped.script == built.script, name
        assert shipped.materials == built.materials, name
        assert shipped.bootstrap_loads == built.bootstrap_loads, name


@pytest.mark.parametrize("name", fixtures.FIXTURE_NAMES)
def test_fixture_scenarios_consistent(name, tmp_path):
    result = run_scenario(fixtures.build(name), client_count=5, out_dir=tmp_path)
    assert result.ok, result.divergence


def test_zero_event_scenario():
    scenario = Scenario(name="empty",
                        clients=[harness.ScenarioClient("a", "presenter", 0)])
    result = run_scenario(scenario)
    assert result.ok
    assert result.report.event_bytes == 0


def test_unsorted_script_rejected():
    msg = MediaEventMessage("video", "v", "play", 0, 0)
    scenario = Scenario(name="bad",
                        clients=[harness.ScenarioClient("a", "presenter", 0)],
                        script=[ScheduledEvent("a", 500, msg), ScheduledEvent("a", 100, msg)])
    with pytest.raises(ScenarioError):
        run_scenario(scenario)


def test_fuzz_pass():
    result = fuzz_session(1, 200, 4)
    assert result.ok, result.divergence


def test_fuzz_zero_events_vacuous():
    result = fuzz_session(2, 0, 2)
    assert result.ok


def test_fuzz_same_seed_identical_logs(tmp_path):
    a = run_scenario(make_fuzz_scenario(9, 150, 3), out_dir=tmp_path / "a")
    b = run_scenario(make_fuzz_scenario(9, 150, 3), out_dir=tmp_path / "b")
    assert a.log_path.read_bytes() == b.log_path.read_bytes()


def test_late_joiner_converges(tmp_path):
    result = run_scenario(fixtures.build("video-minute"), out_dir=tmp_path)
    assert result.ok
    assert result.client_states["carol"] == result.client_states["alice"]
    assert result.received_counts["carol"] < result.received_counts["bob"]
