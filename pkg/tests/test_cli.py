import pytest

from syncroom import fixtures
from syncroom.cli import main
from syncroom.harness import make_fuzz_scenario, run_scenario
from syncroom.protocol import MediaEventMessage, serialize


@pytest.fixture(scope="module")
def fuzz_log(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-logs")
    result = run_scenario(make_fuzz_scenario(3, 80, 2), out_dir=out)
    assert result.ok
    return result.log_path


def test_run_fixture_by_name(tmp_path, capsys):
    assert main(["run", "video-minute", "--out-dir", str(tmp_path)]) == 0
    captured = capsys.readouterr()
    assert "consistent" in captured.out
    assert (tmp_path / "video-minute-bandwidth.csv").exists()
    assert (tmp_path / "video-minute-bandwidth.png").exists()


def test_run_scenario_file(tmp_path, capsys):
    path = fixtures.write_fixture_files(tmp_path / "fixtures")[0]
    assert main(["run", str(path)]) == 0
    assert "consistent" in capsys.readouterr().out


def test_fuzz_command(tmp_path, capsys):
    assert main(["fuzz", "--seed", "4", "--events", "60", "--clients", "2",
                 "--out-dir", str(tmp_path)]) == 0
    assert "consistent" in capsys.readouterr().out


def test_replay_command(fuzz_log, capsys):
    assert main(["replay", str(fuzz_log)]) == 0
    full = capsys.readouterr().out
    assert full.strip()
    assert main(["replay", str(fuzz_log), "--seek", "0"]) == 0
    seeked = capsys.readouterr().out
    assert seeked != full  # no media events at t=0 beyond initial states


def test_report_command(fuzz_log, tmp_path, capsys):
    assert main(["report", str(fuzz_log), "--format", "csv",
                 "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("second,bytes_up,bytes_down")
    stem = fuzz_log.stem
    assert (tmp_path / f"{stem}-bandwidth.csv").exists()
    assert (tmp_path / f"{stem}-bandwidth.png").stat().st_size > 1000


def test_report_rejects_corrupt_log(fuzz_log, tmp_path, capsys):
    bad = tmp_path / "bad.log"
    data = fuzz_log.read_bytes()
    bad.write_bytes(data[: len(data) // 2])
    assert main(["report", str(bad)]) == 1
    assert "line" in capsys.readouterr().err


def test_validate_command(tmp_path, capsys):
    good = tmp_path / "good.txt"
    good.write_bytes(serialize(MediaEventMessage("video", "v", "play", 0, 0)) + b"\n")
    assert main(["validate", str(good)]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    bad = tmp_path / "bad.txt"
    bad.write_text('{"kind":"media-event"}\n')
    assert main(["validate", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_fixtures_command(tmp_path, capsys):
    assert main(["fixtures", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.glob("*.txt")}
    assert names == {f"{n}.txt" for n in fixtures.FIXTURE_NAMES}
